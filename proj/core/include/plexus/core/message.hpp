#pragma once

#include <variant>

#include "plexus/core/model.hpp"
#include "plexus/core/types.hpp"

namespace plexus {

struct TrainMsg {
  RoundNumber round;
  ModelParameters model;
};

struct AggregateMsg {
  RoundNumber round;
  ModelParameters model;
  NodeId from;
};

struct GossipModelMsg {
  ModelParameters model;
  NodeId from;
};

using Message = std::variant<TrainMsg, AggregateMsg, GossipModelMsg>;

/// Bytes a message occupies on the wire.
inline std::uint64_t message_bytes(const Message& msg) {
  return std::visit([](const auto& m) { return model_size_bytes(m.model); }, msg);
}

}  // namespace plexus
