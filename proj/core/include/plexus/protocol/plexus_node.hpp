#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "plexus/core/message.hpp"
#include "plexus/core/model.hpp"
#include "plexus/core/types.hpp"

namespace plexus::protocol {

struct ProtocolConfig {
  std::size_t sample_size = 13;
  double success_fraction = 0.8;
  std::uint64_t max_rounds = 100;
  bool shared_init = true;
  std::uint64_t init_seed = 0;

  /// floor(s * sf): models the aggregator waits for.
  std::size_t threshold() const;
  void validate() const;
};

struct TrainJob {
  RoundNumber round;
  ModelParameters model;
};

// Effect vocabulary between the node state machine and whatever runtime
// carries it (the simulator here). `bytes` is zero for self-addressed sends.
struct SendEffect {
  NodeId dst;
  Message msg;
  std::uint64_t bytes;
};
struct ComputeEffect {
  double duration;
  TrainJob job;
};
struct MetricEffect {
  std::string name;
  double value;
};
struct TerminalEffect {};

using Effect = std::variant<SendEffect, ComputeEffect, MetricEffect, TerminalEffect>;

namespace metric {
inline constexpr const char* kLateModel = "late_models";            // value: round
inline constexpr const char* kDuplicateTrain = "duplicate_train";   // value: round
inline constexpr const char* kDuplicateAggregate = "duplicate_aggregate";
inline constexpr const char* kRoundAggregated = "round_aggregated";  // value: round
}  // namespace metric

using ModelFactory = std::function<ModelParameters(std::uint64_t seed)>;

/// One Plexus node. Handlers are run-to-completion transitions that update
/// the node and return the effects to carry out.
class PlexusNode {
 public:
  PlexusNode(NodeId me, ProtocolConfig config, const Membership& membership, double training_seconds);

  const NodeId& id() const noexcept { return me_; }

  /// Round-1 participants hand themselves the initial model.
  std::vector<Effect> bootstrap(const ModelFactory& init) const;

  std::vector<Effect> on_train(RoundNumber k, ModelParameters model);
  /// Local training for round k finished with `trained`.
  std::vector<Effect> on_trained(RoundNumber k, ModelParameters trained);
  std::vector<Effect> on_aggregate(RoundNumber k, ModelParameters model, const NodeId& from);

  std::vector<Effect> handle(Message msg);

  /// Model produced by the most recent aggregation on this node.
  const std::optional<ModelParameters>& last_aggregate() const noexcept { return last_aggregate_; }
  std::size_t last_aggregate_size() const noexcept { return last_aggregate_size_; }

  std::uint64_t duplicate_trains() const noexcept { return duplicate_trains_; }
  std::uint64_t duplicate_aggregates() const noexcept { return duplicate_aggregates_; }
  std::uint64_t late_models() const noexcept { return late_models_; }
  std::size_t pending(RoundNumber k) const;
  bool aggregated(RoundNumber k) const { return aggregated_.count(k) != 0; }

 private:
  NodeId me_;
  ProtocolConfig config_;
  const Membership* membership_;
  double training_seconds_;
  std::map<RoundNumber, std::vector<std::pair<NodeId, ModelParameters>>> pending_;
  std::set<RoundNumber> aggregated_;
  std::set<RoundNumber> trained_;
  std::optional<ModelParameters> last_aggregate_;
  std::size_t last_aggregate_size_ = 0;
  std::uint64_t duplicate_trains_ = 0;
  std::uint64_t duplicate_aggregates_ = 0;
  std::uint64_t late_models_ = 0;
};

}  // namespace plexus::protocol
