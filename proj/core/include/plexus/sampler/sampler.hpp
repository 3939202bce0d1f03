#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

#include "plexus/core/types.hpp"

namespace plexus::sampler {

using Digest = std::array<std::uint8_t, 32>;

/// SHA-256 of an arbitrary byte string.
Digest sha256(std::string_view bytes);

/// Position of a node in the round-k candidate order: SHA-256 of
/// `id|k` compared byte-wise, node id breaks (astronomically unlikely) ties.
struct RankKey {
  Digest digest;
  NodeId node;

  std::strong_ordering operator<=>(const RankKey& other) const;
  bool operator==(const RankKey& other) const = default;
};

RankKey node_rank_key(const NodeId& node, RoundNumber k);

struct Sample {
  RoundNumber round;
  std::vector<NodeId> participants;
  std::optional<NodeId> aggregator;

  bool contains(const NodeId& id) const;
  bool operator==(const Sample&) const = default;
};

/// The first min(s, n) nodes of the hash-sorted candidate list for round k.
/// Depends only on the membership node set, k and s.
Sample sample(RoundNumber k, std::size_t s, const Membership& membership);

/// Participant of sample(k, s) with the highest uplink; ties go to the
/// smallest node id.
NodeId aggregator(RoundNumber k, std::size_t s, const Membership& membership);

NodeId elect_aggregator(const std::vector<NodeId>& participants, const Membership& membership);

/// sample() with the aggregator filled in.
Sample sample_with_aggregator(RoundNumber k, std::size_t s, const Membership& membership);

}  // namespace plexus::sampler
