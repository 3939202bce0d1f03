#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace plexus {

/// Unique node identifier. Stands in for a public key; never empty and never
/// contains '|', which separates the id from the round number when hashing.
class NodeId {
 public:
  explicit NodeId(std::string id);

  const std::string& str() const noexcept { return id_; }

  auto operator<=>(const NodeId&) const = default;
  bool operator==(const NodeId&) const = default;

 private:
  std::string id_;
};

/// 1-based training round.
class RoundNumber {
 public:
  explicit RoundNumber(std::uint64_t k);

  std::uint64_t value() const noexcept { return k_; }
  RoundNumber next() const { return RoundNumber(k_ + 1); }

  auto operator<=>(const RoundNumber&) const = default;
  bool operator==(const RoundNumber&) const = default;

 private:
  std::uint64_t k_;
};

struct DeviceProfile {
  NodeId node;
  double uplink_bps;    // bytes per second
  double downlink_bps;  // bytes per second
  double sec_per_local_step;
  std::size_t city_index = 0;

  void validate() const;
};

/// Static global registry of nodes and their device profiles. Node order is
/// the membership order (used for round-robin city assignment and indexing).
class Membership {
 public:
  explicit Membership(std::vector<DeviceProfile> profiles);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }
  const std::vector<NodeId>& nodes() const noexcept { return nodes_; }
  const std::vector<DeviceProfile>& profiles() const noexcept { return profiles_; }

  bool contains(const NodeId& id) const { return index_.count(id) != 0; }
  std::optional<std::size_t> index_of(const NodeId& id) const;
  std::size_t require_index(const NodeId& id) const;
  const DeviceProfile& profile(const NodeId& id) const;
  const DeviceProfile& profile_at(std::size_t i) const { return profiles_.at(i); }

 private:
  std::vector<NodeId> nodes_;
  std::vector<DeviceProfile> profiles_;
  std::map<NodeId, std::size_t> index_;
};

}  // namespace plexus

template <>
struct std::hash<plexus::NodeId> {
  std::size_t operator()(const plexus::NodeId& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
