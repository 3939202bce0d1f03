#include "plexus/core/types.hpp"

#include <cmath>

#include "plexus/core/errors.hpp"

namespace plexus {

NodeId::NodeId(std::string id) : id_(std::move(id)) {
  if (id_.empty()) throw InvalidArgument("node id must not be empty");
  if (id_.find('|') != std::string::npos)
    throw InvalidArgument("node id must not contain '|': " + id_);
  for (unsigned char c : id_) {
    if (c < 0x21 || c > 0x7e) throw InvalidArgument("node id must be printable without spaces: " + id_);
  }
}

RoundNumber::RoundNumber(std::uint64_t k) : k_(k) {
  if (k == 0) throw InvalidArgument("round numbers are 1-based");
}

void DeviceProfile::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(uplink_bps) || !positive(downlink_bps) || !positive(sec_per_local_step))
    throw InvalidArgument("device profile of " + node.str() +
                          " needs finite positive rates and step time");
}

Membership::Membership(std::vector<DeviceProfile> profiles) : profiles_(std::move(profiles)) {
  nodes_.reserve(profiles_.size());
  for (std::size_t i = 0; i < profiles_.size(); ++i) {
    profiles_[i].validate();
    const auto& id = profiles_[i].node;
    if (!index_.emplace(id, i).second) throw InvalidArgument("duplicate node id: " + id.str());
    nodes_.push_back(id);
  }
}

std::optional<std::size_t> Membership::index_of(const NodeId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Membership::require_index(const NodeId& id) const {
  auto idx = index_of(id);
  if (!idx) throw InvalidArgument("unknown node: " + id.str());
  return *idx;
}

const DeviceProfile& Membership::profile(const NodeId& id) const {
  return profiles_[require_index(id)];
}

}  // namespace plexus
