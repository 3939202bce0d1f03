#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace plexus::simnet {

/// A flow occupies its sender's uplink port and its receiver's downlink port.
struct FlowPorts {
  std::size_t up_port;
  std::size_t down_port;
};

/// Max-min fair rates by progressive filling: the port with the smallest
/// equal share saturates first, its flows freeze at that share, and the
/// remaining capacity is redistributed. Infinite capacities never bind; a
/// flow whose ports are both unbounded gets an infinite rate.
std::vector<double> max_min_rates(std::span<const FlowPorts> flows, std::span<const double> capacities);

using TransferId = std::uint64_t;

struct TransferRecord {
  TransferId id;
  std::size_t src;
  std::size_t dst;
  double total_bytes;
  double bytes_done;
  double current_rate;
  double start_time;
  double est_completion;
  double last_update;
  double integrated_bytes;  // sum of rate * dt, never snapped
};

/// Fluid model of all in-flight transfers. Node i owns uplink port 2i and
/// downlink port 2i+1. Rates are recomputed whenever a transfer starts or
/// finishes, after advancing every transfer to that instant.
class FairShareNetwork {
 public:
  FairShareNetwork(std::vector<double> uplink_bps, std::vector<double> downlink_bps);

  std::size_t add_node(double uplink_bps, double downlink_bps);
  std::size_t node_count() const noexcept { return capacities_.size() / 2; }

  TransferId start(std::size_t src, std::size_t dst, double bytes, double now);

  /// Advances to `now` and retires every transfer whose completion is due.
  std::vector<TransferRecord> complete_due(double now);

  std::optional<double> next_completion() const;

  const std::map<TransferId, TransferRecord>& active() const noexcept { return active_; }
  std::span<const double> capacities() const noexcept { return capacities_; }

  /// Largest relative overshoot of any port's summed rate over its capacity.
  double max_capacity_violation() const;

 private:
  void advance(double now);
  void recompute();

  std::vector<double> capacities_;
  std::map<TransferId, TransferRecord> active_;
  TransferId next_id_ = 1;
};

}  // namespace plexus::simnet
