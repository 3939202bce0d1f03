#pragma once

#include <vector>

#include "plexus/core/hooks.hpp"
#include "plexus/core/metrics.hpp"
#include "plexus/protocol/plexus_node.hpp"
#include "plexus/simnet/simulator.hpp"

namespace plexus::protocol {

/// Runs every node's state machine on the simulator, carrying out effects:
/// remote sends become fluid transfers, self-sends are delivered at zero
/// cost, compute jobs occupy the node for the profile's training time.
/// After the final round is aggregated no new round is dispatched, but
/// in-flight work drains so stragglers are still accounted for.
class PlexusSimulation {
 public:
  PlexusSimulation(const Membership& membership, ProtocolConfig config, std::uint32_t local_steps,
                   simnet::Simulator& sim, MetricsLedger& ledger, LocalTrainer trainer, ModelFactory init);

  PlexusSimulation(const PlexusSimulation&) = delete;
  PlexusSimulation& operator=(const PlexusSimulation&) = delete;

  void on_round(RoundObserver observer) { observer_ = std::move(observer); }

  /// Bootstraps all nodes at the current virtual time.
  void start();

  bool complete() const noexcept { return complete_; }
  std::uint64_t rounds_completed() const noexcept { return rounds_completed_; }
  double completion_time() const noexcept { return completion_time_; }
  const PlexusNode& node(std::size_t i) const { return nodes_.at(i); }
  std::uint64_t trained_models() const noexcept { return trained_models_; }

 private:
  void apply(std::size_t self, std::vector<Effect> effects);
  void deliver(std::size_t dst, Message msg);

  const Membership& membership_;
  ProtocolConfig config_;
  simnet::Simulator& sim_;
  MetricsLedger& ledger_;
  LocalTrainer trainer_;
  ModelFactory init_;
  RoundObserver observer_;
  std::vector<PlexusNode> nodes_;
  bool complete_ = false;
  double completion_time_ = 0.0;
  double last_round_end_ = 0.0;
  std::uint64_t rounds_completed_ = 0;
  std::uint64_t trained_models_ = 0;
};

}  // namespace plexus::protocol
