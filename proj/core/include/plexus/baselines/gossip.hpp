#pragma once

#include <cstdint>
#include <vector>

#include "plexus/core/hooks.hpp"
#include "plexus/core/metrics.hpp"
#include "plexus/core/rng.hpp"
#include "plexus/core/types.hpp"
#include "plexus/simnet/simulator.hpp"

namespace plexus::baselines {

/// Age-weighted merge: (a_l*x_l + a_r*x_r) / (a_l + a_r), age = max(a_l, a_r).
/// A remote model of age 0 leaves the local model untouched; two age-0
/// models are averaged plainly.
ModelParameters gl_merge(const ModelParameters& local, const ModelParameters& remote);

struct GlConfig {
  double round_timeout = 60.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Peer choice and timer phase of one gossiping node.
class GossipNode {
 public:
  GossipNode(std::size_t self, std::size_t n, std::uint64_t seed);

  /// Uniform over the other n-1 nodes.
  std::size_t pick_peer();
  /// First timer delay, uniform in (0, timeout].
  double initial_offset(double timeout);

 private:
  std::size_t self_;
  std::size_t n_;
  Rng rng_;
};

/// Asynchronous Gossip Learning. Every node pushes its current model to a
/// random peer once per timeout; a received model is merged into the local
/// one and trained when the receiver's compute job for it runs. Runs until
/// the simulator's time limit.
class GlSimulation {
 public:
  GlSimulation(const Membership& membership, GlConfig config, std::uint32_t local_steps, simnet::Simulator& sim,
               MetricsLedger& ledger, LocalTrainer trainer, ModelParameters initial);

  GlSimulation(const GlSimulation&) = delete;
  GlSimulation& operator=(const GlSimulation&) = delete;

  void start();

  const std::vector<ModelParameters>& models() const noexcept { return models_; }
  std::uint64_t sends() const noexcept { return sends_; }
  std::uint64_t merges() const noexcept { return merges_; }
  const std::vector<std::uint64_t>& sends_per_node() const noexcept { return sends_per_node_; }

 private:
  void tick(std::size_t i);
  void receive(std::size_t i, ModelParameters remote);

  const Membership& membership_;
  GlConfig config_;
  simnet::Simulator& sim_;
  MetricsLedger& ledger_;
  LocalTrainer trainer_;
  std::vector<GossipNode> gossip_;
  std::vector<double> training_seconds_;
  std::vector<ModelParameters> models_;
  std::vector<std::uint64_t> invocations_;
  std::vector<std::uint64_t> sends_per_node_;
  std::uint64_t sends_ = 0;
  std::uint64_t merges_ = 0;
};

}  // namespace plexus::baselines
