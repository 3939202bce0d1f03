#pragma once

#include <cstdint>
#include <vector>

#include "plexus/core/hooks.hpp"
#include "plexus/core/metrics.hpp"
#include "plexus/core/types.hpp"
#include "plexus/simnet/simulator.hpp"

namespace plexus::baselines {

std::size_t ceil_log2(std::size_t n);

/// Round-k partner of node i on the one-peer exponential graph:
/// (i + 2^((k-1) mod ceil(log2 n))) mod n.
std::size_t one_peer_exp_neighbor(std::size_t i, RoundNumber k, std::size_t n);

class Topology {
 public:
  enum class Kind { Regular, OnePeerExponential };

  /// Seeded random `degree`-regular graph. Disconnected draws are redrawn
  /// with the next seed; `seed_used()` reports the accepted one.
  static Topology regular(std::size_t n, std::size_t degree, std::uint64_t seed);
  static Topology one_peer_exponential(std::size_t n);

  Kind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return n_; }
  std::size_t degree() const noexcept { return degree_; }
  std::uint64_t seed_used() const noexcept { return seed_; }

  /// Nodes that i sends to / receives from in round k.
  std::vector<std::size_t> out_neighbors(std::size_t i, RoundNumber k) const;
  std::vector<std::size_t> in_neighbors(std::size_t i, RoundNumber k) const;

  std::size_t transfers_per_round() const;
  const std::vector<std::vector<std::size_t>>& adjacency() const noexcept { return adjacency_; }

 private:
  Topology(Kind kind, std::size_t n) : kind_(kind), n_(n) {}

  Kind kind_;
  std::size_t n_;
  std::size_t degree_ = 1;
  std::uint64_t seed_ = 0;
  std::vector<std::vector<std::size_t>> adjacency_;
};

bool is_connected(const std::vector<std::vector<std::size_t>>& adjacency);

/// Doubly stochastic mixing of the round's trained models: uniform
/// 1/(degree+1) over the closed neighborhood (regular) or a half-half
/// average with the received model (one-peer exponential).
std::vector<ModelParameters> dpsgd_mix(const std::vector<ModelParameters>& trained, const Topology& topology,
                                       RoundNumber k);

struct RoundSpan {
  std::uint64_t round;
  double start;
  double end;
};

/// Synchronous D-PSGD: every node trains, sends its model to its round
/// neighbors, and nobody mixes until every compute job and transfer of the
/// round has finished.
class DpsgdSimulation {
 public:
  DpsgdSimulation(const Membership& membership, Topology topology, std::uint32_t local_steps,
                  std::uint64_t max_rounds, simnet::Simulator& sim, MetricsLedger& ledger, LocalTrainer trainer,
                  ModelParameters initial);

  DpsgdSimulation(const DpsgdSimulation&) = delete;
  DpsgdSimulation& operator=(const DpsgdSimulation&) = delete;

  void start();

  const std::vector<ModelParameters>& models() const noexcept { return models_; }
  std::uint64_t rounds_completed() const noexcept { return rounds_completed_; }
  bool complete() const noexcept { return complete_; }
  const std::vector<RoundSpan>& round_spans() const noexcept { return spans_; }

 private:
  void begin_round(RoundNumber k);
  void settle(RoundNumber k);

  const Membership& membership_;
  Topology topology_;
  std::uint64_t max_rounds_;
  simnet::Simulator& sim_;
  MetricsLedger& ledger_;
  LocalTrainer trainer_;
  std::vector<double> training_seconds_;
  std::vector<ModelParameters> models_;
  std::vector<ModelParameters> trained_;
  std::size_t outstanding_ = 0;
  double round_start_ = 0.0;
  std::uint64_t rounds_completed_ = 0;
  bool complete_ = false;
  std::vector<RoundSpan> spans_;
};

}  // namespace plexus::baselines
