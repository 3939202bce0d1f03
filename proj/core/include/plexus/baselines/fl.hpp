#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "plexus/core/hooks.hpp"
#include "plexus/core/metrics.hpp"
#include "plexus/core/types.hpp"
#include "plexus/simnet/simulator.hpp"

namespace plexus::baselines {

struct FlConfig {
  std::size_t sample_size = 13;
  double success_fraction = 0.8;
  std::uint64_t max_rounds = 100;
  std::uint64_t seed = 0;
  std::size_t server_city = 0;

  std::size_t threshold() const;
  void validate() const;
};

/// Membership indices of the round-k participants.
using ParticipantPicker = std::function<std::vector<std::size_t>(RoundNumber k)>;

/// Uniform sample of min(s, n) distinct nodes from a seeded RNG, independent
/// of the hash-based sampler.
ParticipantPicker uniform_picker(std::size_t n, std::size_t s, std::uint64_t seed);

/// Same participants as the decentralized sampler; used for cross-checks.
ParticipantPicker hash_picker(const Membership& membership, std::size_t s);

/// The FL server's round bookkeeping: it averages the first floor(s*sf)
/// uploads of a round and drops the rest.
class FlServer {
 public:
  FlServer(FlConfig config, ParticipantPicker picker);

  std::vector<std::size_t> start_round(RoundNumber k);

  /// Returns the aggregate when this upload completes the round.
  std::optional<ModelParameters> on_upload(RoundNumber k, std::size_t from, ModelParameters model);

  std::uint64_t late_models() const noexcept { return late_; }
  std::size_t last_aggregate_size() const noexcept { return last_size_; }

 private:
  FlConfig config_;
  ParticipantPicker picker_;
  std::map<std::uint64_t, std::vector<std::pair<std::size_t, ModelParameters>>> pending_;
  std::uint64_t aggregated_through_ = 0;
  std::uint64_t late_ = 0;
  std::size_t last_size_ = 0;
};

/// Centralized FL on the simulator. The server is an extra simulator node
/// with unbounded uplink and downlink, so transfers are limited only by
/// the client side.
class FlSimulation {
 public:
  FlSimulation(const Membership& membership, FlConfig config, std::uint32_t local_steps, simnet::Simulator& sim,
               MetricsLedger& ledger, LocalTrainer trainer, ModelParameters initial,
               ParticipantPicker picker = nullptr);

  FlSimulation(const FlSimulation&) = delete;
  FlSimulation& operator=(const FlSimulation&) = delete;

  void on_round(RoundObserver observer) { observer_ = std::move(observer); }
  void start();

  std::size_t server_index() const noexcept { return server_; }
  const ModelParameters& global_model() const noexcept { return global_; }
  std::uint64_t rounds_completed() const noexcept { return rounds_completed_; }
  bool complete() const noexcept { return complete_; }

 private:
  void begin_round(RoundNumber k);
  void on_upload(RoundNumber k, std::size_t from, ModelParameters model);

  const Membership& membership_;
  FlConfig config_;
  simnet::Simulator& sim_;
  MetricsLedger& ledger_;
  LocalTrainer trainer_;
  FlServer server_state_;
  std::size_t server_;
  std::vector<double> training_seconds_;
  ModelParameters global_;
  RoundObserver observer_;
  double round_start_ = 0.0;
  std::uint64_t rounds_completed_ = 0;
  bool complete_ = false;
};

}  // namespace plexus::baselines
