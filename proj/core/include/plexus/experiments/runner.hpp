#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "plexus/core/metrics.hpp"
#include "plexus/core/types.hpp"
#include "plexus/experiments/config.hpp"
#include "plexus/simnet/traces.hpp"

namespace plexus::experiments {

struct RepetitionResult {
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  std::vector<AccuracyPoint> accuracy;
  std::vector<LedgerPoint> ledger;
  std::vector<RoundRecord> rounds;
  std::uint64_t bytes_total = 0;
  double train_seconds_total = 0.0;
  std::uint64_t trainings = 0;
  std::uint64_t late_models = 0;
  std::uint64_t aggregated_models = 0;
  std::uint64_t rounds_completed = 0;
  double final_time = 0.0;
  double final_accuracy = 0.0;
  std::uint64_t timeline_digest = 0;
  std::uint64_t events = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RepetitionResult> repetitions;
};

simnet::LatencyMatrix experiment_latency(const ExperimentConfig& config);

/// Generated or loaded profiles (first n), with cities assigned round-robin.
Membership experiment_membership(const ExperimentConfig& config, const simnet::LatencyMatrix& latency);

/// Seed used by repetition r.
std::uint64_t repetition_seed(const ExperimentConfig& config, std::size_t r);

/// One seeded run to the stop condition: max_rounds, the virtual-time
/// budget, or stop_accuracy, whichever comes first.
RepetitionResult run_repetition(const ExperimentConfig& config, std::size_t r);

ExperimentResult run_experiment(const ExperimentConfig& config);

/// accuracy.csv, ledger.csv and rounds.csv for one repetition.
void write_repetition(const std::filesystem::path& dir, const RepetitionResult& rep);

/// Per-repetition metrics in rep<r>/ plus summary.json and config.txt.
void write_experiment(const std::filesystem::path& dir, const ExperimentResult& result);

/// summary.json contents; "not reached" entries are null and excluded from
/// the cross-seed means.
std::string summary_json(const ExperimentResult& result);

/// $PLEXUS_OUT, or "runs" when unset.
std::filesystem::path output_root();

}  // namespace plexus::experiments
