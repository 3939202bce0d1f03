#pragma once

#include <cstdint>
#include <vector>

namespace plexus {

struct AccuracyPoint {
  double time_s;
  std::uint64_t round;
  double accuracy;
  double accuracy_std;
  std::uint64_t bytes_total;
  double train_seconds_total;
};

struct LedgerPoint {
  double time_s;
  std::uint64_t bytes_total;
  double train_seconds_total;
  bool round_event;  // false for rows written at evaluations
};

struct RoundRecord {
  std::uint64_t round;
  double duration_s;
  std::size_t participants;
  std::size_t models_aggregated;
  std::size_t late_models;
};

/// Accumulates the cost and progress of one run. Training time is tracked as
/// per-node invocation counts so the total is independent of completion order.
class MetricsLedger {
 public:
  /// `seconds_per_training[i]` is the cost of one local training on node i.
  explicit MetricsLedger(std::vector<double> seconds_per_training);

  void add_bytes(std::uint64_t bytes) { bytes_total_ += bytes; }
  void add_training(std::size_t node_index);
  /// A trained model for `round` arrived after aggregation and was dropped.
  void add_late_model(std::uint64_t round);
  void add_aggregated_models(std::size_t count) { aggregated_models_ += count; }

  void record_round(double time_s, const RoundRecord& round);
  void record_accuracy(double time_s, std::uint64_t round, double accuracy, double accuracy_std);

  std::uint64_t bytes_total() const noexcept { return bytes_total_; }
  double train_seconds_total() const;
  std::uint64_t trainings_total() const noexcept { return trainings_total_; }
  std::uint64_t late_models() const noexcept { return late_models_; }
  std::uint64_t aggregated_models() const noexcept { return aggregated_models_; }
  const std::vector<std::uint64_t>& trainings_per_node() const noexcept { return trainings_; }

  const std::vector<AccuracyPoint>& accuracy_timeline() const noexcept { return accuracy_; }
  const std::vector<LedgerPoint>& ledger_timeline() const noexcept { return ledger_; }
  const std::vector<RoundRecord>& rounds() const noexcept { return rounds_; }

 private:
  std::vector<double> seconds_per_training_;
  std::vector<std::uint64_t> trainings_;
  std::uint64_t bytes_total_ = 0;
  std::uint64_t trainings_total_ = 0;
  std::uint64_t late_models_ = 0;
  std::uint64_t aggregated_models_ = 0;
  std::vector<AccuracyPoint> accuracy_;
  std::vector<LedgerPoint> ledger_;
  std::vector<RoundRecord> rounds_;
};

}  // namespace plexus
