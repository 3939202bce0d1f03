#include "plexus/core/metrics.hpp"

#include "plexus/core/errors.hpp"

namespace plexus {

MetricsLedger::MetricsLedger(std::vector<double> seconds_per_training)
    : seconds_per_training_(std::move(seconds_per_training)),
      trainings_(seconds_per_training_.size(), 0) {}

void MetricsLedger::add_training(std::size_t node_index) {
  if (node_index >= trainings_.size()) throw InvalidArgument("training on unknown node index");
  ++trainings_[node_index];
  ++trainings_total_;
}

void MetricsLedger::add_late_model(std::uint64_t round) {
  ++late_models_;
  for (auto it = rounds_.rbegin(); it != rounds_.rend(); ++it) {
    if (it->round == round) {
      ++it->late_models;
      break;
    }
  }
}

double MetricsLedger::train_seconds_total() const {
  double total = 0.0;
  for (std::size_t i = 0; i < trainings_.size(); ++i) {
    total += static_cast<double>(trainings_[i]) * seconds_per_training_[i];
  }
  return total;
}

void MetricsLedger::record_round(double time_s, const RoundRecord& round) {
  rounds_.push_back(round);
  ledger_.push_back({time_s, bytes_total_, train_seconds_total(), true});
}

void MetricsLedger::record_accuracy(double time_s, std::uint64_t round, double accuracy,
                                    double accuracy_std) {
  const double train_s = train_seconds_total();
  accuracy_.push_back({time_s, round, accuracy, accuracy_std, bytes_total_, train_s});
  ledger_.push_back({time_s, bytes_total_, train_s, false});
}

}  // namespace plexus
