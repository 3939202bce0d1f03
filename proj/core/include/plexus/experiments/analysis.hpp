#pragma once

#include <optional>
#include <span>
#include <vector>

#include "plexus/core/metrics.hpp"

namespace plexus::experiments {

/// First evaluation whose accuracy reaches `target`; nullopt when never
/// reached. Throws ConfigError for targets outside (0, 1].
std::optional<AccuracyPoint> first_crossing(std::span<const AccuracyPoint> timeline, double target);

std::optional<double> tta(std::span<const AccuracyPoint> timeline, double target);
std::optional<double> cta(std::span<const AccuracyPoint> timeline, double target);
std::optional<double> rta(std::span<const AccuracyPoint> timeline, double target);

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges
  std::vector<std::size_t> counts;
};

struct RoundStats {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // population
  double p50 = 0.0;
  double p95 = 0.0;
  double max = 0.0;
  Histogram histogram;
};

/// Linear-interpolated percentile, q in [0, 100].
double percentile(std::vector<double> values, double q);

/// Summary of round durations with a `bins`-bin histogram spanning [0, max].
RoundStats round_duration_stats(std::span<const RoundRecord> rounds, std::size_t bins = 20);

struct MeanOverSeeds {
  std::optional<double> mean;  // over reached values only
  std::size_t reached = 0;
  std::size_t total = 0;
};

MeanOverSeeds mean_over_seeds(std::span<const std::optional<double>> values);

}  // namespace plexus::experiments
