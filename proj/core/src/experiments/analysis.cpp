#include "plexus/experiments/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "plexus/core/errors.hpp"

namespace plexus::experiments {

std::optional<AccuracyPoint> first_crossing(std::span<const AccuracyPoint> timeline, double target) {
  if (!(target > 0.0 && target <= 1.0)) throw ConfigError("target accuracy must be in (0, 1]");
  for (const auto& p : timeline) {
    if (p.accuracy >= target) return p;
  }
  return std::nullopt;
}

std::optional<double> tta(std::span<const AccuracyPoint> timeline, double target) {
  if (auto p = first_crossing(timeline, target)) return p->time_s;
  return std::nullopt;
}

std::optional<double> cta(std::span<const AccuracyPoint> timeline, double target) {
  if (auto p = first_crossing(timeline, target)) return static_cast<double>(p->bytes_total);
  return std::nullopt;
}

std::optional<double> rta(std::span<const AccuracyPoint> timeline, double target) {
  if (auto p = first_crossing(timeline, target)) return p->train_seconds_total;
  return std::nullopt;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

RoundStats round_duration_stats(std::span<const RoundRecord> rounds, std::size_t bins) {
  if (rounds.empty()) throw InvalidArgument("no completed rounds");
  if (bins == 0) throw InvalidArgument("histogram needs at least one bin");
  std::vector<double> d;
  d.reserve(rounds.size());
  for (const auto& r : rounds) d.push_back(r.duration_s);

  RoundStats st;
  st.count = d.size();
  double sum = 0.0;
  for (double x : d) sum += x;
  st.mean = sum / static_cast<double>(d.size());
  double var = 0.0;
  for (double x : d) var += (x - st.mean) * (x - st.mean);
  st.std = std::sqrt(var / static_cast<double>(d.size()));
  st.p50 = percentile(d, 50.0);
  st.p95 = percentile(d, 95.0);
  st.max = *std::max_element(d.begin(), d.end());

  const double top = st.max > 0.0 ? st.max : 1.0;
  st.histogram.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) st.histogram.edges[b] = top * static_cast<double>(b) / static_cast<double>(bins);
  st.histogram.counts.assign(bins, 0);
  for (double x : d) {
    auto b = static_cast<std::size_t>(x / top * static_cast<double>(bins));
    ++st.histogram.counts[std::min(b, bins - 1)];
  }
  return st;
}

MeanOverSeeds mean_over_seeds(std::span<const std::optional<double>> values) {
  MeanOverSeeds m;
  m.total = values.size();
  double sum = 0.0;
  for (const auto& v : values) {
    if (!v) continue;
    sum += *v;
    ++m.reached;
  }
  if (m.reached > 0) m.mean = sum / static_cast<double>(m.reached);
  return m;
}

}  // namespace plexus::experiments
