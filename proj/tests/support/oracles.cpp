#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

std::vector<double> bottleneck_rates(const std::vector<double>& up, const std::vector<double>& down,
                                     const std::vector<std::pair<std::size_t, std::size_t>>& flows) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> rate(flows.size(), inf);
  std::vector<bool> fixed(flows.size(), false);
  std::vector<double> up_left = up, down_left = down;
  std::size_t remaining = flows.size();
  while (remaining > 0) {
    // Smallest fair share over all ports that still carry unfixed flows.
    double best = inf;
    for (std::size_t node = 0; node < up.size(); ++node) {
      std::size_t cu = 0, cd = 0;
      for (std::size_t f = 0; f < flows.size(); ++f) {
        if (fixed[f]) continue;
        if (flows[f].first == node) ++cu;
        if (flows[f].second == node) ++cd;
      }
      if (cu > 0 && std::isfinite(up_left[node])) best = std::min(best, up_left[node] / static_cast<double>(cu));
      if (cd > 0 && std::isfinite(down_left[node])) best = std::min(best, down_left[node] / static_cast<double>(cd));
    }
    if (!std::isfinite(best)) break;  // only unbounded ports left
    // Every port whose share equals the minimum saturates now.
    std::vector<bool> sat_up(up.size(), false), sat_down(down.size(), false);
    for (std::size_t node = 0; node < up.size(); ++node) {
      std::size_t cu = 0, cd = 0;
      for (std::size_t f = 0; f < flows.size(); ++f) {
        if (fixed[f]) continue;
        if (flows[f].first == node) ++cu;
        if (flows[f].second == node) ++cd;
      }
      auto near = [best](double share) { return std::abs(share - best) <= 1e-12 * std::max(1.0, best); };
      if (cu > 0 && std::isfinite(up_left[node]) && near(up_left[node] / static_cast<double>(cu))) sat_up[node] = true;
      if (cd > 0 && std::isfinite(down_left[node]) && near(down_left[node] / static_cast<double>(cd)))
        sat_down[node] = true;
    }
    for (std::size_t f = 0; f < flows.size(); ++f) {
      if (fixed[f]) continue;
      if (sat_up[flows[f].first] || sat_down[flows[f].second]) {
        fixed[f] = true;
        rate[f] = best;
        up_left[flows[f].first] -= best;
        down_left[flows[f].second] -= best;
        --remaining;
      }
    }
  }
  return rate;
}

std::vector<double> fluid_completion_times(const std::vector<double>& up, const std::vector<double>& down,
                                           const std::vector<FluidTransfer>& transfers) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> left(transfers.size());
  std::vector<double> done(transfers.size(), -1.0);
  std::vector<bool> started(transfers.size(), false);
  for (std::size_t i = 0; i < transfers.size(); ++i) left[i] = transfers[i].bytes;

  double now = 0.0;
  std::size_t finished = 0;
  while (finished < transfers.size()) {
    for (std::size_t i = 0; i < transfers.size(); ++i) {
      if (!started[i] && transfers[i].start <= now) started[i] = true;
    }
    std::vector<std::size_t> active;
    std::vector<std::pair<std::size_t, std::size_t>> flows;
    for (std::size_t i = 0; i < transfers.size(); ++i) {
      if (started[i] && done[i] < 0.0) {
        active.push_back(i);
        flows.emplace_back(transfers[i].src, transfers[i].dst);
      }
    }
    const auto rates = bottleneck_rates(up, down, flows);

    double next = inf;
    for (std::size_t i = 0; i < transfers.size(); ++i) {
      if (!started[i]) next = std::min(next, transfers[i].start);
    }
    for (std::size_t a = 0; a < active.size(); ++a) next = std::min(next, now + left[active[a]] / rates[a]);
    const double dt = next - now;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const std::size_t i = active[a];
      left[i] -= rates[a] * dt;
      if (left[i] <= 1e-9 * std::max(1.0, transfers[i].bytes)) {
        done[i] = next;
        ++finished;
      }
    }
    now = next;
  }
  return done;
}

std::vector<double> naive_mean(const std::vector<std::vector<double>>& vs) {
  std::vector<double> out(vs.at(0).size(), 0.0);
  for (const auto& v : vs)
    for (std::size_t i = 0; i < v.size(); ++i) out[i] += v[i];
  for (auto& x : out) x /= static_cast<double>(vs.size());
  return out;
}

std::string hex(const std::uint8_t* data, std::size_t n) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    s.push_back(digits[data[i] >> 4]);
    s.push_back(digits[data[i] & 15]);
  }
  return s;
}

double entropy(const std::vector<std::size_t>& counts) {
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace oracle
