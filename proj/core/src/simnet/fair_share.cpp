#include "plexus/simnet/fair_share.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "plexus/core/errors.hpp"

namespace plexus::simnet {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct PortShare {
  double share;
  std::size_t port;
  std::uint64_t version;

  bool operator>(const PortShare& o) const {
    return share != o.share ? share > o.share : port > o.port;
  }
};

double completion_tolerance(double now) { return 1e-12 * std::max(1.0, std::abs(now)); }

}  // namespace

std::vector<double> max_min_rates(std::span<const FlowPorts> flows, std::span<const double> capacities) {
  const std::size_t nflows = flows.size();
  const std::size_t nports = capacities.size();

  std::vector<std::size_t> unfrozen(nports, 0);
  for (const auto& f : flows) {
    if (f.up_port >= nports || f.down_port >= nports) throw InvalidArgument("flow references unknown port");
    ++unfrozen[f.up_port];
    ++unfrozen[f.down_port];
  }
  // Port -> flows adjacency in CSR form.
  std::vector<std::size_t> offset(nports + 1, 0);
  for (std::size_t p = 0; p < nports; ++p) offset[p + 1] = offset[p] + unfrozen[p];
  std::vector<std::size_t> members(offset.back());
  {
    std::vector<std::size_t> fill(offset.begin(), offset.end() - 1);
    for (std::size_t f = 0; f < nflows; ++f) {
      members[fill[flows[f].up_port]++] = f;
      members[fill[flows[f].down_port]++] = f;
    }
  }

  std::vector<double> remaining(capacities.begin(), capacities.end());
  std::vector<std::uint64_t> version(nports, 0);
  std::vector<double> rate(nflows, kInf);
  std::vector<bool> frozen(nflows, false);

  std::priority_queue<PortShare, std::vector<PortShare>, std::greater<>> heap;
  for (std::size_t p = 0; p < nports; ++p) {
    if (unfrozen[p] > 0 && std::isfinite(remaining[p]))
      heap.push({remaining[p] / static_cast<double>(unfrozen[p]), p, 0});
  }

  while (!heap.empty()) {
    const PortShare top = heap.top();
    heap.pop();
    const std::size_t p = top.port;
    if (top.version != version[p] || unfrozen[p] == 0) continue;
    const double share = top.share;
    for (std::size_t i = offset[p]; i < offset[p + 1]; ++i) {
      const std::size_t f = members[i];
      if (frozen[f]) continue;
      frozen[f] = true;
      rate[f] = share;
      const std::size_t other = flows[f].up_port == p ? flows[f].down_port : flows[f].up_port;
      --unfrozen[other];
      if (std::isfinite(remaining[other])) {
        remaining[other] = std::max(0.0, remaining[other] - share);
        ++version[other];
        if (unfrozen[other] > 0)
          heap.push({remaining[other] / static_cast<double>(unfrozen[other]), other, version[other]});
      }
    }
    unfrozen[p] = 0;
    remaining[p] = 0.0;
  }
  return rate;
}

FairShareNetwork::FairShareNetwork(std::vector<double> uplink_bps, std::vector<double> downlink_bps) {
  if (uplink_bps.size() != downlink_bps.size()) throw InvalidArgument("uplink/downlink size mismatch");
  for (std::size_t i = 0; i < uplink_bps.size(); ++i) add_node(uplink_bps[i], downlink_bps[i]);
}

std::size_t FairShareNetwork::add_node(double uplink_bps, double downlink_bps) {
  if (!(uplink_bps > 0.0) || !(downlink_bps > 0.0)) throw InvalidArgument("port capacity must be positive");
  capacities_.push_back(uplink_bps);
  capacities_.push_back(downlink_bps);
  return node_count() - 1;
}

TransferId FairShareNetwork::start(std::size_t src, std::size_t dst, double bytes, double now) {
  if (src >= node_count() || dst >= node_count()) throw InvalidArgument("transfer between unknown nodes");
  if (!(bytes > 0.0)) throw InvalidArgument("transfer size must be positive");
  advance(now);
  const TransferId id = next_id_++;
  active_.emplace(id, TransferRecord{id, src, dst, bytes, 0.0, 0.0, now, kInf, now, 0.0});
  recompute();
  return id;
}

void FairShareNetwork::advance(double now) {
  for (auto& [id, t] : active_) {
    const double dt = now - t.last_update;
    if (dt > 0.0) {
      const double moved = std::isinf(t.current_rate) ? t.total_bytes - t.bytes_done : t.current_rate * dt;
      t.bytes_done = std::min(t.total_bytes, t.bytes_done + moved);
      t.integrated_bytes += moved;
      t.last_update = now;
    }
  }
}

void FairShareNetwork::recompute() {
  std::vector<FlowPorts> flows;
  flows.reserve(active_.size());
  for (const auto& [id, t] : active_) flows.push_back({2 * t.src, 2 * t.dst + 1});
  const auto rates = max_min_rates(flows, capacities_);
  std::size_t i = 0;
  for (auto& [id, t] : active_) {
    t.current_rate = rates[i++];
    const double left = t.total_bytes - t.bytes_done;
    if (std::isinf(t.current_rate)) {
      t.est_completion = t.last_update;
    } else if (t.current_rate > 0.0) {
      t.est_completion = t.last_update + left / t.current_rate;
    } else {
      t.est_completion = kInf;
    }
  }
}

std::vector<TransferRecord> FairShareNetwork::complete_due(double now) {
  advance(now);
  std::vector<TransferRecord> done;
  const double tol = completion_tolerance(now);
  for (auto it = active_.begin(); it != active_.end();) {
    auto& t = it->second;
    if (t.est_completion <= now + tol || t.bytes_done >= t.total_bytes) {
      t.bytes_done = t.total_bytes;
      t.est_completion = now;
      done.push_back(t);
      it = active_.erase(it);
    } else {
      ++it;
    }
  }
  if (!done.empty()) recompute();
  return done;
}

std::optional<double> FairShareNetwork::next_completion() const {
  std::optional<double> best;
  for (const auto& [id, t] : active_) {
    if (!best || t.est_completion < *best) best = t.est_completion;
  }
  return best;
}

double FairShareNetwork::max_capacity_violation() const {
  std::vector<double> load(capacities_.size(), 0.0);
  for (const auto& [id, t] : active_) {
    load[2 * t.src] += t.current_rate;
    load[2 * t.dst + 1] += t.current_rate;
  }
  double worst = 0.0;
  for (std::size_t p = 0; p < load.size(); ++p) {
    if (std::isfinite(capacities_[p])) worst = std::max(worst, load[p] / capacities_[p] - 1.0);
  }
  return worst;
}

}  // namespace plexus::simnet
