#include "plexus/baselines/dpsgd.hpp"

#include <algorithm>
#include <set>

#include "plexus/core/errors.hpp"
#include "plexus/core/rng.hpp"
#include "plexus/simnet/traces.hpp"

namespace plexus::baselines {
namespace {

constexpr int kMaxRegularDraws = 1000;

// Circulant start, then degree-preserving double-edge swaps.
std::vector<std::vector<std::size_t>> draw_regular(std::size_t n, std::size_t degree, std::uint64_t seed) {
  std::set<std::pair<std::size_t, std::size_t>> edges;
  auto key = [](std::size_t a, std::size_t b) { return std::pair(std::min(a, b), std::max(a, b)); };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t h = 1; h <= degree / 2; ++h) edges.insert(key(i, (i + h) % n));
    if (degree % 2 == 1) edges.insert(key(i, (i + n / 2) % n));
  }
  std::vector<std::pair<std::size_t, std::size_t>> list(edges.begin(), edges.end());

  Rng rng(derive_seed(seed, {hash_tag("regular")}));
  std::uniform_int_distribution<std::size_t> pick(0, list.size() - 1);
  std::uniform_int_distribution<int> coin(0, 1);
  const std::size_t swaps = 20 * list.size();
  for (std::size_t s = 0; s < swaps; ++s) {
    const std::size_t e1 = pick(rng), e2 = pick(rng);
    if (e1 == e2) continue;
    auto [a, b] = list[e1];
    auto [c, d] = list[e2];
    if (coin(rng)) std::swap(c, d);
    if (a == d || c == b) continue;
    const auto n1 = key(a, d), n2 = key(c, b);
    if (edges.count(n1) || edges.count(n2)) continue;
    edges.erase(list[e1]);
    edges.erase(list[e2]);
    edges.insert(n1);
    edges.insert(n2);
    list[e1] = n1;
    list[e2] = n2;
  }
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (auto& v : adj) std::sort(v.begin(), v.end());
  return adj;
}

}  // namespace

std::size_t ceil_log2(std::size_t n) {
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  return bits;
}

std::size_t one_peer_exp_neighbor(std::size_t i, RoundNumber k, std::size_t n) {
  if (n < 2) throw InvalidArgument("one-peer exponential graph needs n >= 2");
  const std::size_t hop = std::size_t{1} << ((k.value() - 1) % ceil_log2(n));
  return (i + hop) % n;
}

bool is_connected(const std::vector<std::vector<std::size_t>>& adjacency) {
  if (adjacency.empty()) return true;
  std::vector<bool> seen(adjacency.size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (auto w : adjacency[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  return reached == adjacency.size();
}

Topology Topology::regular(std::size_t n, std::size_t degree, std::uint64_t seed) {
  if (degree == 0 || degree >= n) throw InvalidArgument("regular topology needs 0 < degree < n");
  if ((degree * n) % 2 != 0) throw InvalidArgument("degree * n must be even");
  Topology t(Kind::Regular, n);
  t.degree_ = degree;
  for (int attempt = 0; attempt < kMaxRegularDraws; ++attempt) {
    auto adj = draw_regular(n, degree, seed + static_cast<std::uint64_t>(attempt));
    if (is_connected(adj)) {
      t.adjacency_ = std::move(adj);
      t.seed_ = seed + static_cast<std::uint64_t>(attempt);
      return t;
    }
  }
  throw InvalidArgument("could not draw a connected regular topology");
}

Topology Topology::one_peer_exponential(std::size_t n) {
  if (n < 2) throw InvalidArgument("one-peer exponential graph needs n >= 2");
  return Topology(Kind::OnePeerExponential, n);
}

std::vector<std::size_t> Topology::out_neighbors(std::size_t i, RoundNumber k) const {
  if (kind_ == Kind::Regular) return adjacency_.at(i);
  return {one_peer_exp_neighbor(i, k, n_)};
}

std::vector<std::size_t> Topology::in_neighbors(std::size_t i, RoundNumber k) const {
  if (kind_ == Kind::Regular) return adjacency_.at(i);
  const std::size_t hop = std::size_t{1} << ((k.value() - 1) % ceil_log2(n_));
  return {(i + n_ - hop % n_) % n_};
}

std::size_t Topology::transfers_per_round() const {
  return kind_ == Kind::Regular ? n_ * degree_ : n_;
}

std::vector<ModelParameters> dpsgd_mix(const std::vector<ModelParameters>& trained, const Topology& topology,
                                       RoundNumber k) {
  if (trained.size() != topology.size()) throw InvalidArgument("one model per node expected");
  std::vector<ModelParameters> out;
  out.reserve(trained.size());
  for (std::size_t i = 0; i < trained.size(); ++i) {
    const auto in = topology.in_neighbors(i, k);
    std::vector<double> acc(trained[i].values().begin(), trained[i].values().end());
    for (auto j : in) {
      const auto v = trained[j].values();
      if (v.size() != acc.size()) throw InvalidArgument("heterogeneous model dimensions");
      for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += v[c];
    }
    const double weight = 1.0 / static_cast<double>(in.size() + 1);
    for (auto& a : acc) a *= weight;
    out.emplace_back(std::move(acc), trained[i].age());
  }
  return out;
}

DpsgdSimulation::DpsgdSimulation(const Membership& membership, Topology topology, std::uint32_t local_steps,
                                 std::uint64_t max_rounds, simnet::Simulator& sim, MetricsLedger& ledger,
                                 LocalTrainer trainer, ModelParameters initial)
    : membership_(membership),
      topology_(std::move(topology)),
      max_rounds_(max_rounds),
      sim_(sim),
      ledger_(ledger),
      trainer_(std::move(trainer)),
      models_(membership.size(), initial),
      trained_(membership.size(), initial) {
  if (topology_.size() != membership_.size()) throw InvalidArgument("topology size differs from membership");
  if (max_rounds_ == 0) throw ConfigError("max_rounds must be positive");
  for (const auto& p : membership_.profiles()) training_seconds_.push_back(simnet::compute_time(p, local_steps));
}

void DpsgdSimulation::start() { begin_round(RoundNumber(1)); }

void DpsgdSimulation::begin_round(RoundNumber k) {
  round_start_ = sim_.now();
  const std::size_t n = membership_.size();
  outstanding_ = n + topology_.transfers_per_round();
  for (std::size_t i = 0; i < n; ++i) {
    sim_.compute(i, training_seconds_[i], [this, i, k] {
      trained_[i] = trainer_(i, k.value(), models_[i]);
      ledger_.add_training(i);
      --outstanding_;
      for (auto j : topology_.out_neighbors(i, k)) {
        const auto bytes = model_size_bytes(trained_[i]);
        ledger_.add_bytes(bytes);
        sim_.send(i, j, bytes, [this, k] {
          --outstanding_;
          settle(k);
        });
      }
      settle(k);
    });
  }
}

void DpsgdSimulation::settle(RoundNumber k) {
  if (outstanding_ != 0) return;
  const double now = sim_.now();
  models_ = dpsgd_mix(trained_, topology_, k);
  spans_.push_back({k.value(), round_start_, now});
  const std::size_t n = membership_.size();
  ledger_.record_round(now, RoundRecord{k.value(), now - round_start_, n, n, 0});
  rounds_completed_ = k.value();
  if (k.value() >= max_rounds_) {
    complete_ = true;
    return;
  }
  begin_round(k.next());
}

}  // namespace plexus::baselines
