#include "plexus/baselines/gossip.hpp"

#include <algorithm>
#include <cmath>

#include "plexus/core/errors.hpp"
#include "plexus/simnet/traces.hpp"

namespace plexus::baselines {

ModelParameters gl_merge(const ModelParameters& local, const ModelParameters& remote) {
  if (local.dim() != remote.dim()) throw InvalidArgument("model dimension mismatch in merge");
  if (remote.age() == 0 && local.age() != 0) return local;
  const auto l = local.values();
  const auto r = remote.values();
  std::vector<double> out(l.size());
  if (local.age() == 0 && remote.age() == 0) {
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = (l[c] + r[c]) / 2.0;
    return ModelParameters(std::move(out), 0);
  }
  const double al = static_cast<double>(local.age());
  const double ar = static_cast<double>(remote.age());
  const double total = al + ar;
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = (al * l[c] + ar * r[c]) / total;
  return ModelParameters(std::move(out), std::max(local.age(), remote.age()));
}

void GlConfig::validate() const {
  if (!(round_timeout > 0.0) || !std::isfinite(round_timeout)) throw ConfigError("round timeout must be positive");
}

GossipNode::GossipNode(std::size_t self, std::size_t n, std::uint64_t seed)
    : self_(self), n_(n), rng_(derive_seed(seed, {hash_tag("gossip"), self})) {
  if (n < 2) throw InvalidArgument("gossip needs at least two nodes");
}

std::size_t GossipNode::pick_peer() {
  std::uniform_int_distribution<std::size_t> pick(0, n_ - 2);
  const std::size_t p = pick(rng_);
  return p >= self_ ? p + 1 : p;
}

double GossipNode::initial_offset(double timeout) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return timeout * (1.0 - u(rng_));  // (0, timeout]
}

GlSimulation::GlSimulation(const Membership& membership, GlConfig config, std::uint32_t local_steps,
                           simnet::Simulator& sim, MetricsLedger& ledger, LocalTrainer trainer,
                           ModelParameters initial)
    : membership_(membership),
      config_(config),
      sim_(sim),
      ledger_(ledger),
      trainer_(std::move(trainer)),
      models_(membership.size(), initial),
      invocations_(membership.size(), 0),
      sends_per_node_(membership.size(), 0) {
  config_.validate();
  const std::size_t n = membership_.size();
  for (std::size_t i = 0; i < n; ++i) gossip_.emplace_back(i, n, config_.seed);
  for (const auto& p : membership_.profiles()) training_seconds_.push_back(simnet::compute_time(p, local_steps));
}

void GlSimulation::start() {
  for (std::size_t i = 0; i < gossip_.size(); ++i) {
    sim_.timer(i, gossip_[i].initial_offset(config_.round_timeout), [this, i] { tick(i); });
  }
}

void GlSimulation::tick(std::size_t i) {
  const std::size_t peer = gossip_[i].pick_peer();
  const auto bytes = model_size_bytes(models_[i]);
  ledger_.add_bytes(bytes);
  ++sends_;
  ++sends_per_node_[i];
  sim_.send(i, peer, bytes, [this, peer, model = models_[i]]() mutable { receive(peer, std::move(model)); });
  sim_.timer(i, config_.round_timeout, [this, i] { tick(i); });
}

void GlSimulation::receive(std::size_t i, ModelParameters remote) {
  sim_.compute(i, training_seconds_[i], [this, i, remote = std::move(remote)] {
    ModelParameters merged = gl_merge(models_[i], remote);
    ++merges_;
    models_[i] = trainer_(i, invocations_[i]++, merged);
    ledger_.add_training(i);
  });
}

}  // namespace plexus::baselines
