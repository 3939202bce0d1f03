#include "plexus/baselines/fl.hpp"

#include <cmath>
#include <numeric>

#include "plexus/core/errors.hpp"
#include "plexus/core/rng.hpp"
#include "plexus/sampler/sampler.hpp"
#include "plexus/simnet/traces.hpp"

namespace plexus::baselines {

std::size_t FlConfig::threshold() const {
  return static_cast<std::size_t>(std::floor(static_cast<double>(sample_size) * success_fraction));
}

void FlConfig::validate() const {
  if (sample_size == 0) throw ConfigError("sample size must be positive");
  if (!(success_fraction > 0.0 && success_fraction <= 1.0)) throw ConfigError("success fraction must be in (0, 1]");
  if (threshold() < 1) throw ConfigError("floor(s * sf) must be at least 1");
  if (max_rounds == 0) throw ConfigError("max_rounds must be positive");
}

ParticipantPicker uniform_picker(std::size_t n, std::size_t s, std::uint64_t seed) {
  return [n, s, seed](RoundNumber k) {
    Rng rng(derive_seed(seed, {hash_tag("fl-sample"), k.value()}));
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    const std::size_t take = std::min(s, n);
    for (std::size_t i = 0; i < take; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    all.resize(take);
    return all;
  };
}

ParticipantPicker hash_picker(const Membership& membership, std::size_t s) {
  return [&membership, s](RoundNumber k) {
    std::vector<std::size_t> out;
    for (const auto& id : sampler::sample(k, s, membership).participants) out.push_back(membership.require_index(id));
    return out;
  };
}

FlServer::FlServer(FlConfig config, ParticipantPicker picker) : config_(config), picker_(std::move(picker)) {
  config_.validate();
}

std::vector<std::size_t> FlServer::start_round(RoundNumber k) {
  pending_[k.value()];
  return picker_(k);
}

std::optional<ModelParameters> FlServer::on_upload(RoundNumber k, std::size_t from, ModelParameters model) {
  if (k.value() <= aggregated_through_ || pending_.count(k.value()) == 0) {
    ++late_;
    return std::nullopt;
  }
  auto& received = pending_[k.value()];
  for (const auto& [sender, m] : received) {
    if (sender == from) return std::nullopt;
  }
  received.emplace_back(from, std::move(model));
  if (received.size() < config_.threshold()) return std::nullopt;

  std::vector<ModelParameters> models;
  for (auto& [sender, m] : received) models.push_back(std::move(m));
  last_size_ = models.size();
  pending_.erase(k.value());
  aggregated_through_ = k.value();
  return average_models(models);
}

FlSimulation::FlSimulation(const Membership& membership, FlConfig config, std::uint32_t local_steps,
                           simnet::Simulator& sim, MetricsLedger& ledger, LocalTrainer trainer,
                           ModelParameters initial, ParticipantPicker picker)
    : membership_(membership),
      config_(config),
      sim_(sim),
      ledger_(ledger),
      trainer_(std::move(trainer)),
      server_state_(config, picker ? std::move(picker)
                                   : uniform_picker(membership.size(), config.sample_size, config.seed)),
      server_(sim.add_node({std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                            config.server_city})),
      global_(std::move(initial)) {
  for (const auto& p : membership_.profiles()) training_seconds_.push_back(simnet::compute_time(p, local_steps));
}

void FlSimulation::start() { begin_round(RoundNumber(1)); }

void FlSimulation::begin_round(RoundNumber k) {
  round_start_ = sim_.now();
  const auto participants = server_state_.start_round(k);
  const auto bytes = model_size_bytes(global_);
  for (std::size_t p : participants) {
    ledger_.add_bytes(bytes);
    sim_.send(server_, p, bytes, [this, p, k, model = global_] {
      sim_.compute(p, training_seconds_[p], [this, p, k, model] {
        ModelParameters trained = trainer_(p, k.value(), model);
        ledger_.add_training(p);
        const auto up = model_size_bytes(trained);
        ledger_.add_bytes(up);
        sim_.send(p, server_, up, [this, p, k, trained = std::move(trained)]() mutable {
          on_upload(k, p, std::move(trained));
        });
      });
    });
  }
}

void FlSimulation::on_upload(RoundNumber k, std::size_t from, ModelParameters model) {
  const auto late_before = server_state_.late_models();
  auto merged = server_state_.on_upload(k, from, std::move(model));
  if (server_state_.late_models() != late_before) ledger_.add_late_model(k.value());
  if (!merged) return;

  const double now = sim_.now();
  global_ = std::move(*merged);
  ledger_.add_aggregated_models(server_state_.last_aggregate_size());
  ledger_.record_round(now, RoundRecord{k.value(), now - round_start_,
                                        std::min(config_.sample_size, membership_.size()),
                                        server_state_.last_aggregate_size(), 0});
  rounds_completed_ = k.value();
  if (observer_) observer_(k.value(), global_, now);
  if (k.value() >= config_.max_rounds) {
    complete_ = true;
    return;
  }
  begin_round(k.next());
}

}  // namespace plexus::baselines
