#include "plexus/protocol/plexus_node.hpp"

#include <cmath>

#include "plexus/core/errors.hpp"
#include "plexus/core/rng.hpp"
#include "plexus/sampler/sampler.hpp"

namespace plexus::protocol {

std::size_t ProtocolConfig::threshold() const {
  return static_cast<std::size_t>(std::floor(static_cast<double>(sample_size) * success_fraction));
}

void ProtocolConfig::validate() const {
  if (sample_size == 0) throw ConfigError("sample size must be positive");
  if (!(success_fraction > 0.0 && success_fraction <= 1.0)) throw ConfigError("success fraction must be in (0, 1]");
  if (threshold() < 1) throw ConfigError("floor(s * sf) must be at least 1");
  if (max_rounds == 0) throw ConfigError("max_rounds must be positive");
}

PlexusNode::PlexusNode(NodeId me, ProtocolConfig config, const Membership& membership, double training_seconds)
    : me_(std::move(me)), config_(config), membership_(&membership), training_seconds_(training_seconds) {
  config_.validate();
  membership.require_index(me_);
}

std::vector<Effect> PlexusNode::bootstrap(const ModelFactory& init) const {
  const RoundNumber first(1);
  if (!sampler::sample(first, config_.sample_size, *membership_).contains(me_)) return {};
  const std::uint64_t seed =
      config_.shared_init ? config_.init_seed : derive_seed(config_.init_seed, {hash_tag(me_.str())});
  return {SendEffect{me_, TrainMsg{first, init(seed)}, 0}};
}

std::vector<Effect> PlexusNode::on_train(RoundNumber k, ModelParameters model) {
  if (k.value() > config_.max_rounds) return {TerminalEffect{}};
  if (!trained_.insert(k).second) {
    ++duplicate_trains_;
    return {MetricEffect{metric::kDuplicateTrain, static_cast<double>(k.value())}};
  }
  if (!sampler::sample(k, config_.sample_size, *membership_).contains(me_))
    throw ProtocolError(me_.str() + " asked to train outside its sample for round " + std::to_string(k.value()));
  return {ComputeEffect{training_seconds_, TrainJob{k, std::move(model)}}};
}

std::vector<Effect> PlexusNode::on_trained(RoundNumber k, ModelParameters trained) {
  const NodeId agg = sampler::aggregator(k, config_.sample_size, *membership_);
  const std::uint64_t bytes = agg == me_ ? 0 : model_size_bytes(trained);
  return {SendEffect{agg, AggregateMsg{k, std::move(trained), me_}, bytes}};
}

std::vector<Effect> PlexusNode::on_aggregate(RoundNumber k, ModelParameters model, const NodeId& from) {
  if (sampler::aggregator(k, config_.sample_size, *membership_) != me_)
    throw ProtocolError("misrouted aggregate for round " + std::to_string(k.value()) + " at " + me_.str());
  if (aggregated_.count(k) != 0) {
    ++late_models_;
    return {MetricEffect{metric::kLateModel, static_cast<double>(k.value())}};
  }
  auto& received = pending_[k];
  for (const auto& [sender, m] : received) {
    if (sender == from) {
      ++duplicate_aggregates_;
      return {MetricEffect{metric::kDuplicateAggregate, static_cast<double>(k.value())}};
    }
  }
  received.emplace_back(from, std::move(model));
  if (received.size() < config_.threshold()) return {};

  std::vector<ModelParameters> models;
  models.reserve(received.size());
  for (auto& [sender, m] : received) models.push_back(std::move(m));
  ModelParameters merged = average_models(models);
  last_aggregate_size_ = models.size();
  pending_.erase(k);
  aggregated_.insert(k);
  last_aggregate_ = merged;

  std::vector<Effect> out;
  out.push_back(MetricEffect{metric::kRoundAggregated, static_cast<double>(k.value())});
  if (k.value() >= config_.max_rounds) {
    out.push_back(TerminalEffect{});
    return out;
  }
  const RoundNumber next = k.next();
  const auto sample = sampler::sample(next, config_.sample_size, *membership_);
  for (const auto& j : sample.participants) {
    const std::uint64_t bytes = j == me_ ? 0 : model_size_bytes(merged);
    out.push_back(SendEffect{j, TrainMsg{next, merged}, bytes});
  }
  return out;
}

std::vector<Effect> PlexusNode::handle(Message msg) {
  return std::visit(
      [this](auto&& m) -> std::vector<Effect> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, TrainMsg>) {
          return on_train(m.round, std::move(m.model));
        } else if constexpr (std::is_same_v<T, AggregateMsg>) {
          return on_aggregate(m.round, std::move(m.model), m.from);
        } else {
          throw ProtocolError("plexus nodes do not accept gossip messages");
        }
      },
      std::move(msg));
}

std::size_t PlexusNode::pending(RoundNumber k) const {
  auto it = pending_.find(k);
  return it == pending_.end() ? 0 : it->second.size();
}

}  // namespace plexus::protocol
