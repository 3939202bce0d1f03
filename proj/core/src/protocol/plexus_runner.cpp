#include "plexus/protocol/plexus_runner.hpp"

#include "plexus/core/errors.hpp"
#include "plexus/simnet/traces.hpp"

namespace plexus::protocol {

PlexusSimulation::PlexusSimulation(const Membership& membership, ProtocolConfig config, std::uint32_t local_steps,
                                   simnet::Simulator& sim, MetricsLedger& ledger, LocalTrainer trainer,
                                   ModelFactory init)
    : membership_(membership),
      config_(config),
      sim_(sim),
      ledger_(ledger),
      trainer_(std::move(trainer)),
      init_(std::move(init)) {
  config_.validate();
  if (sim_.node_count() < membership_.size()) throw InvalidArgument("simulator has fewer nodes than the membership");
  nodes_.reserve(membership_.size());
  for (const auto& p : membership_.profiles()) {
    nodes_.emplace_back(p.node, config_, membership_, simnet::compute_time(p, local_steps));
  }
}

void PlexusSimulation::start() {
  last_round_end_ = sim_.now();
  for (std::size_t i = 0; i < nodes_.size(); ++i) apply(i, nodes_[i].bootstrap(init_));
}

void PlexusSimulation::deliver(std::size_t dst, Message msg) {
  apply(dst, nodes_[dst].handle(std::move(msg)));
}

void PlexusSimulation::apply(std::size_t self, std::vector<Effect> effects) {
  for (auto& effect : effects) {
    if (auto* send = std::get_if<SendEffect>(&effect)) {
      const std::size_t dst = membership_.require_index(send->dst);
      auto deliver_fn = [this, dst, msg = std::move(send->msg)]() mutable { deliver(dst, std::move(msg)); };
      if (dst == self) {
        sim_.schedule_at(sim_.now(), simnet::EventKind::Deliver, dst, std::move(deliver_fn));
      } else {
        ledger_.add_bytes(send->bytes);
        sim_.send(self, dst, send->bytes, std::move(deliver_fn));
      }
    } else if (auto* compute = std::get_if<ComputeEffect>(&effect)) {
      sim_.compute(self, compute->duration, [this, self, job = std::move(compute->job)] {
        ModelParameters trained = trainer_(self, job.round.value(), job.model);
        ledger_.add_training(self);
        ++trained_models_;
        apply(self, nodes_[self].on_trained(job.round, std::move(trained)));
      });
    } else if (auto* m = std::get_if<MetricEffect>(&effect)) {
      const auto round = static_cast<std::uint64_t>(m->value);
      if (m->name == metric::kLateModel) {
        ledger_.add_late_model(round);
      } else if (m->name == metric::kRoundAggregated) {
        const auto& node = nodes_[self];
        const double now = sim_.now();
        ledger_.add_aggregated_models(node.last_aggregate_size());
        ledger_.record_round(now, RoundRecord{round, now - last_round_end_,
                                              std::min(config_.sample_size, membership_.size()),
                                              node.last_aggregate_size(), 0});
        last_round_end_ = now;
        rounds_completed_ = round;
        if (observer_) observer_(round, *node.last_aggregate(), now);
      }
    } else if (std::holds_alternative<TerminalEffect>(effect)) {
      if (!complete_) completion_time_ = sim_.now();
      complete_ = true;
    }
  }
}

}  // namespace plexus::protocol
