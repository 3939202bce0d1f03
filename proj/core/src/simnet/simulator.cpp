#include "plexus/simnet/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "plexus/core/errors.hpp"

namespace plexus::simnet {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Deliver: return "deliver";
    case EventKind::ComputeDone: return "compute_done";
    case EventKind::TimerFire: return "timer";
    case EventKind::TransferRateRecompute: return "transfer_tick";
  }
  return "?";
}

Simulator::Simulator(std::vector<SimNodeSpec> nodes, LatencyMatrix latency)
    : latency_(std::move(latency)), network_({}, {}) {
  if (latency_.size() == 0) throw InvalidArgument("latency matrix has no cities");
  for (const auto& n : nodes) add_node(n);
}

Simulator Simulator::for_membership(const Membership& membership, LatencyMatrix latency) {
  std::vector<SimNodeSpec> specs;
  specs.reserve(membership.size());
  for (const auto& p : membership.profiles()) specs.push_back({p.uplink_bps, p.downlink_bps, p.city_index});
  return Simulator(std::move(specs), std::move(latency));
}

std::size_t Simulator::add_node(const SimNodeSpec& spec) {
  if (spec.city >= latency_.size()) throw InvalidArgument("node city outside the latency matrix");
  nodes_.push_back(spec);
  network_.add_node(spec.uplink_bps, spec.downlink_bps);
  compute_queue_.emplace_back();
  compute_busy_.push_back(false);
  return nodes_.size() - 1;
}

void Simulator::require_node(std::size_t node) const {
  if (node >= nodes_.size()) throw InvalidArgument("unknown node index " + std::to_string(node));
}

void Simulator::schedule_at(double time, EventKind kind, std::size_t node, std::function<void()> action,
                            bool observer) {
  if (!(time >= now_)) throw SimulationError("event scheduled in the past");
  queue_.push_back(SimEvent{time, seq_++, kind, node, observer, std::move(action)});
  std::push_heap(queue_.begin(), queue_.end(), Later{});
}

double Simulator::one_way_latency(std::size_t src, std::size_t dst) const {
  require_node(src);
  require_node(dst);
  return latency_.one_way_seconds(nodes_[src].city, nodes_[dst].city);
}

void Simulator::send(std::size_t src, std::size_t dst, std::uint64_t bytes, std::function<void()> on_deliver) {
  require_node(src);
  require_node(dst);
  if (src == dst) throw InvalidArgument("local delivery does not go through the network");
  const double latency = one_way_latency(src, dst);
  if (bytes == 0) {
    schedule_at(now_ + latency, EventKind::Deliver, dst, std::move(on_deliver));
    return;
  }
  const TransferId id = network_.start(src, dst, static_cast<double>(bytes), now_);
  pending_.emplace(id, PendingDelivery{dst, latency, std::move(on_deliver)});
  if (rates_hook_) rates_hook_(network_, now_);
  reschedule_transfers();
}

void Simulator::reschedule_transfers() {
  const auto next = network_.next_completion();
  if (!next) {
    scheduled_tick_ = kForever;
    ++transfer_generation_;
    return;
  }
  const double at = std::max(*next, now_);
  if (at == scheduled_tick_) return;
  scheduled_tick_ = at;
  const std::uint64_t gen = ++transfer_generation_;
  schedule_at(at, EventKind::TransferRateRecompute, kNoNode, [this, gen] { on_transfer_tick(gen); });
}

void Simulator::on_transfer_tick(std::uint64_t generation) {
  if (generation != transfer_generation_) return;
  scheduled_tick_ = kForever;
  auto done = network_.complete_due(now_);
  if (rates_hook_) rates_hook_(network_, now_);
  for (auto& rec : done) {
    auto it = pending_.find(rec.id);
    auto delivery = std::move(it->second);
    pending_.erase(it);
    schedule_at(now_ + delivery.latency, EventKind::Deliver, delivery.dst, std::move(delivery.on_deliver));
    if (keep_history_) history_.push_back(rec);
  }
  reschedule_transfers();
}

void Simulator::compute(std::size_t node, double duration, std::function<void()> on_done) {
  require_node(node);
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw InvalidArgument("compute duration must be finite");
  compute_queue_[node].push_back({duration, std::move(on_done)});
  if (!compute_busy_[node]) start_next_job(node);
}

void Simulator::start_next_job(std::size_t node) {
  auto& q = compute_queue_[node];
  if (q.empty()) {
    compute_busy_[node] = false;
    return;
  }
  compute_busy_[node] = true;
  auto job = std::move(q.front());
  q.pop_front();
  schedule_at(now_ + job.duration, EventKind::ComputeDone, node,
              [this, node, done = std::move(job.on_done)] {
                done();
                start_next_job(node);
              });
}

void Simulator::timer(std::size_t node, double delay, std::function<void()> on_fire, bool observer) {
  if (node != kNoNode) require_node(node);
  if (!(delay >= 0.0)) throw InvalidArgument("timer delay must be non-negative");
  schedule_at(now_ + delay, EventKind::TimerFire, node, std::move(on_fire), observer);
}

void Simulator::mix_digest(const SimEvent& ev) {
  auto mix = [this](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      digest_ ^= (v >> (8 * i)) & 0xff;
      digest_ *= 0x100000001b3ULL;
    }
  };
  mix(std::bit_cast<std::uint64_t>(ev.time));
  mix(static_cast<std::uint64_t>(ev.kind));
  mix(static_cast<std::uint64_t>(ev.node));
}

RunResult Simulator::run(double time_limit) {
  stop_requested_ = false;
  std::uint64_t count = 0;
  while (!queue_.empty() && !stop_requested_) {
    if (queue_.front().time > time_limit) {
      now_ = time_limit;
      break;
    }
    std::pop_heap(queue_.begin(), queue_.end(), Later{});
    SimEvent ev = std::move(queue_.back());
    queue_.pop_back();
    now_ = ev.time;
    if (!ev.observer) mix_digest(ev);
    ++processed_;
    ++count;
    ev.action();
  }
  return RunResult{now_, count, stop_requested_};
}

}  // namespace plexus::simnet
