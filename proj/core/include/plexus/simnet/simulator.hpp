#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "plexus/core/types.hpp"
#include "plexus/simnet/fair_share.hpp"
#include "plexus/simnet/traces.hpp"

namespace plexus::simnet {

enum class EventKind { Deliver, ComputeDone, TimerFire, TransferRateRecompute };

const char* to_string(EventKind kind);

struct SimEvent {
  double time;
  std::uint64_t seq;
  EventKind kind;
  std::size_t node;
  bool observer;  // evaluation hooks; excluded from the timeline digest
  std::function<void()> action;
};

struct SimNodeSpec {
  double uplink_bps;
  double downlink_bps;
  std::size_t city;
};

struct RunResult {
  double final_time;
  std::uint64_t events_processed;
  bool stopped;  // stop() was requested by a handler
};

/// Single-threaded discrete-event engine over virtual time. Events run in
/// (time, seq) order; seq is the insertion counter, so simultaneous events
/// run in scheduling order. Handlers must not block and schedule follow-ups
/// through this object.
class Simulator {
 public:
  static constexpr double kForever = std::numeric_limits<double>::infinity();
  static constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

  Simulator(std::vector<SimNodeSpec> nodes, LatencyMatrix latency);

  /// Nodes in membership order; profiles must already carry city indices.
  static Simulator for_membership(const Membership& membership, LatencyMatrix latency);

  std::size_t add_node(const SimNodeSpec& spec);
  std::size_t node_count() const noexcept { return nodes_.size(); }
  double now() const noexcept { return now_; }

  void schedule_at(double time, EventKind kind, std::size_t node, std::function<void()> action,
                   bool observer = false);

  /// Model transfer from src to dst. Delivery happens one-way latency after
  /// the fluid transfer completes; zero-byte messages pay latency only.
  void send(std::size_t src, std::size_t dst, std::uint64_t bytes, std::function<void()> on_deliver);

  /// Runs `duration` seconds of work on `node`. Jobs on one node run one at a
  /// time in submission order.
  void compute(std::size_t node, double duration, std::function<void()> on_done);

  void timer(std::size_t node, double delay, std::function<void()> on_fire, bool observer = false);

  /// Processes events up to and including `time_limit`, until the queue is
  /// empty or a handler calls stop().
  RunResult run(double time_limit = kForever);
  void stop() noexcept { stop_requested_ = true; }

  double one_way_latency(std::size_t src, std::size_t dst) const;
  bool busy_computing(std::size_t node) const { return compute_busy_.at(node); }

  const FairShareNetwork& network() const noexcept { return network_; }
  std::uint64_t timeline_digest() const noexcept { return digest_; }
  std::uint64_t events_processed() const noexcept { return processed_; }

  /// Completed transfer records, kept when enabled (tests and invariants).
  void keep_transfer_history(bool keep) { keep_history_ = keep; }
  const std::vector<TransferRecord>& transfer_history() const noexcept { return history_; }

  /// Called after every rate recomputation; used for invariant checks.
  void on_rates_changed(std::function<void(const FairShareNetwork&, double)> hook) {
    rates_hook_ = std::move(hook);
  }

 private:
  struct Later {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };
  struct PendingDelivery {
    std::size_t dst;
    double latency;
    std::function<void()> on_deliver;
  };
  struct ComputeJob {
    double duration;
    std::function<void()> on_done;
  };

  void require_node(std::size_t node) const;
  void reschedule_transfers();
  void on_transfer_tick(std::uint64_t generation);
  void start_next_job(std::size_t node);
  void mix_digest(const SimEvent& ev);

  std::vector<SimNodeSpec> nodes_;
  LatencyMatrix latency_;
  FairShareNetwork network_;
  std::vector<SimEvent> queue_;
  std::map<TransferId, PendingDelivery> pending_;
  std::vector<std::deque<ComputeJob>> compute_queue_;
  std::vector<bool> compute_busy_;
  std::uint64_t transfer_generation_ = 0;
  double scheduled_tick_ = kForever;
  double now_ = 0.0;
  std::uint64_t seq_ = 0;
  std::uint64_t processed_ = 0;
  std::uint64_t digest_ = 0xcbf29ce484222325ULL;
  bool stop_requested_ = false;
  bool keep_history_ = false;
  std::vector<TransferRecord> history_;
  std::function<void(const FairShareNetwork&, double)> rates_hook_;
};

}  // namespace plexus::simnet
