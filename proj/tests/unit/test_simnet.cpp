#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "plexus/core/errors.hpp"
#include "plexus/simnet/fair_share.hpp"
#include "plexus/simnet/simulator.hpp"
#include "plexus/simnet/traces.hpp"

using namespace plexus;
using namespace plexus::simnet;

namespace {

Simulator two_city_sim(std::vector<SimNodeSpec> nodes, double rtt_ms) {
  return Simulator(std::move(nodes), LatencyMatrix{{"a"}, {rtt_ms}});
}

}  // namespace

TEST_CASE("empty queue returns at time zero") {
  auto sim = two_city_sim({{1, 1, 0}}, 0);
  const auto r = sim.run();
  CHECK(r.final_time == 0.0);
  CHECK(r.events_processed == 0);
}

TEST_CASE("simultaneous events run in scheduling order") {
  auto sim = two_city_sim({{1, 1, 0}}, 0);
  std::vector<int> order;
  for (int i = 0; i < 5; ++i) sim.schedule_at(1.0, EventKind::TimerFire, 0, [&order, i] { order.push_back(i); });
  sim.schedule_at(0.5, EventKind::TimerFire, 0, [&order] { order.push_back(-1); });
  sim.run();
  CHECK(order == std::vector<int>{-1, 0, 1, 2, 3, 4});
}

TEST_CASE("scheduling in the past is a simulation error") {
  auto sim = two_city_sim({{1, 1, 0}}, 0);
  sim.schedule_at(5.0, EventKind::TimerFire, 0, [&sim] {
    CHECK_THROWS_AS(sim.schedule_at(4.0, EventKind::TimerFire, 0, [] {}), SimulationError);
  });
  sim.run();
}

TEST_CASE("single transfer pays latency plus size over rate") {
  auto sim = two_city_sim({{1e6, 1e9, 0}, {1e9, 1e9, 0}}, 100.0);
  double delivered = -1;
  sim.schedule_at(3.0, EventKind::TimerFire, 0, [&] { sim.send(0, 1, 8000000, [&] { delivered = sim.now(); }); });
  sim.run();
  CHECK(delivered == doctest::Approx(3.0 + 0.05 + 8.0).epsilon(1e-12));
}

TEST_CASE("zero-byte messages pay latency only") {
  auto sim = two_city_sim({{1, 1, 0}, {1, 1, 0}}, 100.0);
  double delivered = -1;
  sim.send(0, 1, 0, [&] { delivered = sim.now(); });
  sim.run();
  CHECK(delivered == doctest::Approx(0.05));
}

TEST_CASE("sends reject self and unknown nodes") {
  auto sim = two_city_sim({{1, 1, 0}, {1, 1, 0}}, 0);
  CHECK_THROWS(sim.send(0, 0, 10, [] {}));
  CHECK_THROWS(sim.send(0, 7, 10, [] {}));
}

TEST_CASE("two uploads share the sender's uplink") {
  auto sim = two_city_sim({{1e7, 1e9, 0}, {1e9, 1e9, 0}, {1e9, 1e9, 0}}, 0);
  std::vector<double> t;
  sim.send(0, 1, 10000000, [&] { t.push_back(sim.now()); });
  sim.send(0, 2, 10000000, [&] { t.push_back(sim.now()); });
  sim.run();
  REQUIRE(t.size() == 2);
  CHECK(t[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(t[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("max-min rates") {
  SUBCASE("one flow gets the tighter port") {
    const std::vector<FlowPorts> flows{{0, 3}};
    const std::vector<double> caps{5.0, 100.0, 100.0, 3.0};
    CHECK(max_min_rates(flows, caps)[0] == 3.0);
  }
  SUBCASE("aggregator fan-in of nine") {
    // Nodes 0..8 upload to node 9; downlink of 9 is port 19.
    std::vector<FlowPorts> flows;
    std::vector<double> caps(20, 1e7);
    caps[19] = 9e6;
    for (std::size_t i = 0; i < 9; ++i) flows.push_back({2 * i, 19});
    for (double r : max_min_rates(flows, caps)) CHECK(r == doctest::Approx(1e6).epsilon(1e-12));
  }
  SUBCASE("freed capacity is redistributed") {
    // Flow a is capped by its receiver at 1; b and c split the remaining 9.
    const std::vector<FlowPorts> flows{{0, 3}, {0, 5}, {0, 7}};
    const std::vector<double> caps{10, 100, 100, 1, 100, 100, 100, 100};
    const auto r = max_min_rates(flows, caps);
    CHECK(r[0] == doctest::Approx(1.0));
    CHECK(r[1] == doctest::Approx(4.5));
    CHECK(r[2] == doctest::Approx(4.5));
  }
  SUBCASE("unbounded ports never bind") {
    const double inf = std::numeric_limits<double>::infinity();
    const std::vector<FlowPorts> flows{{0, 3}, {2, 3}};
    const std::vector<double> caps{inf, inf, 4.0, inf};
    const auto r = max_min_rates(flows, caps);
    CHECK(std::isinf(r[0]));
    CHECK(r[1] == 4.0);
  }
  SUBCASE("matches the bottleneck-search oracle on random instances") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> cap(1.0, 100.0);
    std::uniform_int_distribution<std::size_t> node(0, 5);
    for (int t = 0; t < 200; ++t) {
      std::vector<double> up(6), down(6), caps(12);
      for (std::size_t i = 0; i < 6; ++i) {
        up[i] = caps[2 * i] = cap(rng);
        down[i] = caps[2 * i + 1] = cap(rng);
      }
      std::vector<FlowPorts> flows;
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      const std::size_t nf = 1 + node(rng) * 2;
      for (std::size_t f = 0; f < nf; ++f) {
        std::size_t a = node(rng), b = node(rng);
        if (a == b) b = (b + 1) % 6;
        flows.push_back({2 * a, 2 * b + 1});
        pairs.emplace_back(a, b);
      }
      const auto got = max_min_rates(flows, caps);
      const auto want = oracle::bottleneck_rates(up, down, pairs);
      for (std::size_t f = 0; f < nf; ++f) CHECK(got[f] == doctest::Approx(want[f]).epsilon(1e-9));
    }
  }
}

TEST_CASE("event engine matches the fluid oracle, with invariants") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> cap(1e3, 1e5), size(1e3, 2e5), start(0.0, 5.0);
  for (int inst = 0; inst < 30; ++inst) {
    const std::size_t n = 2 + rng() % 7;
    std::vector<double> up(n), down(n);
    std::vector<SimNodeSpec> specs;
    for (std::size_t i = 0; i < n; ++i) {
      up[i] = cap(rng);
      down[i] = cap(rng);
      specs.push_back({up[i], down[i], 0});
    }
    std::vector<oracle::FluidTransfer> ts;
    const std::size_t nt = 1 + rng() % 12;
    for (std::size_t t = 0; t < nt; ++t) {
      std::size_t a = rng() % n, b = rng() % n;
      if (a == b) b = (b + 1) % n;
      ts.push_back({a, b, std::floor(size(rng)), std::floor(start(rng) * 8) / 8});
    }
    auto sim = two_city_sim(specs, 0.0);
    sim.keep_transfer_history(true);
    double worst_capacity = 0.0;
    bool max_min_ok = true;
    sim.on_rates_changed([&](const FairShareNetwork& net, double) {
      worst_capacity = std::max(worst_capacity, net.max_capacity_violation());
      // Every flow is bottlenecked at a saturated port where it has the
      // largest rate.
      std::vector<double> load(net.capacities().size(), 0.0);
      for (const auto& [id, t] : net.active()) {
        load[2 * t.src] += t.current_rate;
        load[2 * t.dst + 1] += t.current_rate;
      }
      for (const auto& [id, t] : net.active()) {
        bool bottlenecked = false;
        for (std::size_t port : {2 * t.src, 2 * t.dst + 1}) {
          const double c = net.capacities()[port];
          if (std::abs(load[port] - c) > 1e-9 * c) continue;
          double top = 0.0;
          for (const auto& [id2, u] : net.active())
            if (2 * u.src == port || 2 * u.dst + 1 == port) top = std::max(top, u.current_rate);
          if (t.current_rate >= top * (1 - 1e-9)) bottlenecked = true;
        }
        if (!bottlenecked) max_min_ok = false;
      }
    });
    std::vector<double> done(nt, -1.0);
    for (std::size_t t = 0; t < nt; ++t) {
      sim.schedule_at(ts[t].start, EventKind::TimerFire, ts[t].src, [&, t] {
        sim.send(ts[t].src, ts[t].dst, static_cast<std::uint64_t>(ts[t].bytes), [&, t] { done[t] = sim.now(); });
      });
    }
    sim.run();
    const auto want = oracle::fluid_completion_times(up, down, ts);
    for (std::size_t t = 0; t < nt; ++t) CHECK(std::abs(done[t] - want[t]) <= 1e-9);
    CHECK(worst_capacity <= 1e-9);
    CHECK(max_min_ok);
    for (const auto& rec : sim.transfer_history()) {
      CHECK(std::abs(rec.integrated_bytes - rec.total_bytes) <= 1e-6);
      CHECK(rec.bytes_done <= rec.total_bytes);
    }
  }
}

TEST_CASE("compute jobs on one node run back to back") {
  auto sim = two_city_sim({{1, 1, 0}, {1, 1, 0}}, 0);
  std::vector<std::pair<int, double>> done;
  sim.compute(0, 2.0, [&] { done.emplace_back(0, sim.now()); });
  sim.compute(0, 3.0, [&] { done.emplace_back(1, sim.now()); });
  sim.compute(1, 1.0, [&] { done.emplace_back(2, sim.now()); });
  sim.run();
  REQUIRE(done.size() == 3);
  CHECK(done[0] == std::pair(2, 1.0));
  CHECK(done[1] == std::pair(0, 2.0));
  CHECK(done[2] == std::pair(1, 5.0));
}

TEST_CASE("run stops at the time limit") {
  auto sim = two_city_sim({{1, 1, 0}}, 0);
  int fired = 0;
  sim.timer(0, 10.0, [&] { ++fired; });
  const auto r = sim.run(5.0);
  CHECK(fired == 0);
  CHECK(r.final_time == 5.0);
  sim.run();
  CHECK(fired == 1);
}

TEST_CASE("observer events stay out of the timeline digest") {
  auto run = [](bool with_observer) {
    auto sim = two_city_sim({{100, 100, 0}, {100, 100, 0}}, 20);
    sim.send(0, 1, 1000, [] {});
    sim.compute(1, 4.0, [] {});
    if (with_observer) sim.timer(Simulator::kNoNode, 1.0, [] {}, true);
    sim.run();
    return sim.timeline_digest();
  };
  CHECK(run(false) == run(true));
}

TEST_CASE("identical setups replay identically") {
  auto run = [] {
    auto sim = Simulator(std::vector<SimNodeSpec>{{50, 80, 0}, {70, 20, 1}, {30, 90, 2}},
                         generate_latency_matrix(3, 4));
    for (int i = 0; i < 6; ++i) sim.send(i % 3, (i + 1) % 3, 100 + 37 * i, [] {});
    sim.run();
    return std::pair(sim.timeline_digest(), sim.now());
  };
  CHECK(run() == run());
}

TEST_CASE("latency trace parsing") {
  const auto m = parse_latency_matrix("x,y\n0,10\n10,0\n");
  CHECK(m.size() == 2);
  CHECK(m.rtt(0, 1) == 10.0);
  CHECK(m.one_way_seconds(0, 1) == 0.005);
  CHECK_THROWS_WITH(parse_latency_matrix("x,y\n0,10\n", "t.csv"), doctest::Contains("non-square"));
  CHECK_THROWS_WITH(parse_latency_matrix("x,y\n0,10\n10\n", "t.csv"), doctest::Contains("t.csv:3"));
  CHECK_THROWS_WITH(parse_latency_matrix("x,y\n0,-1\n1,0\n", "t.csv"), doctest::Contains("t.csv:2: negative"));
  CHECK_THROWS_WITH(parse_latency_matrix("x,y\n0,nan\n1,0\n", "t.csv"), doctest::Contains("t.csv:2"));
  CHECK_THROWS_AS(load_latency_matrix("/nonexistent/lat.csv"), LoadError);
}

TEST_CASE("city assignment is round robin") {
  const LatencyMatrix three{{"a", "b", "c"}, std::vector<double>(9, 1.0)};
  const Membership m(generate_profiles(7, 1));
  CHECK(assign_cities(m, three) == std::vector<std::size_t>{0, 1, 2, 0, 1, 2, 0});
  const auto single = LatencyMatrix::uniform(30.0);
  auto sim = Simulator::for_membership(with_cities(m, single), single);
  CHECK(sim.one_way_latency(0, 5) == sim.one_way_latency(2, 3));
}

TEST_CASE("a 227-city matrix survives a file round trip") {
  const auto m = generate_latency_matrix(227, 3);
  const auto path = std::filesystem::temp_directory_path() / "plexus_lat227.csv";
  save_latency_matrix(path, m);
  const auto back = load_latency_matrix(path);
  CHECK(back.size() == 227);
  CHECK(back.rtt_ms.size() == 227u * 227u);
  CHECK(back.rtt_ms == m.rtt_ms);
  for (std::size_t i = 0; i < 227; ++i) {
    CHECK(back.rtt(i, i) > 0.0);
    CHECK(back.rtt(i, (i + 1) % 227) == back.rtt((i + 1) % 227, i));
  }
  std::filesystem::remove(path);
}

TEST_CASE("profile traces") {
  const auto ps = parse_profiles("sec_per_local_step,node_id,downlink_bps,uplink_bps\n2,a,30,10\n0.5,b,60,20\n");
  REQUIRE(ps.size() == 2);
  CHECK(ps[0].node == NodeId("a"));
  CHECK(ps[0].uplink_bps == 10.0);
  CHECK(ps[1].sec_per_local_step == 0.5);
  CHECK_THROWS_WITH(parse_profiles("node_id,uplink_bps,downlink_bps,sec_per_local_step,gpu\n"),
                    doctest::Contains("unknown column"));
  CHECK_THROWS_WITH(parse_profiles("node_id,uplink_bps,downlink_bps\n"), doctest::Contains("expected columns"));
  CHECK_THROWS_AS(parse_profiles("node_id,uplink_bps,downlink_bps,sec_per_local_step\na,0,1,1\n"), Error);

  const auto gen = generate_profiles(50, 8);
  const auto path = std::filesystem::temp_directory_path() / "plexus_profiles.csv";
  save_profiles(path, gen);
  const auto back = load_profiles(path);
  REQUIRE(back.size() == 50);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(back[i].node == gen[i].node);
    CHECK(back[i].uplink_bps == gen[i].uplink_bps);
    CHECK(back[i].sec_per_local_step == gen[i].sec_per_local_step);
  }
  std::filesystem::remove(path);
}

TEST_CASE("compute time is steps times seconds per step") {
  const DeviceProfile p{NodeId("a"), 1, 1, 2.0, 0};
  CHECK(compute_time(p, 5) == 10.0);
  CHECK_THROWS(compute_time(p, 0));
}
