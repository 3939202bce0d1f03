#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "plexus/core/errors.hpp"
#include "plexus/experiments/analysis.hpp"
#include "plexus/experiments/config.hpp"
#include "plexus/experiments/runner.hpp"
#include "plexus/sampler/sampler.hpp"

using namespace plexus;
using namespace plexus::experiments;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"(
# small synthetic run
name = small
n = 8
s = 4
sf = 1
samples = 1200
features = 8
classes = 4
separation = 1.0
latency = uniform
uniform_rtt_ms = 50
max_rounds = 10
eval_every = 1
eval_samples = 200
)";

ExperimentConfig small() { return parse_config(kSmall); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = output_root() / "unit-experiments" / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = small();
  CHECK(c.name == "small");
  CHECK(c.n == 8);
  CHECK(c.s == 4);
  CHECK(c.sf == 1.0);
  CHECK(c.latency == LatencySource::Uniform);
  CHECK(c.synth.classes == 4);
  CHECK(c.eval_samples == 200);
  CHECK(c.targets == std::vector<double>{0.85});

  const auto defaults = parse_config("");
  CHECK(defaults.n == 100);
  CHECK(defaults.s == 13);
  CHECK(defaults.sf == 0.8);
  CHECK(defaults.algorithm == Algorithm::Plexus);

  auto more = parse_config("algorithm = dpsgd\ntopology = one_peer_exp\ntargets = 0.5, 0.7\nstop_accuracy = 0.9\n");
  CHECK(more.algorithm == Algorithm::Dpsgd);
  CHECK(more.topology == DpsgdTopology::OnePeerExponential);
  CHECK(more.targets == std::vector<double>{0.5, 0.7});
  CHECK(more.stop_accuracy == 0.9);
  set_option(more, "stop_accuracy", "none");
  CHECK(!more.stop_accuracy);

  CHECK_THROWS_WITH_AS(parse_config("n = 8\nbogus = 1\n"), doctest::Contains("line 2"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("n = 8\nn = 9\n"), doctest::Contains("duplicate"), ConfigError);
  CHECK_THROWS_AS(parse_config("n = eight\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("algorithm = sgd\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("just text\n"), ConfigError);
  CHECK_THROWS_WITH_AS(load_config("/nonexistent/x.cfg"), doctest::Contains("config not found"), ConfigError);

  const auto rel = parse_config("profiles_path = traces/p.csv\n", "/base");
  CHECK(rel.profiles_path == fs::path("/base/traces/p.csv"));
}

TEST_CASE("config validation") {
  auto check_bad = [](const std::string& key, const std::string& value) {
    auto c = small();
    set_option(c, key, value);
    CAPTURE(key);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  };
  check_bad("s", "9");
  check_bad("s", "0");
  check_bad("sf", "0");
  check_bad("sf", "1.5");
  check_bad("max_rounds", "0");
  check_bad("targets", "1.5");
  check_bad("targets", "0");
  check_bad("eval_every", "1.5");
  check_bad("n", "1");
  check_bad("profiles_path", "/no/such/profiles.csv");
  auto odd = small();
  set_option(odd, "algorithm", "dpsgd");
  set_option(odd, "degree", "3");
  set_option(odd, "n", "9");
  set_option(odd, "samples", "2000");
  CHECK_THROWS_AS(odd.validate(), ConfigError);
  CHECK_NOTHROW(small().validate());
}

TEST_CASE("canonical form round-trips") {
  const auto c = small();
  const auto text = c.canonical();
  const auto again = parse_config(text);
  CHECK(again.canonical() == text);
  CHECK(again.hash() == c.hash());
  auto other = c;
  set_option(other, "s", "3");
  CHECK(other.hash() != c.hash());
}

TEST_CASE("time, communication and resources to accuracy") {
  const std::vector<AccuracyPoint> tl{
      {0, 0, 0.1, 0, 0, 0}, {100, 1, 0.5, 0, 1000, 50}, {200, 2, 0.8, 0, 2000, 90}};
  CHECK(tta(tl, 0.5) == 100.0);
  CHECK(cta(tl, 0.5) == 1000.0);
  CHECK(rta(tl, 0.5) == 50.0);
  CHECK(tta(tl, 0.6) == 200.0);
  CHECK(!tta(tl, 0.9));
  CHECK(!cta(tl, 0.9));
  CHECK(tta(tl, 0.1) == 0.0);
  CHECK_THROWS_AS(tta(tl, 0.0), ConfigError);
  CHECK_THROWS_AS(tta(tl, 1.01), ConfigError);
  CHECK(tta(tl, 1.0) == std::nullopt);

  const std::vector<std::optional<double>> vals{1.0, std::nullopt, 3.0};
  const auto m = mean_over_seeds(vals);
  CHECK(m.mean == 2.0);
  CHECK(m.reached == 2);
  CHECK(m.total == 3);
  CHECK(!mean_over_seeds(std::vector<std::optional<double>>{std::nullopt}).mean);
}

TEST_CASE("round duration statistics") {
  std::vector<RoundRecord> equal;
  for (std::uint64_t k = 1; k <= 10; ++k) equal.push_back({k, 4.0, 4, 4, 0});
  const auto e = round_duration_stats(equal);
  CHECK(e.mean == 4.0);
  CHECK(e.std == 0.0);
  CHECK(e.p50 == 4.0);
  CHECK(e.p95 == 4.0);
  CHECK(e.histogram.counts.size() == 20);
  CHECK(e.histogram.edges.size() == 21);

  std::vector<RoundRecord> tail;
  for (std::uint64_t k = 1; k <= 99; ++k) tail.push_back({k, 10.0 + 0.01 * static_cast<double>(k), 4, 4, 0});
  tail.push_back({100, 500.0, 4, 4, 0});
  const auto t = round_duration_stats(tail);
  CHECK(t.max == 500.0);
  CHECK(t.max > 10 * t.p50);
  CHECK(t.p50 == doctest::Approx(10.505));
  std::size_t total = 0;
  for (auto c : t.histogram.counts) total += c;
  CHECK(total == 100);

  CHECK(percentile({1.0, 2.0, 3.0, 4.0}, 50) == doctest::Approx(2.5));
  CHECK(percentile({1.0, 2.0, 3.0, 4.0}, 100) == 4.0);
  CHECK_THROWS_WITH(round_duration_stats(std::vector<RoundRecord>{}), doctest::Contains("no completed rounds"));
}

TEST_CASE("small Plexus run: ledger and rounds") {
  const auto c = small();
  const auto rep = run_repetition(c, 0);
  CHECK(rep.rounds_completed == 10);
  CHECK(rep.rounds.size() == 10);
  CHECK(rep.trainings == 40);
  CHECK(rep.aggregated_models == 40);
  CHECK(rep.late_models == 0);
  CHECK(rep.accuracy.size() == 11);
  CHECK(rep.accuracy.front().time_s == 0.0);
  CHECK(rep.accuracy.front().round == 0);
  for (std::size_t i = 1; i < rep.accuracy.size(); ++i) {
    CHECK(rep.accuracy[i].round == i);
    CHECK(rep.accuracy[i].time_s >= rep.accuracy[i - 1].time_s);
    CHECK(rep.accuracy[i].bytes_total >= rep.accuracy[i - 1].bytes_total);
  }
  CHECK(rep.accuracy.back().bytes_total == rep.bytes_total);
  CHECK(rep.final_accuracy > rep.accuracy.front().accuracy);

  // Closed-form byte count for this membership.
  const auto latency = experiment_latency(c);
  const auto membership = experiment_membership(c, latency);
  const std::uint64_t size = 8 * (8 * 4 + 4) + 16;
  std::uint64_t expected = 0;
  for (std::uint64_t k = 1; k <= 10; ++k) {
    const auto s = sampler::sample_with_aggregator(RoundNumber(k), 4, membership);
    expected += 3 * size;
    if (k > 1) expected += (s.contains(sampler::aggregator(RoundNumber(k - 1), 4, membership)) ? 3 : 4) * size;
  }
  CHECK(rep.bytes_total == expected);
}

TEST_CASE("repetitions write per-run directories and a summary") {
  auto c = small();
  set_option(c, "repetitions", "3");
  set_option(c, "targets", "0.3,0.9999");
  const auto result = run_experiment(c);
  REQUIRE(result.repetitions.size() == 3);
  CHECK(result.repetitions[0].seed == 1);
  CHECK(result.repetitions[2].seed == 3);
  const auto dir = scratch("reps");
  write_experiment(dir, result);
  for (int r = 0; r < 3; ++r) {
    for (const char* f : {"accuracy.csv", "ledger.csv", "rounds.csv"})
      CHECK(fs::exists(dir / ("rep" + std::to_string(r)) / f));
  }
  CHECK(fs::exists(dir / "config.txt"));
  const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(j["name"] == "small");
  CHECK(j["algorithm"] == "plexus");
  CHECK(j["repetitions"].size() == 3);
  double sum = 0.0;
  for (const auto& rep : result.repetitions) sum += rep.final_accuracy;
  CHECK(j["mean"]["final_accuracy"]["mean"].get<double>() == doctest::Approx(sum / 3.0).epsilon(1e-12));
  double bytes = 0.0;
  for (const auto& rep : result.repetitions) bytes += static_cast<double>(rep.bytes_total);
  CHECK(j["mean"]["bytes_total"]["mean"].get<double>() == doctest::Approx(bytes / 3.0).epsilon(1e-12));
  CHECK(j["mean"]["targets"]["0.9999"]["tta_s"]["mean"].is_null());
  CHECK(j["mean"]["targets"]["0.9999"]["tta_s"]["reached"] == 0);
  CHECK(j["notes"].size() == 1);
}

TEST_CASE("reruns are byte-identical") {
  const auto c = small();
  const auto a = scratch("rerun-a"), b = scratch("rerun-b");
  write_experiment(a, run_experiment(c));
  write_experiment(b, run_experiment(c));
  for (const char* f : {"summary.json", "config.txt", "rep0/accuracy.csv", "rep0/ledger.csv", "rep0/rounds.csv"}) {
    CAPTURE(f);
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK(!slurp(a / f).empty());
  }
}

TEST_CASE("evaluation cadence does not perturb the event timeline") {
  for (const char* algo : {"plexus", "fl", "dpsgd", "gl"}) {
    CAPTURE(algo);
    auto c = small();
    set_option(c, "algorithm", algo);
    set_option(c, "degree", "2");
    set_option(c, "gl_timeout", "10");
    if (std::string(algo) == "gl") set_option(c, "max_hours", "0.1");
    set_option(c, "eval_every", std::string(algo) == "dpsgd" || std::string(algo) == "gl" ? "20" : "1");
    const auto once = run_repetition(c, 0);
    set_option(c, "eval_every", std::string(algo) == "dpsgd" || std::string(algo) == "gl" ? "40" : "2");
    const auto twice = run_repetition(c, 0);
    CHECK(once.timeline_digest == twice.timeline_digest);
    CHECK(once.bytes_total == twice.bytes_total);
    CHECK(once.accuracy.size() > twice.accuracy.size());
  }
}

TEST_CASE("baseline runs complete") {
  SUBCASE("fl") {
    auto c = small();
    set_option(c, "algorithm", "fl");
    const auto rep = run_repetition(c, 0);
    CHECK(rep.rounds_completed == 10);
    CHECK(rep.bytes_total == 10 * 8 * (8 * (8 * 4 + 4) + 16));
  }
  SUBCASE("dpsgd") {
    auto c = small();
    set_option(c, "algorithm", "dpsgd");
    set_option(c, "degree", "2");
    set_option(c, "eval_every", "30");
    const auto rep = run_repetition(c, 0);
    CHECK(rep.rounds_completed == 10);
    CHECK(rep.trainings == 80);
    CHECK(rep.accuracy.back().time_s == rep.final_time);
  }
  SUBCASE("stop accuracy") {
    auto c = small();
    set_option(c, "stop_accuracy", "0.01");
    const auto rep = run_repetition(c, 0);
    CHECK(rep.rounds_completed == 1);
  }
}
