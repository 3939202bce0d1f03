#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "plexus/core/checkpoint.hpp"
#include "plexus/core/csv.hpp"
#include "plexus/core/errors.hpp"
#include "plexus/core/message.hpp"
#include "plexus/core/metrics.hpp"
#include "plexus/core/model.hpp"
#include "plexus/core/rng.hpp"
#include "plexus/core/types.hpp"

using namespace plexus;

namespace {

std::vector<ModelParameters> random_models(std::size_t count, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 3.0);
  std::vector<ModelParameters> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> v(dim);
    for (auto& x : v) x = g(rng);
    out.emplace_back(std::move(v));
  }
  return out;
}

}  // namespace

TEST_CASE("node ids reject the hash separator and blanks") {
  CHECK_NOTHROW(NodeId("n001"));
  CHECK_THROWS_AS(NodeId(""), InvalidArgument);
  CHECK_THROWS_AS(NodeId("a|b"), InvalidArgument);
  CHECK_THROWS_AS(NodeId("a b"), InvalidArgument);
  CHECK(NodeId("a") < NodeId("b"));
}

TEST_CASE("round numbers start at one") {
  CHECK_THROWS_AS(RoundNumber(0), InvalidArgument);
  CHECK(RoundNumber(1).next().value() == 2);
}

TEST_CASE("device profiles need positive finite rates") {
  DeviceProfile p{NodeId("x"), 10.0, 10.0, 1.0, 0};
  CHECK_NOTHROW(p.validate());
  p.uplink_bps = 0.0;
  CHECK_THROWS(p.validate());
  p.uplink_bps = 1.0;
  p.sec_per_local_step = std::numeric_limits<double>::infinity();
  CHECK_THROWS(p.validate());
}

TEST_CASE("membership lookups and duplicate rejection") {
  Membership m({{NodeId("a"), 1, 1, 1, 0}, {NodeId("b"), 2, 2, 1, 0}});
  CHECK(m.size() == 2);
  CHECK(m.require_index(NodeId("b")) == 1);
  CHECK_FALSE(m.index_of(NodeId("c")).has_value());
  CHECK_THROWS_WITH(m.require_index(NodeId("c")), doctest::Contains("unknown node"));
  CHECK_THROWS(Membership({{NodeId("a"), 1, 1, 1, 0}, {NodeId("a"), 2, 2, 1, 0}}));
}

TEST_CASE("model parameters must be finite and non-empty") {
  CHECK_THROWS(ModelParameters(std::vector<double>{}));
  CHECK_THROWS(ModelParameters({1.0, std::nan("")}));
  CHECK_THROWS(ModelParameters({std::numeric_limits<double>::infinity()}));
  ModelParameters m({1.0, 2.0});
  CHECK(m.age() == 0);
  CHECK(m.with_age(5).age() == 5);
}

TEST_CASE("average of two models") {
  std::vector<ModelParameters> ms{ModelParameters({1, 3}), ModelParameters({3, 5})};
  const auto avg = average_models(ms);
  CHECK(avg.values()[0] == 2.0);
  CHECK(avg.values()[1] == 4.0);
  CHECK(avg.age() == 0);
}

TEST_CASE("average of identical models is the model") {
  ModelParameters m({0.1, -7.25, 3e10}, 4);
  std::vector<ModelParameters> ms(3, m);
  const auto avg = average_models(ms);
  CHECK(std::equal(avg.values().begin(), avg.values().end(), m.values().begin()));
}

TEST_CASE("average matches a per-coordinate sum oracle") {
  const auto ms = random_models(10, 16, 7);
  std::vector<std::vector<double>> raw;
  for (const auto& m : ms) raw.emplace_back(m.values().begin(), m.values().end());
  const auto expected = oracle::naive_mean(raw);
  const auto got = average_models(ms);
  for (std::size_t i = 0; i < 16; ++i) CHECK(got.values()[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("average is permutation invariant and bounded") {
  auto ms = random_models(9, 32, 11);
  const auto ref = average_models(ms);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    std::shuffle(ms.begin(), ms.end(), rng);
    CHECK(average_models(ms) == ref);
  }
  for (std::size_t c = 0; c < 32; ++c) {
    double lo = 1e300, hi = -1e300;
    for (const auto& m : ms) {
      lo = std::min(lo, m.values()[c]);
      hi = std::max(hi, m.values()[c]);
    }
    CHECK(ref.values()[c] >= lo);
    CHECK(ref.values()[c] <= hi);
  }
}

TEST_CASE("average leaves inputs untouched") {
  const auto ms = random_models(4, 8, 5);
  const auto copy = ms;
  (void)average_models(ms);
  CHECK(ms == copy);
}

TEST_CASE("average errors") {
  std::vector<ModelParameters> none;
  CHECK_THROWS_WITH(average_models(none), "nothing to aggregate");
  std::vector<ModelParameters> mixed{ModelParameters({1.0}), ModelParameters({1.0, 2.0})};
  CHECK_THROWS_WITH(average_models(mixed), "heterogeneous model dimensions");
}

TEST_CASE("wire size") {
  CHECK(model_size_bytes(ModelParameters({1.0})) == 24);
  CHECK(model_size_bytes(ModelParameters(std::vector<double>(1000, 0.5))) == 8016);
  CHECK(model_size_bytes(ModelParameters({1.0, 2.0})) == model_size_bytes(ModelParameters({-9.0, 1e9})));
  const Message msg = TrainMsg{RoundNumber(1), ModelParameters(std::vector<double>(10, 0.0))};
  CHECK(message_bytes(msg) == 96);
}

TEST_CASE("checkpoint layout and round trip") {
  ModelParameters m({1.0, -0.0, 1e-300, 3.141592653589793}, 42);
  const auto bytes = encode_checkpoint(m);
  REQUIRE(bytes.size() == 4 + 4 + 8 + 4 * 8);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "PLXM");
  CHECK(bytes[4] == 4);  // dim, little-endian
  CHECK(bytes[8] == 42);  // age
  const auto back = decode_checkpoint(bytes);
  CHECK(back == m);
  CHECK(encode_checkpoint(back) == bytes);
  CHECK(std::signbit(back.values()[1]));

  for (const auto& r : random_models(20, 17, 99)) CHECK(decode_checkpoint(encode_checkpoint(r)) == r);
}

TEST_CASE("checkpoint decoding rejects malformed input") {
  auto bytes = encode_checkpoint(ModelParameters({1.0, 2.0}));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad_magic), LoadError);
  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_checkpoint(truncated), LoadError);
  auto zero_dim = bytes;
  zero_dim[4] = 0;
  CHECK_THROWS_AS(decode_checkpoint(zero_dim), LoadError);
}

TEST_CASE("checkpoint files") {
  const auto path = std::filesystem::temp_directory_path() / "plexus_ckpt_test.bin";
  ModelParameters m({0.5, 0.25}, 3);
  save_checkpoint(path, m);
  CHECK(load_checkpoint(path) == m);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), LoadError);
}

TEST_CASE("metrics ledger accumulates exactly") {
  MetricsLedger ledger({2.0, 0.5});
  ledger.add_training(0);
  ledger.add_training(1);
  ledger.add_training(1);
  ledger.add_bytes(100);
  CHECK(ledger.train_seconds_total() == 3.0);
  CHECK(ledger.trainings_total() == 3);
  ledger.record_round(10.0, RoundRecord{1, 10.0, 2, 2, 0});
  ledger.add_late_model(1);
  CHECK(ledger.rounds().at(0).late_models == 1);
  CHECK(ledger.late_models() == 1);
  ledger.record_accuracy(10.0, 1, 0.5, 0.0);
  CHECK(ledger.ledger_timeline().size() == 2);
  CHECK(ledger.ledger_timeline()[0].round_event);
  CHECK_FALSE(ledger.ledger_timeline()[1].round_event);
  CHECK(ledger.accuracy_timeline().at(0).bytes_total == 100);
  CHECK_THROWS(ledger.add_training(2));
}

TEST_CASE("csv helpers") {
  const auto parts = csv::split_line("a, b ,c");
  REQUIRE(parts.size() == 3);
  CHECK(csv::trim(parts[1]) == "b");
  CHECK(csv::parse_double("2.5", "x") == 2.5);
  CHECK_THROWS_AS(csv::parse_double("2.5z", "x"), LoadError);
  CHECK(csv::parse_int("-12", "x") == -12);
  CHECK(csv::format_double(0.1) == "0.1");
  CHECK(csv::parse_double(csv::format_double(1.0 / 3.0), "x") == 1.0 / 3.0);
}

TEST_CASE("seed derivation separates streams") {
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
  CHECK(hash_tag("a") != hash_tag("b"));
}
