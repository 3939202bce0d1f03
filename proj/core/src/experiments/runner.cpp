#include "plexus/experiments/runner.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "plexus/baselines/dpsgd.hpp"
#include "plexus/baselines/fl.hpp"
#include "plexus/baselines/gossip.hpp"
#include "plexus/core/csv.hpp"
#include "plexus/core/errors.hpp"
#include "plexus/core/rng.hpp"
#include "plexus/experiments/analysis.hpp"
#include "plexus/learning/learning.hpp"
#include "plexus/protocol/plexus_runner.hpp"
#include "plexus/simnet/simulator.hpp"
#include "plexus/simnet/traces.hpp"

namespace plexus::experiments {
namespace {

using learning::Dataset;
using learning::ModelSpec;

struct Setup {
  learning::SplitDataset data;
  Dataset eval_set;
  ModelSpec spec;
  std::vector<Dataset> shards;
  simnet::LatencyMatrix latency;
  std::unique_ptr<Membership> membership;
};

Setup prepare(const ExperimentConfig& config) {
  Setup st;
  if (config.dataset_path.empty()) {
    auto synth = config.synth;
    synth.seed = config.dataset_seed;
    st.data = learning::synth_dataset(synth);
  } else {
    st.data = learning::split_dataset(learning::load_csv_dataset(config.dataset_path), config.dataset_seed);
  }
  st.spec = config.model;
  st.spec.d_in = st.data.train.d_in;
  st.spec.classes = static_cast<std::size_t>(std::max(st.data.train.num_classes(), st.data.test.num_classes()));
  st.spec.validate();

  if (config.eval_samples > 0 && config.eval_samples < st.data.test.size()) {
    std::vector<std::size_t> rows(config.eval_samples);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    st.eval_set = st.data.test.subset(rows);
  } else {
    st.eval_set = st.data.test;
  }

  st.latency = experiment_latency(config);
  st.membership = std::make_unique<Membership>(experiment_membership(config, st.latency));

  auto parts = learning::partition(st.data.train, *st.membership, config.partition, config.dataset_seed);
  for (const auto& id : st.membership->nodes()) st.shards.push_back(std::move(parts.at(id).data));
  return st;
}

struct MeanStd {
  double mean;
  double std;
};

MeanStd evaluate_all(const ModelSpec& spec, const std::vector<ModelParameters>& models, const Dataset& test) {
  double sum = 0.0;
  std::vector<double> acc;
  acc.reserve(models.size());
  for (const auto& m : models) {
    acc.push_back(learning::evaluate(spec, m, test));
    sum += acc.back();
  }
  const double mean = sum / static_cast<double>(acc.size());
  double var = 0.0;
  for (double a : acc) var += (a - mean) * (a - mean);
  return {mean, std::sqrt(var / static_cast<double>(acc.size()))};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "cannot write " + path.string());
  out << text;
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

simnet::LatencyMatrix experiment_latency(const ExperimentConfig& config) {
  switch (config.latency) {
    case LatencySource::Uniform: return simnet::LatencyMatrix::uniform(config.uniform_rtt_ms);
    case LatencySource::File: return simnet::load_latency_matrix(config.latency_path);
    case LatencySource::Generated: break;
  }
  return simnet::generate_latency_matrix(config.cities, config.trace_seed);
}

Membership experiment_membership(const ExperimentConfig& config, const simnet::LatencyMatrix& latency) {
  auto profiles = config.profiles_path.empty()
                      ? simnet::generate_profiles(config.n, config.trace_seed, config.profile_gen)
                      : simnet::load_profiles(config.profiles_path);
  if (profiles.size() < config.n)
    throw ConfigError("profiles file has " + std::to_string(profiles.size()) + " nodes, n = " +
                      std::to_string(config.n));
  profiles.erase(profiles.begin() + static_cast<std::ptrdiff_t>(config.n), profiles.end());
  return simnet::with_cities(Membership(std::move(profiles)), latency);
}

std::uint64_t repetition_seed(const ExperimentConfig& config, std::size_t r) {
  return config.protocol_seed + static_cast<std::uint64_t>(r);
}

RepetitionResult run_repetition(const ExperimentConfig& config, std::size_t r) {
  config.validate();
  Setup st = prepare(config);
  const Membership& membership = *st.membership;
  const std::uint64_t seed = repetition_seed(config, r);
  const auto& tc = config.trainer;

  std::vector<double> seconds;
  for (const auto& p : membership.profiles()) seconds.push_back(simnet::compute_time(p, tc.local_steps));
  MetricsLedger ledger(seconds);
  auto sim = simnet::Simulator::for_membership(membership, st.latency);
  const double limit = config.max_hours * 3600.0;

  LocalTrainer trainer = [&](std::size_t node, std::uint64_t invocation, const ModelParameters& model) {
    Rng rng(derive_seed(seed, {hash_tag("train"), static_cast<std::uint64_t>(node), invocation}));
    return learning::local_train(st.spec, model, st.shards[node], tc, rng);
  };
  const ModelParameters initial = learning::init_model(st.spec, seed);
  ledger.record_accuracy(0.0, 0, learning::evaluate(st.spec, initial, st.eval_set), 0.0);

  const auto every = static_cast<std::uint64_t>(config.eval_every);
  auto reached_stop = [&](double acc) { return config.stop_accuracy && acc >= *config.stop_accuracy; };
  RoundObserver on_round = [&](std::uint64_t round, const ModelParameters& global, double time) {
    if (round % every != 0 && round != config.max_rounds) return;
    const double acc = learning::evaluate(st.spec, global, st.eval_set);
    ledger.record_accuracy(time, round, acc, 0.0);
    if (reached_stop(acc)) sim.stop();
  };

  RepetitionResult res;
  std::uint64_t rounds_completed = 0;
  std::function<const std::vector<ModelParameters>&()> node_models;
  std::function<bool()> finished;
  std::function<std::uint64_t()> rounds_now;

  std::unique_ptr<protocol::PlexusSimulation> plexus;
  std::unique_ptr<baselines::FlSimulation> fl;
  std::unique_ptr<baselines::DpsgdSimulation> dpsgd;
  std::unique_ptr<baselines::GlSimulation> gl;

  switch (config.algorithm) {
    case Algorithm::Plexus: {
      protocol::ProtocolConfig pc{config.s, config.sf, config.max_rounds, config.shared_init, seed};
      plexus = std::make_unique<protocol::PlexusSimulation>(
          membership, pc, tc.local_steps, sim, ledger, trainer,
          [&](std::uint64_t s) { return learning::init_model(st.spec, s); });
      plexus->on_round(on_round);
      plexus->start();
      break;
    }
    case Algorithm::Fl: {
      baselines::FlConfig fc{config.s, config.sf, config.max_rounds, seed, config.fl_server_city};
      fl = std::make_unique<baselines::FlSimulation>(membership, fc, tc.local_steps, sim, ledger, trainer, initial);
      fl->on_round(on_round);
      fl->start();
      break;
    }
    case Algorithm::Dpsgd: {
      auto topo = config.topology == DpsgdTopology::Regular
                      ? baselines::Topology::regular(config.n, config.degree, seed)
                      : baselines::Topology::one_peer_exponential(config.n);
      dpsgd = std::make_unique<baselines::DpsgdSimulation>(membership, std::move(topo), tc.local_steps,
                                                           config.max_rounds, sim, ledger, trainer, initial);
      node_models = [&]() -> const std::vector<ModelParameters>& { return dpsgd->models(); };
      finished = [&] { return dpsgd->complete(); };
      rounds_now = [&] { return dpsgd->rounds_completed(); };
      dpsgd->start();
      break;
    }
    case Algorithm::Gl: {
      baselines::GlConfig gc{config.gl_timeout, seed};
      gl = std::make_unique<baselines::GlSimulation>(membership, gc, tc.local_steps, sim, ledger, trainer, initial);
      node_models = [&]() -> const std::vector<ModelParameters>& { return gl->models(); };
      finished = [] { return false; };
      rounds_now = [] { return std::uint64_t{0}; };
      gl->start();
      break;
    }
  }

  // Node-model algorithms are evaluated on a virtual-time cadence by
  // observer events, which never enter the event digest.
  std::function<void()> eval_tick;
  auto evaluate_nodes = [&] {
    const auto ms = evaluate_all(st.spec, node_models(), st.eval_set);
    ledger.record_accuracy(sim.now(), rounds_now(), ms.mean, ms.std);
    return ms.mean;
  };
  if (node_models) {
    eval_tick = [&] {
      if (finished()) return;
      if (reached_stop(evaluate_nodes())) {
        sim.stop();
        return;
      }
      sim.timer(simnet::Simulator::kNoNode, config.eval_every, eval_tick, true);
    };
    sim.timer(simnet::Simulator::kNoNode, config.eval_every, eval_tick, true);
  }

  sim.run(limit);

  if (node_models) {
    const auto& acc = ledger.accuracy_timeline();
    if (acc.empty() || acc.back().time_s < sim.now()) evaluate_nodes();
  }
  if (plexus) rounds_completed = plexus->rounds_completed();
  if (fl) rounds_completed = fl->rounds_completed();
  if (dpsgd) rounds_completed = dpsgd->rounds_completed();

  res.repetition = r;
  res.seed = seed;
  res.accuracy = ledger.accuracy_timeline();
  res.ledger = ledger.ledger_timeline();
  res.rounds = ledger.rounds();
  res.bytes_total = ledger.bytes_total();
  res.train_seconds_total = ledger.train_seconds_total();
  res.trainings = ledger.trainings_total();
  res.late_models = ledger.late_models();
  res.aggregated_models = ledger.aggregated_models();
  res.rounds_completed = rounds_completed;
  res.final_time = sim.now();
  res.final_accuracy = res.accuracy.back().accuracy;
  res.timeline_digest = sim.timeline_digest();
  res.events = sim.events_processed();
  return res;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult out{config, {}};
  for (std::size_t r = 0; r < config.repetitions; ++r) out.repetitions.push_back(run_repetition(config, r));
  return out;
}

void write_repetition(const std::filesystem::path& dir, const RepetitionResult& rep) {
  std::filesystem::create_directories(dir);
  using csv::format_double;
  std::string acc = "time_s,round,accuracy,accuracy_std\n";
  for (const auto& p : rep.accuracy) {
    acc += format_double(p.time_s) + "," + std::to_string(p.round) + "," + format_double(p.accuracy) + "," +
           format_double(p.accuracy_std) + "\n";
  }
  std::string led = "time_s,bytes_total,train_seconds_total\n";
  for (const auto& p : rep.ledger) {
    led += format_double(p.time_s) + "," + std::to_string(p.bytes_total) + "," + format_double(p.train_seconds_total) +
           "\n";
  }
  std::string rounds = "round,duration_s,participants,models_aggregated,late_models\n";
  for (const auto& r : rep.rounds) {
    rounds += std::to_string(r.round) + "," + format_double(r.duration_s) + "," + std::to_string(r.participants) +
              "," + std::to_string(r.models_aggregated) + "," + std::to_string(r.late_models) + "\n";
  }
  write_text(dir / "accuracy.csv", acc);
  write_text(dir / "ledger.csv", led);
  write_text(dir / "rounds.csv", rounds);
}

std::string summary_json(const ExperimentResult& result) {
  using nlohmann::json;
  const auto& cfg = result.config;
  json reps = json::array();
  std::map<std::string, std::vector<std::optional<double>>> per_metric;
  std::vector<std::optional<double>> finals, bytes, trains, mean_round;
  for (const auto& rep : result.repetitions) {
    json j;
    j["repetition"] = rep.repetition;
    j["seed"] = rep.seed;
    j["final_time_s"] = rep.final_time;
    j["final_accuracy"] = rep.final_accuracy;
    j["bytes_total"] = rep.bytes_total;
    j["train_seconds_total"] = rep.train_seconds_total;
    j["trainings"] = rep.trainings;
    j["rounds_completed"] = rep.rounds_completed;
    j["late_models"] = rep.late_models;
    j["aggregated_models"] = rep.aggregated_models;
    finals.emplace_back(rep.final_accuracy);
    bytes.emplace_back(static_cast<double>(rep.bytes_total));
    trains.emplace_back(rep.train_seconds_total);
    if (!rep.rounds.empty()) {
      const auto st = round_duration_stats(rep.rounds);
      j["round_durations"] = {{"count", st.count}, {"mean", st.mean}, {"std", st.std}, {"p50", st.p50},
                              {"p95", st.p95},     {"max", st.max},   {"histogram_edges", st.histogram.edges},
                              {"histogram_counts", st.histogram.counts}};
      mean_round.emplace_back(st.mean);
    } else {
      mean_round.emplace_back(std::nullopt);
    }
    json targets = json::object();
    for (double t : cfg.targets) {
      const auto key = csv::format_double(t);
      const auto a = tta(rep.accuracy, t), c = cta(rep.accuracy, t), rr = rta(rep.accuracy, t);
      targets[key] = {{"tta_s", opt(a)}, {"cta_bytes", opt(c)}, {"rta_s", opt(rr)}};
      per_metric[key + "/tta_s"].push_back(a);
      per_metric[key + "/cta_bytes"].push_back(c);
      per_metric[key + "/rta_s"].push_back(rr);
    }
    j["targets"] = targets;
    reps.push_back(j);
  }

  auto mean_json = [](const std::vector<std::optional<double>>& v) {
    const auto m = mean_over_seeds(v);
    return json{{"mean", opt(m.mean)}, {"reached", m.reached}, {"runs", m.total}};
  };
  json mean;
  mean["final_accuracy"] = mean_json(finals);
  mean["bytes_total"] = mean_json(bytes);
  mean["train_seconds_total"] = mean_json(trains);
  mean["mean_round_duration_s"] = mean_json(mean_round);
  json notes = json::array();
  json targets = json::object();
  for (double t : cfg.targets) {
    const auto key = csv::format_double(t);
    json tj;
    for (const char* metric : {"tta_s", "cta_bytes", "rta_s"}) {
      const auto& vals = per_metric[key + "/" + metric];
      tj[metric] = mean_json(vals);
    }
    const auto reached = mean_over_seeds(per_metric[key + "/tta_s"]).reached;
    if (reached < result.repetitions.size()) {
      notes.push_back("target " + key + " not reached in " + std::to_string(result.repetitions.size() - reached) +
                      " of " + std::to_string(result.repetitions.size()) + " runs; excluded from the mean");
    }
    targets[key] = tj;
  }
  mean["targets"] = targets;

  json root;
  root["name"] = cfg.name;
  root["algorithm"] = to_string(cfg.algorithm);
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(cfg.hash()));
  root["config_hash"] = hash;
  root["repetitions"] = reps;
  root["mean"] = mean;
  root["notes"] = notes;
  return root.dump(2) + "\n";
}

void write_experiment(const std::filesystem::path& dir, const ExperimentResult& result) {
  std::filesystem::create_directories(dir);
  for (const auto& rep : result.repetitions) write_repetition(dir / ("rep" + std::to_string(rep.repetition)), rep);
  write_text(dir / "summary.json", summary_json(result));
  write_text(dir / "config.txt", result.config.canonical());
}

std::filesystem::path output_root() {
  if (const char* env = std::getenv("PLEXUS_OUT"); env != nullptr && *env != '\0') return env;
  return "runs";
}

}  // namespace plexus::experiments
