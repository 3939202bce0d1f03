#include "plexus_cli/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <map>
#include <sstream>

#include "plexus/core/csv.hpp"
#include "plexus/core/errors.hpp"
#include "plexus/experiments/analysis.hpp"
#include "plexus/experiments/config.hpp"
#include "plexus/experiments/runner.hpp"
#include "plexus/sampler/sampler.hpp"
#include "plexus/simnet/traces.hpp"

namespace plexus::cli {
namespace {

namespace fs = std::filesystem;
using experiments::ExperimentConfig;

std::pair<std::string, std::string> split_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

ExperimentConfig load_with_overrides(const std::string& path, const std::vector<std::string>& overrides) {
  if (!fs::exists(path)) throw ConfigError("config not found: " + path);
  auto config = experiments::load_config(path);
  for (const auto& o : overrides) {
    auto [k, v] = split_assignment(o);
    experiments::set_option(config, k, v);
  }
  return config;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw LoadError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_run(std::ostream& out, const experiments::ExperimentResult& result, const fs::path& dir) {
  for (const auto& rep : result.repetitions) {
    out << "rep " << rep.repetition << ": seed " << rep.seed << ", " << rep.rounds_completed << " rounds, t="
        << csv::format_double(rep.final_time) << " s, accuracy " << csv::format_double(rep.final_accuracy)
        << ", bytes " << rep.bytes_total << ", train_s " << csv::format_double(rep.train_seconds_total) << "\n";
  }
  out << "wrote " << dir.string() << "\n";
}

int cmd_run(const std::string& path, const std::vector<std::string>& overrides, const std::string& out_dir,
            bool validate_only, std::ostream& out) {
  auto config = load_with_overrides(path, overrides);
  config.validate();
  if (validate_only) {
    out << config.canonical();
    return 0;
  }
  const fs::path dir = out_dir.empty() ? experiments::output_root() / config.name : fs::path(out_dir);
  const auto result = experiments::run_experiment(config);
  experiments::write_experiment(dir, result);
  print_run(out, result, dir);
  return 0;
}

int cmd_sample(const std::string& path, const std::vector<std::string>& overrides, std::uint64_t round,
               std::ostream& out) {
  auto config = load_with_overrides(path, overrides);
  config.validate();
  const auto latency = experiments::experiment_latency(config);
  const auto membership = experiments::experiment_membership(config, latency);
  const auto sample = sampler::sample_with_aggregator(RoundNumber(round), config.s, membership);
  out << "round " << round << "\n";
  out << "sample";
  for (const auto& id : sample.participants) out << " " << id.str();
  out << "\naggregator " << sample.aggregator->str() << "\n";
  return 0;
}

int cmd_sweep(const std::string& path, const std::vector<std::string>& overrides, const std::string& axis,
              const std::string& out_dir, std::ostream& out) {
  auto base = load_with_overrides(path, overrides);
  auto [key, values] = split_assignment(axis);
  const fs::path root = out_dir.empty() ? experiments::output_root() / (base.name + "_sweep_" + key) : fs::path(out_dir);
  for (const auto& raw : csv::split_line(values)) {
    const std::string v(csv::trim(raw));
    auto config = base;
    experiments::set_option(config, key, v);
    experiments::set_option(config, "name", base.name + "_" + key + v);
    config.validate();
  }
  out << "key,value,mean_round_duration_s,final_accuracy,bytes_total,train_seconds_total\n";
  for (const auto& raw : csv::split_line(values)) {
    const std::string v(csv::trim(raw));
    auto config = base;
    experiments::set_option(config, key, v);
    experiments::set_option(config, "name", base.name + "_" + key + v);
    const auto result = experiments::run_experiment(config);
    experiments::write_experiment(root / config.name, result);
    double mean_round = 0.0, acc = 0.0, bytes = 0.0, train = 0.0;
    for (const auto& rep : result.repetitions) {
      if (!rep.rounds.empty()) mean_round += experiments::round_duration_stats(rep.rounds).mean;
      acc += rep.final_accuracy;
      bytes += static_cast<double>(rep.bytes_total);
      train += rep.train_seconds_total;
    }
    const double r = static_cast<double>(result.repetitions.size());
    out << key << "," << v << "," << csv::format_double(mean_round / r) << "," << csv::format_double(acc / r) << ","
        << csv::format_double(bytes / r) << "," << csv::format_double(train / r) << "\n";
  }
  return 0;
}

int cmd_traces_gen(std::size_t nodes, std::size_t cities, std::uint64_t seed, const std::string& out_dir,
                   const std::vector<std::string>& params, std::ostream& out) {
  simnet::ProfileGenParams p;
  for (const auto& a : params) {
    auto [k, v] = split_assignment(a);
    const double x = csv::parse_double(v, k);
    if (k == "uplink_median_bps") p.uplink_median_bps = x;
    else if (k == "uplink_sigma") p.uplink_sigma = x;
    else if (k == "downlink_ratio_median") p.downlink_ratio_median = x;
    else if (k == "downlink_ratio_sigma") p.downlink_ratio_sigma = x;
    else if (k == "step_median_s") p.step_median_s = x;
    else if (k == "step_sigma") p.step_sigma = x;
    else throw ConfigError("unknown profile parameter '" + k + "'");
  }
  const fs::path dir = out_dir;
  fs::create_directories(dir);
  simnet::save_profiles(dir / "profiles.csv", simnet::generate_profiles(nodes, seed, p));
  simnet::save_latency_matrix(dir / "latency.csv", simnet::generate_latency_matrix(cities, seed));
  out << "wrote " << (dir / "profiles.csv").string() << " and " << (dir / "latency.csv").string() << "\n";
  return 0;
}

// Bytes and training seconds at each evaluation: the last ledger row at or
// before the evaluation time.
struct CurveRow {
  double time, accuracy, accuracy_std;
  std::string bytes, train;
};

std::vector<CurveRow> curve(const fs::path& rep_dir) {
  auto rows = [](const std::string& text) {
    std::vector<std::vector<std::string>> out;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line))
      if (!line.empty()) out.push_back(csv::split_line(line));
    return out;
  };
  const auto acc = rows(read_file(rep_dir / "accuracy.csv"));
  const auto led = rows(read_file(rep_dir / "ledger.csv"));
  std::vector<CurveRow> result;
  std::size_t j = 0;
  std::string bytes = "0", train = "0";
  for (const auto& a : acc) {
    const double t = csv::parse_double(a.at(0), "accuracy.csv");
    while (j < led.size() && csv::parse_double(led[j].at(0), "ledger.csv") <= t) {
      bytes = led[j].at(1);
      train = led[j].at(2);
      ++j;
    }
    result.push_back({t, csv::parse_double(a.at(2), "accuracy.csv"), csv::parse_double(a.at(3), "accuracy.csv"),
                      bytes, train});
  }
  return result;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& out_dir, std::ostream& out) {
  std::ostringstream table, curves;
  table << "name,algorithm,target,tta_s,cta_bytes,rta_s,reached,runs,final_accuracy\n";
  curves << "name,algorithm,repetition,time_s,bytes_total,train_seconds_total,accuracy,accuracy_std\n";
  auto cell = [](const nlohmann::json& j) { return j.is_null() ? std::string("") : csv::format_double(j.get<double>()); };
  for (const auto& d : dirs) {
    const fs::path dir = d;
    if (!fs::exists(dir / "summary.json")) throw LoadError("summary.json not found in " + dir.string());
    const auto summary = nlohmann::json::parse(read_file(dir / "summary.json"));
    const std::string name = summary.at("name"), algorithm = summary.at("algorithm");
    const auto& mean = summary.at("mean");
    for (const auto& [target, m] : mean.at("targets").items()) {
      table << name << "," << algorithm << "," << target << "," << cell(m.at("tta_s").at("mean")) << ","
            << cell(m.at("cta_bytes").at("mean")) << "," << cell(m.at("rta_s").at("mean")) << ","
            << m.at("tta_s").at("reached").get<std::size_t>() << "," << m.at("tta_s").at("runs").get<std::size_t>()
            << "," << cell(mean.at("final_accuracy").at("mean")) << "\n";
    }
    for (const auto& rep : summary.at("repetitions")) {
      const auto r = rep.at("repetition").get<std::size_t>();
      for (const auto& row : curve(dir / ("rep" + std::to_string(r)))) {
        curves << name << "," << algorithm << "," << r << "," << csv::format_double(row.time) << "," << row.bytes
               << "," << row.train << "," << csv::format_double(row.accuracy) << ","
               << csv::format_double(row.accuracy_std) << "\n";
      }
    }
  }
  if (out_dir.empty()) {
    out << table.str();
    return 0;
  }
  fs::create_directories(out_dir);
  std::ofstream(fs::path(out_dir) / "report.csv", std::ios::binary) << table.str();
  std::ofstream(fs::path(out_dir) / "curves.csv", std::ios::binary) << curves.str();
  out << table.str();
  out << "wrote " << (fs::path(out_dir) / "report.csv").string() << " and "
      << (fs::path(out_dir) / "curves.csv").string() << "\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Serverless federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, axis;
  std::vector<std::string> overrides, params, dirs;
  bool validate_only = false;
  std::uint64_t round = 1, seed = 1;
  std::size_t nodes = 100, cities = 20;

  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write its metrics");
  run_cmd->add_option("config", config_path, "Config file")->required();
  run_cmd->add_option("--set", overrides, "Override a config key (key=value)");
  run_cmd->add_option("--out", out_dir, "Output directory (default $PLEXUS_OUT/<name>)");
  run_cmd->add_flag("--validate", validate_only, "Check the config and print its canonical form");

  auto* sample_cmd = app.add_subcommand("sample", "Print the sample and aggregator of a round");
  sample_cmd->add_option("config", config_path, "Config file")->required();
  sample_cmd->add_option("--round", round, "Round number (>= 1)")->required()->check(CLI::PositiveNumber);
  sample_cmd->add_option("--set", overrides, "Override a config key (key=value)");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run one experiment per value of a config key");
  sweep_cmd->add_option("config", config_path, "Config file")->required();
  sweep_cmd->add_option("axis", axis, "key=v1,v2,...")->required();
  sweep_cmd->add_option("--set", overrides, "Override a config key (key=value)");
  sweep_cmd->add_option("--out", out_dir, "Output directory");

  auto* traces_cmd = app.add_subcommand("traces-gen", "Synthesize device profile and latency traces");
  traces_cmd->add_option("--nodes", nodes, "Number of device profiles")->check(CLI::PositiveNumber);
  traces_cmd->add_option("--cities", cities, "Number of cities")->check(CLI::PositiveNumber);
  traces_cmd->add_option("--seed", seed, "Generator seed");
  traces_cmd->add_option("--param", params, "Profile generator parameter (key=value)");
  traces_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* report_cmd = app.add_subcommand("report", "Tabulate TTA/CTA/RTA and emit plot data");
  report_cmd->add_option("dirs", dirs, "Experiment output directories")->required();
  report_cmd->add_option("--out", out_dir, "Write report.csv and curves.csv here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "plexus: error[usage]: " << e.what() << "\n";
    CLI::App* shown = &app;
    for (auto* sub : app.get_subcommands()) shown = sub;
    err << shown->help();
    return 2;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(config_path, overrides, out_dir, validate_only, out);
    if (sample_cmd->parsed()) return cmd_sample(config_path, overrides, round, out);
    if (sweep_cmd->parsed()) return cmd_sweep(config_path, overrides, axis, out_dir, out);
    if (traces_cmd->parsed()) return cmd_traces_gen(nodes, cities, seed, out_dir, params, out);
    if (report_cmd->parsed()) return cmd_report(dirs, out_dir, out);
  } catch (const Error& e) {
    err << "plexus: error[" << e.category() << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "plexus: error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace plexus::cli
