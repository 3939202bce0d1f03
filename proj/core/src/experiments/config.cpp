#include "plexus/experiments/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "plexus/core/csv.hpp"
#include "plexus/core/errors.hpp"
#include "plexus/core/rng.hpp"

namespace plexus::experiments {
namespace {

using learning::ModelFamily;
using learning::PartitionScheme;

struct Field {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

double to_double(const std::string& key, const std::string& v) {
  try {
    return csv::parse_double(v, key);
  } catch (const Error&) {
    throw ConfigError("bad value for " + key + ": '" + v + "'");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::int64_t x = 0;
  try {
    x = csv::parse_int(v, key);
  } catch (const Error&) {
    throw ConfigError("bad value for " + key + ": '" + v + "'");
  }
  if (x < 0) throw ConfigError(key + " must be non-negative");
  return static_cast<std::uint64_t>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("bad value for " + key + ": '" + v + "'");
}

std::string fmt(double v) { return csv::format_double(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

template <typename T>
Field num(T ExperimentConfig::*member) {
  return {[member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return fmt(c.*member);
            else return fmt(static_cast<std::uint64_t>(c.*member));
          },
          [member](ExperimentConfig& c, const std::string& v) {
            if constexpr (std::is_floating_point_v<T>) c.*member = to_double("value", v);
            else c.*member = static_cast<T>(to_uint("value", v));
          }};
}

// Nested numeric fields.
template <typename S, typename T>
Field nested(S ExperimentConfig::*outer, T S::*inner) {
  return {[outer, inner](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return fmt((c.*outer).*inner);
            else return fmt(static_cast<std::uint64_t>((c.*outer).*inner));
          },
          [outer, inner](ExperimentConfig& c, const std::string& v) {
            if constexpr (std::is_floating_point_v<T>) (c.*outer).*inner = to_double("value", v);
            else (c.*outer).*inner = static_cast<T>(to_uint("value", v));
          }};
}

Field path_field(std::filesystem::path ExperimentConfig::*member) {
  return {[member](const ExperimentConfig& c) { return (c.*member).generic_string(); },
          [member](ExperimentConfig& c, const std::string& v) { c.*member = v; }};
}

template <typename E>
Field choice(E ExperimentConfig::*member, std::vector<std::pair<std::string, E>> names) {
  return {[member, names](const ExperimentConfig& c) {
            for (const auto& [n, e] : names)
              if (e == c.*member) return n;
            return std::string("?");
          },
          [member, names](ExperimentConfig& c, const std::string& v) {
            for (const auto& [n, e] : names) {
              if (n == v) {
                c.*member = e;
                return;
              }
            }
            std::string allowed;
            for (const auto& [n, e] : names) allowed += (allowed.empty() ? "" : "|") + n;
            throw ConfigError("bad value '" + v + "', expected " + allowed);
          }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["name"] = {[](const ExperimentConfig& c) { return c.name; },
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v.empty() || v.find_first_of("/\\ ") != std::string::npos)
                     throw ConfigError("name must be non-empty without slashes or spaces");
                   c.name = v;
                 }};
    t["algorithm"] = choice(&ExperimentConfig::algorithm, {{"plexus", Algorithm::Plexus},
                                                           {"fl", Algorithm::Fl},
                                                           {"dpsgd", Algorithm::Dpsgd},
                                                           {"gl", Algorithm::Gl}});
    t["topology"] = choice(&ExperimentConfig::topology,
                           {{"regular", DpsgdTopology::Regular}, {"one_peer_exp", DpsgdTopology::OnePeerExponential}});
    t["degree"] = num(&ExperimentConfig::degree);
    t["n"] = num(&ExperimentConfig::n);
    t["s"] = num(&ExperimentConfig::s);
    t["sf"] = num(&ExperimentConfig::sf);
    t["shared_init"] = {[](const ExperimentConfig& c) { return fmt(c.shared_init); },
                        [](ExperimentConfig& c, const std::string& v) { c.shared_init = to_bool("shared_init", v); }};
    t["gl_timeout"] = num(&ExperimentConfig::gl_timeout);
    t["fl_server_city"] = num(&ExperimentConfig::fl_server_city);

    t["model"] = {[](const ExperimentConfig& c) {
                    return std::string(c.model.family == ModelFamily::Linear ? "linear" : "mlp");
                  },
                  [](ExperimentConfig& c, const std::string& v) {
                    if (v == "linear") c.model.family = ModelFamily::Linear;
                    else if (v == "mlp") c.model.family = ModelFamily::Mlp;
                    else throw ConfigError("bad value '" + v + "', expected linear|mlp");
                  }};
    t["hidden"] = nested(&ExperimentConfig::model, &learning::ModelSpec::hidden);
    t["eta"] = nested(&ExperimentConfig::trainer, &learning::TrainerConfig::eta);
    t["momentum"] = nested(&ExperimentConfig::trainer, &learning::TrainerConfig::momentum);
    t["batch_size"] = nested(&ExperimentConfig::trainer, &learning::TrainerConfig::batch_size);
    t["local_steps"] = nested(&ExperimentConfig::trainer, &learning::TrainerConfig::local_steps);

    t["partition"] = {[](const ExperimentConfig& c) -> std::string {
                        switch (c.partition.kind) {
                          case PartitionScheme::Kind::Iid: return "iid";
                          case PartitionScheme::Kind::Dirichlet: return "dirichlet";
                          case PartitionScheme::Kind::LabelShards: return "shards";
                        }
                        return "?";
                      },
                      [](ExperimentConfig& c, const std::string& v) {
                        if (v == "iid") c.partition.kind = PartitionScheme::Kind::Iid;
                        else if (v == "dirichlet") c.partition.kind = PartitionScheme::Kind::Dirichlet;
                        else if (v == "shards") c.partition.kind = PartitionScheme::Kind::LabelShards;
                        else throw ConfigError("bad value '" + v + "', expected iid|dirichlet|shards");
                      }};
    t["alpha"] = nested(&ExperimentConfig::partition, &PartitionScheme::alpha);
    t["shards_per_node"] = nested(&ExperimentConfig::partition, &PartitionScheme::shards_per_node);

    t["dataset_path"] = path_field(&ExperimentConfig::dataset_path);
    t["samples"] = nested(&ExperimentConfig::synth, &learning::SynthParams::n_samples);
    t["features"] = nested(&ExperimentConfig::synth, &learning::SynthParams::d_in);
    t["classes"] = nested(&ExperimentConfig::synth, &learning::SynthParams::classes);
    t["label_noise"] = nested(&ExperimentConfig::synth, &learning::SynthParams::noise);
    t["separation"] = nested(&ExperimentConfig::synth, &learning::SynthParams::separation);

    t["dataset_seed"] = num(&ExperimentConfig::dataset_seed);
    t["protocol_seed"] = num(&ExperimentConfig::protocol_seed);
    t["trace_seed"] = num(&ExperimentConfig::trace_seed);

    t["profiles_path"] = path_field(&ExperimentConfig::profiles_path);
    t["uplink_median_bps"] = nested(&ExperimentConfig::profile_gen, &simnet::ProfileGenParams::uplink_median_bps);
    t["uplink_sigma"] = nested(&ExperimentConfig::profile_gen, &simnet::ProfileGenParams::uplink_sigma);
    t["downlink_ratio_median"] =
        nested(&ExperimentConfig::profile_gen, &simnet::ProfileGenParams::downlink_ratio_median);
    t["downlink_ratio_sigma"] = nested(&ExperimentConfig::profile_gen, &simnet::ProfileGenParams::downlink_ratio_sigma);
    t["step_median_s"] = nested(&ExperimentConfig::profile_gen, &simnet::ProfileGenParams::step_median_s);
    t["step_sigma"] = nested(&ExperimentConfig::profile_gen, &simnet::ProfileGenParams::step_sigma);
    t["latency"] = choice(&ExperimentConfig::latency, {{"generated", LatencySource::Generated},
                                                       {"uniform", LatencySource::Uniform},
                                                       {"file", LatencySource::File}});
    t["latency_path"] = path_field(&ExperimentConfig::latency_path);
    t["cities"] = num(&ExperimentConfig::cities);
    t["uniform_rtt_ms"] = num(&ExperimentConfig::uniform_rtt_ms);

    t["max_hours"] = num(&ExperimentConfig::max_hours);
    t["max_rounds"] = num(&ExperimentConfig::max_rounds);
    t["eval_every"] = num(&ExperimentConfig::eval_every);
    t["eval_samples"] = num(&ExperimentConfig::eval_samples);
    t["stop_accuracy"] = {[](const ExperimentConfig& c) {
                            return c.stop_accuracy ? fmt(*c.stop_accuracy) : std::string("none");
                          },
                          [](ExperimentConfig& c, const std::string& v) {
                            if (v == "none") c.stop_accuracy.reset();
                            else c.stop_accuracy = to_double("stop_accuracy", v);
                          }};
    t["targets"] = {[](const ExperimentConfig& c) {
                      std::string out;
                      for (double x : c.targets) out += (out.empty() ? "" : ",") + fmt(x);
                      return out;
                    },
                    [](ExperimentConfig& c, const std::string& v) {
                      c.targets.clear();
                      for (const auto& part : csv::split_line(v)) {
                        c.targets.push_back(to_double("targets", std::string(csv::trim(part))));
                      }
                    }};
    t["repetitions"] = num(&ExperimentConfig::repetitions);
    return t;
  }();
  return table;
}

}  // namespace

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Plexus: return "plexus";
    case Algorithm::Fl: return "fl";
    case Algorithm::Dpsgd: return "dpsgd";
    case Algorithm::Gl: return "gl";
  }
  return "?";
}

void set_option(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown key '" + key + "'");
  try {
    it->second.set(config, value);
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

void ExperimentConfig::validate(bool check_paths) const {
  if (n < 2) throw ConfigError("n must be at least 2");
  if (s == 0) throw ConfigError("s must be positive");
  if (s > n) throw ConfigError("s must not exceed n");
  if (!(sf > 0.0 && sf <= 1.0)) throw ConfigError("sf must be in (0, 1]");
  if (static_cast<std::size_t>(static_cast<double>(s) * sf) < 1) throw ConfigError("floor(s * sf) must be at least 1");
  if (algorithm == Algorithm::Dpsgd && topology == DpsgdTopology::Regular) {
    if (degree == 0 || degree >= n) throw ConfigError("degree must be in [1, n)");
    if ((degree * n) % 2 != 0) throw ConfigError("degree * n must be even");
  }
  if (!(gl_timeout > 0.0)) throw ConfigError("gl_timeout must be positive");
  if (model.family == learning::ModelFamily::Mlp && model.hidden == 0) throw ConfigError("mlp needs hidden > 0");
  try {
    trainer.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (partition.kind == PartitionScheme::Kind::Dirichlet && !(partition.alpha > 0.0))
    throw ConfigError("alpha must be positive");
  if (partition.kind == PartitionScheme::Kind::LabelShards && partition.shards_per_node == 0)
    throw ConfigError("shards_per_node must be positive");
  if (dataset_path.empty()) {
    if (synth.classes < 2) throw ConfigError("classes must be at least 2");
    if (synth.d_in == 0) throw ConfigError("features must be positive");
    if (synth.n_samples < 10 * synth.classes) throw ConfigError("samples must be at least 10 * classes");
    if (synth.n_samples * 4 / 5 < n) throw ConfigError("training set smaller than n");
    if (!(synth.noise >= 0.0 && synth.noise < 1.0)) throw ConfigError("label_noise must be in [0, 1)");
    if (!(synth.separation > 0.0)) throw ConfigError("separation must be positive");
  }
  if (latency == LatencySource::Generated && cities == 0) throw ConfigError("cities must be positive");
  if (latency == LatencySource::Uniform && !(uniform_rtt_ms >= 0.0)) throw ConfigError("uniform_rtt_ms must be >= 0");
  if (!(max_hours > 0.0)) throw ConfigError("max_hours must be positive");
  if (max_rounds == 0) throw ConfigError("max_rounds must be positive");
  if (!(eval_every > 0.0)) throw ConfigError("eval_every must be positive");
  if ((algorithm == Algorithm::Plexus || algorithm == Algorithm::Fl) && eval_every != std::floor(eval_every))
    throw ConfigError("eval_every counts rounds for this algorithm and must be an integer");
  if (targets.empty()) throw ConfigError("targets must not be empty");
  for (double t : targets)
    if (!(t > 0.0 && t <= 1.0)) throw ConfigError("target accuracy must be in (0, 1]");
  if (stop_accuracy && !(*stop_accuracy > 0.0 && *stop_accuracy <= 1.0))
    throw ConfigError("stop_accuracy must be in (0, 1]");
  if (repetitions == 0) throw ConfigError("repetitions must be positive");
  const auto p = profile_gen;
  if (!(p.uplink_median_bps > 0 && p.downlink_ratio_median > 0 && p.step_median_s > 0 && p.uplink_sigma >= 0 &&
        p.downlink_ratio_sigma >= 0 && p.step_sigma >= 0))
    throw ConfigError("profile generator parameters must be positive");

  if (check_paths) {
    auto need = [](const std::filesystem::path& path, const char* what) {
      if (!std::filesystem::exists(path)) throw ConfigError(std::string(what) + " not found: " + path.string());
    };
    if (!dataset_path.empty()) need(dataset_path, "dataset");
    if (!profiles_path.empty()) need(profiles_path, "profiles");
    if (latency == LatencySource::File) {
      if (latency_path.empty()) throw ConfigError("latency=file needs latency_path");
      need(latency_path, "latency trace");
    }
  }
}

std::string ExperimentConfig::canonical() const {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(*this) + "\n";
  return out;
}

std::uint64_t ExperimentConfig::hash() const { return hash_tag(canonical()); }

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.erase(hash_pos);
    const auto body = csv::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(csv::trim(body.substr(0, eq)));
    const std::string value(csv::trim(body.substr(eq + 1)));
    if (seen.count(key))
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    seen[key] = line_no;
    try {
      set_option(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!base_dir.empty()) {
    for (auto* p : {&config.dataset_path, &config.profiles_path, &config.latency_path}) {
      if (!p->empty() && p->is_relative()) *p = base_dir / *p;
    }
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config not found: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

}  // namespace plexus::experiments
