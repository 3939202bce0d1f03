#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "plexus/learning/learning.hpp"
#include "plexus/simnet/traces.hpp"

namespace plexus::experiments {

enum class Algorithm { Plexus, Fl, Dpsgd, Gl };
enum class DpsgdTopology { Regular, OnePeerExponential };
enum class LatencySource { Generated, Uniform, File };

const char* to_string(Algorithm a);

/// Everything a run needs. Parsed from `key = value` text; unknown keys are
/// rejected and `canonical()` emits every key in sorted order so equal
/// configs serialize identically.
struct ExperimentConfig {
  std::string name = "experiment";
  Algorithm algorithm = Algorithm::Plexus;
  DpsgdTopology topology = DpsgdTopology::Regular;
  std::size_t degree = 10;

  std::size_t n = 100;
  std::size_t s = 13;
  double sf = 0.8;
  bool shared_init = true;
  double gl_timeout = 60.0;
  std::size_t fl_server_city = 0;

  learning::ModelSpec model{learning::ModelFamily::Linear, 32, 10, 0};
  learning::TrainerConfig trainer{};
  learning::PartitionScheme partition{};

  // Synthetic task unless dataset_path is set.
  std::filesystem::path dataset_path;
  learning::SynthParams synth{};

  std::uint64_t dataset_seed = 1;
  std::uint64_t protocol_seed = 1;
  std::uint64_t trace_seed = 1;

  std::filesystem::path profiles_path;  // generated when empty
  simnet::ProfileGenParams profile_gen{};
  LatencySource latency = LatencySource::Generated;
  std::filesystem::path latency_path;
  std::size_t cities = 20;
  double uniform_rtt_ms = 0.0;

  double max_hours = 50.0;
  std::uint64_t max_rounds = 100;
  double eval_every = 1.0;  // rounds for Plexus/FL, virtual seconds for D-PSGD/GL
  std::size_t eval_samples = 0;  // test rows used per evaluation, 0 = all
  std::optional<double> stop_accuracy;
  std::vector<double> targets{0.85};
  std::size_t repetitions = 1;

  /// Cross-field checks; throws ConfigError. With `check_paths`, referenced
  /// files must exist.
  void validate(bool check_paths = true) const;

  std::string canonical() const;
  std::uint64_t hash() const;
};

/// Applies one `key=value` assignment; throws ConfigError on unknown keys
/// or malformed values.
void set_option(ExperimentConfig& config, const std::string& key, const std::string& value);

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
/// Relative trace and dataset paths resolve against the config's directory.
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace plexus::experiments
