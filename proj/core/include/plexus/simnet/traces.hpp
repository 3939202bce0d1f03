#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "plexus/core/types.hpp"

namespace plexus::simnet {

/// Pairwise round-trip times between cities, in milliseconds.
struct LatencyMatrix {
  std::vector<std::string> cities;
  std::vector<double> rtt_ms;  // row-major, cities.size() squared

  std::size_t size() const noexcept { return cities.size(); }
  double rtt(std::size_t a, std::size_t b) const { return rtt_ms.at(a * cities.size() + b); }
  /// Half the round trip, in seconds.
  double one_way_seconds(std::size_t a, std::size_t b) const { return rtt(a, b) / 2000.0; }

  /// Single city with the given intra-city RTT.
  static LatencyMatrix uniform(double rtt_ms);
};

// Header row of city names, then one row of RTT milliseconds per city.
LatencyMatrix load_latency_matrix(const std::filesystem::path& path);
LatencyMatrix parse_latency_matrix(const std::string& text, const std::string& source = "<memory>");
void save_latency_matrix(const std::filesystem::path& path, const LatencyMatrix& matrix);

/// Cities scattered uniformly on a sphere; RTT grows with great-circle
/// distance (fiber speed, path inflation) on top of a fixed base delay.
LatencyMatrix generate_latency_matrix(std::size_t cities, std::uint64_t seed);

/// Round-robin city assignment in membership order.
std::vector<std::size_t> assign_cities(const Membership& membership, const LatencyMatrix& matrix);

/// Copy of the membership with city indices filled in round-robin.
Membership with_cities(const Membership& membership, const LatencyMatrix& matrix);

struct ProfileGenParams {
  double uplink_median_bps = 2000.0;
  double uplink_sigma = 0.8;
  double downlink_ratio_median = 3.0;
  double downlink_ratio_sigma = 0.3;
  double step_median_s = 1.0;
  double step_sigma = 0.5;
};

// node_id,uplink_bps,downlink_bps,sec_per_local_step (any column order).
std::vector<DeviceProfile> load_profiles(const std::filesystem::path& path);
std::vector<DeviceProfile> parse_profiles(const std::string& text, const std::string& source = "<memory>");
void save_profiles(const std::filesystem::path& path, const std::vector<DeviceProfile>& profiles);

/// Heterogeneous profiles from seeded log-normal spreads. Node ids are
/// "n" followed by a zero-padded index.
std::vector<DeviceProfile> generate_profiles(std::size_t n, std::uint64_t seed,
                                             const ProfileGenParams& params = {});

std::string node_name(std::size_t index, std::size_t n);

double compute_time(const DeviceProfile& profile, std::uint32_t local_steps);

}  // namespace plexus::simnet
