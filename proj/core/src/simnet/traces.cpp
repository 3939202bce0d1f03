#include "plexus/simnet/traces.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "plexus/core/csv.hpp"
#include "plexus/core/errors.hpp"
#include "plexus/core/rng.hpp"

namespace plexus::simnet {
namespace {

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw LoadError(std::string(what) + " not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  while (!lines.empty() && csv::trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

}  // namespace

LatencyMatrix LatencyMatrix::uniform(double rtt_ms) {
  return LatencyMatrix{{"city0"}, {rtt_ms}};
}

LatencyMatrix parse_latency_matrix(const std::string& text, const std::string& source) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw LoadError(source + ":1: empty latency trace");
  LatencyMatrix m;
  m.cities = csv::split_line(lines[0]);
  for (const auto& c : m.cities) {
    if (c.empty()) throw LoadError(source + ":1: empty city name");
  }
  const std::size_t n = m.cities.size();
  if (lines.size() - 1 != n)
    throw LoadError(source + ": non-square matrix: " + std::to_string(n) + " cities but " +
                    std::to_string(lines.size() - 1) + " rows");
  m.rtt_ms.reserve(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::string where = source + ":" + std::to_string(r + 2);
    const auto fields = csv::split_line(lines[r + 1]);
    if (fields.size() != n)
      throw LoadError(where + ": non-square matrix: expected " + std::to_string(n) + " entries, got " +
                      std::to_string(fields.size()));
    for (const auto& f : fields) {
      const double v = csv::parse_double(f, where);
      if (!std::isfinite(v)) throw LoadError(where + ": RTT must be finite");
      if (v < 0.0) throw LoadError(where + ": negative RTT");
      m.rtt_ms.push_back(v);
    }
  }
  return m;
}

LatencyMatrix load_latency_matrix(const std::filesystem::path& path) {
  return parse_latency_matrix(read_file(path, "latency trace"), path.string());
}

void save_latency_matrix(const std::filesystem::path& path, const LatencyMatrix& matrix) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write latency trace: " + path.string());
  for (std::size_t i = 0; i < matrix.size(); ++i) out << (i ? "," : "") << matrix.cities[i];
  out << '\n';
  for (std::size_t r = 0; r < matrix.size(); ++r) {
    for (std::size_t c = 0; c < matrix.size(); ++c) {
      out << (c ? "," : "") << csv::format_double(matrix.rtt(r, c));
    }
    out << '\n';
  }
}

LatencyMatrix generate_latency_matrix(std::size_t cities, std::uint64_t seed) {
  if (cities == 0) throw InvalidArgument("need at least one city");
  Rng rng(derive_seed(seed, {hash_tag("latency")}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Point { double x, y, z; };
  std::vector<Point> pts;
  LatencyMatrix m;
  for (std::size_t i = 0; i < cities; ++i) {
    const double z = 2.0 * unit(rng) - 1.0;
    const double phi = 2.0 * std::numbers::pi * unit(rng);
    const double r = std::sqrt(1.0 - z * z);
    pts.push_back({r * std::cos(phi), r * std::sin(phi), z});
    m.cities.push_back(node_name(i, cities).replace(0, 1, "city"));
  }
  constexpr double kEarthRadiusKm = 6371.0;
  constexpr double kFiberKmPerMs = 200.0;
  constexpr double kPathInflation = 1.5;
  constexpr double kBaseRttMs = 4.0;
  m.rtt_ms.resize(cities * cities);
  for (std::size_t a = 0; a < cities; ++a) {
    for (std::size_t b = 0; b < cities; ++b) {
      const double dot = std::clamp(pts[a].x * pts[b].x + pts[a].y * pts[b].y + pts[a].z * pts[b].z, -1.0, 1.0);
      const double km = kEarthRadiusKm * std::acos(dot);
      const double rtt = kBaseRttMs + 2.0 * kPathInflation * km / kFiberKmPerMs;
      m.rtt_ms[a * cities + b] = std::round(rtt * 1000.0) / 1000.0;
    }
  }
  return m;
}

std::vector<std::size_t> assign_cities(const Membership& membership, const LatencyMatrix& matrix) {
  if (matrix.size() == 0) throw InvalidArgument("latency matrix has no cities");
  std::vector<std::size_t> out(membership.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = i % matrix.size();
  return out;
}

Membership with_cities(const Membership& membership, const LatencyMatrix& matrix) {
  const auto cities = assign_cities(membership, matrix);
  auto profiles = membership.profiles();
  for (std::size_t i = 0; i < profiles.size(); ++i) profiles[i].city_index = cities[i];
  return Membership(std::move(profiles));
}

std::vector<DeviceProfile> parse_profiles(const std::string& text, const std::string& source) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw LoadError(source + ":1: empty profile trace");
  const auto header = csv::split_line(lines[0]);
  int col_id = -1, col_up = -1, col_down = -1, col_step = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto& h = header[i];
    int* slot = h == "node_id"              ? &col_id
                : h == "uplink_bps"         ? &col_up
                : h == "downlink_bps"       ? &col_down
                : h == "sec_per_local_step" ? &col_step
                                            : nullptr;
    if (slot == nullptr) throw LoadError(source + ":1: unknown column '" + h + "'");
    if (*slot != -1) throw LoadError(source + ":1: duplicate column '" + h + "'");
    *slot = static_cast<int>(i);
  }
  if (col_id < 0 || col_up < 0 || col_down < 0 || col_step < 0)
    throw LoadError(source + ":1: expected columns node_id,uplink_bps,downlink_bps,sec_per_local_step");

  std::vector<DeviceProfile> out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::string where = source + ":" + std::to_string(r + 1);
    if (csv::trim(lines[r]).empty()) continue;
    const auto f = csv::split_line(lines[r]);
    if (f.size() != header.size()) throw LoadError(where + ": wrong number of fields");
    try {
      DeviceProfile p{NodeId(f[col_id]), csv::parse_double(f[col_up], where),
                      csv::parse_double(f[col_down], where), csv::parse_double(f[col_step], where), 0};
      p.validate();
      out.push_back(std::move(p));
    } catch (const InvalidArgument& e) {
      throw LoadError(where + ": " + e.what());
    }
  }
  return out;
}

std::vector<DeviceProfile> load_profiles(const std::filesystem::path& path) {
  return parse_profiles(read_file(path, "profile trace"), path.string());
}

void save_profiles(const std::filesystem::path& path, const std::vector<DeviceProfile>& profiles) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write profile trace: " + path.string());
  out << "node_id,uplink_bps,downlink_bps,sec_per_local_step\n";
  for (const auto& p : profiles) {
    out << p.node.str() << ',' << csv::format_double(p.uplink_bps) << ','
        << csv::format_double(p.downlink_bps) << ',' << csv::format_double(p.sec_per_local_step) << '\n';
  }
}

std::string node_name(std::size_t index, std::size_t n) {
  std::size_t width = 3;
  for (std::size_t m = n > 0 ? n - 1 : 0; m >= 1000; m /= 10) ++width;
  std::string digits = std::to_string(index);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return "n" + digits;
}

std::vector<DeviceProfile> generate_profiles(std::size_t n, std::uint64_t seed, const ProfileGenParams& params) {
  Rng rng(derive_seed(seed, {hash_tag("profiles")}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto lognormal = [&](double median, double sigma) { return median * std::exp(sigma * gauss(rng)); };
  auto quantize = [](double v, double step) { return std::max(step, std::round(v / step) * step); };

  std::vector<DeviceProfile> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double up = quantize(lognormal(params.uplink_median_bps, params.uplink_sigma), 1.0);
    const double down = quantize(up * lognormal(params.downlink_ratio_median, params.downlink_ratio_sigma), 1.0);
    const double step = quantize(lognormal(params.step_median_s, params.step_sigma), 1.0 / 1024.0);
    out.push_back(DeviceProfile{NodeId(node_name(i, n)), up, down, step, 0});
  }
  return out;
}

double compute_time(const DeviceProfile& profile, std::uint32_t local_steps) {
  if (local_steps == 0) throw InvalidArgument("local_steps must be at least 1");
  return profile.sec_per_local_step * static_cast<double>(local_steps);
}

}  // namespace plexus::simnet
