#include <algorithm>
#include <fstream>
#include <numeric>

#include "plexus/core/csv.hpp"
#include "plexus/core/errors.hpp"
#include "plexus/learning/learning.hpp"

namespace plexus::learning {
namespace {

constexpr int kMaxDealAttempts = 8;

std::vector<std::size_t> shuffled_range(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(idx[i - 1], idx[pick(rng)]);
  }
  return idx;
}

// Equal split sizes; the first (total % parts) parts get one extra item.
std::vector<std::size_t> equal_sizes(std::size_t total, std::size_t parts) {
  std::vector<std::size_t> sizes(parts, total / parts);
  for (std::size_t i = 0; i < total % parts; ++i) ++sizes[i];
  return sizes;
}

std::vector<std::vector<std::size_t>> deal_iid(std::size_t n, std::size_t nodes, Rng& rng) {
  const auto order = shuffled_range(n, rng);
  const auto sizes = equal_sizes(n, nodes);
  std::vector<std::vector<std::size_t>> out(nodes);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < nodes; ++i) {
    out[i].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                  order.begin() + static_cast<std::ptrdiff_t>(pos + sizes[i]));
    pos += sizes[i];
  }
  return out;
}

std::vector<std::vector<std::size_t>> deal_dirichlet(const Dataset& data, std::size_t nodes, double alpha,
                                                     Rng& rng) {
  const int classes = data.num_classes();
  std::vector<std::vector<std::size_t>> pools(classes);
  for (std::size_t i : shuffled_range(data.size(), rng)) pools[data.labels[i]].push_back(i);

  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto sizes = equal_sizes(data.size(), nodes);
  std::vector<std::vector<std::size_t>> out(nodes);
  std::vector<double> mix(classes);
  for (std::size_t node = 0; node < nodes; ++node) {
    for (auto& q : mix) q = gamma(rng);
    for (std::size_t draw = 0; draw < sizes[node]; ++draw) {
      double total = 0.0;
      for (int c = 0; c < classes; ++c) total += pools[c].empty() ? 0.0 : mix[c];
      int chosen = -1;
      if (total > 0.0) {
        double u = unit(rng) * total;
        for (int c = 0; c < classes; ++c) {
          if (pools[c].empty()) continue;
          chosen = c;
          u -= mix[c];
          if (u < 0.0) break;
        }
      } else {
        // The node's mixture has no mass on the classes that are left.
        std::vector<int> left;
        for (int c = 0; c < classes; ++c) {
          if (!pools[c].empty()) left.push_back(c);
        }
        std::uniform_int_distribution<std::size_t> pick(0, left.size() - 1);
        chosen = left[pick(rng)];
      }
      out[node].push_back(pools[chosen].back());
      pools[chosen].pop_back();
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> deal_shards(const Dataset& data, std::size_t nodes, std::size_t per_node,
                                                  Rng& rng) {
  std::vector<std::size_t> by_label(data.size());
  std::iota(by_label.begin(), by_label.end(), 0);
  std::stable_sort(by_label.begin(), by_label.end(),
                   [&](std::size_t a, std::size_t b) { return data.labels[a] < data.labels[b]; });
  const std::size_t shards = nodes * per_node;
  const auto shard_order = shuffled_range(shards, rng);
  std::vector<std::vector<std::size_t>> out(nodes);
  for (std::size_t i = 0; i < shards; ++i) {
    const std::size_t shard = shard_order[i];
    const std::size_t begin = shard * data.size() / shards;
    const std::size_t end = (shard + 1) * data.size() / shards;
    auto& dst = out[i % nodes];
    dst.insert(dst.end(), by_label.begin() + static_cast<std::ptrdiff_t>(begin),
               by_label.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

}  // namespace

int Dataset::num_classes() const {
  int c = 0;
  for (int y : labels) c = std::max(c, y + 1);
  return c;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.d_in = d_in;
  out.features.reserve(indices.size() * d_in);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    const auto r = row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(labels.at(i));
  }
  return out;
}

SplitDataset synth_dataset(const SynthParams& params) {
  if (params.classes < 2) throw InvalidArgument("synthetic task needs at least two classes");
  if (params.d_in == 0) throw InvalidArgument("synthetic task needs d_in >= 1");
  if (params.n_samples < 10 * params.classes) throw InvalidArgument("need at least 10 samples per class");
  if (!(params.noise >= 0.0 && params.noise < 1.0)) throw InvalidArgument("label noise must be in [0, 1)");
  if (!(params.separation > 0.0)) throw InvalidArgument("class separation must be positive");

  Rng rng(derive_seed(params.seed, {hash_tag("synth")}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t d = params.d_in, c = params.classes;

  std::vector<double> means(c * d);
  for (auto& m : means) m = params.separation * gauss(rng);

  Dataset all;
  all.d_in = d;
  all.features.resize(params.n_samples * d);
  all.labels.resize(params.n_samples);
  std::uniform_int_distribution<std::size_t> other(1, c - 1);
  for (std::size_t i = 0; i < params.n_samples; ++i) {
    const std::size_t y = i % c;
    for (std::size_t j = 0; j < d; ++j) all.features[i * d + j] = means[y * d + j] + gauss(rng);
    std::size_t label = y;
    if (params.noise > 0.0 && unit(rng) < params.noise) label = (y + other(rng)) % c;
    all.labels[i] = static_cast<int>(label);
  }

  const auto order = shuffled_range(params.n_samples, rng);
  const std::size_t n_train = params.n_samples * 4 / 5;
  SplitDataset out;
  out.train = all.subset(std::span(order).first(n_train));
  out.test = all.subset(std::span(order).subspan(n_train));
  return out;
}

SplitDataset split_dataset(const Dataset& data, std::uint64_t seed) {
  if (data.size() < 5) throw InvalidArgument("dataset too small to split");
  Rng rng(derive_seed(seed, {hash_tag("split")}));
  const auto order = shuffled_range(data.size(), rng);
  const std::size_t n_train = data.size() * 4 / 5;
  return {data.subset(std::span(order).first(n_train)), data.subset(std::span(order).subspan(n_train))};
}

Dataset load_csv_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("dataset not found: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw LoadError(path.string() + ":1: empty dataset");
  const auto header = csv::split_line(line);
  if (header.size() < 2 || header[0] != "label") throw LoadError(path.string() + ":1: expected label,f0,...");
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j] != "f" + std::to_string(j - 1))
      throw LoadError(path.string() + ":1: unknown column '" + header[j] + "'");
  }
  Dataset out;
  out.d_in = header.size() - 1;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto f = csv::split_line(line);
    if (f.size() != header.size()) throw LoadError(where + ": wrong number of fields");
    const auto label = csv::parse_int(f[0], where);
    if (label < 0) throw LoadError(where + ": negative label");
    out.labels.push_back(static_cast<int>(label));
    for (std::size_t j = 1; j < f.size(); ++j) out.features.push_back(csv::parse_double(f[j], where));
  }
  if (out.size() == 0) throw LoadError(path.string() + ": no data rows");
  return out;
}

Partitioning partition(const Dataset& dataset, const Membership& membership, const PartitionScheme& scheme,
                       std::uint64_t seed) {
  const std::size_t nodes = membership.size();
  if (nodes == 0) throw InvalidArgument("no nodes to partition over");
  if (dataset.size() < nodes) throw InvalidArgument("fewer data points than nodes");
  if (scheme.kind == PartitionScheme::Kind::Dirichlet && !(scheme.alpha > 0.0))
    throw InvalidArgument("dirichlet alpha must be positive");
  if (scheme.kind == PartitionScheme::Kind::LabelShards && scheme.shards_per_node == 0)
    throw InvalidArgument("shards_per_node must be positive");

  for (int attempt = 0; attempt < kMaxDealAttempts; ++attempt) {
    Rng rng(derive_seed(seed, {hash_tag("partition"), static_cast<std::uint64_t>(attempt)}));
    std::vector<std::vector<std::size_t>> dealt;
    switch (scheme.kind) {
      case PartitionScheme::Kind::Iid: dealt = deal_iid(dataset.size(), nodes, rng); break;
      case PartitionScheme::Kind::Dirichlet: dealt = deal_dirichlet(dataset, nodes, scheme.alpha, rng); break;
      case PartitionScheme::Kind::LabelShards:
        dealt = deal_shards(dataset, nodes, scheme.shards_per_node, rng);
        break;
    }
    if (std::any_of(dealt.begin(), dealt.end(), [](const auto& v) { return v.empty(); })) continue;

    Partitioning out;
    for (std::size_t i = 0; i < nodes; ++i) {
      const auto& id = membership.nodes()[i];
      std::sort(dealt[i].begin(), dealt[i].end());
      out.emplace(id, DataPartition{id, dataset.subset(dealt[i]), std::move(dealt[i]),
                                    derive_seed(seed, {hash_tag("draw"), hash_tag(id.str())})});
    }
    return out;
  }
  throw InvalidArgument("partition left a node without data");
}

}  // namespace plexus::learning
