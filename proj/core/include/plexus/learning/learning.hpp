#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "plexus/core/model.hpp"
#include "plexus/core/rng.hpp"
#include "plexus/core/types.hpp"

namespace plexus::learning {

enum class ModelFamily { Linear, Mlp };
enum class LossKind { CrossEntropy, Squared };

/// Shape of the model family. Linear is multinomial logistic regression
/// (W: classes x d_in, b: classes); Mlp adds one ReLU hidden layer.
struct ModelSpec {
  ModelFamily family = ModelFamily::Linear;
  std::size_t d_in = 0;
  std::size_t classes = 0;
  std::size_t hidden = 0;

  std::size_t param_count() const;
  void validate() const;
};

struct Dataset {
  std::size_t d_in = 0;
  std::vector<double> features;  // row-major, size() x d_in
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * d_in, d_in}; }
  int num_classes() const;
  Dataset subset(std::span<const std::size_t> indices) const;
};

struct TrainerConfig {
  double eta = 0.05;
  double momentum = 0.0;
  std::uint32_t batch_size = 20;
  std::uint32_t local_steps = 5;
  LossKind loss = LossKind::CrossEntropy;

  void validate() const;
};

ModelParameters init_model(const ModelSpec& spec, std::uint64_t seed);

struct LossAndGradient {
  double loss;
  std::vector<double> gradient;
};

/// Mean loss and its gradient over the selected rows.
LossAndGradient loss_and_gradient(const ModelSpec& spec, std::span<const double> params, const Dataset& data,
                                  std::span<const std::size_t> rows, LossKind loss);

double mean_loss(const ModelSpec& spec, const ModelParameters& model, const Dataset& data, LossKind loss);

/// `local_steps` minibatch SGD steps with a momentum buffer that starts at
/// zero on every call. Batches are drawn without replacement when the shard
/// has at least `batch_size` rows, with replacement otherwise.
ModelParameters local_train(const ModelSpec& spec, const ModelParameters& model, const Dataset& shard,
                            const TrainerConfig& config, Rng& rng);

/// Top-1 accuracy in [0, 1].
double evaluate(const ModelSpec& spec, const ModelParameters& model, const Dataset& test);

struct SynthParams {
  std::uint64_t seed = 1;
  std::size_t n_samples = 20000;
  std::size_t d_in = 32;
  std::size_t classes = 10;
  double noise = 0.0;        // label-flip probability
  double separation = 1.0;   // std-dev of class means per dimension
};

struct SplitDataset {
  Dataset train;
  Dataset test;
};

/// Gaussian class-conditional clusters with unit spread around seeded means;
/// labels are balanced, flipped to another class with probability `noise`,
/// and split 80/20 into train and test.
SplitDataset synth_dataset(const SynthParams& params);

/// CSV with columns label,f0,...,f{d_in-1}.
Dataset load_csv_dataset(const std::filesystem::path& path);

/// Seeded 80/20 split of an ingested dataset.
SplitDataset split_dataset(const Dataset& data, std::uint64_t seed);

struct PartitionScheme {
  enum class Kind { Iid, Dirichlet, LabelShards };
  Kind kind = Kind::Iid;
  double alpha = 1.0;
  std::size_t shards_per_node = 1;
};

struct DataPartition {
  NodeId node;
  Dataset data;
  std::vector<std::size_t> indices;  // rows of the training set
  std::uint64_t draw_seed;
};

using Partitioning = std::map<NodeId, DataPartition>;

Partitioning partition(const Dataset& dataset, const Membership& membership, const PartitionScheme& scheme,
                       std::uint64_t seed);

}  // namespace plexus::learning
