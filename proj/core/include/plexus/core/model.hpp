#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace plexus {

/// Flat parameter vector exchanged and aggregated between nodes. `age` counts
/// local updates and is only meaningful to Gossip Learning.
class ModelParameters {
 public:
  explicit ModelParameters(std::vector<double> values, std::uint64_t age = 0);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::uint64_t age() const noexcept { return age_; }

  ModelParameters with_age(std::uint64_t age) const { return ModelParameters(values_, age); }

  bool operator==(const ModelParameters&) const = default;

 private:
  std::vector<double> values_;
  std::uint64_t age_;
};

/// Element-wise unweighted mean. The result is bit-identical under any
/// permutation of the inputs and each coordinate stays within the input range.
ModelParameters average_models(std::span<const ModelParameters> models);

/// Wire size: 8 bytes per parameter plus a 16-byte header.
std::uint64_t model_size_bytes(const ModelParameters& model) noexcept;

inline constexpr std::uint64_t kModelHeaderBytes = 16;

}  // namespace plexus
