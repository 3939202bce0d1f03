#include "plexus/core/model.hpp"

#include <algorithm>
#include <cmath>

#include "plexus/core/errors.hpp"

namespace plexus {

ModelParameters::ModelParameters(std::vector<double> values, std::uint64_t age)
    : values_(std::move(values)), age_(age) {
  if (values_.empty()) throw InvalidArgument("model dimension must be positive");
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidArgument("model contains a non-finite parameter");
  }
}

ModelParameters average_models(std::span<const ModelParameters> models) {
  if (models.empty()) throw InvalidArgument("nothing to aggregate");
  const std::size_t dim = models.front().dim();
  for (const auto& m : models) {
    if (m.dim() != dim) throw InvalidArgument("heterogeneous model dimensions");
  }

  const double count = static_cast<double>(models.size());
  std::vector<double> column(models.size());
  std::vector<double> out(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t i = 0; i < models.size(); ++i) column[i] = models[i].values()[c];
    // Summing in sorted order makes the result independent of arrival order.
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (double v : column) sum += v;
    out[c] = std::clamp(sum / count, column.front(), column.back());
  }
  return ModelParameters(std::move(out), 0);
}

std::uint64_t model_size_bytes(const ModelParameters& model) noexcept {
  return 8 * static_cast<std::uint64_t>(model.dim()) + kModelHeaderBytes;
}

}  // namespace plexus
