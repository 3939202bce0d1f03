#include <algorithm>
#include <cmath>
#include <numeric>

#include "plexus/core/errors.hpp"
#include "plexus/learning/learning.hpp"

namespace plexus::learning {
namespace {

// Forward pass for one row: hidden activations (MLP only) and output logits.
struct Forward {
  std::vector<double> hidden;
  std::vector<double> logits;
};

void forward(const ModelSpec& spec, std::span<const double> p, std::span<const double> x, Forward& out) {
  const std::size_t d = spec.d_in, c = spec.classes;
  out.logits.assign(c, 0.0);
  if (spec.family == ModelFamily::Linear) {
    const double* w = p.data();
    const double* b = p.data() + c * d;
    for (std::size_t k = 0; k < c; ++k) {
      double z = b[k];
      const double* wk = w + k * d;
      for (std::size_t j = 0; j < d; ++j) z += wk[j] * x[j];
      out.logits[k] = z;
    }
    return;
  }
  const std::size_t h = spec.hidden;
  const double* w1 = p.data();
  const double* b1 = w1 + h * d;
  const double* w2 = b1 + h;
  const double* b2 = w2 + c * h;
  out.hidden.assign(h, 0.0);
  for (std::size_t u = 0; u < h; ++u) {
    double a = b1[u];
    const double* wu = w1 + u * d;
    for (std::size_t j = 0; j < d; ++j) a += wu[j] * x[j];
    out.hidden[u] = a > 0.0 ? a : 0.0;
  }
  for (std::size_t k = 0; k < c; ++k) {
    double z = b2[k];
    const double* wk = w2 + k * h;
    for (std::size_t u = 0; u < h; ++u) z += wk[u] * out.hidden[u];
    out.logits[k] = z;
  }
}

// dL/dlogits for a single row; returns the row loss.
double output_delta(std::span<const double> logits, int label, LossKind loss, std::vector<double>& delta) {
  const std::size_t c = logits.size();
  delta.resize(c);
  if (loss == LossKind::Squared) {
    double l = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      const double target = static_cast<int>(k) == label ? 1.0 : 0.0;
      delta[k] = logits[k] - target;
      l += 0.5 * delta[k] * delta[k];
    }
    return l;
  }
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    delta[k] = std::exp(logits[k] - zmax);
    denom += delta[k];
  }
  for (std::size_t k = 0; k < c; ++k) delta[k] /= denom;
  const double l = -(logits[label] - zmax - std::log(denom));
  delta[label] -= 1.0;
  return l;
}

}  // namespace

std::size_t ModelSpec::param_count() const {
  if (family == ModelFamily::Linear) return classes * d_in + classes;
  return hidden * d_in + hidden + classes * hidden + classes;
}

void ModelSpec::validate() const {
  if (d_in == 0 || classes == 0) throw InvalidArgument("model needs d_in >= 1 and classes >= 1");
  if (family == ModelFamily::Mlp && hidden == 0) throw InvalidArgument("mlp needs a hidden layer");
}

void TrainerConfig::validate() const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw InvalidArgument("eta must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must be in [0, 1)");
  if (batch_size == 0 || local_steps == 0) throw InvalidArgument("batch_size and local_steps must be positive");
}

ModelParameters init_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(derive_seed(seed, {hash_tag("init")}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> p(spec.param_count(), 0.0);
  const std::size_t d = spec.d_in, c = spec.classes;
  if (spec.family == ModelFamily::Linear) {
    for (std::size_t i = 0; i < c * d; ++i) p[i] = 0.01 * gauss(rng);
  } else {
    const std::size_t h = spec.hidden;
    const double s1 = std::sqrt(2.0 / static_cast<double>(d));
    const double s2 = std::sqrt(1.0 / static_cast<double>(h));
    for (std::size_t i = 0; i < h * d; ++i) p[i] = s1 * gauss(rng);
    const std::size_t w2 = h * d + h;
    for (std::size_t i = 0; i < c * h; ++i) p[w2 + i] = s2 * gauss(rng);
  }
  return ModelParameters(std::move(p), 0);
}

LossAndGradient loss_and_gradient(const ModelSpec& spec, std::span<const double> params, const Dataset& data,
                                  std::span<const std::size_t> rows, LossKind loss) {
  if (params.size() != spec.param_count()) throw InvalidArgument("parameter count does not match the model");
  if (data.d_in != spec.d_in) throw InvalidArgument("feature dimension does not match the model");
  if (rows.empty()) throw InvalidArgument("empty minibatch");

  const std::size_t d = spec.d_in, c = spec.classes;
  LossAndGradient out{0.0, std::vector<double>(params.size(), 0.0)};
  Forward fw;
  std::vector<double> delta;
  std::vector<double> dhidden;
  for (std::size_t r : rows) {
    const auto x = data.row(r);
    const int y = data.labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= c) throw InvalidArgument("label outside the model's classes");
    forward(spec, params, x, fw);
    out.loss += output_delta(fw.logits, y, loss, delta);
    if (spec.family == ModelFamily::Linear) {
      double* gw = out.gradient.data();
      double* gb = gw + c * d;
      for (std::size_t k = 0; k < c; ++k) {
        for (std::size_t j = 0; j < d; ++j) gw[k * d + j] += delta[k] * x[j];
        gb[k] += delta[k];
      }
      continue;
    }
    const std::size_t h = spec.hidden;
    const double* w2 = params.data() + h * d + h;
    double* g_w1 = out.gradient.data();
    double* g_b1 = g_w1 + h * d;
    double* g_w2 = g_b1 + h;
    double* g_b2 = g_w2 + c * h;
    dhidden.assign(h, 0.0);
    for (std::size_t k = 0; k < c; ++k) {
      for (std::size_t u = 0; u < h; ++u) {
        g_w2[k * h + u] += delta[k] * fw.hidden[u];
        dhidden[u] += delta[k] * w2[k * h + u];
      }
      g_b2[k] += delta[k];
    }
    for (std::size_t u = 0; u < h; ++u) {
      if (fw.hidden[u] <= 0.0) continue;
      for (std::size_t j = 0; j < d; ++j) g_w1[u * d + j] += dhidden[u] * x[j];
      g_b1[u] += dhidden[u];
    }
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  out.loss *= inv;
  for (double& g : out.gradient) g *= inv;
  return out;
}

double mean_loss(const ModelSpec& spec, const ModelParameters& model, const Dataset& data, LossKind loss) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), 0);
  return loss_and_gradient(spec, model.values(), data, rows, loss).loss;
}

ModelParameters local_train(const ModelSpec& spec, const ModelParameters& model, const Dataset& shard,
                            const TrainerConfig& config, Rng& rng) {
  config.validate();
  if (model.dim() != spec.param_count()) throw InvalidArgument("parameter count does not match the model");
  if (shard.size() == 0) throw InvalidArgument("cannot train on an empty shard");

  std::vector<double> params(model.values().begin(), model.values().end());
  std::vector<double> velocity(params.size(), 0.0);
  const std::size_t m = shard.size();
  const std::size_t batch = config.batch_size;
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> rows(batch);

  for (std::uint32_t step = 0; step < config.local_steps; ++step) {
    if (m >= batch) {
      for (std::size_t i = 0; i < batch; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, m - 1);
        std::swap(perm[i], perm[pick(rng)]);
        rows[i] = perm[i];
      }
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, m - 1);
      for (auto& r : rows) r = pick(rng);
    }
    const auto lg = loss_and_gradient(spec, params, shard, rows, config.loss);
    if (!std::isfinite(lg.loss)) throw TrainingError("divergence: reduce eta");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!std::isfinite(lg.gradient[i])) throw TrainingError("divergence: reduce eta");
      velocity[i] = config.momentum * velocity[i] + lg.gradient[i];
      params[i] -= config.eta * velocity[i];
    }
  }
  for (double v : params) {
    if (!std::isfinite(v)) throw TrainingError("divergence: reduce eta");
  }
  return ModelParameters(std::move(params), model.age() + config.local_steps);
}

double evaluate(const ModelSpec& spec, const ModelParameters& model, const Dataset& test) {
  if (test.size() == 0) throw InvalidArgument("empty test set");
  if (model.dim() != spec.param_count() || test.d_in != spec.d_in)
    throw InvalidArgument("model and test set dimensions do not match");
  Forward fw;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    forward(spec, model.values(), test.row(i), fw);
    const auto best = std::max_element(fw.logits.begin(), fw.logits.end()) - fw.logits.begin();
    if (best == test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace plexus::learning
