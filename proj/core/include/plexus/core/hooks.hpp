#pragma once

#include <cstdint>
#include <functional>

#include "plexus/core/model.hpp"

namespace plexus {

/// Trains `model` on the data of membership node `node`. `invocation` keys
/// the training randomness: the round number for sampled algorithms, a
/// per-node counter for the others.
using LocalTrainer =
    std::function<ModelParameters(std::size_t node, std::uint64_t invocation, const ModelParameters& model)>;

/// Called once a round produces a global model (Plexus, FL).
using RoundObserver = std::function<void(std::uint64_t round, const ModelParameters& global, double time)>;

}  // namespace plexus
