#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "plexus/core/model.hpp"

namespace plexus {

// Binary checkpoint layout (little-endian):
//   "PLXM" | u32 dim | u64 age | dim x f64
std::vector<std::uint8_t> encode_checkpoint(const ModelParameters& model);
ModelParameters decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelParameters& model);
ModelParameters load_checkpoint(const std::filesystem::path& path);

}  // namespace plexus
