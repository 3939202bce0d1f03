#include "plexus/core/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "plexus/core/errors.hpp"

namespace plexus {
namespace {

constexpr char kMagic[4] = {'P', 'L', 'X', 'M'};
constexpr std::size_t kHeaderSize = 4 + 4 + 8;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

template <typename T>
T get_le(const std::uint8_t* p) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(p[i]) << (8 * i);
  return value;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ModelParameters& model) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + 8 * model.dim());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.dim()));
  put_le<std::uint64_t>(out, model.age());
  for (double v : model.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

ModelParameters decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw LoadError("not a PLXM checkpoint");
  const auto dim = get_le<std::uint32_t>(bytes.data() + 4);
  const auto age = get_le<std::uint64_t>(bytes.data() + 8);
  if (bytes.size() != kHeaderSize + 8 * static_cast<std::size_t>(dim))
    throw LoadError("checkpoint length does not match its dimension");
  std::vector<double> values(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    values[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes.data() + kHeaderSize + 8 * i));
  }
  try {
    return ModelParameters(std::move(values), age);
  } catch (const InvalidArgument& e) {
    throw LoadError(std::string("invalid checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const ModelParameters& model) {
  const auto bytes = encode_checkpoint(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write checkpoint: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ModelParameters load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot read checkpoint: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace plexus
