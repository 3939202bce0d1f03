#include "plexus/sampler/sampler.hpp"

#define OPENSSL_SUPPRESS_DEPRECATED
#include <openssl/sha.h>

#include <algorithm>
#include <charconv>
#include <cstring>
#include <string>

#include "plexus/core/errors.hpp"

namespace plexus::sampler {

Digest sha256(std::string_view bytes) {
  // The EVP interface costs roughly twice as much per short message.
  SHA256_CTX ctx;
  Digest out;
  if (SHA256_Init(&ctx) != 1 || SHA256_Update(&ctx, bytes.data(), bytes.size()) != 1 ||
      SHA256_Final(out.data(), &ctx) != 1) {
    throw Error("crypto", "SHA-256 failed");
  }
  return out;
}

std::strong_ordering RankKey::operator<=>(const RankKey& other) const {
  const int c = std::memcmp(digest.data(), other.digest.data(), digest.size());
  if (c != 0) return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
  return node <=> other.node;
}

namespace {

// Hashes `id|k` without building a std::string for short ids.
Digest rank_digest(const std::string& id, RoundNumber k) {
  char buf[128];
  if (id.size() + 21 > sizeof buf) return sha256(id + "|" + std::to_string(k.value()));
  std::memcpy(buf, id.data(), id.size());
  buf[id.size()] = '|';
  const auto end = std::to_chars(buf + id.size() + 1, buf + sizeof buf, k.value()).ptr;
  return sha256(std::string_view(buf, static_cast<std::size_t>(end - buf)));
}

struct IndexedKey {
  Digest digest;
  const NodeId* node;
};

}  // namespace

RankKey node_rank_key(const NodeId& node, RoundNumber k) { return RankKey{rank_digest(node.str(), k), node}; }

bool Sample::contains(const NodeId& id) const {
  return std::find(participants.begin(), participants.end(), id) != participants.end();
}

Sample sample(RoundNumber k, std::size_t s, const Membership& membership) {
  if (membership.empty()) throw InvalidArgument("no candidates");
  if (s == 0) throw InvalidArgument("sample size must be positive");

  std::vector<IndexedKey> keys;
  keys.reserve(membership.size());
  for (const auto& id : membership.nodes()) keys.push_back({rank_digest(id.str(), k), &id});

  const std::size_t take = std::min(s, keys.size());
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(take), keys.end(),
                    [](const IndexedKey& a, const IndexedKey& b) {
                      const int c = std::memcmp(a.digest.data(), b.digest.data(), a.digest.size());
                      return c != 0 ? c < 0 : *a.node < *b.node;
                    });

  Sample out{k, {}, std::nullopt};
  out.participants.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.participants.push_back(*keys[i].node);
  return out;
}

NodeId elect_aggregator(const std::vector<NodeId>& participants, const Membership& membership) {
  if (participants.empty()) throw InvalidArgument("no candidates");
  const NodeId* best = nullptr;
  double best_bw = 0.0;
  for (const auto& id : participants) {
    auto idx = membership.index_of(id);
    if (!idx) throw InvalidArgument("unknown bandwidth for " + id.str());
    const double bw = membership.profile_at(*idx).uplink_bps;
    if (best == nullptr || bw > best_bw || (bw == best_bw && id < *best)) {
      best = &id;
      best_bw = bw;
    }
  }
  return *best;
}

NodeId aggregator(RoundNumber k, std::size_t s, const Membership& membership) {
  return elect_aggregator(sample(k, s, membership).participants, membership);
}

Sample sample_with_aggregator(RoundNumber k, std::size_t s, const Membership& membership) {
  auto out = sample(k, s, membership);
  out.aggregator = elect_aggregator(out.participants, membership);
  return out;
}

}  // namespace plexus::sampler
