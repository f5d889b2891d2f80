#include "qsk/quic/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>

#include <memory>
#include <random>
#include <stdexcept>

namespace qsk::quic {

Digest sha256(std::initializer_list<ByteView> parts) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: init failed");
  for (auto part : parts) {
    if (!part.empty() && EVP_DigestUpdate(ctx.get(), part.data(), part.size()) != 1)
      throw std::runtime_error("sha256: update failed");
  }
  Digest out{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != out.size())
    throw std::runtime_error("sha256: final failed");
  return out;
}

Digest hmac_sha256(ByteView key, ByteView data) {
  Digest out{};
  unsigned int len = 0;
  static const std::uint8_t kEmpty = 0;
  if (!HMAC(EVP_sha256(), key.empty() ? &kEmpty : key.data(), static_cast<int>(key.size()),
            data.empty() ? &kEmpty : data.data(), data.size(), out.data(), &len) ||
      len != out.size())
    throw std::runtime_error("hmac_sha256 failed");
  return out;
}

bool constant_time_equal(ByteView a, ByteView b) {
  return a.size() == b.size() && CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

void fill_random(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1)
    throw std::runtime_error("RAND_bytes failed");
}

RandomFn system_random() { return [](std::span<std::uint8_t> out) { fill_random(out); }; }

RandomFn seeded_random(std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [rng](std::span<std::uint8_t> out) {
    for (auto& b : out) b = static_cast<std::uint8_t>((*rng)() >> 56);
  };
}

ConnectionId random_connection_id(const RandomFn& random) {
  std::array<std::uint8_t, ConnectionId::kLength> raw{};
  random(raw);
  return ConnectionId(raw);
}

Random32 random32(const RandomFn& random) {
  Random32 out{};
  random(out);
  return out;
}

PathData random_path_data(const RandomFn& random) {
  PathData out{};
  random(out);
  return out;
}

Digest derive_shared_secret(const Random32& client_random, const Random32& server_random) {
  return sha256({client_random, server_random});
}

Key derive_forward_secure_key(const Digest& shared) {
  static const std::uint8_t kLabel[] = {'f', 's'};
  return sha256({shared, kLabel});
}

Digest fin_mac(const Key& key, ByteView transcript) {
  const auto digest = sha256({transcript});
  return hmac_sha256(key, digest);
}

}  // namespace qsk::quic
