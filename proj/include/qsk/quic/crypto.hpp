#pragma once

// Hash, MAC and randomness primitives plus the toy key schedule.
//
// The key schedule is NOT TLS: both randoms travel in the clear, so anyone
// who sees the handshake can compute the "forward-secure" key. It models
// message flow and transcript authentication only and provides no
// confidentiality.

#include <array>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>

#include "qsk/common/bytes.hpp"
#include "qsk/quic/wire.hpp"

namespace qsk::quic {

using Digest = std::array<std::uint8_t, 32>;
using Key = Digest;

using RandomFn = std::function<void(std::span<std::uint8_t>)>;

Digest sha256(std::initializer_list<ByteView> parts);
Digest hmac_sha256(ByteView key, ByteView data);
bool constant_time_equal(ByteView a, ByteView b);

// OpenSSL CSPRNG.
void fill_random(std::span<std::uint8_t> out);
RandomFn system_random();
// Deterministic stream for simulations; not for anything secret.
RandomFn seeded_random(std::uint64_t seed);

ConnectionId random_connection_id(const RandomFn& random);
Random32 random32(const RandomFn& random);
PathData random_path_data(const RandomFn& random);

// shared = H(client_random || server_random)
Digest derive_shared_secret(const Random32& client_random, const Random32& server_random);
// forward_secure_key = H(shared || "fs")
Key derive_forward_secure_key(const Digest& shared);
// MAC(forward_secure_key, H(transcript))
Digest fin_mac(const Key& key, ByteView transcript);

}  // namespace qsk::quic
