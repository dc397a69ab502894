#pragma once

#include <array>

#include "civic/bytes.hpp"

namespace civic {

// SHA-256 for every digest; Ed25519 (deterministic) for every signature.
using PublicKey = std::array<std::uint8_t, 32>;
using Seed = std::array<std::uint8_t, 32>;

Digest sha256(ByteView data);
Digest sha256_pair(const Digest& left, const Digest& right);

bool verify_signature(const PublicKey& key, ByteView message, ByteView signature);

class KeyPair {
public:
    static KeyPair from_seed(const Seed& seed);
    static KeyPair generate();
    // Deterministic key for simulations and fixtures: seed = SHA-256(label).
    static KeyPair derive(std::string_view label);

    const PublicKey& public_key() const { return public_key_; }
    const Seed& seed() const { return seed_; }
    Bytes sign(ByteView message) const;

private:
    KeyPair() = default;

    Seed seed_{};
    PublicKey public_key_{};
    std::array<std::uint8_t, 64> secret_{};
};

} // namespace civic
