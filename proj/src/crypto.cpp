#include "civic/crypto.hpp"

#include <sodium.h>

#include "civic/error.hpp"

namespace civic {

namespace {

void ensure_sodium()
{
    static const bool ready = [] {
        if (sodium_init() < 0)
            throw Error(Errc::InvalidConfig, "libsodium initialisation failed");
        return true;
    }();
    (void)ready;
}

} // namespace

Digest sha256(ByteView data)
{
    ensure_sodium();
    Digest out{};
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
}

Digest sha256_pair(const Digest& left, const Digest& right)
{
    std::array<std::uint8_t, 64> buf{};
    std::copy(left.begin(), left.end(), buf.begin());
    std::copy(right.begin(), right.end(), buf.begin() + 32);
    return sha256(buf);
}

bool verify_signature(const PublicKey& key, ByteView message, ByteView signature)
{
    ensure_sodium();
    if (signature.size() != crypto_sign_BYTES)
        return false;
    return crypto_sign_verify_detached(signature.data(), message.data(), message.size(), key.data()) == 0;
}

KeyPair KeyPair::from_seed(const Seed& seed)
{
    ensure_sodium();
    KeyPair kp;
    kp.seed_ = seed;
    crypto_sign_seed_keypair(kp.public_key_.data(), kp.secret_.data(), seed.data());
    return kp;
}

KeyPair KeyPair::generate()
{
    ensure_sodium();
    Seed seed{};
    randombytes_buf(seed.data(), seed.size());
    return from_seed(seed);
}

KeyPair KeyPair::derive(std::string_view label)
{
    return from_seed(sha256(as_view(label)));
}

Bytes KeyPair::sign(ByteView message) const
{
    Bytes sig(crypto_sign_BYTES);
    crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), secret_.data());
    return sig;
}

} // namespace civic
