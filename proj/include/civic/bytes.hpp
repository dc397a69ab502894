#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace civic {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;

inline constexpr Digest zero_digest{};

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);
Digest digest_from_hex(std::string_view hex);

inline ByteView as_view(std::string_view s)
{
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// Canonical byte layout used for hashing, signing, storage and the wire:
//   integers    8-byte big-endian
//   byte fields 4-byte big-endian length, then the bytes
//   strings     encoded as byte fields (UTF-8)
//   enums/flags 1 byte
//   lists       8-byte big-endian element count, then the elements
class Encoder {
public:
    Encoder& u8(std::uint8_t v);
    Encoder& u64(std::uint64_t v);
    Encoder& bytes(ByteView v);
    Encoder& str(std::string_view v) { return bytes(as_view(v)); }
    Encoder& count(std::size_t n) { return u64(static_cast<std::uint64_t>(n)); }

    const Bytes& data() const& { return out_; }
    Bytes take() && { return std::move(out_); }

private:
    Bytes out_;
};

// Every read is bounds-checked; malformed input throws Error(Errc::Malformed).
class Decoder {
public:
    explicit Decoder(ByteView in) : in_(in) {}

    std::uint8_t u8();
    std::uint64_t u64();
    Bytes bytes();
    std::string str();
    std::size_t count(std::size_t max_elements = 1u << 20);

    template<std::size_t N>
    std::array<std::uint8_t, N> fixed()
    {
        const Bytes b = bytes();
        if (b.size() != N)
            fail("expected " + std::to_string(N) + " byte field, got " + std::to_string(b.size()));
        std::array<std::uint8_t, N> out{};
        std::copy(b.begin(), b.end(), out.begin());
        return out;
    }

    bool done() const { return pos_ == in_.size(); }
    void expect_done() const;
    std::size_t position() const { return pos_; }

private:
    [[noreturn]] void fail(const std::string& what) const;
    void need(std::size_t n) const;

    ByteView in_;
    std::size_t pos_ = 0;
};

} // namespace civic
