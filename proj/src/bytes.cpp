#include "civic/bytes.hpp"

#include <algorithm>

#include "civic/error.hpp"

namespace civic {

namespace {

int nibble(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

std::string to_hex(ByteView data)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex)
{
    if (hex.size() % 2 != 0)
        throw Error(Errc::Malformed, "odd-length hex string");
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int hi = nibble(hex[2 * i]);
        const int lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0)
            throw Error(Errc::Malformed, "invalid hex digit");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

Digest digest_from_hex(std::string_view hex)
{
    const Bytes b = from_hex(hex);
    if (b.size() != 32)
        throw Error(Errc::Malformed, "digest must be 32 bytes");
    Digest d{};
    std::copy(b.begin(), b.end(), d.begin());
    return d;
}

Encoder& Encoder::u8(std::uint8_t v)
{
    out_.push_back(v);
    return *this;
}

Encoder& Encoder::u64(std::uint64_t v)
{
    for (int shift = 56; shift >= 0; shift -= 8)
        out_.push_back(static_cast<std::uint8_t>(v >> shift));
    return *this;
}

Encoder& Encoder::bytes(ByteView v)
{
    if (v.size() > 0xffffffffu)
        throw Error(Errc::Malformed, "byte field exceeds 4 GiB");
    const auto n = static_cast<std::uint32_t>(v.size());
    for (int shift = 24; shift >= 0; shift -= 8)
        out_.push_back(static_cast<std::uint8_t>(n >> shift));
    out_.insert(out_.end(), v.begin(), v.end());
    return *this;
}

void Decoder::fail(const std::string& what) const
{
    throw Error(Errc::Malformed, what + " at offset " + std::to_string(pos_));
}

void Decoder::need(std::size_t n) const
{
    if (in_.size() - pos_ < n)
        fail("truncated input");
}

std::uint8_t Decoder::u8()
{
    need(1);
    return in_[pos_++];
}

std::uint64_t Decoder::u64()
{
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v = (v << 8) | in_[pos_++];
    return v;
}

Bytes Decoder::bytes()
{
    need(4);
    std::uint32_t n = 0;
    for (int i = 0; i < 4; ++i)
        n = (n << 8) | in_[pos_++];
    need(n);
    Bytes out(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
              in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
}

std::string Decoder::str()
{
    const Bytes b = bytes();
    return {b.begin(), b.end()};
}

std::size_t Decoder::count(std::size_t max_elements)
{
    const std::uint64_t n = u64();
    if (n > max_elements)
        fail("element count " + std::to_string(n) + " exceeds limit");
    return static_cast<std::size_t>(n);
}

void Decoder::expect_done() const
{
    if (!done())
        throw Error(Errc::Malformed, "trailing bytes after offset " + std::to_string(pos_));
}

} // namespace civic
