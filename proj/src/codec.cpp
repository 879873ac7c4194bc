#include "biot/codec.hpp"

#include <limits>

namespace biot::codec {

Writer& Writer::u8(std::uint8_t v) {
    out_.push_back(v);
    return *this;
}

Writer& Writer::u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
    return *this;
}

Writer& Writer::u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
    return *this;
}

Writer& Writer::u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
    return *this;
}

Writer& Writer::raw(ByteView bytes) {
    out_.insert(out_.end(), bytes.begin(), bytes.end());
    return *this;
}

Writer& Writer::blob(ByteView bytes) {
    if (bytes.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw Error(ErrorCode::InvalidArgument, "blob exceeds u32 length prefix");
    }
    u32(static_cast<std::uint32_t>(bytes.size()));
    return raw(bytes);
}

Writer& Writer::str(std::string_view text) {
    return blob(ByteView{reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

ByteView Reader::raw(std::size_t n) {
    if (n > remaining()) {
        throw Error(ErrorCode::MalformedEncoding,
                    "truncated input: need " + std::to_string(n) + " bytes, have " + std::to_string(remaining()));
    }
    ByteView out = in_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::uint8_t Reader::u8() { return raw(1)[0]; }

std::uint16_t Reader::u16() {
    const auto b = raw(2);
    return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
}

std::uint32_t Reader::u32() {
    std::uint32_t v = 0;
    for (auto b : raw(4)) v = (v << 8) | b;
    return v;
}

std::uint64_t Reader::u64() {
    std::uint64_t v = 0;
    for (auto b : raw(8)) v = (v << 8) | b;
    return v;
}

Bytes Reader::blob() {
    const auto n = u32();
    const auto b = raw(n);
    return Bytes(b.begin(), b.end());
}

std::string Reader::str() {
    const auto n = u32();
    const auto b = raw(n);
    return std::string(b.begin(), b.end());
}

Digest Reader::digest() {
    Digest d;
    const auto b = raw(d.size());
    std::copy(b.begin(), b.end(), d.begin());
    return d;
}

void Reader::expect_done() const {
    if (!done()) {
        throw Error(ErrorCode::MalformedEncoding, std::to_string(remaining()) + " trailing bytes");
    }
}

}  // namespace biot::codec
