#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "biot/common.hpp"

namespace biot::codec {

// Canonical big-endian encoding used for ledger records, contract arguments
// and digests. Variable-length fields carry a u32 length prefix.
class Writer {
  public:
    Writer& u8(std::uint8_t v);
    Writer& u16(std::uint16_t v);
    Writer& u32(std::uint32_t v);
    Writer& u64(std::uint64_t v);
    Writer& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }
    Writer& raw(ByteView bytes);
    Writer& blob(ByteView bytes);
    Writer& str(std::string_view text);

    [[nodiscard]] const Bytes& bytes() const noexcept { return out_; }
    Bytes take() noexcept { return std::move(out_); }

  private:
    Bytes out_;
};

// Throws Error(MalformedEncoding) on truncated or oversized input.
class Reader {
  public:
    explicit Reader(ByteView in) : in_(in) {}

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    ByteView raw(std::size_t n);
    Bytes blob();
    std::string str();

    template <class Id>
    Id id() {
        return Id::from_bytes(raw(Id::kSize));
    }
    Digest digest();

    [[nodiscard]] bool done() const noexcept { return pos_ == in_.size(); }
    [[nodiscard]] std::size_t remaining() const noexcept { return in_.size() - pos_; }
    void expect_done() const;

  private:
    ByteView in_;
    std::size_t pos_ = 0;
};

}  // namespace biot::codec
