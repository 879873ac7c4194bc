#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biot/error.hpp"

namespace biot {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;

// Virtual time. Nothing in the simulation reads the wall clock.
using Seconds = std::chrono::seconds;

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view text);  // accepts an optional 0x prefix
Bytes to_bytes(std::string_view text);

inline ByteView as_view(const Digest& d) { return {d.data(), d.size()}; }

Digest sha256(ByteView data);
Digest sha256(std::initializer_list<ByteView> parts);
Digest digest_from_hex(std::string_view text);

/// Fixed-width opaque identifier. Tag keeps Address and DeviceId from mixing.
template <std::size_t N, class Tag>
class FixedId {
  public:
    static constexpr std::size_t kSize = N;

    FixedId() = default;
    explicit FixedId(const std::array<std::uint8_t, N>& bytes) : bytes_(bytes) {}

    static FixedId from_bytes(ByteView bytes) {
        if (bytes.size() != N) {
            throw Error(ErrorCode::InvalidArgument,
                        "expected " + std::to_string(N) + " bytes, got " + std::to_string(bytes.size()));
        }
        FixedId id;
        std::copy(bytes.begin(), bytes.end(), id.bytes_.begin());
        return id;
    }
    static FixedId from_hex(std::string_view text) { return from_bytes(biot::from_hex(text)); }

    // Deterministic identifier derived from a human label (first N bytes of SHA-256).
    static FixedId from_label(std::string_view label) {
        const Digest d = sha256(ByteView{reinterpret_cast<const std::uint8_t*>(label.data()), label.size()});
        FixedId id;
        std::copy_n(d.begin(), N, id.bytes_.begin());
        return id;
    }

    [[nodiscard]] const std::array<std::uint8_t, N>& bytes() const noexcept { return bytes_; }
    [[nodiscard]] ByteView view() const noexcept { return {bytes_.data(), N}; }
    [[nodiscard]] std::string to_hex() const { return "0x" + biot::to_hex(view()); }

    auto operator<=>(const FixedId&) const = default;

  private:
    std::array<std::uint8_t, N> bytes_{};
};

struct AddressTag {};
struct DeviceIdTag {};

/// 20-byte account identifier; canonical text is lowercase hex with 0x prefix.
using Address = FixedId<20, AddressTag>;
/// 16-byte device identifier.
using DeviceId = FixedId<16, DeviceIdTag>;

enum class StorageScheme : std::uint8_t { FullOnChain, DataHashing, MerkleTree };

std::string_view to_string(StorageScheme scheme) noexcept;
StorageScheme parse_storage_scheme(std::string_view text);

}  // namespace biot
