#include "biot/common.hpp"

#include <openssl/evp.h>

#include <memory>

namespace biot {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::MalformedEncoding: return "MalformedEncoding";
        case ErrorCode::UnknownSender: return "UnknownSender";
        case ErrorCode::UnknownFunction: return "UnknownFunction";
        case ErrorCode::ClockRegression: return "ClockRegression";
        case ErrorCode::NotReadOnly: return "NotReadOnly";
        case ErrorCode::ChainCorrupted: return "ChainCorrupted";
        case ErrorCode::ReplayDivergence: return "ReplayDivergence";
        case ErrorCode::ContractNotDeployed: return "ContractNotDeployed";
        case ErrorCode::AlreadyDeployed: return "AlreadyDeployed";
        case ErrorCode::Unauthorized: return "Unauthorized";
        case ErrorCode::UnknownGateway: return "UnknownGateway";
        case ErrorCode::UnknownDevice: return "UnknownDevice";
        case ErrorCode::PayloadTooLarge: return "PayloadTooLarge";
        case ErrorCode::StoreUnavailable: return "StoreUnavailable";
        case ErrorCode::EmptyWindow: return "EmptyWindow";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::PinningMismatch: return "PinningMismatch";
        case ErrorCode::UnknownDeviceFingerprint: return "UnknownDeviceFingerprint";
        case ErrorCode::DeviceTimeout: return "DeviceTimeout";
        case ErrorCode::ChannelClosed: return "ChannelClosed";
        case ErrorCode::WrongConfiguration: return "WrongConfiguration";
        case ErrorCode::MalformedFrame: return "MalformedFrame";
        case ErrorCode::IncompleteRun: return "IncompleteRun";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::RootNotFound: return "RootNotFound";
        case ErrorCode::VerifyFailed: return "VerifyFailed";
        case ErrorCode::MalformedProof: return "MalformedProof";
    }
    return "Unknown";
}

std::string to_hex(ByteView bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0x0f]);
    }
    return out;
}

namespace {

int nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

Bytes from_hex(std::string_view text) {
    if (text.starts_with("0x") || text.starts_with("0X")) text.remove_prefix(2);
    if (text.size() % 2 != 0) throw Error(ErrorCode::InvalidArgument, "odd-length hex string");
    Bytes out(text.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int hi = nibble(text[2 * i]);
        const int lo = nibble(text[2 * i + 1]);
        if (hi < 0 || lo < 0) throw Error(ErrorCode::InvalidArgument, "invalid hex digit");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

Bytes to_bytes(std::string_view text) { return Bytes(text.begin(), text.end()); }

Digest sha256(std::initializer_list<ByteView> parts) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    Digest out{};
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256: digest init failed");
    }
    for (const auto& part : parts) {
        if (!part.empty() && EVP_DigestUpdate(ctx.get(), part.data(), part.size()) != 1) {
            throw std::runtime_error("sha256: digest update failed");
        }
    }
    if (EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != out.size()) {
        throw std::runtime_error("sha256: digest final failed");
    }
    return out;
}

Digest sha256(ByteView data) { return sha256({data}); }

Digest digest_from_hex(std::string_view text) {
    const Bytes raw = from_hex(text);
    if (raw.size() != 32) throw Error(ErrorCode::InvalidArgument, "digest must be 32 bytes");
    Digest d;
    std::copy(raw.begin(), raw.end(), d.begin());
    return d;
}

std::string_view to_string(StorageScheme scheme) noexcept {
    switch (scheme) {
        case StorageScheme::FullOnChain: return "FullOnChain";
        case StorageScheme::DataHashing: return "DataHashing";
        case StorageScheme::MerkleTree: return "MerkleTree";
    }
    return "Unknown";
}

StorageScheme parse_storage_scheme(std::string_view text) {
    if (text == "FullOnChain") return StorageScheme::FullOnChain;
    if (text == "DataHashing") return StorageScheme::DataHashing;
    if (text == "MerkleTree") return StorageScheme::MerkleTree;
    throw Error(ErrorCode::ConfigInvalid, "unknown storage scheme '" + std::string(text) + "'");
}

}  // namespace biot
