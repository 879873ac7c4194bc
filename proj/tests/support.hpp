#pragma once

// Shared helpers for the test suites: a seeded generator for property tests
// and reference computations that do not go through the library code paths
// they check.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <openssl/sha.h>

#include "biot/common.hpp"
#include "biot/contract.hpp"
#include "biot/ledger.hpp"

namespace biot::test {

class Gen {
  public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    std::uint64_t next() { return rng_(); }
    // Uniform in [lo, hi].
    std::uint64_t range(std::uint64_t lo, std::uint64_t hi) { return lo + rng_() % (hi - lo + 1); }
    bool coin() { return (rng_() & 1) != 0; }

    Bytes bytes(std::size_t n) {
        Bytes out(n);
        for (auto& b : out) b = static_cast<std::uint8_t>(rng_());
        return out;
    }
    Digest digest() {
        Digest d;
        for (auto& b : d) b = static_cast<std::uint8_t>(rng_());
        return d;
    }
    Address address() { return Address::from_bytes(bytes(20)); }
    DeviceId device() { return DeviceId::from_bytes(bytes(16)); }

  private:
    std::mt19937_64 rng_;
};

// SHA-256 straight from libcrypto's one-shot API.
inline Digest oracle_sha256(const Bytes& data) {
    Digest d;
    SHA256(data.data(), data.size(), d.data());
    return d;
}

inline Digest oracle_leaf(const Bytes& payload) {
    Bytes buf{0x00};
    buf.insert(buf.end(), payload.begin(), payload.end());
    return oracle_sha256(buf);
}

inline Digest oracle_node(const Digest& l, const Digest& r) {
    Bytes buf{0x01};
    buf.insert(buf.end(), l.begin(), l.end());
    buf.insert(buf.end(), r.begin(), r.end());
    return oracle_sha256(buf);
}

// Root by recursive halving: the left subtree takes the largest power of two
// strictly below n. For pairwise levels with odd-node promotion this gives the
// same tree.
inline Digest oracle_root(const std::vector<Digest>& leaves, std::size_t lo, std::size_t n) {
    if (n == 1) return leaves[lo];
    std::size_t left = 1;
    while (left * 2 < n) left *= 2;
    return oracle_node(oracle_root(leaves, lo, left), oracle_root(leaves, lo + left, n - left));
}

inline Digest oracle_root(const std::vector<Digest>& leaves) { return oracle_root(leaves, 0, leaves.size()); }

// Full on-chain gas by exact rational arithmetic with half-up rounding,
// for the default two-anchor schedule.
inline std::uint64_t oracle_full_gas(std::uint64_t size) {
    const std::int64_t s = static_cast<std::int64_t>(std::max<std::uint64_t>(size, 16));
    const std::int64_t num = (s - 16) * (382'119 - 52'132);  // over 1008
    return static_cast<std::uint64_t>(52'132 + (2 * num + 1008) / (2 * 1008));
}

// Smallest multiple of `interval` strictly greater than t.
inline std::int64_t oracle_next_block(std::int64_t t, std::int64_t interval) { return (t / interval + 1) * interval; }

// A deployed contract with one registered gateway and device.
struct Deployed {
    Address admin = Address::from_label("test/admin");
    Address gateway = Address::from_label("test/gateway");
    Address other_gateway = Address::from_label("test/gateway-2");
    Address client = Address::from_label("test/client");
    DeviceId device = DeviceId::from_label("test/device");
    std::unique_ptr<ledger::Ledger> ledger;

    explicit Deployed(ledger::LedgerConfig config = {}) : ledger(std::make_unique<ledger::Ledger>(config)) {
        for (const auto& a : {admin, gateway, other_gateway, client}) ledger->create_account(a);
        run(admin, contract::calls::deploy());
        run(admin, contract::calls::register_gateway(gateway));
        run(admin, contract::calls::register_gateway(other_gateway));
        run(admin, contract::calls::register_device(device, gateway));
    }

    ledger::Receipt run(const Address& sender, const contract::EncodedCall& call) {
        return ledger->wait_for(ledger->submit(sender, call, ledger->head_time()));
    }
};

}  // namespace biot::test
