#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "biot/common.hpp"
#include "json.hpp"

namespace biot::economics {

struct GasAnchor {
    std::size_t payload_bytes = 0;
    std::uint64_t gas = 0;
};

/// Gas model calibrated on measured end-to-end costs. Full on-chain payloads
/// are priced by linear per-byte interpolation between anchors (half-up
/// rounding), clamped below the first anchor and extrapolated past the last.
struct GasSchedule {
    std::uint64_t deploy_gas = 866'212;
    std::uint64_t register_gateway_gas = 43'702;
    std::uint64_t register_device_gas = 43'702;
    std::vector<GasAnchor> full_on_chain_anchors{{16, 52'132}, {1024, 382'119}};
    std::uint64_t digest_anchor_gas = 72'433;

    // Throws Error(ConfigInvalid) unless anchors are sorted by size with strictly increasing gas.
    void validate() const;
};

std::uint64_t gas_for_payload(const GasSchedule& schedule, StorageScheme scheme, std::size_t size);

// Largest payload size at which full on-chain storage is no more expensive
// than anchoring a digest; nullopt if full on-chain is never cheaper.
std::optional<std::size_t> hashing_crossover(const GasSchedule& schedule);

enum class UsdRounding { Exact, PaperTable };

struct PriceContext {
    double gas_price_gwei = 1.0;
    double eth_usd = 168.0;
    UsdRounding rounding = UsdRounding::Exact;

    void validate() const;
};

// Published per-operation dollar figures (micro-USD) for the default schedule
// at 1 gwei and $168/ETH, keyed by gas amount.
std::optional<std::int64_t> published_micro_usd(std::uint64_t gas);

double exact_usd(std::uint64_t gas, const PriceContext& prices);

// Exact mode: gas * gwei * 1e-9 * eth_usd. PaperTable mode: the published
// figure where one exists for this gas amount and the default prices,
// otherwise the exact value.
double usd_cost(std::uint64_t gas, const PriceContext& prices);

enum class Payer { Setup, Client, Device };

struct Charge {
    std::uint64_t gas = 0;
    Payer payer = Payer::Device;
    bool window_anchor = false;
};

// Everything build_cost_report needs from a finished run.
struct ChargeLog {
    StorageScheme scheme = StorageScheme::FullOnChain;
    std::vector<Charge> charges;
    std::uint64_t messages = 0;
    Seconds duration{86'400};
    bool complete = false;
};

struct CostReport {
    StorageScheme scheme = StorageScheme::FullOnChain;
    UsdRounding rounding = UsdRounding::Exact;
    double days = 1.0;
    std::uint64_t messages_per_day = 0;
    std::uint64_t gas_per_day = 0;  // device-attributed gas
    double usd_per_day = 0.0;
    double per_message_usd = 0.0;
    std::uint64_t window_anchors_per_day = 0;
    std::uint64_t setup_gas = 0;
    std::uint64_t client_gas = 0;
    std::uint64_t device_gas = 0;
    std::uint64_t total_gas = 0;
};

// Throws Error(IncompleteRun) if the log is not marked complete.
CostReport build_cost_report(const ChargeLog& log, const PriceContext& prices);

std::string format_usd(double usd, int decimals);
std::string format_gas(std::uint64_t gas);  // thousands separators, e.g. 866,212

std::string_view to_string(UsdRounding rounding) noexcept;
UsdRounding parse_rounding(std::string_view text);

nlohmann::json to_json(const GasSchedule& schedule);
GasSchedule gas_schedule_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PriceContext& prices);
PriceContext price_context_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CostReport& report);

}  // namespace biot::economics
