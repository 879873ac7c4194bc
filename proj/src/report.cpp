#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "biot/harness.hpp"

namespace biot::harness {

namespace {

constexpr double kSecondsPerDay = 86'400.0;

const char* const kRoundingNote =
    "Table figures round each operation to $0.001 before multiplying: 52,132 gas costs $0.00876 "
    "at 1 gwei and $168/ETH and is listed as $0.008, so 1,440 messages give $11.52 in table mode "
    "and $12.61 exactly.";

// "$11.520" -> "$11.52", keeping at least two decimals.
std::string usd_short(double usd) {
    std::string s = economics::format_usd(usd, 3);
    if (s.back() == '0') s.pop_back();
    return s;
}

economics::PriceContext with_rounding(economics::PriceContext p, economics::UsdRounding r) {
    p.rounding = r;
    return p;
}

struct OperationRow {
    std::string name;
    std::uint64_t gas;
};

std::vector<OperationRow> operation_rows(const economics::GasSchedule& s) {
    return {
        {"Deployment", s.deploy_gas},
        {"registerGateway", s.register_gateway_gas},
        {"registerDevice", s.register_device_gas},
        {"sendMessageToDevice (16 B)", economics::gas_for_payload(s, StorageScheme::FullOnChain, 16)},
        {"sendMessageToDevice (1024 B)", economics::gas_for_payload(s, StorageScheme::FullOnChain, 1024)},
        {"Data hashing anchor (any size)", s.digest_anchor_gas},
        {"Merkle root anchor (per window)", s.digest_anchor_gas},
    };
}

// Anchored payloads per interaction on the device side of the bill.
std::uint64_t anchors_per_interaction(const ScenarioConfig& c) {
    if (c.configuration == gateway::Configuration::CBG) return 1;
    if (!c.anchor_optional) return 0;
    return c.scenario == Scenario::SmartLight ? 2 : 1;
}

struct Projection {
    StorageScheme scheme;
    std::uint64_t anchors_per_day;
    std::uint64_t gas_per_day;
    double usd_exact;
    double usd_table;
};

std::vector<Projection> projections(const ScenarioConfig& c) {
    const auto per_day = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(c.message_count()) * kSecondsPerDay / static_cast<double>(c.duration.count())));
    const std::uint64_t payloads = per_day * anchors_per_interaction(c);
    const auto exact = with_rounding(c.prices, economics::UsdRounding::Exact);
    const auto table = with_rounding(c.prices, economics::UsdRounding::PaperTable);

    std::vector<Projection> out;
    for (auto scheme : {StorageScheme::FullOnChain, StorageScheme::DataHashing, StorageScheme::MerkleTree}) {
        std::uint64_t anchors = payloads;
        if (scheme == StorageScheme::MerkleTree && payloads > 0) {
            const auto days_per_window = static_cast<double>(c.window.duration.count()) / kSecondsPerDay;
            anchors = static_cast<std::uint64_t>(std::ceil(1.0 / days_per_window));
            if (c.window.max_leaves) anchors = std::max(anchors, (payloads + *c.window.max_leaves - 1) / *c.window.max_leaves);
        }
        const auto gas = economics::gas_for_payload(c.gas, scheme, devices::kFrameBodySize);
        // Summed per anchor so table mode keeps the rounded per-operation figure.
        economics::ChargeLog log{scheme, std::vector<economics::Charge>(anchors, {gas, economics::Payer::Device,
                                                                                   scheme == StorageScheme::MerkleTree}),
                                 per_day, Seconds{86'400}, true};
        out.push_back({scheme, anchors, gas * anchors, economics::build_cost_report(log, exact).usd_per_day,
                       economics::build_cost_report(log, table).usd_per_day});
    }
    return out;
}

struct LatencyStats {
    std::size_t interactions = 0;
    std::size_t completed = 0;
    std::size_t failed = 0;
    std::int64_t min = 0;
    std::int64_t max = 0;
    double mean = 0.0;
};

LatencyStats latency_stats(const RunResult& r) {
    LatencyStats s;
    s.interactions = r.interactions.size();
    std::int64_t total = 0;
    for (const auto& ix : r.interactions) {
        if (ix.failure) ++s.failed;
        if (!ix.chain_wait) continue;
        const auto w = ix.chain_wait->count();
        s.min = s.completed == 0 ? w : std::min(s.min, w);
        s.max = s.completed == 0 ? w : std::max(s.max, w);
        total += w;
        ++s.completed;
    }
    if (s.completed > 0) s.mean = static_cast<double>(total) / static_cast<double>(s.completed);
    return s;
}

std::uint64_t device_anchors_per_day(const RunResult& r) {
    const auto n = std::count_if(r.charges.charges.begin(), r.charges.charges.end(),
                                 [](const economics::Charge& c) { return c.payer == economics::Payer::Device; });
    const double days = static_cast<double>(r.config.duration.count()) / kSecondsPerDay;
    return static_cast<std::uint64_t>(std::llround(static_cast<double>(n) / days));
}

std::string emit_table(const RunResult& r) {
    const auto& c = r.config;
    const auto exact = with_rounding(c.prices, economics::UsdRounding::Exact);
    const auto table = with_rounding(c.prices, economics::UsdRounding::PaperTable);
    std::ostringstream out;
    out << "BIoT cost and latency report\n";
    out << "scenario        " << to_string(c.scenario) << " / " << gateway::to_string(c.configuration) << " / "
        << to_string(c.scheme) << "\n";
    out << "seed            " << c.seed << "\n";
    out << "duration        " << c.duration.count() << " s, block interval " << c.block_interval.count()
        << " s, confirmations " << c.confirmations << "\n";
    out << "prices          " << c.prices.gas_price_gwei << " gwei, $" << c.prices.eth_usd << "/ETH\n\n";

    out << std::left << std::setw(34) << "operation" << std::right << std::setw(10) << "gas" << std::setw(14)
        << "USD exact" << std::setw(12) << "USD table" << "\n";
    for (const auto& row : operation_rows(c.gas)) {
        out << std::left << std::setw(34) << row.name << std::right << std::setw(10)
            << economics::format_gas(row.gas) << std::setw(14)
            << economics::format_usd(economics::usd_cost(row.gas, exact), 5) << std::setw(12)
            << economics::format_usd(economics::usd_cost(row.gas, table), 3) << "\n";
    }

    out << "\nper 24h of operation and device (" << devices::kFrameSize << "-byte frames, "
        << devices::kFrameBodySize << " data bytes on-chain)\n";
    out << std::left << std::setw(34) << "scheme" << std::right << std::setw(10) << "anchors" << std::setw(14)
        << "gas/day" << std::setw(12) << "USD exact" << std::setw(12) << "USD table" << "\n";
    for (const auto& p : projections(c)) {
        out << std::left << std::setw(34) << std::string(to_string(p.scheme)) + " (projected)" << std::right
            << std::setw(10) << p.anchors_per_day << std::setw(14) << economics::format_gas(p.gas_per_day)
            << std::setw(12) << economics::format_usd(p.usd_exact, 5) << std::setw(12) << usd_short(p.usd_table)
            << "\n";
    }
    const auto run_exact = economics::build_cost_report(r.charges, exact);
    const auto run_table = economics::build_cost_report(r.charges, table);
    out << std::left << std::setw(34) << std::string(to_string(c.scheme)) + " (this run)" << std::right
        << std::setw(10) << device_anchors_per_day(r)
        << std::setw(14) << economics::format_gas(run_exact.gas_per_day) << std::setw(12)
        << economics::format_usd(run_exact.usd_per_day, 5) << std::setw(12) << usd_short(run_table.usd_per_day)
        << "\n";
    out << "messages/day " << run_exact.messages_per_day << ", setup gas " << economics::format_gas(run_exact.setup_gas)
        << ", client gas " << economics::format_gas(run_exact.client_gas) << ", total gas "
        << economics::format_gas(run_exact.total_gas) << "\n\n";

    const auto lat = latency_stats(r);
    out << "latency (" << gateway::to_string(c.configuration) << ")\n";
    out << "interactions    " << lat.interactions << " (" << lat.completed << " answered, " << lat.failed
        << " failed)\n";
    out << "chain wait      min " << lat.min << " s, mean " << lat.mean << " s, max " << lat.max << " s\n\n";
    out << "note: " << kRoundingNote << "\n";
    return out.str();
}

std::string emit_csv(const RunResult& r) {
    std::ostringstream out;
    out << "interaction,kind,device,started_at,resolved_at,chain_wait_seconds,status\n";
    for (const auto& ix : r.interactions) {
        out << ix.id << ',' << ix.kind << ',' << ix.device.to_hex() << ',' << ix.started_at.count() << ',';
        if (ix.resolved_at) out << ix.resolved_at->count();
        out << ',';
        if (ix.chain_wait) out << ix.chain_wait->count();
        out << ',' << (ix.failure ? std::string(biot::to_string(*ix.failure)) : std::string(ix.chain_wait ? "ok" : "pending"))
            << '\n';
    }
    return out.str();
}

}  // namespace

ReportFormat parse_report_format(std::string_view text) {
    if (text == "table") return ReportFormat::Table;
    if (text == "json") return ReportFormat::Json;
    if (text == "csv") return ReportFormat::Csv;
    throw Error(ErrorCode::InvalidArgument, "unknown report format '" + std::string(text) + "'");
}

nlohmann::json report_json(const RunResult& r) {
    const auto& c = r.config;
    const auto exact = with_rounding(c.prices, economics::UsdRounding::Exact);
    const auto table = with_rounding(c.prices, economics::UsdRounding::PaperTable);

    nlohmann::json ops = nlohmann::json::array();
    for (const auto& row : operation_rows(c.gas)) {
        ops.push_back({{"operation", row.name},
                       {"gas", row.gas},
                       {"usdExact", economics::usd_cost(row.gas, exact)},
                       {"usdTable", economics::usd_cost(row.gas, table)}});
    }
    nlohmann::json proj = nlohmann::json::array();
    for (const auto& p : projections(c)) {
        proj.push_back({{"scheme", to_string(p.scheme)},
                        {"anchorsPerDay", p.anchors_per_day},
                        {"gasPerDay", p.gas_per_day},
                        {"usdPerDayExact", p.usd_exact},
                        {"usdPerDayTable", p.usd_table}});
    }
    nlohmann::json windows = nlohmann::json::array();
    for (const auto& w : r.windows) {
        windows.push_back({{"device", w.device.to_hex()},
                           {"windowId", w.window_id},
                           {"openedAt", w.opened_at.count()},
                           {"closedAt", w.closed_at.count()},
                           {"leaves", w.leaves},
                           {"root", to_hex(as_view(w.root))},
                           {"tx", w.tx}});
    }
    const auto lat = latency_stats(r);
    return {
        {"config", to_json(c)},
        {"operations", std::move(ops)},
        {"projection", std::move(proj)},
        {"cost", economics::to_json(r.cost)},
        {"costExact", economics::to_json(economics::build_cost_report(r.charges, exact))},
        {"costTable", economics::to_json(economics::build_cost_report(r.charges, table))},
        {"latency",
         {{"interactions", lat.interactions},
          {"answered", lat.completed},
          {"failed", lat.failed},
          {"minChainWaitSeconds", lat.min},
          {"meanChainWaitSeconds", lat.mean},
          {"maxChainWaitSeconds", lat.max}}},
        {"windows", std::move(windows)},
        {"ledger",
         {{"blocks", r.blocks.size()},
          {"headDigest", r.blocks.empty() ? std::string() : to_hex(as_view(r.blocks.back().digest))},
          {"stateDigest", to_hex(as_view(r.state_digest))},
          {"operationStart", r.operation_start.count()},
          {"operationEnd", r.operation_end.count()},
          {"finishedAt", r.finished_at.count()}}},
        {"roundingNote", kRoundingNote},
    };
}

std::string emit_report(const RunResult& result, ReportFormat format) {
    switch (format) {
        case ReportFormat::Table: return emit_table(result);
        case ReportFormat::Json: return report_json(result).dump(2) + "\n";
        case ReportFormat::Csv: return emit_csv(result);
    }
    return {};
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::InvalidArgument, "write failed: " + path.string());
}

}  // namespace

void write_run_directory(const RunResult& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    ledger::write_ledger_file(dir / "ledger.bin", r.blocks);
    write_text(dir / "ledger.json", ledger::ledger_to_json(r.blocks).dump(2) + "\n");

    std::ostringstream events;
    for (const auto& e : r.events) events << ledger::to_json(e).dump() << '\n';
    write_text(dir / "events.jsonl", events.str());

    std::ostringstream gw;
    for (const auto& e : r.gateway_log) gw << gateway::to_json(e).dump() << '\n';
    write_text(dir / "gateway.jsonl", gw.str());

    write_text(dir / "traces.csv", devices::traces_to_csv(r.traces));
    write_text(dir / "latencies.csv", emit_report(r, ReportFormat::Csv));
    write_text(dir / "report.json", emit_report(r, ReportFormat::Json));
    write_text(dir / "report.txt", emit_report(r, ReportFormat::Table));
    write_text(dir / "config.json", to_json(r.config).dump(2) + "\n");
    anchoring::OffchainStore::write_file(dir / "offchain.store", r.offchain);

    std::ostringstream proofs;
    for (const auto& p : r.proofs) proofs << proof_file_json(p).dump() << '\n';
    write_text(dir / "proofs.jsonl", proofs.str());
}

}  // namespace biot::harness
