#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "biot/anchoring.hpp"
#include "biot/common.hpp"
#include "biot/devices.hpp"
#include "biot/economics.hpp"
#include "biot/gateway.hpp"
#include "biot/ledger.hpp"
#include "biot/merkle.hpp"
#include "json.hpp"

namespace biot::harness {

enum class Scenario { RefrigeratedContainer, SmartLight };

std::string_view to_string(Scenario s) noexcept;
Scenario parse_scenario(std::string_view text);  // throws Error(ConfigInvalid)

struct ScenarioConfig {
    Scenario scenario = Scenario::RefrigeratedContainer;
    gateway::Configuration configuration = gateway::Configuration::CBG;
    StorageScheme scheme = StorageScheme::FullOnChain;
    Seconds duration{86'400};
    Seconds block_interval{15};
    std::uint32_t confirmations = 1;
    std::uint64_t seed = 1;
    bool anchor_optional = true;
    // Defaults: 1,440 telemetry frames or 20 light commands per day.
    std::optional<std::uint64_t> messages_per_day;
    economics::PriceContext prices;
    anchoring::WindowPolicy window;
    economics::GasSchedule gas;
    bool device_offline = false;
    bool gateway_processing = true;

    // Throws Error(ConfigInvalid).
    void validate() const;
    // Messages over the whole run.
    [[nodiscard]] std::uint64_t message_count() const;
};

nlohmann::json to_json(const ScenarioConfig& config);
ScenarioConfig scenario_config_from_json(const nlohmann::json& j);  // throws Error(ConfigInvalid)
ScenarioConfig load_scenario_config(const std::filesystem::path& path);

// One chain wait: from submission to the resolution of a transaction, or of
// the root anchor of the Merkle window the payload went into.
struct Leg {
    Seconds submitted_at{0};
    std::optional<std::uint64_t> tx;
    std::optional<std::uint64_t> window_id;
    std::optional<Seconds> resolved_at;

    bool operator==(const Leg&) const = default;
};

struct Interaction {
    std::uint64_t id = 0;
    std::string kind;  // "telemetry" or "command"
    DeviceId device;
    Seconds started_at{0};
    std::vector<Leg> legs;        // on the client path; their waits add up
    std::vector<Leg> background;  // anchoring the client does not wait for
    std::optional<ErrorCode> failure;
    std::optional<Seconds> resolved_at;
    std::optional<Seconds> chain_wait;  // sum over legs

    bool operator==(const Interaction&) const = default;
};

struct WindowSummary {
    DeviceId device;
    std::uint64_t window_id = 0;
    Seconds opened_at{0};
    Seconds closed_at{0};
    std::size_t leaves = 0;
    Digest root{};
    std::uint64_t tx = 0;

    bool operator==(const WindowSummary&) const = default;
};

struct ExportedProof {
    DeviceId device;
    std::uint64_t sequence = 0;
    anchoring::InclusionProof proof;

    bool operator==(const ExportedProof&) const = default;
};

struct RunResult {
    ScenarioConfig config;
    Address admin;
    Address gateway;
    Address client;
    DeviceId device;
    Seconds operation_start{0};
    Seconds operation_end{0};
    Seconds finished_at{0};

    std::vector<ledger::Block> blocks;
    std::vector<ledger::Event> events;
    std::vector<Interaction> interactions;
    economics::ChargeLog charges;
    economics::CostReport cost;  // under config.prices
    std::vector<devices::TraceEntry> traces;
    std::vector<gateway::LogEntry> gateway_log;
    std::vector<anchoring::OffchainRecord> offchain;
    std::vector<WindowSummary> windows;
    std::vector<ExportedProof> proofs;
    std::vector<std::pair<Seconds, bool>> light_states;
    std::uint64_t frames_emitted = 0;
    Digest state_digest{};
};

// Deploys, registers, drives the scenario over its duration on the virtual
// clock, closes open windows and produces blocks until every transaction
// has resolved. Throws Error(ConfigInvalid).
RunResult run_scenario(const ScenarioConfig& config);

// Gas charges of every non-genesis transaction, attributed by sender.
economics::ChargeLog charge_log(const RunResult& result);

enum class ReportFormat { Table, Json, Csv };
ReportFormat parse_report_format(std::string_view text);

std::string emit_report(const RunResult& result, ReportFormat format);
nlohmann::json report_json(const RunResult& result);

// Writes ledger.bin, ledger.json, events.jsonl, gateway.jsonl, traces.csv,
// latencies.csv, report.json, report.txt, config.json, offchain.store and
// proofs.jsonl into `dir`.
void write_run_directory(const RunResult& result, const std::filesystem::path& dir);

enum class ProofStatus { Ok, RootNotFound, VerifyFailed, MalformedProof };

std::string_view to_string(ProofStatus status) noexcept;

struct ProofOutcome {
    ProofStatus status = ProofStatus::Ok;
    std::string detail;
};

// The root anchored for (device, window) by an Included transaction, if any.
std::optional<Digest> anchored_root(const std::vector<ledger::Block>& blocks, const DeviceId& device,
                                    std::uint64_t window_id);

ProofOutcome verify_proof(const std::vector<ledger::Block>& blocks, const DeviceId& device, ByteView payload,
                          const anchoring::InclusionProof& proof);

// Proof file: the proof JSON plus "device" and "sequence".
nlohmann::json proof_file_json(const ExportedProof& proof);
ExportedProof proof_file_from_json(const nlohmann::json& j);  // throws Error(MalformedProof)

}  // namespace biot::harness
