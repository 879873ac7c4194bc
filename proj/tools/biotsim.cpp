// biotsim: operator interface to the simulated chain, scenarios and proofs.
//
// Exit codes: 0 ok, 1 other error, 2 RootNotFound, 3 VerifyFailed,
// 4 MalformedProof, 5 ledger file unreadable or corrupt, 64 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "biot/harness.hpp"
#include "biot/ledger.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace biot;

namespace {

constexpr int kExitError = 1;
constexpr int kExitRootNotFound = 2;
constexpr int kExitVerifyFailed = 3;
constexpr int kExitMalformedProof = 4;
constexpr int kExitLedgerUnreadable = 5;
constexpr int kExitUsage = 64;

struct LedgerUnreadable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Address parse_address(const std::string& text) {
    return text.rfind("0x", 0) == 0 ? Address::from_hex(text) : Address::from_label(text);
}

DeviceId parse_device(const std::string& text) {
    return text.rfind("0x", 0) == 0 ? DeviceId::from_hex(text) : DeviceId::from_label(text);
}

std::vector<ledger::Block> load_chain(const fs::path& path) {
    std::vector<ledger::Block> blocks;
    try {
        blocks = ledger::read_ledger_file(path);
    } catch (const Error& e) {
        throw LedgerUnreadable(path.string() + ": " + e.what());
    }
    if (blocks.empty() || !ledger::verify_chain(blocks)) throw LedgerUnreadable(path.string() + ": chain does not verify");
    return blocks;
}

ledger::LedgerConfig ledger_config(std::int64_t block_interval) {
    ledger::LedgerConfig c;
    c.latency.block_interval = Seconds{block_interval};
    c.latency.validate();
    return c;
}

std::unique_ptr<ledger::Ledger> open_ledger(const fs::path& path, std::int64_t block_interval, bool create) {
    if (create && !fs::exists(path)) return std::make_unique<ledger::Ledger>(ledger_config(block_interval));
    const auto blocks = load_chain(path);
    try {
        return ledger::Ledger::replay(blocks, ledger_config(block_interval));
    } catch (const Error& e) {
        throw LedgerUnreadable(path.string() + ": " + e.what());
    }
}

nlohmann::json receipt_json(const std::string& op, const ledger::Receipt& r) {
    nlohmann::json j{{"operation", op},
                     {"status", ledger::to_string(r.status)},
                     {"gasUsed", r.gas_used},
                     {"block", r.block_index},
                     {"includedAt", r.included_at.count()}};
    if (r.error) j["error"] = biot::to_string(*r.error);
    return j;
}

ledger::Receipt submit_and_wait(ledger::Ledger& l, const Address& sender, const contract::EncodedCall& call) {
    l.create_account(sender);
    return l.wait_for(l.submit(sender, call, l.head_time()));
}

Bytes read_binary(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
    return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_binary(const fs::path& path, ByteView bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void print_status(std::string_view status, const std::string& detail) {
    std::cout << nlohmann::json{{"status", status}, {"detail", detail}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BIoT gateway and ledger simulator"};
    app.require_subcommand(1);

    std::string ledger_path, gateway_label, device_label, admin_label = "biot/admin";
    std::int64_t block_interval = 15;

    auto* deploy = app.add_subcommand("deploy", "Deploy the contract into a ledger file");
    deploy->add_option("--ledger", ledger_path, "Ledger record file")->required();
    deploy->add_option("--admin", admin_label, "Deployer account (0x-hex or label)");
    deploy->add_option("--block-interval", block_interval, "Block interval in virtual seconds");

    auto* reg = app.add_subcommand("register", "Register a gateway and optionally a device");
    reg->add_option("--ledger", ledger_path, "Ledger record file")->required();
    reg->add_option("--gateway", gateway_label, "Gateway account (0x-hex or label)")->required();
    reg->add_option("--device", device_label, "Device id to bind to the gateway (0x-hex or label)");
    reg->add_option("--admin", admin_label, "Administrator account (0x-hex or label)");
    reg->add_option("--block-interval", block_interval, "Block interval in virtual seconds");

    std::string config_path, out_dir, run_dir, format = "table";
    auto* run = app.add_subcommand("run-scenario", "Run a scenario and write its run directory");
    run->add_option("--config", config_path, "Scenario config JSON")->required();
    run->add_option("--out", out_dir, "Run directory to create")->required();

    auto* report = app.add_subcommand("report", "Emit a scenario report");
    auto* report_config = report->add_option("--config", config_path, "Scenario config JSON");
    auto* report_dir = report->add_option("--run-dir", run_dir, "Run directory written by run-scenario");
    report_config->excludes(report_dir);
    report->add_option("--format", format, "table, json or csv")
        ->check(CLI::IsMember({"table", "json", "csv"}));

    std::string payload_path, proof_path;
    auto* verify = app.add_subcommand("verify-proof", "Check an exported inclusion proof against a ledger");
    verify->add_option("--ledger", ledger_path, "Ledger record file")->required();
    verify->add_option("--payload", payload_path, "Payload file (raw bytes)")->required();
    verify->add_option("--proof", proof_path, "Proof JSON file")->required();

    std::uint64_t sequence = 0;
    auto* exportp = app.add_subcommand("export-proof", "Export one record's payload and proof from a run");
    exportp->add_option("--run-dir", run_dir, "Run directory")->required();
    exportp->add_option("--sequence", sequence, "Off-chain record sequence")->required();
    exportp->add_option("--proof", proof_path, "Proof JSON to write")->required();
    exportp->add_option("--payload", payload_path, "Payload file to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*deploy) {
            auto l = open_ledger(ledger_path, block_interval, true);
            const auto r = submit_and_wait(*l, parse_address(admin_label), contract::calls::deploy());
            ledger::write_ledger_file(ledger_path, l->blocks());
            std::cout << receipt_json("deploy", r).dump() << "\n";
            return r.status == ledger::TxStatus::Included ? 0 : kExitError;
        }
        if (*reg) {
            auto l = open_ledger(ledger_path, block_interval, false);
            const auto admin = parse_address(admin_label);
            const auto gw = parse_address(gateway_label);
            l->create_account(gw);
            auto r = submit_and_wait(*l, admin, contract::calls::register_gateway(gw));
            std::cout << receipt_json("registerGateway", r).dump() << "\n";
            bool ok = r.status == ledger::TxStatus::Included;
            if (ok && !device_label.empty()) {
                r = submit_and_wait(*l, admin, contract::calls::register_device(parse_device(device_label), gw));
                std::cout << receipt_json("registerDevice", r).dump() << "\n";
                ok = r.status == ledger::TxStatus::Included;
            }
            ledger::write_ledger_file(ledger_path, l->blocks());
            return ok ? 0 : kExitError;
        }
        if (*run) {
            const auto result = harness::run_scenario(harness::load_scenario_config(config_path));
            harness::write_run_directory(result, out_dir);
            std::cout << harness::emit_report(result, harness::ReportFormat::Table);
            return 0;
        }
        if (*report) {
            if (config_path.empty() && run_dir.empty()) {
                std::cerr << "report: one of --config or --run-dir is required\n";
                return kExitUsage;
            }
            const fs::path cfg = config_path.empty() ? fs::path(run_dir) / "config.json" : fs::path(config_path);
            const auto result = harness::run_scenario(harness::load_scenario_config(cfg));
            std::cout << harness::emit_report(result, harness::parse_report_format(format));
            return 0;
        }
        if (*verify) {
            harness::ExportedProof proof;
            try {
                std::ifstream in(proof_path);
                if (!in) throw Error(ErrorCode::MalformedProof, "cannot open " + proof_path);
                proof = harness::proof_file_from_json(nlohmann::json::parse(in));
            } catch (const nlohmann::json::exception& e) {
                print_status("MalformedProof", e.what());
                return kExitMalformedProof;
            } catch (const Error& e) {
                print_status("MalformedProof", e.what());
                return kExitMalformedProof;
            }
            const auto blocks = load_chain(ledger_path);
            const auto outcome = harness::verify_proof(blocks, proof.device, read_binary(payload_path), proof.proof);
            print_status(harness::to_string(outcome.status), outcome.detail);
            switch (outcome.status) {
                case harness::ProofStatus::Ok: return 0;
                case harness::ProofStatus::RootNotFound: return kExitRootNotFound;
                case harness::ProofStatus::VerifyFailed: return kExitVerifyFailed;
                case harness::ProofStatus::MalformedProof: return kExitMalformedProof;
            }
            return kExitError;
        }
        if (*exportp) {
            const fs::path dir(run_dir);
            std::ifstream in(dir / "proofs.jsonl");
            if (!in) throw Error(ErrorCode::InvalidArgument, "no proofs.jsonl in " + run_dir);
            const auto records = anchoring::OffchainStore::load(dir / "offchain.store");
            std::string line;
            while (std::getline(in, line)) {
                const auto p = harness::proof_file_from_json(nlohmann::json::parse(line));
                if (p.sequence != sequence) continue;
                for (const auto& r : records) {
                    if (r.device == p.device && r.sequence == p.sequence) {
                        write_binary(payload_path, r.payload);
                        std::ofstream(proof_path) << harness::proof_file_json(p).dump(2) << "\n";
                        print_status("Ok", "exported record " + std::to_string(sequence));
                        return 0;
                    }
                }
            }
            throw Error(ErrorCode::IndexOutOfRange, "no proof for record " + std::to_string(sequence));
        }
    } catch (const LedgerUnreadable& e) {
        print_status("LedgerUnreadable", e.what());
        return kExitLedgerUnreadable;
    } catch (const Error& e) {
        std::cerr << nlohmann::json{{"error", biot::to_string(e.code())}, {"message", e.what()}}.dump() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", "Internal"}, {"message", e.what()}}.dump() << "\n";
        return kExitError;
    }
    return kExitUsage;
}
