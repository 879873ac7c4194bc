#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result biotsim(const std::string& args) {
    const std::string cmd = std::string(BIOTSIM_PATH) + " " + args + " 2>/dev/null";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path workdir() {
    const auto p = fs::temp_directory_path() / ("biot_cli_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

nlohmann::json last_json_line(const std::string& out) {
    auto end = out.find_last_not_of('\n');
    auto start = out.rfind('\n', end);
    return nlohmann::json::parse(out.substr(start == std::string::npos ? 0 : start + 1, end + 1));
}

}  // namespace

TEST(cli, usage_errors_exit_64) {
    EXPECT_EQ(biotsim("").code, 64);
    EXPECT_EQ(biotsim("frobnicate").code, 64);
    EXPECT_EQ(biotsim("deploy").code, 64);
    EXPECT_EQ(biotsim("report --format json").code, 64);
}

TEST(cli, deploy_and_register) {
    const auto dir = workdir();
    const auto ledger = dir / "chain.bin";
    fs::remove(ledger);
    auto r = biotsim("deploy --ledger " + ledger.string());
    ASSERT_EQ(r.code, 0);
    auto j = last_json_line(r.out);
    EXPECT_EQ(j["gasUsed"], 866'212);
    EXPECT_EQ(j["status"], "Included");

    r = biotsim("register --ledger " + ledger.string() + " --gateway biot/gateway-0 --device biot/light-0");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(last_json_line(r.out)["operation"], "registerDevice");
    EXPECT_EQ(last_json_line(r.out)["gasUsed"], 43'702);

    // A non-admin caller is rejected on chain.
    r = biotsim("register --ledger " + ledger.string() + " --gateway biot/gateway-1 --admin biot/mallory");
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(last_json_line(r.out)["status"], "Reverted");
    fs::remove_all(dir);
}

TEST(cli, corrupt_ledger_exits_5) {
    const auto dir = workdir();
    const auto ledger = dir / "chain.bin";
    write_text(ledger, "not a ledger");
    EXPECT_EQ(biotsim("register --ledger " + ledger.string() + " --gateway g").code, 5);
    fs::remove_all(dir);
}

// run-scenario, export-proof and verify-proof over the same run directory.
TEST(cli, scenario_and_proof_round_trip) {
    const auto dir = workdir();
    const auto cfg = dir / "merkle.json";
    write_text(cfg, R"({"scenario":"RefrigeratedContainer","configuration":"CBG","scheme":"MerkleTree",
                        "durationSeconds":3600,"seed":4})");
    const auto run = dir / "run";
    auto r = biotsim("run-scenario --config " + cfg.string() + " --out " + run.string());
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("MerkleTree"), std::string::npos);
    for (const char* f : {"ledger.bin", "ledger.json", "events.jsonl", "gateway.jsonl", "traces.csv", "latencies.csv",
                          "report.json", "report.txt", "config.json", "offchain.store", "proofs.jsonl"}) {
        EXPECT_TRUE(fs::exists(run / f)) << f;
    }

    const auto proof = dir / "p.json", payload = dir / "p.bin";
    ASSERT_EQ(biotsim("export-proof --run-dir " + run.string() + " --sequence 17 --proof " + proof.string() +
                      " --payload " + payload.string())
                  .code,
              0);
    const std::string verify = "verify-proof --ledger " + (run / "ledger.bin").string() + " --proof " +
                               proof.string() + " --payload " + payload.string();
    r = biotsim(verify);
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(last_json_line(r.out)["status"], "Ok");

    auto bytes = read_text(payload);
    bytes[3] ^= 1;
    write_text(payload, bytes);
    r = biotsim(verify);
    EXPECT_EQ(r.code, 3);
    EXPECT_EQ(last_json_line(r.out)["status"], "VerifyFailed");
    bytes[3] ^= 1;
    write_text(payload, bytes);

    auto pj = nlohmann::json::parse(read_text(proof));
    pj["windowId"] = 99;
    write_text(proof, pj.dump());
    EXPECT_EQ(biotsim(verify).code, 2);

    write_text(proof, R"({"device":"zz"})");
    EXPECT_EQ(biotsim(verify).code, 4);

    EXPECT_EQ(biotsim("export-proof --run-dir " + run.string() + " --sequence 100000 --proof " + proof.string() +
                      " --payload " + payload.string())
                  .code,
              1);
    fs::remove_all(dir);
}

TEST(cli, report_formats) {
    const auto dir = workdir();
    const auto cfg = dir / "light.json";
    write_text(cfg, R"({"scenario":"SmartLight","configuration":"CGB","scheme":"FullOnChain"})");
    auto r = biotsim("report --config " + cfg.string() + " --format json");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(nlohmann::json::parse(r.out)["latency"]["answered"], 20);
    r = biotsim("report --config " + cfg.string() + " --format csv");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 21);
    r = biotsim("report --config " + cfg.string());
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("866,212"), std::string::npos);

    write_text(cfg, R"({"scenario":"SmartLight","bogus":1})");
    EXPECT_EQ(biotsim("report --config " + cfg.string()).code, 1);
    fs::remove_all(dir);
}
