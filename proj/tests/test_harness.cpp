#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "biot/event_loop.hpp"
#include "biot/harness.hpp"
#include "support.hpp"

using namespace biot;
using namespace biot::harness;

namespace {

ScenarioConfig container(StorageScheme scheme, gateway::Configuration c = gateway::Configuration::CBG) {
    ScenarioConfig cfg;
    cfg.scenario = Scenario::RefrigeratedContainer;
    cfg.scheme = scheme;
    cfg.configuration = c;
    return cfg;
}

ScenarioConfig light(StorageScheme scheme, gateway::Configuration c = gateway::Configuration::CBG) {
    ScenarioConfig cfg = container(scheme, c);
    cfg.scenario = Scenario::SmartLight;
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("biot_harness_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    return p;
}

std::vector<std::int64_t> waits(const RunResult& r) {
    std::vector<std::int64_t> out;
    for (const auto& ix : r.interactions) {
        if (ix.chain_wait) out.push_back(ix.chain_wait->count());
    }
    return out;
}

ErrorCode config_error(const std::string& text) {
    try {
        (void)scenario_config_from_json(nlohmann::json::parse(text));
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(event_loop, orders_by_time_priority_then_insertion) {
    EventLoop loop;
    std::vector<int> order;
    loop.schedule(Seconds{10}, 1, [&](Seconds) { order.push_back(3); });
    loop.schedule(Seconds{5}, 2, [&](Seconds) { order.push_back(1); });
    loop.schedule(Seconds{10}, 0, [&](Seconds) { order.push_back(2); });
    loop.schedule(Seconds{10}, 1, [&](Seconds) { order.push_back(4); });
    EXPECT_EQ(loop.size(), 4u);
    EXPECT_EQ(loop.run(), 4u);
    EXPECT_EQ(order, (std::vector<int>{1, 2, 3, 4}));
    EXPECT_EQ(loop.now(), Seconds{10});
    EXPECT_TRUE(loop.empty());
    EXPECT_FALSE(loop.step());
}

TEST(event_loop, actions_may_schedule_and_clock_never_regresses) {
    EventLoop loop(Seconds{100});
    int n = 0;
    std::function<void(Seconds)> tick = [&](Seconds now) {
        if (++n < 5) loop.schedule(now + Seconds{15}, 0, tick);
    };
    loop.schedule(Seconds{100}, 0, tick);
    loop.run();
    EXPECT_EQ(n, 5);
    EXPECT_EQ(loop.now(), Seconds{160});
    try {
        loop.schedule(Seconds{159}, 0, [](Seconds) {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ClockRegression);
    }
    EXPECT_EQ(loop.run(0), 0u);
}

TEST(harness, scenario_names) {
    for (auto s : {Scenario::RefrigeratedContainer, Scenario::SmartLight}) EXPECT_EQ(parse_scenario(to_string(s)), s);
    EXPECT_THROW(parse_scenario("fridge"), Error);
}

TEST(harness, config_json_round_trip) {
    auto c = light(StorageScheme::MerkleTree, gateway::Configuration::CGB);
    c.seed = 99;
    c.window.max_leaves = 7;
    c.messages_per_day = 30;
    const auto back = scenario_config_from_json(nlohmann::json::parse(to_json(c).dump()));
    EXPECT_EQ(to_json(back), to_json(c));
    EXPECT_EQ(back.seed, 99u);
    EXPECT_EQ(back.window.max_leaves, 7u);
}

TEST(harness, config_errors) {
    EXPECT_EQ(config_error(R"({"scenario":"SmartLight","colour":"red"})"), ErrorCode::ConfigInvalid);
    EXPECT_EQ(config_error(R"({"scenario":"Toaster"})"), ErrorCode::ConfigInvalid);
    EXPECT_EQ(config_error(R"({"durationSeconds":0})"), ErrorCode::ConfigInvalid);
    EXPECT_EQ(config_error(R"({"durationSeconds":"long"})"), ErrorCode::ConfigInvalid);
    EXPECT_EQ(config_error(R"({"blockIntervalSeconds":-15})"), ErrorCode::ConfigInvalid);
    EXPECT_EQ(config_error(R"({"scheme":"Blockchain"})"), ErrorCode::ConfigInvalid);
    EXPECT_EQ(config_error(R"([1,2])"), ErrorCode::ConfigInvalid);
    try {
        (void)load_scenario_config("/nonexistent/biot.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid);
    }
}

TEST(harness, message_count_scales_with_duration) {
    auto c = container(StorageScheme::FullOnChain);
    EXPECT_EQ(c.message_count(), 1440u);
    c.duration = Seconds{3600};
    EXPECT_EQ(c.message_count(), 60u);
    auto l = light(StorageScheme::FullOnChain);
    EXPECT_EQ(l.message_count(), 20u);
    l.messages_per_day = 48;
    l.duration = Seconds{43'200};
    EXPECT_EQ(l.message_count(), 24u);
}

TEST(harness, container_full_on_chain_day) {
    const auto r = run_scenario(container(StorageScheme::FullOnChain));
    EXPECT_EQ(r.interactions.size(), 1440u);
    EXPECT_EQ(r.frames_emitted, 1440u);
    EXPECT_EQ(r.cost.messages_per_day, 1440u);
    EXPECT_EQ(r.cost.gas_per_day, 1440u * 52'132u);
    EXPECT_NEAR(r.cost.usd_per_day, 12.61177, 1e-4);
    EXPECT_EQ(r.cost.setup_gas, 866'212u + 2 * 43'702u);
    for (const auto w : waits(r)) EXPECT_EQ(w, 15);
    EXPECT_TRUE(verify_chain(r.blocks));
    EXPECT_EQ(r.operation_start.count() % 60, 0);
}

TEST(harness, container_full_on_chain_table_mode) {
    auto c = container(StorageScheme::FullOnChain);
    c.prices.rounding = economics::UsdRounding::PaperTable;
    EXPECT_NEAR(run_scenario(c).cost.usd_per_day, 11.52, 1e-9);
}

TEST(harness, container_data_hashing_day) {
    const auto r = run_scenario(container(StorageScheme::DataHashing));
    EXPECT_EQ(r.cost.gas_per_day, 1440u * 72'433u);
    EXPECT_NEAR(r.cost.usd_per_day, 17.52299, 1e-4);
    ASSERT_EQ(r.offchain.size(), 1440u);
    for (const auto& rec : r.offchain) {
        EXPECT_TRUE(rec.intact());
        EXPECT_EQ(rec.payload.size(), 24u);
    }
}

TEST(harness, container_merkle_day) {
    const auto r = run_scenario(container(StorageScheme::MerkleTree));
    EXPECT_EQ(r.cost.gas_per_day, 72'433u);
    EXPECT_EQ(r.cost.window_anchors_per_day, 1u);
    EXPECT_NEAR(r.cost.usd_per_day, 0.01217, 1e-5);
    ASSERT_EQ(r.windows.size(), 1u);
    EXPECT_EQ(r.windows[0].leaves, 1440u);
    EXPECT_EQ(r.proofs.size(), 1440u);
    const auto table = emit_report(r, ReportFormat::Table);
    EXPECT_NE(table.find("0.012"), std::string::npos);
}

// Every exported proof verifies against the anchored root in the run's ledger.
TEST(harness, merkle_proofs_verify_against_ledger) {
    auto c = container(StorageScheme::MerkleTree);
    c.duration = Seconds{7200};
    c.window.duration = Seconds{1800};
    const auto r = run_scenario(c);
    EXPECT_EQ(r.windows.size(), 4u);
    for (const auto& p : r.proofs) {
        const auto it = std::find_if(r.offchain.begin(), r.offchain.end(),
                                     [&](const auto& rec) { return rec.sequence == p.sequence; });
        ASSERT_NE(it, r.offchain.end());
        EXPECT_EQ(verify_proof(r.blocks, r.device, it->payload, p.proof).status, ProofStatus::Ok);
        auto bad = it->payload;
        bad[20] ^= 1;
        EXPECT_EQ(verify_proof(r.blocks, r.device, bad, p.proof).status, ProofStatus::VerifyFailed);
        auto lost = p.proof;
        lost.window_id = 1000;
        EXPECT_EQ(verify_proof(r.blocks, r.device, it->payload, lost).status, ProofStatus::RootNotFound);
    }
}

TEST(harness, proof_file_round_trip) {
    auto c = container(StorageScheme::MerkleTree);
    c.duration = Seconds{3600};
    const auto r = run_scenario(c);
    ASSERT_FALSE(r.proofs.empty());
    const auto j = proof_file_json(r.proofs[5]);
    EXPECT_EQ(proof_file_from_json(nlohmann::json::parse(j.dump())), r.proofs[5]);
    EXPECT_THROW(proof_file_from_json(nlohmann::json::parse(R"({"sequence":1})")), Error);
}

TEST(harness, light_cbg_day) {
    const auto r = run_scenario(light(StorageScheme::FullOnChain));
    EXPECT_EQ(r.interactions.size(), 20u);
    EXPECT_EQ(r.cost.gas_per_day, 20u * 52'132u);
    EXPECT_EQ(r.cost.client_gas, 20u * 52'132u);
    EXPECT_NEAR(r.cost.usd_per_day, 0.17516, 1e-5);
    for (const auto w : waits(r)) EXPECT_EQ(w, 30);
    EXPECT_EQ(waits(r).size(), 20u);
    ASSERT_EQ(r.light_states.size(), 20u);
    for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(r.light_states[i].second, i % 2 == 0);
}

TEST(harness, light_data_hashing_day) {
    const auto r = run_scenario(light(StorageScheme::DataHashing));
    EXPECT_EQ(r.cost.gas_per_day, 20u * 72'433u);
    EXPECT_NEAR(r.cost.usd_per_day, 0.24337, 1e-5);
}

// CGB answers at once; CBG waits for two block inclusions.
TEST(harness, light_cbg_versus_cgb) {
    const auto cbg = run_scenario(light(StorageScheme::FullOnChain));
    const auto cgb = run_scenario(light(StorageScheme::FullOnChain, gateway::Configuration::CGB));
    ASSERT_EQ(cbg.light_states.size(), cgb.light_states.size());
    for (std::size_t i = 0; i < cbg.light_states.size(); ++i) {
        EXPECT_EQ(cbg.light_states[i].second, cgb.light_states[i].second);
        EXPECT_EQ(cbg.light_states[i].first - cgb.light_states[i].first, Seconds{15});
    }
    for (const auto w : waits(cgb)) EXPECT_EQ(w, 0);
    EXPECT_EQ(waits(cgb).size(), 20u);
}

TEST(harness, cgb_latency_ignores_block_interval) {
    auto c = light(StorageScheme::FullOnChain, gateway::Configuration::CGB);
    c.block_interval = Seconds{60};
    for (const auto w : waits(run_scenario(c))) EXPECT_EQ(w, 0);
    c.configuration = gateway::Configuration::CBG;
    for (const auto w : waits(run_scenario(c))) EXPECT_EQ(w, 120);
}

TEST(harness, offline_light_fails_every_command) {
    auto c = light(StorageScheme::FullOnChain);
    c.device_offline = true;
    const auto r = run_scenario(c);
    EXPECT_TRUE(r.light_states.empty());
    for (const auto& ix : r.interactions) {
        EXPECT_EQ(ix.failure, ErrorCode::DeviceTimeout);
        EXPECT_FALSE(ix.resolved_at);
    }
}

TEST(harness, idle_gateway_leaves_commands_unanswered) {
    auto c = light(StorageScheme::FullOnChain);
    c.gateway_processing = false;
    const auto r = run_scenario(c);
    EXPECT_TRUE(r.light_states.empty());
    EXPECT_TRUE(waits(r).empty());
    EXPECT_EQ(r.cost.device_gas, 0u);
}

TEST(harness, latency_csv_has_one_row_per_message) {
    const auto r = run_scenario(container(StorageScheme::FullOnChain));
    const auto csv = emit_report(r, ReportFormat::Csv);
    EXPECT_EQ(csv.rfind("interaction,kind,device,started_at,resolved_at,chain_wait_seconds,status\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1441);
}

TEST(harness, json_report_fields) {
    const auto r = run_scenario(light(StorageScheme::FullOnChain));
    const auto j = nlohmann::json::parse(emit_report(r, ReportFormat::Json));
    EXPECT_EQ(j["ledger"]["blocks"], r.blocks.size());
    EXPECT_EQ(j["latency"]["answered"], 20);
    EXPECT_EQ(j["ledger"]["stateDigest"], to_hex(as_view(r.state_digest)));
    EXPECT_TRUE(j.contains("roundingNote"));
}

TEST(harness, report_format_names) {
    EXPECT_EQ(parse_report_format("table"), ReportFormat::Table);
    EXPECT_EQ(parse_report_format("json"), ReportFormat::Json);
    EXPECT_EQ(parse_report_format("csv"), ReportFormat::Csv);
    EXPECT_THROW(parse_report_format("xml"), Error);
}

// Same config and seed give byte-identical run directories.
TEST(harness, runs_are_deterministic) {
    for (const auto& c : {container(StorageScheme::MerkleTree), light(StorageScheme::DataHashing)}) {
        const auto a = temp_dir("a"), b = temp_dir("b");
        write_run_directory(run_scenario(c), a);
        write_run_directory(run_scenario(c), b);
        std::size_t files = 0;
        for (const auto& entry : std::filesystem::directory_iterator(a)) {
            EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path().filename();
            ++files;
        }
        EXPECT_EQ(files, 11u);
        EXPECT_EQ(ledger::read_ledger_file(a / "ledger.bin"), run_scenario(c).blocks);
        std::filesystem::remove_all(a);
        std::filesystem::remove_all(b);
    }
    auto c = light(StorageScheme::FullOnChain);
    const auto first = run_scenario(c);
    c.seed = 2;
    // Another seed moves the commands to other minutes.
    EXPECT_NE(run_scenario(c).blocks, first.blocks);
}

TEST(harness, recorded_ledger_replays) {
    const auto r = run_scenario(light(StorageScheme::DataHashing));
    ledger::LedgerConfig lc;
    const auto replayed = ledger::Ledger::replay(r.blocks, lc);
    EXPECT_EQ(replayed->state_digest(), r.state_digest);
}
