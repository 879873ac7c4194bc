#include "biot/harness.hpp"

#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "biot/event_loop.hpp"

namespace biot::harness {

namespace {

constexpr std::int64_t kSecondsPerDay = 86'400;

// Event priorities at equal times: blocks first, then actors, then window upkeep.
constexpr int kBlockPriority = 0;
constexpr int kActorPriority = 1;
constexpr int kMaintenancePriority = 2;
constexpr int kFinishPriority = 3;

Digest fingerprint_for(std::string_view label) { return sha256(as_view(sha256(to_bytes(label)))); }

Seconds ceil_to(Seconds t, Seconds step) {
    const auto s = step.count();
    return Seconds{(t.count() + s - 1) / s * s};
}

}  // namespace

std::string_view to_string(Scenario s) noexcept {
    return s == Scenario::RefrigeratedContainer ? "RefrigeratedContainer" : "SmartLight";
}

Scenario parse_scenario(std::string_view text) {
    if (text == "RefrigeratedContainer") return Scenario::RefrigeratedContainer;
    if (text == "SmartLight") return Scenario::SmartLight;
    throw Error(ErrorCode::ConfigInvalid, "unknown scenario '" + std::string(text) + "'");
}

// ---- config -----------------------------------------------------------------------

void ScenarioConfig::validate() const {
    const auto bad = [](const std::string& what) { return Error(ErrorCode::ConfigInvalid, what); };
    if (duration.count() <= 0) throw bad("durationSeconds must be positive");
    if (block_interval.count() <= 0) throw bad("blockIntervalSeconds must be positive");
    if (confirmations == 0) throw bad("confirmations must be at least 1");
    if (messages_per_day && *messages_per_day == 0) throw bad("messagesPerDay must be positive");
    prices.validate();
    window.validate();
    gas.validate();
    const auto n = message_count();
    if (n == 0) throw bad("the run would carry no messages");
    if (scenario == Scenario::SmartLight && n > static_cast<std::uint64_t>(duration.count() / 60)) {
        throw bad("smart light commands are at most one per minute");
    }
    if (scenario == Scenario::RefrigeratedContainer && n > static_cast<std::uint64_t>(duration.count())) {
        throw bad("container telemetry is at most one frame per second");
    }
}

std::uint64_t ScenarioConfig::message_count() const {
    const std::uint64_t per_day = messages_per_day.value_or(scenario == Scenario::RefrigeratedContainer ? 1440 : 20);
    // Rounded to the nearest whole message.
    return (per_day * static_cast<std::uint64_t>(duration.count()) + kSecondsPerDay / 2) / kSecondsPerDay;
}

nlohmann::json to_json(const ScenarioConfig& c) {
    nlohmann::json window{{"durationSeconds", c.window.duration.count()}};
    if (c.window.max_leaves) window["maxLeaves"] = *c.window.max_leaves;
    nlohmann::json j{
        {"scenario", to_string(c.scenario)},
        {"configuration", gateway::to_string(c.configuration)},
        {"scheme", biot::to_string(c.scheme)},
        {"durationSeconds", c.duration.count()},
        {"blockIntervalSeconds", c.block_interval.count()},
        {"confirmations", c.confirmations},
        {"seed", c.seed},
        {"anchorOptional", c.anchor_optional},
        {"price", economics::to_json(c.prices)},
        {"window", window},
        {"gasSchedule", economics::to_json(c.gas)},
        {"deviceOffline", c.device_offline},
        {"gatewayProcessing", c.gateway_processing},
    };
    if (c.messages_per_day) j["messagesPerDay"] = *c.messages_per_day;
    return j;
}

ScenarioConfig scenario_config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known{
        "scenario",     "configuration", "scheme", "durationSeconds", "blockIntervalSeconds", "confirmations",
        "seed",         "anchorOptional", "messagesPerDay", "price", "window", "gasSchedule", "deviceOffline",
        "gatewayProcessing"};
    if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, "scenario config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw Error(ErrorCode::ConfigInvalid, "unknown config key '" + key + "'");
    }
    ScenarioConfig c;
    try {
        c.scenario = parse_scenario(j.at("scenario").get<std::string>());
        c.configuration = gateway::parse_configuration(j.value("configuration", std::string("CBG")));
        c.scheme = parse_storage_scheme(j.value("scheme", std::string("FullOnChain")));
        c.duration = Seconds{j.value("durationSeconds", std::int64_t{86'400})};
        c.block_interval = Seconds{j.value("blockIntervalSeconds", std::int64_t{15})};
        c.confirmations = j.value("confirmations", std::uint32_t{1});
        c.seed = j.value("seed", std::uint64_t{1});
        c.anchor_optional = j.value("anchorOptional", true);
        if (j.contains("messagesPerDay")) c.messages_per_day = j.at("messagesPerDay").get<std::uint64_t>();
        if (j.contains("price")) c.prices = economics::price_context_from_json(j.at("price"));
        if (j.contains("window")) {
            const auto& w = j.at("window");
            c.window.duration = Seconds{w.value("durationSeconds", std::int64_t{86'400})};
            if (w.contains("maxLeaves")) c.window.max_leaves = w.at("maxLeaves").get<std::size_t>();
        }
        if (j.contains("gasSchedule")) c.gas = economics::gas_schedule_from_json(j.at("gasSchedule"));
        c.device_offline = j.value("deviceOffline", false);
        c.gateway_processing = j.value("gatewayProcessing", true);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigInvalid, e.what());
    }
    c.validate();
    return c;
}

ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot open " + path.string());
    try {
        return scenario_config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
    }
}

// ---- running ----------------------------------------------------------------------

namespace {

struct Actors {
    Address admin = Address::from_label("biot/admin");
    Address gateway = Address::from_label("biot/gateway-0");
    Address client = Address::from_label("biot/client-0");
    Digest gateway_fingerprint = fingerprint_for("biot/gateway-0/certificate");
};

ledger::Receipt setup_step(ledger::Ledger& ledger, const Address& sender, const contract::EncodedCall& call,
                           Seconds at) {
    const auto r = ledger.wait_for(ledger.submit(sender, call, at));
    if (r.status != ledger::TxStatus::Included) {
        throw Error(ErrorCode::ConfigInvalid, "setup transaction " + call.function + " reverted");
    }
    return r;
}

void append_anchors(std::vector<Leg>& legs, const std::vector<gateway::Anchor>& anchors, Seconds at) {
    for (const auto& a : anchors) {
        Leg leg{at, {}, a.window_id, {}};
        if (a.tx) leg.tx = a.tx->id;
        legs.push_back(leg);
    }
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& config) {
    config.validate();
    const Actors actors;
    const bool container = config.scenario == Scenario::RefrigeratedContainer;
    const DeviceId device_id = DeviceId::from_label(container ? "biot/container-0" : "biot/light-0");
    const Digest device_fingerprint = fingerprint_for(container ? "biot/container-0/certificate"
                                                                : "biot/light-0/certificate");

    ledger::LedgerConfig ledger_config;
    ledger_config.latency = {config.block_interval, config.confirmations};
    ledger_config.gas = config.gas;
    ledger::Ledger ledger(ledger_config);
    for (const auto& a : {actors.admin, actors.gateway, actors.client}) ledger.create_account(a);

    // Setup runs sequentially, each step after the previous one resolved.
    auto r = setup_step(ledger, actors.admin, contract::calls::deploy(), ledger.head_time());
    r = setup_step(ledger, actors.admin, contract::calls::register_gateway(actors.gateway), r.resolved_at);
    r = setup_step(ledger, actors.admin, contract::calls::register_device(device_id, actors.gateway), r.resolved_at);
    const Seconds setup_end = r.resolved_at;

    std::unique_ptr<devices::DeviceEndpoint> device;
    devices::ContainerDevice* container_device = nullptr;
    devices::LightDevice* light_device = nullptr;
    if (container) {
        auto d = std::make_unique<devices::ContainerDevice>(device_id, device_fingerprint,
                                                            actors.gateway_fingerprint, config.seed);
        container_device = d.get();
        device = std::move(d);
    } else {
        auto d = std::make_unique<devices::LightDevice>(device_id, device_fingerprint, actors.gateway_fingerprint);
        light_device = d.get();
        device = std::move(d);
    }

    anchoring::OffchainStore store;
    gateway::GatewayConfig gw_config;
    gw_config.address = actors.gateway;
    gw_config.configuration = config.configuration;
    gw_config.scheme = config.scheme;
    gw_config.window_policy = config.window;
    gw_config.anchor_optional = config.anchor_optional;
    gw_config.fingerprint = actors.gateway_fingerprint;
    gateway::Gateway gw(gw_config, ledger, store);
    gw.provision(*device, device_fingerprint);
    gw.open_device_channel(device_id, actors.gateway_fingerprint, device_fingerprint, setup_end);
    if (config.device_offline) device->set_online(false);
    gw.set_processing_enabled(config.gateway_processing);

    // Operation starts on a boundary shared by whole minutes and blocks.
    const Seconds grid{std::lcm<std::int64_t>(60, config.block_interval.count())};
    const Seconds op_start = ceil_to(setup_end, grid);
    const Seconds op_end = op_start + config.duration;

    EventLoop loop(setup_end);
    std::vector<Interaction> interactions;
    std::map<std::uint64_t, std::size_t> by_trigger;  // client tx id -> interaction
    std::set<Seconds> maintenance;
    bool finished = false;

    const auto schedule_maintenance = [&] {
        const auto deadline = gw.next_window_deadline();
        if (deadline && *deadline < op_end && *deadline >= loop.now() && maintenance.insert(*deadline).second) {
            loop.schedule(*deadline, kMaintenancePriority, [&](Seconds now) { gw.maintain(now); });
        }
    };

    const bool cbg = config.configuration == gateway::Configuration::CBG;
    if (cbg) {
        gw.listen([&](const gateway::Handled& h) {
            if (!h.trigger) return;
            auto it = by_trigger.find(h.trigger->id);
            if (it == by_trigger.end()) return;
            auto& ix = interactions[it->second];
            if (h.failure) {
                ix.failure = h.failure;
                return;
            }
            append_anchors(ix.legs, h.anchors, h.at);
            schedule_maintenance();
        });
    }

    std::function<void(Seconds)> produce = [&](Seconds now) {
        ledger.produce_block(now);
        if (!finished || !ledger.all_resolved()) loop.schedule(ledger.next_block_time(), kBlockPriority, produce);
    };
    loop.schedule(ledger.next_block_time(), kBlockPriority, produce);

    const std::uint64_t n = config.message_count();
    if (container) {
        for (std::uint64_t k = 0; k < n; ++k) {
            const Seconds at = op_start + Seconds{static_cast<std::int64_t>(k) * config.duration.count() /
                                                  static_cast<std::int64_t>(n)};
            loop.schedule(at, kActorPriority, [&](Seconds now) {
                Interaction ix{interactions.size(), "telemetry", device_id, now, {}, {}, {}, {}, {}};
                const auto frame = container_device->tick(now);
                try {
                    const auto h = gw.handle_device_report(device_id, frame.encode(), now);
                    append_anchors(cbg ? ix.legs : ix.background, h.anchors, now);
                } catch (const Error& e) {
                    ix.failure = e.code();
                }
                interactions.push_back(std::move(ix));
                schedule_maintenance();
            });
        }
    } else {
        for (const auto& cmd : devices::light_schedule(config.seed, n, config.duration)) {
            loop.schedule(op_start + cmd.offset, kActorPriority, [&, cmd](Seconds now) {
                Interaction ix{interactions.size(), "command", device_id, now, {}, {}, {}, {}, {}};
                const Bytes frame = devices::LightCommand{device_id, cmd.opcode}.encode();
                if (cbg) {
                    const auto tx = ledger.submit(
                        actors.client, contract::calls::send_message_to_device(device_id, devices::frame_body(frame)),
                        now);
                    ix.legs.push_back({now, tx.id, {}, {}});
                    by_trigger.emplace(tx.id, interactions.size());
                } else {
                    try {
                        const auto h = gw.handle_client_command(device_id, frame, now);
                        append_anchors(ix.background, h.anchors, now);
                    } catch (const Error& e) {
                        ix.failure = e.code();
                    }
                }
                interactions.push_back(std::move(ix));
                schedule_maintenance();
            });
        }
    }

    loop.schedule(op_end, kFinishPriority, [&](Seconds now) {
        gw.finish(now);
        finished = true;
    });
    loop.run();
    gw.stop_listening();

    RunResult result;
    result.config = config;
    result.admin = actors.admin;
    result.gateway = actors.gateway;
    result.client = actors.client;
    result.device = device_id;
    result.operation_start = op_start;
    result.operation_end = op_end;
    result.finished_at = ledger.head_time();
    result.blocks = ledger.blocks();
    result.events = ledger.events();
    result.state_digest = ledger.state_digest();

    // Window summaries and proofs.
    const auto& anchorer = gw.anchorer(device_id);
    std::map<std::uint64_t, std::uint64_t> window_tx;
    for (const auto& w : anchorer.closed_windows()) {
        result.windows.push_back({w.device, w.window_id, w.opened_at, w.closed_at, w.tree.leaf_count(), w.tree.root(),
                                  w.anchor_tx.id});
        window_tx[w.window_id] = w.anchor_tx.id;
        for (std::size_t i = 0; i < w.sequences.size(); ++i) {
            result.proofs.push_back({w.device, w.sequences[i], w.tree.prove(i, w.window_id)});
        }
    }

    // Resolve chain waits.
    const auto resolve = [&](Leg& leg) {
        std::optional<std::uint64_t> tx = leg.tx;
        if (!tx && leg.window_id) {
            if (auto it = window_tx.find(*leg.window_id); it != window_tx.end()) tx = it->second;
        }
        if (!tx) return;
        if (auto rc = ledger.receipt({*tx})) leg.resolved_at = rc->resolved_at;
    };
    for (auto& ix : interactions) {
        for (auto& leg : ix.background) resolve(leg);
        Seconds wait{0};
        Seconds last = ix.started_at;
        bool complete = !ix.failure;
        for (auto& leg : ix.legs) {
            resolve(leg);
            if (!leg.resolved_at) {
                complete = false;
                continue;
            }
            wait += *leg.resolved_at - leg.submitted_at;
            last = std::max(last, *leg.resolved_at);
        }
        // A CBG command is only answered once the device response is on-chain.
        if (cbg && ix.kind == "command" && ix.legs.size() < 2) complete = false;
        if (complete) {
            ix.chain_wait = wait;
            ix.resolved_at = last;
        }
    }
    result.interactions = std::move(interactions);

    result.traces = device->trace();
    result.frames_emitted = container_device ? container_device->frames_emitted() : 0;
    if (light_device) result.light_states = light_device->history();
    result.gateway_log = gw.log();
    result.offchain = store.records();

    result.charges = charge_log(result);
    result.charges.complete = finished && ledger.all_resolved();
    result.cost = economics::build_cost_report(result.charges, config.prices);
    return result;
}

economics::ChargeLog charge_log(const RunResult& result) {
    economics::ChargeLog log;
    log.scheme = result.config.scheme;
    log.duration = result.config.duration;
    log.messages = result.interactions.size();
    log.complete = true;
    for (const auto& b : result.blocks) {
        for (const auto& tx : b.transactions) {
            economics::Charge c{tx.gas_used, economics::Payer::Client, false};
            if (tx.sender == result.admin) {
                c.payer = economics::Payer::Setup;
            } else if (tx.sender == result.gateway) {
                c.payer = economics::Payer::Device;
                if (tx.function == contract::kSendResponseFromDevice && tx.status == ledger::TxStatus::Included) {
                    const auto call = contract::decode(tx.function, tx.args);
                    const auto& args = std::get<contract::MessageArgs>(call.args);
                    c.window_anchor = args.kind == contract::PayloadKind::MerkleRoot;
                }
            }
            log.charges.push_back(c);
        }
    }
    return log;
}

// ---- proofs -------------------------------------------------------------------------

std::string_view to_string(ProofStatus status) noexcept {
    switch (status) {
        case ProofStatus::Ok: return "Ok";
        case ProofStatus::RootNotFound: return "RootNotFound";
        case ProofStatus::VerifyFailed: return "VerifyFailed";
        case ProofStatus::MalformedProof: return "MalformedProof";
    }
    return "?";
}

std::optional<Digest> anchored_root(const std::vector<ledger::Block>& blocks, const DeviceId& device,
                                    std::uint64_t window_id) {
    std::optional<Digest> root;
    for (const auto& b : blocks) {
        for (const auto& tx : b.transactions) {
            if (tx.status != ledger::TxStatus::Included || tx.function != contract::kSendResponseFromDevice) continue;
            const auto call = contract::decode(tx.function, tx.args);
            const auto& args = std::get<contract::MessageArgs>(call.args);
            if (args.kind != contract::PayloadKind::MerkleRoot || args.device != device || args.tag != window_id ||
                args.message.size() != std::tuple_size_v<Digest>) {
                continue;
            }
            Digest d;
            std::copy(args.message.begin(), args.message.end(), d.begin());
            root = d;
        }
    }
    return root;
}

ProofOutcome verify_proof(const std::vector<ledger::Block>& blocks, const DeviceId& device, ByteView payload,
                          const anchoring::InclusionProof& proof) {
    const auto root = anchored_root(blocks, device, proof.window_id);
    if (!root) {
        return {ProofStatus::RootNotFound,
                "no root anchored for device " + device.to_hex() + " window " + std::to_string(proof.window_id)};
    }
    if (!anchoring::verify_inclusion(*root, payload, proof)) {
        return {ProofStatus::VerifyFailed, "payload does not fold to root " + to_hex(as_view(*root))};
    }
    return {ProofStatus::Ok, "root " + to_hex(as_view(*root))};
}

nlohmann::json proof_file_json(const ExportedProof& p) {
    auto j = anchoring::to_json(p.proof);
    j["device"] = p.device.to_hex();
    j["sequence"] = p.sequence;
    return j;
}

ExportedProof proof_file_from_json(const nlohmann::json& j) {
    ExportedProof p;
    p.proof = anchoring::proof_from_json(j);
    try {
        p.device = DeviceId::from_hex(j.at("device").get<std::string>());
        p.sequence = j.value("sequence", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedProof, e.what());
    } catch (const Error& e) {
        throw Error(ErrorCode::MalformedProof, e.what());
    }
    return p;
}

}  // namespace biot::harness
