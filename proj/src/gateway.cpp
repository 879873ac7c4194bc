#include "biot/gateway.hpp"

#include <algorithm>
#include <sstream>

namespace biot::gateway {

std::string_view to_string(Configuration c) noexcept { return c == Configuration::CBG ? "CBG" : "CGB"; }

Configuration parse_configuration(std::string_view text) {
    if (text == "CBG") return Configuration::CBG;
    if (text == "CGB") return Configuration::CGB;
    throw Error(ErrorCode::ConfigInvalid, "unknown gateway configuration '" + std::string(text) + "'");
}

nlohmann::json to_json(const LogEntry& e) {
    nlohmann::json j{{"t", e.at.count()}, {"action", e.action}, {"device", e.device.to_hex()}, {"bytes", e.bytes}};
    if (e.tx) j["tx"] = *e.tx;
    if (e.window_id) j["window"] = *e.window_id;
    if (!e.detail.empty()) j["detail"] = e.detail;
    return j;
}

Gateway::Gateway(GatewayConfig config, ledger::Ledger& ledger, anchoring::OffchainStore& store)
    : config_(std::move(config)), ledger_(ledger), store_(store) {
    config_.window_policy.validate();
    if (config_.device_timeout.count() <= 0) throw Error(ErrorCode::ConfigInvalid, "device timeout must be positive");
}

Gateway::~Gateway() { stop_listening(); }

void Gateway::provision(devices::DeviceEndpoint& device, const Digest& expected_fingerprint) {
    std::lock_guard lock(mutex_);
    Provisioned p;
    p.endpoint = &device;
    p.expected_fingerprint = expected_fingerprint;
    p.anchorer = std::make_unique<anchoring::Anchorer>(ledger_, config_.address, device.id(), config_.scheme,
                                                       config_.window_policy, store_);
    devices_.insert_or_assign(device.id(), std::move(p));
}

Gateway::Provisioned& Gateway::provisioned(const DeviceId& device) {
    auto it = devices_.find(device);
    if (it == devices_.end()) throw Error(ErrorCode::UnknownDevice, "device " + device.to_hex() + " not provisioned");
    return it->second;
}

DeviceChannel Gateway::open_device_channel(const DeviceId& device, const Digest& presented_gateway_fingerprint,
                                           const Digest& presented_device_fingerprint, Seconds now) {
    std::lock_guard lock(mutex_);
    auto it = devices_.find(device);
    if (it == devices_.end()) {
        throw Error(ErrorCode::UnknownDeviceFingerprint, "no fingerprint on record for " + device.to_hex());
    }
    auto& p = it->second;
    try {
        p.endpoint->check_gateway(presented_gateway_fingerprint);
        if (presented_device_fingerprint != p.expected_fingerprint) {
            throw Error(ErrorCode::UnknownDeviceFingerprint, "device " + device.to_hex() +
                                                                 " presented an unknown fingerprint");
        }
    } catch (const Error& e) {
        p.channel.reset();
        log_locked({now, "handshake-failed", device, 0, {}, {}, std::string(biot::to_string(e.code()))});
        throw;
    }
    p.channel = DeviceChannel{device, presented_gateway_fingerprint, presented_device_fingerprint,
                              ChannelState::Authenticated, 0};
    log_locked({now, "channel-open", device, 0, {}, {}, ""});
    return *p.channel;
}

void Gateway::close_channel(const DeviceId& device) {
    std::lock_guard lock(mutex_);
    auto it = devices_.find(device);
    if (it != devices_.end() && it->second.channel) it->second.channel->state = ChannelState::Closed;
}

std::optional<DeviceChannel> Gateway::channel(const DeviceId& device) const {
    std::lock_guard lock(mutex_);
    auto it = devices_.find(device);
    if (it == devices_.end()) return std::nullopt;
    return it->second.channel;
}

Bytes Gateway::forward_locked(Provisioned& p, ByteView frame, Seconds now) {
    const auto& id = p.endpoint->id();
    if (!p.channel || p.channel->state != ChannelState::Authenticated) {
        throw Error(ErrorCode::ChannelClosed, "no authenticated channel to " + id.to_hex());
    }
    ++p.channel->payloads;
    log_locked({now, "forward", id, frame.size(), {}, {}, ""});
    auto reply = p.endpoint->receive(frame, now);
    if (!reply) {
        log_locked({now + config_.device_timeout, "timeout", id, 0, {}, {}, ""});
        throw Error(ErrorCode::DeviceTimeout, "no reply from " + id.to_hex() + " within " +
                                                  std::to_string(config_.device_timeout.count()) + " s");
    }
    log_locked({now, "reply", id, reply->size(), {}, {}, ""});
    return std::move(*reply);
}

Bytes Gateway::forward_to_device(const DeviceId& device, ByteView frame, Seconds now) {
    std::lock_guard lock(mutex_);
    return forward_locked(provisioned(device), frame, now);
}

bool Gateway::anchoring_enabled() const noexcept {
    return config_.configuration == Configuration::CBG || config_.anchor_optional;
}

Anchor Gateway::anchor_locked(Provisioned& p, ByteView frame, Seconds now, anchoring::Direction direction) {
    auto& anchorer = *p.anchorer;
    const auto& id = p.endpoint->id();
    Anchor out;
    switch (config_.scheme) {
        case StorageScheme::FullOnChain: {
            // The device id travels as its own argument, so only the data bytes are stored.
            const bool framed = frame.size() == devices::kFrameSize &&
                                std::equal(id.view().begin(), id.view().end(), frame.begin());
            const ByteView message = framed ? devices::frame_body(frame) : frame;
            out.tx = anchorer.anchor_full_on_chain(message, now, direction);
            log_locked({now, "anchor-full", id, message.size(), out.tx->id, {}, ""});
            break;
        }
        case StorageScheme::DataHashing: {
            auto [tx, record] = anchorer.anchor_digest(frame, now, direction);
            out.tx = tx;
            out.record_sequence = record.sequence;
            log_locked({now, "anchor-digest", id, frame.size(), tx.id, {}, "record " + std::to_string(record.sequence)});
            break;
        }
        case StorageScheme::MerkleTree: {
            const auto closed_before = anchorer.closed_windows().size();
            const auto record = anchorer.append_to_window(frame, now);
            const auto& closed = anchorer.closed_windows();
            for (auto i = closed_before; i < closed.size(); ++i) {
                log_locked({now, "anchor-root", id, 32, closed[i].anchor_tx.id, closed[i].window_id,
                            std::to_string(closed[i].tree.leaf_count()) + " leaves"});
            }
            out.record_sequence = record.sequence;
            out.window_id = record.window_id ? record.window_id : anchorer.open_window_id();
            log_locked({now, "append-leaf", id, frame.size(), {}, out.window_id,
                        "record " + std::to_string(record.sequence)});
            break;
        }
    }
    return out;
}

std::optional<Handled> Gateway::handle_chain_event(const ledger::Event& event) {
    std::lock_guard lock(mutex_);
    if (config_.configuration != Configuration::CBG) {
        throw Error(ErrorCode::WrongConfiguration, "chain events are only handled under CBG");
    }
    if (event.name != contract::EventName::MessageSentToDevice) return std::nullopt;
    auto it = devices_.find(event.device);
    if (it == devices_.end()) return std::nullopt;
    if (ledger_.transaction(event.tx).sender == config_.address) return std::nullopt;
    if (!processing_) {
        log_locked({event.block_time, "unprocessed", event.device, event.payload.size(), event.tx.id, {}, ""});
        return std::nullopt;
    }

    auto& p = it->second;
    const Seconds now = event.block_time;
    const Bytes frame = event.payload.size() == devices::kFrameBodySize
                            ? devices::make_frame(event.device, event.payload)
                            : event.payload;
    Handled h;
    h.device = event.device;
    h.at = now;
    h.trigger = event.tx;
    h.response = forward_locked(p, frame, now);
    h.anchors.push_back(anchor_locked(p, *h.response, now, anchoring::Direction::FromDevice));
    return h;
}

Handled Gateway::handle_client_command(const DeviceId& device, ByteView frame, Seconds now) {
    std::lock_guard lock(mutex_);
    if (config_.configuration != Configuration::CGB) {
        throw Error(ErrorCode::WrongConfiguration, "client commands go through the chain under CBG");
    }
    auto& p = provisioned(device);
    Handled h;
    h.device = device;
    h.at = now;
    h.response = forward_locked(p, frame, now);
    if (config_.anchor_optional) {
        h.anchors.push_back(anchor_locked(p, frame, now, anchoring::Direction::ToDevice));
        h.anchors.push_back(anchor_locked(p, *h.response, now, anchoring::Direction::FromDevice));
    }
    return h;
}

Handled Gateway::handle_device_report(const DeviceId& device, ByteView frame, Seconds now) {
    std::lock_guard lock(mutex_);
    auto& p = provisioned(device);
    if (!p.channel || p.channel->state != ChannelState::Authenticated) {
        throw Error(ErrorCode::ChannelClosed, "no authenticated channel to " + device.to_hex());
    }
    ++p.channel->payloads;
    log_locked({now, "report", device, frame.size(), {}, {}, ""});
    Handled h;
    h.device = device;
    h.at = now;
    if (anchoring_enabled()) h.anchors.push_back(anchor_locked(p, frame, now, anchoring::Direction::FromDevice));
    return h;
}

void Gateway::listen(std::function<void(const Handled&)> observer) {
    std::lock_guard lock(mutex_);
    if (config_.configuration != Configuration::CBG) {
        throw Error(ErrorCode::WrongConfiguration, "only a CBG gateway listens to the chain");
    }
    if (subscription_) ledger_.unsubscribe(*subscription_);
    subscription_ = ledger_.subscribe(
        {contract::EventName::MessageSentToDevice, std::nullopt}, [this, observer](const ledger::Event& e) {
            try {
                if (auto h = handle_chain_event(e)) observer(*h);
            } catch (const Error& err) {
                Handled h;
                h.device = e.device;
                h.at = e.block_time;
                h.trigger = e.tx;
                h.failure = err.code();
                h.failed_at = err.code() == ErrorCode::DeviceTimeout ? e.block_time + config_.device_timeout
                                                                     : e.block_time;
                if (err.code() != ErrorCode::DeviceTimeout) {
                    std::lock_guard lock(mutex_);
                    log_locked({e.block_time, "failed", e.device, e.payload.size(), e.tx.id, {},
                                std::string(biot::to_string(err.code()))});
                }
                observer(h);
            }
        });
}

void Gateway::stop_listening() {
    std::lock_guard lock(mutex_);
    if (subscription_) {
        ledger_.unsubscribe(*subscription_);
        subscription_.reset();
    }
}

std::vector<ledger::TxHandle> Gateway::maintain(Seconds now) {
    std::lock_guard lock(mutex_);
    std::vector<ledger::TxHandle> out;
    for (auto& [id, p] : devices_) {
        if (p.anchorer->close_if_expired(now)) {
            const auto& w = p.anchorer->closed_windows().back();
            out.push_back(w.anchor_tx);
            log_locked({now, "anchor-root", id, 32, w.anchor_tx.id, w.window_id,
                        std::to_string(w.tree.leaf_count()) + " leaves"});
        }
    }
    return out;
}

std::vector<ledger::TxHandle> Gateway::finish(Seconds now) {
    std::lock_guard lock(mutex_);
    std::vector<ledger::TxHandle> out;
    for (auto& [id, p] : devices_) {
        if (p.anchorer->open_leaf_count() == 0) continue;
        auto [tree, tx] = p.anchorer->close_window(now);
        out.push_back(tx);
        log_locked({now, "anchor-root", id, 32, tx.id, p.anchorer->closed_windows().back().window_id,
                    std::to_string(tree.leaf_count()) + " leaves"});
    }
    return out;
}

std::optional<Seconds> Gateway::next_window_deadline() const {
    std::lock_guard lock(mutex_);
    std::optional<Seconds> best;
    for (const auto& [id, p] : devices_) {
        if (auto d = p.anchorer->window_deadline(); d && (!best || *d < *best)) best = d;
    }
    return best;
}

void Gateway::set_processing_enabled(bool enabled) {
    std::lock_guard lock(mutex_);
    processing_ = enabled;
}

const anchoring::Anchorer& Gateway::anchorer(const DeviceId& device) const {
    std::lock_guard lock(mutex_);
    auto it = devices_.find(device);
    if (it == devices_.end()) throw Error(ErrorCode::UnknownDevice, "device " + device.to_hex() + " not provisioned");
    return *it->second.anchorer;
}

void Gateway::log_locked(LogEntry entry) { log_.push_back(std::move(entry)); }

std::vector<LogEntry> Gateway::log() const {
    std::lock_guard lock(mutex_);
    return log_;
}

std::string Gateway::log_jsonl() const {
    std::lock_guard lock(mutex_);
    std::ostringstream out;
    for (const auto& e : log_) out << to_json(e).dump() << '\n';
    return out.str();
}

}  // namespace biot::gateway
