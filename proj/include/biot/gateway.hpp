#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "biot/anchoring.hpp"
#include "biot/common.hpp"
#include "biot/devices.hpp"
#include "biot/ledger.hpp"
#include "json.hpp"

namespace biot::gateway {

// CBG: client -> chain -> gateway -> device. CGB: client -> gateway -> device,
// chain afterwards and optional.
enum class Configuration { CBG, CGB };

std::string_view to_string(Configuration c) noexcept;
Configuration parse_configuration(std::string_view text);  // throws Error(ConfigInvalid)

enum class ChannelState { Closed, Authenticated };

struct DeviceChannel {
    DeviceId device;
    Digest gateway_fingerprint{};
    Digest device_fingerprint{};
    ChannelState state = ChannelState::Closed;
    std::uint64_t payloads = 0;  // frames delivered over this channel
};

struct GatewayConfig {
    Address address;
    Configuration configuration = Configuration::CBG;
    StorageScheme scheme = StorageScheme::FullOnChain;
    anchoring::WindowPolicy window_policy;
    bool anchor_optional = true;
    Seconds device_timeout{5};
    Digest fingerprint{};
};

// Where an anchored frame ended up: a transaction, or a leaf of a Merkle
// window that is anchored when the window closes.
struct Anchor {
    std::optional<ledger::TxHandle> tx;
    std::optional<std::uint64_t> window_id;
    std::optional<std::uint64_t> record_sequence;  // off-chain record, if any
};

// Outcome of handling one chain event, client command or device report.
struct Handled {
    DeviceId device;
    Seconds at{0};
    std::optional<ledger::TxHandle> trigger;  // the chain transaction that caused it (CBG)
    std::optional<Bytes> response;
    std::vector<Anchor> anchors;
    std::optional<ErrorCode> failure;
    Seconds failed_at{0};
};

struct LogEntry {
    Seconds at{0};
    std::string action;
    DeviceId device;
    std::size_t bytes = 0;
    std::optional<std::uint64_t> tx;
    std::optional<std::uint64_t> window_id;
    std::string detail;
};

nlohmann::json to_json(const LogEntry& entry);

/// The bridge between clients, the chain and the devices it serves. All
/// operations on one gateway are serialized; distinct gateways are independent.
class Gateway {
  public:
    Gateway(GatewayConfig config, ledger::Ledger& ledger, anchoring::OffchainStore& store);
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    [[nodiscard]] const GatewayConfig& config() const noexcept { return config_; }

    // Makes a device known to the gateway with the fingerprint it is expected to present.
    void provision(devices::DeviceEndpoint& device, const Digest& expected_fingerprint);

    // Errors: PinningMismatch (checked by the device), UnknownDeviceFingerprint.
    DeviceChannel open_device_channel(const DeviceId& device, const Digest& presented_gateway_fingerprint,
                                      const Digest& presented_device_fingerprint, Seconds now);
    void close_channel(const DeviceId& device);
    [[nodiscard]] std::optional<DeviceChannel> channel(const DeviceId& device) const;

    // Errors: ChannelClosed, DeviceTimeout, MalformedFrame.
    Bytes forward_to_device(const DeviceId& device, ByteView frame, Seconds now);

    // CBG inbound leg. Returns nullopt for events this gateway does not act on
    // (other gateways' devices, its own transactions, processing disabled).
    // Errors: WrongConfiguration, ChannelClosed, DeviceTimeout.
    std::optional<Handled> handle_chain_event(const ledger::Event& event);

    // CGB flow: forwards the command and returns the device reply at once;
    // with anchor_optional, request and response are anchored afterwards.
    // Errors: WrongConfiguration, ChannelClosed, DeviceTimeout.
    Handled handle_client_command(const DeviceId& device, ByteView frame, Seconds now);

    // A frame pushed by a device (telemetry). Anchored per scheme under CBG,
    // and under CGB when anchor_optional is set.
    Handled handle_device_report(const DeviceId& device, ByteView frame, Seconds now);

    // Subscribes to messageSentToDevice for the devices it owns. Failures are
    // logged and reported through the observer rather than thrown.
    void listen(std::function<void(const Handled&)> observer);
    void stop_listening();

    // Closes expired Merkle windows; returns the anchors submitted.
    std::vector<ledger::TxHandle> maintain(Seconds now);
    // Closes every open window (end of operation).
    std::vector<ledger::TxHandle> finish(Seconds now);
    [[nodiscard]] std::optional<Seconds> next_window_deadline() const;

    // When disabled, chain events are received but never acted on.
    void set_processing_enabled(bool enabled);

    [[nodiscard]] const anchoring::Anchorer& anchorer(const DeviceId& device) const;
    [[nodiscard]] std::vector<LogEntry> log() const;
    [[nodiscard]] std::string log_jsonl() const;

  private:
    struct Provisioned {
        devices::DeviceEndpoint* endpoint = nullptr;
        Digest expected_fingerprint{};
        std::unique_ptr<anchoring::Anchorer> anchorer;
        std::optional<DeviceChannel> channel;
    };

    Provisioned& provisioned(const DeviceId& device);
    Bytes forward_locked(Provisioned& p, ByteView frame, Seconds now);
    Anchor anchor_locked(Provisioned& p, ByteView frame, Seconds now, anchoring::Direction direction);
    bool anchoring_enabled() const noexcept;
    void log_locked(LogEntry entry);

    GatewayConfig config_;
    ledger::Ledger& ledger_;
    anchoring::OffchainStore& store_;
    mutable std::recursive_mutex mutex_;
    std::map<DeviceId, Provisioned> devices_;
    std::vector<LogEntry> log_;
    std::optional<std::uint64_t> subscription_;
    bool processing_ = true;
};

}  // namespace biot::gateway
