#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "biot/common.hpp"

namespace biot::devices {

// Every frame on the device link is a 16-byte device id followed by 8 data bytes.
inline constexpr std::size_t kFrameSize = 24;
inline constexpr std::size_t kFrameBodySize = kFrameSize - DeviceId::kSize;

// Data bytes of a frame, i.e. everything after the device id.
ByteView frame_body(ByteView frame);
// Rebuilds a full frame from a device id and its 8 data bytes. Throws MalformedFrame.
Bytes make_frame(const DeviceId& device, ByteView body);

/// Container telemetry: id | timestamp u32 | temperature i16 (centi-degrees) | sequence u16,
/// all big-endian.
struct TelemetryFrame {
    DeviceId device;
    std::uint32_t timestamp = 0;
    std::int16_t centi_celsius = 0;
    std::uint16_t sequence = 0;

    [[nodiscard]] Bytes encode() const;
    static TelemetryFrame decode(ByteView frame);  // throws Error(MalformedFrame)

    bool operator==(const TelemetryFrame&) const = default;
};

enum class Opcode : std::uint8_t { On = 1, Off = 2, Toggle = 3, Status = 4 };

std::string_view to_string(Opcode op) noexcept;
Opcode parse_opcode(std::string_view text);

inline constexpr std::uint8_t kCommandKind = 0x43;   // 'C'
inline constexpr std::uint8_t kResponseKind = 0x52;  // 'R'
inline constexpr std::uint8_t kPollKind = 0x50;      // 'P'

/// Light command: id | 'C' | opcode | 6 zero bytes.
struct LightCommand {
    DeviceId device;
    Opcode opcode = Opcode::Status;

    [[nodiscard]] Bytes encode() const;
    static LightCommand decode(ByteView frame);  // throws Error(MalformedFrame)

    bool operator==(const LightCommand&) const = default;
};

/// Light response: id | 'R' | opcode | state (0 off, 1 on) | 5 zero bytes.
struct LightResponse {
    DeviceId device;
    Opcode opcode = Opcode::Status;
    bool on = false;

    [[nodiscard]] Bytes encode() const;
    static LightResponse decode(ByteView frame);

    bool operator==(const LightResponse&) const = default;
};

// Telemetry poll sent by a gateway: id | 'P' | 7 zero bytes.
Bytes poll_frame(const DeviceId& device);

struct LightOutcome {
    bool on = false;
    Bytes response;
};

// Pure command semantics. Throws Error(MalformedFrame) for a frame of the
// wrong length, kind, device or opcode; the caller's state is then unchanged.
LightOutcome light_handle_command(const DeviceId& device, ByteView frame, bool on);

/// Seeded bounded random walk in centi-degrees: each step moves 10 up or down,
/// with a pull back towards the setpoint, clamped to [min, max].
class TemperatureProcess {
  public:
    explicit TemperatureProcess(std::uint64_t seed, std::int16_t setpoint = -1800, std::int16_t min = -3000,
                                std::int16_t max = 3000);

    std::int16_t next();
    [[nodiscard]] std::int16_t current() const noexcept { return value_; }

  private:
    std::mt19937_64 rng_;
    std::int16_t setpoint_;
    std::int16_t min_;
    std::int16_t max_;
    std::int16_t value_;
};

struct TraceEntry {
    Seconds at{0};
    DeviceId device;
    std::string direction;  // "in", "out" or "drop"
    Bytes frame;
    std::string detail;
};

std::string traces_to_csv(const std::vector<TraceEntry>& entries);

/// Device side of the simulated transport.
class DeviceEndpoint {
  public:
    DeviceEndpoint(DeviceId id, Digest fingerprint, Digest pinned_gateway_fingerprint);
    virtual ~DeviceEndpoint() = default;

    [[nodiscard]] const DeviceId& id() const noexcept { return id_; }
    [[nodiscard]] const Digest& fingerprint() const noexcept { return fingerprint_; }
    [[nodiscard]] const Digest& pinned_gateway_fingerprint() const noexcept { return pinned_; }

    // Handshake check from the device's side: throws Error(PinningMismatch)
    // unless the presented gateway fingerprint equals the pinned value.
    void check_gateway(const Digest& presented) const;

    // Delivers one frame. Returns the reply, or nullopt when the device is
    // offline (the frame is dropped). Throws Error(MalformedFrame).
    std::optional<Bytes> receive(ByteView frame, Seconds now);

    void set_online(bool online) noexcept { online_ = online; }
    [[nodiscard]] bool online() const noexcept { return online_; }
    [[nodiscard]] std::uint64_t frames_received() const noexcept { return received_; }
    [[nodiscard]] const std::vector<TraceEntry>& trace() const noexcept { return trace_; }

  protected:
    virtual Bytes handle(ByteView frame, Seconds now) = 0;
    void record(Seconds at, std::string direction, ByteView frame, std::string detail);

  private:
    DeviceId id_;
    Digest fingerprint_;
    Digest pinned_;
    bool online_ = true;
    std::uint64_t received_ = 0;
    std::vector<TraceEntry> trace_;
};

class ContainerDevice final : public DeviceEndpoint {
  public:
    ContainerDevice(DeviceId id, Digest fingerprint, Digest pinned_gateway_fingerprint, std::uint64_t seed);

    // Next telemetry frame, stamped with `now`.
    TelemetryFrame tick(Seconds now);
    [[nodiscard]] std::uint64_t frames_emitted() const noexcept { return emitted_; }

  protected:
    Bytes handle(ByteView frame, Seconds now) override;

  private:
    TemperatureProcess process_;
    std::uint16_t sequence_ = 0;
    std::uint64_t emitted_ = 0;
};

class LightDevice final : public DeviceEndpoint {
  public:
    LightDevice(DeviceId id, Digest fingerprint, Digest pinned_gateway_fingerprint, bool on = false);

    [[nodiscard]] bool on() const noexcept { return on_; }
    // (time, state after the command) for every command applied.
    [[nodiscard]] const std::vector<std::pair<Seconds, bool>>& history() const noexcept { return history_; }

  protected:
    Bytes handle(ByteView frame, Seconds now) override;

  private:
    bool on_;
    std::vector<std::pair<Seconds, bool>> history_;
};

struct ScheduledCommand {
    Seconds offset{0};  // from the start of operation
    Opcode opcode = Opcode::On;

    bool operator==(const ScheduledCommand&) const = default;
};

// `count` commands at distinct whole minutes of [0, duration), chosen by the
// seed, sorted, alternating ON and OFF starting with ON.
std::vector<ScheduledCommand> light_schedule(std::uint64_t seed, std::size_t count, Seconds duration);

}  // namespace biot::devices
