#include "biot/devices.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "biot/codec.hpp"

namespace biot::devices {

namespace {

Error malformed(const std::string& what) { return Error(ErrorCode::MalformedFrame, what); }

void check_length(ByteView frame) {
    if (frame.size() != kFrameSize) {
        throw malformed("frame is " + std::to_string(frame.size()) + " bytes, expected " +
                        std::to_string(kFrameSize));
    }
}

DeviceId frame_device(ByteView frame) { return DeviceId::from_bytes(frame.first(DeviceId::kSize)); }

bool zero_tail(ByteView frame, std::size_t from) {
    return std::all_of(frame.begin() + static_cast<std::ptrdiff_t>(from), frame.end(),
                       [](std::uint8_t b) { return b == 0; });
}

Opcode opcode_from_byte(std::uint8_t b) {
    if (b < 1 || b > 4) throw malformed("unknown opcode " + std::to_string(b));
    return static_cast<Opcode>(b);
}

}  // namespace

ByteView frame_body(ByteView frame) {
    check_length(frame);
    return frame.subspan(DeviceId::kSize);
}

Bytes make_frame(const DeviceId& device, ByteView body) {
    if (body.size() != kFrameBodySize) {
        throw malformed("frame body is " + std::to_string(body.size()) + " bytes, expected " +
                        std::to_string(kFrameBodySize));
    }
    Bytes out(device.view().begin(), device.view().end());
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

// ---- frames ---------------------------------------------------------------------

Bytes TelemetryFrame::encode() const {
    codec::Writer w;
    w.raw(device.view());
    w.u32(timestamp);
    w.u16(static_cast<std::uint16_t>(centi_celsius));
    w.u16(sequence);
    return w.take();
}

TelemetryFrame TelemetryFrame::decode(ByteView frame) {
    check_length(frame);
    codec::Reader r(frame.subspan(DeviceId::kSize));
    TelemetryFrame f;
    f.device = frame_device(frame);
    f.timestamp = r.u32();
    f.centi_celsius = static_cast<std::int16_t>(r.u16());
    f.sequence = r.u16();
    return f;
}

std::string_view to_string(Opcode op) noexcept {
    switch (op) {
        case Opcode::On: return "ON";
        case Opcode::Off: return "OFF";
        case Opcode::Toggle: return "TOGGLE";
        case Opcode::Status: return "STATUS";
    }
    return "?";
}

Opcode parse_opcode(std::string_view text) {
    for (auto op : {Opcode::On, Opcode::Off, Opcode::Toggle, Opcode::Status}) {
        if (text == to_string(op)) return op;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown opcode '" + std::string(text) + "'");
}

Bytes LightCommand::encode() const {
    Bytes out(device.view().begin(), device.view().end());
    out.push_back(kCommandKind);
    out.push_back(static_cast<std::uint8_t>(opcode));
    out.resize(kFrameSize, 0);
    return out;
}

LightCommand LightCommand::decode(ByteView frame) {
    check_length(frame);
    if (frame[16] != kCommandKind) throw malformed("not a command frame");
    if (!zero_tail(frame, 18)) throw malformed("command padding must be zero");
    return {frame_device(frame), opcode_from_byte(frame[17])};
}

Bytes LightResponse::encode() const {
    Bytes out(device.view().begin(), device.view().end());
    out.push_back(kResponseKind);
    out.push_back(static_cast<std::uint8_t>(opcode));
    out.push_back(on ? 1 : 0);
    out.resize(kFrameSize, 0);
    return out;
}

LightResponse LightResponse::decode(ByteView frame) {
    check_length(frame);
    if (frame[16] != kResponseKind) throw malformed("not a response frame");
    if (frame[18] > 1 || !zero_tail(frame, 19)) throw malformed("bad response state or padding");
    return {frame_device(frame), opcode_from_byte(frame[17]), frame[18] == 1};
}

Bytes poll_frame(const DeviceId& device) {
    Bytes out(device.view().begin(), device.view().end());
    out.push_back(kPollKind);
    out.resize(kFrameSize, 0);
    return out;
}

LightOutcome light_handle_command(const DeviceId& device, ByteView frame, bool on) {
    const auto cmd = LightCommand::decode(frame);
    if (cmd.device != device) throw malformed("command addressed to " + cmd.device.to_hex());
    switch (cmd.opcode) {
        case Opcode::On: on = true; break;
        case Opcode::Off: on = false; break;
        case Opcode::Toggle: on = !on; break;
        case Opcode::Status: break;
    }
    return {on, LightResponse{device, cmd.opcode, on}.encode()};
}

// ---- temperature ------------------------------------------------------------------

TemperatureProcess::TemperatureProcess(std::uint64_t seed, std::int16_t setpoint, std::int16_t min,
                                       std::int16_t max)
    : rng_(seed), setpoint_(setpoint), min_(min), max_(max), value_(std::clamp(setpoint, min, max)) {
    if (min > max) throw Error(ErrorCode::InvalidArgument, "temperature bounds are inverted");
}

std::int16_t TemperatureProcess::next() {
    const std::uint64_t bits = rng_();
    const int distance = value_ - setpoint_;
    // Up with probability (128 - distance/10)/256, clamped to [1/8, 7/8].
    const int threshold = std::clamp(128 - distance / 10, 32, 224);
    const int step = static_cast<int>(bits >> 56) < threshold ? 10 : -10;
    value_ = static_cast<std::int16_t>(std::clamp(value_ + step, static_cast<int>(min_), static_cast<int>(max_)));
    return value_;
}

// ---- endpoints ----------------------------------------------------------------------

DeviceEndpoint::DeviceEndpoint(DeviceId id, Digest fingerprint, Digest pinned_gateway_fingerprint)
    : id_(id), fingerprint_(fingerprint), pinned_(pinned_gateway_fingerprint) {}

void DeviceEndpoint::check_gateway(const Digest& presented) const {
    if (presented != pinned_) {
        throw Error(ErrorCode::PinningMismatch, "gateway fingerprint does not match the pinned value for " +
                                                    id_.to_hex());
    }
}

void DeviceEndpoint::record(Seconds at, std::string direction, ByteView frame, std::string detail) {
    trace_.push_back({at, id_, std::move(direction), Bytes(frame.begin(), frame.end()), std::move(detail)});
}

std::optional<Bytes> DeviceEndpoint::receive(ByteView frame, Seconds now) {
    if (!online_) {
        record(now, "drop", frame, "offline");
        return std::nullopt;
    }
    ++received_;
    record(now, "in", frame, "");
    Bytes reply = handle(frame, now);
    record(now, "out", reply, "");
    return reply;
}

ContainerDevice::ContainerDevice(DeviceId id, Digest fingerprint, Digest pinned_gateway_fingerprint,
                                 std::uint64_t seed)
    : DeviceEndpoint(id, fingerprint, pinned_gateway_fingerprint), process_(seed) {}

TelemetryFrame ContainerDevice::tick(Seconds now) {
    TelemetryFrame f{id(), static_cast<std::uint32_t>(now.count()), process_.next(), sequence_++};
    ++emitted_;
    record(now, "out", f.encode(), "telemetry " + std::to_string(f.centi_celsius));
    return f;
}

Bytes ContainerDevice::handle(ByteView frame, Seconds now) {
    check_length(frame);
    if (frame_device(frame) != id() || frame[16] != kPollKind || !zero_tail(frame, 17)) {
        throw malformed("container only answers telemetry polls");
    }
    TelemetryFrame f{id(), static_cast<std::uint32_t>(now.count()), process_.next(), sequence_++};
    ++emitted_;
    return f.encode();
}

LightDevice::LightDevice(DeviceId id, Digest fingerprint, Digest pinned_gateway_fingerprint, bool on)
    : DeviceEndpoint(id, fingerprint, pinned_gateway_fingerprint), on_(on) {}

Bytes LightDevice::handle(ByteView frame, Seconds now) {
    auto outcome = light_handle_command(id(), frame, on_);
    on_ = outcome.on;
    history_.emplace_back(now, on_);
    return std::move(outcome.response);
}

std::vector<ScheduledCommand> light_schedule(std::uint64_t seed, std::size_t count, Seconds duration) {
    const auto minutes = static_cast<std::uint64_t>(duration.count() / 60);
    if (count > minutes) throw Error(ErrorCode::ConfigInvalid, "more commands than minutes in the run");
    std::mt19937_64 rng(seed ^ 0x6c696768742d7363ULL);
    std::set<std::uint64_t> chosen;
    while (chosen.size() < count) chosen.insert(rng() % minutes);
    std::vector<ScheduledCommand> out;
    out.reserve(count);
    for (const auto m : chosen) {
        out.push_back({Seconds{static_cast<std::int64_t>(m) * 60}, out.size() % 2 == 0 ? Opcode::On : Opcode::Off});
    }
    return out;
}

std::string traces_to_csv(const std::vector<TraceEntry>& entries) {
    std::ostringstream out;
    out << "time,device,direction,frame,detail\n";
    for (const auto& e : entries) {
        out << e.at.count() << ',' << e.device.to_hex() << ',' << e.direction << ',' << to_hex(e.frame) << ','
            << e.detail << '\n';
    }
    return out.str();
}

}  // namespace biot::devices
