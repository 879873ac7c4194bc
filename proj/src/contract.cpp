#include "biot/contract.hpp"

#include "biot/codec.hpp"

namespace biot::contract {

std::string_view token(Function fn) noexcept {
    switch (fn) {
        case Function::Deploy: return kDeploy;
        case Function::RegisterGateway: return kRegisterGateway;
        case Function::RegisterDevice: return kRegisterDevice;
        case Function::SendMessageToDevice: return kSendMessageToDevice;
        case Function::SendResponseFromDevice: return kSendResponseFromDevice;
        case Function::GetMessagesFromDevice: return kGetMessagesFromDevice;
    }
    return {};
}

Function parse_function(std::string_view t) {
    for (auto fn : {Function::Deploy, Function::RegisterGateway, Function::RegisterDevice,
                    Function::SendMessageToDevice, Function::SendResponseFromDevice,
                    Function::GetMessagesFromDevice}) {
        if (token(fn) == t) return fn;
    }
    throw Error(ErrorCode::UnknownFunction, "'" + std::string(t) + "'");
}

bool is_read_only(Function fn) noexcept { return fn == Function::GetMessagesFromDevice; }

StorageScheme scheme_for(PayloadKind kind) noexcept {
    switch (kind) {
        case PayloadKind::Raw: return StorageScheme::FullOnChain;
        case PayloadKind::Digest: return StorageScheme::DataHashing;
        case PayloadKind::MerkleRoot: return StorageScheme::MerkleTree;
    }
    return StorageScheme::FullOnChain;
}

PayloadKind kind_for(StorageScheme scheme) noexcept {
    switch (scheme) {
        case StorageScheme::FullOnChain: return PayloadKind::Raw;
        case StorageScheme::DataHashing: return PayloadKind::Digest;
        case StorageScheme::MerkleTree: return PayloadKind::MerkleRoot;
    }
    return PayloadKind::Raw;
}

std::string_view to_string(EventName name) noexcept {
    return name == EventName::MessageSentToDevice ? "messageSentToDevice" : "responseSentFromDevice";
}

// ---- state ----------------------------------------------------------------------

namespace {

void write_messages(codec::Writer& w, const std::map<DeviceId, std::vector<Message>>& box) {
    w.u32(static_cast<std::uint32_t>(box.size()));
    for (const auto& [device, messages] : box) {
        w.raw(device.view());
        w.u32(static_cast<std::uint32_t>(messages.size()));
        for (const auto& m : messages) {
            w.u64(m.sequence).u8(static_cast<std::uint8_t>(m.kind)).u64(m.tag).blob(m.payload);
        }
    }
}

}  // namespace

Bytes ContractState::serialize() const {
    codec::Writer w;
    w.raw(admin.view());
    w.u32(static_cast<std::uint32_t>(gateways.size()));
    for (const auto& g : gateways) w.raw(g.view());
    w.u32(static_cast<std::uint32_t>(device_owner.size()));
    for (const auto& [device, owner] : device_owner) w.raw(device.view()).raw(owner.view());
    write_messages(w, inbox);
    write_messages(w, outbox);
    return w.take();
}

Digest ContractState::digest() const { return sha256(serialize()); }

// ---- operations -------------------------------------------------------------------

BiotContract::BiotContract(Address admin, ContractLimits limits) : limits_(limits) { state_.admin = admin; }

CallerContext BiotContract::context_for(const Address& caller) const {
    if (caller == state_.admin) return {caller, Role::Administrator};
    if (state_.gateways.contains(caller)) return {caller, Role::Gateway};
    return {caller, Role::Client};
}

void BiotContract::require_admin(const CallerContext& ctx) const {
    if (ctx.role != Role::Administrator || ctx.caller != state_.admin) {
        throw Error(ErrorCode::Unauthorized, "only the administrator may call this function");
    }
}

void BiotContract::require_registered(const DeviceId& device) const {
    if (!state_.device_owner.contains(device)) {
        throw Error(ErrorCode::UnknownDevice, "device " + device.to_hex() + " is not registered");
    }
}

void BiotContract::require_payload(const Bytes& message) const {
    if (message.size() > limits_.max_payload) {
        throw Error(ErrorCode::PayloadTooLarge, std::to_string(message.size()) + " bytes exceeds limit of " +
                                                    std::to_string(limits_.max_payload));
    }
}

void BiotContract::register_gateway(const CallerContext& ctx, const Address& gateway) {
    require_admin(ctx);
    state_.gateways.insert(gateway);
}

void BiotContract::register_device(const CallerContext& ctx, const DeviceId& device, const Address& gateway) {
    require_admin(ctx);
    if (!state_.gateways.contains(gateway)) {
        throw Error(ErrorCode::UnknownGateway, "gateway " + gateway.to_hex() + " is not registered");
    }
    state_.device_owner[device] = gateway;
}

EmittedEvent BiotContract::send_message_to_device(const CallerContext& /*ctx*/, const DeviceId& device, Bytes message,
                                                  PayloadKind kind, std::uint64_t tag) {
    require_registered(device);
    require_payload(message);
    auto& box = state_.outbox[device];
    box.push_back({box.size() + 1, kind, tag, message});
    return {EventName::MessageSentToDevice, device, std::move(message)};
}

EmittedEvent BiotContract::send_response_from_device(const CallerContext& ctx, const DeviceId& device, Bytes message,
                                                     PayloadKind kind, std::uint64_t tag) {
    require_registered(device);
    if (state_.device_owner.at(device) != ctx.caller) {
        throw Error(ErrorCode::Unauthorized, "caller is not the gateway registered for " + device.to_hex());
    }
    require_payload(message);
    auto& box = state_.inbox[device];
    box.push_back({box.size() + 1, kind, tag, message});
    return {EventName::ResponseSentFromDevice, device, std::move(message)};
}

std::vector<Message> BiotContract::get_messages_from_device(const CallerContext& /*ctx*/, const DeviceId& device,
                                                            std::uint64_t after_sequence) const {
    require_registered(device);
    std::vector<Message> out;
    if (auto it = state_.inbox.find(device); it != state_.inbox.end()) {
        // Sequences are 1..n without gaps, so the cursor is also an index.
        const auto& box = it->second;
        for (std::size_t i = std::min<std::uint64_t>(after_sequence, box.size()); i < box.size(); ++i) {
            out.push_back(box[i]);
        }
    }
    return out;
}

// ---- encoding ---------------------------------------------------------------------

namespace {

template <class Id>
Id read_id_field(codec::Reader& r) {
    const Bytes field = r.blob();
    if (field.size() != Id::kSize) {
        throw Error(ErrorCode::MalformedEncoding, "identifier field has wrong length");
    }
    return Id::from_bytes(field);
}

std::uint64_t read_u64_field(codec::Reader& r) {
    const Bytes field = r.blob();
    if (field.size() != 8) throw Error(ErrorCode::MalformedEncoding, "u64 field must be 8 bytes");
    codec::Reader inner(field);
    return inner.u64();
}

PayloadKind read_kind_field(codec::Reader& r) {
    const Bytes field = r.blob();
    if (field.size() != 1 || field[0] > static_cast<std::uint8_t>(PayloadKind::MerkleRoot)) {
        throw Error(ErrorCode::MalformedEncoding, "invalid payload kind");
    }
    return static_cast<PayloadKind>(field[0]);
}

void write_u64_field(codec::Writer& w, std::uint64_t v) {
    codec::Writer inner;
    inner.u64(v);
    w.blob(inner.bytes());
}

struct ArgsEncoder {
    codec::Writer& w;
    void operator()(const DeployArgs&) const {}
    void operator()(const RegisterGatewayArgs& a) const { w.blob(a.gateway.view()); }
    void operator()(const RegisterDeviceArgs& a) const { w.blob(a.device.view()).blob(a.gateway.view()); }
    void operator()(const MessageArgs& a) const {
        const std::uint8_t kind = static_cast<std::uint8_t>(a.kind);
        w.blob(a.device.view()).blob(a.message).blob(ByteView{&kind, 1});
        write_u64_field(w, a.tag);
    }
    void operator()(const GetMessagesArgs& a) const {
        w.blob(a.device.view());
        write_u64_field(w, a.after_sequence);
    }
};

}  // namespace

EncodedCall encode(const Call& call) {
    codec::Writer w;
    std::visit(ArgsEncoder{w}, call.args);
    return {std::string(token(call.function)), w.take()};
}

Call decode(std::string_view function, ByteView args) {
    const Function fn = parse_function(function);
    codec::Reader r(args);
    Call call{fn, DeployArgs{}};
    switch (fn) {
        case Function::Deploy: break;
        case Function::RegisterGateway: call.args = RegisterGatewayArgs{read_id_field<Address>(r)}; break;
        case Function::RegisterDevice: {
            auto device = read_id_field<DeviceId>(r);
            call.args = RegisterDeviceArgs{device, read_id_field<Address>(r)};
            break;
        }
        case Function::SendMessageToDevice:
        case Function::SendResponseFromDevice: {
            MessageArgs m;
            m.device = read_id_field<DeviceId>(r);
            m.message = r.blob();
            m.kind = read_kind_field(r);
            m.tag = read_u64_field(r);
            call.args = std::move(m);
            break;
        }
        case Function::GetMessagesFromDevice: {
            auto device = read_id_field<DeviceId>(r);
            call.args = GetMessagesArgs{device, read_u64_field(r)};
            break;
        }
    }
    r.expect_done();
    return call;
}

namespace calls {

EncodedCall deploy() { return encode({Function::Deploy, DeployArgs{}}); }

EncodedCall register_gateway(const Address& gateway) {
    return encode({Function::RegisterGateway, RegisterGatewayArgs{gateway}});
}

EncodedCall register_device(const DeviceId& device, const Address& gateway) {
    return encode({Function::RegisterDevice, RegisterDeviceArgs{device, gateway}});
}

EncodedCall send_message_to_device(const DeviceId& device, ByteView message, PayloadKind kind, std::uint64_t tag) {
    return encode({Function::SendMessageToDevice, MessageArgs{device, Bytes(message.begin(), message.end()), kind, tag}});
}

EncodedCall send_response_from_device(const DeviceId& device, ByteView message, PayloadKind kind, std::uint64_t tag) {
    return encode(
        {Function::SendResponseFromDevice, MessageArgs{device, Bytes(message.begin(), message.end()), kind, tag}});
}

EncodedCall get_messages_from_device(const DeviceId& device, std::uint64_t after_sequence) {
    return encode({Function::GetMessagesFromDevice, GetMessagesArgs{device, after_sequence}});
}

}  // namespace calls

Bytes encode_messages(const std::vector<Message>& messages) {
    codec::Writer w;
    w.u32(static_cast<std::uint32_t>(messages.size()));
    for (const auto& m : messages) w.u64(m.sequence).u8(static_cast<std::uint8_t>(m.kind)).u64(m.tag).blob(m.payload);
    return w.take();
}

std::vector<Message> decode_messages(ByteView bytes) {
    codec::Reader r(bytes);
    std::vector<Message> out(r.u32());
    for (auto& m : out) {
        m.sequence = r.u64();
        const auto kind = r.u8();
        if (kind > static_cast<std::uint8_t>(PayloadKind::MerkleRoot)) {
            throw Error(ErrorCode::MalformedEncoding, "invalid payload kind");
        }
        m.kind = static_cast<PayloadKind>(kind);
        m.tag = r.u64();
        m.payload = r.blob();
    }
    r.expect_done();
    return out;
}

// ---- dispatch ---------------------------------------------------------------------

std::vector<EmittedEvent> apply(std::optional<BiotContract>& instance, const Address& sender, const Call& call,
                                const ContractLimits& limits) {
    if (call.function == Function::Deploy) {
        if (instance) throw Error(ErrorCode::AlreadyDeployed, "contract already deployed");
        instance.emplace(sender, limits);
        return {};
    }
    if (!instance) throw Error(ErrorCode::ContractNotDeployed, "no contract deployed");
    if (is_read_only(call.function)) {
        throw Error(ErrorCode::InvalidArgument, std::string(token(call.function)) + " is read-only");
    }

    auto& c = *instance;
    const auto ctx = c.context_for(sender);
    switch (call.function) {
        case Function::RegisterGateway:
            c.register_gateway(ctx, std::get<RegisterGatewayArgs>(call.args).gateway);
            return {};
        case Function::RegisterDevice: {
            const auto& a = std::get<RegisterDeviceArgs>(call.args);
            c.register_device(ctx, a.device, a.gateway);
            return {};
        }
        case Function::SendMessageToDevice: {
            const auto& a = std::get<MessageArgs>(call.args);
            return {c.send_message_to_device(ctx, a.device, a.message, a.kind, a.tag)};
        }
        case Function::SendResponseFromDevice: {
            const auto& a = std::get<MessageArgs>(call.args);
            return {c.send_response_from_device(ctx, a.device, a.message, a.kind, a.tag)};
        }
        default: break;
    }
    throw Error(ErrorCode::UnknownFunction, std::string(token(call.function)));
}

Bytes query(const std::optional<BiotContract>& instance, const Address& caller, const Call& call) {
    if (!is_read_only(call.function)) {
        throw Error(ErrorCode::NotReadOnly, std::string(token(call.function)) + " mutates contract state");
    }
    if (!instance) throw Error(ErrorCode::ContractNotDeployed, "no contract deployed");
    const auto& a = std::get<GetMessagesArgs>(call.args);
    return encode_messages(instance->get_messages_from_device(instance->context_for(caller), a.device, a.after_sequence));
}

Digest state_digest(const std::optional<BiotContract>& instance) {
    if (!instance) return sha256(Bytes{});
    return instance->state().digest();
}

}  // namespace biot::contract
