#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "biot/common.hpp"

namespace biot::contract {

// Function-name tokens. These strings are part of the persisted ledger format.
inline constexpr std::string_view kDeploy = "deploy";
inline constexpr std::string_view kRegisterGateway = "registerGateway";
inline constexpr std::string_view kRegisterDevice = "registerDevice";
inline constexpr std::string_view kSendMessageToDevice = "sendMessageToDevice";
inline constexpr std::string_view kSendResponseFromDevice = "sendResponseFromDevice";
inline constexpr std::string_view kGetMessagesFromDevice = "getMessagesFromDevice";

enum class Function : std::uint8_t {
    Deploy,
    RegisterGateway,
    RegisterDevice,
    SendMessageToDevice,
    SendResponseFromDevice,
    GetMessagesFromDevice,
};

std::string_view token(Function fn) noexcept;
Function parse_function(std::string_view token);  // throws Error(UnknownFunction)
bool is_read_only(Function fn) noexcept;

enum class Role { Administrator, Gateway, Client };

struct CallerContext {
    Address caller;
    Role role = Role::Client;
};

// What a stored message carries. Raw is the payload itself; Digest and
// MerkleRoot are 32-byte commitments to data kept off-chain.
enum class PayloadKind : std::uint8_t { Raw = 0, Digest = 1, MerkleRoot = 2 };

StorageScheme scheme_for(PayloadKind kind) noexcept;
PayloadKind kind_for(StorageScheme scheme) noexcept;

struct Message {
    std::uint64_t sequence = 0;
    PayloadKind kind = PayloadKind::Raw;
    std::uint64_t tag = 0;  // window id for MerkleRoot anchors, 0 otherwise
    Bytes payload;

    bool operator==(const Message&) const = default;
};

enum class EventName : std::uint8_t { MessageSentToDevice, ResponseSentFromDevice };

std::string_view to_string(EventName name) noexcept;

struct EmittedEvent {
    EventName name = EventName::MessageSentToDevice;
    DeviceId device;
    Bytes payload;
};

struct ContractLimits {
    std::size_t max_payload = 4096;
};

struct ContractState {
    Address admin;
    std::set<Address> gateways;
    std::map<DeviceId, Address> device_owner;
    std::map<DeviceId, std::vector<Message>> inbox;   // responses from devices
    std::map<DeviceId, std::vector<Message>> outbox;  // messages sent to devices

    [[nodiscard]] Bytes serialize() const;
    [[nodiscard]] Digest digest() const;

    bool operator==(const ContractState&) const = default;
};

/// The BIoT contract. Every mutating operation validates completely before it
/// touches state, so a rejected call leaves the state untouched.
class BiotContract {
  public:
    explicit BiotContract(Address admin, ContractLimits limits = {});

    [[nodiscard]] CallerContext context_for(const Address& caller) const;

    void register_gateway(const CallerContext& ctx, const Address& gateway);
    void register_device(const CallerContext& ctx, const DeviceId& device, const Address& gateway);
    EmittedEvent send_message_to_device(const CallerContext& ctx, const DeviceId& device, Bytes message,
                                        PayloadKind kind = PayloadKind::Raw, std::uint64_t tag = 0);
    EmittedEvent send_response_from_device(const CallerContext& ctx, const DeviceId& device, Bytes message,
                                           PayloadKind kind = PayloadKind::Raw, std::uint64_t tag = 0);

    // Inbox entries with sequence > after_sequence. The read cursor is kept by
    // the caller so retrieval stays read-only.
    [[nodiscard]] std::vector<Message> get_messages_from_device(const CallerContext& ctx, const DeviceId& device,
                                                                std::uint64_t after_sequence) const;

    [[nodiscard]] const ContractState& state() const noexcept { return state_; }
    [[nodiscard]] const ContractLimits& limits() const noexcept { return limits_; }

  private:
    void require_admin(const CallerContext& ctx) const;
    void require_registered(const DeviceId& device) const;
    void require_payload(const Bytes& message) const;

    ContractState state_;
    ContractLimits limits_;
};

// ---- canonical call encoding ------------------------------------------------
// args = sequence of u32-length-prefixed fields, see docs/wire-formats.md.

struct DeployArgs {};
struct RegisterGatewayArgs {
    Address gateway;
};
struct RegisterDeviceArgs {
    DeviceId device;
    Address gateway;
};
struct MessageArgs {
    DeviceId device;
    Bytes message;
    PayloadKind kind = PayloadKind::Raw;
    std::uint64_t tag = 0;
};
struct GetMessagesArgs {
    DeviceId device;
    std::uint64_t after_sequence = 0;
};

using Args = std::variant<DeployArgs, RegisterGatewayArgs, RegisterDeviceArgs, MessageArgs, GetMessagesArgs>;

struct Call {
    Function function = Function::Deploy;
    Args args;
};

struct EncodedCall {
    std::string function;
    Bytes args;
};

EncodedCall encode(const Call& call);
Call decode(std::string_view function, ByteView args);  // UnknownFunction / MalformedEncoding

namespace calls {
EncodedCall deploy();
EncodedCall register_gateway(const Address& gateway);
EncodedCall register_device(const DeviceId& device, const Address& gateway);
EncodedCall send_message_to_device(const DeviceId& device, ByteView message, PayloadKind kind = PayloadKind::Raw,
                                   std::uint64_t tag = 0);
EncodedCall send_response_from_device(const DeviceId& device, ByteView message, PayloadKind kind = PayloadKind::Raw,
                                      std::uint64_t tag = 0);
EncodedCall get_messages_from_device(const DeviceId& device, std::uint64_t after_sequence);
}  // namespace calls

Bytes encode_messages(const std::vector<Message>& messages);
std::vector<Message> decode_messages(ByteView bytes);

// ---- dispatch -----------------------------------------------------------------

// Executes a mutating call. `instance` is empty until a Deploy call succeeds;
// the deployer becomes the administrator. Throws biot::Error on rejection.
std::vector<EmittedEvent> apply(std::optional<BiotContract>& instance, const Address& sender, const Call& call,
                                const ContractLimits& limits);

// Executes a read-only call; Error(NotReadOnly) for mutating functions.
Bytes query(const std::optional<BiotContract>& instance, const Address& caller, const Call& call);

Digest state_digest(const std::optional<BiotContract>& instance);

}  // namespace biot::contract
