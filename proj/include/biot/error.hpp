#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace biot {

enum class ErrorCode {
    InvalidArgument,
    MalformedEncoding,
    // ledger
    UnknownSender,
    UnknownFunction,
    ClockRegression,
    NotReadOnly,
    ChainCorrupted,
    ReplayDivergence,
    // contract
    ContractNotDeployed,
    AlreadyDeployed,
    Unauthorized,
    UnknownGateway,
    UnknownDevice,
    PayloadTooLarge,
    // anchoring
    StoreUnavailable,
    EmptyWindow,
    IndexOutOfRange,
    // gateway / devices
    PinningMismatch,
    UnknownDeviceFingerprint,
    DeviceTimeout,
    ChannelClosed,
    WrongConfiguration,
    MalformedFrame,
    // economics / harness
    IncompleteRun,
    ConfigInvalid,
    RootNotFound,
    VerifyFailed,
    MalformedProof,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace biot
