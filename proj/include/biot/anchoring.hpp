#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "biot/common.hpp"
#include "biot/ledger.hpp"
#include "biot/merkle.hpp"

namespace biot::anchoring {

struct OffchainRecord {
    DeviceId device;
    std::uint64_t sequence = 0;
    Bytes payload;
    Digest digest{};  // SHA-256(payload)
    std::optional<std::uint64_t> window_id;
    std::optional<std::uint64_t> leaf_index;

    [[nodiscard]] bool intact() const { return sha256(payload) == digest; }
    bool operator==(const OffchainRecord&) const = default;
};

/// Off-chain payload store with an in-memory index and an optional append-only
/// backing file (format in docs/wire-formats.md). Sequences are per device,
/// starting at 1.
class OffchainStore {
  public:
    OffchainStore() = default;
    // Loads any existing records, then appends to the file. Throws
    // Error(StoreUnavailable) if the file cannot be opened.
    explicit OffchainStore(std::filesystem::path file);

    // Throws Error(StoreUnavailable) when the store is offline or the write fails.
    const OffchainRecord& put(const DeviceId& device, ByteView payload);
    void assign_window(const DeviceId& device, std::uint64_t sequence, std::uint64_t window_id,
                       std::uint64_t leaf_index);

    [[nodiscard]] const OffchainRecord* find(const DeviceId& device, std::uint64_t sequence) const;
    [[nodiscard]] std::vector<OffchainRecord> records() const;
    [[nodiscard]] std::size_t size() const noexcept { return count_; }

    // Failure injection for the backing system.
    void set_available(bool available) noexcept { available_ = available; }

    static std::vector<OffchainRecord> load(const std::filesystem::path& file);
    static void write_file(const std::filesystem::path& file, const std::vector<OffchainRecord>& records);

  private:
    void append_line(const std::string& line);

    std::optional<std::filesystem::path> file_;
    std::map<DeviceId, std::vector<OffchainRecord>> by_device_;
    std::size_t count_ = 0;
    bool available_ = true;
};

struct WindowPolicy {
    Seconds duration{86'400};
    std::optional<std::size_t> max_leaves;

    void validate() const;
};

enum class Direction { ToDevice, FromDevice };

struct ClosedWindow {
    std::uint64_t window_id = 0;
    DeviceId device;
    Seconds opened_at{0};
    Seconds closed_at{0};
    std::vector<std::uint64_t> sequences;  // off-chain record per leaf
    MerkleTree tree;
    ledger::TxHandle anchor_tx;
};

/// Applies one storage scheme for one device on behalf of a gateway account.
/// Under MerkleTree, payloads accumulate in a window that is anchored as a
/// single 32-byte root when its duration or leaf bound is reached.
class Anchorer {
  public:
    Anchorer(ledger::Ledger& ledger, Address sender, DeviceId device, StorageScheme scheme, WindowPolicy policy,
             OffchainStore& store);

    [[nodiscard]] StorageScheme scheme() const noexcept { return scheme_; }
    [[nodiscard]] const DeviceId& device() const noexcept { return device_; }

    // Errors: PayloadTooLarge.
    ledger::TxHandle anchor_full_on_chain(ByteView payload, Seconds now, Direction direction = Direction::FromDevice);
    // Errors: StoreUnavailable (nothing submitted).
    std::pair<ledger::TxHandle, OffchainRecord> anchor_digest(ByteView payload, Seconds now,
                                                              Direction direction = Direction::FromDevice);
    // Errors: StoreUnavailable. Closes an expired window before appending.
    OffchainRecord append_to_window(ByteView payload, Seconds now);
    // Errors: EmptyWindow (nothing submitted).
    std::pair<MerkleTree, ledger::TxHandle> close_window(Seconds now);
    bool close_if_expired(Seconds now);

    [[nodiscard]] bool has_open_window() const noexcept { return open_.has_value(); }
    [[nodiscard]] std::size_t open_leaf_count() const noexcept { return open_ ? open_->leaves.size() : 0; }
    [[nodiscard]] std::optional<Seconds> window_deadline() const;
    [[nodiscard]] std::optional<std::uint64_t> open_window_id() const;
    // Drops the open window as if the gateway were lost before anchoring it.
    void discard_open_window() noexcept { open_.reset(); }

    [[nodiscard]] const std::vector<ClosedWindow>& closed_windows() const noexcept { return closed_; }
    // Errors: IndexOutOfRange if the record is not part of a closed window.
    [[nodiscard]] InclusionProof prove(std::uint64_t sequence) const;

  private:
    struct OpenWindow {
        std::uint64_t window_id = 0;
        Seconds opened_at{0};
        std::vector<Digest> leaves;
        std::vector<std::uint64_t> sequences;
    };

    contract::EncodedCall message_call(ByteView message, contract::PayloadKind kind, std::uint64_t tag,
                                       Direction direction) const;

    ledger::Ledger& ledger_;
    Address sender_;
    DeviceId device_;
    StorageScheme scheme_;
    WindowPolicy policy_;
    OffchainStore& store_;
    std::optional<OpenWindow> open_;
    std::vector<ClosedWindow> closed_;
    std::uint64_t next_window_id_ = 0;
};

}  // namespace biot::anchoring
