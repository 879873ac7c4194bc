#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "biot/common.hpp"
#include "biot/contract.hpp"
#include "biot/economics.hpp"
#include "json.hpp"

namespace biot::ledger {

enum class TxStatus : std::uint8_t { Pending = 0, Included = 1, Reverted = 2 };

std::string_view to_string(TxStatus status) noexcept;

struct Transaction {
    Address sender;
    std::string function;
    Bytes args;
    Seconds submitted_at{0};
    std::uint64_t gas_used = 0;
    TxStatus status = TxStatus::Pending;

    [[nodiscard]] Bytes serialize() const;
    static Transaction deserialize(ByteView bytes);

    bool operator==(const Transaction&) const = default;
};

struct Block {
    std::uint64_t index = 0;
    Seconds timestamp{0};
    Digest parent_digest{};
    std::vector<Transaction> transactions;
    Digest digest{};

    // SHA-256 over parent digest, index, timestamp and the length-prefixed transactions.
    [[nodiscard]] Digest compute_digest() const;
    [[nodiscard]] Bytes serialize() const;
    static Block deserialize(ByteView bytes);

    bool operator==(const Block&) const = default;
};

struct TxHandle {
    std::uint64_t id = 0;
    auto operator<=>(const TxHandle&) const = default;
};

struct Event {
    contract::EventName name = contract::EventName::MessageSentToDevice;
    DeviceId device;
    Bytes payload;
    std::uint64_t block_index = 0;
    Seconds block_time{0};
    TxHandle tx;
};

struct EventFilter {
    contract::EventName name = contract::EventName::MessageSentToDevice;
    std::optional<DeviceId> device;

    [[nodiscard]] bool matches(const Event& e) const {
        return e.name == name && (!device || *device == e.device);
    }
};

using EventCallback = std::function<void(const Event&)>;

struct LatencyModel {
    Seconds block_interval{15};
    std::uint32_t confirmations = 1;

    void validate() const;
};

struct LedgerConfig {
    LatencyModel latency;
    economics::GasSchedule gas;
    contract::ContractLimits limits;
    Seconds genesis_time{0};
};

struct Receipt {
    TxStatus status = TxStatus::Pending;
    std::uint64_t gas_used = 0;
    std::uint64_t block_index = 0;
    Seconds included_at{0};
    Seconds resolved_at{0};  // included_at + (confirmations - 1) blocks
    std::optional<ErrorCode> error;
};

// Gas charged for a call, independent of whether it succeeds.
std::uint64_t meter(const economics::GasSchedule& schedule, std::string_view function, ByteView args);

/// Deterministic single-writer chain hosting the contract.
///
/// Blocks are produced at fixed intervals on the virtual clock; a transaction
/// submitted at t is included in the first block with timestamp > t.
/// Submission, receipts and read-only calls are safe from multiple threads.
/// Subscriber callbacks run after the block is committed and outside the
/// ledger lock, so they may submit new transactions.
class Ledger {
  public:
    explicit Ledger(LedgerConfig config = {});

    Ledger(const Ledger&) = delete;
    Ledger& operator=(const Ledger&) = delete;

    void create_account(const Address& account);
    [[nodiscard]] bool has_account(const Address& account) const;

    // Errors: UnknownSender, UnknownFunction, InvalidArgument (read-only function).
    TxHandle submit(const Address& sender, const contract::EncodedCall& call, Seconds submitted_at);

    [[nodiscard]] std::optional<Receipt> receipt(TxHandle handle) const;
    [[nodiscard]] Transaction transaction(TxHandle handle) const;

    // Errors: ClockRegression if now <= head timestamp; InvalidArgument if now
    // is not exactly one block interval after the head.
    Block produce_block(Seconds now);
    // Produces every block with timestamp <= t.
    std::vector<Block> advance_to(Seconds t);
    // Produces blocks until the handle's receipt resolves.
    Receipt wait_for(TxHandle handle);

    [[nodiscard]] Seconds head_time() const;
    [[nodiscard]] Seconds next_block_time() const;
    [[nodiscard]] std::size_t pending_count() const;
    [[nodiscard]] bool all_resolved() const;

    // Read-only call: zero gas, no block, no event, no time advance.
    [[nodiscard]] Bytes call(const Address& caller, const contract::EncodedCall& call) const;

    std::uint64_t subscribe(EventFilter filter, EventCallback callback);
    void unsubscribe(std::uint64_t subscription);

    [[nodiscard]] std::vector<Block> blocks() const;
    [[nodiscard]] std::vector<Event> events() const;
    [[nodiscard]] Digest state_digest() const;
    [[nodiscard]] std::optional<contract::ContractState> contract_state() const;
    [[nodiscard]] std::uint64_t total_gas() const;
    [[nodiscard]] const LedgerConfig& config() const noexcept { return config_; }

    // Re-executes the transactions recorded in `blocks` at their recorded
    // submission and block times. Throws ReplayDivergence if any recomputed
    // block differs from the recorded one.
    static std::unique_ptr<Ledger> replay(const std::vector<Block>& blocks, LedgerConfig config);

  private:
    struct TxRecord {
        Transaction tx;
        std::optional<std::uint64_t> block_index;
        std::optional<ErrorCode> error;
    };
    struct Subscription {
        EventFilter filter;
        EventCallback callback;
    };

    Block produce_locked(Seconds now, std::vector<Event>& emitted);
    std::optional<Receipt> receipt_locked(TxHandle handle) const;

    LedgerConfig config_;
    mutable std::shared_mutex mutex_;
    std::set<Address> accounts_;
    std::vector<Block> chain_;
    std::vector<TxRecord> txs_;
    std::vector<std::uint64_t> pending_;
    std::vector<Event> events_;
    std::optional<contract::BiotContract> contract_;
    std::map<std::uint64_t, Subscription> subscribers_;
    std::uint64_t next_subscription_ = 1;
    std::uint64_t gas_total_ = 0;
    std::optional<std::uint64_t> last_inclusion_;
};

// Recomputes every digest and parent link; false on any mismatch.
bool verify_chain(const std::vector<Block>& blocks);

// Append-only record file: each block is a u32 big-endian length followed by
// its canonical serialization.
void write_ledger_file(const std::filesystem::path& path, const std::vector<Block>& blocks);
void append_ledger_record(const std::filesystem::path& path, const Block& block);
std::vector<Block> read_ledger_file(const std::filesystem::path& path);

nlohmann::json to_json(const Transaction& tx);
nlohmann::json to_json(const Block& block);
nlohmann::json ledger_to_json(const std::vector<Block>& blocks);
nlohmann::json to_json(const Event& event);

}  // namespace biot::ledger
