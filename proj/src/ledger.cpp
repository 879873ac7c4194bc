#include "biot/ledger.hpp"

#include <fstream>
#include <iterator>

#include "biot/codec.hpp"

namespace biot::ledger {

std::string_view to_string(TxStatus status) noexcept {
    switch (status) {
        case TxStatus::Pending: return "Pending";
        case TxStatus::Included: return "Included";
        case TxStatus::Reverted: return "Reverted";
    }
    return "Unknown";
}

// ---- serialization ------------------------------------------------------------

Bytes Transaction::serialize() const {
    codec::Writer w;
    w.raw(sender.view()).str(function).blob(args).i64(submitted_at.count()).u64(gas_used).u8(
        static_cast<std::uint8_t>(status));
    return w.take();
}

Transaction Transaction::deserialize(ByteView bytes) {
    codec::Reader r(bytes);
    Transaction tx;
    tx.sender = r.id<Address>();
    tx.function = r.str();
    tx.args = r.blob();
    tx.submitted_at = Seconds{r.i64()};
    tx.gas_used = r.u64();
    const auto status = r.u8();
    if (status > static_cast<std::uint8_t>(TxStatus::Reverted)) {
        throw Error(ErrorCode::MalformedEncoding, "invalid transaction status");
    }
    tx.status = static_cast<TxStatus>(status);
    r.expect_done();
    return tx;
}

Digest Block::compute_digest() const {
    codec::Writer w;
    w.raw(as_view(parent_digest)).u64(index).i64(timestamp.count()).u32(static_cast<std::uint32_t>(transactions.size()));
    for (const auto& tx : transactions) w.blob(tx.serialize());
    return sha256(w.bytes());
}

Bytes Block::serialize() const {
    codec::Writer w;
    w.u64(index).i64(timestamp.count()).raw(as_view(parent_digest)).u32(static_cast<std::uint32_t>(transactions.size()));
    for (const auto& tx : transactions) w.blob(tx.serialize());
    w.raw(as_view(digest));
    return w.take();
}

Block Block::deserialize(ByteView bytes) {
    codec::Reader r(bytes);
    Block b;
    b.index = r.u64();
    b.timestamp = Seconds{r.i64()};
    b.parent_digest = r.digest();
    const auto n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) b.transactions.push_back(Transaction::deserialize(r.blob()));
    b.digest = r.digest();
    r.expect_done();
    return b;
}

void LatencyModel::validate() const {
    if (block_interval.count() <= 0) throw Error(ErrorCode::ConfigInvalid, "block interval must be positive");
    if (confirmations == 0) throw Error(ErrorCode::ConfigInvalid, "confirmations must be at least 1");
}

std::uint64_t meter(const economics::GasSchedule& schedule, std::string_view function, ByteView args) {
    using contract::Function;
    const Function fn = contract::parse_function(function);
    switch (fn) {
        case Function::Deploy: return schedule.deploy_gas;
        case Function::RegisterGateway: return schedule.register_gateway_gas;
        case Function::RegisterDevice: return schedule.register_device_gas;
        case Function::GetMessagesFromDevice: return 0;
        case Function::SendMessageToDevice:
        case Function::SendResponseFromDevice: break;
    }
    try {
        const auto call = contract::decode(function, args);
        const auto& m = std::get<contract::MessageArgs>(call.args);
        return economics::gas_for_payload(schedule, contract::scheme_for(m.kind), m.message.size());
    } catch (const Error&) {
        // Undecodable arguments still pay the minimum message cost.
        return economics::gas_for_payload(schedule, StorageScheme::FullOnChain, 0);
    }
}

// ---- ledger ---------------------------------------------------------------------

Ledger::Ledger(LedgerConfig config) : config_(std::move(config)) {
    config_.latency.validate();
    config_.gas.validate();
    Block genesis;
    genesis.timestamp = config_.genesis_time;
    genesis.digest = genesis.compute_digest();
    chain_.push_back(std::move(genesis));
}

void Ledger::create_account(const Address& account) {
    std::unique_lock lock(mutex_);
    accounts_.insert(account);
}

bool Ledger::has_account(const Address& account) const {
    std::shared_lock lock(mutex_);
    return accounts_.contains(account);
}

TxHandle Ledger::submit(const Address& sender, const contract::EncodedCall& call, Seconds submitted_at) {
    const auto fn = contract::parse_function(call.function);
    if (contract::is_read_only(fn)) {
        throw Error(ErrorCode::InvalidArgument, call.function + " is read-only; use call()");
    }
    std::unique_lock lock(mutex_);
    if (!accounts_.contains(sender)) throw Error(ErrorCode::UnknownSender, sender.to_hex());
    const TxHandle handle{txs_.size()};
    txs_.push_back({Transaction{sender, call.function, call.args, submitted_at, 0, TxStatus::Pending}, {}, {}});
    pending_.push_back(handle.id);
    return handle;
}

std::optional<Receipt> Ledger::receipt_locked(TxHandle handle) const {
    if (handle.id >= txs_.size()) throw Error(ErrorCode::InvalidArgument, "unknown transaction handle");
    const auto& rec = txs_[handle.id];
    if (!rec.block_index) return std::nullopt;
    const auto& block = chain_[*rec.block_index];
    const Seconds resolved = block.timestamp + config_.latency.block_interval * (config_.latency.confirmations - 1);
    if (chain_.back().timestamp < resolved) return std::nullopt;
    return Receipt{rec.tx.status, rec.tx.gas_used, block.index, block.timestamp, resolved, rec.error};
}

std::optional<Receipt> Ledger::receipt(TxHandle handle) const {
    std::shared_lock lock(mutex_);
    return receipt_locked(handle);
}

Transaction Ledger::transaction(TxHandle handle) const {
    std::shared_lock lock(mutex_);
    if (handle.id >= txs_.size()) throw Error(ErrorCode::InvalidArgument, "unknown transaction handle");
    return txs_[handle.id].tx;
}

Block Ledger::produce_locked(Seconds now, std::vector<Event>& emitted) {
    const Block& head = chain_.back();
    if (now <= head.timestamp) {
        throw Error(ErrorCode::ClockRegression, "block time " + std::to_string(now.count()) +
                                                    " s is not after head " + std::to_string(head.timestamp.count()) +
                                                    " s");
    }
    if (now != head.timestamp + config_.latency.block_interval) {
        throw Error(ErrorCode::InvalidArgument, "block time must be exactly one interval after the head");
    }

    Block block;
    block.index = head.index + 1;
    block.timestamp = now;
    block.parent_digest = head.digest;

    std::vector<std::uint64_t> still_pending;
    for (const auto id : pending_) {
        auto& rec = txs_[id];
        if (rec.tx.submitted_at >= now) {
            still_pending.push_back(id);
            continue;
        }
        rec.tx.gas_used = meter(config_.gas, rec.tx.function, rec.tx.args);
        std::vector<contract::EmittedEvent> out;
        try {
            const auto call = contract::decode(rec.tx.function, rec.tx.args);
            out = contract::apply(contract_, rec.tx.sender, call, config_.limits);
            rec.tx.status = TxStatus::Included;
        } catch (const Error& e) {
            rec.tx.status = TxStatus::Reverted;
            rec.error = e.code();
            out.clear();
        }
        rec.block_index = block.index;
        gas_total_ += rec.tx.gas_used;
        block.transactions.push_back(rec.tx);
        for (auto& e : out) {
            emitted.push_back({e.name, e.device, std::move(e.payload), block.index, now, TxHandle{id}});
        }
    }
    pending_ = std::move(still_pending);
    if (!block.transactions.empty()) last_inclusion_ = block.index;
    block.digest = block.compute_digest();
    events_.insert(events_.end(), emitted.begin(), emitted.end());
    chain_.push_back(block);
    return block;
}

Block Ledger::produce_block(Seconds now) {
    std::vector<Event> emitted;
    std::vector<Subscription> subs;
    Block block;
    {
        std::unique_lock lock(mutex_);
        block = produce_locked(now, emitted);
        for (const auto& [id, s] : subscribers_) subs.push_back(s);
    }
    for (const auto& e : emitted) {
        for (const auto& s : subs) {
            if (s.filter.matches(e)) s.callback(e);
        }
    }
    return block;
}

std::vector<Block> Ledger::advance_to(Seconds t) {
    std::vector<Block> out;
    while (next_block_time() <= t) out.push_back(produce_block(next_block_time()));
    return out;
}

Receipt Ledger::wait_for(TxHandle handle) {
    for (;;) {
        if (auto r = receipt(handle)) return *r;
        produce_block(next_block_time());
    }
}

Seconds Ledger::head_time() const {
    std::shared_lock lock(mutex_);
    return chain_.back().timestamp;
}

Seconds Ledger::next_block_time() const {
    std::shared_lock lock(mutex_);
    return chain_.back().timestamp + config_.latency.block_interval;
}

std::size_t Ledger::pending_count() const {
    std::shared_lock lock(mutex_);
    return pending_.size();
}

bool Ledger::all_resolved() const {
    std::shared_lock lock(mutex_);
    if (!pending_.empty()) return false;
    if (!last_inclusion_) return true;
    const Seconds resolved = chain_[*last_inclusion_].timestamp +
                             config_.latency.block_interval * (config_.latency.confirmations - 1);
    return chain_.back().timestamp >= resolved;
}

Bytes Ledger::call(const Address& caller, const contract::EncodedCall& encoded) const {
    const auto call = contract::decode(encoded.function, encoded.args);
    std::shared_lock lock(mutex_);
    return contract::query(contract_, caller, call);
}

std::uint64_t Ledger::subscribe(EventFilter filter, EventCallback callback) {
    std::unique_lock lock(mutex_);
    const auto id = next_subscription_++;
    subscribers_.emplace(id, Subscription{filter, std::move(callback)});
    return id;
}

void Ledger::unsubscribe(std::uint64_t subscription) {
    std::unique_lock lock(mutex_);
    subscribers_.erase(subscription);
}

std::vector<Block> Ledger::blocks() const {
    std::shared_lock lock(mutex_);
    return chain_;
}

std::vector<Event> Ledger::events() const {
    std::shared_lock lock(mutex_);
    return events_;
}

Digest Ledger::state_digest() const {
    std::shared_lock lock(mutex_);
    return contract::state_digest(contract_);
}

std::optional<contract::ContractState> Ledger::contract_state() const {
    std::shared_lock lock(mutex_);
    if (!contract_) return std::nullopt;
    return contract_->state();
}

std::uint64_t Ledger::total_gas() const {
    std::shared_lock lock(mutex_);
    return gas_total_;
}

std::unique_ptr<Ledger> Ledger::replay(const std::vector<Block>& blocks, LedgerConfig config) {
    if (blocks.empty()) throw Error(ErrorCode::ReplayDivergence, "no genesis block");
    config.genesis_time = blocks.front().timestamp;
    auto ledger = std::make_unique<Ledger>(std::move(config));
    if (ledger->blocks().front() != blocks.front()) throw Error(ErrorCode::ReplayDivergence, "genesis mismatch");

    for (std::size_t i = 1; i < blocks.size(); ++i) {
        const auto& recorded = blocks[i];
        for (const auto& tx : recorded.transactions) {
            ledger->create_account(tx.sender);
            ledger->submit(tx.sender, {tx.function, tx.args}, tx.submitted_at);
        }
        const Block produced = ledger->produce_block(recorded.timestamp);
        if (produced != recorded) {
            throw Error(ErrorCode::ReplayDivergence, "block " + std::to_string(recorded.index) + " differs on replay");
        }
    }
    return ledger;
}

bool verify_chain(const std::vector<Block>& blocks) {
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& b = blocks[i];
        if (b.index != i || b.compute_digest() != b.digest) return false;
        if (i == 0) {
            if (b.parent_digest != Digest{}) return false;
        } else if (b.parent_digest != blocks[i - 1].digest || b.timestamp <= blocks[i - 1].timestamp) {
            return false;
        }
    }
    return true;
}

// ---- files ------------------------------------------------------------------------

namespace {

void write_record(std::ofstream& out, const Block& block) {
    const Bytes body = block.serialize();
    codec::Writer w;
    w.u32(static_cast<std::uint32_t>(body.size())).raw(body);
    out.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
}

}  // namespace

void write_ledger_file(const std::filesystem::path& path, const std::vector<Block>& blocks) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
    for (const auto& b : blocks) write_record(out, b);
    if (!out) throw Error(ErrorCode::InvalidArgument, "write failed: " + path.string());
}

void append_ledger_record(const std::filesystem::path& path, const Block& block) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
    write_record(out, block);
    if (!out) throw Error(ErrorCode::InvalidArgument, "write failed: " + path.string());
}

std::vector<Block> read_ledger_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
    const Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    codec::Reader r(data);
    std::vector<Block> blocks;
    while (!r.done()) {
        const auto len = r.u32();
        blocks.push_back(Block::deserialize(r.raw(len)));
    }
    return blocks;
}

nlohmann::json to_json(const Transaction& tx) {
    return {
        {"sender", tx.sender.to_hex()},
        {"function", tx.function},
        {"args", to_hex(tx.args)},
        {"submittedAt", tx.submitted_at.count()},
        {"gasUsed", tx.gas_used},
        {"status", to_string(tx.status)},
    };
}

nlohmann::json to_json(const Block& block) {
    nlohmann::json txs = nlohmann::json::array();
    for (const auto& tx : block.transactions) txs.push_back(to_json(tx));
    return {
        {"index", block.index},
        {"timestamp", block.timestamp.count()},
        {"parentDigest", to_hex(as_view(block.parent_digest))},
        {"digest", to_hex(as_view(block.digest))},
        {"transactions", std::move(txs)},
    };
}

nlohmann::json ledger_to_json(const std::vector<Block>& blocks) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& b : blocks) out.push_back(to_json(b));
    return {{"blocks", std::move(out)}};
}

nlohmann::json to_json(const Event& e) {
    return {
        {"name", contract::to_string(e.name)},
        {"device", e.device.to_hex()},
        {"payload", to_hex(e.payload)},
        {"blockIndex", e.block_index},
        {"blockTime", e.block_time.count()},
        {"tx", e.tx.id},
    };
}

}  // namespace biot::ledger
