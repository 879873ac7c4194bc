#include "biot/anchoring.hpp"

#include <fstream>
#include <sstream>

namespace biot::anchoring {

// ---- off-chain store ------------------------------------------------------------

namespace {

std::string record_line(const OffchainRecord& r) {
    std::ostringstream line;
    line << "R " << to_hex(r.device.view()) << ' ' << r.sequence << ' '
         << (r.payload.empty() ? std::string("-") : to_hex(r.payload)) << ' ' << to_hex(as_view(r.digest));
    return line.str();
}

std::string window_line(const DeviceId& device, std::uint64_t seq, std::uint64_t window, std::uint64_t leaf) {
    std::ostringstream line;
    line << "W " << to_hex(device.view()) << ' ' << seq << ' ' << window << ' ' << leaf;
    return line.str();
}

}  // namespace

OffchainStore::OffchainStore(std::filesystem::path file) {
    if (std::filesystem::exists(file)) {
        for (auto& r : load(file)) {
            by_device_[r.device].push_back(std::move(r));
            ++count_;
        }
    }
    std::ofstream probe(file, std::ios::app);
    if (!probe) throw Error(ErrorCode::StoreUnavailable, "cannot open " + file.string());
    file_ = std::move(file);
}

void OffchainStore::append_line(const std::string& line) {
    if (!file_) return;
    std::ofstream out(*file_, std::ios::app);
    out << line << '\n';
    if (!out) throw Error(ErrorCode::StoreUnavailable, "write failed: " + file_->string());
}

const OffchainRecord& OffchainStore::put(const DeviceId& device, ByteView payload) {
    if (!available_) throw Error(ErrorCode::StoreUnavailable, "off-chain store is offline");
    auto& records = by_device_[device];
    OffchainRecord r{device, records.size() + 1, Bytes(payload.begin(), payload.end()), sha256(payload), {}, {}};
    append_line(record_line(r));
    records.push_back(std::move(r));
    ++count_;
    return records.back();
}

void OffchainStore::assign_window(const DeviceId& device, std::uint64_t sequence, std::uint64_t window_id,
                                  std::uint64_t leaf_index) {
    auto it = by_device_.find(device);
    if (it == by_device_.end() || sequence == 0 || sequence > it->second.size()) {
        throw Error(ErrorCode::IndexOutOfRange, "no off-chain record " + std::to_string(sequence));
    }
    append_line(window_line(device, sequence, window_id, leaf_index));
    auto& r = it->second[sequence - 1];
    r.window_id = window_id;
    r.leaf_index = leaf_index;
}

const OffchainRecord* OffchainStore::find(const DeviceId& device, std::uint64_t sequence) const {
    auto it = by_device_.find(device);
    if (it == by_device_.end() || sequence == 0 || sequence > it->second.size()) return nullptr;
    return &it->second[sequence - 1];
}

std::vector<OffchainRecord> OffchainStore::records() const {
    std::vector<OffchainRecord> out;
    out.reserve(count_);
    for (const auto& [device, records] : by_device_) out.insert(out.end(), records.begin(), records.end());
    return out;
}

std::vector<OffchainRecord> OffchainStore::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::StoreUnavailable, "cannot open " + file.string());
    std::map<DeviceId, std::vector<OffchainRecord>> by_device;
    std::vector<std::pair<DeviceId, std::uint64_t>> order;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string tag, device_hex;
        std::uint64_t seq = 0;
        fields >> tag >> device_hex >> seq;
        const auto bad = [&] {
            return Error(ErrorCode::MalformedEncoding, file.string() + ":" + std::to_string(line_no));
        };
        if (!fields) throw bad();
        try {
            const auto device = DeviceId::from_hex(device_hex);
            auto& records = by_device[device];
            if (tag == "R") {
                std::string payload_hex, digest_hex;
                fields >> payload_hex >> digest_hex;
                if (!fields || seq != records.size() + 1) throw bad();
                records.push_back({device, seq, payload_hex == "-" ? Bytes{} : from_hex(payload_hex),
                                   digest_from_hex(digest_hex), {}, {}});
                order.emplace_back(device, seq);
            } else if (tag == "W") {
                std::uint64_t window = 0, leaf = 0;
                fields >> window >> leaf;
                if (!fields || seq == 0 || seq > records.size()) throw bad();
                records[seq - 1].window_id = window;
                records[seq - 1].leaf_index = leaf;
            } else {
                throw bad();
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::MalformedEncoding) throw;
            throw bad();
        }
    }
    std::vector<OffchainRecord> out;
    out.reserve(order.size());
    for (const auto& [device, seq] : order) out.push_back(by_device[device][seq - 1]);
    return out;
}

void OffchainStore::write_file(const std::filesystem::path& file, const std::vector<OffchainRecord>& records) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw Error(ErrorCode::StoreUnavailable, "cannot open " + file.string());
    for (const auto& r : records) out << record_line(r) << '\n';
    for (const auto& r : records) {
        if (r.window_id) out << window_line(r.device, r.sequence, *r.window_id, *r.leaf_index) << '\n';
    }
    if (!out) throw Error(ErrorCode::StoreUnavailable, "write failed: " + file.string());
}

// ---- anchorer ---------------------------------------------------------------------

void WindowPolicy::validate() const {
    if (duration.count() <= 0) throw Error(ErrorCode::ConfigInvalid, "window duration must be positive");
    if (max_leaves && *max_leaves == 0) throw Error(ErrorCode::ConfigInvalid, "max_leaves must be positive");
}

Anchorer::Anchorer(ledger::Ledger& ledger, Address sender, DeviceId device, StorageScheme scheme,
                   WindowPolicy policy, OffchainStore& store)
    : ledger_(ledger), sender_(sender), device_(device), scheme_(scheme), policy_(policy), store_(store) {
    policy_.validate();
}

contract::EncodedCall Anchorer::message_call(ByteView message, contract::PayloadKind kind, std::uint64_t tag,
                                             Direction direction) const {
    return direction == Direction::ToDevice ? contract::calls::send_message_to_device(device_, message, kind, tag)
                                            : contract::calls::send_response_from_device(device_, message, kind, tag);
}

ledger::TxHandle Anchorer::anchor_full_on_chain(ByteView payload, Seconds now, Direction direction) {
    const auto limit = ledger_.config().limits.max_payload;
    if (payload.size() > limit) {
        throw Error(ErrorCode::PayloadTooLarge,
                    std::to_string(payload.size()) + " bytes exceeds limit of " + std::to_string(limit));
    }
    return ledger_.submit(sender_, message_call(payload, contract::PayloadKind::Raw, 0, direction), now);
}

std::pair<ledger::TxHandle, OffchainRecord> Anchorer::anchor_digest(ByteView payload, Seconds now,
                                                                    Direction direction) {
    OffchainRecord record = store_.put(device_, payload);
    const auto tx =
        ledger_.submit(sender_, message_call(as_view(record.digest), contract::PayloadKind::Digest, 0, direction), now);
    return {tx, std::move(record)};
}

std::optional<Seconds> Anchorer::window_deadline() const {
    if (!open_) return std::nullopt;
    return open_->opened_at + policy_.duration;
}

std::optional<std::uint64_t> Anchorer::open_window_id() const {
    if (!open_) return std::nullopt;
    return open_->window_id;
}

OffchainRecord Anchorer::append_to_window(ByteView payload, Seconds now) {
    close_if_expired(now);
    const OffchainRecord& stored = store_.put(device_, payload);
    if (!open_) open_ = OpenWindow{next_window_id_, now, {}, {}};
    open_->leaves.push_back(leaf_digest(payload));
    open_->sequences.push_back(stored.sequence);
    const auto sequence = stored.sequence;
    if (policy_.max_leaves && open_->leaves.size() >= *policy_.max_leaves) close_window(now);
    return *store_.find(device_, sequence);
}

bool Anchorer::close_if_expired(Seconds now) {
    if (open_ && now >= open_->opened_at + policy_.duration && !open_->leaves.empty()) {
        close_window(now);
        return true;
    }
    return false;
}

std::pair<MerkleTree, ledger::TxHandle> Anchorer::close_window(Seconds now) {
    if (!open_ || open_->leaves.empty()) throw Error(ErrorCode::EmptyWindow, "no open window with leaves");
    OpenWindow window = std::move(*open_);
    open_.reset();

    MerkleTree tree(std::move(window.leaves));
    const auto tx = ledger_.submit(
        sender_, message_call(as_view(tree.root()), contract::PayloadKind::MerkleRoot, window.window_id,
                              Direction::FromDevice),
        now);
    for (std::size_t i = 0; i < window.sequences.size(); ++i) {
        store_.assign_window(device_, window.sequences[i], window.window_id, i);
    }
    closed_.push_back(ClosedWindow{window.window_id, device_, window.opened_at, now, std::move(window.sequences),
                                   tree, tx});
    ++next_window_id_;
    return {std::move(tree), tx};
}

InclusionProof Anchorer::prove(std::uint64_t sequence) const {
    const auto* record = store_.find(device_, sequence);
    if (!record || !record->window_id) {
        throw Error(ErrorCode::IndexOutOfRange, "record " + std::to_string(sequence) + " is not in a closed window");
    }
    for (const auto& w : closed_) {
        if (w.window_id == *record->window_id) return w.tree.prove(*record->leaf_index, w.window_id);
    }
    throw Error(ErrorCode::IndexOutOfRange, "window " + std::to_string(*record->window_id) + " not held here");
}

}  // namespace biot::anchoring
