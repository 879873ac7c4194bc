#include "biot/merkle.hpp"

namespace biot::anchoring {

namespace {

constexpr std::uint8_t kLeafPrefix = 0x00;
constexpr std::uint8_t kNodePrefix = 0x01;

}  // namespace

Digest leaf_digest(ByteView payload) { return sha256({ByteView{&kLeafPrefix, 1}, payload}); }

Digest node_digest(const Digest& left, const Digest& right) {
    return sha256({ByteView{&kNodePrefix, 1}, as_view(left), as_view(right)});
}

MerkleTree::MerkleTree(std::vector<Digest> leaves) {
    if (leaves.empty()) throw Error(ErrorCode::EmptyWindow, "cannot build a tree without leaves");
    levels_.push_back(std::move(leaves));
    while (levels_.back().size() > 1) {
        const auto& below = levels_.back();
        std::vector<Digest> above;
        above.reserve((below.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < below.size(); i += 2) above.push_back(node_digest(below[i], below[i + 1]));
        if (below.size() % 2 == 1) above.push_back(below.back());
        levels_.push_back(std::move(above));
    }
}

InclusionProof MerkleTree::prove(std::size_t leaf_index, std::uint64_t window_id) const {
    if (leaf_index >= leaf_count()) {
        throw Error(ErrorCode::IndexOutOfRange,
                    "leaf " + std::to_string(leaf_index) + " of " + std::to_string(leaf_count()));
    }
    InclusionProof proof{leaf_index, {}, window_id};
    std::size_t pos = leaf_index;
    for (std::size_t level = 0; level + 1 < levels_.size(); ++level) {
        const auto& nodes = levels_[level];
        if (pos % 2 == 1) {
            proof.siblings.push_back({nodes[pos - 1], Side::Left});
        } else if (pos + 1 < nodes.size()) {
            proof.siblings.push_back({nodes[pos + 1], Side::Right});
        }  // else: promoted, no sibling at this level
        pos /= 2;
    }
    return proof;
}

MerkleTree build_tree(std::vector<Digest> leaves) { return MerkleTree(std::move(leaves)); }

Digest fold_proof(const Digest& start, const InclusionProof& proof) {
    Digest acc = start;
    for (const auto& step : proof.siblings) {
        acc = step.side == Side::Left ? node_digest(step.sibling, acc) : node_digest(acc, step.sibling);
    }
    return acc;
}

bool verify_inclusion(const Digest& root, ByteView payload, const InclusionProof& proof) {
    return fold_proof(leaf_digest(payload), proof) == root;
}

bool verify_digest_inclusion(const Digest& root, const Digest& leaf, const InclusionProof& proof) {
    return fold_proof(leaf, proof) == root;
}

Digest aggregate_roots(std::span<const Digest> roots) {
    return MerkleTree(std::vector<Digest>(roots.begin(), roots.end())).root();
}

nlohmann::json to_json(const InclusionProof& proof) {
    nlohmann::json siblings = nlohmann::json::array();
    for (const auto& s : proof.siblings) {
        siblings.push_back({{"digest", to_hex(as_view(s.sibling))}, {"side", s.side == Side::Left ? "left" : "right"}});
    }
    return {{"leafIndex", proof.leaf_index}, {"windowId", proof.window_id}, {"siblings", std::move(siblings)}};
}

InclusionProof proof_from_json(const nlohmann::json& j) {
    try {
        InclusionProof proof;
        proof.leaf_index = j.at("leafIndex").get<std::uint64_t>();
        proof.window_id = j.at("windowId").get<std::uint64_t>();
        for (const auto& s : j.at("siblings")) {
            const auto side = s.at("side").get<std::string>();
            if (side != "left" && side != "right") throw Error(ErrorCode::MalformedProof, "bad side '" + side + "'");
            proof.siblings.push_back({digest_from_hex(s.at("digest").get<std::string>()),
                                      side == "left" ? Side::Left : Side::Right});
        }
        return proof;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedProof, e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::MalformedProof) throw;
        throw Error(ErrorCode::MalformedProof, e.what());
    }
}

}  // namespace biot::anchoring
