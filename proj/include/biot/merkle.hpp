#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "biot/common.hpp"
#include "json.hpp"

namespace biot::anchoring {

// Domain-separated hashing: leaves are H(0x00 || payload), internal nodes
// H(0x01 || left || right).
Digest leaf_digest(ByteView payload);
Digest node_digest(const Digest& left, const Digest& right);

// Which side of the running hash the sibling sits on.
enum class Side : std::uint8_t { Left, Right };

struct ProofStep {
    Digest sibling{};
    Side side = Side::Right;

    bool operator==(const ProofStep&) const = default;
};

struct InclusionProof {
    std::uint64_t leaf_index = 0;
    std::vector<ProofStep> siblings;
    std::uint64_t window_id = 0;

    bool operator==(const InclusionProof&) const = default;
};

/// Binary Merkle tree over precomputed leaf digests. An unpaired node at the
/// end of a level is promoted unchanged to the next level.
class MerkleTree {
  public:
    // Throws Error(EmptyWindow) for an empty leaf list.
    explicit MerkleTree(std::vector<Digest> leaves);

    [[nodiscard]] const Digest& root() const noexcept { return levels_.back().front(); }
    [[nodiscard]] std::size_t leaf_count() const noexcept { return levels_.front().size(); }
    [[nodiscard]] const std::vector<Digest>& leaves() const noexcept { return levels_.front(); }
    // levels()[0] are the leaves, levels().back() holds only the root.
    [[nodiscard]] const std::vector<std::vector<Digest>>& levels() const noexcept { return levels_; }

    // Throws Error(IndexOutOfRange).
    [[nodiscard]] InclusionProof prove(std::size_t leaf_index, std::uint64_t window_id = 0) const;

  private:
    std::vector<std::vector<Digest>> levels_;
};

MerkleTree build_tree(std::vector<Digest> leaves);

// Folds a starting digest through the proof's siblings.
Digest fold_proof(const Digest& start, const InclusionProof& proof);

// True iff folding leaf_digest(payload) through the proof reproduces root.
bool verify_inclusion(const Digest& root, ByteView payload, const InclusionProof& proof);
// Same, for a leaf that is already a digest (e.g. a window root inside a meta-tree).
bool verify_digest_inclusion(const Digest& root, const Digest& leaf, const InclusionProof& proof);

// Root of a second-level tree whose leaves are window roots. A single root
// aggregates to itself. Throws Error(EmptyWindow) for an empty list.
Digest aggregate_roots(std::span<const Digest> roots);

nlohmann::json to_json(const InclusionProof& proof);
// Throws Error(MalformedProof).
InclusionProof proof_from_json(const nlohmann::json& j);

}  // namespace biot::anchoring
