#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "civic/bytes.hpp"
#include "civic/crypto.hpp"
#include "civic/error.hpp"

namespace civic {

struct Consortium;
class BlockStore;

enum class TxKind : std::uint8_t {
    DocumentIssued = 1,
    ServiceRegistered = 2,
    RequestInitiated = 3,
    ConsentGranted = 4,
    AccessGranted = 5,
    DocumentCollected = 6,
    RequestCompleted = 7,
    EKeyIssued = 8,
    EKeyRevoked = 9,
};

std::string_view kind_name(TxKind kind);
std::optional<TxKind> parse_kind(std::string_view name);

struct Transaction {
    TxKind kind = TxKind::DocumentIssued;
    Bytes payload;
    PublicKey author{};
    std::uint64_t nonce = 0;
    Bytes signature;

    // tx_id = SHA-256(canonical_encode(tx)); the signature signs the tx_id.
    Digest id() const;
    bool signature_valid() const;

    Bytes encode_signed() const;
    static Transaction decode(ByteView in);
};

Transaction sign_transaction(TxKind kind, Bytes payload, const KeyPair& author, std::uint64_t nonce);

struct BlockHeader {
    std::uint64_t height = 0;
    Digest parent_hash{};
    Digest tx_root{};
    std::uint64_t timestamp = 0;
    std::string proposer;

    bool operator==(const BlockHeader&) const = default;
};

// Canonical byte layouts (see docs/FORMATS.md):
//   Transaction: u8 kind | bytes payload | bytes author | u64 nonce
//   BlockHeader: u64 height | bytes parent_hash | bytes tx_root | u64 timestamp | bytes proposer
Bytes canonical_encode(const Transaction& tx);
Bytes canonical_encode(const BlockHeader& header);
BlockHeader decode_header(ByteView in);

Digest hash_block(const BlockHeader& header);

// Binary Merkle tree over tx ids; an odd node is paired with itself and the
// empty list maps to the zero digest.
Digest merkle_root(std::span<const Digest> tx_ids);

struct CommitVote {
    std::string validator;
    std::uint64_t round = 0;
    Bytes signature;
};

// What a validator signs when voting: bytes block_hash | u64 height | u64 round.
Bytes vote_signing_bytes(const Digest& block_hash, std::uint64_t height, std::uint64_t round);

struct Block {
    BlockHeader header;
    std::vector<Transaction> transactions;
    Digest block_hash{};
    std::vector<CommitVote> commit_votes;

    std::vector<Digest> tx_ids() const;
    Bytes encode() const;
    static Block decode(ByteView in);
};

struct ValidatorInfo {
    std::string id;
    PublicKey key{};
    std::string organization;
};

// Kept sorted by id so proposer rotation is identical on every node.
class ValidatorSet {
public:
    ValidatorSet() = default;
    explicit ValidatorSet(std::vector<ValidatorInfo> validators, std::uint64_t epoch = 0);

    std::size_t size() const { return validators_.size(); }
    bool empty() const { return validators_.empty(); }
    const ValidatorInfo& at(std::size_t i) const { return validators_.at(i); }
    const ValidatorInfo* find(std::string_view id) const;
    const std::vector<ValidatorInfo>& validators() const { return validators_; }
    std::uint64_t epoch() const { return epoch_; }

private:
    std::vector<ValidatorInfo> validators_;
    std::uint64_t epoch_ = 0;
};

Block make_genesis(const Consortium& config);

// Checks `block` as the successor of `parent`: hash, linkage, timestamp order,
// tx root, tx signatures and the commit certificate. Throws Error on the first
// failure.
void check_successor(const Block& parent, const Block& block, const ValidatorSet& validators,
                     bool require_votes = true);

// Appends a block to the store after check_successor passes against the tip.
void append_block(BlockStore& chain, const Block& block, const ValidatorSet& validators);

struct ChainStatus {
    bool valid = true;
    std::uint64_t height = 0; // first bad height when invalid
    Errc reason = Errc::Malformed;
    std::string detail;
};

ChainStatus validate_chain(std::span<const Block> blocks, const Consortium& config);
ChainStatus validate_chain(const BlockStore& chain, const Consortium& config);

} // namespace civic
