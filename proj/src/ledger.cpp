#include "civic/ledger.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "civic/block_store.hpp"
#include "civic/consensus.hpp"
#include "civic/consortium.hpp"

namespace civic {

std::string_view kind_name(TxKind kind)
{
    switch (kind) {
    case TxKind::DocumentIssued: return "DocumentIssued";
    case TxKind::ServiceRegistered: return "ServiceRegistered";
    case TxKind::RequestInitiated: return "RequestInitiated";
    case TxKind::ConsentGranted: return "ConsentGranted";
    case TxKind::AccessGranted: return "AccessGranted";
    case TxKind::DocumentCollected: return "DocumentCollected";
    case TxKind::RequestCompleted: return "RequestCompleted";
    case TxKind::EKeyIssued: return "EKeyIssued";
    case TxKind::EKeyRevoked: return "EKeyRevoked";
    }
    return "Unknown";
}

std::optional<TxKind> parse_kind(std::string_view name)
{
    for (int k = 1; k <= 9; ++k) {
        const auto kind = static_cast<TxKind>(k);
        if (kind_name(kind) == name)
            return kind;
    }
    return std::nullopt;
}

Bytes canonical_encode(const Transaction& tx)
{
    Encoder e;
    e.u8(static_cast<std::uint8_t>(tx.kind)).bytes(tx.payload).bytes(tx.author).u64(tx.nonce);
    return std::move(e).take();
}

Digest Transaction::id() const
{
    return sha256(canonical_encode(*this));
}

bool Transaction::signature_valid() const
{
    const Digest tx_id = id();
    return verify_signature(author, tx_id, signature);
}

Bytes Transaction::encode_signed() const
{
    Encoder e;
    e.u8(static_cast<std::uint8_t>(kind)).bytes(payload).bytes(author).u64(nonce).bytes(signature);
    return std::move(e).take();
}

Transaction Transaction::decode(ByteView in)
{
    Decoder d(in);
    Transaction tx;
    const auto k = d.u8();
    if (k < 1 || k > 9)
        throw Error(Errc::Malformed, "unknown transaction kind " + std::to_string(k));
    tx.kind = static_cast<TxKind>(k);
    tx.payload = d.bytes();
    tx.author = d.fixed<32>();
    tx.nonce = d.u64();
    tx.signature = d.bytes();
    d.expect_done();
    return tx;
}

Transaction sign_transaction(TxKind kind, Bytes payload, const KeyPair& author, std::uint64_t nonce)
{
    Transaction tx;
    tx.kind = kind;
    tx.payload = std::move(payload);
    tx.author = author.public_key();
    tx.nonce = nonce;
    const Digest tx_id = tx.id();
    tx.signature = author.sign(tx_id);
    return tx;
}

Bytes canonical_encode(const BlockHeader& header)
{
    Encoder e;
    e.u64(header.height).bytes(header.parent_hash).bytes(header.tx_root).u64(header.timestamp).str(header.proposer);
    return std::move(e).take();
}

BlockHeader decode_header(ByteView in)
{
    Decoder d(in);
    BlockHeader h;
    h.height = d.u64();
    h.parent_hash = d.fixed<32>();
    h.tx_root = d.fixed<32>();
    h.timestamp = d.u64();
    h.proposer = d.str();
    d.expect_done();
    return h;
}

Digest hash_block(const BlockHeader& header)
{
    return sha256(canonical_encode(header));
}

Digest merkle_root(std::span<const Digest> tx_ids)
{
    if (tx_ids.empty())
        return zero_digest;
    std::vector<Digest> level(tx_ids.begin(), tx_ids.end());
    do {
        std::vector<Digest> next;
        next.reserve((level.size() + 1) / 2);
        for (std::size_t i = 0; i < level.size(); i += 2) {
            const Digest& left = level[i];
            const Digest& right = i + 1 < level.size() ? level[i + 1] : level[i];
            next.push_back(sha256_pair(left, right));
        }
        level = std::move(next);
    } while (level.size() > 1);
    return level.front();
}

Bytes vote_signing_bytes(const Digest& block_hash, std::uint64_t height, std::uint64_t round)
{
    Encoder e;
    e.bytes(block_hash).u64(height).u64(round);
    return std::move(e).take();
}

std::vector<Digest> Block::tx_ids() const
{
    std::vector<Digest> ids;
    ids.reserve(transactions.size());
    for (const auto& tx : transactions)
        ids.push_back(tx.id());
    return ids;
}

Bytes Block::encode() const
{
    Encoder e;
    e.bytes(canonical_encode(header)).count(transactions.size());
    for (const auto& tx : transactions)
        e.bytes(tx.encode_signed());
    e.bytes(block_hash).count(commit_votes.size());
    for (const auto& v : commit_votes)
        e.str(v.validator).u64(v.round).bytes(v.signature);
    return std::move(e).take();
}

Block Block::decode(ByteView in)
{
    Decoder d(in);
    Block b;
    b.header = decode_header(d.bytes());
    b.transactions.resize(d.count(1u << 16));
    for (auto& tx : b.transactions)
        tx = Transaction::decode(d.bytes());
    b.block_hash = d.fixed<32>();
    b.commit_votes.resize(d.count(1024));
    for (auto& v : b.commit_votes) {
        v.validator = d.str();
        v.round = d.u64();
        v.signature = d.bytes();
    }
    d.expect_done();
    return b;
}

ValidatorSet::ValidatorSet(std::vector<ValidatorInfo> validators, std::uint64_t epoch)
    : validators_(std::move(validators)), epoch_(epoch)
{
    std::sort(validators_.begin(), validators_.end(),
              [](const ValidatorInfo& a, const ValidatorInfo& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < validators_.size(); ++i)
        if (validators_[i].id == validators_[i - 1].id)
            throw Error(Errc::InvalidConfig, "duplicate validator id " + validators_[i].id);
}

const ValidatorInfo* ValidatorSet::find(std::string_view id) const
{
    auto it = std::lower_bound(validators_.begin(), validators_.end(), id,
                               [](const ValidatorInfo& v, std::string_view key) { return v.id < key; });
    if (it == validators_.end() || it->id != id)
        return nullptr;
    return &*it;
}

Block make_genesis(const Consortium& config)
{
    if (config.validators.empty())
        throw Error(Errc::EmptyValidatorSet, "consortium lists no validators");
    Block genesis;
    genesis.header.height = 0;
    genesis.header.parent_hash = zero_digest;
    genesis.header.timestamp = config.genesis_timestamp;
    genesis.transactions = config.bootstrap;
    const auto ids = genesis.tx_ids();
    genesis.header.tx_root = merkle_root(ids);
    genesis.block_hash = hash_block(genesis.header);
    return genesis;
}

namespace {

void check_votes(const Block& block, const ValidatorSet& validators)
{
    const std::uint64_t needed = consensus::quorum(validators.size());
    if (block.commit_votes.empty())
        throw Error(Errc::InsufficientVotes, "no commit votes");
    const std::uint64_t round = block.commit_votes.front().round;
    std::set<std::string> voters;
    for (const auto& v : block.commit_votes) {
        if (v.round != round)
            throw Error(Errc::InsufficientVotes, "commit votes span several rounds");
        const ValidatorInfo* info = validators.find(v.validator);
        if (!info)
            throw Error(Errc::UnknownVoter, v.validator);
        if (!verify_signature(info->key, vote_signing_bytes(block.block_hash, block.header.height, v.round),
                              v.signature))
            throw Error(Errc::BadVoteSignature, v.validator);
        voters.insert(v.validator);
    }
    if (voters.size() < needed)
        throw Error(Errc::InsufficientVotes,
                    std::to_string(voters.size()) + " distinct votes, quorum is " + std::to_string(needed));
}

void check_body(const Block& block)
{
    if (hash_block(block.header) != block.block_hash)
        throw Error(Errc::BadBlockHash, "height " + std::to_string(block.header.height));
}

void check_transactions(const Block& block)
{
    const auto ids = block.tx_ids();
    if (merkle_root(ids) != block.header.tx_root)
        throw Error(Errc::BadTxRoot, "height " + std::to_string(block.header.height));
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (!verify_signature(block.transactions[i].author, ids[i], block.transactions[i].signature))
            throw Error(Errc::BadSignature, to_hex(ids[i]));
}

} // namespace

void check_successor(const Block& parent, const Block& block, const ValidatorSet& validators, bool require_votes)
{
    check_body(block);
    if (block.header.height != parent.header.height + 1)
        throw Error(Errc::BadHeight, "expected " + std::to_string(parent.header.height + 1) + ", got " +
                                         std::to_string(block.header.height));
    if (block.header.parent_hash != parent.block_hash)
        throw Error(Errc::ParentMismatch, "height " + std::to_string(block.header.height));
    if (block.header.timestamp <= parent.header.timestamp)
        throw Error(Errc::BadTimestamp, "timestamp not after parent");
    check_transactions(block);
    if (require_votes)
        check_votes(block, validators);
}

void append_block(BlockStore& chain, const Block& block, const ValidatorSet& validators)
{
    check_successor(chain.tip(), block, validators);
    chain.append(block);
}

namespace {

ChainStatus validate_range(std::size_t n, const std::function<const Block&(std::size_t)>& at,
                           const Consortium& config)
{
    if (n == 0)
        return {false, 0, Errc::BadGenesis, "empty chain"};
    try {
        const Block& g = at(0);
        check_body(g);
        const Block expected = make_genesis(config);
        if (g.block_hash != expected.block_hash || g.header != expected.header)
            return {false, 0, Errc::BadGenesis, "genesis differs from consortium configuration"};
        check_transactions(g);
        if (!g.commit_votes.empty())
            return {false, 0, Errc::BadGenesis, "genesis carries votes"};
    } catch (const Error& e) {
        return {false, 0, e.code(), e.detail()};
    }
    for (std::size_t h = 1; h < n; ++h) {
        try {
            check_successor(at(h - 1), at(h), config.validators);
        } catch (const Error& e) {
            return {false, h, e.code(), e.detail()};
        }
    }
    return {true, n - 1, Errc::Malformed, ""};
}

} // namespace

ChainStatus validate_chain(std::span<const Block> blocks, const Consortium& config)
{
    return validate_range(blocks.size(), [&](std::size_t i) -> const Block& { return blocks[i]; }, config);
}

ChainStatus validate_chain(const BlockStore& chain, const Consortium& config)
{
    return validate_range(chain.size(), [&](std::size_t i) -> const Block& { return chain.at(i); }, config);
}

} // namespace civic
