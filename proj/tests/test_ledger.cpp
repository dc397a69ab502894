#include <gtest/gtest.h>

#include "civic/consortium.hpp"
#include "civic/ledger.hpp"
#include "support.hpp"

using namespace civic;

namespace {

Digest leaf(std::uint8_t i)
{
    const Bytes b{i};
    return sha256(b);
}

Errc failure(const Block& parent, const Block& b, const ValidatorSet& v)
{
    try {
        check_successor(parent, b, v);
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::Malformed;
}

} // namespace

TEST(Ledger, EmptyHeaderOracle)
{
    const BlockHeader h;
    const Bytes enc = canonical_encode(h);
    EXPECT_EQ(enc.size(), 92u);
    EXPECT_EQ(to_hex(hash_block(h)), "5f91d63f5e8133c0192472c51c1b636da86cc7ad68c432cc289f945ab7ba3569");
    EXPECT_EQ(decode_header(enc), h);

    Seed seed{};
    for (std::size_t i = 0; i < seed.size(); ++i)
        seed[i] = static_cast<std::uint8_t>(i);
    EXPECT_EQ(to_hex(KeyPair::from_seed(seed).sign(enc)),
              "de433f78bc5286d460e692b02b9e20ac8d5b1c0a0e1551c82e440e8bd7e82c96af9f08b129145eb086c8f8693572b5ac"
              "1be690ba7c7428305545f752c2f4060c");
}

TEST(Ledger, MerkleOracles)
{
    EXPECT_EQ(merkle_root({}), zero_digest);
    const std::vector<Digest> one{leaf(0)};
    EXPECT_EQ(to_hex(merkle_root(one)), "b289dea92ca5aba5f2e1891a1af11be27914c48854db0fe5b4bb95c137e0f2d6");
    const std::vector<Digest> three{leaf(0), leaf(1), leaf(2)};
    EXPECT_EQ(to_hex(merkle_root(three)), "f2dcdd96791b6bac5d554f2d320e594b834f5da1981812c3707e7772234cb0ad");
    const std::vector<Digest> four{leaf(0), leaf(1), leaf(2), leaf(3)};
    EXPECT_EQ(to_hex(merkle_root(four)), "9675e04b4ba9dc81b06e81731e2d21caa2c95557a85dcfa3fff70c9ff0f30b2e");
    auto swapped = four;
    std::swap(swapped[0], swapped[1]);
    EXPECT_NE(merkle_root(swapped), merkle_root(four));
}

TEST(Ledger, TransactionSigning)
{
    const KeyPair k = KeyPair::derive("author");
    Transaction tx = sign_transaction(TxKind::DocumentIssued, Bytes{1, 2, 3}, k, 5);
    EXPECT_TRUE(tx.signature_valid());
    EXPECT_EQ(tx.id(), sha256(canonical_encode(tx)));
    EXPECT_TRUE(verify_signature(k.public_key(), tx.id(), tx.signature));

    const Transaction back = Transaction::decode(tx.encode_signed());
    EXPECT_EQ(back.id(), tx.id());
    EXPECT_EQ(back.signature, tx.signature);

    Transaction t2 = tx;
    t2.nonce = 6;
    EXPECT_FALSE(t2.signature_valid());
    t2 = tx;
    t2.payload[0] ^= 1;
    EXPECT_FALSE(t2.signature_valid());
}

TEST(Ledger, KindNames)
{
    for (int k = 1; k <= 9; ++k) {
        const auto kind = static_cast<TxKind>(k);
        EXPECT_EQ(parse_kind(kind_name(kind)), kind);
    }
    EXPECT_FALSE(parse_kind("Bogus").has_value());
}

TEST(Ledger, GenesisFollowsConsortium)
{
    auto c = test::housing_consortium();
    const Block g = make_genesis(*c);
    EXPECT_EQ(g.header.height, 0u);
    EXPECT_EQ(g.header.parent_hash, zero_digest);
    EXPECT_EQ(g.header.timestamp, c->genesis_timestamp);
    EXPECT_EQ(g.block_hash, hash_block(g.header));
    EXPECT_EQ(make_genesis(*c).block_hash, g.block_hash);

    Consortium other = *c;
    other.genesis_timestamp += 1;
    EXPECT_NE(make_genesis(other).block_hash, g.block_hash);

    Consortium empty = *c;
    empty.validators = ValidatorSet{};
    try {
        make_genesis(empty);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyValidatorSet);
    }
}

TEST(Ledger, BlockEncodeRoundTrip)
{
    auto c = test::housing_consortium();
    const Block g = make_genesis(*c);
    const auto tx = sign_transaction(TxKind::DocumentIssued, Bytes{9}, KeyPair::derive("a"), 1);
    const Block b = test::next_block(g, {tx}, c->validators, 3);
    const Block back = Block::decode(b.encode());
    EXPECT_EQ(back.encode(), b.encode());
    EXPECT_EQ(back.block_hash, b.block_hash);
    EXPECT_EQ(back.commit_votes.size(), 3u);
    Bytes trunc = b.encode();
    trunc.pop_back();
    EXPECT_THROW(Block::decode(trunc), Error);
}

TEST(Ledger, SuccessorChecks)
{
    auto c = test::housing_consortium();
    const auto& v = c->validators;
    const Block g = make_genesis(*c);
    const auto tx = sign_transaction(TxKind::DocumentIssued, Bytes{9}, KeyPair::derive("a"), 1);
    const Block good = test::next_block(g, {tx}, v, 3);
    EXPECT_NO_THROW(check_successor(g, good, v));

    Block b = good;
    b.header.height = 2;
    b.block_hash = hash_block(b.header);
    EXPECT_EQ(failure(g, b, v), Errc::BadHeight);

    b = good;
    b.header.parent_hash[0] ^= 1;
    b.block_hash = hash_block(b.header);
    EXPECT_EQ(failure(g, b, v), Errc::ParentMismatch);

    b = good;
    b.header.timestamp = g.header.timestamp;
    b.block_hash = hash_block(b.header);
    EXPECT_EQ(failure(g, b, v), Errc::BadTimestamp);

    b = good;
    b.block_hash[3] ^= 1;
    EXPECT_EQ(failure(g, b, v), Errc::BadBlockHash);

    b = good;
    b.transactions[0].payload[0] ^= 1;
    EXPECT_EQ(failure(g, b, v), Errc::BadTxRoot);

    EXPECT_EQ(failure(g, test::next_block(g, {tx}, v, 2), v), Errc::InsufficientVotes);
    EXPECT_EQ(failure(g, test::next_block(g, {tx}, v, 0), v), Errc::InsufficientVotes);

    b = good;
    b.commit_votes[1].signature[0] ^= 1;
    EXPECT_NE(failure(g, b, v), Errc::Malformed);

    b = good;
    b.commit_votes[2].validator = "stranger";
    EXPECT_EQ(failure(g, b, v), Errc::UnknownVoter);

    b = good;
    b.commit_votes.push_back(b.commit_votes[0]);
    b.commit_votes.erase(b.commit_votes.begin() + 1);
    EXPECT_EQ(failure(g, b, v), Errc::InsufficientVotes);

    Transaction forged = tx;
    forged.signature[0] ^= 1;
    EXPECT_EQ(failure(g, test::next_block(g, {forged}, v, 3), v), Errc::BadSignature);
}

TEST(Ledger, ValidateChain)
{
    auto c = test::housing_consortium();
    std::vector<Block> chain{make_genesis(*c)};
    for (int i = 0; i < 5; ++i) {
        const auto tx = sign_transaction(TxKind::DocumentIssued, Bytes{static_cast<std::uint8_t>(i)},
                                         KeyPair::derive("a"), i + 1);
        chain.push_back(test::next_block(chain.back(), {tx}, c->validators, 4));
    }
    const auto ok = validate_chain(chain, *c);
    EXPECT_TRUE(ok.valid);
    EXPECT_EQ(ok.height, 5u);

    auto bad = chain;
    bad[3].transactions[0].payload[0] ^= 1;
    const auto st = validate_chain(bad, *c);
    EXPECT_FALSE(st.valid);
    EXPECT_EQ(st.height, 3u);
    EXPECT_EQ(st.reason, Errc::BadTxRoot);

    bad = chain;
    bad[0].header.timestamp += 1;
    bad[0].block_hash = hash_block(bad[0].header);
    EXPECT_EQ(validate_chain(bad, *c).reason, Errc::BadGenesis);
    EXPECT_FALSE(validate_chain(std::vector<Block>{}, *c).valid);
}
