#include <gtest/gtest.h>

#include <deque>

#include "civic/block_store.hpp"
#include "civic/consensus.hpp"
#include "support.hpp"

using namespace civic;
using namespace civic::consensus;

namespace {

struct Host;

struct Cluster {
    std::shared_ptr<Consortium> config = test::housing_consortium();
    std::vector<std::unique_ptr<Host>> hosts;
    std::deque<std::pair<std::string, ConsensusMessage>> wire;
    std::set<std::string> down;
    std::uint64_t now = 0;

    Cluster();
    Host& host(const std::string& id);
    void submit(const Transaction& tx);
    void run_until(std::uint64_t t);
};

struct Host : EngineHost {
    Cluster& cluster;
    std::string id;
    BlockStore chain = BlockStore::in_memory();
    std::vector<Transaction> pool;
    std::optional<ConsensusState> saved;
    int timeouts = 0;
    std::unique_ptr<Engine> engine;

    Host(Cluster& c, std::string self) : cluster(c), id(std::move(self))
    {
        chain.append(make_genesis(*c.config));
        engine = std::make_unique<Engine>(*this, c.config->validators, c.config->params, id, sim::org_key(id));
    }

    const Block& tip() const override { return chain.tip(); }
    void check_block(const Block& b) override { check_successor(chain.tip(), b, cluster.config->validators, false); }
    std::optional<Block> build_block(std::uint64_t height, std::uint64_t) override
    {
        if (pool.empty())
            return std::nullopt;
        Block b;
        b.header.height = height;
        b.header.parent_hash = chain.tip().block_hash;
        b.header.timestamp = std::max(cluster.now, chain.tip().header.timestamp + 1);
        b.header.proposer = id;
        b.transactions = pool;
        const auto ids = b.tx_ids();
        b.header.tx_root = merkle_root(ids);
        b.block_hash = hash_block(b.header);
        return b;
    }
    std::size_t pending() const override { return pool.size(); }
    void broadcast(const ConsensusMessage& m) override { cluster.wire.emplace_back(id, m); }
    void persist(const ConsensusState& s) override { saved = s; }
    void commit(const Block& b) override
    {
        append_block(chain, b, cluster.config->validators);
        std::erase_if(pool, [&](const Transaction& t) {
            return std::any_of(b.transactions.begin(), b.transactions.end(),
                               [&](const Transaction& x) { return x.id() == t.id(); });
        });
    }
    void round_timeout(std::uint64_t, std::uint64_t) override { timeouts++; }
};

Cluster::Cluster()
{
    for (const auto& v : config->validators.validators())
        hosts.push_back(std::make_unique<Host>(*this, v.id));
    for (auto& h : hosts)
        h->engine->start(now, std::nullopt);
}

Host& Cluster::host(const std::string& id)
{
    for (auto& h : hosts)
        if (h->id == id)
            return *h;
    throw std::out_of_range(id);
}

void Cluster::submit(const Transaction& tx)
{
    for (auto& h : hosts) {
        if (down.count(h->id))
            continue;
        h->pool.push_back(tx);
        h->engine->work_arrived(now);
    }
}

void Cluster::run_until(std::uint64_t t)
{
    while (true) {
        while (!wire.empty()) {
            auto [from, msg] = std::move(wire.front());
            wire.pop_front();
            if (down.count(from))
                continue;
            for (auto& h : hosts)
                if (h->id != from && !down.count(h->id))
                    h->engine->handle(msg, now);
        }
        std::optional<std::uint64_t> next;
        for (auto& h : hosts) {
            if (down.count(h->id))
                continue;
            const auto d = h->engine->next_deadline();
            if (d && (!next || *d < *next))
                next = d;
        }
        if (!next || *next > t)
            break;
        now = std::max(now, *next);
        for (auto& h : hosts)
            if (!down.count(h->id))
                h->engine->tick(now);
    }
    now = std::max(now, t);
}

Transaction sample_tx(std::uint64_t nonce)
{
    return sign_transaction(TxKind::DocumentIssued, Bytes{static_cast<std::uint8_t>(nonce)}, KeyPair::derive("t"),
                            nonce);
}

} // namespace

TEST(Consensus, Quorum)
{
    EXPECT_EQ(quorum(1), 1u);
    EXPECT_EQ(quorum(3), 3u);
    EXPECT_EQ(quorum(4), 3u);
    EXPECT_EQ(quorum(6), 5u);
    EXPECT_EQ(quorum(7), 5u);
}

TEST(Consensus, ProposerRotation)
{
    auto c = test::housing_consortium();
    const auto& v = c->validators;
    ASSERT_EQ(v.size(), 4u);
    EXPECT_EQ(v.at(0).id, "cio");
    EXPECT_EQ(v.at(1).id, "civil");
    EXPECT_EQ(v.at(2).id, "egov");
    EXPECT_EQ(v.at(3).id, "housing");
    EXPECT_EQ(proposer_for(v, 1, 0).id, "civil");
    EXPECT_EQ(proposer_for(v, 1, 1).id, "egov");
    EXPECT_EQ(proposer_for(v, 2, 0).id, "egov");
    EXPECT_EQ(proposer_for(v, 3, 2).id, "civil");
}

TEST(Consensus, VoteVerification)
{
    auto c = test::housing_consortium();
    Digest h{};
    h[0] = 1;
    Vote v = make_vote("cio", sim::org_key("cio"), h, 4, 1);
    EXPECT_TRUE(v.verify(c->validators));
    EXPECT_TRUE(verify_signature(sim::org_key("cio").public_key(), vote_signing_bytes(h, 4, 1), v.signature));
    Vote wrong = v;
    wrong.round = 2;
    EXPECT_FALSE(wrong.verify(c->validators));
    Vote impostor = make_vote("cio", sim::org_key("civil"), h, 4, 1);
    EXPECT_FALSE(impostor.verify(c->validators));
    Vote stranger = make_vote("benefit", sim::org_key("benefit"), h, 4, 1);
    EXPECT_FALSE(stranger.verify(c->validators));
}

TEST(Consensus, JustificationAndRequiredBlock)
{
    auto c = test::housing_consortium();
    const Block g = make_genesis(*c);
    const Block b1 = test::next_block(g, {sample_tx(1)}, c->validators, 0);
    const Block b2 = test::next_block(g, {sample_tx(2)}, c->validators, 0);

    std::vector<RoundChange> rcs{
        make_round_change("cio", sim::org_key("cio"), 1, 2, std::nullopt, 0),
        make_round_change("civil", sim::org_key("civil"), 1, 2, b1, 0),
        make_round_change("egov", sim::org_key("egov"), 1, 2, b2, 1),
    };
    EXPECT_NO_THROW(check_justification(rcs, c->validators, 1, 2));
    ASSERT_TRUE(required_block(rcs).has_value());
    EXPECT_EQ(required_block(rcs)->block_hash, b2.block_hash);
    EXPECT_FALSE(required_block({rcs[0]}).has_value());

    auto two = rcs;
    two.pop_back();
    EXPECT_THROW(check_justification(two, c->validators, 1, 2), Error);
    auto dup = rcs;
    dup[2] = dup[1];
    EXPECT_THROW(check_justification(dup, c->validators, 1, 2), Error);
    EXPECT_THROW(check_justification(rcs, c->validators, 1, 3), Error);
    auto forged = rcs;
    forged[0].signature[0] ^= 1;
    EXPECT_THROW(check_justification(forged, c->validators, 1, 2), Error);
}

TEST(Consensus, StateRoundTrip)
{
    auto c = test::housing_consortium();
    ConsensusState s;
    s.height = 7;
    s.round = 3;
    s.voted_round = 2;
    s.locked_block = test::next_block(make_genesis(*c), {sample_tx(1)}, c->validators, 0);
    s.locked_round = 2;
    const ConsensusState back = ConsensusState::decode(s.encode());
    EXPECT_EQ(back.height, 7u);
    EXPECT_EQ(back.round, 3u);
    EXPECT_EQ(back.voted_round, std::optional<std::uint64_t>(2));
    ASSERT_TRUE(back.locked_block.has_value());
    EXPECT_EQ(back.locked_block->block_hash, s.locked_block->block_hash);
    EXPECT_EQ(back.encode(), s.encode());
}

TEST(Consensus, FourValidatorsCommit)
{
    Cluster c;
    c.submit(sample_tx(1));
    c.run_until(5000);
    for (auto& h : c.hosts) {
        ASSERT_EQ(h->chain.height(), 1u) << h->id;
        EXPECT_EQ(h->chain.tip().block_hash, c.hosts[0]->chain.tip().block_hash);
        EXPECT_GE(h->chain.tip().commit_votes.size(), 3u);
        EXPECT_EQ(h->chain.tip().header.proposer, "civil");
    }
    c.submit(sample_tx(2));
    c.run_until(10000);
    for (auto& h : c.hosts) {
        EXPECT_EQ(h->chain.height(), 2u);
        EXPECT_TRUE(validate_chain(h->chain, *c.config).valid);
    }
}

TEST(Consensus, SilentProposerTriggersRoundChange)
{
    Cluster c;
    c.down.insert("civil");
    c.submit(sample_tx(1));
    c.run_until(20000);
    for (auto& h : c.hosts) {
        if (h->id == "civil")
            continue;
        ASSERT_EQ(h->chain.height(), 1u) << h->id;
        EXPECT_EQ(h->chain.tip().header.proposer, "egov");
        EXPECT_EQ(h->chain.tip().commit_votes.front().round, 1u);
        EXPECT_GE(h->timeouts, 1);
    }
}

TEST(Consensus, NoQuorumNoCommit)
{
    Cluster c;
    c.down = {"cio", "civil"};
    c.submit(sample_tx(1));
    c.run_until(60000);
    for (auto& h : c.hosts)
        EXPECT_EQ(h->chain.height(), 0u) << h->id;
    EXPECT_GE(c.host("egov").timeouts, 2);
}

TEST(Consensus, RestoredStateDoesNotRevote)
{
    Cluster c;
    c.submit(sample_tx(1));
    c.run_until(5000);
    auto& h = c.host("egov");
    ASSERT_TRUE(h.saved.has_value());
    EXPECT_EQ(h.saved->height, 2u);
    EXPECT_FALSE(h.saved->voted_round.has_value());
}
