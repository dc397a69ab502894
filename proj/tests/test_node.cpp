#include <gtest/gtest.h>

#include <fstream>

#include "civic/node.hpp"
#include "civic/sim.hpp"
#include "civic/wire.hpp"
#include "support.hpp"

using namespace civic;
using namespace civic::sim;

namespace {

struct Net {
    Scenario scenario = housing_scenario();
    std::shared_ptr<Consortium> config = build_consortium(scenario);
    Simulator sim;

    explicit Net(SimOptions o = {}) : sim(config, build_nodes(scenario), std::move(o)) { sim.start(); }

    Transaction ekey(const std::string& citizen, std::uint64_t nonce)
    {
        return identity::issue_ekey(org_key("egov"), citizen, citizen_key(citizen).public_key(), sim.now(),
                                    kMsPerDay, sim.node("egov")->state(), nonce)
            .tx;
    }

    bool committed_everywhere(const Digest& id, std::uint64_t within = 30'000)
    {
        return sim.run_while_not(
            [&] {
                for (const auto& n : sim.node_ids())
                    if (sim.up(n) && !sim.node(n)->state().committed(id))
                        return false;
                return true;
            },
            sim.now() + within);
    }

    registry::IssuedDocument passport(std::uint64_t nonce)
    {
        return registry::issue_document(org_key("civil"), *config, "C-1001", "Passport", as_view("passport"),
                                        sim.now(), kForever, std::nullopt, nonce, sim.node("civil")->disk().store);
    }
};

std::vector<std::pair<std::uint64_t, Digest>> chain(const Simulator& s, const std::string& id)
{
    return s.chain_of(id);
}

} // namespace

TEST(Node, AdmissionOutcomes)
{
    Net net;
    Node* egov = net.sim.node("egov");
    const auto tx = net.ekey("C-1001", 1);

    Transaction forged = tx;
    forged.signature[0] ^= 1;
    EXPECT_EQ(egov->submit(forged).error, Errc::BadSignature);

    const auto not_authority = sign_transaction(TxKind::EKeyIssued, tx.payload, org_key("cio"), 1);
    const auto r0 = egov->submit(not_authority);
    EXPECT_FALSE(r0.accepted);
    EXPECT_EQ(r0.error, Errc::AdmissionFailed);
    EXPECT_EQ(r0.reason, Errc::NotAuthority);

    const auto r1 = egov->submit(tx);
    EXPECT_TRUE(r1.accepted);
    EXPECT_EQ(r1.tx_id, tx.id());
    EXPECT_TRUE(egov->submit(tx).accepted);
    ASSERT_TRUE(net.committed_everywhere(tx.id()));
    EXPECT_EQ(egov->submit(tx).error, Errc::DuplicateTx);

    const auto stale = net.ekey("C-1002", 1);
    const auto r2 = egov->submit(stale);
    EXPECT_EQ(r2.error, Errc::AdmissionFailed);
    EXPECT_EQ(r2.reason, Errc::BadNonce);
    EXPECT_TRUE(egov->submit(net.ekey("C-1002", 5)).accepted);
}

TEST(Node, NonValidatorSubmissionReplicates)
{
    Net net;
    EXPECT_FALSE(net.sim.node("benefit")->is_validator());
    EXPECT_TRUE(net.sim.node("egov")->is_validator());
    const auto tx = net.ekey("C-1001", 1);
    ASSERT_TRUE(net.sim.node("benefit")->submit(tx).accepted);
    ASSERT_TRUE(net.committed_everywhere(tx.id()));
    const auto ref = chain(net.sim, "egov");
    for (const auto& id : net.sim.node_ids())
        EXPECT_EQ(chain(net.sim, id), ref) << id;
    EXPECT_GE(net.sim.node("employer")->chain().height(), 1u);
}

TEST(Node, OrganizationNonces)
{
    Net net;
    Node* egov = net.sim.node("egov");
    const auto r1 = egov->act([&](std::uint64_t n) { return net.ekey("C-1001", n); });
    const auto r2 = egov->act([&](std::uint64_t n) { return net.ekey("C-1002", n); });
    ASSERT_TRUE(r1.accepted);
    ASSERT_TRUE(r2.accepted);
    ASSERT_TRUE(net.committed_everywhere(r2.tx_id));
    EXPECT_TRUE(egov->state().committed(r1.tx_id));
    EXPECT_EQ(egov->state().last_nonce(org_key("egov").public_key()), 2u);
}

TEST(Node, DocumentFetchWithoutGrantIsDenied)
{
    Net net;
    const auto doc = net.passport(1);
    ASSERT_TRUE(net.sim.node("civil")->submit(doc.tx).accepted);
    ASSERT_TRUE(net.committed_everywhere(doc.tx.id()));

    Node* civil = net.sim.node("civil");
    wire::DocFetchRequest req;
    req.ref = 1;
    req.doc_id = doc.record.doc_id;
    req.requester = "housing";
    req.signature = org_key("housing").sign(req.signing_bytes());
    civil->receive(wire::encode({"housing", req}));
    ASSERT_GE(civil->disk().audit.size(), 1u);
    EXPECT_EQ(civil->disk().audit.tail(1)[0].outcome, "NoGrant");

    req.requester = "benefit"; // signed by housing
    civil->receive(wire::encode({"housing", req}));
    EXPECT_EQ(civil->disk().audit.tail(1)[0].outcome, "Unauthenticated");
}

TEST(Node, RestartFromDisk)
{
    const auto root = test::temp_dir("node-restart");
    SimOptions o;
    o.data_root = root;
    Net net(o);
    const auto tx = net.ekey("C-1001", 1);
    ASSERT_TRUE(net.sim.node("egov")->submit(tx).accepted);
    ASSERT_TRUE(net.committed_everywhere(tx.id()));
    const auto before = chain(net.sim, "civil");

    net.sim.crash("civil");
    EXPECT_EQ(net.sim.node("civil"), nullptr);
    const auto tx2 = net.ekey("C-1002", 2);
    ASSERT_TRUE(net.sim.node("egov")->submit(tx2).accepted);
    ASSERT_TRUE(net.committed_everywhere(tx2.id()));

    ASSERT_TRUE(net.sim.restart("civil"));
    const auto after = chain(net.sim, "civil");
    ASSERT_GE(after.size(), before.size());
    EXPECT_TRUE(std::equal(before.begin(), before.end(), after.begin()));
    ASSERT_TRUE(net.committed_everywhere(tx2.id()));
    EXPECT_EQ(chain(net.sim, "civil"), chain(net.sim, "egov"));
}

TEST(Node, CorruptStoreRefusesToStart)
{
    const auto root = test::temp_dir("node-corrupt");
    SimOptions o;
    o.data_root = root;
    Net net(o);
    const auto doc = net.passport(1);
    ASSERT_TRUE(net.sim.node("civil")->submit(doc.tx).accepted);
    ASSERT_TRUE(net.committed_everywhere(doc.tx.id()));
    net.sim.crash("cio");

    const auto file = BlockStore::data_file(root / "cio" / "chain");
    std::fstream f(file, std::ios::binary | std::ios::in | std::ios::out);
    std::string all((std::istreambuf_iterator<char>(f)), {});
    const std::string digest(reinterpret_cast<const char*>(doc.record.content_digest.data()), 32);
    const auto pos = all.find(digest);
    ASSERT_NE(pos, std::string::npos);
    f.seekp(static_cast<std::streamoff>(pos));
    f.put(static_cast<char>(all[pos] ^ 1));
    f.close();

    EXPECT_FALSE(net.sim.restart("cio"));
    EXPECT_FALSE(net.sim.up("cio"));
    EXPECT_NE(net.sim.trace_lines().back().find("CorruptStore"), std::string::npos);
}

TEST(Node, ConfigAndKeyFiles)
{
    const auto dir = test::temp_dir("node-config");
    NodeConfig c;
    c.node_id = "egov";
    c.organization = "egov";
    c.listen = "127.0.0.1:7700";
    c.peers = {{"cio", "127.0.0.1:7701"}};
    c.data_dir = "data/egov";
    c.consortium_file = "../consortium.yaml";
    c.key_file = "../keys/egov.key";
    save_node_config(c, dir / "egov.yaml");
    const auto back = load_node_config(dir / "egov.yaml");
    EXPECT_EQ(back.node_id, "egov");
    EXPECT_EQ(back.listen, c.listen);
    EXPECT_EQ(back.peers, c.peers);

    const KeyPair k = KeyPair::derive("x");
    save_key_file(k, dir / "x.key");
    EXPECT_EQ(load_key_file(dir / "x.key").public_key(), k.public_key());

    auto config = test::housing_consortium();
    save_consortium(*config, dir / "consortium.yaml");
    const auto loaded = load_consortium(dir / "consortium.yaml");
    EXPECT_EQ(make_genesis(loaded).block_hash, make_genesis(*config).block_hash);
    EXPECT_EQ(loaded.authority_org, "egov");
    EXPECT_EQ(loaded.issuer_for("IncomeLetter")->id, "employer");
}

TEST(Wire, RoundTrip)
{
    auto config = test::housing_consortium();
    const Block g = make_genesis(*config);
    const auto tx = sign_transaction(TxKind::DocumentIssued, Bytes{1}, KeyPair::derive("a"), 1);
    const Block b = test::next_block(g, {tx}, config->validators, 3);

    wire::DocFetchRequest fetch{7, b.block_hash, "housing", {}};
    fetch.signature = org_key("housing").sign(fetch.signing_bytes());
    const std::vector<wire::Message> msgs{
        wire::TxGossip{tx},
        consensus::Proposal{b, 0, "civil", {}, Bytes(64, 1)},
        consensus::make_vote("cio", org_key("cio"), b.block_hash, 1, 0),
        consensus::make_round_change("cio", org_key("cio"), 1, 1, b, 0),
        wire::CommittedBlock{b},
        wire::SyncRequest{3},
        fetch,
        wire::DocFetchResponse{7, b.block_hash, registry::ReadOutcome::Allowed, Bytes{1, 2}},
    };
    for (std::size_t i = 0; i < msgs.size(); ++i) {
        const Bytes frame = wire::encode({"egov", msgs[i]});
        EXPECT_EQ(frame[0], i + 1);
        const auto env = wire::decode(frame);
        EXPECT_EQ(env.from, "egov");
        EXPECT_EQ(env.message.index(), i);
        EXPECT_EQ(wire::encode(env), frame) << wire::tag_name(wire::tag_of(msgs[i]));
    }
    Bytes bad = wire::encode({"egov", wire::SyncRequest{3}});
    bad[0] = 99;
    EXPECT_THROW(wire::decode(bad), Error);
    Bytes cut = wire::encode({"egov", wire::SyncRequest{3}});
    cut.pop_back();
    EXPECT_THROW(wire::decode(cut), Error);
}
