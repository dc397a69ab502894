#include <gtest/gtest.h>

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "civic/server.hpp"
#include "support.hpp"

using namespace civic;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// One validator, so the node commits on its own.
std::shared_ptr<Consortium> solo_consortium()
{
    auto c = test::housing_consortium();
    c->validators = ValidatorSet({*c->validators.find("egov")});
    c->params.block_timer_ms = 20;
    return c;
}

struct Server {
    std::shared_ptr<Consortium> config = solo_consortium();
    std::unique_ptr<NodeServer> server;
    std::unique_ptr<httplib::Client> http;

    Server()
    {
        NodeConfig nc;
        nc.node_id = "egov";
        nc.organization = "egov";
        nc.listen = "127.0.0.1:0";
        server = std::make_unique<NodeServer>(nc, config, sim::org_key("egov"), NodeDisk::in_memory());
        const int port = server->start();
        http = std::make_unique<httplib::Client>("127.0.0.1", port);
    }
    ~Server() { server->stop(); }

    json get(const std::string& path, int expect, const httplib::Headers& h = {})
    {
        auto r = http->Get(path, h);
        EXPECT_TRUE(r);
        if (!r)
            return {};
        EXPECT_EQ(r->status, expect) << path << " " << r->body;
        return json::parse(r->body);
    }
    json post(const std::string& path, const std::string& body, int expect)
    {
        auto r = http->Post(path, body, "application/json");
        EXPECT_TRUE(r);
        if (!r)
            return {};
        EXPECT_EQ(r->status, expect) << path << " " << r->body;
        return json::parse(r->body);
    }
    json post_tx(const Transaction& tx, int expect)
    {
        return post("/tx", json{{"tx", to_hex(tx.encode_signed())}}.dump(), expect);
    }
    bool wait_height(std::uint64_t h)
    {
        for (int i = 0; i < 200; ++i) {
            if (get("/chain/head", 200)["height"].get<std::uint64_t>() >= h)
                return true;
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
        return false;
    }
    identity::IssuedKey ekey(const std::string& citizen, std::uint64_t nonce)
    {
        return identity::issue_ekey(sim::org_key("egov"), citizen, sim::citizen_key(citizen).public_key(),
                                    server->node().now(), 365 * kMsPerDay, server->node().state(), nonce);
    }
    httplib::Headers auth(const EKeyCredential& c, const KeyPair& key)
    {
        const std::string nonce = get("/auth/challenge", 200)["nonce"];
        const Bytes sig = key.sign(identity::challenge_signing_bytes(from_hex(nonce)));
        return {{kCredentialHeader, identity::export_credential(c)},
                {kNonceHeader, nonce},
                {kSignatureHeader, to_hex(sig)}};
    }
};

std::string run(const std::string& cmd, int& status)
{
    std::string out;
    FILE* p = popen(cmd.c_str(), "r");
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0)
        out.append(buf, n);
    status = WEXITSTATUS(pclose(p));
    return out;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST(Http, StatusMapping)
{
    EXPECT_EQ(http_status(Errc::NotFound), 404);
    EXPECT_EQ(http_status(Errc::ReplayedNonce), 401);
    EXPECT_EQ(http_status(Errc::Denied), 403);
    EXPECT_EQ(http_status(Errc::Malformed), 400);
    EXPECT_EQ(http_status(Errc::WrongState), 409);
}

TEST(Http, HeadAndBlocks)
{
    Server s;
    const json head = s.get("/chain/head", 200);
    EXPECT_EQ(head["height"], 0);
    EXPECT_EQ(head["hash"], to_hex(make_genesis(*s.config).block_hash));
    EXPECT_EQ(s.get("/chain/block/0", 200)["hash"], head["hash"]);
    EXPECT_EQ(s.get("/chain/block/5", 404)["error"], "NotFound");
    EXPECT_EQ(s.get("/contracts", 200)["contracts"].size(), 0u);
}

TEST(Http, SubmitAndCommit)
{
    Server s;
    const auto k = s.ekey("C-1001", 1);
    const json r = s.post_tx(k.tx, 202);
    EXPECT_EQ(r["tx_id"], to_hex(k.tx.id()));
    ASSERT_TRUE(s.wait_height(1));
    const json b = s.get("/chain/block/1", 200);
    EXPECT_EQ(b["tx_count"], 1);
    EXPECT_EQ(s.get("/accounts/" + to_hex(sim::org_key("egov").public_key()) + "/nonce", 200)["last_nonce"], 1);

    const json dup = s.post_tx(k.tx, 409);
    EXPECT_EQ(dup["error"], "DuplicateTx");
    const json stale = s.post_tx(s.ekey("C-1002", 1).tx, 409);
    EXPECT_EQ(stale["error"], "AdmissionFailed");
    EXPECT_EQ(stale["reason"], "BadNonce");

    Transaction forged = s.ekey("C-1002", 2).tx;
    forged.signature[0] ^= 1;
    EXPECT_EQ(s.post_tx(forged, 400)["error"], "BadSignature");
    EXPECT_EQ(s.post("/tx", "{not json", 400)["error"], "Malformed");
}

TEST(Http, ChallengeResponseAuth)
{
    Server s;
    const auto k = s.ekey("C-1001", 1);
    s.post_tx(k.tx, 202);
    ASSERT_TRUE(s.wait_height(1));
    const KeyPair citizen = sim::citizen_key("C-1001");

    const json docs = s.get("/citizens/C-1001/documents", 200, s.auth(k.credential, citizen));
    EXPECT_EQ(docs["citizen"], "C-1001");
    EXPECT_TRUE(docs["documents"].empty());

    const auto h = s.auth(k.credential, citizen);
    s.get("/citizens/C-1001/documents", 200, h);
    EXPECT_EQ(s.get("/citizens/C-1001/documents", 401, h)["error"], "ReplayedNonce");
    EXPECT_EQ(s.get("/citizens/C-1002/documents", 403, s.auth(k.credential, citizen))["error"], "Denied");
    EXPECT_EQ(s.get("/citizens/C-1001/documents", 401, s.auth(k.credential, sim::citizen_key("C-1002")))["error"],
              "BadChallengeResponse");

    const auto pending = s.ekey("C-1002", 2);
    EXPECT_EQ(s.get("/citizens/C-1002/documents", 401, s.auth(pending.credential, sim::citizen_key("C-1002")))["error"],
              "NotActive");
}

TEST(Cli, SimReportMatchesGolden)
{
    const fs::path out = test::temp_dir("cli-golden");
    int status = 0;
    run(std::string(CIVIC_CLI_PATH) + " sim run --seed 42 --out " + out.string() + " --json", status);
    ASSERT_EQ(status, 0);
    EXPECT_EQ(json::parse(slurp(out / "report.json")),
              json::parse(slurp(fs::path(CIVIC_SOURCE_DIR) / "tests/golden/housing-report.json")));
    const std::string check = run(std::string(CIVIC_CLI_PATH) + " sim check --trace " + (out / "trace.jsonl").string() + " --json", status);
    EXPECT_EQ(status, 0) << check;
}

TEST(Cli, ErrorsAndExitCodes)
{
    int status = 0;
    run(std::string(CIVIC_CLI_PATH) + " --bogus-flag 2>/dev/null", status);
    EXPECT_EQ(status, 2);
    const std::string out = run(std::string(CIVIC_CLI_PATH) +
                                    " chain head --endpoint http://127.0.0.1:1 --json 2>/dev/null",
                                status);
    EXPECT_EQ(status, 1);
    EXPECT_TRUE(json::parse(out).contains("error")) << out;
}
