#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "civic/contracts.hpp"
#include "civic/identity.hpp"
#include "civic/json_views.hpp"
#include "civic/node.hpp"
#include "civic/registry.hpp"
#include "civic/scenario.hpp"
#include "civic/server.hpp"

using namespace civic;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Profile {
    std::string endpoint = "http://127.0.0.1:7700";
    fs::path credential;
    fs::path consortium;
    fs::path key;
    bool json_out = false;
};

// An error answered by the node, or found before any call was made.
struct Failure {
    std::string code;
    std::string detail;
    std::string reason;
};

Profile load_profile(const fs::path& path)
{
    Profile p;
    if (path.empty())
        return p;
    YAML::Node root;
    try {
        root = YAML::LoadFile(path.string());
    } catch (const YAML::Exception& e) {
        throw Error(Errc::InvalidConfig, "profile: " + std::string(e.what()));
    }
    const fs::path base = path.parent_path();
    auto rel = [&](const char* k) { return root[k] ? base / root[k].as<std::string>() : fs::path(); };
    if (root["endpoint"])
        p.endpoint = root["endpoint"].as<std::string>();
    p.credential = rel("credential");
    p.consortium = rel("consortium");
    p.key = rel("key");
    if (root["output"])
        p.json_out = root["output"].as<std::string>() == "json";
    return p;
}

std::uint64_t wall_ms()
{
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
            .count());
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw Error(Errc::Io, "cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text)
{
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(Errc::Io, "cannot write " + p.string());
    out << text;
}

class Api {
public:
    explicit Api(const std::string& endpoint) : client_(endpoint)
    {
        client_.set_connection_timeout(5);
        client_.set_read_timeout(30);
    }

    json get(const std::string& path, const httplib::Headers& headers = {})
    {
        return handle(client_.Get(path, headers), path);
    }

    json post(const std::string& path, const json& body, const httplib::Headers& headers = {})
    {
        return handle(client_.Post(path, headers, body.dump(), "application/json"), path);
    }

private:
    json handle(const httplib::Result& r, const std::string& path)
    {
        if (!r)
            throw Failure{"Unreachable", "no response for " + path + ": " + httplib::to_string(r.error()), ""};
        json body = r->body.empty() ? json::object() : json::parse(r->body, nullptr, false);
        if (r->status >= 300) {
            if (body.is_discarded() || !body.is_object())
                throw Failure{"Http" + std::to_string(r->status), r->body, ""};
            throw Failure{body.value("error", "Http" + std::to_string(r->status)), body.value("detail", ""),
                          body.value("reason", "")};
        }
        return body;
    }

    httplib::Client client_;
};

// The node's committed chain, fetched and replayed locally.
struct RemoteView {
    std::vector<Block> blocks;
    std::shared_ptr<WorldState> state;
};

RemoteView fetch_view(Api& api, const std::shared_ptr<const Consortium>& consortium)
{
    RemoteView v;
    const std::uint64_t height = api.get("/chain/head")["height"].get<std::uint64_t>();
    for (std::uint64_t h = 0; h <= height; ++h)
        v.blocks.push_back(Block::decode(from_hex(api.get("/chain/block/" + std::to_string(h))["raw"].get<std::string>())));
    const ChainStatus st = validate_chain(v.blocks, *consortium);
    if (!st.valid)
        throw Error(Errc::CorruptStore, "node served an invalid chain at height " + std::to_string(st.height) +
                                            ": " + st.detail);
    v.state = std::make_shared<WorldState>(consortium);
    for (const auto& b : v.blocks)
        v.state->apply_block(b);
    return v;
}

struct Citizen {
    identity::CredentialFile file;
    identity::CitizenIdentity who;
};

Citizen load_citizen(const fs::path& path)
{
    if (path.empty())
        throw Error(Errc::Unauthenticated, "no credential file (use --credential or a profile)");
    Citizen c{identity::load_credential_file(path), {}};
    if (!c.file.key)
        throw Error(Errc::Unauthenticated, "credential file holds no secret key");
    c.who.citizen_id = c.file.credential.citizen_id;
    c.who.credential_id = c.file.credential.id();
    c.who.public_key = c.file.credential.public_key;
    return c;
}

httplib::Headers auth_headers(Api& api, const Citizen& c)
{
    const Bytes nonce = from_hex(api.get("/auth/challenge")["nonce"].get<std::string>());
    const auto ctx = identity::respond_to_challenge(c.file.credential, *c.file.key, nonce);
    return {{kCredentialHeader, identity::export_credential(ctx.credential)},
            {kNonceHeader, to_hex(ctx.challenge_nonce)},
            {kSignatureHeader, to_hex(ctx.response_signature)}};
}

json submit(Api& api, const Transaction& tx, std::optional<Bytes> payload = std::nullopt)
{
    json body = {{"tx", to_hex(tx.encode_signed())}};
    if (payload)
        body["payload"] = to_hex(*payload);
    return api.post("/tx", body);
}

std::string render(const json& j, int depth = 0)
{
    std::ostringstream out;
    const std::string pad(depth * 2, ' ');
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) {
            if (v.is_structured() && !v.empty())
                out << pad << k << ":\n" << render(v, depth + 1);
            else
                out << pad << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
        }
    } else if (j.is_array()) {
        for (const auto& v : j) {
            if (v.is_structured())
                out << pad << "-\n" << render(v, depth + 1);
            else
                out << pad << "- " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
        }
    } else {
        out << pad << (j.is_string() ? j.get<std::string>() : j.dump()) << '\n';
    }
    return out.str();
}

int run_node(const fs::path& config_path, const fs::path& trace_path)
{
    const NodeConfig cfg = load_node_config(config_path);
    auto consortium = std::make_shared<const Consortium>(load_consortium(cfg.consortium_file));
    std::optional<KeyPair> key;
    if (!cfg.key_file.empty())
        key = load_key_file(cfg.key_file);
    auto disk = cfg.data_dir.empty() ? NodeDisk::in_memory() : NodeDisk::open(cfg.data_dir, cfg.sync_writes);
    std::ofstream trace;
    if (!trace_path.empty())
        trace.open(trace_path, std::ios::app);

    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    NodeServer server(cfg, consortium, key, disk, trace.is_open() ? &trace : nullptr);
    const int port = server.start();
    std::cout << json{{"node", cfg.node_id}, {"port", port}, {"height", server.node().chain().height()}}.dump()
              << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"civic: consortium ledger for government records"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string endpoint;
    std::string profile_path;
    bool json_flag = false;
    std::optional<std::uint64_t> seed;
    std::string credential_path;
    std::string consortium_path;
    std::string key_path;
    app.add_option("--endpoint", endpoint, "node base URL (env CIVIC_ENDPOINT)");
    app.add_option("--profile", profile_path, "profile file (endpoint, credential, consortium, key, output)");
    app.add_flag("--json", json_flag, "emit one JSON document on stdout");
    app.add_option("--seed", seed, "simulation seed");
    app.add_option("--credential", credential_path, "citizen credential file");
    app.add_option("--consortium", consortium_path, "consortium (genesis) file");
    app.add_option("--key", key_path, "organization key file");

    Profile profile;
    std::function<json()> action;

    auto endpoint_of = [&] {
        if (!endpoint.empty())
            return endpoint;
        if (const char* env = std::getenv("CIVIC_ENDPOINT"))
            return std::string(env);
        return profile.endpoint;
    };
    auto api = [&] { return Api(endpoint_of()); };
    auto consortium = [&] {
        const fs::path p = consortium_path.empty() ? profile.consortium : fs::path(consortium_path);
        if (p.empty())
            throw Error(Errc::InvalidConfig, "no consortium file (use --consortium or a profile)");
        return std::make_shared<const Consortium>(load_consortium(p));
    };
    auto org_key = [&] {
        const fs::path p = key_path.empty() ? profile.key : fs::path(key_path);
        if (p.empty())
            throw Error(Errc::InvalidConfig, "no key file (use --key or a profile)");
        return load_key_file(p);
    };
    auto citizen = [&] { return load_citizen(credential_path.empty() ? profile.credential : fs::path(credential_path)); };

    // init
    auto* init = app.add_subcommand("init", "write genesis, node configs and keys for a deployment");
    std::string init_out;
    std::string init_scenario;
    int base_port = 7700;
    std::string host = "127.0.0.1";
    bool derived_keys = false;
    init->add_option("--out", init_out, "output directory")->required();
    init->add_option("--scenario", init_scenario, "scenario file listing the organizations");
    init->add_option("--base-port", base_port, "first node port");
    init->add_option("--host", host, "listen host");
    init->add_flag("--derived-keys", derived_keys, "derive keys from organization ids (testing only)");
    init->callback([&] {
        action = [&] {
            const auto s = init_scenario.empty() ? sim::housing_scenario() : sim::load_scenario(init_scenario);
            const fs::path out = init_out;
            auto c = *sim::build_consortium(s);
            std::map<std::string, KeyPair> keys;
            std::vector<ValidatorInfo> validators;
            for (auto& [id, org] : c.organizations) {
                const KeyPair k = derived_keys ? sim::org_key(id) : KeyPair::generate();
                keys.emplace(id, k);
                org.key = k.public_key();
            }
            for (const auto& v : c.validators.validators())
                validators.push_back({v.id, keys.at(v.organization).public_key(), v.organization});
            c.validators = ValidatorSet(std::move(validators));
            c.validate();
            fs::create_directories(out);
            save_consortium(c, out / "consortium.yaml");
            contracts::save_contracts(s.contracts, out / "contracts.yaml");
            json nodes = json::array();
            int port = base_port;
            std::map<std::string, int> ports;
            for (const auto& o : s.organizations)
                ports[o.id] = port++;
            for (const auto& o : s.organizations) {
                NodeConfig cfg;
                cfg.node_id = o.id;
                cfg.organization = o.id;
                cfg.listen = host + ":" + std::to_string(ports[o.id]);
                for (const auto& [peer, p] : ports)
                    if (peer != o.id)
                        cfg.peers[peer] = host + ":" + std::to_string(p);
                cfg.data_dir = fs::path("..") / "data" / o.id;
                cfg.consortium_file = fs::path("..") / "consortium.yaml";
                cfg.key_file = fs::path("..") / "keys" / (o.id + ".key");
                fs::create_directories(out / "keys");
                fs::create_directories(out / "nodes");
                save_key_file(keys.at(o.id), out / "keys" / (o.id + ".key"));
                save_node_config(cfg, out / "nodes" / (o.id + ".yaml"));
                nodes.push_back({{"node", o.id}, {"listen", cfg.listen}, {"config", (out / "nodes" / (o.id + ".yaml")).string()}});
            }
            return json{{"consortium", (out / "consortium.yaml").string()}, {"nodes", nodes}};
        };
    });

    // node run
    auto* node = app.add_subcommand("node", "run an organization node");
    node->require_subcommand(1);
    auto* node_run = node->add_subcommand("run", "serve the HTTP API and join consensus");
    std::string node_config;
    std::string node_trace;
    node_run->add_option("--config", node_config, "node config file")->required();
    node_run->add_option("--trace", node_trace, "append JSON-lines events to this file");
    node_run->callback([&] { action = [&] { std::exit(run_node(node_config, node_trace)); return json(); }; });

    // keygen
    auto* keygen = app.add_subcommand("keygen", "generate an Ed25519 key file");
    std::string keygen_out;
    keygen->add_option("--out", keygen_out, "key file to write")->required();
    keygen->callback([&] {
        action = [&] {
            const KeyPair k = KeyPair::generate();
            save_key_file(k, keygen_out);
            return json{{"key_file", keygen_out}, {"public_key", to_hex(k.public_key())}};
        };
    });

    // ekey issue|revoke
    auto* ekey = app.add_subcommand("ekey", "citizen eKey credentials (authority only)");
    ekey->require_subcommand(1);
    auto* ekey_issue = ekey->add_subcommand("issue", "certify a citizen public key");
    std::string ekey_citizen, ekey_pubkey, ekey_out, ekey_secret;
    std::uint64_t ekey_days = 365;
    ekey_issue->add_option("--citizen", ekey_citizen, "citizen id")->required();
    ekey_issue->add_option("--pubkey", ekey_pubkey, "citizen public key (hex)")->required();
    ekey_issue->add_option("--validity-days", ekey_days, "credential lifetime");
    ekey_issue->add_option("--out", ekey_out, "write the credential file here");
    ekey_issue->add_option("--secret-from", ekey_secret, "citizen key file to bundle into --out");
    ekey_issue->callback([&] {
        action = [&] {
            Api a = api();
            const auto c = consortium();
            const KeyPair key = org_key();
            const auto view = fetch_view(a, c);
            const Bytes pk = from_hex(ekey_pubkey);
            if (pk.size() != 32)
                throw Error(Errc::Malformed, "public key must be 32 bytes");
            PublicKey citizen_pk{};
            std::copy(pk.begin(), pk.end(), citizen_pk.begin());
            const auto issued = identity::issue_ekey(key, ekey_citizen, citizen_pk, wall_ms(), ekey_days * kMsPerDay,
                                                     *view.state, view.state->last_nonce(key.public_key()) + 1);
            json r = submit(a, issued.tx);
            r["credential"] = identity::export_credential(issued.credential);
            if (!ekey_out.empty()) {
                std::optional<KeyPair> secret;
                if (!ekey_secret.empty())
                    secret = load_key_file(ekey_secret);
                identity::save_credential_file(ekey_out, issued.credential, secret ? &*secret : nullptr);
                r["credential_file"] = ekey_out;
            }
            return r;
        };
    });
    auto* ekey_revoke = ekey->add_subcommand("revoke", "revoke a citizen credential");
    std::string revoke_line;
    ekey_revoke->add_option("--credential-line", revoke_line, "exported credential line")->required();
    ekey_revoke->callback([&] {
        action = [&] {
            Api a = api();
            const auto c = consortium();
            const KeyPair key = org_key();
            const auto view = fetch_view(a, c);
            const Transaction tx = identity::revoke_ekey(key, identity::import_credential(revoke_line), *view.state,
                                                         wall_ms(), view.state->last_nonce(key.public_key()) + 1);
            return submit(a, tx);
        };
    });

    // doc issue|verify|list
    auto* doc = app.add_subcommand("doc", "documents");
    doc->require_subcommand(1);
    auto* doc_issue = doc->add_subcommand("issue", "issue a document (issuer organization)");
    std::string doc_subject, doc_type, doc_payload, doc_supersedes;
    std::optional<std::uint64_t> doc_valid_days;
    doc_issue->add_option("--subject", doc_subject, "citizen id")->required();
    doc_issue->add_option("--type", doc_type, "document type")->required();
    doc_issue->add_option("--payload-file", doc_payload, "original document bytes")->required();
    doc_issue->add_option("--valid-days", doc_valid_days, "validity from now; omit for long-term");
    doc_issue->add_option("--supersedes", doc_supersedes, "doc_id this document renews");
    doc_issue->callback([&] {
        action = [&] {
            Api a = api();
            const auto c = consortium();
            const KeyPair key = org_key();
            const std::string payload = read_file(doc_payload);
            const auto view = fetch_view(a, c);
            std::optional<Digest> sup;
            if (!doc_supersedes.empty())
                sup = digest_from_hex(doc_supersedes);
            const std::uint64_t now = wall_ms();
            registry::OffChainStore scratch;
            const auto issued = registry::issue_document(
                key, *c, doc_subject, doc_type, as_view(payload), now,
                doc_valid_days ? now + *doc_valid_days * kMsPerDay : kForever, sup,
                view.state->last_nonce(key.public_key()) + 1, scratch);
            json r = submit(a, issued.tx, Bytes(payload.begin(), payload.end()));
            r["document"] = views::document_json(issued.record);
            return r;
        };
    });
    auto* doc_verify = doc->add_subcommand("verify", "check a payload against its committed record");
    std::string verify_id, verify_payload;
    doc_verify->add_option("--doc", verify_id, "doc_id (hex)")->required();
    doc_verify->add_option("--payload-file", verify_payload, "payload to check")->required();
    doc_verify->callback([&] {
        action = [&] {
            Api a = api();
            const auto view = fetch_view(a, consortium());
            const std::string payload = read_file(verify_payload);
            const DocumentEntry* e = view.state->document(digest_from_hex(verify_id));
            if (!e)
                throw Failure{"NotOnChain", "no committed document " + verify_id, ""};
            const auto status = registry::verify_document(e->record, as_view(payload), wall_ms(), *view.state);
            if (status != registry::VerifyStatus::Verified)
                throw Failure{std::string(registry::verify_name(status)), "document " + verify_id, ""};
            return json{{"doc_id", verify_id}, {"status", std::string(registry::verify_name(status))}};
        };
    });
    auto* doc_list = doc->add_subcommand("list", "list the authenticated citizen's documents");
    doc_list->callback([&] {
        action = [&] {
            Api a = api();
            const Citizen me = citizen();
            return a.get("/citizens/" + me.who.citizen_id + "/documents", auth_headers(a, me));
        };
    });

    // service register|list
    auto* service = app.add_subcommand("service", "service contracts");
    service->require_subcommand(1);
    auto* service_register = service->add_subcommand("register", "register a service contract (provider)");
    std::string contracts_file, service_id;
    service_register->add_option("--contracts", contracts_file, "contracts file")->required();
    service_register->add_option("--service", service_id, "service id in the file")->required();
    service_register->callback([&] {
        action = [&] {
            Api a = api();
            const auto c = consortium();
            const KeyPair key = org_key();
            const auto all = contracts::load_contracts(contracts_file);
            auto it = std::find_if(all.begin(), all.end(), [&](const ServiceContract& x) { return x.service_id == service_id; });
            if (it == all.end())
                throw Error(Errc::UnknownService, service_id + " is not in " + contracts_file);
            const auto view = fetch_view(a, c);
            return submit(a, contracts::register_service(key, *it, *view.state,
                                                         view.state->last_nonce(key.public_key()) + 1));
        };
    });
    auto* service_list = service->add_subcommand("list", "list registered contracts");
    service_list->callback([&] { action = [&] { return api().get("/contracts"); }; });

    // request new|status|consent|complete
    auto* request = app.add_subcommand("request", "service requests");
    request->require_subcommand(1);
    auto* request_new = request->add_subcommand("new", "initiate a service request (citizen)");
    std::string new_service;
    std::vector<std::string> household;
    request_new->add_option("--service", new_service, "service id")->required();
    request_new->add_option("--household", household, "household member ids")->delimiter(',');
    request_new->callback([&] {
        action = [&] {
            Api a = api();
            const Citizen me = citizen();
            const auto view = fetch_view(a, consortium());
            const Transaction tx = contracts::initiate_request(*me.file.key, me.who, new_service, household, wall_ms(),
                                                               *view.state,
                                                               view.state->last_nonce(me.who.public_key) + 1);
            return a.post("/services/" + new_service + "/requests", {{"tx", to_hex(tx.encode_signed())}},
                          auth_headers(a, me));
        };
    });
    auto* request_status = request->add_subcommand("status", "show a request");
    std::string request_id;
    request_status->add_option("--id", request_id, "request id (hex)")->required();
    request_status->callback([&] { action = [&] { return api().get("/requests/" + request_id); }; });
    auto* request_consent = request->add_subcommand("consent", "consent to release the frozen documents (citizen)");
    request_consent->add_option("--id", request_id, "request id (hex)")->required();
    request_consent->callback([&] {
        action = [&] {
            Api a = api();
            const Citizen me = citizen();
            const auto view = fetch_view(a, consortium());
            const Transaction tx = contracts::grant_consent(*me.file.key, me.who, digest_from_hex(request_id),
                                                            *view.state, wall_ms(),
                                                            view.state->last_nonce(me.who.public_key) + 1);
            return a.post("/requests/" + request_id + "/consent", {{"tx", to_hex(tx.encode_signed())}}, auth_headers(a, me));
        };
    });
    auto* request_complete = request->add_subcommand("complete", "complete or reject a request (provider)");
    bool reject = false;
    std::string reason;
    request_complete->add_option("--id", request_id, "request id (hex)")->required();
    request_complete->add_flag("--reject", reject, "reject instead of complete");
    request_complete->add_option("--reason", reason, "rejection reason");
    request_complete->callback([&] {
        action = [&] {
            Api a = api();
            const auto c = consortium();
            const KeyPair key = org_key();
            const auto view = fetch_view(a, c);
            const Digest rid = digest_from_hex(request_id);
            const std::uint64_t nonce = view.state->last_nonce(key.public_key()) + 1;
            const Transaction tx = reject ? contracts::reject_request(key, rid, reason, *view.state, wall_ms(), nonce)
                                          : contracts::complete_request(key, rid, *view.state, wall_ms(), nonce);
            return a.post("/requests/" + request_id + "/complete", {{"tx", to_hex(tx.encode_signed())}});
        };
    });

    // chain validate|head
    auto* chain = app.add_subcommand("chain", "chain inspection");
    chain->require_subcommand(1);
    auto* chain_validate = chain->add_subcommand("validate", "validate a local store, or the node's chain");
    std::string data_dir;
    chain_validate->add_option("--data", data_dir, "node data directory (local check)");
    chain_validate->callback([&] {
        action = [&] {
            const auto c = consortium();
            ChainStatus st;
            std::uint64_t height = 0;
            if (!data_dir.empty()) {
                try {
                    const BlockStore store = BlockStore::open(fs::path(data_dir) / "chain", false);
                    if (store.empty())
                        throw Error(Errc::NotFound, "no blocks in " + data_dir);
                    st = validate_chain(store, *c);
                    height = store.height();
                } catch (const Error& e) {
                    if (e.code() != Errc::CorruptStore)
                        throw;
                    st.valid = false;
                    st.reason = e.code();
                    st.detail = e.detail();
                }
            } else {
                Api a = api();
                const std::uint64_t h = a.get("/chain/head")["height"].get<std::uint64_t>();
                std::vector<Block> blocks;
                for (std::uint64_t i = 0; i <= h; ++i)
                    blocks.push_back(Block::decode(from_hex(a.get("/chain/block/" + std::to_string(i))["raw"].get<std::string>())));
                st = validate_chain(blocks, *c);
                height = h;
            }
            if (!st.valid) {
                std::string d = "height " + std::to_string(st.height);
                if (!st.detail.empty() && st.detail != d)
                    d += ": " + st.detail;
                throw Failure{"Invalid", d, std::string(errc_name(st.reason))};
            }
            return json{{"status", "Valid"}, {"height", height}};
        };
    });
    auto* chain_head = chain->add_subcommand("head", "show the committed head");
    chain_head->callback([&] { action = [&] { return api().get("/chain/head"); }; });

    // sim run|check
    auto* simc = app.add_subcommand("sim", "deterministic simulation");
    simc->require_subcommand(1);
    auto* sim_run = simc->add_subcommand("run", "run a scenario, write trace.jsonl and report.json");
    std::string sim_scenario, sim_out = ".", sim_data;
    std::optional<std::uint64_t> sim_random;
    sim_run->add_option("--scenario", sim_scenario, "scenario file (default: built-in housing)");
    sim_run->add_option("--random", sim_random, "generate a randomized scenario from this seed");
    sim_run->add_option("--out", sim_out, "output directory");
    sim_run->add_option("--data-root", sim_data, "persist node stores here (wiped first)");
    sim_run->callback([&] {
        action = [&] {
            sim::Scenario s = sim_random        ? sim::random_scenario(*sim_random)
                              : sim_scenario.empty() ? sim::housing_scenario()
                                                     : sim::load_scenario(sim_scenario);
            sim::RunOptions opts;
            opts.seed = seed;
            if (!sim_data.empty())
                opts.data_root = sim_data;
            const auto r = sim::run_scenario(s, opts);
            const fs::path out = sim_out;
            write_file(out / "trace.jsonl", sim::trace_text(r.trace));
            write_file(out / "report.json", r.metrics.to_json().dump(2) + "\n");
            if (r.error)
                throw Failure{std::string(errc_name(r.error->code())), r.error->detail(), ""};
            json j = r.metrics.to_json();
            j["trace"] = (out / "trace.jsonl").string();
            j["report"] = (out / "report.json").string();
            if (!json_flag && !profile.json_out) {
                std::cout << r.metrics.table();
                return json();
            }
            return j;
        };
    });
    auto* sim_check = simc->add_subcommand("check", "replay a trace and report invariant violations");
    std::string trace_file;
    sim_check->add_option("--trace", trace_file, "trace.jsonl")->required();
    sim_check->callback([&] {
        action = [&] {
            const auto v = sim::check_invariants(sim::read_trace(trace_file));
            if (!v.empty()) {
                std::string d;
                for (const auto& x : v)
                    d += (d.empty() ? "" : "; ") + x.kind + ": " + x.detail;
                throw Failure{"InvariantViolation", d, std::to_string(v.size())};
            }
            return json{{"violations", json::array()}, {"status", "ok"}};
        };
    });

    // metrics report
    auto* metrics = app.add_subcommand("metrics", "scenario metrics");
    metrics->require_subcommand(1);
    auto* metrics_report = metrics->add_subcommand("report", "render a report.json");
    std::string report_file;
    double cost = 0;
    metrics_report->add_option("--report", report_file, "report.json")->required();
    metrics_report->add_option("--cost-per-interaction", cost, "monetary multiplier");
    metrics_report->callback([&] {
        action = [&] {
            auto m = sim::MetricsReport::from_json(json::parse(read_file(report_file)));
            if (cost > 0)
                m.cost_per_interaction = cost;
            if (!json_flag && !profile.json_out) {
                std::cout << m.table();
                return json();
            }
            return m.to_json();
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    bool as_json = json_flag;
    auto fail = [&](const Failure& f) {
        json err = {{"error", f.code}, {"detail", f.detail}};
        if (!f.reason.empty())
            err["reason"] = f.reason;
        if (as_json)
            std::cout << err.dump() << '\n';
        else
            std::cerr << "error: " << f.code << (f.reason.empty() ? "" : " (" + f.reason + ")") << ": " << f.detail
                      << '\n';
        return 1;
    };
    try {
        profile = load_profile(profile_path);
        as_json = json_flag || profile.json_out;
        const json result = action();
        if (result.is_null())
            return 0;
        if (as_json)
            std::cout << result.dump() << '\n';
        else
            std::cout << render(result);
        return 0;
    } catch (const Failure& f) {
        return fail(f);
    } catch (const Error& e) {
        return fail({std::string(errc_name(e.code())), e.detail(), ""});
    } catch (const std::exception& e) {
        return fail({"Failed", e.what(), ""});
    }
}
