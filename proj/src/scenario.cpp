#include "civic/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "civic/contracts.hpp"
#include "civic/identity.hpp"
#include "civic/registry.hpp"

namespace civic::sim {

using nlohmann::json;

const char* const kHousingScenarioYaml = R"(# Housing application: a married applicant with one child applies to the
# Ministry of Housing. The employer's income letter on file is 45 days old, so
# the request waits until a fresh letter is issued.
name: housing
seed: 42
start_time: 1767225600000
authority: egov
gateways: [egov, housing]
citizens: [C-1001, C-1002, C-1003]
organizations:
  - {id: egov, name: e-Government Authority, validator: true}
  - {id: cio, name: Central Informatics Organization, doc_types: [IdentityCard], validator: true}
  - {id: housing, name: Ministry of Housing, doc_types: [PropertyCertificate], provider: true, validator: true}
  - {id: civil, name: Civil Registry, doc_types: [BirthCertificate, Passport], validator: true}
  - {id: benefit, name: Benefit Company, doc_types: [BenefitReport]}
  - {id: employer, name: Employer, doc_types: [IncomeLetter]}
actions:
  - {kind: IssueEKey, label: ekey, actor: egov, subject: C-1001}
  - {kind: RegisterService, label: service, actor: housing, service: housing}
  - {kind: Issue, label: id-husband, actor: cio, subject: C-1001, doc_type: IdentityCard, valid_days: 1825}
  - {kind: Issue, label: id-wife, actor: cio, subject: C-1002, doc_type: IdentityCard, valid_days: 1825}
  - {kind: Issue, label: property, actor: housing, subject: C-1001, doc_type: PropertyCertificate, valid_days: 90}
  - {kind: Issue, label: benefit-report, actor: benefit, subject: C-1001, doc_type: BenefitReport, valid_days: 90}
  - {kind: Issue, label: income-old, actor: employer, subject: C-1001, doc_type: IncomeLetter, age_days: 45, valid_days: 365}
  - {kind: Issue, label: birth-child, actor: civil, subject: C-1003, doc_type: BirthCertificate}
  - {kind: Issue, label: passport-husband, actor: civil, subject: C-1001, doc_type: Passport, valid_days: 3650}
  - {kind: Issue, label: passport-wife, actor: civil, subject: C-1002, doc_type: Passport, valid_days: 3650}
  - {kind: Initiate, label: application, actor: C-1001, service: housing, household: [C-1002, C-1003]}
  - {kind: Wait, label: letter-too-old, request: application, await: [AwaitingDocuments]}
  - {kind: Issue, label: income-new, actor: employer, subject: C-1001, doc_type: IncomeLetter, valid_days: 365, supersedes: income-old}
  - {kind: Consent, label: consent, actor: C-1001, request: application, await: [DocumentsFulfilled]}
  - {kind: Complete, label: complete, actor: housing, request: application, await: [Collected]}
  - {kind: Outcome, label: outcome, actor: C-1001, request: application, await: [Completed]}
)";

std::string_view action_name(ActionKind k)
{
    switch (k) {
    case ActionKind::IssueEKey: return "IssueEKey";
    case ActionKind::RevokeEKey: return "RevokeEKey";
    case ActionKind::Issue: return "Issue";
    case ActionKind::RegisterService: return "RegisterService";
    case ActionKind::Initiate: return "Initiate";
    case ActionKind::Consent: return "Consent";
    case ActionKind::Complete: return "Complete";
    case ActionKind::Reject: return "Reject";
    case ActionKind::Outcome: return "Outcome";
    case ActionKind::Wait: return "Wait";
    }
    return "?";
}

ActionKind parse_action(std::string_view s)
{
    for (auto k : {ActionKind::IssueEKey, ActionKind::RevokeEKey, ActionKind::Issue, ActionKind::RegisterService,
                   ActionKind::Initiate, ActionKind::Consent, ActionKind::Complete, ActionKind::Reject,
                   ActionKind::Outcome, ActionKind::Wait})
        if (action_name(k) == s)
            return k;
    throw Error(Errc::InvalidConfig, "unknown action kind " + std::string(s));
}

namespace {

RequestState parse_state(const std::string& s)
{
    for (auto st : {RequestState::Initiated, RequestState::AwaitingDocuments, RequestState::DocumentsFulfilled,
                    RequestState::ConsentGranted, RequestState::Collected, RequestState::Completed,
                    RequestState::Rejected})
        if (state_name(st) == s)
            return st;
    throw Error(Errc::InvalidConfig, "unknown request state " + s);
}

template<class T>
T get_or(const YAML::Node& n, const char* key, T fallback)
{
    return n[key] ? n[key].as<T>() : fallback;
}

std::vector<std::string> strings(const YAML::Node& n)
{
    std::vector<std::string> out;
    if (n && n.IsSequence())
        for (const auto& x : n)
            out.push_back(x.as<std::string>());
    else if (n)
        out.push_back(n.as<std::string>());
    return out;
}

std::optional<std::uint64_t> duration(const YAML::Node& n, const char* days_key, const char* ms_key)
{
    if (n[ms_key])
        return n[ms_key].as<std::uint64_t>();
    if (n[days_key])
        return n[days_key].as<std::uint64_t>() * kMsPerDay;
    return std::nullopt;
}

Action parse_action_node(const YAML::Node& n)
{
    Action a;
    a.kind = parse_action(n["kind"].as<std::string>());
    a.label = get_or<std::string>(n, "label", "");
    a.actor = get_or<std::string>(n, "actor", "");
    a.delay_ms = get_or<std::uint64_t>(n, "delay_ms", 0);
    a.subject = get_or<std::string>(n, "subject", "");
    a.doc_type = get_or<std::string>(n, "doc_type", "");
    a.payload = get_or<std::string>(n, "payload", "");
    a.age_ms = duration(n, "age_days", "age_ms").value_or(0);
    a.valid_ms = duration(n, "valid_days", "valid_ms");
    a.supersedes = get_or<std::string>(n, "supersedes", "");
    a.service = get_or<std::string>(n, "service", "");
    a.household = strings(n["household"]);
    a.request = get_or<std::string>(n, "request", "");
    a.reason = get_or<std::string>(n, "reason", "");
    a.validity_ms = duration(n, "validity_days", "validity_ms").value_or(365 * kMsPerDay);
    for (const auto& s : strings(n["await"]))
        a.await.push_back(parse_state(s));
    return a;
}

Fault parse_fault_node(const YAML::Node& n)
{
    Fault f;
    f.kind = parse_fault(n["kind"].as<std::string>());
    f.at = get_or<std::uint64_t>(n, "at", 0);
    f.after = get_or<std::string>(n, "after", "");
    f.nodes = strings(n["nodes"]);
    f.other = strings(n["other"]);
    f.min_delay_ms = get_or<std::uint64_t>(n, "min_delay_ms", 10);
    f.max_delay_ms = get_or<std::uint64_t>(n, "max_delay_ms", 50);
    f.document = get_or<std::string>(n, "document", "");
    f.byte = get_or<std::size_t>(n, "byte", 0);
    f.torn_tail = get_or<bool>(n, "torn_tail", false);
    return f;
}

} // namespace

bool citizen_action(const Action& a)
{
    switch (a.kind) {
    case ActionKind::Initiate:
    case ActionKind::Consent:
    case ActionKind::Outcome: return true;
    case ActionKind::Reject: return a.actor.rfind("C-", 0) == 0;
    default: return false;
    }
}

Scenario parse_scenario(const std::string& text, const std::filesystem::path& base)
{
    try {
        const YAML::Node root = YAML::Load(text);
        Scenario s;
        s.name = get_or<std::string>(root, "name", s.name);
        s.seed = get_or<std::uint64_t>(root, "seed", s.seed);
        s.start_time = get_or<std::uint64_t>(root, "start_time", s.start_time);
        s.authority = root["authority"].as<std::string>();
        s.citizens = strings(root["citizens"]);
        s.gateways = strings(root["gateways"]);
        for (const auto& o : root["organizations"]) {
            OrgSpec org;
            org.id = o["id"].as<std::string>();
            org.name = get_or<std::string>(o, "name", org.id);
            org.doc_types = strings(o["doc_types"]);
            org.provider = get_or<bool>(o, "provider", false);
            org.validator = get_or<bool>(o, "validator", false);
            s.organizations.push_back(std::move(org));
        }
        if (root["contracts_file"])
            s.contracts = contracts::load_contracts(base / root["contracts_file"].as<std::string>());
        else
            s.contracts = {contracts::housing_contract()};
        for (const auto& a : root["actions"])
            s.actions.push_back(parse_action_node(a));
        if (root["faults"])
            for (const auto& f : root["faults"])
                s.faults.push_back(parse_fault_node(f));
        if (const auto p = root["params"]) {
            auto& cp = s.params;
            cp.block_capacity = get_or<std::size_t>(p, "block_capacity", cp.block_capacity);
            cp.block_timer_ms = get_or<std::uint64_t>(p, "block_timer_ms", cp.block_timer_ms);
            cp.round_timeout_ms = get_or<std::uint64_t>(p, "round_timeout_ms", cp.round_timeout_ms);
            cp.sync_interval_ms = get_or<std::uint64_t>(p, "sync_interval_ms", cp.sync_interval_ms);
        }
        s.stuck_timeout_ms = get_or<std::uint64_t>(root, "stuck_timeout_ms", s.stuck_timeout_ms);
        s.settle_ms = get_or<std::uint64_t>(root, "settle_ms", s.settle_ms);
        if (root["baseline_file"])
            s.baseline = load_baseline(base / root["baseline_file"].as<std::string>());
        else
            s.baseline = housing_baseline();
        if (s.gateways.empty())
            throw Error(Errc::InvalidConfig, "scenario lists no gateways");
        return s;
    } catch (const YAML::Exception& e) {
        throw Error(Errc::InvalidConfig, std::string("scenario: ") + e.what());
    }
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::Io, "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path.parent_path());
}

Scenario housing_scenario()
{
    return parse_scenario(kHousingScenarioYaml);
}

KeyPair citizen_key(const std::string& citizen_id)
{
    return KeyPair::derive("citizen:" + citizen_id);
}

KeyPair org_key(const std::string& org_id)
{
    return KeyPair::derive("org:" + org_id);
}

std::shared_ptr<Consortium> build_consortium(const Scenario& s)
{
    auto c = std::make_shared<Consortium>();
    c->genesis_timestamp = s.start_time;
    c->authority_org = s.authority;
    c->params = s.params;
    std::vector<ValidatorInfo> validators;
    for (const auto& o : s.organizations) {
        Organization org;
        org.id = o.id;
        org.name = o.name;
        org.key = org_key(o.id).public_key();
        org.node = o.id;
        org.doc_types.insert(o.doc_types.begin(), o.doc_types.end());
        org.provider = o.provider;
        c->organizations.emplace(o.id, std::move(org));
        if (o.validator)
            validators.push_back({o.id, org_key(o.id).public_key(), o.id});
    }
    c->validators = ValidatorSet(std::move(validators));
    c->validate();
    return c;
}

std::vector<NodeSetup> build_nodes(const Scenario& s)
{
    std::vector<NodeSetup> out;
    for (const auto& o : s.organizations) {
        NodeConfig cfg;
        cfg.node_id = o.id;
        cfg.organization = o.id;
        cfg.listen = "sim";
        cfg.deterministic_seed = s.seed;
        for (const auto& p : s.organizations)
            if (p.id != o.id)
                cfg.peers[p.id] = "sim";
        out.push_back({std::move(cfg), org_key(o.id)});
    }
    return out;
}

namespace {

class Runner {
public:
    Runner(const Scenario& s, const RunOptions& o) : s_(s), opts_(o)
    {
        if (opts_.seed)
            s_.seed = *opts_.seed;
        SimOptions so;
        so.seed = s_.seed;
        so.data_root = opts_.data_root;
        if (so.data_root)
            std::filesystem::remove_all(*so.data_root);
        consortium_ = build_consortium(s_);
        sim_ = std::make_unique<Simulator>(consortium_, build_nodes(s_), so);
        faults_ = s_.faults;
        faults_.insert(faults_.end(), opts_.extra_faults.begin(), opts_.extra_faults.end());
    }

    LiveRun run()
    {
        auto& sim = *sim_;
        sim.trace({{"type", "scenario_start"}, {"t", sim.now()}, {"name", s_.name}, {"seed", s_.seed}});
        sim.start();
        for (const auto& f : faults_) {
            if (f.after.empty())
                sim.at(sim.start_time() + f.at, [this, f] { apply(f); });
            else
                after_faults_[f.after].push_back(f);
        }
        since_ = sim.now();
        sim.at(sim.now(), [this] { tick(); });
        while (!done_ && !stuck_ && sim.step()) {
        }
        const std::uint64_t end_actions = sim.now();
        if (done_)
            sim.run_until(sim.now() + s_.settle_ms);
        sim.trace({{"type", "scenario_end"},
                   {"t", sim.now()},
                   {"completed", done_},
                   {"stuck", stuck_},
                   {"detail", stuck_detail_}});
        LiveRun out;
        RunResult& r = out.result;
        for (const auto& id : sim.node_ids()) {
            r.chains[id] = sim.chain_of(id);
            const auto& ch = r.chains[id];
            sim.trace({{"type", "final"},
                       {"node", id},
                       {"t", sim.now()},
                       {"up", sim.up(id)},
                       {"height", ch.empty() ? 0 : ch.back().first},
                       {"tip", ch.empty() ? std::string() : to_hex(ch.back().second)}});
        }
        r.completed = done_;
        if (stuck_)
            r.error = Error(Errc::ScenarioStuck, stuck_detail_);
        r.requests = requests_;
        r.documents = docs_;
        r.end_time = sim.now();
        if (Node* g = gateway()) {
            for (const auto& [label, id] : requests_)
                if (const ServiceRequest* req = g->state().request(id))
                    r.request_states[label] = req->state;
        }
        r.metrics = metrics(end_actions);
        r.trace = sim.trace_lines();
        out.sim = std::move(sim_);
        return out;
    }

private:
    Node* gateway()
    {
        for (const auto& g : s_.gateways)
            if (Node* n = sim_->node(g))
                return n;
        return nullptr;
    }

    Node* view_node(const Action& a)
    {
        return citizen_action(a) || a.kind == ActionKind::Wait ? gateway() : sim_->node(a.actor);
    }

    void tick()
    {
        if (done_ || stuck_)
            return;
        advance();
        if (!done_ && !stuck_)
            sim_->at(sim_->now() + 20, [this] { tick(); });
    }

    bool ready(const Action& a)
    {
        Node* n = view_node(a);
        if (!n)
            return false;
        // A node that restarted acts only once it has caught up; its nonces and
        // checks would otherwise run against a stale view.
        for (const auto& id : sim_->node_ids())
            if (Node* other = sim_->node(id); other && other->state().height() > n->state().height())
                return false;
        if (a.await.empty())
            return true;
        auto rid = requests_.find(a.request);
        if (rid == requests_.end())
            return false;
        const ServiceRequest* req = n->state().request(rid->second);
        return req && std::find(a.await.begin(), a.await.end(), req->state) != a.await.end();
    }

    bool committed_everywhere(const Digest& id)
    {
        bool any = false;
        for (const auto& nid : sim_->node_ids()) {
            if (Node* n = sim_->node(nid)) {
                any = true;
                if (!n->state().committed(id))
                    return false;
            }
        }
        return any;
    }

    void advance()
    {
        auto& sim = *sim_;
        while (idx_ < s_.actions.size()) {
            const Action& a = s_.actions[idx_];
            if (!started_) {
                if (sim.now() < since_ + a.delay_ms || !ready(a)) {
                    check_stuck(a);
                    return;
                }
                started_ = true;
                execute(a);
            }
            if (tx_ && !committed_everywhere(tx_id_)) {
                resubmit(a);
                check_stuck(a);
                return;
            }
            finish(a);
        }
        done_ = true;
    }

    void check_stuck(const Action& a)
    {
        if (sim_->now() - since_ <= s_.stuck_timeout_ms)
            return;
        stuck_ = true;
        std::ostringstream d;
        d << "action " << a.label << " (" << action_name(a.kind) << ") blocked since t+" << since_ - sim_->start_time()
          << "ms";
        if (!a.request.empty() && requests_.count(a.request)) {
            Node* g = gateway();
            const ServiceRequest* req = g ? g->state().request(requests_.at(a.request)) : nullptr;
            d << "; request " << a.request << " is " << (req ? state_name(req->state) : "not committed");
        }
        std::uint64_t height = 0;
        for (const auto& id : sim_->node_ids())
            if (Node* n = sim_->node(id))
                height = std::max(height, n->state().height());
        d << "; chain height " << height;
        if (tx_)
            d << ", tx " << to_hex(tx_id_).substr(0, 16) << " not committed";
        stuck_detail_ = d.str();
        sim_->trace({{"type", "stuck"}, {"t", sim_->now()}, {"detail", stuck_detail_}});
    }

    void finish(const Action& a)
    {
        auto& sim = *sim_;
        sim.trace({{"type", "action_done"}, {"t", sim.now()}, {"label", a.label}});
        if (auto it = after_faults_.find(a.label); it != after_faults_.end())
            for (const auto& f : it->second)
                sim.at(sim.now() + f.at, [this, f] { apply(f); });
        if (citizen_action(a))
            last_citizen_done_ = sim.now();
        idx_++;
        started_ = false;
        retries_ = 0;
        tx_.reset();
        since_ = sim.now();
    }

    void resubmit(const Action& a)
    {
        auto& sim = *sim_;
        if (sim.now() < last_submit_ + 3 * s_.params.round_timeout_ms)
            return;
        for (const auto& nid : sim.node_ids())
            if (Node* n = sim.node(nid); n && n->in_mempool(tx_id_))
                return;
        Node* n = citizen_action(a) ? gateway() : sim.node(a.actor);
        if (!n)
            n = gateway();
        if (!n)
            return;
        last_submit_ = sim.now();
        const SubmitResult r = n->submit(*tx_);
        sim.trace({{"type", "resubmit"}, {"t", sim.now()}, {"label", a.label}, {"accepted", r.accepted}});
        if (!r.accepted && r.error != Errc::DuplicateTx) {
            const bool retry = ++retries_ <= kMaxRetries;
            sim.trace({{"type", retry ? "action_retry" : "action_rejected"},
                       {"t", sim.now()},
                       {"label", a.label},
                       {"error", std::string(errc_name(r.reason))}});
            tx_.reset();
            if (retry)
                started_ = false;
        }
    }

    identity::CitizenIdentity authenticate(Node& g, const std::string& citizen)
    {
        auto cred = creds_.find(citizen);
        if (cred == creds_.end())
            throw Error(Errc::Unauthenticated, "no eKey issued to " + citizen);
        const Bytes nonce = g.auth_nonces().issue();
        const auto ctx = identity::respond_to_challenge(cred->second, citizen_key(citizen), nonce);
        return identity::authenticate(ctx, g.state(), g.now(), g.auth_nonces());
    }

    std::uint64_t citizen_nonce(const std::string& citizen, const WorldState& view)
    {
        auto& n = citizen_nonces_[citizen];
        n = std::max(n, view.last_nonce(citizen_key(citizen).public_key())) + 1;
        return n;
    }

    const Digest& request_id(const Action& a)
    {
        auto it = requests_.find(a.request);
        if (it == requests_.end())
            throw Error(Errc::InvalidConfig, "action " + a.label + " names unknown request " + a.request);
        return it->second;
    }

    void execute(const Action& a)
    {
        auto& sim = *sim_;
        const std::uint64_t now = sim.now();
        json event = {{"type", "action"}, {"t", now}, {"label", a.label}, {"kind", std::string(action_name(a.kind))},
                      {"actor", a.actor}};
        if (citizen_action(a)) {
            interactions_++;
            if (!first_citizen_at_)
                first_citizen_at_ = now;
        }
        SubmitResult r;
        bool has_tx = true;
        try {
            if (citizen_action(a)) {
                Node& g = *gateway();
                event["via"] = g.id();
                const auto who = authenticate(g, a.actor);
                const KeyPair key = citizen_key(a.actor);
                Transaction tx;
                switch (a.kind) {
                case ActionKind::Initiate:
                    tx = contracts::initiate_request(key, who, a.service, a.household, now, g.state(),
                                                     citizen_nonce(a.actor, g.state()));
                    requests_[a.label] = tx.id();
                    break;
                case ActionKind::Consent:
                    tx = contracts::grant_consent(key, who, request_id(a), g.state(), now,
                                                  citizen_nonce(a.actor, g.state()));
                    break;
                case ActionKind::Reject:
                    tx = contracts::reject_request(key, request_id(a), a.reason.empty() ? "withdrawn" : a.reason,
                                                   g.state(), now, citizen_nonce(a.actor, g.state()));
                    break;
                default: {
                    has_tx = false;
                    const ServiceRequest* req = g.state().request(request_id(a));
                    event["state"] = req ? std::string(state_name(req->state)) : "unknown";
                    event["documents"] = registry::citizen_documents(a.actor, g.state(), now).size();
                    break;
                }
                }
                if (has_tx)
                    r = g.submit(tx);
                if (has_tx)
                    tx_ = tx;
            } else if (a.kind == ActionKind::Wait) {
                has_tx = false;
            } else {
                Node& n = *sim.node(a.actor);
                const KeyPair& key = sim.key(a.actor);
                Transaction made;
                r = n.act([&](std::uint64_t nonce) {
                    switch (a.kind) {
                    case ActionKind::IssueEKey: {
                        auto issued = identity::issue_ekey(key, a.subject, citizen_key(a.subject).public_key(), now,
                                                           a.validity_ms, n.state(), nonce);
                        creds_[a.subject] = issued.credential;
                        made = issued.tx;
                        break;
                    }
                    case ActionKind::RevokeEKey:
                        made = identity::revoke_ekey(key, creds_.at(a.subject), n.state(), now, nonce);
                        break;
                    case ActionKind::Issue: {
                        std::optional<Digest> supersedes;
                        if (!a.supersedes.empty())
                            supersedes = docs_.at(a.supersedes).doc_id;
                        const std::string payload = a.payload.empty()
                                                        ? a.doc_type + " of " + a.subject + " issued by " + a.actor +
                                                              " (" + a.label + ")"
                                                        : a.payload;
                        const std::uint64_t issued_at = now - a.age_ms;
                        auto doc = registry::issue_document(key, n.consortium(), a.subject, a.doc_type,
                                                            as_view(payload), issued_at,
                                                            a.valid_ms ? issued_at + *a.valid_ms : kForever,
                                                            supersedes, nonce, n.disk().store);
                        docs_[a.label] = doc.record;
                        made = doc.tx;
                        break;
                    }
                    case ActionKind::RegisterService: {
                        auto c = std::find_if(s_.contracts.begin(), s_.contracts.end(),
                                              [&](const ServiceContract& x) { return x.service_id == a.service; });
                        if (c == s_.contracts.end())
                            throw Error(Errc::UnknownService, a.service);
                        made = contracts::register_service(key, *c, n.state(), nonce);
                        break;
                    }
                    case ActionKind::Complete:
                        made = contracts::complete_request(key, request_id(a), n.state(), now, nonce);
                        break;
                    case ActionKind::Reject:
                        made = contracts::reject_request(key, request_id(a), a.reason.empty() ? "rejected" : a.reason,
                                                         n.state(), now, nonce);
                        break;
                    default: throw Error(Errc::InvalidConfig, "action kind needs a citizen actor");
                    }
                    return made;
                });
                tx_ = made;
            }
        } catch (const Error& e) {
            event["error"] = std::string(errc_name(e.code()));
            event["detail"] = e.detail();
            has_tx = false;
            tx_.reset();
        }
        if (has_tx && tx_) {
            tx_id_ = tx_->id();
            event["tx"] = to_hex(tx_id_);
            event["accepted"] = r.accepted;
            if (!r.accepted) {
                event["error"] = std::string(errc_name(r.reason));
                event["detail"] = r.detail;
                tx_.reset();
            }
        }
        last_submit_ = now;
        sim.trace(std::move(event));
    }

    void apply(const Fault& f)
    {
        auto& sim = *sim_;
        sim.trace({{"type", "fault"}, {"t", sim.now()}, {"kind", std::string(fault_name(f.kind))}, {"nodes", f.nodes}});
        switch (f.kind) {
        case FaultKind::CrashNode:
            for (const auto& n : f.nodes)
                sim.crash(n, f.torn_tail);
            break;
        case FaultKind::RestartNode:
            for (const auto& n : f.nodes)
                sim.restart(n);
            break;
        case FaultKind::Partition: sim.partition(f.nodes, f.other); break;
        case FaultKind::Heal: sim.heal(); break;
        case FaultKind::DelayRange: sim.set_delay(f.min_delay_ms, f.max_delay_ms); break;
        case FaultKind::CorruptStoreByte: {
            auto d = docs_.find(f.document);
            if (d != docs_.end())
                sim.corrupt_payload(d->second.issuer, d->second.content_digest, f.byte);
            break;
        }
        }
    }

    MetricsReport metrics(std::uint64_t end_actions)
    {
        MetricsReport m;
        m.scenario = s_.name;
        m.seed = s_.seed;
        m.completed = done_;
        m.citizen_interactions = interactions_;
        if (first_citizen_at_)
            m.end_to_end_time_ms = std::max(last_citizen_done_, *first_citizen_at_) - *first_citizen_at_;
        (void)end_actions;
        std::vector<std::pair<std::uint64_t, Digest>> longest;
        std::string longest_id;
        for (const auto& id : sim_->node_ids()) {
            const auto ch = sim_->chain_of(id);
            if (ch.size() > longest.size()) {
                longest = ch;
                longest_id = id;
            }
        }
        if (!longest.empty()) {
            m.blocks_committed = longest.back().first;
            if (Node* n = sim_->node(longest_id))
                for (const auto& b : n->chain().blocks())
                    if (b->header.height > 0)
                        m.transactions_committed += b->transactions.size();
        }
        const auto base = baseline_model(s_.baseline);
        m.baseline_name = s_.baseline.name;
        m.baseline_interactions = base.interactions;
        m.baseline_hours = base.hours;
        return m;
    }

    Scenario s_;
    RunOptions opts_;
    std::shared_ptr<Consortium> consortium_;
    std::unique_ptr<Simulator> sim_;
    std::vector<Fault> faults_;
    std::map<std::string, std::vector<Fault>> after_faults_;

    std::size_t idx_ = 0;
    bool started_ = false;
    int retries_ = 0;
    static constexpr int kMaxRetries = 3;
    std::optional<Transaction> tx_;
    Digest tx_id_{};
    std::uint64_t since_ = 0;
    std::uint64_t last_submit_ = 0;
    bool done_ = false;
    bool stuck_ = false;
    std::string stuck_detail_;

    std::map<std::string, Digest> requests_;
    std::map<std::string, DocumentRecord> docs_;
    std::map<std::string, EKeyCredential> creds_;
    std::map<std::string, std::uint64_t> citizen_nonces_;
    std::uint64_t interactions_ = 0;
    std::optional<std::uint64_t> first_citizen_at_;
    std::uint64_t last_citizen_done_ = 0;
};

} // namespace

LiveRun run_scenario_live(const Scenario& scenario, const RunOptions& options)
{
    Runner runner(scenario, options);
    return runner.run();
}

RunResult run_scenario(const Scenario& scenario, const RunOptions& options)
{
    return run_scenario_live(scenario, options).result;
}

Scenario random_scenario(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    auto chance = [&](double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; };
    auto pick = [&](std::uint64_t lo, std::uint64_t hi) { return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng); };

    Scenario s = housing_scenario();
    s.name = "random-" + std::to_string(seed);
    s.seed = seed;
    const auto base = s.actions;
    auto find = [&](const std::string& label) {
        return *std::find_if(base.begin(), base.end(), [&](const Action& a) { return a.label == label; });
    };

    enum class Letter { Fresh, Renewed, Late, Never };
    const Letter letter = chance(0.3) ? Letter::Fresh : chance(0.6) ? Letter::Renewed : chance(0.5) ? Letter::Late
                                                                                                 : Letter::Never;
    std::vector<Action> docs;
    for (const char* l : {"id-husband", "id-wife", "property", "benefit-report", "birth-child", "passport-husband",
                          "passport-wife"})
        docs.push_back(find(l));
    Action old_letter = find("income-old");
    if (letter == Letter::Fresh)
        old_letter.age_ms = pick(0, 20) * kMsPerDay;
    if (letter != Letter::Late)
        docs.push_back(old_letter);
    std::shuffle(docs.begin(), docs.end(), rng);

    s.actions = {find("ekey"), find("service")};
    s.actions.insert(s.actions.end(), docs.begin(), docs.end());
    Action init = find("application");
    s.actions.push_back(init);

    Action outcome = find("outcome");
    outcome.await = {RequestState::Completed, RequestState::Rejected};

    auto withdraw = [&](RequestState at) {
        Action a;
        a.kind = ActionKind::Reject;
        a.label = "withdraw";
        a.actor = init.actor;
        a.request = init.label;
        a.reason = "withdrawn by applicant";
        a.await = {at};
        a.delay_ms = pick(0, 2000);
        return a;
    };

    if (letter != Letter::Fresh) {
        Action wait = find("letter-too-old");
        s.actions.push_back(wait);
        if (letter == Letter::Never) {
            s.actions.push_back(withdraw(RequestState::AwaitingDocuments));
            s.actions.push_back(outcome);
            goto faults;
        }
        Action fresh = find("income-new");
        if (letter == Letter::Late)
            fresh.supersedes.clear();
        fresh.delay_ms = pick(0, 3000);
        s.actions.push_back(fresh);
    }
    if (chance(0.15)) {
        s.actions.push_back(withdraw(RequestState::DocumentsFulfilled));
        s.actions.push_back(outcome);
        goto faults;
    }
    {
        Action consent = find("consent");
        consent.delay_ms = pick(0, 2000);
        s.actions.push_back(consent);
        Action close = find("complete");
        if (chance(0.15)) {
            close.kind = ActionKind::Reject;
            close.label = "provider-reject";
            close.reason = "application declined";
        }
        s.actions.push_back(close);
        s.actions.push_back(outcome);
    }

faults:
    const std::vector<std::string> validators = {"civil", "cio", "egov", "housing"};
    const double roll = std::uniform_real_distribution<double>(0, 1)(rng);
    if (roll < 0.25) {
        Fault crash;
        crash.kind = FaultKind::CrashNode;
        crash.at = pick(1000, 15000);
        crash.nodes = {validators[pick(0, validators.size() - 1)]};
        Fault restart = crash;
        restart.kind = FaultKind::RestartNode;
        restart.at = crash.at + pick(1000, 4000);
        s.faults = {crash, restart};
    } else if (roll < 0.45) {
        Fault part;
        part.kind = FaultKind::Partition;
        part.at = pick(1000, 15000);
        part.nodes = {"egov", "cio", "benefit"};
        part.other = {"housing", "civil", "employer"};
        Fault heal;
        heal.kind = FaultKind::Heal;
        heal.at = part.at + pick(2000, 6000);
        s.faults = {part, heal};
    } else if (roll < 0.6) {
        Fault slow;
        slow.kind = FaultKind::DelayRange;
        slow.at = pick(0, 10000);
        slow.min_delay_ms = 5;
        slow.max_delay_ms = pick(60, 200);
        s.faults = {slow};
    }
    return s;
}

// ---- trace replay ------------------------------------------------------------

namespace {

bool edge_allowed(std::optional<RequestState> from, RequestState to)
{
    using S = RequestState;
    if (!from)
        return to == S::Initiated;
    if (is_terminal(*from))
        return false;
    if (to == S::Rejected)
        return true;
    switch (*from) {
    case S::Initiated: return to == S::AwaitingDocuments || to == S::DocumentsFulfilled;
    case S::AwaitingDocuments: return to == S::DocumentsFulfilled;
    case S::DocumentsFulfilled: return to == S::AwaitingDocuments || to == S::ConsentGranted;
    case S::ConsentGranted: return to == S::Collected;
    case S::Collected: return to == S::Completed;
    default: return false;
    }
}

RequestState state_from(const std::string& s)
{
    return parse_state(s);
}

} // namespace

std::vector<Violation> check_invariants(const std::vector<std::string>& trace)
{
    std::vector<Violation> out;
    std::vector<json> events;
    events.reserve(trace.size());
    for (const auto& line : trace) {
        try {
            events.push_back(json::parse(line));
        } catch (const json::exception& e) {
            out.push_back({"malformed", e.what()});
        }
    }

    // Safety and per-node append-only order.
    std::map<std::uint64_t, json> canonical;
    std::map<std::string, std::uint64_t> node_height;
    for (const auto& e : events) {
        const std::string type = e.value("type", "");
        if (type == "restart") {
            node_height[e["node"]] = e.value("height", 0);
            if (e.value("lost", 0) > 0)
                out.push_back({"durability", e["node"].get<std::string>() + " lost " +
                                                 std::to_string(e["lost"].get<std::uint64_t>()) +
                                                 " committed blocks across a restart"});
        }
        if (type != "commit")
            continue;
        const std::string node = e["node"];
        const std::uint64_t h = e["height"];
        auto [it, fresh] = canonical.emplace(h, e);
        if (!fresh && it->second["hash"] != e["hash"])
            out.push_back({"safety", "height " + std::to_string(h) + " committed as " +
                                         it->second["hash"].get<std::string>() + " and " +
                                         e["hash"].get<std::string>()});
        auto nh = node_height.find(node);
        if (nh != node_height.end() && h != nh->second + 1)
            out.push_back({"durability", node + " committed height " + std::to_string(h) + " after " +
                                             std::to_string(nh->second)});
        node_height[node] = h;
    }
    for (auto it = canonical.begin(); it != canonical.end(); ++it) {
        auto next = std::next(it);
        if (next != canonical.end() && next->first == it->first + 1 && next->second["parent"] != it->second["hash"])
            out.push_back({"safety", "height " + std::to_string(next->first) + " does not link to its parent"});
    }

    // Replicated chains agree once the run settles.
    std::optional<std::pair<std::uint64_t, std::string>> agreed;
    for (const auto& e : events) {
        if (e.value("type", "") != "final" || !e.value("up", false))
            continue;
        std::pair<std::uint64_t, std::string> tip{e["height"], e["tip"]};
        if (!agreed)
            agreed = tip;
        else if (*agreed != tip)
            out.push_back({"replication", e["node"].get<std::string>() + " ended at height " +
                                              std::to_string(tip.first) + ", others at " +
                                              std::to_string(agreed->first)});
    }

    // Request state machine, consent before grant, grant minimality.
    struct Track {
        std::optional<RequestState> state;
        bool fulfilled_seen = false;
        std::set<std::string> consented;
        bool consent = false;
    };
    std::map<std::string, Track> requests;
    struct GrantInfo {
        std::string grantee;
        std::set<std::string> docs;
        std::uint64_t height;
    };
    std::map<std::string, GrantInfo> grants;
    for (const auto& [h, e] : canonical) {
        const auto& txs = e["txs"];
        for (std::size_t i = 0; i < txs.size(); ++i) {
            const auto& tx = txs[i];
            const std::string kind = tx["kind"];
            const auto& d = tx["details"];
            if (d.is_null())
                continue;
            if (kind == "ConsentGranted") {
                auto& r = requests[d["request"]];
                if (!r.fulfilled_seen || r.state != RequestState::DocumentsFulfilled)
                    out.push_back({"ordering", "ConsentGranted for " + d["request"].get<std::string>() +
                                                   " at height " + std::to_string(h) + " without fulfillment"});
                r.consent = true;
                r.consented.clear();
                for (const auto& x : d["doc_ids"])
                    r.consented.insert(x.get<std::string>());
            } else if (kind == "AccessGranted") {
                auto& r = requests[d["request"]];
                if (!r.consent || r.state != RequestState::ConsentGranted)
                    out.push_back({"ordering", "AccessGranted for " + d["request"].get<std::string>() +
                                                   " at height " + std::to_string(h) + " before ConsentGranted"});
                GrantInfo g{d["grantee"], {}, h};
                for (const auto& x : d["doc_ids"])
                    g.docs.insert(x.get<std::string>());
                if (g.docs != r.consented)
                    out.push_back({"grant_minimality", "grant " + d["grant_id"].get<std::string>() +
                                                           " differs from the consented documents"});
                grants[d["grant_id"]] = std::move(g);
            } else if (kind == "DocumentCollected") {
                const auto& r = requests[d["request"]];
                if (r.state != RequestState::ConsentGranted)
                    out.push_back({"ordering", "DocumentCollected for " + d["request"].get<std::string>() +
                                                   " outside ConsentGranted"});
            }
            for (const auto& t : e["transitions"]) {
                if (t.value("tx", std::uint64_t{0}) != i)
                    continue;
                auto& r = requests[t["request"]];
                const RequestState to = state_from(t["to"]);
                if (!edge_allowed(r.state, to))
                    out.push_back({"ordering", "request " + t["request"].get<std::string>() + " moved " +
                                                   (r.state ? std::string(state_name(*r.state)) : "nowhere") +
                                                   " -> " + std::string(state_name(to)) + " at height " +
                                                   std::to_string(h)});
                if (to == RequestState::DocumentsFulfilled)
                    r.fulfilled_seen = true;
                r.state = to;
            }
        }
    }

    // Every allowed read is backed by a grant the reading node had committed.
    std::map<std::string, std::uint64_t> seen_height;
    for (const auto& e : events) {
        const std::string type = e.value("type", "");
        if (type == "commit")
            seen_height[e["node"]] = e["height"];
        else if (type == "restart")
            seen_height[e["node"]] = e.value("height", 0);
        if (type != "read" || e.value("outcome", "") != "Allowed")
            continue;
        const std::string who = e["requester"];
        const std::string doc = e["doc_id"];
        const auto grant = e["grant"].is_string() ? grants.find(e["grant"].get<std::string>()) : grants.end();
        if (grant == grants.end())
            out.push_back({"default_deny", "read of " + doc + " by " + who + " with no committed grant"});
        else if (grant->second.grantee != who || !grant->second.docs.count(doc))
            out.push_back({"default_deny", "read of " + doc + " by " + who + " outside its grant"});
        else if (seen_height[e["node"]] < grant->second.height)
            out.push_back({"default_deny", "read of " + doc + " served before the grant committed"});
    }
    return out;
}

std::string trace_text(const std::vector<std::string>& trace)
{
    std::string out;
    for (const auto& l : trace) {
        out += l;
        out += '\n';
    }
    return out;
}

std::vector<std::string> read_trace(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::Io, "cannot read " + path.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty())
            out.push_back(line);
    return out;
}

} // namespace civic::sim
