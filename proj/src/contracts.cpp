#include "civic/contracts.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>

#include "civic/consortium.hpp"

namespace civic::contracts {

namespace {

bool newer(const DocumentRecord& a, const DocumentRecord& b)
{
    if (a.issued_at != b.issued_at)
        return a.issued_at > b.issued_at;
    return a.doc_id < b.doc_id;
}

bool fresh(const DocumentRecord& d, const RequirementLine& line, std::uint64_t now)
{
    if (now > d.valid_until)
        return false;
    if (line.freshness == Freshness::MaxAge) {
        const std::uint64_t age = now >= d.issued_at ? now - d.issued_at : 0;
        return age <= line.max_age_ms;
    }
    return true;
}

const ServiceRequest& find_request(const WorldState& view, const Digest& id)
{
    const ServiceRequest* r = view.request(id);
    if (!r)
        throw Error(Errc::NotFound, "request " + to_hex(id));
    return *r;
}

ServiceRequest& find_request(WorldState& state, const Digest& id)
{
    auto it = state.requests.find(id);
    if (it == state.requests.end())
        throw Error(Errc::NotFound, "request " + to_hex(id));
    return it->second;
}

const ServiceContract& find_contract(const WorldState& view, std::string_view service_id)
{
    const ServiceContract* c = view.contract(service_id);
    if (!c)
        throw Error(Errc::UnknownService, std::string(service_id));
    return *c;
}

void require_provider(const WorldState& view, const ServiceContract& contract, const PublicKey& key)
{
    const Organization* org = view.config().organization(contract.provider);
    if (!org || org->key != key)
        throw Error(Errc::NotProvider, "signer is not the provider of " + contract.service_id);
}

bool is_provider(const WorldState& view, const ServiceContract& contract, const PublicKey& key)
{
    const Organization* org = view.config().organization(contract.provider);
    return org && org->key == key;
}

void require_owner(const WorldState& view, const ServiceRequest& req, const PublicKey& key, std::uint64_t now)
{
    if (view.active_credential(key, req.citizen, now))
        return;
    if (!view.credential_for_key(key, now))
        throw Error(Errc::Unauthenticated, "no active eKey for signer");
    throw Error(Errc::NotRequestOwner, req.citizen);
}

void require_state(const ServiceRequest& req, RequestState expected)
{
    if (req.state != expected)
        throw Error(Errc::WrongState, std::string(state_name(req.state)) + ", expected " +
                                          std::string(state_name(expected)));
}

void move_to(ServiceRequest& req, RequestState to, const TxContext& ctx)
{
    req.state = to;
    req.updated_at = ctx.now;
    req.history.push_back({to, ctx.height, ctx.tx_id, ctx.now});
}

void refresh(ServiceRequest& req, const ServiceContract& contract, const WorldState& view, const TxContext& ctx)
{
    req.fulfillment = evaluate_fulfillment(req, contract, view, ctx.now);
    req.updated_at = ctx.now;
    const RequestState next =
        req.fulfillment.complete() ? RequestState::DocumentsFulfilled : RequestState::AwaitingDocuments;
    if (next != req.state)
        move_to(req, next, ctx);
}

void check_contract(const ServiceContract& c, const WorldState& view)
{
    if (c.service_id.empty())
        throw Error(Errc::Malformed, "service id is empty");
    if (c.required.empty())
        throw Error(Errc::EmptyRequiredList, c.service_id);
    for (const auto& line : c.required) {
        if (line.doc_type.empty() || line.count == 0)
            throw Error(Errc::Malformed, "requirement line needs a doc_type and a positive count");
        if (line.freshness == Freshness::MaxAge && line.max_age_ms == 0)
            throw Error(Errc::Malformed, "max_age requirement needs a positive bound");
    }
    const Organization* org = view.config().organization(c.provider);
    if (!org || !org->provider)
        throw Error(Errc::UnregisteredProvider, c.provider);
    if (const ServiceContract* existing = view.contract(c.service_id); existing && existing->provider != c.provider)
        throw Error(Errc::ServiceConflict, c.service_id + " belongs to " + existing->provider);
}

} // namespace

ServiceContract housing_contract(const std::string& provider)
{
    ServiceContract c;
    c.service_id = "housing";
    c.provider = provider;
    c.description = "Housing service application";
    c.required = {
        {"IdentityCard", 2, Freshness::ValidAtRequest, 0, HolderScope::Household},
        {"PropertyCertificate", 1, Freshness::ValidAtRequest, 0, HolderScope::Applicant},
        {"BenefitReport", 1, Freshness::ValidAtRequest, 0, HolderScope::Applicant},
        {"IncomeLetter", 1, Freshness::MaxAge, 30 * kMsPerDay, HolderScope::Applicant},
        {"BirthCertificate", 1, Freshness::ValidAtRequest, 0, HolderScope::Dependents},
        {"Passport", 2, Freshness::ValidAtRequest, 0, HolderScope::Household},
    };
    return c;
}

std::vector<ServiceContract> load_contracts(const std::filesystem::path& path)
{
    YAML::Node root;
    try {
        root = YAML::LoadFile(path.string());
    } catch (const YAML::Exception& e) {
        throw Error(Errc::InvalidConfig, path.string() + ": " + e.what());
    }
    std::vector<ServiceContract> out;
    try {
        for (const auto& s : root["services"]) {
            ServiceContract c;
            c.service_id = s["service_id"].as<std::string>();
            c.provider = s["provider"].as<std::string>();
            c.description = s["description"] ? s["description"].as<std::string>() : "";
            for (const auto& r : s["required"]) {
                RequirementLine line;
                line.doc_type = r["doc_type"].as<std::string>();
                line.count = r["count"] ? r["count"].as<std::uint64_t>() : 1;
                line.freshness = parse_freshness(r["freshness"] ? r["freshness"].as<std::string>() : "valid_at_request");
                if (r["max_age_days"])
                    line.max_age_ms = r["max_age_days"].as<std::uint64_t>() * kMsPerDay;
                else if (r["max_age_ms"])
                    line.max_age_ms = r["max_age_ms"].as<std::uint64_t>();
                line.scope = parse_scope(r["scope"] ? r["scope"].as<std::string>() : "applicant");
                c.required.push_back(std::move(line));
            }
            out.push_back(std::move(c));
        }
    } catch (const YAML::Exception& e) {
        throw Error(Errc::InvalidConfig, path.string() + ": " + e.what());
    }
    return out;
}

void save_contracts(const std::vector<ServiceContract>& contracts, const std::filesystem::path& path)
{
    YAML::Emitter out;
    out << YAML::BeginMap << YAML::Key << "services" << YAML::Value << YAML::BeginSeq;
    for (const auto& c : contracts) {
        out << YAML::BeginMap;
        out << YAML::Key << "service_id" << YAML::Value << c.service_id;
        out << YAML::Key << "provider" << YAML::Value << c.provider;
        out << YAML::Key << "description" << YAML::Value << c.description;
        out << YAML::Key << "required" << YAML::Value << YAML::BeginSeq;
        for (const auto& line : c.required) {
            out << YAML::BeginMap;
            out << YAML::Key << "doc_type" << YAML::Value << line.doc_type;
            out << YAML::Key << "count" << YAML::Value << line.count;
            out << YAML::Key << "freshness" << YAML::Value << std::string(freshness_name(line.freshness));
            if (line.freshness == Freshness::MaxAge)
                out << YAML::Key << "max_age_ms" << YAML::Value << line.max_age_ms;
            out << YAML::Key << "scope" << YAML::Value << std::string(scope_name(line.scope));
            out << YAML::EndMap;
        }
        out << YAML::EndSeq << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;
    std::ofstream f(path);
    if (!f)
        throw Error(Errc::Io, "cannot write " + path.string());
    f << out.c_str() << '\n';
}

Transaction register_service(const KeyPair& provider, const ServiceContract& contract, const WorldState& view,
                             std::uint64_t nonce)
{
    check_contract(contract, view);
    const Organization* org = view.config().organization(contract.provider);
    if (org->key != provider.public_key())
        throw Error(Errc::UnregisteredProvider, "signer is not organization " + contract.provider);
    return sign_transaction(TxKind::ServiceRegistered, contract.encode(), provider, nonce);
}

std::vector<std::string> scope_subjects(const ServiceRequest& request, HolderScope scope)
{
    switch (scope) {
    case HolderScope::Applicant: return {request.citizen};
    case HolderScope::Dependents: return request.household;
    case HolderScope::Household: {
        std::vector<std::string> all{request.citizen};
        all.insert(all.end(), request.household.begin(), request.household.end());
        return all;
    }
    }
    return {};
}

Fulfillment evaluate_fulfillment(const ServiceRequest& request, const ServiceContract& contract,
                                 const WorldState& view, std::uint64_t now)
{
    Fulfillment f;
    for (const auto& line : contract.required) {
        std::vector<const DocumentRecord*> picks;
        for (const auto& subject : scope_subjects(request, line.scope)) {
            auto it = view.documents_by_subject.find(subject);
            if (it == view.documents_by_subject.end())
                continue;
            const DocumentRecord* best = nullptr;
            for (const Digest& id : it->second) {
                const DocumentEntry& e = view.documents.at(id);
                if (e.record.doc_type != line.doc_type || e.superseded_by || !fresh(e.record, line, now))
                    continue;
                if (!best || newer(e.record, *best))
                    best = &e.record;
            }
            if (best)
                picks.push_back(best);
        }
        std::sort(picks.begin(), picks.end(), [](auto* a, auto* b) { return newer(*a, *b); });
        if (picks.size() > line.count)
            picks.resize(line.count);
        std::vector<Digest> ids;
        for (const auto* d : picks)
            ids.push_back(d->doc_id);
        if (ids.size() < line.count)
            f.missing.push_back(line.doc_type);
        f.matched.emplace_back(line.doc_type, std::move(ids));
    }
    return f;
}

Transaction initiate_request(const KeyPair& citizen_key, const identity::CitizenIdentity& who,
                             const std::string& service_id, const std::vector<std::string>& household,
                             std::uint64_t now, const WorldState& view, std::uint64_t nonce)
{
    find_contract(view, service_id);
    if (who.public_key != citizen_key.public_key() || !view.active_credential(who.public_key, who.citizen_id, now))
        throw Error(Errc::Unauthenticated, who.citizen_id);
    RequestInitiation init{service_id, who.citizen_id, household, now};
    return sign_transaction(TxKind::RequestInitiated, init.encode(), citizen_key, nonce);
}

Transaction grant_consent(const KeyPair& citizen_key, const identity::CitizenIdentity& who,
                          const Digest& request_id, const WorldState& view, std::uint64_t now,
                          std::uint64_t nonce)
{
    const ServiceRequest& req = find_request(view, request_id);
    if (who.citizen_id != req.citizen)
        throw Error(Errc::NotRequestOwner, req.citizen);
    require_state(req, RequestState::DocumentsFulfilled);
    const Fulfillment f = evaluate_fulfillment(req, find_contract(view, req.service_id), view, now);
    if (!f.complete())
        throw Error(Errc::StaleFulfillment, "fulfillment no longer complete");
    ConsentRecord consent{request_id, f.doc_ids(), now};
    return sign_transaction(TxKind::ConsentGranted, consent.encode(), citizen_key, nonce);
}

Transaction authorize_collection(const KeyPair& provider, const Digest& request_id, const WorldState& view,
                                 std::uint64_t now, std::uint64_t nonce)
{
    const ServiceRequest& req = find_request(view, request_id);
    require_state(req, RequestState::ConsentGranted);
    if (req.grant_id)
        throw Error(Errc::WrongState, "collection already authorized");
    const ServiceContract& contract = find_contract(view, req.service_id);
    require_provider(view, contract, provider.public_key());

    AccessGrant g;
    g.request_id = request_id;
    g.grantee = contract.provider;
    g.doc_ids = req.consented;
    g.granted_at = now;
    g.expires_at = now + view.config().params.collection_window_ms;
    g.grant_id = g.compute_id();
    return sign_transaction(TxKind::AccessGranted, g.encode(), provider, nonce);
}

Transaction record_collection(const KeyPair& provider, const Digest& request_id, const WorldState& view,
                              std::uint64_t now, std::uint64_t nonce)
{
    const ServiceRequest& req = find_request(view, request_id);
    require_state(req, RequestState::ConsentGranted);
    if (!req.grant_id)
        throw Error(Errc::WrongState, "collection not yet authorized");
    require_provider(view, find_contract(view, req.service_id), provider.public_key());
    CollectionRecord rec{request_id, req.consented, now};
    return sign_transaction(TxKind::DocumentCollected, rec.encode(), provider, nonce);
}

Transaction complete_request(const KeyPair& provider, const Digest& request_id, const WorldState& view,
                             std::uint64_t now, std::uint64_t nonce)
{
    const ServiceRequest& req = find_request(view, request_id);
    require_provider(view, find_contract(view, req.service_id), provider.public_key());
    require_state(req, RequestState::Collected);
    CompletionRecord rec{request_id, Outcome::Completed, "", now};
    return sign_transaction(TxKind::RequestCompleted, rec.encode(), provider, nonce);
}

Transaction reject_request(const KeyPair& author, const Digest& request_id, const std::string& reason,
                           const WorldState& view, std::uint64_t now, std::uint64_t nonce)
{
    const ServiceRequest& req = find_request(view, request_id);
    if (!is_provider(view, find_contract(view, req.service_id), author.public_key()))
        require_owner(view, req, author.public_key(), now);
    if (is_terminal(req.state))
        throw Error(Errc::WrongState, std::string(state_name(req.state)));
    CompletionRecord rec{request_id, Outcome::Rejected, reason, now};
    return sign_transaction(TxKind::RequestCompleted, rec.encode(), author, nonce);
}

void apply_service_registered(WorldState& state, const TxContext& ctx)
{
    ServiceContract c = ServiceContract::decode(ctx.tx.payload);
    check_contract(c, state);
    if (state.config().organization(c.provider)->key != ctx.tx.author)
        throw Error(Errc::UnregisteredProvider, "signer is not organization " + c.provider);
    const std::string id = c.service_id;
    state.contracts.insert_or_assign(id, std::move(c));
}

void apply_request_initiated(WorldState& state, const TxContext& ctx)
{
    const RequestInitiation init = RequestInitiation::decode(ctx.tx.payload);
    const ServiceContract& contract = find_contract(state, init.service_id);
    if (!state.active_credential(ctx.tx.author, init.citizen_id, ctx.now))
        throw Error(Errc::Unauthenticated, init.citizen_id);
    std::set<std::string> members{init.citizen_id};
    for (const auto& m : init.household)
        if (m.empty() || !members.insert(m).second)
            throw Error(Errc::Malformed, "household lists a member twice or an empty id");

    ServiceRequest req;
    req.request_id = ctx.tx_id;
    req.service_id = init.service_id;
    req.citizen = init.citizen_id;
    req.household = init.household;
    req.created_at = ctx.now;
    req.history.push_back({RequestState::Initiated, ctx.height, ctx.tx_id, ctx.now});
    refresh(req, contract, state, ctx);
    for (const auto& m : members)
        state.requests_by_member[m].insert(req.request_id);
    state.requests.emplace(req.request_id, std::move(req));
}

void apply_consent_granted(WorldState& state, const TxContext& ctx)
{
    const ConsentRecord consent = ConsentRecord::decode(ctx.tx.payload);
    ServiceRequest& req = find_request(state, consent.request_id);
    require_owner(state, req, ctx.tx.author, ctx.now);
    require_state(req, RequestState::DocumentsFulfilled);
    Fulfillment f = evaluate_fulfillment(req, find_contract(state, req.service_id), state, ctx.now);
    if (!f.complete() || f.doc_ids() != consent.doc_ids)
        throw Error(Errc::StaleFulfillment, "consented documents differ from the fulfillment at commit time");
    req.fulfillment = std::move(f);
    req.consented = consent.doc_ids;
    move_to(req, RequestState::ConsentGranted, ctx);
}

void apply_access_granted(WorldState& state, const TxContext& ctx)
{
    AccessGrant g = AccessGrant::decode(ctx.tx.payload);
    ServiceRequest& req = find_request(state, g.request_id);
    const ServiceContract& contract = find_contract(state, req.service_id);
    require_provider(state, contract, ctx.tx.author);
    require_state(req, RequestState::ConsentGranted);
    if (req.grant_id)
        throw Error(Errc::WrongState, "collection already authorized");
    if (g.grantee != contract.provider || g.doc_ids != req.consented)
        throw Error(Errc::AdmissionFailed, "grant must name the provider and exactly the consented documents");
    if (g.compute_id() != g.grant_id)
        throw Error(Errc::Malformed, "grant_id does not match grant contents");
    if (g.expires_at != g.granted_at + state.config().params.collection_window_ms)
        throw Error(Errc::Malformed, "grant expiry does not match the collection window");
    if (state.grants.count(g.grant_id))
        throw Error(Errc::DuplicateTx, "grant " + to_hex(g.grant_id));
    req.grant_id = g.grant_id;
    req.updated_at = ctx.now;
    const Digest id = g.grant_id;
    state.grants.emplace(id, GrantEntry{std::move(g), ctx.height});
}

void apply_document_collected(WorldState& state, const TxContext& ctx)
{
    const CollectionRecord rec = CollectionRecord::decode(ctx.tx.payload);
    ServiceRequest& req = find_request(state, rec.request_id);
    require_provider(state, find_contract(state, req.service_id), ctx.tx.author);
    require_state(req, RequestState::ConsentGranted);
    if (!req.grant_id)
        throw Error(Errc::WrongState, "collection not yet authorized");
    if (rec.doc_ids != req.consented)
        throw Error(Errc::AdmissionFailed, "collected documents differ from the consented set");
    move_to(req, RequestState::Collected, ctx);
}

void apply_request_completed(WorldState& state, const TxContext& ctx)
{
    const CompletionRecord rec = CompletionRecord::decode(ctx.tx.payload);
    ServiceRequest& req = find_request(state, rec.request_id);
    const ServiceContract& contract = find_contract(state, req.service_id);
    if (rec.outcome == Outcome::Completed) {
        require_provider(state, contract, ctx.tx.author);
        require_state(req, RequestState::Collected);
    } else {
        if (!is_provider(state, contract, ctx.tx.author))
            require_owner(state, req, ctx.tx.author, ctx.now);
        if (is_terminal(req.state))
            throw Error(Errc::WrongState, std::string(state_name(req.state)));
    }
    req.completed_at = ctx.now;
    move_to(req, rec.outcome == Outcome::Completed ? RequestState::Completed : RequestState::Rejected, ctx);
}

void on_document_issued(WorldState& state, const std::string& subject, const TxContext& ctx)
{
    auto it = state.requests_by_member.find(subject);
    if (it == state.requests_by_member.end())
        return;
    for (const Digest& id : it->second) {
        ServiceRequest& req = state.requests.at(id);
        if (req.state != RequestState::AwaitingDocuments && req.state != RequestState::DocumentsFulfilled)
            continue;
        const ServiceContract* contract = state.contract(req.service_id);
        if (contract)
            refresh(req, *contract, state, ctx);
    }
}

} // namespace civic::contracts
