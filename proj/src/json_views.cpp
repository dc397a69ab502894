#include "civic/json_views.hpp"

namespace civic::views {

namespace {

json time_or_null(std::uint64_t t)
{
    return t == kForever ? json(nullptr) : json(t);
}

json tx_details(const Transaction& tx, const Digest& id)
{
    switch (tx.kind) {
    case TxKind::DocumentIssued: return document_json(DocumentRecord::decode(tx.payload));
    case TxKind::ServiceRegistered: return contract_json(ServiceContract::decode(tx.payload));
    case TxKind::RequestInitiated: {
        const auto r = RequestInitiation::decode(tx.payload);
        return {{"request", to_hex(id)},
                {"service_id", r.service_id},
                {"citizen", r.citizen_id},
                {"household", r.household},
                {"created_at", r.created_at}};
    }
    case TxKind::ConsentGranted: {
        const auto r = ConsentRecord::decode(tx.payload);
        return {{"request", to_hex(r.request_id)}, {"doc_ids", digests_json(r.doc_ids)}, {"granted_at", r.granted_at}};
    }
    case TxKind::AccessGranted: {
        const auto g = AccessGrant::decode(tx.payload);
        return {{"grant_id", to_hex(g.grant_id)},   {"request", to_hex(g.request_id)},
                {"grantee", g.grantee},             {"doc_ids", digests_json(g.doc_ids)},
                {"granted_at", g.granted_at},       {"expires_at", g.expires_at}};
    }
    case TxKind::DocumentCollected: {
        const auto r = CollectionRecord::decode(tx.payload);
        return {{"request", to_hex(r.request_id)}, {"doc_ids", digests_json(r.doc_ids)}, {"collected_at", r.collected_at}};
    }
    case TxKind::RequestCompleted: {
        const auto r = CompletionRecord::decode(tx.payload);
        return {{"request", to_hex(r.request_id)},
                {"outcome", r.outcome == Outcome::Completed ? "Completed" : "Rejected"},
                {"reason", r.reason},
                {"at", r.at}};
    }
    case TxKind::EKeyIssued: return credential_json(EKeyCredential::decode(tx.payload));
    case TxKind::EKeyRevoked: {
        const auto r = EKeyRevocation::decode(tx.payload);
        return {{"credential_id", to_hex(r.credential_id)}, {"citizen", r.citizen_id}, {"revoked_at", r.revoked_at}};
    }
    }
    return nullptr;
}

} // namespace

json digests_json(const std::vector<Digest>& ids)
{
    json out = json::array();
    for (const auto& d : ids)
        out.push_back(to_hex(d));
    return out;
}

std::vector<Digest> digests_from_json(const json& j)
{
    std::vector<Digest> out;
    for (const auto& d : j)
        out.push_back(digest_from_hex(d.get<std::string>()));
    return out;
}

json tx_json(const Transaction& tx)
{
    const Digest id = tx.id();
    json details;
    try {
        details = tx_details(tx, id);
    } catch (const Error&) {
        details = nullptr;
    }
    return {{"kind", std::string(kind_name(tx.kind))},
            {"id", to_hex(id)},
            {"author", to_hex(tx.author)},
            {"nonce", tx.nonce},
            {"details", details}};
}

json header_json(const Block& block)
{
    return {{"height", block.header.height},
            {"hash", to_hex(block.block_hash)},
            {"parent", to_hex(block.header.parent_hash)},
            {"tx_root", to_hex(block.header.tx_root)},
            {"timestamp", block.header.timestamp},
            {"proposer", block.header.proposer},
            {"tx_count", block.transactions.size()}};
}

json block_json(const Block& block)
{
    json j = header_json(block);
    json txs = json::array();
    for (const auto& tx : block.transactions)
        txs.push_back(tx_json(tx));
    j["transactions"] = std::move(txs);
    json votes = json::array();
    for (const auto& v : block.commit_votes)
        votes.push_back({{"validator", v.validator}, {"round", v.round}, {"signature", to_hex(v.signature)}});
    j["commit_votes"] = std::move(votes);
    j["raw"] = to_hex(block.encode());
    return j;
}

json document_json(const DocumentRecord& r)
{
    return {{"doc_id", to_hex(r.doc_id)},
            {"doc_type", r.doc_type},
            {"subject", r.subject},
            {"issuer", r.issuer},
            {"content_digest", to_hex(r.content_digest)},
            {"issued_at", r.issued_at},
            {"valid_until", time_or_null(r.valid_until)},
            {"supersedes", r.supersedes ? json(to_hex(*r.supersedes)) : json(nullptr)}};
}

json document_view_json(const registry::DocumentView& v)
{
    json j = document_json(v.record);
    j["height"] = v.height;
    j["superseded"] = v.superseded;
    j["expired"] = v.expired;
    return j;
}

json fulfillment_json(const Fulfillment& f)
{
    json matched = json::array();
    for (const auto& [type, ids] : f.matched)
        matched.push_back({{"doc_type", type}, {"doc_ids", digests_json(ids)}});
    return {{"matched", matched}, {"missing", f.missing}, {"complete", f.complete()}};
}

json request_json(const ServiceRequest& r)
{
    json history = json::array();
    for (const auto& t : r.history)
        history.push_back({{"state", std::string(state_name(t.to))},
                           {"height", t.height},
                           {"tx_id", to_hex(t.tx_id)},
                           {"at", t.at}});
    return {{"request_id", to_hex(r.request_id)},
            {"service_id", r.service_id},
            {"citizen", r.citizen},
            {"household", r.household},
            {"state", std::string(state_name(r.state))},
            {"fulfillment", fulfillment_json(r.fulfillment)},
            {"consented", digests_json(r.consented)},
            {"grant_id", r.grant_id ? json(to_hex(*r.grant_id)) : json(nullptr)},
            {"created_at", r.created_at},
            {"updated_at", r.updated_at},
            {"completed_at", r.completed_at ? json(*r.completed_at) : json(nullptr)},
            {"history", history}};
}

json contract_json(const ServiceContract& c)
{
    json lines = json::array();
    for (const auto& l : c.required) {
        json line = {{"doc_type", l.doc_type},
                     {"count", l.count},
                     {"freshness", std::string(freshness_name(l.freshness))},
                     {"scope", std::string(scope_name(l.scope))}};
        if (l.freshness == Freshness::MaxAge)
            line["max_age_ms"] = l.max_age_ms;
        lines.push_back(std::move(line));
    }
    return {{"service_id", c.service_id}, {"provider", c.provider}, {"description", c.description}, {"required", lines}};
}

ServiceContract contract_from_json(const json& j)
{
    try {
        ServiceContract c;
        c.service_id = j.at("service_id").get<std::string>();
        c.provider = j.at("provider").get<std::string>();
        c.description = j.value("description", "");
        for (const auto& l : j.at("required")) {
            RequirementLine line;
            line.doc_type = l.at("doc_type").get<std::string>();
            line.count = l.value("count", std::uint64_t{1});
            line.freshness = parse_freshness(l.value("freshness", "valid_at_request"));
            line.max_age_ms = l.value("max_age_ms", std::uint64_t{0});
            line.scope = parse_scope(l.value("scope", "applicant"));
            c.required.push_back(std::move(line));
        }
        return c;
    } catch (const json::exception& e) {
        throw Error(Errc::Malformed, std::string("contract json: ") + e.what());
    }
}

json audit_json(const registry::AuditEntry& e)
{
    return {{"ts", e.ts}, {"requester", e.requester}, {"doc_id", to_hex(e.doc_id)}, {"outcome", e.outcome}};
}

json credential_json(const EKeyCredential& c)
{
    return {{"credential_id", to_hex(c.id())},
            {"citizen", c.citizen_id},
            {"public_key", to_hex(c.public_key)},
            {"issued_at", c.issued_at},
            {"expires_at", c.expires_at}};
}

} // namespace civic::views
