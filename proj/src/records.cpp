#include "civic/records.hpp"

#include "civic/error.hpp"

namespace civic {

namespace {

void put_digests(Encoder& e, const std::vector<Digest>& ds)
{
    e.count(ds.size());
    for (const auto& d : ds)
        e.bytes(d);
}

std::vector<Digest> get_digests(Decoder& d)
{
    std::vector<Digest> out(d.count());
    for (auto& x : out)
        x = d.fixed<32>();
    return out;
}

} // namespace

Bytes EKeyCredential::signing_bytes() const
{
    Encoder e;
    e.str(citizen_id).bytes(public_key).u64(issued_at).u64(expires_at);
    return std::move(e).take();
}

Bytes EKeyCredential::encode() const
{
    Encoder e;
    e.str(citizen_id).bytes(public_key).u64(issued_at).u64(expires_at).bytes(authority_signature);
    return std::move(e).take();
}

EKeyCredential EKeyCredential::decode(ByteView in)
{
    Decoder d(in);
    EKeyCredential c;
    c.citizen_id = d.str();
    c.public_key = d.fixed<32>();
    c.issued_at = d.u64();
    c.expires_at = d.u64();
    c.authority_signature = d.bytes();
    d.expect_done();
    return c;
}

Bytes EKeyRevocation::encode() const
{
    Encoder e;
    e.bytes(credential_id).str(citizen_id).u64(revoked_at);
    return std::move(e).take();
}

EKeyRevocation EKeyRevocation::decode(ByteView in)
{
    Decoder d(in);
    EKeyRevocation r;
    r.credential_id = d.fixed<32>();
    r.citizen_id = d.str();
    r.revoked_at = d.u64();
    d.expect_done();
    return r;
}

Bytes DocumentRecord::id_bytes() const
{
    Encoder e;
    e.str(doc_type).str(subject).str(issuer).bytes(content_digest).u64(issued_at).u64(valid_until);
    e.u8(supersedes ? 1 : 0);
    if (supersedes)
        e.bytes(*supersedes);
    return std::move(e).take();
}

Bytes DocumentRecord::encode() const
{
    Encoder e;
    e.bytes(doc_id).str(doc_type).str(subject).str(issuer).bytes(content_digest).u64(issued_at).u64(valid_until);
    e.u8(supersedes ? 1 : 0);
    if (supersedes)
        e.bytes(*supersedes);
    return std::move(e).take();
}

DocumentRecord DocumentRecord::decode(ByteView in)
{
    Decoder d(in);
    DocumentRecord r;
    r.doc_id = d.fixed<32>();
    r.doc_type = d.str();
    r.subject = d.str();
    r.issuer = d.str();
    r.content_digest = d.fixed<32>();
    r.issued_at = d.u64();
    r.valid_until = d.u64();
    const auto flag = d.u8();
    if (flag > 1)
        throw Error(Errc::Malformed, "bad supersedes flag");
    if (flag == 1)
        r.supersedes = d.fixed<32>();
    d.expect_done();
    return r;
}

Bytes AccessGrant::id_bytes() const
{
    Encoder e;
    e.bytes(request_id).str(grantee);
    put_digests(e, doc_ids);
    e.u64(granted_at).u64(expires_at);
    return std::move(e).take();
}

Bytes AccessGrant::encode() const
{
    Encoder e;
    e.bytes(grant_id).bytes(request_id).str(grantee);
    put_digests(e, doc_ids);
    e.u64(granted_at).u64(expires_at);
    return std::move(e).take();
}

AccessGrant AccessGrant::decode(ByteView in)
{
    Decoder d(in);
    AccessGrant g;
    g.grant_id = d.fixed<32>();
    g.request_id = d.fixed<32>();
    g.grantee = d.str();
    g.doc_ids = get_digests(d);
    g.granted_at = d.u64();
    g.expires_at = d.u64();
    d.expect_done();
    return g;
}

Bytes ServiceContract::encode() const
{
    Encoder e;
    e.str(service_id).str(provider).count(required.size());
    for (const auto& line : required) {
        e.str(line.doc_type).u64(line.count).u8(static_cast<std::uint8_t>(line.freshness));
        e.u64(line.max_age_ms).u8(static_cast<std::uint8_t>(line.scope));
    }
    e.str(description);
    return std::move(e).take();
}

ServiceContract ServiceContract::decode(ByteView in)
{
    Decoder d(in);
    ServiceContract c;
    c.service_id = d.str();
    c.provider = d.str();
    c.required.resize(d.count(4096));
    for (auto& line : c.required) {
        line.doc_type = d.str();
        line.count = d.u64();
        const auto f = d.u8();
        if (f > 1)
            throw Error(Errc::Malformed, "bad freshness tag");
        line.freshness = static_cast<Freshness>(f);
        line.max_age_ms = d.u64();
        const auto s = d.u8();
        if (s > 2)
            throw Error(Errc::Malformed, "bad scope tag");
        line.scope = static_cast<HolderScope>(s);
    }
    c.description = d.str();
    d.expect_done();
    return c;
}

Bytes RequestInitiation::encode() const
{
    Encoder e;
    e.str(service_id).str(citizen_id).count(household.size());
    for (const auto& m : household)
        e.str(m);
    e.u64(created_at);
    return std::move(e).take();
}

RequestInitiation RequestInitiation::decode(ByteView in)
{
    Decoder d(in);
    RequestInitiation r;
    r.service_id = d.str();
    r.citizen_id = d.str();
    r.household.resize(d.count(256));
    for (auto& m : r.household)
        m = d.str();
    r.created_at = d.u64();
    d.expect_done();
    return r;
}

Bytes ConsentRecord::encode() const
{
    Encoder e;
    e.bytes(request_id);
    put_digests(e, doc_ids);
    e.u64(granted_at);
    return std::move(e).take();
}

ConsentRecord ConsentRecord::decode(ByteView in)
{
    Decoder d(in);
    ConsentRecord r;
    r.request_id = d.fixed<32>();
    r.doc_ids = get_digests(d);
    r.granted_at = d.u64();
    d.expect_done();
    return r;
}

Bytes CollectionRecord::encode() const
{
    Encoder e;
    e.bytes(request_id);
    put_digests(e, doc_ids);
    e.u64(collected_at);
    return std::move(e).take();
}

CollectionRecord CollectionRecord::decode(ByteView in)
{
    Decoder d(in);
    CollectionRecord r;
    r.request_id = d.fixed<32>();
    r.doc_ids = get_digests(d);
    r.collected_at = d.u64();
    d.expect_done();
    return r;
}

Bytes CompletionRecord::encode() const
{
    Encoder e;
    e.bytes(request_id).u8(static_cast<std::uint8_t>(outcome)).str(reason).u64(at);
    return std::move(e).take();
}

CompletionRecord CompletionRecord::decode(ByteView in)
{
    Decoder d(in);
    CompletionRecord r;
    r.request_id = d.fixed<32>();
    const auto o = d.u8();
    if (o > 1)
        throw Error(Errc::Malformed, "bad outcome tag");
    r.outcome = static_cast<Outcome>(o);
    r.reason = d.str();
    r.at = d.u64();
    d.expect_done();
    return r;
}

std::string_view state_name(RequestState s)
{
    switch (s) {
    case RequestState::Initiated: return "Initiated";
    case RequestState::AwaitingDocuments: return "AwaitingDocuments";
    case RequestState::DocumentsFulfilled: return "DocumentsFulfilled";
    case RequestState::ConsentGranted: return "ConsentGranted";
    case RequestState::Collected: return "Collected";
    case RequestState::Completed: return "Completed";
    case RequestState::Rejected: return "Rejected";
    }
    return "Unknown";
}

bool is_terminal(RequestState s)
{
    return s == RequestState::Completed || s == RequestState::Rejected;
}

std::vector<Digest> Fulfillment::doc_ids() const
{
    std::vector<Digest> out;
    for (const auto& [type, ids] : matched)
        out.insert(out.end(), ids.begin(), ids.end());
    return out;
}

std::string_view freshness_name(Freshness f)
{
    return f == Freshness::MaxAge ? "max_age" : "valid_at_request";
}

std::string_view scope_name(HolderScope s)
{
    switch (s) {
    case HolderScope::Applicant: return "applicant";
    case HolderScope::Household: return "household";
    case HolderScope::Dependents: return "dependents";
    }
    return "applicant";
}

Freshness parse_freshness(std::string_view s)
{
    if (s == "valid_at_request") return Freshness::ValidAtRequest;
    if (s == "max_age") return Freshness::MaxAge;
    throw Error(Errc::InvalidConfig, "unknown freshness '" + std::string(s) + "'");
}

HolderScope parse_scope(std::string_view s)
{
    if (s == "applicant") return HolderScope::Applicant;
    if (s == "household") return HolderScope::Household;
    if (s == "dependents") return HolderScope::Dependents;
    throw Error(Errc::InvalidConfig, "unknown holder scope '" + std::string(s) + "'");
}

} // namespace civic
