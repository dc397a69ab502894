#include "civic/registry.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>

#include "civic/consortium.hpp"

namespace civic::registry {

OffChainStore::OffChainStore(std::filesystem::path dir) : dir_(std::move(dir))
{
    std::error_code ec;
    std::filesystem::create_directories(*dir_, ec);
    if (ec)
        throw Error(Errc::Io, "cannot create store directory " + dir_->string() + ": " + ec.message());
}

std::filesystem::path OffChainStore::file_for(const Digest& digest) const
{
    return *dir_ / to_hex(digest);
}

Digest OffChainStore::put(ByteView payload)
{
    const Digest d = sha256(payload);
    std::lock_guard lock(mu_);
    if (!dir_) {
        mem_.emplace(d, Bytes(payload.begin(), payload.end()));
        return d;
    }
    const auto target = file_for(d);
    if (std::filesystem::exists(target))
        return d;
    auto tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
        if (!out)
            throw Error(Errc::Io, "cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
    return d;
}

std::optional<Bytes> OffChainStore::get(const Digest& digest) const
{
    std::lock_guard lock(mu_);
    if (!dir_) {
        auto it = mem_.find(digest);
        if (it == mem_.end())
            return std::nullopt;
        return it->second;
    }
    std::ifstream in(file_for(digest), std::ios::binary);
    if (!in)
        return std::nullopt;
    return Bytes(std::istreambuf_iterator<char>(in), {});
}

bool OffChainStore::contains(const Digest& digest) const
{
    std::lock_guard lock(mu_);
    return dir_ ? std::filesystem::exists(file_for(digest)) : mem_.count(digest) != 0;
}

std::size_t OffChainStore::size() const
{
    std::lock_guard lock(mu_);
    if (!dir_)
        return mem_.size();
    std::size_t n = 0;
    for (const auto& entry : std::filesystem::directory_iterator(*dir_))
        if (entry.path().extension().empty())
            ++n;
    return n;
}

bool OffChainStore::corrupt(const Digest& digest, std::size_t index)
{
    std::lock_guard lock(mu_);
    if (!dir_) {
        auto it = mem_.find(digest);
        if (it == mem_.end() || it->second.empty())
            return false;
        it->second[index % it->second.size()] ^= 0x01;
        return true;
    }
    const auto path = file_for(digest);
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    if (!f)
        return false;
    f.seekg(0, std::ios::end);
    const auto len = static_cast<std::size_t>(f.tellg());
    if (len == 0)
        return false;
    const auto pos = static_cast<std::streamoff>(index % len);
    char c = 0;
    f.seekg(pos);
    f.get(c);
    f.seekp(pos);
    f.put(static_cast<char>(c ^ 0x01));
    return static_cast<bool>(f);
}

std::string audit_line(const AuditEntry& e)
{
    nlohmann::json j = {
        {"ts", e.ts},
        {"requester", e.requester},
        {"doc_id", to_hex(e.doc_id)},
        {"outcome", e.outcome},
    };
    return j.dump();
}

AuditLog::AuditLog(std::filesystem::path file) : file_(std::move(file))
{
    std::ifstream in(*file_);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        try {
            const auto j = nlohmann::json::parse(line);
            entries_.push_back({j.at("ts").get<std::uint64_t>(), j.at("requester").get<std::string>(),
                                digest_from_hex(j.at("doc_id").get<std::string>()),
                                j.at("outcome").get<std::string>()});
        } catch (const std::exception&) {
            // a torn final line from a crash is skipped
        }
    }
}

void AuditLog::append(AuditEntry entry)
{
    std::lock_guard lock(mu_);
    if (file_) {
        std::ofstream out(*file_, std::ios::app);
        out << audit_line(entry) << '\n';
        out.flush();
    }
    entries_.push_back(std::move(entry));
}

std::vector<AuditEntry> AuditLog::tail(std::size_t n) const
{
    std::lock_guard lock(mu_);
    const std::size_t start = entries_.size() > n ? entries_.size() - n : 0;
    return {entries_.begin() + static_cast<std::ptrdiff_t>(start), entries_.end()};
}

std::size_t AuditLog::size() const
{
    std::lock_guard lock(mu_);
    return entries_.size();
}

IssuedDocument issue_document(const KeyPair& issuer, const Consortium& config, const std::string& subject,
                              const std::string& doc_type, ByteView payload, std::uint64_t issued_at,
                              std::uint64_t valid_until, std::optional<Digest> supersedes,
                              std::uint64_t nonce, OffChainStore& store)
{
    const Organization* org = config.organization_by_key(issuer.public_key());
    if (!org)
        throw Error(Errc::UnregisteredIssuer, "signing key belongs to no organization");
    if (!org->doc_types.count(doc_type))
        throw Error(Errc::WrongIssuerForType, org->id + " may not issue " + doc_type);
    if (payload.empty())
        throw Error(Errc::EmptyPayload, doc_type);
    if (valid_until <= issued_at)
        throw Error(Errc::Malformed, "valid_until must follow issued_at");

    IssuedDocument out;
    auto& r = out.record;
    r.doc_type = doc_type;
    r.subject = subject;
    r.issuer = org->id;
    r.content_digest = store.put(payload);
    r.issued_at = issued_at;
    r.valid_until = valid_until;
    r.supersedes = supersedes;
    r.doc_id = r.compute_id();
    out.tx = sign_transaction(TxKind::DocumentIssued, r.encode(), issuer, nonce);
    return out;
}

std::string_view verify_name(VerifyStatus s)
{
    switch (s) {
    case VerifyStatus::Verified: return "Verified";
    case VerifyStatus::DigestMismatch: return "DigestMismatch";
    case VerifyStatus::NotOnChain: return "NotOnChain";
    case VerifyStatus::Expired: return "Expired";
    case VerifyStatus::BadDocId: return "BadDocId";
    }
    return "?";
}

VerifyStatus verify_document(const DocumentRecord& record, ByteView payload, std::uint64_t at,
                             const WorldState& view)
{
    if (record.compute_id() != record.doc_id)
        return VerifyStatus::BadDocId;
    const DocumentEntry* entry = view.document(record.doc_id);
    if (!entry || entry->record.encode() != record.encode())
        return VerifyStatus::NotOnChain;
    if (sha256(payload) != record.content_digest)
        return VerifyStatus::DigestMismatch;
    if (at > record.valid_until)
        return VerifyStatus::Expired;
    return VerifyStatus::Verified;
}

std::vector<DocumentView> citizen_documents(const std::string& citizen_id, const WorldState& view,
                                            std::uint64_t now)
{
    std::vector<DocumentView> out;
    auto it = view.documents_by_subject.find(citizen_id);
    if (it == view.documents_by_subject.end())
        return out;
    for (const Digest& id : it->second) {
        const DocumentEntry& e = view.documents.at(id);
        out.push_back({e.record, e.height, e.superseded_by.has_value(), now > e.record.valid_until});
    }
    std::sort(out.begin(), out.end(), [](const DocumentView& a, const DocumentView& b) {
        if (a.record.issued_at != b.record.issued_at)
            return a.record.issued_at > b.record.issued_at;
        return a.record.doc_id < b.record.doc_id;
    });
    return out;
}

std::string_view read_outcome_name(ReadOutcome o)
{
    switch (o) {
    case ReadOutcome::Allowed: return "Allowed";
    case ReadOutcome::NoGrant: return "NoGrant";
    case ReadOutcome::GrantExpired: return "GrantExpired";
    case ReadOutcome::NotFound: return "NotFound";
    }
    return "?";
}

std::uint64_t grant_expiry(const GrantEntry& grant, const WorldState& view)
{
    const ServiceRequest* req = view.request(grant.grant.request_id);
    if (req && req->completed_at) {
        if (req->state == RequestState::Rejected)
            return std::min(grant.grant.expires_at, *req->completed_at);
        return *req->completed_at + view.config().params.grant_retention_ms;
    }
    return grant.grant.expires_at;
}

ReadResult read_document(const std::string& requester, const Digest& doc_id, const WorldState& view,
                         std::uint64_t now, const OffChainStore& store, AuditLog* audit)
{
    ReadResult result;
    const DocumentEntry* doc = view.document(doc_id);
    if (!doc) {
        result.outcome = ReadOutcome::NotFound;
    } else {
        bool any = false;
        for (const auto& [gid, g] : view.grants) {
            if (g.grant.grantee != requester ||
                std::find(g.grant.doc_ids.begin(), g.grant.doc_ids.end(), doc_id) == g.grant.doc_ids.end())
                continue;
            any = true;
            if (now < grant_expiry(g, view)) {
                result.outcome = ReadOutcome::Allowed;
                result.grant_id = gid;
                break;
            }
        }
        if (!any)
            result.outcome = ReadOutcome::NoGrant;
        else if (!result.grant_id)
            result.outcome = ReadOutcome::GrantExpired;
        if (result.allowed()) {
            if (auto payload = store.get(doc->record.content_digest)) {
                result.payload = std::move(*payload);
            } else {
                result.outcome = ReadOutcome::NotFound;
                result.grant_id.reset();
            }
        }
    }
    if (audit)
        audit->append({now, requester, doc_id, std::string(read_outcome_name(result.outcome))});
    return result;
}

std::vector<Digest> renewal_chain(const Digest& doc_id, const WorldState& view)
{
    std::vector<Digest> chain;
    std::optional<Digest> cur = doc_id;
    while (cur) {
        const DocumentEntry* e = view.document(*cur);
        if (!e || chain.size() > view.documents.size())
            break;
        chain.push_back(*cur);
        cur = e->record.supersedes;
    }
    return chain;
}

const DocumentEntry& apply_document_issued(WorldState& state, const TxContext& ctx)
{
    DocumentRecord r = DocumentRecord::decode(ctx.tx.payload);
    const Organization* org = state.config().organization_by_key(ctx.tx.author);
    if (!org || org->id != r.issuer)
        throw Error(Errc::UnregisteredIssuer, r.issuer);
    if (!org->doc_types.count(r.doc_type))
        throw Error(Errc::WrongIssuerForType, org->id + " may not issue " + r.doc_type);
    if (r.compute_id() != r.doc_id)
        throw Error(Errc::Malformed, "doc_id does not match record contents");
    if (r.valid_until <= r.issued_at)
        throw Error(Errc::Malformed, "valid_until must follow issued_at");
    if (state.documents.count(r.doc_id))
        throw Error(Errc::DuplicateDocument, to_hex(r.doc_id));

    DocumentEntry* prior = nullptr;
    if (r.supersedes) {
        auto it = state.documents.find(*r.supersedes);
        if (it == state.documents.end() || it->second.record.doc_type != r.doc_type ||
            it->second.record.subject != r.subject || it->second.superseded_by)
            throw Error(Errc::BadSupersedes, to_hex(*r.supersedes));
        prior = &it->second;
    }
    if (prior)
        prior->superseded_by = r.doc_id;
    const Digest id = r.doc_id;
    state.documents_by_subject[r.subject].push_back(id);
    return state.documents.emplace(id, DocumentEntry{std::move(r), ctx.height, ctx.tx_id, std::nullopt})
        .first->second;
}

} // namespace civic::registry
