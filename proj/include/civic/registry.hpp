#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "civic/ledger.hpp"
#include "civic/records.hpp"
#include "civic/state.hpp"

namespace civic::registry {

// content_digest -> payload. Backed by one file per hex digest when given a
// directory, otherwise held in memory.
class OffChainStore {
public:
    OffChainStore() = default;
    explicit OffChainStore(std::filesystem::path dir);

    Digest put(ByteView payload);
    std::optional<Bytes> get(const Digest& digest) const;
    bool contains(const Digest& digest) const;
    std::size_t size() const;

    // Flips one byte of a stored payload in place; harness fault injection.
    bool corrupt(const Digest& digest, std::size_t index);

    const std::optional<std::filesystem::path>& directory() const { return dir_; }

private:
    std::filesystem::path file_for(const Digest& digest) const;

    std::optional<std::filesystem::path> dir_;
    mutable std::mutex mu_;
    std::map<Digest, Bytes> mem_;
};

struct AuditEntry {
    std::uint64_t ts = 0;
    std::string requester;
    Digest doc_id{};
    std::string outcome;
};

// Append-only access log; JSON-lines on disk when given a path.
class AuditLog {
public:
    AuditLog() = default;
    explicit AuditLog(std::filesystem::path file);

    void append(AuditEntry entry);
    std::vector<AuditEntry> tail(std::size_t n) const;
    std::size_t size() const;

private:
    std::optional<std::filesystem::path> file_;
    mutable std::mutex mu_;
    std::vector<AuditEntry> entries_;
};

std::string audit_line(const AuditEntry& e);

struct IssuedDocument {
    DocumentRecord record;
    Transaction tx;
};

// Validates the issuer against the type catalog, stores the payload in the
// issuer's store and builds the DocumentIssued transaction.
IssuedDocument issue_document(const KeyPair& issuer, const Consortium& config, const std::string& subject,
                              const std::string& doc_type, ByteView payload, std::uint64_t issued_at,
                              std::uint64_t valid_until, std::optional<Digest> supersedes,
                              std::uint64_t nonce, OffChainStore& store);

enum class VerifyStatus : std::uint8_t { Verified, DigestMismatch, NotOnChain, Expired, BadDocId };
std::string_view verify_name(VerifyStatus s);

VerifyStatus verify_document(const DocumentRecord& record, ByteView payload, std::uint64_t at,
                             const WorldState& view);

struct DocumentView {
    DocumentRecord record;
    std::uint64_t height = 0;
    bool superseded = false;
    bool expired = false;
};

// Every committed record for the citizen, newest first.
std::vector<DocumentView> citizen_documents(const std::string& citizen_id, const WorldState& view,
                                            std::uint64_t now);

enum class ReadOutcome : std::uint8_t { Allowed, NoGrant, GrantExpired, NotFound };
std::string_view read_outcome_name(ReadOutcome o);

struct ReadResult {
    ReadOutcome outcome = ReadOutcome::NotFound;
    Bytes payload;
    std::optional<Digest> grant_id;

    bool allowed() const { return outcome == ReadOutcome::Allowed; }
};

// The moment a committed grant stops authorizing reads. Completion shortens
// the collection window to the retention period; rejection ends it at once.
std::uint64_t grant_expiry(const GrantEntry& grant, const WorldState& view);

// Reads a payload from the local store on behalf of `requester`. Allowed iff
// an unexpired committed grant names (requester, doc_id). Every attempt is
// appended to `audit`.
ReadResult read_document(const std::string& requester, const Digest& doc_id, const WorldState& view,
                         std::uint64_t now, const OffChainStore& store, AuditLog* audit);

// Follows supersedes links back to the first issuance.
std::vector<Digest> renewal_chain(const Digest& doc_id, const WorldState& view);

const DocumentEntry& apply_document_issued(WorldState& state, const TxContext& ctx);

} // namespace civic::registry
