#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "civic/bytes.hpp"
#include "civic/crypto.hpp"

namespace civic {

inline constexpr std::uint64_t kForever = std::numeric_limits<std::uint64_t>::max();
inline constexpr std::uint64_t kMsPerDay = 24ull * 60 * 60 * 1000;

// ---- identity ---------------------------------------------------------------

struct EKeyCredential {
    std::string citizen_id;
    PublicKey public_key{};
    std::uint64_t issued_at = 0;
    std::uint64_t expires_at = 0;
    Bytes authority_signature;

    Bytes signing_bytes() const; // every field before the signature
    Bytes encode() const;
    Digest id() const { return sha256(encode()); }
    static EKeyCredential decode(ByteView in);
};

struct EKeyRevocation {
    Digest credential_id{};
    std::string citizen_id;
    std::uint64_t revoked_at = 0;

    Bytes encode() const;
    static EKeyRevocation decode(ByteView in);
};

// ---- registry ---------------------------------------------------------------

struct DocumentRecord {
    Digest doc_id{};
    std::string doc_type;
    std::string subject;
    std::string issuer;
    Digest content_digest{};
    std::uint64_t issued_at = 0;
    std::uint64_t valid_until = kForever;
    std::optional<Digest> supersedes;

    Bytes id_bytes() const; // every field except doc_id
    Digest compute_id() const { return sha256(id_bytes()); }
    Bytes encode() const;
    static DocumentRecord decode(ByteView in);
};

struct AccessGrant {
    Digest grant_id{};
    Digest request_id{};
    std::string grantee;
    std::vector<Digest> doc_ids;
    std::uint64_t granted_at = 0;
    std::uint64_t expires_at = 0;

    Bytes id_bytes() const;
    Digest compute_id() const { return sha256(id_bytes()); }
    Bytes encode() const;
    static AccessGrant decode(ByteView in);
};

// ---- contracts --------------------------------------------------------------

enum class Freshness : std::uint8_t { ValidAtRequest = 0, MaxAge = 1 };
// Which household members may hold the documents matching a requirement line.
enum class HolderScope : std::uint8_t { Applicant = 0, Household = 1, Dependents = 2 };

struct RequirementLine {
    std::string doc_type;
    std::uint64_t count = 1;
    Freshness freshness = Freshness::ValidAtRequest;
    std::uint64_t max_age_ms = 0;
    HolderScope scope = HolderScope::Applicant;

    bool operator==(const RequirementLine&) const = default;
};

struct ServiceContract {
    std::string service_id;
    std::string provider;
    std::vector<RequirementLine> required;
    std::string description;

    Bytes encode() const;
    static ServiceContract decode(ByteView in);
    bool operator==(const ServiceContract&) const = default;
};

struct RequestInitiation {
    std::string service_id;
    std::string citizen_id;
    std::vector<std::string> household;
    std::uint64_t created_at = 0;

    Bytes encode() const;
    static RequestInitiation decode(ByteView in);
};

struct ConsentRecord {
    Digest request_id{};
    std::vector<Digest> doc_ids;
    std::uint64_t granted_at = 0;

    Bytes encode() const;
    static ConsentRecord decode(ByteView in);
};

struct CollectionRecord {
    Digest request_id{};
    std::vector<Digest> doc_ids;
    std::uint64_t collected_at = 0;

    Bytes encode() const;
    static CollectionRecord decode(ByteView in);
};

enum class Outcome : std::uint8_t { Completed = 0, Rejected = 1 };

struct CompletionRecord {
    Digest request_id{};
    Outcome outcome = Outcome::Completed;
    std::string reason;
    std::uint64_t at = 0;

    Bytes encode() const;
    static CompletionRecord decode(ByteView in);
};

// ---- derived request state (a fold over committed transactions) ------------

enum class RequestState : std::uint8_t {
    Initiated,
    AwaitingDocuments,
    DocumentsFulfilled,
    ConsentGranted,
    Collected,
    Completed,
    Rejected,
};

std::string_view state_name(RequestState s);
bool is_terminal(RequestState s);

struct Fulfillment {
    // One entry per requirement line, in contract order.
    std::vector<std::pair<std::string, std::vector<Digest>>> matched;
    std::vector<std::string> missing;

    bool complete() const { return missing.empty(); }
    std::vector<Digest> doc_ids() const;
};

struct Transition {
    RequestState to;
    std::uint64_t height;
    Digest tx_id;
    std::uint64_t at;
};

struct ServiceRequest {
    Digest request_id{};
    std::string service_id;
    std::string citizen;
    std::vector<std::string> household;
    RequestState state = RequestState::Initiated;
    Fulfillment fulfillment;
    std::vector<Digest> consented;
    std::optional<Digest> grant_id;
    std::uint64_t created_at = 0;
    std::uint64_t updated_at = 0;
    std::optional<std::uint64_t> completed_at;
    std::vector<Transition> history;
};

std::string_view freshness_name(Freshness f);
std::string_view scope_name(HolderScope s);
Freshness parse_freshness(std::string_view s);
HolderScope parse_scope(std::string_view s);

} // namespace civic
