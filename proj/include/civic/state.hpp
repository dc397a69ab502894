#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "civic/consortium.hpp"
#include "civic/ledger.hpp"
#include "civic/records.hpp"

namespace civic {

struct CredentialEntry {
    EKeyCredential credential;
    Digest id{};
    std::uint64_t height = 0;
    bool revoked = false;
    std::uint64_t revoked_height = 0;

    bool active_at(std::uint64_t now) const
    {
        return !revoked && credential.issued_at <= now && now < credential.expires_at;
    }
};

struct DocumentEntry {
    DocumentRecord record;
    std::uint64_t height = 0;
    Digest tx_id{};
    std::optional<Digest> superseded_by;
};

// The transaction being applied and the committing block's coordinates.
struct TxContext {
    const Transaction& tx;
    const Digest& tx_id;
    std::uint64_t now;
    std::uint64_t height;
};

struct GrantEntry {
    AccessGrant grant;
    std::uint64_t height = 0;
};

// Committed state of the ledger: a pure fold over the chain. Module admission
// rules (identity, registry, contracts) read and update these tables while a
// transaction is applied; everyone else treats a WorldState as read-only.
class WorldState {
public:
    explicit WorldState(std::shared_ptr<const Consortium> config);

    const Consortium& config() const { return *config_; }
    std::shared_ptr<const Consortium> config_ptr() const { return config_; }

    // Applies every transaction at the block's timestamp. All-or-nothing: on
    // the first inadmissible transaction the state is left untouched and the
    // Error is rethrown.
    void apply_block(const Block& block);

    // Applies one transaction as if committed at (now, height). Throws Error
    // with the admission failure; the state may be partially updated, so
    // callers wanting atomicity work on a copy.
    void apply(const Transaction& tx, std::uint64_t now, std::uint64_t height);

    bool has_genesis() const { return has_genesis_; }
    std::uint64_t height() const { return height_; }
    const Digest& tip_hash() const { return tip_hash_; }
    std::uint64_t tip_timestamp() const { return tip_timestamp_; }

    std::uint64_t last_nonce(const PublicKey& author) const;
    bool committed(const Digest& tx_id) const { return tx_ids.count(tx_id) != 0; }

    // Active credential binding `key` to `citizen` at `now`, if any.
    const CredentialEntry* active_credential(const PublicKey& key, std::string_view citizen,
                                             std::uint64_t now) const;
    const CredentialEntry* credential_for_key(const PublicKey& key, std::uint64_t now) const;

    const ServiceRequest* request(const Digest& id) const;
    const ServiceContract* contract(std::string_view service_id) const;
    const DocumentEntry* document(const Digest& id) const;

    // Tables. Mutated only by the module apply_* functions.
    std::map<Digest, CredentialEntry> credentials;
    std::map<Digest, DocumentEntry> documents;
    std::map<std::string, std::vector<Digest>> documents_by_subject;
    std::map<std::string, ServiceContract> contracts;
    std::map<Digest, ServiceRequest> requests;
    std::map<std::string, std::set<Digest>> requests_by_member;
    std::map<Digest, GrantEntry> grants;
    std::map<PublicKey, std::uint64_t> nonces;
    std::set<Digest> tx_ids;

private:
    std::shared_ptr<const Consortium> config_;
    bool has_genesis_ = false;
    std::uint64_t height_ = 0;
    Digest tip_hash_{};
    std::uint64_t tip_timestamp_ = 0;
};

} // namespace civic
