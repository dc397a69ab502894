#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <string>

#include "civic/ledger.hpp"
#include "civic/records.hpp"
#include "civic/state.hpp"

// eKey lifecycle: the e-government authority signs citizen public keys,
// citizens prove possession by answering server-issued challenges, and the
// authority revokes credentials on chain.
namespace civic::identity {

struct IssuedKey {
    EKeyCredential credential;
    Transaction tx;
};

IssuedKey issue_ekey(const KeyPair& authority, const std::string& citizen_id, const PublicKey& citizen_key,
                     std::uint64_t issued_at, std::uint64_t validity_ms, const WorldState& view,
                     std::uint64_t nonce);

Transaction revoke_ekey(const KeyPair& authority, const EKeyCredential& credential, const WorldState& view,
                        std::uint64_t now, std::uint64_t nonce);

struct AuthContext {
    EKeyCredential credential;
    Bytes challenge_nonce;
    Bytes response_signature;
};

struct CitizenIdentity {
    std::string citizen_id;
    Digest credential_id{};
    PublicKey public_key{};
};

// Server-side nonce book. issue() hands out fresh nonces; consume() succeeds
// once per issued nonce. Thread-safe.
class NonceRegistry {
public:
    explicit NonceRegistry(std::optional<std::uint64_t> deterministic_seed = std::nullopt);

    Bytes issue();
    bool consume(ByteView nonce);

private:
    std::mutex mu_;
    std::set<Bytes> outstanding_;
    std::optional<std::uint64_t> seed_;
    std::uint64_t counter_ = 0;
};

Bytes challenge_signing_bytes(ByteView nonce);
AuthContext respond_to_challenge(const EKeyCredential& credential, const KeyPair& citizen_key, ByteView nonce);

// Returns the identity iff the authority signature verifies, the credential is
// committed, unexpired and unrevoked on the ledger view, and the challenge response
// verifies for a server-issued, unused nonce.
CitizenIdentity authenticate(const AuthContext& ctx, const WorldState& view, std::uint64_t now,
                             NonceRegistry& nonces);

// Single-line hex-armoured export of a credential.
std::string export_credential(const EKeyCredential& credential);
EKeyCredential import_credential(std::string_view line);

// Credential file: the export line, optionally followed by "secret:<hex seed>".
struct CredentialFile {
    EKeyCredential credential;
    std::optional<KeyPair> key;
};
CredentialFile load_credential_file(const std::filesystem::path& path);
void save_credential_file(const std::filesystem::path& path, const EKeyCredential& credential,
                          const KeyPair* key);

void apply_ekey_issued(WorldState& state, const TxContext& ctx);
void apply_ekey_revoked(WorldState& state, const TxContext& ctx);

} // namespace civic::identity
