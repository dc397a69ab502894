#include "civic/identity.hpp"

#include <sodium.h>

#include <fstream>

namespace civic::identity {

namespace {

constexpr std::string_view kExportPrefix = "ekey1:";
constexpr std::string_view kSecretPrefix = "secret:";

void require_authority(const WorldState& view, const PublicKey& key)
{
    if (key != view.config().authority_key())
        throw Error(Errc::NotAuthority, "signer is not the e-government authority");
}

bool authority_signed(const WorldState& view, const EKeyCredential& c)
{
    return verify_signature(view.config().authority_key(), c.signing_bytes(), c.authority_signature);
}

const CredentialEntry* active_duplicate(const WorldState& view, const EKeyCredential& c, std::uint64_t now)
{
    for (const auto& [id, entry] : view.credentials)
        if (entry.credential.citizen_id == c.citizen_id && entry.credential.public_key == c.public_key &&
            entry.active_at(now))
            return &entry;
    return nullptr;
}

} // namespace

IssuedKey issue_ekey(const KeyPair& authority, const std::string& citizen_id, const PublicKey& citizen_key,
                     std::uint64_t issued_at, std::uint64_t validity_ms, const WorldState& view,
                     std::uint64_t nonce)
{
    require_authority(view, authority.public_key());
    if (citizen_id.empty())
        throw Error(Errc::Malformed, "citizen id is empty");
    if (validity_ms == 0)
        throw Error(Errc::Malformed, "validity must be positive");

    IssuedKey out;
    auto& c = out.credential;
    c.citizen_id = citizen_id;
    c.public_key = citizen_key;
    c.issued_at = issued_at;
    c.expires_at = issued_at + validity_ms;
    if (active_duplicate(view, c, issued_at))
        throw Error(Errc::DuplicateCredential, citizen_id);
    c.authority_signature = authority.sign(c.signing_bytes());
    out.tx = sign_transaction(TxKind::EKeyIssued, c.encode(), authority, nonce);
    return out;
}

Transaction revoke_ekey(const KeyPair& authority, const EKeyCredential& credential, const WorldState& view,
                        std::uint64_t now, std::uint64_t nonce)
{
    require_authority(view, authority.public_key());
    const Digest id = credential.id();
    auto it = view.credentials.find(id);
    if (it == view.credentials.end() || it->second.revoked)
        throw Error(Errc::NotActive, credential.citizen_id);
    EKeyRevocation r{id, credential.citizen_id, now};
    return sign_transaction(TxKind::EKeyRevoked, r.encode(), authority, nonce);
}

NonceRegistry::NonceRegistry(std::optional<std::uint64_t> deterministic_seed) : seed_(deterministic_seed) {}

Bytes NonceRegistry::issue()
{
    std::lock_guard lock(mu_);
    Bytes nonce(32);
    if (seed_) {
        Encoder e;
        e.str("civic-nonce").u64(*seed_).u64(counter_++);
        const Digest d = sha256(e.data());
        std::copy(d.begin(), d.end(), nonce.begin());
    } else {
        randombytes_buf(nonce.data(), nonce.size());
    }
    outstanding_.insert(nonce);
    return nonce;
}

bool NonceRegistry::consume(ByteView nonce)
{
    std::lock_guard lock(mu_);
    return outstanding_.erase(Bytes(nonce.begin(), nonce.end())) == 1;
}

Bytes challenge_signing_bytes(ByteView nonce)
{
    Encoder e;
    e.str("civic-auth").bytes(nonce);
    return std::move(e).take();
}

AuthContext respond_to_challenge(const EKeyCredential& credential, const KeyPair& citizen_key, ByteView nonce)
{
    return {credential, Bytes(nonce.begin(), nonce.end()), citizen_key.sign(challenge_signing_bytes(nonce))};
}

CitizenIdentity authenticate(const AuthContext& ctx, const WorldState& view, std::uint64_t now,
                             NonceRegistry& nonces)
{
    const auto& c = ctx.credential;
    if (!authority_signed(view, c))
        throw Error(Errc::BadAuthoritySignature, c.citizen_id);
    if (now < c.issued_at || now >= c.expires_at)
        throw Error(Errc::Expired, c.citizen_id);
    const Digest id = c.id();
    auto it = view.credentials.find(id);
    if (it == view.credentials.end())
        throw Error(Errc::NotActive, c.citizen_id + ": credential is not on the ledger");
    if (it->second.revoked)
        throw Error(Errc::Revoked, c.citizen_id);
    if (!verify_signature(c.public_key, challenge_signing_bytes(ctx.challenge_nonce), ctx.response_signature))
        throw Error(Errc::BadChallengeResponse, c.citizen_id);
    if (!nonces.consume(ctx.challenge_nonce))
        throw Error(Errc::ReplayedNonce, "nonce was not issued or was already used");
    return {c.citizen_id, id, c.public_key};
}

std::string export_credential(const EKeyCredential& credential)
{
    return std::string(kExportPrefix) + to_hex(credential.encode());
}

EKeyCredential import_credential(std::string_view line)
{
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r' || line.back() == ' '))
        line.remove_suffix(1);
    if (line.substr(0, kExportPrefix.size()) != kExportPrefix)
        throw Error(Errc::Malformed, "credential export must start with " + std::string(kExportPrefix));
    return EKeyCredential::decode(from_hex(line.substr(kExportPrefix.size())));
}

CredentialFile load_credential_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::Io, "cannot read credential file " + path.string());
    CredentialFile out;
    std::string line;
    bool have_credential = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (line.rfind(kExportPrefix, 0) == 0) {
            out.credential = import_credential(line);
            have_credential = true;
        } else if (line.rfind(kSecretPrefix, 0) == 0) {
            const Bytes seed = from_hex(line.substr(kSecretPrefix.size()));
            if (seed.size() != 32)
                throw Error(Errc::Malformed, "secret seed must be 32 bytes");
            Seed s{};
            std::copy(seed.begin(), seed.end(), s.begin());
            out.key = KeyPair::from_seed(s);
        } else {
            throw Error(Errc::Malformed, "unrecognised line in credential file");
        }
    }
    if (!have_credential)
        throw Error(Errc::Malformed, "credential file has no " + std::string(kExportPrefix) + " line");
    if (out.key && out.key->public_key() != out.credential.public_key)
        throw Error(Errc::Malformed, "secret does not match the credential's public key");
    return out;
}

void save_credential_file(const std::filesystem::path& path, const EKeyCredential& credential, const KeyPair* key)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error(Errc::Io, "cannot write credential file " + path.string());
    out << export_credential(credential) << '\n';
    if (key)
        out << kSecretPrefix << to_hex(key->seed()) << '\n';
}

void apply_ekey_issued(WorldState& state, const TxContext& ctx)
{
    require_authority(state, ctx.tx.author);
    EKeyCredential c = EKeyCredential::decode(ctx.tx.payload);
    if (!authority_signed(state, c))
        throw Error(Errc::BadAuthoritySignature, c.citizen_id);
    if (c.expires_at <= c.issued_at)
        throw Error(Errc::Malformed, "credential expires before it is issued");
    const Digest id = c.id();
    if (state.credentials.count(id) || active_duplicate(state, c, ctx.now))
        throw Error(Errc::DuplicateCredential, c.citizen_id);
    state.credentials.emplace(id, CredentialEntry{std::move(c), id, ctx.height});
}

void apply_ekey_revoked(WorldState& state, const TxContext& ctx)
{
    require_authority(state, ctx.tx.author);
    const EKeyRevocation r = EKeyRevocation::decode(ctx.tx.payload);
    auto it = state.credentials.find(r.credential_id);
    if (it == state.credentials.end() || it->second.revoked)
        throw Error(Errc::NotActive, r.citizen_id);
    it->second.revoked = true;
    it->second.revoked_height = ctx.height;
}

} // namespace civic::identity
