#include "civic/state.hpp"

#include "civic/contracts.hpp"
#include "civic/identity.hpp"
#include "civic/registry.hpp"

namespace civic {

WorldState::WorldState(std::shared_ptr<const Consortium> config) : config_(std::move(config)) {}

std::uint64_t WorldState::last_nonce(const PublicKey& author) const
{
    auto it = nonces.find(author);
    return it == nonces.end() ? 0 : it->second;
}

const CredentialEntry* WorldState::active_credential(const PublicKey& key, std::string_view citizen,
                                                     std::uint64_t now) const
{
    for (const auto& [id, entry] : credentials)
        if (entry.credential.public_key == key && entry.credential.citizen_id == citizen && entry.active_at(now))
            return &entry;
    return nullptr;
}

const CredentialEntry* WorldState::credential_for_key(const PublicKey& key, std::uint64_t now) const
{
    for (const auto& [id, entry] : credentials)
        if (entry.credential.public_key == key && entry.active_at(now))
            return &entry;
    return nullptr;
}

const ServiceRequest* WorldState::request(const Digest& id) const
{
    auto it = requests.find(id);
    return it == requests.end() ? nullptr : &it->second;
}

const ServiceContract* WorldState::contract(std::string_view service_id) const
{
    auto it = contracts.find(std::string(service_id));
    return it == contracts.end() ? nullptr : &it->second;
}

const DocumentEntry* WorldState::document(const Digest& id) const
{
    auto it = documents.find(id);
    return it == documents.end() ? nullptr : &it->second;
}

void WorldState::apply_block(const Block& block)
{
    if (!has_genesis_ && block.header.height != 0)
        throw Error(Errc::BadHeight, "state expects genesis first");
    if (has_genesis_ && block.header.height != height_ + 1)
        throw Error(Errc::BadHeight, "state at " + std::to_string(height_) + " cannot apply " +
                                         std::to_string(block.header.height));
    WorldState next = *this;
    for (const auto& tx : block.transactions)
        next.apply(tx, block.header.timestamp, block.header.height);
    next.has_genesis_ = true;
    next.height_ = block.header.height;
    next.tip_hash_ = block.block_hash;
    next.tip_timestamp_ = block.header.timestamp;
    *this = std::move(next);
}

void WorldState::apply(const Transaction& tx, std::uint64_t now, std::uint64_t height)
{
    const Digest tx_id = tx.id();
    if (committed(tx_id))
        throw Error(Errc::DuplicateTx, to_hex(tx_id));
    if (tx.nonce <= last_nonce(tx.author))
        throw Error(Errc::BadNonce, "nonce " + std::to_string(tx.nonce) + " not above " +
                                        std::to_string(last_nonce(tx.author)));

    const TxContext ctx{tx, tx_id, now, height};
    switch (tx.kind) {
    case TxKind::EKeyIssued: identity::apply_ekey_issued(*this, ctx); break;
    case TxKind::EKeyRevoked: identity::apply_ekey_revoked(*this, ctx); break;
    case TxKind::DocumentIssued: {
        const std::string subject = registry::apply_document_issued(*this, ctx).record.subject;
        contracts::on_document_issued(*this, subject, ctx);
        break;
    }
    case TxKind::ServiceRegistered: contracts::apply_service_registered(*this, ctx); break;
    case TxKind::RequestInitiated: contracts::apply_request_initiated(*this, ctx); break;
    case TxKind::ConsentGranted: contracts::apply_consent_granted(*this, ctx); break;
    case TxKind::AccessGranted: contracts::apply_access_granted(*this, ctx); break;
    case TxKind::DocumentCollected: contracts::apply_document_collected(*this, ctx); break;
    case TxKind::RequestCompleted: contracts::apply_request_completed(*this, ctx); break;
    }
    nonces[tx.author] = tx.nonce;
    tx_ids.insert(tx_id);
}

} // namespace civic
