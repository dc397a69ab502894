#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "civic/identity.hpp"
#include "civic/ledger.hpp"
#include "civic/records.hpp"
#include "civic/state.hpp"

// Declarative service contracts and the service-request state machine.
//
// Every transition is driven by a committed transaction; the builders below
// check preconditions against a committed view so callers get early errors,
// and the apply_* functions re-check everything at commit time.
namespace civic::contracts {

ServiceContract housing_contract(const std::string& provider = "housing");

std::vector<ServiceContract> load_contracts(const std::filesystem::path& path);
void save_contracts(const std::vector<ServiceContract>& contracts, const std::filesystem::path& path);

Transaction register_service(const KeyPair& provider, const ServiceContract& contract, const WorldState& view,
                             std::uint64_t nonce);

// Pure function of (request, contract, view, now). For each requirement line
// the candidates are the subjects in the line's holder scope; each subject
// contributes its newest fresh non-superseded document of the type, and the
// line takes `count` of those ordered by (issued_at desc, doc_id asc).
Fulfillment evaluate_fulfillment(const ServiceRequest& request, const ServiceContract& contract,
                                 const WorldState& view, std::uint64_t now);

// Subjects a requirement line may draw from.
std::vector<std::string> scope_subjects(const ServiceRequest& request, HolderScope scope);

Transaction initiate_request(const KeyPair& citizen_key, const identity::CitizenIdentity& who,
                             const std::string& service_id, const std::vector<std::string>& household,
                             std::uint64_t now, const WorldState& view, std::uint64_t nonce);

Transaction grant_consent(const KeyPair& citizen_key, const identity::CitizenIdentity& who,
                          const Digest& request_id, const WorldState& view, std::uint64_t now,
                          std::uint64_t nonce);

// The only producer of AccessGranted transactions.
Transaction authorize_collection(const KeyPair& provider, const Digest& request_id, const WorldState& view,
                                 std::uint64_t now, std::uint64_t nonce);

Transaction record_collection(const KeyPair& provider, const Digest& request_id, const WorldState& view,
                              std::uint64_t now, std::uint64_t nonce);

Transaction complete_request(const KeyPair& provider, const Digest& request_id, const WorldState& view,
                             std::uint64_t now, std::uint64_t nonce);

// Rejection by the provider, or withdrawal by the owning citizen.
Transaction reject_request(const KeyPair& author, const Digest& request_id, const std::string& reason,
                           const WorldState& view, std::uint64_t now, std::uint64_t nonce);

void apply_service_registered(WorldState& state, const TxContext& ctx);
void apply_request_initiated(WorldState& state, const TxContext& ctx);
void apply_consent_granted(WorldState& state, const TxContext& ctx);
void apply_access_granted(WorldState& state, const TxContext& ctx);
void apply_document_collected(WorldState& state, const TxContext& ctx);
void apply_request_completed(WorldState& state, const TxContext& ctx);

// Re-evaluates open requests that may draw on `subject`'s documents.
void on_document_issued(WorldState& state, const std::string& subject, const TxContext& ctx);

} // namespace civic::contracts
