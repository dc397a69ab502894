#pragma once

#include <json.hpp>

#include "civic/ledger.hpp"
#include "civic/records.hpp"
#include "civic/registry.hpp"

// JSON renderings shared by the HTTP API, the CLI and the simulation trace.
// Digests and keys are lowercase hex.
namespace civic::views {

using nlohmann::json;

json tx_json(const Transaction& tx);
json block_json(const Block& block);
json header_json(const Block& block);
json document_json(const DocumentRecord& record);
json document_view_json(const registry::DocumentView& view);
json request_json(const ServiceRequest& request);
json fulfillment_json(const Fulfillment& f);
json contract_json(const ServiceContract& contract);
ServiceContract contract_from_json(const json& j);
json audit_json(const registry::AuditEntry& entry);
json credential_json(const EKeyCredential& credential);

json digests_json(const std::vector<Digest>& ids);
std::vector<Digest> digests_from_json(const json& j);

} // namespace civic::views
