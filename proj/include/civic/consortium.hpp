#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "civic/ledger.hpp"
#include "civic/records.hpp"

namespace civic {

struct Organization {
    std::string id;
    std::string name;
    PublicKey key{};
    std::string node; // id of the node hosting this organization
    std::set<std::string> doc_types; // issuer-type catalog entry
    bool provider = false;
};

struct ChainParams {
    std::size_t block_capacity = 64;
    std::uint64_t block_timer_ms = 500;
    std::uint64_t round_timeout_ms = 2000;
    std::uint64_t future_tolerance_ms = 30'000;
    std::size_t mempool_capacity = 10'000;
    std::uint64_t sync_interval_ms = 1000;
    std::uint64_t collection_window_ms = 7 * kMsPerDay;
    std::uint64_t grant_retention_ms = kMsPerDay;
};

// Everything every node must agree on before height 0: the genesis input.
struct Consortium {
    ValidatorSet validators;
    std::string authority_org;
    std::map<std::string, Organization> organizations;
    std::uint64_t genesis_timestamp = 0;
    std::vector<Transaction> bootstrap;
    ChainParams params;

    const Organization& authority() const;
    const PublicKey& authority_key() const { return authority().key; }
    const Organization* organization(std::string_view id) const;
    const Organization* organization_by_key(const PublicKey& key) const;
    const Organization* issuer_for(std::string_view doc_type) const;

    void validate() const;
};

Consortium load_consortium(const std::filesystem::path& path);
void save_consortium(const Consortium& config, const std::filesystem::path& path);

} // namespace civic
