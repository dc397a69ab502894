#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "civic/consensus.hpp"
#include "civic/scenario.hpp"

namespace civic::test {

inline std::filesystem::path temp_dir(const std::string& name)
{
    const auto p = std::filesystem::temp_directory_path() / ("civic-unit-" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::shared_ptr<Consortium> housing_consortium()
{
    return sim::build_consortium(sim::housing_scenario());
}

// A successor of `parent` carrying `txs`, signed by the first `voters` validators.
inline Block next_block(const Block& parent, std::vector<Transaction> txs, const ValidatorSet& validators,
                        std::size_t voters, std::uint64_t round = 0)
{
    Block b;
    b.header.height = parent.header.height + 1;
    b.header.parent_hash = parent.block_hash;
    b.header.timestamp = parent.header.timestamp + 1000;
    b.header.proposer = consensus::proposer_for(validators, b.header.height, round).id;
    b.transactions = std::move(txs);
    const auto ids = b.tx_ids();
    b.header.tx_root = merkle_root(ids);
    b.block_hash = hash_block(b.header);
    for (std::size_t i = 0; i < voters; ++i) {
        const auto& v = validators.at(i);
        b.commit_votes.push_back(
            consensus::make_vote(v.id, sim::org_key(v.id), b.block_hash, b.header.height, round).commit_vote());
    }
    return b;
}

template<class F>
Errc code_of(F&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return Errc::Malformed;
}

// Committed state over the housing consortium, one transaction per height.
struct World {
    std::shared_ptr<Consortium> config = housing_consortium();
    WorldState state{config};
    std::uint64_t now = 0;
    std::uint64_t height = 0;
    std::map<PublicKey, std::uint64_t> nonces;

    World()
    {
        state.apply_block(make_genesis(*config));
        now = config->genesis_timestamp + 1000;
    }
    std::uint64_t nonce(const KeyPair& k) { return ++nonces[k.public_key()]; }
    void commit(const Transaction& tx)
    {
        state.apply(tx, now, ++height);
        now += 1000;
    }
};

} // namespace civic::test
