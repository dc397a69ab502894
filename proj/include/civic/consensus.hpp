#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "civic/consortium.hpp"
#include "civic/ledger.hpp"

// Proof-of-authority commit protocol.
//
// Validators take turns proposing: the proposer of (height, round) is
// validators[(height + round) mod n]. A validator votes at most once per round
// and never below its current round; a block commits once quorum(n) votes for
// it arrive from one round. A validator that times out moves to round + 1 and
// broadcasts a RoundChange carrying the block it last voted for. A proposer
// for round r > 0 must present quorum RoundChanges for r and re-propose the
// highest-round block among them, if any. Any two quorums intersect, so once a
// block commits at round r every later proposal at that height is the same
// block.
namespace civic::consensus {

std::size_t quorum(std::size_t n);
const ValidatorInfo& proposer_for(const ValidatorSet& validators, std::uint64_t height, std::uint64_t round);

struct Vote {
    std::string validator;
    Digest block_hash{};
    std::uint64_t height = 0;
    std::uint64_t round = 0;
    Bytes signature;

    bool verify(const ValidatorSet& validators) const;
    CommitVote commit_vote() const { return {validator, round, signature}; }
};

struct RoundChange {
    std::string validator;
    std::uint64_t height = 0;
    std::uint64_t round = 0;
    std::optional<Block> locked_block;
    std::uint64_t locked_round = 0;
    Bytes signature;

    Bytes signing_bytes() const;
    bool verify(const ValidatorSet& validators) const;
};

struct Proposal {
    Block block;
    std::uint64_t round = 0;
    std::string proposer;
    std::vector<RoundChange> justification;
    Bytes signature;

    Bytes signing_bytes() const;
};

Bytes proposal_signing_bytes(const Digest& block_hash, std::uint64_t height, std::uint64_t round);

Vote make_vote(const std::string& validator, const KeyPair& key, const Digest& block_hash, std::uint64_t height,
               std::uint64_t round);
RoundChange make_round_change(const std::string& validator, const KeyPair& key, std::uint64_t height,
                              std::uint64_t round, const std::optional<Block>& locked, std::uint64_t locked_round);

// The block a round-r proposal must carry given its justification: the locked
// block with the highest locked_round (ties broken by smallest hash), or
// nullopt when no sender was locked.
std::optional<Block> required_block(const std::vector<RoundChange>& justification);

// Checks the justification for a (height, round) proposal: at least quorum
// distinct, correctly signed RoundChanges for exactly that height and round.
void check_justification(const std::vector<RoundChange>& justification, const ValidatorSet& validators,
                         std::uint64_t height, std::uint64_t round);

using ConsensusMessage = std::variant<Proposal, Vote, RoundChange>;
std::uint64_t message_height(const ConsensusMessage& m);

// What a validator must remember across restarts to stay safe.
struct ConsensusState {
    std::uint64_t height = 1;
    std::uint64_t round = 0;
    std::optional<std::uint64_t> voted_round;
    std::optional<Block> locked_block;
    std::uint64_t locked_round = 0;

    Bytes encode() const;
    static ConsensusState decode(ByteView in);
};

class EngineHost {
public:
    virtual ~EngineHost() = default;
    virtual const Block& tip() const = 0;
    // Full validity of a candidate successor of tip(), votes excluded. Throws Error.
    virtual void check_block(const Block& block) = 0;
    virtual std::optional<Block> build_block(std::uint64_t height, std::uint64_t round) = 0;
    virtual std::size_t pending() const = 0;
    virtual void broadcast(const ConsensusMessage& msg) = 0;
    virtual void persist(const ConsensusState& state) = 0;
    // Append a block carrying a commit certificate. Must not re-enter the engine.
    virtual void commit(const Block& block) = 0;
    virtual void round_timeout(std::uint64_t height, std::uint64_t round) = 0;
};

class Engine {
public:
    Engine(EngineHost& host, ValidatorSet validators, ChainParams params, std::string self,
           std::optional<KeyPair> key);

    // Begins at tip().height + 1, resuming from `restored` when it is for that height.
    void start(std::uint64_t now, const std::optional<ConsensusState>& restored);

    void handle(const ConsensusMessage& msg, std::uint64_t now);
    void tick(std::uint64_t now);
    void work_arrived(std::uint64_t now);

    // The host appended a block; move to the next height.
    void advance(std::uint64_t now);

    std::optional<std::uint64_t> next_deadline() const;

    bool is_validator() const { return active_; }
    std::uint64_t height() const { return cs_.height; }
    std::uint64_t round() const { return cs_.round; }
    const ConsensusState& state() const { return cs_; }

private:
    void on_proposal(const Proposal& p, std::uint64_t now);
    void on_vote(const Vote& v, std::uint64_t now);
    void on_round_change(const RoundChange& rc, std::uint64_t now);

    bool remember_block(const Block& b);
    void maybe_commit(std::uint64_t round, const Digest& hash, std::uint64_t now);
    void try_vote(std::uint64_t round, std::uint64_t now);
    void try_propose(std::uint64_t now);
    void move_to_round(std::uint64_t round, std::uint64_t now, bool announce);
    void note_round(const std::string& validator, std::uint64_t round, std::uint64_t now);
    bool work_pending() const;
    void arm(std::uint64_t now);
    void persist();

    EngineHost& host_;
    ValidatorSet validators_;
    ChainParams params_;
    std::string self_;
    std::optional<KeyPair> key_;
    bool active_ = false;
    std::size_t quorum_ = 1;

    ConsensusState cs_;
    std::map<std::uint64_t, Proposal> proposals_;
    std::map<Digest, Block> blocks_;
    std::map<std::uint64_t, std::map<Digest, std::map<std::string, Vote>>> votes_;
    std::map<std::uint64_t, std::map<std::string, RoundChange>> round_changes_;
    std::map<std::string, std::uint64_t> seen_round_;
    std::set<std::uint64_t> proposed_;
    std::vector<ConsensusMessage> future_;
    std::optional<std::uint64_t> round_deadline_;
    std::optional<std::uint64_t> batch_deadline_;
    bool committing_ = false;
};

} // namespace civic::consensus
