#include "civic/consensus.hpp"

#include <algorithm>

namespace civic::consensus {

std::size_t quorum(std::size_t n)
{
    return 2 * n / 3 + 1;
}

const ValidatorInfo& proposer_for(const ValidatorSet& validators, std::uint64_t height, std::uint64_t round)
{
    if (validators.empty())
        throw Error(Errc::EmptyValidatorSet, "no proposer without validators");
    return validators.at(static_cast<std::size_t>((height + round) % validators.size()));
}

bool Vote::verify(const ValidatorSet& validators) const
{
    const ValidatorInfo* v = validators.find(validator);
    return v && verify_signature(v->key, vote_signing_bytes(block_hash, height, round), signature);
}

Bytes RoundChange::signing_bytes() const
{
    Encoder e;
    e.str("civic-round-change").u64(height).u64(round);
    e.u8(locked_block ? 1 : 0);
    e.bytes(locked_block ? ByteView(locked_block->block_hash) : ByteView{});
    e.u64(locked_round);
    return std::move(e).take();
}

bool RoundChange::verify(const ValidatorSet& validators) const
{
    const ValidatorInfo* v = validators.find(validator);
    if (!v || !verify_signature(v->key, signing_bytes(), signature))
        return false;
    if (locked_block) {
        if (hash_block(locked_block->header) != locked_block->block_hash)
            return false;
        if (locked_block->header.height != height || locked_round >= round)
            return false;
    }
    return true;
}

Bytes proposal_signing_bytes(const Digest& block_hash, std::uint64_t height, std::uint64_t round)
{
    Encoder e;
    e.str("civic-proposal").bytes(block_hash).u64(height).u64(round);
    return std::move(e).take();
}

Bytes Proposal::signing_bytes() const
{
    return proposal_signing_bytes(block.block_hash, block.header.height, round);
}

Vote make_vote(const std::string& validator, const KeyPair& key, const Digest& block_hash, std::uint64_t height,
               std::uint64_t round)
{
    return {validator, block_hash, height, round, key.sign(vote_signing_bytes(block_hash, height, round))};
}

RoundChange make_round_change(const std::string& validator, const KeyPair& key, std::uint64_t height,
                              std::uint64_t round, const std::optional<Block>& locked, std::uint64_t locked_round)
{
    RoundChange rc{validator, height, round, locked, locked ? locked_round : 0, {}};
    if (rc.locked_block)
        rc.locked_block->commit_votes.clear();
    rc.signature = key.sign(rc.signing_bytes());
    return rc;
}

std::optional<Block> required_block(const std::vector<RoundChange>& justification)
{
    const RoundChange* best = nullptr;
    for (const auto& rc : justification) {
        if (!rc.locked_block)
            continue;
        if (!best || rc.locked_round > best->locked_round ||
            (rc.locked_round == best->locked_round && rc.locked_block->block_hash < best->locked_block->block_hash))
            best = &rc;
    }
    if (!best)
        return std::nullopt;
    return best->locked_block;
}

void check_justification(const std::vector<RoundChange>& justification, const ValidatorSet& validators,
                         std::uint64_t height, std::uint64_t round)
{
    std::set<std::string> senders;
    for (const auto& rc : justification) {
        if (rc.height != height || rc.round != round)
            throw Error(Errc::BadJustification, "round change for another height or round");
        if (!rc.verify(validators))
            throw Error(Errc::BadJustification, "round change from " + rc.validator + " does not verify");
        senders.insert(rc.validator);
    }
    if (senders.size() < quorum(validators.size()))
        throw Error(Errc::BadJustification, std::to_string(senders.size()) + " round changes, quorum is " +
                                                std::to_string(quorum(validators.size())));
}

std::uint64_t message_height(const ConsensusMessage& m)
{
    return std::visit(
        [](const auto& x) -> std::uint64_t {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Proposal>)
                return x.block.header.height;
            else
                return x.height;
        },
        m);
}

Bytes ConsensusState::encode() const
{
    Encoder e;
    e.u64(height).u64(round);
    e.u8(voted_round ? 1 : 0).u64(voted_round.value_or(0));
    e.u8(locked_block ? 1 : 0);
    e.bytes(locked_block ? locked_block->encode() : Bytes{});
    e.u64(locked_round);
    return std::move(e).take();
}

ConsensusState ConsensusState::decode(ByteView in)
{
    Decoder d(in);
    ConsensusState s;
    s.height = d.u64();
    s.round = d.u64();
    const bool voted = d.u8() != 0;
    const std::uint64_t vr = d.u64();
    if (voted)
        s.voted_round = vr;
    const bool locked = d.u8() != 0;
    const Bytes block = d.bytes();
    if (locked)
        s.locked_block = Block::decode(block);
    s.locked_round = d.u64();
    d.expect_done();
    return s;
}

Engine::Engine(EngineHost& host, ValidatorSet validators, ChainParams params, std::string self,
               std::optional<KeyPair> key)
    : host_(host), validators_(std::move(validators)), params_(params), self_(std::move(self)), key_(std::move(key))
{
    const ValidatorInfo* me = validators_.find(self_);
    active_ = me && key_ && me->key == key_->public_key();
    quorum_ = quorum(validators_.size());
}

void Engine::persist()
{
    if (active_)
        host_.persist(cs_);
}

void Engine::start(std::uint64_t now, const std::optional<ConsensusState>& restored)
{
    cs_ = ConsensusState{};
    cs_.height = host_.tip().header.height + 1;
    if (restored && restored->height == cs_.height) {
        cs_ = *restored;
        if (cs_.locked_block)
            blocks_[cs_.locked_block->block_hash] = *cs_.locked_block;
    }
    persist();
    arm(now);
}

void Engine::advance(std::uint64_t now)
{
    cs_ = ConsensusState{};
    cs_.height = host_.tip().header.height + 1;
    proposals_.clear();
    blocks_.clear();
    votes_.clear();
    round_changes_.clear();
    seen_round_.clear();
    proposed_.clear();
    round_deadline_.reset();
    batch_deadline_.reset();
    persist();

    auto buffered = std::move(future_);
    future_.clear();
    const std::uint64_t h = cs_.height;
    for (auto& m : buffered) {
        if (cs_.height != h)
            break;
        handle(m, now);
    }
    if (cs_.height == h) {
        arm(now);
        try_propose(now);
    }
}

void Engine::handle(const ConsensusMessage& msg, std::uint64_t now)
{
    if (!active_)
        return;
    const std::uint64_t h = message_height(msg);
    if (h < cs_.height)
        return;
    if (h > cs_.height) {
        if (h == cs_.height + 1 && future_.size() < 4096)
            future_.push_back(msg);
        return;
    }
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Proposal>)
                on_proposal(m, now);
            else if constexpr (std::is_same_v<T, Vote>)
                on_vote(m, now);
            else
                on_round_change(m, now);
        },
        msg);
}

bool Engine::remember_block(const Block& b)
{
    if (blocks_.count(b.block_hash))
        return true;
    if (hash_block(b.header) != b.block_hash)
        return false;
    try {
        host_.check_block(b);
    } catch (const Error&) {
        return false;
    }
    Block copy = b;
    copy.commit_votes.clear();
    blocks_.emplace(b.block_hash, std::move(copy));
    return true;
}

void Engine::on_proposal(const Proposal& p, std::uint64_t now)
{
    const std::uint64_t h = cs_.height;
    if (proposals_.count(p.round))
        return;
    const ValidatorInfo& expected = proposer_for(validators_, h, p.round);
    if (p.proposer != expected.id || !verify_signature(expected.key, p.signing_bytes(), p.signature))
        return;
    if (p.round > 0) {
        try {
            check_justification(p.justification, validators_, h, p.round);
        } catch (const Error&) {
            return;
        }
        if (auto req = required_block(p.justification); req && req->block_hash != p.block.block_hash)
            return;
    }
    if (!remember_block(p.block))
        return;
    proposals_.emplace(p.round, p);

    if (p.round > cs_.round)
        move_to_round(p.round, now, false);
    if (cs_.height != h)
        return;
    arm(now);
    try_vote(p.round, now);
    if (cs_.height != h)
        return;

    std::vector<std::uint64_t> rounds;
    for (const auto& [r, by_hash] : votes_)
        if (by_hash.count(p.block.block_hash))
            rounds.push_back(r);
    for (auto r : rounds) {
        maybe_commit(r, p.block.block_hash, now);
        if (cs_.height != h)
            return;
    }
    note_round(p.proposer, p.round, now);
}

void Engine::on_vote(const Vote& v, std::uint64_t now)
{
    if (!v.verify(validators_))
        return;
    auto& slot = votes_[v.round][v.block_hash];
    if (slot.count(v.validator))
        return;
    // one vote per validator per round
    for (const auto& [hash, voters] : votes_[v.round])
        if (hash != v.block_hash && voters.count(v.validator))
            return;
    slot.emplace(v.validator, v);
    const std::uint64_t h = cs_.height;
    arm(now);
    maybe_commit(v.round, v.block_hash, now);
    if (cs_.height != h)
        return;
    note_round(v.validator, v.round, now);
}

void Engine::on_round_change(const RoundChange& rc, std::uint64_t now)
{
    if (!rc.verify(validators_))
        return;
    if (rc.locked_block && !remember_block(*rc.locked_block))
        return;
    auto& slot = round_changes_[rc.round];
    if (slot.count(rc.validator))
        return;
    slot.emplace(rc.validator, rc);
    const std::uint64_t h = cs_.height;
    arm(now);
    note_round(rc.validator, rc.round, now);
    if (cs_.height != h)
        return;
    try_propose(now);
}

void Engine::maybe_commit(std::uint64_t round, const Digest& hash, std::uint64_t now)
{
    if (committing_)
        return;
    auto r = votes_.find(round);
    if (r == votes_.end())
        return;
    auto v = r->second.find(hash);
    if (v == r->second.end() || v->second.size() < quorum_)
        return;
    auto b = blocks_.find(hash);
    if (b == blocks_.end())
        return;
    Block block = b->second;
    for (const auto& [id, vote] : v->second)
        block.commit_votes.push_back(vote.commit_vote());
    committing_ = true;
    host_.commit(block);
    committing_ = false;
    advance(now);
}

void Engine::try_vote(std::uint64_t round, std::uint64_t now)
{
    if (round != cs_.round || (cs_.voted_round && *cs_.voted_round >= round))
        return;
    auto it = proposals_.find(round);
    if (it == proposals_.end())
        return;
    const Block& block = blocks_.at(it->second.block.block_hash);
    cs_.voted_round = round;
    cs_.locked_block = block;
    cs_.locked_round = round;
    persist();
    const Vote v = make_vote(self_, *key_, block.block_hash, cs_.height, round);
    host_.broadcast(v);
    on_vote(v, now);
}

void Engine::try_propose(std::uint64_t now)
{
    if (!active_ || committing_)
        return;
    const std::uint64_t h = cs_.height;
    const std::uint64_t r = cs_.round;
    if (proposer_for(validators_, h, r).id != self_ || proposed_.count(r))
        return;

    std::optional<Block> block;
    std::vector<RoundChange> justification;
    if (r == 0) {
        if (host_.pending() == 0)
            return;
        arm(now);
        if (host_.pending() < params_.block_capacity && batch_deadline_ && now < *batch_deadline_)
            return;
        block = host_.build_block(h, r);
    } else {
        auto it = round_changes_.find(r);
        if (it == round_changes_.end() || it->second.size() < quorum_)
            return;
        for (const auto& [id, rc] : it->second)
            justification.push_back(rc);
        block = required_block(justification);
        if (!block) {
            if (host_.pending() == 0)
                return;
            block = host_.build_block(h, r);
        }
    }
    if (!block)
        return;
    block->commit_votes.clear();

    Proposal p{std::move(*block), r, self_, std::move(justification), {}};
    p.signature = key_->sign(p.signing_bytes());
    proposed_.insert(r);
    batch_deadline_.reset();
    host_.broadcast(p);
    on_proposal(p, now);
}

void Engine::move_to_round(std::uint64_t round, std::uint64_t now, bool announce)
{
    if (round <= cs_.round)
        return;
    cs_.round = round;
    batch_deadline_.reset();
    persist();
    round_deadline_ = now + params_.round_timeout_ms;
    if (announce) {
        RoundChange rc = make_round_change(self_, *key_, cs_.height, round, cs_.locked_block, cs_.locked_round);
        round_changes_[round].emplace(self_, rc);
        host_.broadcast(rc);
    }
    const std::uint64_t h = cs_.height;
    try_vote(round, now);
    if (cs_.height != h)
        return;
    try_propose(now);
}

void Engine::note_round(const std::string& validator, std::uint64_t round, std::uint64_t now)
{
    if (validator == self_)
        return;
    auto& seen = seen_round_[validator];
    seen = std::max(seen, round);

    const std::size_t needed = validators_.size() - quorum_ + 1;
    std::vector<std::uint64_t> ahead;
    for (const auto& [id, r] : seen_round_)
        if (r > cs_.round)
            ahead.push_back(r);
    if (ahead.size() < needed)
        return;
    std::sort(ahead.rbegin(), ahead.rend());
    move_to_round(ahead[needed - 1], now, true);
}

bool Engine::work_pending() const
{
    return host_.pending() > 0 || cs_.locked_block || !proposals_.empty() || !votes_.empty() ||
           !round_changes_.empty();
}

void Engine::arm(std::uint64_t now)
{
    if (!active_)
        return;
    if (!round_deadline_ && work_pending())
        round_deadline_ = now + params_.round_timeout_ms;
    if (!batch_deadline_ && host_.pending() > 0 && !proposed_.count(cs_.round) && !committing_ &&
        proposer_for(validators_, cs_.height, cs_.round).id == self_ &&
        (cs_.round == 0 || (round_changes_.count(cs_.round) && round_changes_.at(cs_.round).size() >= quorum_)))
        batch_deadline_ = now + (cs_.round == 0 ? params_.block_timer_ms : 0);
}

void Engine::tick(std::uint64_t now)
{
    if (!active_)
        return;
    if (round_deadline_ && now >= *round_deadline_) {
        round_deadline_.reset();
        host_.round_timeout(cs_.height, cs_.round);
        move_to_round(cs_.round + 1, now, true);
        return;
    }
    if (batch_deadline_ && now >= *batch_deadline_) {
        try_propose(now);
        if (batch_deadline_ && now >= *batch_deadline_) {
            // Not proposable yet; the next proposal, round change or tx re-arms it.
            batch_deadline_.reset();
            if (!round_deadline_ && work_pending())
                round_deadline_ = now + params_.round_timeout_ms;
            return;
        }
    }
    arm(now);
}

void Engine::work_arrived(std::uint64_t now)
{
    arm(now);
    try_propose(now);
}

std::optional<std::uint64_t> Engine::next_deadline() const
{
    std::optional<std::uint64_t> d = round_deadline_;
    if (batch_deadline_ && (!d || *batch_deadline_ < *d))
        d = batch_deadline_;
    return d;
}

} // namespace civic::consensus
