#include "civic/wire.hpp"

namespace civic::wire {

namespace {

using consensus::Proposal;
using consensus::RoundChange;
using consensus::Vote;

void put_round_change(Encoder& e, const RoundChange& rc)
{
    e.str(rc.validator).u64(rc.height).u64(rc.round);
    e.u8(rc.locked_block ? 1 : 0);
    e.bytes(rc.locked_block ? rc.locked_block->encode() : Bytes{});
    e.u64(rc.locked_round).bytes(rc.signature);
}

RoundChange get_round_change(Decoder& d)
{
    RoundChange rc;
    rc.validator = d.str();
    rc.height = d.u64();
    rc.round = d.u64();
    const bool locked = d.u8() != 0;
    const Bytes block = d.bytes();
    if (locked)
        rc.locked_block = Block::decode(block);
    rc.locked_round = d.u64();
    rc.signature = d.bytes();
    return rc;
}

struct BodyWriter {
    Encoder& e;

    void operator()(const TxGossip& m) { e.bytes(m.tx.encode_signed()); }
    void operator()(const Proposal& m)
    {
        e.bytes(m.block.encode()).u64(m.round).str(m.proposer).count(m.justification.size());
        for (const auto& rc : m.justification)
            put_round_change(e, rc);
        e.bytes(m.signature);
    }
    void operator()(const Vote& m) { e.str(m.validator).bytes(m.block_hash).u64(m.height).u64(m.round).bytes(m.signature); }
    void operator()(const RoundChange& m) { put_round_change(e, m); }
    void operator()(const CommittedBlock& m) { e.bytes(m.block.encode()); }
    void operator()(const SyncRequest& m) { e.u64(m.from_height); }
    void operator()(const DocFetchRequest& m) { e.u64(m.ref).bytes(m.doc_id).str(m.requester).bytes(m.signature); }
    void operator()(const DocFetchResponse& m)
    {
        e.u64(m.ref).bytes(m.doc_id).u8(static_cast<std::uint8_t>(m.outcome)).bytes(m.payload);
    }
};

} // namespace

Bytes DocFetchRequest::signing_bytes() const
{
    Encoder e;
    e.str("civic-doc-fetch").u64(ref).bytes(doc_id).str(requester);
    return std::move(e).take();
}

Tag tag_of(const Message& m)
{
    return static_cast<Tag>(m.index() + 1);
}

std::string_view tag_name(Tag t)
{
    switch (t) {
    case Tag::TxGossip: return "TxGossip";
    case Tag::Proposal: return "Proposal";
    case Tag::Vote: return "Vote";
    case Tag::RoundChange: return "RoundChange";
    case Tag::CommittedBlock: return "CommittedBlock";
    case Tag::SyncRequest: return "SyncRequest";
    case Tag::DocFetchRequest: return "DocFetchRequest";
    case Tag::DocFetchResponse: return "DocFetchResponse";
    }
    return "?";
}

Bytes encode(const Envelope& env)
{
    Encoder body;
    body.str(env.from);
    std::visit(BodyWriter{body}, env.message);
    Encoder frame;
    frame.u8(static_cast<std::uint8_t>(tag_of(env.message))).bytes(body.data());
    return std::move(frame).take();
}

Envelope decode(ByteView frame)
{
    Decoder outer(frame);
    const std::uint8_t tag = outer.u8();
    const Bytes body = outer.bytes();
    outer.expect_done();

    Decoder d(body);
    Envelope env;
    env.from = d.str();
    switch (static_cast<Tag>(tag)) {
    case Tag::TxGossip: env.message = TxGossip{Transaction::decode(d.bytes())}; break;
    case Tag::Proposal: {
        Proposal p;
        p.block = Block::decode(d.bytes());
        p.round = d.u64();
        p.proposer = d.str();
        p.justification.resize(d.count(1024));
        for (auto& rc : p.justification)
            rc = get_round_change(d);
        p.signature = d.bytes();
        env.message = std::move(p);
        break;
    }
    case Tag::Vote: {
        Vote v;
        v.validator = d.str();
        v.block_hash = d.fixed<32>();
        v.height = d.u64();
        v.round = d.u64();
        v.signature = d.bytes();
        env.message = std::move(v);
        break;
    }
    case Tag::RoundChange: env.message = get_round_change(d); break;
    case Tag::CommittedBlock: env.message = CommittedBlock{Block::decode(d.bytes())}; break;
    case Tag::SyncRequest: env.message = SyncRequest{d.u64()}; break;
    case Tag::DocFetchRequest: {
        DocFetchRequest r;
        r.ref = d.u64();
        r.doc_id = d.fixed<32>();
        r.requester = d.str();
        r.signature = d.bytes();
        env.message = std::move(r);
        break;
    }
    case Tag::DocFetchResponse: {
        DocFetchResponse r;
        r.ref = d.u64();
        r.doc_id = d.fixed<32>();
        const std::uint8_t o = d.u8();
        if (o > static_cast<std::uint8_t>(registry::ReadOutcome::NotFound))
            throw Error(Errc::Malformed, "unknown read outcome");
        r.outcome = static_cast<registry::ReadOutcome>(o);
        r.payload = d.bytes();
        env.message = std::move(r);
        break;
    }
    default: throw Error(Errc::Malformed, "unknown message tag " + std::to_string(tag));
    }
    d.expect_done();
    return env;
}

} // namespace civic::wire
