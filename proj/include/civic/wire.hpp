#pragma once

#include <string>
#include <variant>

#include "civic/consensus.hpp"
#include "civic/ledger.hpp"
#include "civic/registry.hpp"

// Peer-to-peer messages. A frame is u8 tag | u32 length | body, and every body
// starts with the sender's node id.
namespace civic::wire {

struct TxGossip {
    Transaction tx;
};

struct CommittedBlock {
    Block block;
};

struct SyncRequest {
    std::uint64_t from_height = 0;
};

// Provider asks an issuer node for a payload under a committed grant.
struct DocFetchRequest {
    std::uint64_t ref = 0;
    Digest doc_id{};
    std::string requester; // organization id
    Bytes signature;       // requester organization key over signing_bytes()

    Bytes signing_bytes() const;
};

struct DocFetchResponse {
    std::uint64_t ref = 0;
    Digest doc_id{};
    registry::ReadOutcome outcome = registry::ReadOutcome::NotFound;
    Bytes payload;
};

using Message = std::variant<TxGossip, consensus::Proposal, consensus::Vote, consensus::RoundChange, CommittedBlock,
                             SyncRequest, DocFetchRequest, DocFetchResponse>;

enum class Tag : std::uint8_t {
    TxGossip = 1,
    Proposal = 2,
    Vote = 3,
    RoundChange = 4,
    CommittedBlock = 5,
    SyncRequest = 6,
    DocFetchRequest = 7,
    DocFetchResponse = 8,
};

Tag tag_of(const Message& m);
std::string_view tag_name(Tag t);

struct Envelope {
    std::string from;
    Message message;
};

Bytes encode(const Envelope& env);
Envelope decode(ByteView frame);

} // namespace civic::wire
