#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace civic {

// Error codes are named after the failure they report; errc_name() yields the
// exact token printed by the CLI and returned by the HTTP API.
enum class Errc {
    Malformed,
    InvalidConfig,
    Io,
    // ledger
    EmptyValidatorSet,
    ParentMismatch,
    BadHeight,
    BadTxRoot,
    BadSignature,
    InsufficientVotes,
    BadBlockHash,
    BadTimestamp,
    BadGenesis,
    CorruptStore,
    // consensus
    NotProposer,
    EmptyMempool,
    UnknownVoter,
    BadVoteSignature,
    NotValidator,
    AlreadyVoted,
    StaleMessage,
    BadJustification,
    // identity
    DuplicateCredential,
    NotAuthority,
    BadAuthoritySignature,
    Expired,
    Revoked,
    BadChallengeResponse,
    ReplayedNonce,
    NotActive,
    // registry
    UnregisteredIssuer,
    WrongIssuerForType,
    EmptyPayload,
    DuplicateDocument,
    BadSupersedes,
    NotFound,
    Denied,
    // contracts
    EmptyRequiredList,
    UnregisteredProvider,
    ServiceConflict,
    UnknownService,
    Unauthenticated,
    WrongState,
    NotRequestOwner,
    NotProvider,
    CollectionFailed,
    StaleFulfillment,
    // node
    AdmissionFailed,
    DuplicateTx,
    BadNonce,
    // harness
    ScenarioStuck,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail)
        : std::runtime_error(std::string(errc_name(code)) + (detail.empty() ? "" : ": " + detail)),
          code_(code), detail_(detail) {}
    explicit Error(Errc code) : Error(code, "") {}

    Errc code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    Errc code_;
    std::string detail_;
};

} // namespace civic
