#include "civic/error.hpp"

namespace civic {

std::string_view errc_name(Errc code)
{
    switch (code) {
    case Errc::Malformed: return "Malformed";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Io: return "Io";
    case Errc::EmptyValidatorSet: return "EmptyValidatorSet";
    case Errc::ParentMismatch: return "ParentMismatch";
    case Errc::BadHeight: return "BadHeight";
    case Errc::BadTxRoot: return "BadTxRoot";
    case Errc::BadSignature: return "BadSignature";
    case Errc::InsufficientVotes: return "InsufficientVotes";
    case Errc::BadBlockHash: return "BadBlockHash";
    case Errc::BadTimestamp: return "BadTimestamp";
    case Errc::BadGenesis: return "BadGenesis";
    case Errc::CorruptStore: return "CorruptStore";
    case Errc::NotProposer: return "NotProposer";
    case Errc::EmptyMempool: return "EmptyMempool";
    case Errc::UnknownVoter: return "UnknownVoter";
    case Errc::BadVoteSignature: return "BadVoteSignature";
    case Errc::NotValidator: return "NotValidator";
    case Errc::AlreadyVoted: return "AlreadyVoted";
    case Errc::StaleMessage: return "StaleMessage";
    case Errc::BadJustification: return "BadJustification";
    case Errc::DuplicateCredential: return "DuplicateCredential";
    case Errc::NotAuthority: return "NotAuthority";
    case Errc::BadAuthoritySignature: return "BadAuthoritySignature";
    case Errc::Expired: return "Expired";
    case Errc::Revoked: return "Revoked";
    case Errc::BadChallengeResponse: return "BadChallengeResponse";
    case Errc::ReplayedNonce: return "ReplayedNonce";
    case Errc::NotActive: return "NotActive";
    case Errc::UnregisteredIssuer: return "UnregisteredIssuer";
    case Errc::WrongIssuerForType: return "WrongIssuerForType";
    case Errc::EmptyPayload: return "EmptyPayload";
    case Errc::DuplicateDocument: return "DuplicateDocument";
    case Errc::BadSupersedes: return "BadSupersedes";
    case Errc::NotFound: return "NotFound";
    case Errc::Denied: return "Denied";
    case Errc::EmptyRequiredList: return "EmptyRequiredList";
    case Errc::UnregisteredProvider: return "UnregisteredProvider";
    case Errc::ServiceConflict: return "ServiceConflict";
    case Errc::UnknownService: return "UnknownService";
    case Errc::Unauthenticated: return "Unauthenticated";
    case Errc::WrongState: return "WrongState";
    case Errc::NotRequestOwner: return "NotRequestOwner";
    case Errc::NotProvider: return "NotProvider";
    case Errc::CollectionFailed: return "CollectionFailed";
    case Errc::StaleFulfillment: return "StaleFulfillment";
    case Errc::AdmissionFailed: return "AdmissionFailed";
    case Errc::DuplicateTx: return "DuplicateTx";
    case Errc::BadNonce: return "BadNonce";
    case Errc::ScenarioStuck: return "ScenarioStuck";
    }
    return "Unknown";
}

} // namespace civic
