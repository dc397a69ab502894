#include <gtest/gtest.h>

#include "civic/contracts.hpp"
#include "support.hpp"

using namespace civic;
using namespace civic::contracts;
using test::code_of;

namespace {

struct Housing {
    test::World w;
    registry::OffChainStore store;
    KeyPair provider = sim::org_key("housing");
    KeyPair citizen = sim::citizen_key("C-1001");
    identity::NonceRegistry auth{1};
    identity::CitizenIdentity who;
    std::map<std::string, DocumentRecord> docs;

    Housing()
    {
        const KeyPair authority = sim::org_key("egov");
        auto k = identity::issue_ekey(authority, "C-1001", citizen.public_key(), w.now, 365 * kMsPerDay, w.state,
                                      w.nonce(authority));
        w.commit(k.tx);
        who = identity::authenticate(identity::respond_to_challenge(k.credential, citizen, auth.issue()), w.state,
                                     w.now, auth);
        w.commit(register_service(provider, housing_contract(), w.state, w.nonce(provider)));
    }

    DocumentRecord issue(const std::string& label, const std::string& org, const std::string& subject,
                         const std::string& type, std::uint64_t age_ms = 0,
                         std::optional<Digest> supersedes = std::nullopt)
    {
        const KeyPair k = sim::org_key(org);
        auto d = registry::issue_document(k, *w.config, subject, type, as_view(label), w.now - age_ms, kForever,
                                          supersedes, w.nonce(k), store);
        w.commit(d.tx);
        docs[label] = d.record;
        return d.record;
    }

    void all_but_income()
    {
        issue("id-h", "cio", "C-1001", "IdentityCard");
        issue("id-w", "cio", "C-1002", "IdentityCard");
        issue("property", "housing", "C-1001", "PropertyCertificate");
        issue("benefit", "benefit", "C-1001", "BenefitReport");
        issue("birth", "civil", "C-1003", "BirthCertificate");
        issue("pp-h", "civil", "C-1001", "Passport");
        issue("pp-w", "civil", "C-1002", "Passport");
    }

    Digest initiate()
    {
        const auto tx = initiate_request(citizen, who, "housing", {"C-1002", "C-1003"}, w.now, w.state,
                                         w.nonce(citizen));
        w.commit(tx);
        return tx.id();
    }

    RequestState state(const Digest& id) const { return w.state.request(id)->state; }
};

} // namespace

TEST(Contracts, HousingContractShape)
{
    const auto c = housing_contract();
    ASSERT_EQ(c.required.size(), 6u);
    EXPECT_EQ(c.required[0], (RequirementLine{"IdentityCard", 2, Freshness::ValidAtRequest, 0, HolderScope::Household}));
    EXPECT_EQ(c.required[3].max_age_ms, 2'592'000'000ull);
    EXPECT_EQ(ServiceContract::decode(c.encode()), c);

    const auto dir = test::temp_dir("contracts-yaml");
    save_contracts({c}, dir / "c.yaml");
    const auto back = load_contracts(dir / "c.yaml");
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0], c);
    EXPECT_EQ(load_contracts(std::filesystem::path(CIVIC_SOURCE_DIR) / "contracts/housing.yaml").at(0), c);
}

TEST(Contracts, RegistrationRules)
{
    test::World w;
    auto empty = housing_contract();
    empty.required.clear();
    EXPECT_EQ(code_of([&] { register_service(sim::org_key("housing"), empty, w.state, 1); }),
              Errc::EmptyRequiredList);
    EXPECT_EQ(code_of([&] { register_service(sim::org_key("cio"), housing_contract(), w.state, 1); }),
              Errc::UnregisteredProvider);
    EXPECT_EQ(code_of([&] { register_service(sim::org_key("housing"), housing_contract("nobody"), w.state, 1); }),
              Errc::UnregisteredProvider);
    auto zero = housing_contract();
    zero.required[0].count = 0;
    EXPECT_EQ(code_of([&] { register_service(sim::org_key("housing"), zero, w.state, 1); }), Errc::Malformed);
}

TEST(Contracts, HappyPath)
{
    Housing h;
    h.all_but_income();
    h.issue("income", "employer", "C-1001", "IncomeLetter", 2 * kMsPerDay);
    const Digest id = h.initiate();
    ASSERT_EQ(h.state(id), RequestState::DocumentsFulfilled);
    EXPECT_EQ(h.w.state.request(id)->fulfillment.doc_ids().size(), 8u);

    h.w.commit(grant_consent(h.citizen, h.who, id, h.w.state, h.w.now, h.w.nonce(h.citizen)));
    EXPECT_EQ(h.state(id), RequestState::ConsentGranted);
    h.w.commit(authorize_collection(h.provider, id, h.w.state, h.w.now, h.w.nonce(h.provider)));
    const auto* req = h.w.state.request(id);
    ASSERT_TRUE(req->grant_id.has_value());
    const auto& g = h.w.state.grants.at(*req->grant_id).grant;
    EXPECT_EQ(g.grantee, "housing");
    EXPECT_EQ(g.doc_ids, req->consented);
    EXPECT_EQ(g.expires_at - g.granted_at, h.w.config->params.collection_window_ms);

    const auto read = registry::read_document("housing", h.docs["pp-w"].doc_id, h.w.state, h.w.now, h.store, nullptr);
    EXPECT_TRUE(read.allowed());
    EXPECT_FALSE(registry::read_document("benefit", h.docs["pp-w"].doc_id, h.w.state, h.w.now, h.store, nullptr)
                     .allowed());

    h.w.commit(record_collection(h.provider, id, h.w.state, h.w.now, h.w.nonce(h.provider)));
    EXPECT_EQ(h.state(id), RequestState::Collected);
    h.w.commit(complete_request(h.provider, id, h.w.state, h.w.now, h.w.nonce(h.provider)));
    EXPECT_EQ(h.state(id), RequestState::Completed);

    std::vector<RequestState> seen;
    for (const auto& t : h.w.state.request(id)->history)
        seen.push_back(t.to);
    EXPECT_EQ(seen, (std::vector<RequestState>{RequestState::Initiated, RequestState::DocumentsFulfilled,
                                               RequestState::ConsentGranted, RequestState::Collected,
                                               RequestState::Completed}));

    // the grant outlives completion only by the retention period
    const auto done = *h.w.state.request(id)->completed_at;
    const auto& entry = h.w.state.grants.at(*h.w.state.request(id)->grant_id);
    EXPECT_EQ(registry::grant_expiry(entry, h.w.state), done + h.w.config->params.grant_retention_ms);
}

TEST(Contracts, StaleIncomeLetterWaitsForRenewal)
{
    Housing h;
    h.all_but_income();
    const auto old = h.issue("income-old", "employer", "C-1001", "IncomeLetter", 45 * kMsPerDay);
    const Digest id = h.initiate();
    ASSERT_EQ(h.state(id), RequestState::AwaitingDocuments);
    EXPECT_EQ(h.w.state.request(id)->fulfillment.missing, std::vector<std::string>{"IncomeLetter"});
    EXPECT_EQ(code_of([&] { grant_consent(h.citizen, h.who, id, h.w.state, h.w.now, 99); }), Errc::WrongState);

    const auto fresh = h.issue("income-new", "employer", "C-1001", "IncomeLetter", 0, old.doc_id);
    EXPECT_EQ(h.state(id), RequestState::DocumentsFulfilled);
    const auto& last = h.w.state.request(id)->history.back();
    EXPECT_EQ(last.to, RequestState::DocumentsFulfilled);
    EXPECT_EQ(last.tx_id, h.w.state.document(fresh.doc_id)->tx_id);
    const auto ids = h.w.state.request(id)->fulfillment.doc_ids();
    EXPECT_NE(std::find(ids.begin(), ids.end(), fresh.doc_id), ids.end());
    EXPECT_EQ(std::find(ids.begin(), ids.end(), old.doc_id), ids.end());
}

TEST(Contracts, FreshnessBoundary)
{
    ServiceContract c;
    c.service_id = "s";
    c.provider = "housing";
    c.required = {{"IncomeLetter", 1, Freshness::MaxAge, 30 * kMsPerDay, HolderScope::Applicant}};
    test::World w;
    registry::OffChainStore store;
    const KeyPair emp = sim::org_key("employer");
    auto d = registry::issue_document(emp, *w.config, "C-1", "IncomeLetter", as_view("x"), w.now, kForever,
                                      std::nullopt, 1, store);
    w.commit(d.tx);
    ServiceRequest req;
    req.citizen = "C-1";
    const auto t0 = d.record.issued_at;
    EXPECT_TRUE(evaluate_fulfillment(req, c, w.state, t0 + 30 * kMsPerDay).complete());
    EXPECT_FALSE(evaluate_fulfillment(req, c, w.state, t0 + 30 * kMsPerDay + 1).complete());
}

TEST(Contracts, HolderScopes)
{
    ServiceRequest req;
    req.citizen = "A";
    req.household = {"B", "C"};
    EXPECT_EQ(scope_subjects(req, HolderScope::Applicant), std::vector<std::string>{"A"});
    EXPECT_EQ(scope_subjects(req, HolderScope::Dependents), (std::vector<std::string>{"B", "C"}));
    EXPECT_EQ(scope_subjects(req, HolderScope::Household), (std::vector<std::string>{"A", "B", "C"}));
}

TEST(Contracts, HouseholdDocumentsMustBelongToDistinctMembers)
{
    Housing h;
    h.all_but_income();
    h.issue("id-h2", "cio", "C-1001", "IdentityCard");
    h.issue("income", "employer", "C-1001", "IncomeLetter");
    const Digest id = h.initiate();
    const auto& matched = h.w.state.request(id)->fulfillment.matched.at(0);
    ASSERT_EQ(matched.second.size(), 2u);
    std::set<std::string> subjects;
    for (const auto& d : matched.second)
        subjects.insert(h.w.state.document(d)->record.subject);
    EXPECT_EQ(subjects, (std::set<std::string>{"C-1001", "C-1002"}));
}

TEST(Contracts, OnlyOwnerAndProviderAct)
{
    Housing h;
    h.all_but_income();
    h.issue("income", "employer", "C-1001", "IncomeLetter");
    const Digest id = h.initiate();

    const KeyPair wife = sim::citizen_key("C-1002");
    const auto authority = sim::org_key("egov");
    auto k = identity::issue_ekey(authority, "C-1002", wife.public_key(), h.w.now, kMsPerDay, h.w.state,
                                  h.w.nonce(authority));
    h.w.commit(k.tx);
    identity::CitizenIdentity wife_id{"C-1002", k.credential.id(), wife.public_key()};
    EXPECT_EQ(code_of([&] { grant_consent(wife, wife_id, id, h.w.state, h.w.now, 1); }), Errc::NotRequestOwner);

    // a consent signed by someone else is refused at commit
    ConsentRecord forged{id, h.w.state.request(id)->fulfillment.doc_ids(), h.w.now};
    EXPECT_NE(code_of([&] { h.w.commit(sign_transaction(TxKind::ConsentGranted, forged.encode(), wife, 1)); }),
              Errc::Malformed);

    EXPECT_EQ(code_of([&] { authorize_collection(h.provider, id, h.w.state, h.w.now, 1); }), Errc::WrongState);
    h.w.commit(grant_consent(h.citizen, h.who, id, h.w.state, h.w.now, h.w.nonce(h.citizen)));
    EXPECT_EQ(code_of([&] { authorize_collection(sim::org_key("benefit"), id, h.w.state, h.w.now, 1); }),
              Errc::NotProvider);
    EXPECT_EQ(code_of([&] { record_collection(h.provider, id, h.w.state, h.w.now, 1); }), Errc::WrongState);
    EXPECT_EQ(code_of([&] { complete_request(h.provider, id, h.w.state, h.w.now, 1); }), Errc::WrongState);
}

TEST(Contracts, GrantMustMatchConsent)
{
    Housing h;
    h.all_but_income();
    h.issue("income", "employer", "C-1001", "IncomeLetter");
    const Digest id = h.initiate();
    h.w.commit(grant_consent(h.citizen, h.who, id, h.w.state, h.w.now, h.w.nonce(h.citizen)));

    AccessGrant g;
    g.request_id = id;
    g.grantee = "housing";
    g.doc_ids = h.w.state.request(id)->consented;
    g.doc_ids.pop_back();
    g.granted_at = h.w.now;
    g.expires_at = h.w.now + h.w.config->params.collection_window_ms;
    g.grant_id = g.compute_id();
    const auto tx = sign_transaction(TxKind::AccessGranted, g.encode(), h.provider, h.w.nonce(h.provider));
    EXPECT_EQ(code_of([&] { h.w.commit(tx); }), Errc::AdmissionFailed);

    g.doc_ids = h.w.state.request(id)->consented;
    g.expires_at += 1;
    g.grant_id = g.compute_id();
    const auto tx2 = sign_transaction(TxKind::AccessGranted, g.encode(), h.provider, h.w.nonce(h.provider));
    EXPECT_EQ(code_of([&] { h.w.commit(tx2); }), Errc::Malformed);
}

TEST(Contracts, ConsentGoesStaleWhenDocumentSuperseded)
{
    Housing h;
    h.all_but_income();
    const auto letter = h.issue("income", "employer", "C-1001", "IncomeLetter");
    const Digest id = h.initiate();
    const auto consent = grant_consent(h.citizen, h.who, id, h.w.state, h.w.now, h.w.nonce(h.citizen));
    h.issue("income-2", "employer", "C-1001", "IncomeLetter", 0, letter.doc_id);
    EXPECT_EQ(h.state(id), RequestState::DocumentsFulfilled);
    EXPECT_EQ(code_of([&] { h.w.commit(consent); }), Errc::StaleFulfillment);
}

TEST(Contracts, WithdrawAndReject)
{
    Housing h;
    const Digest a = h.initiate();
    EXPECT_EQ(h.state(a), RequestState::AwaitingDocuments);
    h.w.commit(reject_request(h.citizen, a, "withdrawn", h.w.state, h.w.now, h.w.nonce(h.citizen)));
    EXPECT_EQ(h.state(a), RequestState::Rejected);
    EXPECT_EQ(code_of([&] { reject_request(h.provider, a, "again", h.w.state, h.w.now, 1); }), Errc::WrongState);

    const Digest b = h.initiate();
    EXPECT_EQ(code_of([&] { reject_request(sim::org_key("benefit"), b, "no", h.w.state, h.w.now, 1); }),
              Errc::Unauthenticated);
    h.w.commit(reject_request(h.provider, b, "ineligible", h.w.state, h.w.now, h.w.nonce(h.provider)));
    EXPECT_EQ(h.state(b), RequestState::Rejected);
    EXPECT_TRUE(is_terminal(RequestState::Rejected));
    EXPECT_FALSE(is_terminal(RequestState::Collected));
}

TEST(Contracts, UnknownServiceAndUnauthenticatedCitizen)
{
    Housing h;
    EXPECT_EQ(code_of([&] { initiate_request(h.citizen, h.who, "pension", {}, h.w.now, h.w.state, 1); }),
              Errc::UnknownService);
    const KeyPair stranger = sim::citizen_key("C-7");
    identity::CitizenIdentity fake{"C-7", {}, stranger.public_key()};
    EXPECT_EQ(code_of([&] { initiate_request(stranger, fake, "housing", {}, h.w.now, h.w.state, 1); }),
              Errc::Unauthenticated);
    RequestInitiation init{"housing", "C-1001", {}, h.w.now};
    EXPECT_EQ(code_of([&] { h.w.commit(sign_transaction(TxKind::RequestInitiated, init.encode(), stranger, 1)); }),
              Errc::Unauthenticated);
    RequestInitiation dup{"housing", "C-1001", {"C-1002", "C-1002"}, h.w.now};
    EXPECT_EQ(code_of([&] {
                  h.w.commit(sign_transaction(TxKind::RequestInitiated, dup.encode(), h.citizen, h.w.nonce(h.citizen)));
              }),
              Errc::Malformed);
}
