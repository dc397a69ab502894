#include <gtest/gtest.h>

#include "civic/identity.hpp"
#include "support.hpp"

using namespace civic;
using namespace civic::identity;
using test::code_of;

namespace {

struct Fixture {
    test::World w;
    KeyPair authority = sim::org_key("egov");
    KeyPair citizen = sim::citizen_key("C-1001");
    NonceRegistry nonces{7};

    EKeyCredential issue(std::uint64_t validity = 365 * kMsPerDay)
    {
        auto k = issue_ekey(authority, "C-1001", citizen.public_key(), w.now, validity, w.state, w.nonce(authority));
        w.commit(k.tx);
        return k.credential;
    }
    AuthContext answer(const EKeyCredential& c, const KeyPair& key) { return respond_to_challenge(c, key, nonces.issue()); }
};

} // namespace

TEST(Identity, IssueAndAuthenticate)
{
    Fixture f;
    const auto c = f.issue();
    ASSERT_NE(f.w.state.active_credential(f.citizen.public_key(), "C-1001", f.w.now), nullptr);
    const auto who = authenticate(f.answer(c, f.citizen), f.w.state, f.w.now, f.nonces);
    EXPECT_EQ(who.citizen_id, "C-1001");
    EXPECT_EQ(who.credential_id, c.id());
    EXPECT_EQ(who.public_key, f.citizen.public_key());
}

TEST(Identity, OnlyAuthorityIssues)
{
    Fixture f;
    const auto cio = sim::org_key("cio");
    EXPECT_EQ(code_of([&] { issue_ekey(cio, "C-1001", f.citizen.public_key(), f.w.now, 1000, f.w.state, 1); }),
              Errc::NotAuthority);
    // a forged issuance transaction is refused at commit
    auto k = issue_ekey(f.authority, "C-1001", f.citizen.public_key(), f.w.now, 1000, f.w.state, 1);
    const auto forged = sign_transaction(TxKind::EKeyIssued, k.credential.encode(), cio, 1);
    EXPECT_EQ(code_of([&] { f.w.commit(forged); }), Errc::NotAuthority);
}

TEST(Identity, ForgedAuthoritySignature)
{
    Fixture f;
    auto k = issue_ekey(f.authority, "C-1001", f.citizen.public_key(), f.w.now, kMsPerDay, f.w.state, 1);
    k.credential.authority_signature[0] ^= 1;
    const auto tx = sign_transaction(TxKind::EKeyIssued, k.credential.encode(), f.authority, 1);
    EXPECT_EQ(code_of([&] { f.w.commit(tx); }), Errc::BadAuthoritySignature);
}

TEST(Identity, DuplicateActiveCredential)
{
    Fixture f;
    f.issue();
    EXPECT_EQ(code_of([&] { f.issue(); }), Errc::DuplicateCredential);
}

TEST(Identity, ChallengeRules)
{
    Fixture f;
    const auto c = f.issue();
    auto ctx = f.answer(c, f.citizen);
    authenticate(ctx, f.w.state, f.w.now, f.nonces);
    EXPECT_EQ(code_of([&] { authenticate(ctx, f.w.state, f.w.now, f.nonces); }), Errc::ReplayedNonce);

    auto stray = respond_to_challenge(c, f.citizen, Bytes(16, 0xaa));
    EXPECT_EQ(code_of([&] { authenticate(stray, f.w.state, f.w.now, f.nonces); }), Errc::ReplayedNonce);

    auto wrong_key = f.answer(c, sim::citizen_key("C-1002"));
    EXPECT_EQ(code_of([&] { authenticate(wrong_key, f.w.state, f.w.now, f.nonces); }), Errc::BadChallengeResponse);

    EXPECT_EQ(to_hex(challenge_signing_bytes(Bytes{1})), to_hex(challenge_signing_bytes(Bytes{1})));
    EXPECT_NE(challenge_signing_bytes(Bytes{1}), Bytes{1});
}

TEST(Identity, ExpiryAndRevocation)
{
    Fixture f;
    const auto c = f.issue(kMsPerDay);
    EXPECT_EQ(code_of([&] { authenticate(f.answer(c, f.citizen), f.w.state, c.expires_at, f.nonces); }),
              Errc::Expired);
    EXPECT_NO_THROW(authenticate(f.answer(c, f.citizen), f.w.state, c.expires_at - 1, f.nonces));

    f.w.commit(revoke_ekey(f.authority, c, f.w.state, f.w.now, f.w.nonce(f.authority)));
    EXPECT_EQ(code_of([&] { authenticate(f.answer(c, f.citizen), f.w.state, f.w.now, f.nonces); }), Errc::Revoked);
    EXPECT_EQ(code_of([&] { revoke_ekey(f.authority, c, f.w.state, f.w.now, 9); }), Errc::NotActive);
    EXPECT_EQ(f.w.state.active_credential(f.citizen.public_key(), "C-1001", f.w.now), nullptr);

    // a new key may be issued once the old one is revoked
    EXPECT_NO_THROW(f.issue());
}

TEST(Identity, UnknownCredential)
{
    Fixture f;
    auto k = issue_ekey(f.authority, "C-1001", f.citizen.public_key(), f.w.now, kMsPerDay, f.w.state, 1);
    // signed by the authority but never committed
    EXPECT_EQ(code_of([&] { authenticate(f.answer(k.credential, f.citizen), f.w.state, f.w.now, f.nonces); }),
              Errc::NotActive);
}

TEST(Identity, NonceRegistry)
{
    NonceRegistry a{1}, b{1};
    const Bytes n = a.issue();
    EXPECT_EQ(n, b.issue());
    EXPECT_NE(n, a.issue());
    EXPECT_TRUE(a.consume(n));
    EXPECT_FALSE(a.consume(n));
    NonceRegistry r;
    EXPECT_NE(r.issue(), r.issue());
}

TEST(Identity, ExportAndCredentialFile)
{
    Fixture f;
    const auto c = f.issue();
    const std::string line = export_credential(c);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    EXPECT_EQ(import_credential(line).id(), c.id());
    EXPECT_EQ(code_of([&] { import_credential("garbage"); }), Errc::Malformed);

    const auto dir = test::temp_dir("identity-file");
    save_credential_file(dir / "c.ekey", c, &f.citizen);
    const auto loaded = load_credential_file(dir / "c.ekey");
    EXPECT_EQ(loaded.credential.id(), c.id());
    ASSERT_TRUE(loaded.key.has_value());
    EXPECT_EQ(loaded.key->public_key(), f.citizen.public_key());

    const auto other = sim::citizen_key("C-1002");
    save_credential_file(dir / "bad.ekey", c, &other);
    EXPECT_EQ(code_of([&] { load_credential_file(dir / "bad.ekey"); }), Errc::Malformed);

    save_credential_file(dir / "pub.ekey", c, nullptr);
    EXPECT_FALSE(load_credential_file(dir / "pub.ekey").key.has_value());
}
