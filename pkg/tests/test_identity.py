import os
import stat

import pytest

from dali.clock import LogicalClock
from dali.errors import EmptyScopes, NoValidCredential, ScopeDenied, UnknownAnchor
from dali.identity import (
    AccessToken,
    Credential,
    TokenGuard,
    TrustStore,
    generate_keypair,
    issue_credential,
    issue_token,
    load_keypair,
    mint_token,
    save_keypair,
    verify_credential,
    verify_signature,
    verify_token,
)
from dali.model import parse_participant_id

ANCHOR = parse_participant_id("did:dali:dali:federator")
ALICE = parse_participant_id("did:dali:acme:consumer")
T0 = LogicalClock.DEFAULT_START


@pytest.fixture
def anchor_keys():
    return generate_keypair()


@pytest.fixture
def trust(anchor_keys):
    store = TrustStore()
    store.register_anchor(ANCHOR, anchor_keys.public_bytes)
    return store


@pytest.fixture
def credential(anchor_keys, trust):
    return issue_credential(
        ANCHOR, anchor_keys, ALICE, {"role": "consumer"}, ttl=3600, trust=trust, now=T0
    )


class TestSignatures:
    def test_sign_verify_round_trip(self):
        keys = generate_keypair()
        sig = keys.sign(b"message")
        assert verify_signature(keys.public_bytes, b"message", sig)

    def test_verify_rejects_mutations(self):
        keys = generate_keypair()
        other = generate_keypair()
        sig = keys.sign(b"message")
        assert not verify_signature(keys.public_bytes, b"messagE", sig)
        assert not verify_signature(other.public_bytes, b"message", sig)
        flipped = bytes([sig[0] ^ 1]) + sig[1:]
        assert not verify_signature(keys.public_bytes, b"message", flipped)
        assert not verify_signature(keys.public_bytes, b"message", b"short")
        assert not verify_signature(b"not-a-key", b"message", sig)


class TestKeyFiles:
    def test_save_load_round_trip(self, tmp_path):
        keys = generate_keypair()
        save_keypair(str(tmp_path), "did:dali:eur:testbed", keys)
        loaded = load_keypair(str(tmp_path), "did:dali:eur:testbed")
        assert loaded.public_bytes == keys.public_bytes
        assert verify_signature(keys.public_bytes, b"x", loaded.sign(b"x"))

    def test_file_layout_and_permissions(self, tmp_path):
        keys = generate_keypair()
        save_keypair(str(tmp_path), "node", keys)
        pub = tmp_path / "node.pub"
        key = tmp_path / "node.key"
        assert pub.read_text().strip() == keys.public_bytes.hex()
        mode = stat.S_IMODE(os.stat(key).st_mode)
        assert mode == 0o600


class TestCredentials:
    def test_issued_credential_verifies(self, credential, trust):
        assert verify_credential(credential, trust, now=T0)
        assert verify_credential(credential, trust, now=T0 + 3599)

    def test_expires_at_boundary(self, credential, trust):
        verdict = verify_credential(credential, trust, now=T0 + 3600)
        assert not verdict and verdict.reason == "expired"

    def test_not_yet_valid(self, anchor_keys, trust):
        future = issue_credential(
            ANCHOR, anchor_keys, ALICE, {}, ttl=3600, trust=trust, now=T0 + 100
        )
        verdict = verify_credential(future, trust, now=T0)
        assert not verdict and verdict.reason == "not-yet-valid"

    def test_unknown_issuer(self, credential):
        empty = TrustStore()
        verdict = verify_credential(credential, empty, now=T0)
        assert not verdict and verdict.reason == "unknown-issuer"

    def test_tampered_claims_break_signature(self, credential, trust):
        forged = Credential(
            subject=credential.subject,
            issuer=credential.issuer,
            claims={"role": "admin"},
            issued_at=credential.issued_at,
            expires_at=credential.expires_at,
            signature=credential.signature,
        )
        verdict = verify_credential(forged, trust, now=T0)
        assert not verdict and verdict.reason == "bad-signature"

    def test_wire_round_trip_preserves_verifiability(self, credential, trust):
        again = Credential.from_wire(credential.to_wire())
        assert again == credential
        assert verify_credential(again, trust, now=T0)

    def test_issue_requires_registered_anchor(self, anchor_keys):
        with pytest.raises(UnknownAnchor):
            issue_credential(ANCHOR, anchor_keys, ALICE, {}, 3600, TrustStore(), T0)

    def test_issue_requires_matching_anchor_key(self, trust):
        impostor = generate_keypair()
        with pytest.raises(UnknownAnchor):
            issue_credential(ANCHOR, impostor, ALICE, {}, 3600, trust, T0)

    def test_issue_requires_positive_ttl(self, anchor_keys, trust):
        with pytest.raises(ValueError):
            issue_credential(ANCHOR, anchor_keys, ALICE, {}, 0, trust, T0)

    def test_expiry_is_monotone(self, credential, trust):
        # once expired, expired forever after
        seen_invalid = False
        for now in range(T0, T0 + 7200, 600):
            valid = bool(verify_credential(credential, trust, now))
            if seen_invalid:
                assert not valid
            if not valid:
                seen_invalid = True
        assert seen_invalid


class TestTokens:
    @pytest.fixture
    def service_keys(self):
        return generate_keypair()

    @pytest.fixture
    def token(self, service_keys, credential, trust):
        return issue_token(
            service_keys,
            credential,
            audience="catalogue",
            scopes=("catalogue:read", "catalogue:write"),
            ttl=600,
            trust=trust,
            now=T0,
        )

    def test_valid_token_carries_subject_and_scopes(self, token, service_keys):
        assert token.subject == ALICE
        assert verify_token(token, service_keys.public_bytes, "catalogue:read", T0)
        assert verify_token(token, service_keys.public_bytes, "catalogue:write", T0 + 599)

    def test_missing_scope(self, token, service_keys):
        verdict = verify_token(token, service_keys.public_bytes, "catalogue:admin", T0)
        assert not verdict and verdict.reason == "missing-scope"

    def test_scopes_are_exact_match_not_prefixes(self, token, service_keys):
        verdict = verify_token(token, service_keys.public_bytes, "catalogue", T0)
        assert not verdict and verdict.reason == "missing-scope"

    def test_expired_at_boundary(self, token, service_keys):
        verdict = verify_token(token, service_keys.public_bytes, "catalogue:read", T0 + 600)
        assert not verdict and verdict.reason == "expired"

    def test_wrong_service_key(self, token):
        other = generate_keypair()
        verdict = verify_token(token, other.public_bytes, "catalogue:read", T0)
        assert not verdict and verdict.reason == "bad-signature"

    def test_tampered_scopes_break_signature(self, token, service_keys):
        forged = AccessToken(
            subject=token.subject,
            audience=token.audience,
            scopes=token.scopes + ("catalogue:admin",),
            expires_at=token.expires_at,
            signature=token.signature,
        )
        verdict = verify_token(forged, service_keys.public_bytes, "catalogue:admin", T0)
        assert not verdict and verdict.reason == "bad-signature"

    def test_wire_round_trip(self, token, service_keys):
        again = AccessToken.from_wire(token.to_wire())
        assert again == token
        assert verify_token(again, service_keys.public_bytes, "catalogue:read", T0)

    def test_empty_scopes_rejected(self, service_keys, credential, trust):
        with pytest.raises(EmptyScopes):
            issue_token(service_keys, credential, "catalogue", (), 600, trust, T0)
        with pytest.raises(EmptyScopes):
            mint_token(service_keys, ALICE, "catalogue", (), 600, T0)

    def test_requires_valid_credential(self, service_keys, credential, trust):
        with pytest.raises(NoValidCredential):
            issue_token(
                service_keys, credential, "catalogue", ("catalogue:read",), 600, trust, T0 + 9999
            )

    def test_guard_lets_valid_scope_through(self, token, service_keys):
        guard = TokenGuard(service_keys.public_bytes, LogicalClock())
        assert guard.require(token, "catalogue:read") is token

    def test_guard_raises_on_any_failure(self, token, service_keys):
        guard = TokenGuard(service_keys.public_bytes, LogicalClock())
        with pytest.raises(ScopeDenied):
            guard.require(token, "catalogue:admin")
        late = TokenGuard(service_keys.public_bytes, LogicalClock(start=T0 + 601))
        with pytest.raises(ScopeDenied):
            late.require(token, "catalogue:read")
