"""Federated identity: participant credentials, access tokens, trust anchors.

Trust anchors issue participant credentials; services mint short-lived access
tokens after checking those credentials; every verdict-returning check is
total (no exceptions for ordinary invalidity). Signatures are Ed25519 over
canonical JSON bytes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from threading import Lock

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey

from .canonical import b64url_decode, b64url_encode, canonical_bytes, format_timestamp, parse_timestamp
from .errors import EmptyScopes, NoValidCredential, ScopeDenied, UnknownAnchor
from .model import ParticipantId, parse_participant_id


@dataclass(frozen=True)
class KeyPair:
    """Ed25519 pair; the private half never leaves the process serialized."""

    public_bytes: bytes
    private: Ed25519PrivateKey

    def sign(self, data: bytes) -> bytes:
        return self.private.sign(data)


def generate_keypair() -> KeyPair:
    private = Ed25519PrivateKey.generate()
    public = private.public_key().public_bytes(
        serialization.Encoding.Raw, serialization.PublicFormat.Raw
    )
    return KeyPair(public_bytes=public, private=private)


def verify_signature(public_key: bytes, data: bytes, signature: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, data)
        return True
    except (InvalidSignature, ValueError):
        return False


def save_keypair(directory: str, name: str, keypair: KeyPair) -> None:
    """Write `<name>.pub` (raw public key hex) and mode-restricted `<name>.key`."""
    os.makedirs(directory, exist_ok=True)
    pub_path = os.path.join(directory, f"{name}.pub")
    key_path = os.path.join(directory, f"{name}.key")
    with open(pub_path, "w", encoding="ascii") as fh:
        fh.write(keypair.public_bytes.hex() + "\n")
    private_raw = keypair.private.private_bytes(
        serialization.Encoding.Raw,
        serialization.PrivateFormat.Raw,
        serialization.NoEncryption(),
    )
    fd = os.open(key_path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "w", encoding="ascii") as fh:
        fh.write(private_raw.hex() + "\n")
    os.chmod(key_path, 0o600)


def load_keypair(directory: str, name: str) -> KeyPair:
    with open(os.path.join(directory, f"{name}.key"), encoding="ascii") as fh:
        private_raw = bytes.fromhex(fh.read().strip())
    private = Ed25519PrivateKey.from_private_bytes(private_raw)
    public = private.public_key().public_bytes(
        serialization.Encoding.Raw, serialization.PublicFormat.Raw
    )
    return KeyPair(public_bytes=public, private=private)


class TrustStore:
    """Registered public keys: anchors issue credentials, participants sign messages.

    Anchors are always participants too. Concurrent reads are safe; mutations
    are serialized.
    """

    def __init__(self):
        self._anchors: dict = {}
        self._participants: dict = {}
        self._lock = Lock()

    def register_participant(self, pid: ParticipantId, public_key: bytes) -> None:
        with self._lock:
            self._participants[pid] = public_key

    def register_anchor(self, pid: ParticipantId, public_key: bytes) -> None:
        with self._lock:
            self._anchors[pid] = public_key
            self._participants[pid] = public_key

    def anchor_key(self, pid: ParticipantId) -> bytes | None:
        return self._anchors.get(pid)

    def participant_key(self, pid: ParticipantId) -> bytes | None:
        return self._participants.get(pid)

    @property
    def anchors(self) -> dict:
        return dict(self._anchors)

    @property
    def participants(self) -> dict:
        return dict(self._participants)


@dataclass(frozen=True)
class Verdict:
    valid: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.valid


VALID = Verdict(valid=True)


@dataclass(frozen=True)
class Credential:
    """Anchor-signed claims about a participant (role, etc.)."""

    subject: ParticipantId
    issuer: ParticipantId
    claims: dict
    issued_at: int
    expires_at: int
    signature: bytes

    def signed_payload(self) -> bytes:
        return canonical_bytes(
            {
                "claims": self.claims,
                "expiresAt": format_timestamp(self.expires_at),
                "issuedAt": format_timestamp(self.issued_at),
                "issuer": self.issuer.value,
                "subject": self.subject.value,
            }
        )

    def to_wire(self) -> dict:
        return {
            "subject": self.subject.value,
            "issuer": self.issuer.value,
            "claims": dict(sorted(self.claims.items())),
            "issuedAt": format_timestamp(self.issued_at),
            "expiresAt": format_timestamp(self.expires_at),
            "sig": b64url_encode(self.signature),
        }

    @classmethod
    def from_wire(cls, data: dict) -> "Credential":
        return cls(
            subject=parse_participant_id(data["subject"]),
            issuer=parse_participant_id(data["issuer"]),
            claims=dict(data["claims"]),
            issued_at=parse_timestamp(data["issuedAt"]),
            expires_at=parse_timestamp(data["expiresAt"]),
            signature=b64url_decode(data["sig"]),
        )


def issue_credential(
    anchor_id: ParticipantId,
    anchor_keys: KeyPair,
    subject: ParticipantId,
    claims: dict,
    ttl: int,
    trust: TrustStore,
    now: int,
) -> Credential:
    """Sign a credential for `subject`; the anchor must be registered in `trust`."""
    if ttl <= 0:
        raise ValueError("credential ttl must be positive")
    registered = trust.anchor_key(anchor_id)
    if registered is None or registered != anchor_keys.public_bytes:
        raise UnknownAnchor(anchor_id.value)
    credential = Credential(
        subject=subject,
        issuer=anchor_id,
        claims=dict(claims),
        issued_at=now,
        expires_at=now + ttl,
        signature=b"",
    )
    return replace(credential, signature=anchor_keys.sign(credential.signed_payload()))


def verify_credential(credential: Credential, trust: TrustStore, now: int) -> Verdict:
    """Valid iff signed by a known anchor and `issuedAt <= now < expiresAt`."""
    anchor_key = trust.anchor_key(credential.issuer)
    if anchor_key is None:
        return Verdict(valid=False, reason="unknown-issuer")
    if not verify_signature(anchor_key, credential.signed_payload(), credential.signature):
        return Verdict(valid=False, reason="bad-signature")
    if now < credential.issued_at:
        return Verdict(valid=False, reason="not-yet-valid")
    if now >= credential.expires_at:
        return Verdict(valid=False, reason="expired")
    return VALID


@dataclass(frozen=True)
class AccessToken:
    """Service-signed bearer token with flat exact-match scopes."""

    subject: ParticipantId
    audience: str
    scopes: tuple
    expires_at: int
    signature: bytes

    def signed_payload(self) -> bytes:
        return canonical_bytes(
            {
                "audience": self.audience,
                "expiresAt": format_timestamp(self.expires_at),
                "scopes": list(self.scopes),
                "subject": self.subject.value,
            }
        )

    def to_wire(self) -> dict:
        return {
            "subject": self.subject.value,
            "audience": self.audience,
            "scopes": list(self.scopes),
            "expiresAt": format_timestamp(self.expires_at),
            "sig": b64url_encode(self.signature),
        }

    @classmethod
    def from_wire(cls, data: dict) -> "AccessToken":
        return cls(
            subject=parse_participant_id(data["subject"]),
            audience=data["audience"],
            scopes=tuple(data["scopes"]),
            expires_at=parse_timestamp(data["expiresAt"]),
            signature=b64url_decode(data["sig"]),
        )


def mint_token(
    service_keys: KeyPair,
    subject: ParticipantId,
    audience: str,
    scopes,
    ttl: int,
    now: int,
) -> AccessToken:
    """Low-level token signing; callers are responsible for credential checks."""
    scopes = tuple(scopes)
    if not scopes:
        raise EmptyScopes("a token needs at least one scope")
    if ttl <= 0:
        raise ValueError("token ttl must be positive")
    token = AccessToken(
        subject=subject,
        audience=audience,
        scopes=scopes,
        expires_at=now + ttl,
        signature=b"",
    )
    return replace(token, signature=service_keys.sign(token.signed_payload()))


def issue_token(
    service_keys: KeyPair,
    credential: Credential,
    audience: str,
    scopes,
    ttl: int,
    trust: TrustStore,
    now: int,
) -> AccessToken:
    """Mint a token for the credential's subject after verifying the credential."""
    if not tuple(scopes):
        raise EmptyScopes("a token needs at least one scope")
    verdict = verify_credential(credential, trust, now)
    if not verdict:
        raise NoValidCredential(verdict.reason)
    return mint_token(service_keys, credential.subject, audience, scopes, ttl, now)


def verify_token(
    token: AccessToken, service_public_key: bytes, required_scope: str, now: int
) -> Verdict:
    """Valid iff signature checks, not expired, and the scope matches exactly."""
    if not verify_signature(service_public_key, token.signed_payload(), token.signature):
        return Verdict(valid=False, reason="bad-signature")
    if now >= token.expires_at:
        return Verdict(valid=False, reason="expired")
    if required_scope not in token.scopes:
        return Verdict(valid=False, reason="missing-scope")
    return VALID


class TokenGuard:
    """Service-side gate: raises ScopeDenied unless the token carries the scope."""

    def __init__(self, service_public_key: bytes, clock):
        self._key = service_public_key
        self._clock = clock

    def require(self, token: AccessToken, scope: str) -> AccessToken:
        verdict = verify_token(token, self._key, scope, self._clock.now())
        if not verdict:
            raise ScopeDenied(f"{scope}: {verdict.reason}")
        return token
