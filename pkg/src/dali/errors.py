"""Domain error hierarchy shared by every service."""

from __future__ import annotations


class DaliError(Exception):
    """Base class for all domain errors (CLI exit code 1)."""

    code = "error"

    def __init__(self, detail: str = ""):
        self.detail = detail
        super().__init__(f"{self.code}: {detail}" if detail else self.code)


# -- core model ---------------------------------------------------------------

class MalformedId(DaliError):
    code = "malformed-id"


class UnknownKind(DaliError):
    code = "unknown-kind"


# -- identity -----------------------------------------------------------------

class UnknownAnchor(DaliError):
    code = "unknown-anchor"


class NoValidCredential(DaliError):
    code = "no-valid-credential"


class EmptyScopes(DaliError):
    code = "empty-scopes"


# -- service access guards ----------------------------------------------------

class ScopeDenied(DaliError):
    code = "scope-denied"


class SubjectMismatch(DaliError):
    code = "subject-mismatch"


class ActorMismatch(DaliError):
    code = "actor-mismatch"


# -- connector protocol -------------------------------------------------------

class UnknownProvider(DaliError):
    code = "unknown-provider"


class TransportFailure(DaliError):
    code = "transport-failure"


class BadSignature(DaliError):
    code = "bad-signature"


class WrongState(DaliError):
    code = "wrong-state"


class IllegalTransition(DaliError):
    code = "illegal-transition"


class MissingCountersignature(DaliError):
    code = "missing-countersignature"


class UnknownAgreement(DaliError):
    code = "unknown-agreement"


class TokenInvalid(DaliError):
    code = "token-invalid"


class DigestMismatch(DaliError):
    code = "digest-mismatch"


class UnknownMessageType(DaliError):
    code = "unknown-message-type"


# -- catalogue ----------------------------------------------------------------

class PeerUnreachable(DaliError):
    code = "peer-unreachable"


# -- vocabulary ---------------------------------------------------------------

class CyclicBroader(DaliError):
    code = "cyclic-broader"


class DanglingBroader(DaliError):
    code = "dangling-broader"


class UnknownScheme(DaliError):
    code = "unknown-scheme"


class UnknownConcept(DaliError):
    code = "unknown-concept"


# -- data lake ----------------------------------------------------------------

class StorageFull(DaliError):
    code = "storage-full"


class IoFailure(DaliError):
    code = "io-failure"


class ObjectNotFound(DaliError):
    code = "object-not-found"


class NoPayloadBackend(DaliError):
    code = "no-payload-backend"


class NoCapableTestbed(DaliError):
    code = "no-capable-testbed"


class MalformedCsv(DaliError):
    code = "malformed-csv"


# -- harness ------------------------------------------------------------------

class ScriptUnknown(DaliError):
    code = "script-unknown"


class TopologyInvalid(DaliError):
    code = "topology-invalid"


class LogCorrupt(DaliError):
    code = "log-corrupt"
