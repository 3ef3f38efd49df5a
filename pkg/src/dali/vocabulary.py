"""Vocabulary hub: concept schemes and per-kind metadata schemas.

Schemes are flat SKOS-style concept lists with optional single `broader`
links (acyclicity enforced at registration, so expansion always terminates).
Metadata values are strings; `integer-string` and `timestamp-string` validate
lexical form only.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from threading import Lock

from .canonical import parse_timestamp
from .errors import CyclicBroader, DanglingBroader, ScopeDenied, UnknownConcept, UnknownScheme
from .model import AssetKind

VALUE_TYPES = ("free-text", "concept-ref", "integer-string", "timestamp-string")

_INTEGER_RE = re.compile(r"^-?(0|[1-9][0-9]*)$")


@dataclass(frozen=True)
class Concept:
    concept_id: str
    label: str
    broader: str | None = None

    def to_wire(self) -> dict:
        return {"conceptId": self.concept_id, "label": self.label, "broader": self.broader}

    @classmethod
    def from_wire(cls, data: dict) -> "Concept":
        return cls(
            concept_id=data["conceptId"],
            label=data.get("label", data["conceptId"]),
            broader=data.get("broader"),
        )


@dataclass(frozen=True)
class ConceptScheme:
    """Controlled vocabulary; constructor enforces unique ids, resolvable and
    acyclic broader links."""

    scheme_id: str
    concepts: tuple

    def __post_init__(self):
        if not self.scheme_id:
            raise ValueError("scheme_id must be non-empty")
        by_id = {}
        for concept in self.concepts:
            if concept.concept_id in by_id:
                raise ValueError(
                    f"scheme {self.scheme_id}: duplicate concept {concept.concept_id!r}"
                )
            by_id[concept.concept_id] = concept
        for concept in self.concepts:
            if concept.broader is not None and concept.broader not in by_id:
                raise DanglingBroader(
                    f"scheme {self.scheme_id}: {concept.concept_id} -> {concept.broader}"
                )
        for concept in self.concepts:
            seen = {concept.concept_id}
            cursor = concept.broader
            while cursor is not None:
                if cursor in seen:
                    raise CyclicBroader(f"scheme {self.scheme_id}: cycle through {cursor}")
                seen.add(cursor)
                cursor = by_id[cursor].broader

    def concept(self, concept_id: str) -> Concept | None:
        for c in self.concepts:
            if c.concept_id == concept_id:
                return c
        return None

    def to_wire(self) -> dict:
        return {"schemeId": self.scheme_id, "concepts": [c.to_wire() for c in self.concepts]}

    @classmethod
    def from_wire(cls, data: dict) -> "ConceptScheme":
        return cls(
            scheme_id=data["schemeId"],
            concepts=tuple(Concept.from_wire(c) for c in data["concepts"]),
        )


@dataclass(frozen=True)
class PropertySpec:
    """One schema property; concept-ref carries the scheme it draws from."""

    name: str
    required: bool
    value_type: str = "free-text"
    scheme_id: str | None = None

    def __post_init__(self):
        if self.value_type not in VALUE_TYPES:
            raise ValueError(f"unknown value type {self.value_type!r}")
        if (self.value_type == "concept-ref") != (self.scheme_id is not None):
            raise ValueError("scheme_id goes with concept-ref and nothing else")

    def to_wire(self) -> dict:
        wire = {"name": self.name, "required": self.required, "valueType": self.value_type}
        if self.scheme_id is not None:
            wire["schemeId"] = self.scheme_id
        return wire

    @classmethod
    def from_wire(cls, data: dict) -> "PropertySpec":
        return cls(
            name=data["name"],
            required=bool(data["required"]),
            value_type=data["valueType"],
            scheme_id=data.get("schemeId"),
        )


@dataclass(frozen=True)
class MetadataSchema:
    kind: AssetKind
    properties: tuple = ()

    def __post_init__(self):
        names = [p.name for p in self.properties]
        if len(names) != len(set(names)):
            raise ValueError(f"schema for {self.kind.value}: duplicate property names")

    def property(self, name: str) -> PropertySpec | None:
        for p in self.properties:
            if p.name == name:
                return p
        return None

    def to_wire(self) -> dict:
        return {"kind": self.kind.value, "properties": [p.to_wire() for p in self.properties]}

    @classmethod
    def from_wire(cls, data: dict) -> "MetadataSchema":
        from .model import classify_asset_kind

        return cls(
            kind=classify_asset_kind(data["kind"]),
            properties=tuple(PropertySpec.from_wire(p) for p in data["properties"]),
        )


@dataclass(frozen=True)
class Violation:
    property: str
    code: str  # missing-required | unknown-concept | bad-value-type | unknown-property
    detail: str = ""

    def to_wire(self) -> dict:
        return {"property": self.property, "code": self.code, "detail": self.detail}


def _check_value(spec: PropertySpec, value: str, schemes: dict) -> Violation | None:
    if spec.value_type == "free-text":
        return None
    if spec.value_type == "integer-string":
        if not _INTEGER_RE.match(value):
            return Violation(spec.name, "bad-value-type", f"{value!r} is not an integer string")
        return None
    if spec.value_type == "timestamp-string":
        try:
            parse_timestamp(value)
            return None
        except ValueError:
            return Violation(spec.name, "bad-value-type", f"{value!r} is not a timestamp")
    scheme = schemes.get(spec.scheme_id)
    if scheme is None or scheme.concept(value) is None:
        return Violation(
            spec.name, "unknown-concept", f"{value!r} not in scheme {spec.scheme_id!r}"
        )
    return None


def validate(metadata: dict, schema: MetadataSchema, schemes: dict) -> list:
    """Pure validation; the violation set is independent of key order."""
    violations = []
    for spec in schema.properties:
        if spec.name not in metadata:
            if spec.required:
                violations.append(
                    Violation(spec.name, "missing-required", "required property absent")
                )
            continue
        bad = _check_value(spec, metadata[spec.name], schemes)
        if bad is not None:
            violations.append(bad)
    known = {p.name for p in schema.properties}
    for name in metadata:
        if name not in known:
            violations.append(Violation(name, "unknown-property", "not part of the schema"))
    return sorted(violations, key=lambda v: (v.property, v.code))


class VocabularyHub:
    """Registry for schemes and schemas; reads are lock-free, writes serialized."""

    def __init__(self, guard=None):
        self._schemes: dict = {}
        self._schemas: dict = {}
        self._lock = Lock()
        self._guard = guard

    def _authorize(self, token) -> None:
        if self._guard is None:
            return
        if token is None:
            raise ScopeDenied("vocabulary:write: missing token")
        self._guard.require(token, "vocabulary:write")

    def register_scheme(self, scheme: ConceptScheme, token=None) -> None:
        self._authorize(token)
        with self._lock:
            self._schemes[scheme.scheme_id] = scheme

    def scheme(self, scheme_id: str) -> ConceptScheme:
        found = self._schemes.get(scheme_id)
        if found is None:
            raise UnknownScheme(scheme_id)
        return found

    def register_schema(self, schema: MetadataSchema, token=None) -> None:
        self._authorize(token)
        for spec in schema.properties:
            if spec.scheme_id is not None and spec.scheme_id not in self._schemes:
                raise UnknownScheme(spec.scheme_id)
        with self._lock:
            self._schemas[schema.kind] = schema

    def schema_for(self, kind: AssetKind) -> MetadataSchema:
        return self._schemas.get(kind, MetadataSchema(kind=kind))

    def validate_kind(self, kind: AssetKind, metadata: dict) -> list:
        return validate(metadata, self.schema_for(kind), dict(self._schemes))

    def expand_concept(self, scheme_id: str, concept_id: str) -> list:
        """Ancestors via broader links, nearest first, excluding the concept."""
        scheme = self.scheme(scheme_id)
        concept = scheme.concept(concept_id)
        if concept is None:
            raise UnknownConcept(f"{concept_id} in {scheme_id}")
        ancestors = []
        cursor = concept.broader
        while cursor is not None:
            ancestors.append(cursor)
            cursor = scheme.concept(cursor).broader
        return ancestors

    def list_schemes(self) -> list:
        return sorted(self._schemes)


def install_builtins(hub: VocabularyHub, token=None) -> None:
    """Default schemes and per-kind schemas the federation starts with."""
    hub.register_scheme(
        ConceptScheme(
            "bands",
            (Concept("sub-6", "Sub-6 GHz"), Concept("mmWave", "Millimetre wave")),
        ),
        token,
    )
    hub.register_scheme(
        ConceptScheme(
            "testbeds",
            (
                Concept("eur", "EUR testbed"),
                Concept("isi", "ISI testbed"),
                Concept("kul", "KUL testbed"),
                Concept("dt", "DT testbed"),
            ),
        ),
        token,
    )
    hub.register_scheme(
        ConceptScheme(
            "ran-layers",
            (Concept("phy", "Physical"), Concept("mac", "Medium access"), Concept("rrc", "Radio resource control")),
        ),
        token,
    )
    hub.register_schema(
        MetadataSchema(
            AssetKind.DATASET,
            (
                PropertySpec("frequency-band", True, "concept-ref", "bands"),
                PropertySpec("testbed-origin", True, "concept-ref", "testbeds"),
                PropertySpec("sample-count", True, "integer-string"),
                PropertySpec("capabilities", False, "free-text"),
                PropertySpec("collected-at", False, "timestamp-string"),
            ),
        ),
        token,
    )
    hub.register_schema(
        MetadataSchema(
            AssetKind.ML_MODEL,
            (
                PropertySpec("task", True, "free-text"),
                PropertySpec("input-schema", True, "free-text"),
            ),
        ),
        token,
    )
    hub.register_schema(
        MetadataSchema(
            AssetKind.RAN_MODEL,
            (PropertySpec("ran-layer", True, "concept-ref", "ran-layers"),),
        ),
        token,
    )
    hub.register_schema(MetadataSchema(AssetKind.SERVICE), token)
    hub.register_schema(MetadataSchema(AssetKind.APPLICATION), token)
