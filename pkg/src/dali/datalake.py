"""Content-addressed object store, dataset manifests, testbed selection, and
the ELT ingestion pipeline over simulated testbeds.

Everything downstream of a (request, profiles, seed) triple is bit-for-bit
deterministic: telemetry is generated from a seeded PRNG keyed on the testbed
id and seed, metric values are exact decimals, and transform steps are fixed.
"""

from __future__ import annotations

import csv
import io
import json
import os
import random
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from threading import Lock

from .canonical import canonical_json
from .errors import (
    IoFailure,
    MalformedCsv,
    NoCapableTestbed,
    NoPayloadBackend,
    ObjectNotFound,
    StorageFull,
)
from .model import AssetKind, Digest, ParticipantId, digest_of, parse_participant_id

DEFAULT_QUOTA_BYTES = 1 << 30  # 1 GiB per backend

TRANSFORM_STEPS = ("normalize-headers", "drop-incomplete-rows")

_INTEGER_RE = re.compile(r"^-?(0|[1-9][0-9]*)$")

#: metric column emitted per known capability; anything else gets "<cap>-metric"
CAPABILITY_METRICS = {
    "mmWave": "beam-rsrp-dbm",
    "sub-6": "rsrp-dbm",
    "urban-macro": "path-loss-db",
    "mobility": "speed-mps",
    "indoor": "wall-loss-db",
}

EXPERIMENT_EPOCH = 1767225600  # 2026-01-01T00:00:00Z


class BackendKind(Enum):
    DATA_LAKE = "data-lake"
    ML_MODEL = "ml-model"
    APPLICATION = "application"
    METADATA = "metadata"


@dataclass(frozen=True)
class StoredObject:
    digest: Digest
    size_bytes: int
    backend: BackendKind

    def to_wire(self) -> dict:
        return {
            "digest": self.digest.to_wire(),
            "sizeBytes": self.size_bytes,
            "backend": self.backend.value,
        }


def place_asset(kind: AssetKind) -> BackendKind:
    """Data storage manager's placement rule."""
    if kind is AssetKind.DATASET:
        return BackendKind.DATA_LAKE
    if kind in (AssetKind.ML_MODEL, AssetKind.RAN_MODEL):
        return BackendKind.ML_MODEL
    if kind is AssetKind.APPLICATION:
        return BackendKind.APPLICATION
    raise NoPayloadBackend(f"{kind.value} assets are endpoints, not payloads")


class ObjectStore:
    """Content-addressed files: objects/<backend>/<first 2 hex>/<digest>."""

    def __init__(self, root: str, quota_bytes: int = DEFAULT_QUOTA_BYTES):
        self._root = root
        self._quota = quota_bytes
        self._lock = Lock()
        self._usage = {}
        for backend in BackendKind:
            self._usage[backend] = 0
        self._scan_existing()

    def _backend_dir(self, backend: BackendKind) -> str:
        return os.path.join(self._root, "objects", backend.value)

    def _object_path(self, backend: BackendKind, digest: Digest) -> str:
        return os.path.join(self._backend_dir(backend), digest.hex[:2], digest.hex)

    def _scan_existing(self) -> None:
        for backend in BackendKind:
            base = self._backend_dir(backend)
            if not os.path.isdir(base):
                continue
            for dirpath, _, filenames in os.walk(base):
                for name in filenames:
                    self._usage[backend] += os.path.getsize(os.path.join(dirpath, name))

    def usage(self, backend: BackendKind) -> int:
        return self._usage[backend]

    def put_object(self, data: bytes, backend: BackendKind) -> StoredObject:
        digest = digest_of(data)
        path = self._object_path(backend, digest)
        with self._lock:
            if os.path.exists(path):
                return StoredObject(digest, len(data), backend)
            if self._usage[backend] + len(data) > self._quota:
                raise StorageFull(
                    f"{backend.value}: {self._usage[backend]} + {len(data)} > {self._quota}"
                )
            try:
                os.makedirs(os.path.dirname(path), exist_ok=True)
                tmp = path + ".tmp"
                with open(tmp, "wb") as fh:
                    fh.write(data)
                    fh.flush()
                    os.fsync(fh.fileno())
                os.replace(tmp, path)
            except OSError as exc:
                raise IoFailure(str(exc)) from exc
            self._usage[backend] += len(data)
        return StoredObject(digest, len(data), backend)

    def get_object(self, digest: Digest, backend: BackendKind | None = None) -> bytes:
        backends = (backend,) if backend is not None else tuple(BackendKind)
        for candidate in backends:
            path = self._object_path(candidate, digest)
            if os.path.exists(path):
                try:
                    with open(path, "rb") as fh:
                        return fh.read()
                except OSError as exc:
                    raise IoFailure(str(exc)) from exc
        raise ObjectNotFound(digest.hex)

    def has_object(self, digest: Digest) -> bool:
        return any(os.path.exists(self._object_path(b, digest)) for b in BackendKind)


@dataclass(frozen=True)
class TestbedProfile:
    """A simulated 6G testbed: what it can measure and what a run costs."""

    __test__ = False  # name starts with Test; keep pytest collection away

    testbed_id: str
    capabilities: frozenset
    cost_weight: Fraction

    def __init__(self, testbed_id: str, capabilities, cost_weight):
        if not testbed_id:
            raise ValueError("testbed_id must be non-empty")
        caps = frozenset(capabilities)
        if not caps:
            raise ValueError("capabilities must be non-empty")
        weight = Fraction(str(cost_weight))
        if weight <= 0:
            raise ValueError("cost_weight must be positive")
        object.__setattr__(self, "testbed_id", testbed_id)
        object.__setattr__(self, "capabilities", caps)
        object.__setattr__(self, "cost_weight", weight)

    def to_wire(self) -> dict:
        return {
            "testbedId": self.testbed_id,
            "capabilities": sorted(self.capabilities),
            "costWeight": str(self.cost_weight),
        }

    @classmethod
    def from_wire(cls, data: dict) -> "TestbedProfile":
        return cls(data["testbedId"], data["capabilities"], data["costWeight"])


@dataclass(frozen=True)
class DataRequest:
    wanted_capabilities: frozenset
    sample_count: int
    purpose: str = "research"

    def __init__(self, wanted_capabilities, sample_count: int, purpose: str = "research"):
        if sample_count < 1:
            raise ValueError("sample_count must be at least 1")
        object.__setattr__(self, "wanted_capabilities", frozenset(wanted_capabilities))
        object.__setattr__(self, "sample_count", int(sample_count))
        object.__setattr__(self, "purpose", purpose)

    def to_wire(self) -> dict:
        return {
            "wantedCapabilities": sorted(self.wanted_capabilities),
            "sampleCount": self.sample_count,
            "purpose": self.purpose,
        }

    @classmethod
    def from_wire(cls, data: dict) -> "DataRequest":
        return cls(data["wantedCapabilities"], data["sampleCount"], data.get("purpose", "research"))


def select_testbed(request: DataRequest, profiles) -> TestbedProfile:
    """Coverage-per-cost argmax; zero-coverage candidates are out, ties go to
    the lexicographically smallest testbed id. Scores are exact rationals."""
    best = None
    best_score = Fraction(0)
    for profile in profiles:
        overlap = len(profile.capabilities & request.wanted_capabilities)
        if overlap == 0:
            continue
        score = Fraction(overlap) / profile.cost_weight
        if (
            best is None
            or score > best_score
            or (score == best_score and profile.testbed_id < best.testbed_id)
        ):
            best = profile
            best_score = score
    if best is None:
        raise NoCapableTestbed(
            f"no testbed covers any of {sorted(request.wanted_capabilities)}"
        )
    return best


def metric_column(capability: str) -> str:
    return CAPABILITY_METRICS.get(capability, f"{capability}-metric")


def experiment_columns(testbed: TestbedProfile) -> list:
    return ["timestamp", "cell-id"] + [metric_column(c) for c in sorted(testbed.capabilities)]


def run_experiment(testbed: TestbedProfile, request: DataRequest, seed: int):
    """Deterministic synthetic telemetry: exactly sample_count CSV data rows.

    Metric values are drawn as scaled integers so the decimal rendering is
    exact and platform-independent.
    """
    rng = random.Random(f"{testbed.testbed_id}/{seed}")
    columns = experiment_columns(testbed)
    lines = [",".join(columns)]
    for i in range(request.sample_count):
        row = [str(EXPERIMENT_EPOCH + i), f"cell-{rng.randint(1, 8)}"]
        for _ in sorted(testbed.capabilities):
            row.append(f"{rng.randint(-1400, 1400) / 10:.1f}")
        lines.append(",".join(row))
    payload = ("\n".join(lines) + "\n").encode("utf-8")
    return payload, request.sample_count


def transform(raw: bytes):
    """Fixed cleaning pass: normalize-headers then drop-incomplete-rows.

    Idempotent; preserves row order; output rows all match the header width
    with no empty fields.
    """
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedCsv("payload is not UTF-8 text") from exc
    if not text.strip():
        raise MalformedCsv("payload has no header row")
    try:
        rows = list(csv.reader(io.StringIO(text)))
    except csv.Error as exc:
        raise MalformedCsv(str(exc)) from exc
    if not rows:
        raise MalformedCsv("payload has no header row")
    header = [cell.strip().lower() for cell in rows[0]]
    if any(not cell for cell in header):
        raise MalformedCsv("header has empty column names")
    kept = []
    for row in rows[1:]:
        if len(row) != len(header):
            continue
        if any(cell == "" for cell in row):
            continue
        kept.append(row)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(kept)
    return out.getvalue().encode("utf-8"), list(TRANSFORM_STEPS)


def _infer_value_type(values) -> str:
    if values and all(_INTEGER_RE.match(v) for v in values):
        return "integer-string"
    return "free-text"


def csv_schema_fields(payload: bytes) -> list:
    """(name, valueType) pairs inferred from a clean CSV payload."""
    rows = list(csv.reader(io.StringIO(payload.decode("utf-8"))))
    header = rows[0]
    out = []
    for index, name in enumerate(header):
        column = [row[index] for row in rows[1:]]
        out.append({"name": name, "valueType": _infer_value_type(column)})
    return out


@dataclass(frozen=True)
class DatasetManifest:
    asset_id: str
    provider_id: ParticipantId
    object_digest: Digest
    row_count: int
    schema_fields: tuple
    temperature: str  # "cold" | "hot"
    testbed_id: str | None = None
    experiment_seed: int | None = None
    transform_log: tuple = ()

    def __post_init__(self):
        if self.row_count < 0:
            raise ValueError("row_count must be non-negative")
        if self.temperature not in ("cold", "hot"):
            raise ValueError(f"unknown temperature {self.temperature!r}")
        if self.temperature == "hot" and (self.testbed_id is None or self.experiment_seed is None):
            raise ValueError("hot provenance requires testbed_id and experiment_seed")

    def to_wire(self) -> dict:
        return {
            "assetId": self.asset_id,
            "providerId": self.provider_id.value,
            "objectDigest": self.object_digest.to_wire(),
            "rowCount": self.row_count,
            "schemaFields": [dict(f) for f in self.schema_fields],
            "provenance": {
                "temperature": self.temperature,
                "testbedId": self.testbed_id,
                "experimentSeed": self.experiment_seed,
            },
            "transformLog": list(self.transform_log),
        }

    @classmethod
    def from_wire(cls, data: dict) -> "DatasetManifest":
        provenance = data["provenance"]
        return cls(
            asset_id=data["assetId"],
            provider_id=parse_participant_id(data["providerId"]),
            object_digest=Digest.from_wire(data["objectDigest"]),
            row_count=data["rowCount"],
            schema_fields=tuple(dict(f) for f in data["schemaFields"]),
            temperature=provenance["temperature"],
            testbed_id=provenance.get("testbedId"),
            experiment_seed=provenance.get("experimentSeed"),
            transform_log=tuple(data.get("transformLog", ())),
        )


class ManifestStore:
    """JSON manifests under manifests/<assetId>.json."""

    def __init__(self, root: str):
        self._dir = os.path.join(root, "manifests")
        self._lock = Lock()

    def save(self, manifest: DatasetManifest) -> None:
        os.makedirs(self._dir, exist_ok=True)
        path = os.path.join(self._dir, f"{manifest.asset_id}.json")
        with self._lock:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(canonical_json(manifest.to_wire()) + "\n")

    def load(self, asset_id: str) -> DatasetManifest | None:
        path = os.path.join(self._dir, f"{asset_id}.json")
        if not os.path.exists(path):
            return None
        with open(path, encoding="utf-8") as fh:
            return DatasetManifest.from_wire(json.loads(fh.read()))

    def list_ids(self) -> list:
        if not os.path.isdir(self._dir):
            return []
        return sorted(name[:-5] for name in os.listdir(self._dir) if name.endswith(".json"))


@dataclass(frozen=True)
class TestbedAdapter:
    """One provider's ingestion surface: its testbed, storage, and publisher.

    `publish` registers a SelfDescription in the provider's catalogue under
    the provider's own authority.
    """

    __test__ = False  # name starts with Test; keep pytest collection away

    provider_id: ParticipantId
    profile: TestbedProfile
    object_store: ObjectStore
    manifest_store: ManifestStore
    publish: object  # callable(SelfDescription) -> None


def default_research_offer():
    from .assets import Offer
    from .policy import Action, Constraint, LeftOperand, Operator, Rule, UsagePolicy

    policy = UsagePolicy(
        permissions=(
            Rule(Action.USE, (Constraint(LeftOperand.PURPOSE, Operator.EQ, "research"),)),
            Rule(Action.TRANSFER, (Constraint(LeftOperand.PURPOSE, Operator.EQ, "research"),)),
        ),
        prohibitions=(Rule(Action.RE_SHARE),),
    )
    return Offer(offer_id="default-research", policy=policy, license_tag="research-only")


class IngestionService:
    """ELT pipeline: prefer catalogued cold datasets, otherwise extract from
    the best-scoring testbed, load raw, transform, load clean, publish."""

    def __init__(self, catalogue, adapters, clock):
        self._catalogue = catalogue
        self._adapters = dict(adapters)  # testbed_id -> TestbedAdapter
        self._clock = clock
        self.experiments_run = 0

    def _adapter_for_provider(self, provider_id: ParticipantId) -> TestbedAdapter | None:
        for adapter in self._adapters.values():
            if adapter.provider_id == provider_id:
                return adapter
        return None

    def _find_cold(self, request: DataRequest) -> DatasetManifest | None:
        from .catalogue import Query

        result = self._catalogue.search(Query(kind=AssetKind.DATASET, limit=1000))
        for entry in result.entries:
            sd = entry.self_description
            raw_caps = sd.metadata.get("capabilities", "")
            caps = {c for c in raw_caps.split(",") if c}
            if not request.wanted_capabilities <= caps:
                continue
            adapter = self._adapter_for_provider(sd.provider_id)
            if adapter is None:
                continue
            manifest = adapter.manifest_store.load(sd.asset_id)
            if manifest is not None and manifest.row_count >= request.sample_count:
                return manifest
        return None

    def ingest(self, request: DataRequest, seed: int) -> DatasetManifest:
        cold = self._find_cold(request)
        if cold is not None:
            return cold
        profiles = [a.profile for a in self._adapters.values()]
        testbed = select_testbed(request, profiles)
        adapter = self._adapters[testbed.testbed_id]
        raw, _ = run_experiment(testbed, request, seed)
        self.experiments_run += 1
        adapter.object_store.put_object(raw, BackendKind.DATA_LAKE)  # load before transform
        clean, steps = transform(raw)
        clean_obj = adapter.object_store.put_object(clean, BackendKind.DATA_LAKE)
        row_count = clean.decode("utf-8").count("\n") - 1
        manifest = DatasetManifest(
            asset_id=f"hot-{testbed.testbed_id}-s{seed}-{clean_obj.digest.hex[:8]}",
            provider_id=adapter.provider_id,
            object_digest=clean_obj.digest,
            row_count=row_count,
            schema_fields=tuple(csv_schema_fields(clean)),
            temperature="hot",
            testbed_id=testbed.testbed_id,
            experiment_seed=seed,
            transform_log=tuple(steps),
        )
        adapter.manifest_store.save(manifest)
        adapter.publish(self._describe(manifest, testbed))
        return manifest

    def _describe(self, manifest: DatasetManifest, testbed: TestbedProfile):
        from .assets import SelfDescription, Temperature

        band = "mmWave" if "mmWave" in testbed.capabilities else "sub-6"
        return SelfDescription(
            asset_id=manifest.asset_id,
            provider_id=manifest.provider_id,
            kind=AssetKind.DATASET,
            title=f"{testbed.testbed_id} telemetry (seed {manifest.experiment_seed})",
            metadata={
                "frequency-band": band,
                "testbed-origin": testbed.testbed_id,
                "sample-count": str(manifest.row_count),
                "capabilities": ",".join(sorted(testbed.capabilities)),
            },
            offers=(default_research_offer(),),
            content_digest=manifest.object_digest,
            temperature=Temperature.COLD,
            created_at=self._clock.now(),
        )
