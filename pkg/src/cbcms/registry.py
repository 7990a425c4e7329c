"""Identifier management, record stores, conflict resolution, and audit chain.

Stores are append-oriented: records are only ever added (updates append a
new version), every mutation appends exactly one audit record, and the
audit log is a SHA-256 hash chain whose links cover the previous record's
hash, so any byte-level tampering or reordering is detectable.  All
mutations are serialized through one writer lock; readers see consistent
snapshots.  When a directory is configured, every store persists as an
append-only file of length-prefixed canonical JSON records.

Conflict semantics: owner policies carry tri-state stances per label
(required / not-required / unspecified).  A conflict exists exactly where
compliance requires a label the owner explicitly marked not-required; the
merged vector is owner-required OR compliance, so compliance always wins
(merged is a superset of the compliance vector).
"""

from __future__ import annotations

import hashlib
import json
import struct
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric import ed25519

from .labels import LABEL_SPACE, SENSITIVITY_LEVELS
from .policy import Policy, canonical_bytes, policy_from_dict, policy_to_dict, validate_policy

GENESIS_HASH = bytes(32)

DANGLING_OWNER = "DANGLING_OWNER"
UNKNOWN_RECORD = "UNKNOWN_RECORD"


class RegistryError(ValueError):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


def new_identifier() -> str:
    """Fresh random 128-bit identifier in canonical 8-4-4-4-12 text form."""
    return str(uuid.uuid4())


def parse_identifier(text: str) -> str:
    return str(uuid.UUID(text))


def canonical_json_bytes(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


# --- signatures -----------------------------------------------------------

SIGNATURE_SCHEMES = ("ed25519",)


def generate_keypair(scheme: str = "ed25519") -> tuple[str, str]:
    """Return (private, public) keys as raw-bytes hex."""
    if scheme not in SIGNATURE_SCHEMES:
        raise RegistryError("UNKNOWN_SCHEME", f"unsupported signature scheme {scheme!r}")
    private = ed25519.Ed25519PrivateKey.generate()
    public = private.public_key()
    return (
        private.private_bytes_raw().hex(),
        public.public_bytes_raw().hex(),
    )


def sign_policy(private_key_hex: str, policy: Policy) -> str:
    """Detached ed25519 signature (hex) over the policy's canonical bytes."""
    key = ed25519.Ed25519PrivateKey.from_private_bytes(bytes.fromhex(private_key_hex))
    return key.sign(canonical_bytes(policy)).hex()


def verify_signature(public_key_hex: str, policy: Policy, signature_hex: str) -> bool:
    try:
        key = ed25519.Ed25519PublicKey.from_public_bytes(bytes.fromhex(public_key_hex))
        key.verify(bytes.fromhex(signature_hex), canonical_bytes(policy))
        return True
    except (InvalidSignature, ValueError):
        return False


def sign_bytes(private_key_hex: str, payload: bytes) -> str:
    key = ed25519.Ed25519PrivateKey.from_private_bytes(bytes.fromhex(private_key_hex))
    return key.sign(payload).hex()


def verify_bytes(public_key_hex: str, payload: bytes, signature_hex: str) -> bool:
    try:
        key = ed25519.Ed25519PublicKey.from_public_bytes(bytes.fromhex(public_key_hex))
        key.verify(bytes.fromhex(signature_hex), payload)
        return True
    except (InvalidSignature, ValueError):
        return False


def _check_public_key(public_key_hex: str) -> str:
    try:
        ed25519.Ed25519PublicKey.from_public_bytes(bytes.fromhex(public_key_hex))
    except ValueError as exc:
        raise RegistryError("BAD_KEY", f"malformed public key: {exc}") from None
    return public_key_hex


# --- audit chain ----------------------------------------------------------


@dataclass(frozen=True)
class AuditRecord:
    sequence: int
    timestamp: float
    op_type: str
    payload_hash: str  # sha256 hex of the operation payload
    previous_hash: str  # hex
    record_hash: str  # hex

    def body(self) -> dict:
        return {
            "sequence": self.sequence,
            "timestamp": self.timestamp,
            "op_type": self.op_type,
            "payload_hash": self.payload_hash,
        }


def _record_hash(previous_hash: bytes, body: dict) -> str:
    return hashlib.sha256(previous_hash + canonical_json_bytes(body)).hexdigest()


class AuditLog:
    """Append-only hash chain; genesis previous-hash is 32 zero bytes."""

    def __init__(self, path: Path | None = None):
        self._records: list[AuditRecord] = []
        self._path = path
        if path is not None and path.exists():
            for doc in _read_length_prefixed(path):
                self._records.append(AuditRecord(**doc))

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> tuple[AuditRecord, ...]:
        return tuple(self._records)

    def append(self, op_type: str, payload: dict | bytes) -> AuditRecord:
        if isinstance(payload, dict):
            payload = canonical_json_bytes(payload)
        previous = bytes.fromhex(self._records[-1].record_hash) if self._records else GENESIS_HASH
        body = {
            "sequence": len(self._records),
            "timestamp": time.time(),
            "op_type": op_type,
            "payload_hash": hashlib.sha256(payload).hexdigest(),
        }
        record = AuditRecord(
            previous_hash=previous.hex(),
            record_hash=_record_hash(previous, body),
            **body,
        )
        self._records.append(record)
        if self._path is not None:
            _append_length_prefixed(self._path, record.__dict__)
        return record

    def verify_chain(self) -> tuple[bool, int | None]:
        """Recompute every link; returns (ok, index of first bad record)."""
        previous = GENESIS_HASH
        for i, record in enumerate(self._records):
            if record.sequence != i or record.previous_hash != previous.hex():
                return False, i
            if record.record_hash != _record_hash(previous, record.body()):
                return False, i
            previous = bytes.fromhex(record.record_hash)
        return True, None


# --- persistence helpers --------------------------------------------------


def _append_length_prefixed(path: Path, doc: dict) -> None:
    raw = canonical_json_bytes(doc)
    with path.open("ab") as fh:
        fh.write(struct.pack(">I", len(raw)))
        fh.write(raw)
        fh.flush()


def _read_length_prefixed(path: Path) -> list[dict]:
    docs = []
    raw = path.read_bytes()
    offset = 0
    while offset < len(raw):
        (length,) = struct.unpack_from(">I", raw, offset)
        offset += 4
        docs.append(json.loads(raw[offset : offset + length].decode("utf-8")))
        offset += length
    return docs


# --- records --------------------------------------------------------------


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    role: str  # owner | user
    public_key: str


@dataclass(frozen=True)
class MetadataRecord:
    data_id: str
    owner_id: str
    data_category: str
    sensitivity_level: int
    description: str = ""


@dataclass(frozen=True)
class OwnerStance:
    """Tri-state owner stances as two disjoint required / not-required sets."""

    required: np.ndarray  # uint8 (51,)
    not_required: np.ndarray  # uint8 (51,)

    @classmethod
    def from_labels(
        cls,
        required: list[tuple[str, str]] = (),
        not_required: list[tuple[str, str]] = (),
    ) -> "OwnerStance":
        req = np.zeros(len(LABEL_SPACE), dtype=np.uint8)
        non = np.zeros(len(LABEL_SPACE), dtype=np.uint8)
        for jur, name in required:
            req[LABEL_SPACE.index(jur, name)] = 1
        for jur, name in not_required:
            non[LABEL_SPACE.index(jur, name)] = 1
        if (req & non).any():
            raise RegistryError("CONFLICTING_STANCE", "label marked both required and not-required")
        return cls(req, non)


@dataclass(frozen=True)
class OwnerPolicyRecord:
    policy_id: str
    owner_id: str
    data_id: str
    policy: Policy
    not_required: tuple[int, ...]  # label indices explicitly disabled
    replaces: str | None = None


@dataclass(frozen=True)
class Conflict:
    label_index: int
    owner_stance: str  # "not_required"
    compliance_stance: str  # "required"


@dataclass(frozen=True)
class ConflictReport:
    conflicts: tuple[Conflict, ...]
    merged: np.ndarray  # uint8 (51,)

    @property
    def has_conflicts(self) -> bool:
        return bool(self.conflicts)


def detect_conflicts(owner: OwnerStance, compliance: np.ndarray, mask: np.ndarray | None = None) -> ConflictReport:
    """Conflicts where compliance requires a label the owner disabled.

    The merged vector is owner-required OR compliance: stricter-than-law
    owner choices survive, disabled-but-mandated labels resolve to 1.
    """
    compliance = np.asarray(compliance, dtype=np.uint8).reshape(len(LABEL_SPACE))
    if mask is not None:
        mask = np.asarray(mask, dtype=np.uint8)
        for name, vector in (("owner", owner.required | owner.not_required), ("compliance", compliance)):
            if (vector & ~mask).any():
                raise RegistryError("MASKING_MISMATCH", f"{name} vector sets bits outside the pair mask")
    conflicts = tuple(
        Conflict(int(i), "not_required", "required")
        for i in np.nonzero(owner.not_required & compliance)[0]
    )
    merged = (owner.required | compliance).astype(np.uint8)
    return ConflictReport(conflicts, merged)


# --- the registry ---------------------------------------------------------


class Registry:
    """Users, metadata, and policy stores with a shared audit chain."""

    def __init__(self, directory: str | Path | None = None):
        self._lock = threading.Lock()
        self._dir = Path(directory) if directory is not None else None
        if self._dir is not None:
            self._dir.mkdir(parents=True, exist_ok=True)
        self.audit = AuditLog(self._dir / "audit.chain" if self._dir else None)
        self.users: dict[str, UserRecord] = {}
        self.metadata: dict[str, MetadataRecord] = {}
        self.owner_policies: dict[str, OwnerPolicyRecord] = {}
        self.compliance_policies: dict[str, Policy] = {}
        if self._dir is not None:
            self._load()

    # -- persistence

    def _store_path(self, name: str) -> Path:
        assert self._dir is not None
        return self._dir / f"{name}.records"

    def _load(self) -> None:
        path = self._store_path("users")
        if path.exists():
            for doc in _read_length_prefixed(path):
                self.users[doc["user_id"]] = UserRecord(**doc)
        path = self._store_path("metadata")
        if path.exists():
            for doc in _read_length_prefixed(path):
                self.metadata[doc["data_id"]] = MetadataRecord(**doc)
        path = self._store_path("owner_policies")
        if path.exists():
            for doc in _read_length_prefixed(path):
                record = OwnerPolicyRecord(
                    policy_id=doc["policy_id"],
                    owner_id=doc["owner_id"],
                    data_id=doc["data_id"],
                    policy=policy_from_dict(doc["policy"]),
                    not_required=tuple(doc["not_required"]),
                    replaces=doc.get("replaces"),
                )
                self.owner_policies[record.policy_id] = record
        path = self._store_path("compliance_policies")
        if path.exists():
            for doc in _read_length_prefixed(path):
                self.compliance_policies[doc["policy_id"]] = policy_from_dict(doc["policy"])

    def _persist(self, store: str, doc: dict) -> None:
        if self._dir is not None:
            _append_length_prefixed(self._store_path(store), doc)

    # -- mutations (each appends exactly one audit record)

    def register_user(self, role: str, public_key_hex: str) -> str:
        if role not in ("owner", "user"):
            raise RegistryError("UNKNOWN_ROLE", f"user role must be owner or user, got {role!r}")
        _check_public_key(public_key_hex)
        with self._lock:
            user_id = new_identifier()
            record = UserRecord(user_id, role, public_key_hex)
            self.users[user_id] = record
            self._persist("users", record.__dict__)
            self.audit.append("register_user", record.__dict__)
            return user_id

    def register_metadata(
        self, owner_id: str, data_category: str, sensitivity_level: int, description: str = ""
    ) -> str:
        if owner_id not in self.users:
            raise RegistryError(DANGLING_OWNER, f"unknown owner {owner_id!r}")
        if sensitivity_level not in SENSITIVITY_LEVELS:
            raise RegistryError("BAD_LEVEL", f"sensitivity level {sensitivity_level!r} out of range")
        with self._lock:
            data_id = new_identifier()
            record = MetadataRecord(data_id, owner_id, data_category, int(sensitivity_level), description)
            self.metadata[data_id] = record
            self._persist("metadata", record.__dict__)
            self.audit.append("register_metadata", record.__dict__)
            return data_id

    def register_owner_policy(
        self,
        owner_id: str,
        data_id: str,
        policy: Policy,
        not_required: list[tuple[str, str]] = (),
        replaces: str | None = None,
    ) -> str:
        if owner_id not in self.users:
            raise RegistryError(DANGLING_OWNER, f"unknown owner {owner_id!r}")
        if data_id not in self.metadata:
            raise RegistryError(UNKNOWN_RECORD, f"unknown data id {data_id!r}")
        report = validate_policy(policy)
        if not report.valid:
            raise RegistryError("INVALID_POLICY", "; ".join(i.code for i in report.issues))
        if replaces is not None and replaces not in self.owner_policies:
            raise RegistryError(UNKNOWN_RECORD, f"unknown policy version {replaces!r}")
        indices = tuple(sorted(LABEL_SPACE.index(j, n) for j, n in not_required))
        with self._lock:
            policy_id = new_identifier()
            record = OwnerPolicyRecord(policy_id, owner_id, data_id, policy, indices, replaces)
            self.owner_policies[policy_id] = record
            doc = {
                "policy_id": policy_id,
                "owner_id": owner_id,
                "data_id": data_id,
                "policy": policy_to_dict(policy),
                "not_required": list(indices),
                "replaces": replaces,
            }
            self._persist("owner_policies", doc)
            self.audit.append("register_owner_policy", doc)
            return policy_id

    def register_compliance_policy(self, policy: Policy) -> str:
        report = validate_policy(policy)
        if not report.valid:
            raise RegistryError("INVALID_POLICY", "; ".join(i.code for i in report.issues))
        with self._lock:
            policy_id = new_identifier()
            self.compliance_policies[policy_id] = policy
            doc = {"policy_id": policy_id, "policy": policy_to_dict(policy)}
            self._persist("compliance_policies", doc)
            self.audit.append("register_compliance_policy", doc)
            return policy_id

    # -- owner stance over current (non-replaced) policies for a data id

    def owner_stance_for(self, data_id: str) -> OwnerStance:
        replaced = {r.replaces for r in self.owner_policies.values() if r.replaces}
        required = np.zeros(len(LABEL_SPACE), dtype=np.uint8)
        not_required = np.zeros(len(LABEL_SPACE), dtype=np.uint8)
        for record in self.owner_policies.values():
            if record.data_id != data_id or record.policy_id in replaced:
                continue
            law = record.policy.condition.legal_basis.law
            for category, labels in record.policy.action.by_category().items():
                for name in labels:
                    homes = [law] if law else [
                        j for j in ("GDPR", "CCPA", "PIPL") if LABEL_SPACE.contains(j, name)
                    ]
                    for jur in homes:
                        if LABEL_SPACE.contains(jur, name):
                            required[LABEL_SPACE.index(jur, name)] = 1
            for index in record.not_required:
                not_required[index] = 1
        not_required &= ~required & 1
        return OwnerStance(required, not_required)

    def verify_audit(self) -> tuple[bool, int | None]:
        return self.audit.verify_chain()
