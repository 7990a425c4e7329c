"""HTTP compliance-query service.

A framework-free stack: `ComplianceApp` holds the whole request logic over
immutable shared state (model, label space) plus the registry, and a thin
`http.server` layer exposes it.  Responses are canonical JSON, so repeated
reads of the same compliance query return byte-identical bodies while the
model version is unchanged.

Concurrency: the service scales with worker *processes* sharing one
SO_REUSEPORT listening address (CPU-bound handlers do not scale across
threads in CPython).  Each worker also threads per connection for I/O
overlap.  All registry mutations serialize through the registry's writer
lock; the pending-confirmation token store is in-memory with a TTL, so a
multi-worker deployment relies on HTTP keep-alive to land a confirmation
on the worker that issued its token (single-worker deployments have no
such constraint).
"""

from __future__ import annotations

import json
import multiprocessing
import os
import signal
import socket
import threading
import time
import urllib.parse
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .encoding import decode_labels, encode_query
from .forest import ForestModel, load_model, predict
from .labels import JURISDICTIONS, LABEL_SPACE, SENSITIVITY_LEVELS
from .policy import (
    ActionSet,
    Condition,
    LegalBasis,
    Policy,
    canonical_bytes,
    policy_from_dict,
    policy_to_dict,
)
from .registry import (
    Registry,
    RegistryError,
    detect_conflicts,
    new_identifier,
    verify_bytes,
)

DEFAULT_TOKEN_TTL = 600.0  # seconds

UNKNOWN_TOKEN = "UNKNOWN_TOKEN"
TOKEN_CONSUMED = "TOKEN_CONSUMED"
TOKEN_EXPIRED = "TOKEN_EXPIRED"
BAD_SIGNATURE = "BAD_SIGNATURE"


class AppError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        super().__init__(f"{code}: {message}")
        self.message = message


def _json_bytes(doc) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


@dataclass
class PendingTransfer:
    token: str
    requester_id: str
    owner_id: str
    data_id: str
    source: str
    target: str
    merged_policy: Policy
    created_at: float
    status: str = "pending_confirmation"  # -> confirmed | rejected


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8321
    workers: int = 1
    model_path: str | None = None
    stores_dir: str | None = None
    token_ttl: float = DEFAULT_TOKEN_TTL
    signature_scheme: str = "ed25519"

    @classmethod
    def from_env(cls, **overrides) -> "ServiceConfig":
        config = cls(
            host=os.environ.get("CBCMS_HOST", "127.0.0.1"),
            port=int(os.environ.get("CBCMS_PORT", "8321")),
            workers=int(os.environ.get("CBCMS_WORKERS", "1")),
            model_path=os.environ.get("CBCMS_MODEL"),
            stores_dir=os.environ.get("CBCMS_STORES"),
            token_ttl=float(os.environ.get("CBCMS_TOKEN_TTL", str(DEFAULT_TOKEN_TTL))),
            signature_scheme=os.environ.get("CBCMS_SIGNATURE_SCHEME", "ed25519"),
        )
        for name, value in overrides.items():
            if value is not None:
                setattr(config, name, value)
        return config

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "ServiceConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        config = cls(**doc)
        for name, value in overrides.items():
            if value is not None:
                setattr(config, name, value)
        return config


class ComplianceApp:
    """Request logic, independent of the HTTP transport."""

    def __init__(
        self,
        model: ForestModel | None = None,
        registry: Registry | None = None,
        token_ttl: float = DEFAULT_TOKEN_TTL,
    ):
        self._model = model
        self.registry = registry if registry is not None else Registry()
        self.token_ttl = token_ttl
        self._tokens: dict[str, PendingTransfer] = {}
        self._token_lock = threading.Lock()

    # -- model holder (atomic swap; in-flight requests keep their reference)

    @property
    def model(self) -> ForestModel:
        model = self._model
        if model is None:
            raise AppError(503, "MODEL_NOT_LOADED", "no model is loaded")
        return model

    def reload_model(self, path: str | Path) -> str:
        model = load_model(path)
        self._model = model
        return model.version()

    # -- handlers

    def healthz(self) -> dict:
        return {"status": "ok"}

    def register_user(self, body: dict) -> dict:
        try:
            user_id = self.registry.register_user(body.get("role", ""), body.get("public_key", ""))
        except RegistryError as exc:
            raise AppError(400, exc.code, str(exc)) from exc
        return {"user_id": user_id}

    def register_metadata(self, body: dict) -> dict:
        try:
            data_id = self.registry.register_metadata(
                body.get("owner_id", ""),
                body.get("data_category", ""),
                int(body.get("sensitivity_level", -1)),
                body.get("description", ""),
            )
        except RegistryError as exc:
            status = 404 if exc.code == "DANGLING_OWNER" else 400
            raise AppError(status, exc.code, str(exc)) from exc
        return {"data_id": data_id}

    def register_owner_policy(self, body: dict) -> dict:
        try:
            policy = policy_from_dict(body["policy"])
            not_required = [tuple(pair) for pair in body.get("not_required", [])]
            policy_id = self.registry.register_owner_policy(
                body.get("owner_id", ""), body.get("data_id", ""), policy, not_required
            )
        except (KeyError, ValueError) as exc:
            code = getattr(exc, "code", "BAD_REQUEST")
            raise AppError(400, code, str(exc)) from exc
        return {"policy_id": policy_id}

    def _predict_pair(self, category: str, sensitivity: int, source: str, target: str):
        fv = encode_query(category, sensitivity, source, target)
        bits, scores = predict(self.model, fv)
        policies = decode_labels(bits, source, target, category, version=self.model.version())
        return bits, scores, policies

    def compliance_query(self, source: str, target: str, category: str, sensitivity: int) -> dict:
        self._check_pair(source, target)
        if sensitivity not in SENSITIVITY_LEVELS:
            raise AppError(400, "BAD_LEVEL", f"sensitivity {sensitivity!r} out of range")
        try:
            bits, _, policies = self._predict_pair(category, sensitivity, source, target)
        except ValueError as exc:
            raise AppError(400, "BAD_QUERY", str(exc)) from exc
        return {
            "source": source,
            "target": target,
            "category": category,
            "sensitivity": sensitivity,
            "labels": "".join(str(int(b)) for b in bits),
            "policies": [policy_to_dict(p) for p in policies],
            "model_version": self.model.version(),
        }

    @staticmethod
    def _check_pair(source: str, target: str) -> None:
        for jur in (source, target):
            if jur not in JURISDICTIONS:
                raise AppError(400, "UNKNOWN_JURISDICTION", f"unknown jurisdiction {jur!r}")

    def handle_transfer_request(self, body: dict) -> dict:
        requester_id = body.get("requester_id", "")
        data_id = body.get("data_id", "")
        source = body.get("source", "")
        target = body.get("target", "")
        self._check_pair(source, target)
        if requester_id not in self.registry.users:
            self.registry.audit.append("transfer_rejected", {"reason": "unknown requester"})
            raise AppError(404, "UNKNOWN_USER", f"unknown requester {requester_id!r}")
        metadata = self.registry.metadata.get(data_id)
        if metadata is None:
            self.registry.audit.append("transfer_rejected", {"reason": "unknown data id"})
            raise AppError(404, "UNKNOWN_DATA", f"unknown data id {data_id!r}")

        bits, _, policies = self._predict_pair(
            metadata.data_category, metadata.sensitivity_level, source, target
        )
        owner = self.registry.owner_stance_for(data_id)
        mask = LABEL_SPACE.involvement_mask(source, target)
        stance = type(owner)(owner.required & mask, owner.not_required & mask)
        report = detect_conflicts(stance, bits, mask)
        merged_policy = self._merged_policy(metadata.data_category, source, target, report.merged)

        token = uuid.uuid4().hex
        pending = PendingTransfer(
            token=token,
            requester_id=requester_id,
            owner_id=metadata.owner_id,
            data_id=data_id,
            source=source,
            target=target,
            merged_policy=merged_policy,
            created_at=time.monotonic(),
        )
        with self._token_lock:
            self._purge_tokens()
            self._tokens[token] = pending
        self.registry.audit.append(
            "transfer_requested",
            {"token": token, "data_id": data_id, "source": source, "target": target},
        )
        return {
            "token": token,
            "status": pending.status,
            "compliance_policies": [policy_to_dict(p) for p in policies],
            "conflicts": [
                {
                    "label_index": c.label_index,
                    "jurisdiction": LABEL_SPACE.label_at(c.label_index).jurisdiction,
                    "label": LABEL_SPACE.label_at(c.label_index).name,
                    "owner_stance": c.owner_stance,
                    "compliance_stance": c.compliance_stance,
                }
                for c in report.conflicts
            ],
            "merged_policy": policy_to_dict(merged_policy),
            "expires_in": self.token_ttl,
        }

    @staticmethod
    def _merged_policy(category: str, source: str, target: str, merged: np.ndarray) -> Policy:
        grouped: dict[str, set[str]] = {}
        for i in np.nonzero(merged)[0]:
            label = LABEL_SPACE.label_at(int(i))
            grouped.setdefault(label.category, set()).add(label.name)
        return Policy(
            policy_name=f"Confirmed transfer policy ({source}->{target})",
            policy_id=new_identifier(),
            condition=Condition(
                roles=frozenset({"owner", "user"}),
                data_categories=frozenset({category}),
                legal_basis=LegalBasis(
                    owner_stipulation=(
                        f"Merged compliance policy for transferring {category} from {source} to {target}"
                    )
                ),
                jurisdiction_scope="both",
            ),
            action=ActionSet(**{cat: frozenset(v) for cat, v in grouped.items()}),
        )

    def _purge_tokens(self) -> None:
        deadline = time.monotonic() - self.token_ttl
        expired = [t for t, p in self._tokens.items() if p.created_at < deadline]
        for t in expired:
            del self._tokens[t]

    def confirm_transfer(self, token: str, body: dict) -> dict:
        with self._token_lock:
            pending = self._tokens.get(token)
            if pending is None:
                raise AppError(404, UNKNOWN_TOKEN, "token unknown or expired")
            if pending.status != "pending_confirmation":
                raise AppError(409, TOKEN_CONSUMED, f"token already {pending.status}")
            if pending.created_at < time.monotonic() - self.token_ttl:
                del self._tokens[token]
                raise AppError(410, TOKEN_EXPIRED, "token expired")

            payload = canonical_bytes(pending.merged_policy)
            owner_key = self.registry.users[pending.owner_id].public_key
            user_key = self.registry.users[pending.requester_id].public_key
            owner_ok = verify_bytes(owner_key, payload, body.get("owner_signature", ""))
            user_ok = verify_bytes(user_key, payload, body.get("user_signature", ""))
            if not (owner_ok and user_ok):
                pending.status = "rejected"
                self.registry.audit.append("transfer_rejected", {"token": token, "reason": "bad signature"})
                which = "owner" if not owner_ok else "user"
                raise AppError(403, BAD_SIGNATURE, f"{which} signature invalid")

            pending.status = "confirmed"
        policy_id = self.registry.register_compliance_policy(pending.merged_policy)
        self.registry.audit.append("transfer_confirmed", {"token": token, "policy_id": policy_id})
        return {"policy_id": policy_id, "status": "confirmed"}

    def audit_verify(self) -> dict:
        ok, first_bad = self.registry.verify_audit()
        return {"ok": ok, "first_bad_index": first_bad}


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    disable_nagle_algorithm = True  # headers+body are two small writes
    app: ComplianceApp  # set by server factory

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass

    def _send(self, status: int, doc) -> None:
        raw = _json_bytes(doc)
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length", "0"))
        if length == 0:
            return {}
        try:
            return json.loads(self.rfile.read(length).decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise AppError(400, "BAD_JSON", str(exc)) from exc

    def _dispatch(self, method: str) -> None:
        parsed = urllib.parse.urlsplit(self.path)
        path = parsed.path
        try:
            if method == "GET" and path == "/healthz":
                self._send(200, self.app.healthz())
            elif method == "GET" and path == "/policies/compliance":
                query = urllib.parse.parse_qs(parsed.query)

                def param(name, default=""):
                    return query.get(name, [default])[0]

                try:
                    sensitivity = int(param("sensitivity", "-1"))
                except ValueError:
                    raise AppError(400, "BAD_LEVEL", "sensitivity must be an integer") from None
                self._send(
                    200,
                    self.app.compliance_query(
                        param("source"), param("target"), param("category"), sensitivity
                    ),
                )
            elif method == "GET" and path == "/audit/verify":
                self._send(200, self.app.audit_verify())
            elif method == "POST" and path == "/users":
                self._send(201, self.app.register_user(self._body()))
            elif method == "POST" and path == "/metadata":
                self._send(201, self.app.register_metadata(self._body()))
            elif method == "POST" and path == "/policies/owner":
                self._send(201, self.app.register_owner_policy(self._body()))
            elif method == "POST" and path == "/transfers":
                self._send(200, self.app.handle_transfer_request(self._body()))
            elif method == "POST" and path.startswith("/transfers/") and path.endswith("/confirm"):
                token = path[len("/transfers/") : -len("/confirm")]
                self._send(200, self.app.confirm_transfer(token, self._body()))
            else:
                self._send(404, {"error": "NOT_FOUND", "message": f"no route {method} {path}"})
        except AppError as exc:
            self._send(exc.status, {"error": exc.code, "message": exc.message})
        except Exception as exc:  # noqa: BLE001 - last-resort handler
            self._send(500, {"error": "INTERNAL", "message": str(exc)})

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")


class ComplianceHTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, app: ComplianceApp, host: str, port: int, reuse_port: bool = False):
        handler = type("BoundHandler", (_Handler,), {"app": app})
        self._reuse_port = reuse_port
        super().__init__((host, port), handler)

    def server_bind(self):
        if self._reuse_port:
            self.socket.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEPORT, 1)
        super().server_bind()


def build_app(config: ServiceConfig) -> ComplianceApp:
    from .registry import SIGNATURE_SCHEMES

    if config.signature_scheme not in SIGNATURE_SCHEMES:
        raise ValueError(f"unsupported signature scheme {config.signature_scheme!r}")
    model = load_model(config.model_path) if config.model_path else None
    registry = Registry(config.stores_dir) if config.stores_dir else Registry()
    return ComplianceApp(model=model, registry=registry, token_ttl=config.token_ttl)


def _worker_main(config: ServiceConfig, app: ComplianceApp):
    server = ComplianceHTTPServer(app, config.host, config.port, reuse_port=True)
    signal.signal(signal.SIGTERM, lambda *_: os._exit(0))
    server.serve_forever(poll_interval=0.2)


@dataclass
class ServiceHandle:
    config: ServiceConfig
    processes: list = field(default_factory=list)

    @property
    def url(self) -> str:
        return f"http://{self.config.host}:{self.config.port}"

    def stop(self) -> None:
        for proc in self.processes:
            proc.terminate()
        for proc in self.processes:
            proc.join(timeout=5)
        self.processes.clear()


def start_service(config: ServiceConfig, app: ComplianceApp | None = None) -> ServiceHandle:
    """Spawn `config.workers` worker processes sharing the listening address."""
    if app is None:
        app = build_app(config)
    ctx = multiprocessing.get_context("fork")
    handle = ServiceHandle(config)
    for _ in range(max(1, config.workers)):
        proc = ctx.Process(target=_worker_main, args=(config, app), daemon=True)
        proc.start()
        handle.processes.append(proc)
    _wait_until_ready(config.host, config.port)
    return handle


def _wait_until_ready(host: str, port: int, timeout: float = 10.0) -> None:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        try:
            with socket.create_connection((host, port), timeout=0.5):
                return
        except OSError:
            time.sleep(0.05)
    raise TimeoutError(f"service at {host}:{port} did not come up")


def run_service(config: ServiceConfig) -> None:
    """Blocking entry point used by the CLI."""
    app = build_app(config)
    if config.workers <= 1:
        server = ComplianceHTTPServer(app, config.host, config.port)
        try:
            server.serve_forever(poll_interval=0.2)
        except KeyboardInterrupt:
            pass
        finally:
            server.server_close()
        return
    handle = start_service(config, app)
    try:
        for proc in handle.processes:
            proc.join()
    except KeyboardInterrupt:
        handle.stop()
