"""Thin HTTP service over a register store for dashboards and integrations.

Read-mostly: writes are limited to override commits, which create new
versions rather than mutating anything, preserving the append-only audit
property. Scenario posts are transient evaluations and never persist.
No authentication: a fronting proxy is assumed, and the actor field is
caller-asserted and logged as such.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .engine import ThreatScenario, apply_override, diff_scenarios, run_scenario
from .errors import ConflictError, FormatError, InputError, LockedError, NotFoundError, QerError
from .reporting import portfolio_stats
from .store import RegisterStore


@dataclass(frozen=True)
class ApiError(Exception):
    status: int
    code: str  # NOT_FOUND | CONFLICT | BAD_INPUT | LOCKED
    message: str

    def body(self) -> dict:
        return {"status": self.status, "code": self.code, "message": self.message}


def _api_error(exc: Exception) -> ApiError:
    if isinstance(exc, ApiError):
        return exc
    if isinstance(exc, NotFoundError):
        return ApiError(404, "NOT_FOUND", str(exc))
    if isinstance(exc, ConflictError):
        return ApiError(409, "CONFLICT", str(exc))
    if isinstance(exc, LockedError):
        return ApiError(423, "LOCKED", str(exc))
    if isinstance(exc, (InputError, FormatError, json.JSONDecodeError, KeyError, ValueError)):
        return ApiError(400, "BAD_INPUT", str(exc))
    raise exc


class RegisterApiServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address: tuple[str, int], store: RegisterStore):
        super().__init__(address, RegisterApiHandler)
        self.store = store


_VERSION_ROUTE = re.compile(r"^/versions/(\d+)/(entries|stats)$")
_OVERRIDE_ROUTE = re.compile(r"^/versions/(\d+)/entries/([^/]+)/override$")


class RegisterApiHandler(BaseHTTPRequestHandler):
    server: RegisterApiServer

    # -- plumbing ----------------------------------------------------------

    def log_message(self, format: str, *args) -> None:  # quiet by default
        pass

    def _send_json(self, payload, status: int = 200) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_error(self, error: ApiError) -> None:
        self._send_json(error.body(), status=error.status)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length", 0))
        if length == 0:
            raise ApiError(400, "BAD_INPUT", "request body required")
        try:
            payload = json.loads(self.rfile.read(length).decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise ApiError(400, "BAD_INPUT", f"invalid JSON body: {exc}") from exc
        if not isinstance(payload, dict):
            raise ApiError(400, "BAD_INPUT", "body must be a JSON object")
        return payload

    def do_OPTIONS(self) -> None:  # CORS preflight for the dashboard
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    # -- routes ------------------------------------------------------------

    def do_GET(self) -> None:
        try:
            if self.path == "/versions":
                self._send_json(self._versions())
                return
            m = _VERSION_ROUTE.match(self.path)
            if m:
                version = self.server.store.version(int(m.group(1)))
                if m.group(2) == "entries":
                    self._send_json([e.to_dict() for e in version.entries])
                else:
                    self._send_json(portfolio_stats(version).to_dict())
                return
            raise ApiError(404, "NOT_FOUND", f"no route {self.path}")
        except Exception as exc:  # noqa: BLE001 - mapped to structured errors
            self._send_error(_api_error(exc))

    def do_POST(self) -> None:
        try:
            if self.path == "/scenario":
                self._send_json(self._scenario(self._read_body()))
                return
            m = _OVERRIDE_ROUTE.match(self.path)
            if m:
                self._send_json(self._override(int(m.group(1)), m.group(2), self._read_body()))
                return
            raise ApiError(404, "NOT_FOUND", f"no route {self.path}")
        except Exception as exc:  # noqa: BLE001
            self._send_error(_api_error(exc))

    # -- handlers ------------------------------------------------------------

    def _versions(self) -> list[dict]:
        return [
            {
                "version_id": meta["version_id"],
                "created_at": meta["created_at"],
                "t_threat": meta["scenario"]["t_threat_years"],
                "entry_count": meta.get("entry_count"),
            }
            for meta in self.server.store.history()
        ]

    def _scenario(self, body: dict) -> dict:
        if "t_threat" not in body:
            raise ApiError(400, "BAD_INPUT", "t_threat required")
        latest = self.server.store.latest()
        if latest is None:
            raise ApiError(404, "NOT_FOUND", "register has no committed versions")
        try:
            horizon = float(body["t_threat"])
            what_if = ThreatScenario(horizon, scenario_label="what-if")
        except (TypeError, ValueError, InputError) as exc:
            raise ApiError(400, "BAD_INPUT", f"bad t_threat: {exc}") from exc
        assets = [e.enriched for e in latest.entries]
        committed = run_scenario(assets, latest.scenario)
        candidate = run_scenario(assets, what_if)
        changes = diff_scenarios(committed, candidate)
        return {
            "baseline_version": latest.version_id,
            "committed_t_threat": latest.scenario.t_threat_years,
            "t_threat": horizon,
            "changes": [c.to_dict() for c in changes],
            "exposure_counts": candidate.exposure_counts(),
        }

    def _override(self, version_id: int, qer_id: str, body: dict) -> dict:
        store = self.server.store
        for field in ("to_wave", "actor", "rationale"):
            if field not in body:
                raise ApiError(400, "BAD_INPUT", f"{field} required")
        if store.latest_id() != version_id:
            raise ApiError(
                409,
                "CONFLICT",
                f"version {version_id} is not the latest ({store.latest_id()}); reload",
            )
        version = store.version(version_id)
        entries = list(version.entries)
        index = next((i for i, e in enumerate(entries) if e.qer_id == qer_id), None)
        if index is None:
            raise ApiError(404, "NOT_FOUND", f"no entry {qer_id} in version {version_id}")
        entries[index] = apply_override(
            entries[index],
            to_wave=int(body["to_wave"]),
            actor=str(body["actor"]),
            rationale=str(body["rationale"]),
        )
        new_version = store.commit(
            entries, version.scenario, parent=version_id, actor=str(body["actor"])
        )
        return {"version_id": new_version.version_id}


def serve(register_dir: str, bind: str = "127.0.0.1:8787", background: bool = True) -> RegisterApiServer:
    """Start the service; with ``background`` the caller owns shutdown."""
    host, _, port_text = bind.rpartition(":")
    if not host or not port_text.isdigit():
        raise InputError(f"bind must be host:port, got {bind!r}")
    store = RegisterStore(register_dir)
    server = RegisterApiServer((host, int(port_text)), store)
    if background:
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
    return server
