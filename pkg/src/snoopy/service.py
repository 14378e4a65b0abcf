"""HTTP/JSON service managing feasibility-study sessions.

Endpoints::

    POST /sessions                manifest JSON (+ optional "cost_model") -> id
    GET  /sessions/{id}           status summary
    POST /sessions/{id}/run       execute the configured strategy
    GET  /sessions/{id}/result    last StudyResult
    GET  /sessions/{id}/curves    per-arm convergence curves + overlay
    POST /sessions/{id}/labels    apply label edits (incremental re-estimate)
    GET  /sessions/{id}/labels    current labels in global index order
    POST /sessions/{id}/whatif    predicted estimate after cleaning a fraction
    GET  /sessions/{id}/costs     cost ledger

Errors are ``{"code", "message", "detail"}``. Sessions persist as a directory
per session under the data dir: the manifest (resolved paths), an append-only
``journal.jsonl`` (created / run / edits events), and a binary cache of arm
states. Replaying the journal against the manifest reproduces the visible
state bit for bit; the cache only skips recomputation.

Within a session, mutations (run, edits) are serialized by a per-session
lock; reads return the last committed snapshot. Distinct sessions are fully
independent.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from snoopy import datamodel, engine, estimator, noise, study
from snoopy.datamodel import StudyLabels, StudyManifest
from snoopy.errors import (
    AlreadyRunning,
    DegenerateModel,
    IndexOutOfRange,
    LabelOutOfRange,
    ManifestInvalid,
    NoPriorRun,
    OutOfRange,
    SessionNotFound,
    SnoopyError,
    StorageFailure,
)

_MAX_BODY = 64 * 1024 * 1024


# ---------------------------------------------------------------------------
# Cost accounting
# ---------------------------------------------------------------------------

LABEL_COST_PRESETS = {"free": 0.0, "cheap": 0.002, "expensive": 0.02}


@dataclass(frozen=True)
class CostModel:
    label_cost: float = 0.0       # dollars per label edit
    machine_cost: float = 0.9     # dollars per machine hour

    def __post_init__(self):
        if self.label_cost < 0 or self.machine_cost < 0:
            raise OutOfRange("costs must be non-negative")

    @classmethod
    def from_dict(cls, doc: dict | None) -> "CostModel":
        doc = doc or {}
        label = doc.get("label_cost", 0.0)
        if isinstance(label, str):
            if label not in LABEL_COST_PRESETS:
                raise ManifestInvalid(f"unknown label cost preset {label!r}")
            label = LABEL_COST_PRESETS[label]
        return cls(label_cost=float(label),
                   machine_cost=float(doc.get("machine_cost", 0.9)))

    def to_dict(self) -> dict:
        return {"label_cost": self.label_cost, "machine_cost": self.machine_cost}


@dataclass
class CostLedger:
    model: CostModel
    entries: list = field(default_factory=list)

    def add_labels(self, count: int, timestamp: float) -> None:
        self.entries.append({
            "kind": "labels", "quantity": count,
            "unit_cost": self.model.label_cost,
            "dollars": count * self.model.label_cost,
            "time": timestamp,
        })

    def add_machine(self, seconds: float, timestamp: float) -> None:
        self.entries.append({
            "kind": "machine", "quantity": seconds,
            "unit_cost": self.model.machine_cost / 3600.0,
            "dollars": seconds * self.model.machine_cost / 3600.0,
            "time": timestamp,
        })

    def to_dict(self) -> dict:
        label = sum(e["dollars"] for e in self.entries if e["kind"] == "labels")
        machine = sum(e["dollars"] for e in self.entries if e["kind"] == "machine")
        return {
            "entries": self.entries,
            "label_dollars": label,
            "machine_dollars": machine,
            "total_dollars": label + machine,
            "total_cents": round((label + machine) * 100),
            "cost_model": self.model.to_dict(),
        }


# ---------------------------------------------------------------------------
# Sessions
# ---------------------------------------------------------------------------

@dataclass
class Session:
    session_id: str
    directory: Path
    manifest: StudyManifest
    cost_model: CostModel
    status: str = "CREATED"
    labels: StudyLabels | None = None
    arms: dict[str, study.KnnArm] | None = None
    outcome: study.StudyOutcome | None = None
    ledger: CostLedger = None
    lock: threading.RLock = field(default_factory=threading.RLock)

    def __post_init__(self):
        if self.ledger is None:
            self.ledger = CostLedger(self.cost_model)

    def ensure_labels(self) -> StudyLabels:
        if self.labels is None:
            self.labels = datamodel.load_study_labels(self.manifest)
        return self.labels

    def ensure_arms(self) -> dict[str, study.KnnArm]:
        if self.arms is None:
            self.arms = study.build_arms(self.manifest, self.ensure_labels())
        return self.arms


class SessionStore:
    """Disk-backed session registry; one journal + state cache per session."""

    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    # -- lifecycle ----------------------------------------------------------

    def create(self, doc: dict) -> Session:
        cost_model = CostModel.from_dict(doc.get("cost_model"))
        manifest_doc = {k: v for k, v in doc.items() if k != "cost_model"}
        try:
            manifest = datamodel.manifest_from_dict(manifest_doc,
                                                    base_dir=self.data_dir)
        except ManifestInvalid:
            raise
        except SnoopyError as exc:
            raise ManifestInvalid(str(exc)) from exc
        session_id = uuid.uuid4().hex[:12]
        directory = self.data_dir / session_id
        try:
            directory.mkdir(parents=True)
            resolved = _resolved_manifest_doc(manifest)
            (directory / "manifest.json").write_text(json.dumps(resolved, indent=2))
        except OSError as exc:
            raise StorageFailure(f"cannot persist session: {exc}") from exc
        session = Session(session_id, directory, manifest, cost_model)
        self._append_journal(session, {
            "event": "created", "time": time.time(),
            "cost_model": cost_model.to_dict(),
        })
        with self._lock:
            self._sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id in self._sessions:
                return self._sessions[session_id]
        session = self._load(session_id)
        with self._lock:
            return self._sessions.setdefault(session_id, session)

    def ids(self) -> list[str]:
        with self._lock:
            known = set(self._sessions)
        if self.data_dir.exists():
            known.update(p.name for p in self.data_dir.iterdir()
                         if (p / "journal.jsonl").exists())
        return sorted(known)

    # -- operations ---------------------------------------------------------

    def run(self, session_id: str) -> dict:
        session = self.get(session_id)
        if not session.lock.acquire(blocking=False):
            raise AlreadyRunning(f"session {session_id} has a mutation in flight")
        try:
            session.status = "RUNNING"
            labels = session.ensure_labels()
            arms = session.ensure_arms()
            started = time.perf_counter()
            outcome = study.run_study(session.manifest, labels, arms)
            elapsed = time.perf_counter() - started
            session.outcome = outcome
            session.status = "DONE"
            now = time.time()
            session.ledger.add_machine(elapsed, now)
            self._save_arm_cache(session)
            self._append_journal(session, {
                "event": "run", "time": now, "machine_seconds": elapsed,
                "outcome": outcome.to_dict(),
                "curves": self._curves_payload(session),
            })
            return outcome.to_dict()
        finally:
            if session.status == "RUNNING":
                session.status = "DONE" if session.outcome else "CREATED"
            session.lock.release()

    def edit_labels(self, session_id: str, edits: list[tuple[int, int]]) -> dict:
        session = self.get(session_id)
        with session.lock:
            if session.outcome is None:
                raise NoPriorRun(f"session {session_id} has no completed run")
            labels = session.ensure_labels()
            arms = session.ensure_arms()
            for index, new_label in edits:  # validate before any mutation
                if not 0 <= index < labels.n_total:
                    raise IndexOutOfRange(index, labels.n_total)
                if not 0 <= new_label < labels.n_classes:
                    raise LabelOutOfRange(index, new_label, labels.n_classes)
            now = time.time()
            labels.apply_edits(edits, timestamp=now)
            result = study.rebuild_result(session.manifest, labels, arms)
            session.outcome.result = result
            if edits:
                session.ledger.add_labels(len(edits), now)
            self._append_journal(session, {
                "event": "edits", "time": now,
                "edits": [[int(i), int(l)] for i, l in edits],
                "result": result.to_dict(),
            })
            return result.to_dict()

    def whatif(self, session_id: str, clean_fraction: float,
               assumed_base_ber: float = 0.0) -> dict:
        session = self.get(session_id)
        if session.outcome is None:
            raise NoPriorRun(f"session {session_id} has no completed run")
        if not 0.0 <= clean_fraction <= 1.0:
            raise OutOfRange(f"clean_fraction {clean_fraction} not in [0, 1]")
        labels = session.ensure_labels()
        c = labels.n_classes
        limit = 1.0 - 1.0 / c
        b = assumed_base_ber
        if not 0.0 <= b < limit:
            raise OutOfRange(f"assumed_base_ber {b} not in [0, {limit:.6g})")
        aggregate = session.outcome.result.aggregate
        if aggregate >= limit:
            raise DegenerateModel(
                f"estimate {aggregate:.6g} >= 1 - 1/C; uniform noise model "
                "cannot explain it")
        rho_hat = min(1.0, max(0.0, (aggregate - b) / (limit - b)))
        predicted = noise.ber_evolution_uniform(b, c, rho_hat * (1.0 - clean_fraction))
        verdict = estimator.decide(predicted, session.manifest.target_accuracy)
        dollars = clean_fraction * labels.n_total * session.cost_model.label_cost
        return {
            "clean_fraction": clean_fraction,
            "assumed_base_ber": b,
            "rho_hat": rho_hat,
            "predicted_estimate": predicted,
            "predicted_verdict": verdict,
            "label_cost_dollars": dollars,
        }

    def curves(self, session_id: str) -> dict:
        session = self.get(session_id)
        if session.outcome is None:
            raise NoPriorRun(f"session {session_id} has no completed run")
        return self._curves_payload(session)

    def costs(self, session_id: str) -> dict:
        return self.get(session_id).ledger.to_dict()

    def result(self, session_id: str) -> dict:
        session = self.get(session_id)
        if session.outcome is None:
            raise NoPriorRun(f"session {session_id} has no completed run")
        return session.outcome.to_dict()

    def status(self, session_id: str) -> dict:
        session = self.get(session_id)
        return {
            "session_id": session.session_id,
            "status": session.status,
            "n_train": session.manifest.n_train,
            "n_test": session.manifest.n_test,
            "target_accuracy": session.manifest.target_accuracy,
            "strategy": session.manifest.strategy.value,
            "transformations": [t.transformation_id
                                for t in session.manifest.transformations],
        }

    def current_labels(self, session_id: str) -> dict:
        session = self.get(session_id)
        labels = session.ensure_labels()
        merged = np.concatenate([labels.train.labels, labels.test.labels])
        return {
            "n_train": labels.n_train,
            "n_test": labels.n_test,
            "n_classes": labels.n_classes,
            "labels": merged.tolist(),
        }

    # -- persistence --------------------------------------------------------

    def _curves_payload(self, session: Session) -> dict:
        outcome = session.outcome
        arms_doc = {}
        for tid, arm in outcome.arms.items():
            arms_doc[tid] = {
                "metric": arm.spec.metric.value,
                "eliminated_round": outcome.run.eliminated_round(tid),
                "points": [
                    {"n_consumed": p.n_consumed, "err_1nn": p.err_1nn,
                     "ber_estimate": p.ber_estimate}
                    for p in arm.state.curve
                ],
            }
        overlay = []
        if outcome.fit is not None:
            winner = outcome.arms[outcome.result.winner]
            ns = [p.n_consumed for p in winner.state.curve]
            horizon = ns[-1] * 4 if ns else 0
            if outcome.projection and outcome.projection.n_star:
                horizon = max(horizon, int(outcome.projection.n_star))
            extended = ns + [int(ns[-1] * f) for f in (1.5, 2.0, 3.0, 4.0)] if ns else []
            extended = sorted({n for n in extended if n <= horizon} | ({horizon} if horizon else set()))
            for n in extended:
                err = outcome.fit.error_at(n)
                overlay.append({
                    "n": n, "err": err,
                    "estimate": float(estimator.cover_hart_lower_bound(
                        min(err, (session.ensure_labels().n_classes - 1)
                            / session.ensure_labels().n_classes),
                        session.ensure_labels().n_classes)),
                })
        return {
            "session_id": session.session_id,
            "winner": outcome.result.winner,
            "target_error": 1.0 - session.manifest.target_accuracy,
            "arms": arms_doc,
            "extrapolation_overlay": overlay,
        }

    def _journal_path(self, session: Session) -> Path:
        return session.directory / "journal.jsonl"

    def _append_journal(self, session: Session, event: dict) -> None:
        try:
            with open(self._journal_path(session), "a") as fh:
                fh.write(json.dumps(event) + "\n")
                fh.flush()
        except OSError as exc:
            raise StorageFailure(f"journal append failed: {exc}") from exc

    def _save_arm_cache(self, session: Session) -> None:
        payload = {}
        for tid, arm in session.arms.items():
            st = arm.state
            payload[f"{tid}/nearest_dist"] = st.nearest_dist
            payload[f"{tid}/nearest_idx"] = st.nearest_idx
            payload[f"{tid}/n_consumed"] = np.array([st.n_consumed])
            payload[f"{tid}/curve_n"] = np.array([p.n_consumed for p in st.curve])
            payload[f"{tid}/curve_err"] = np.array([p.err_1nn for p in st.curve])
            payload[f"{tid}/curve_ber"] = np.array([p.ber_estimate for p in st.curve])
        np.savez(session.directory / "arms.npz", **payload)

    def _restore_arm_cache(self, session: Session) -> bool:
        path = session.directory / "arms.npz"
        if not path.exists():
            return False
        arms = session.ensure_arms()
        with np.load(path) as data:
            for tid, arm in arms.items():
                if f"{tid}/n_consumed" not in data:
                    return False
                st = arm.state
                st.nearest_dist = data[f"{tid}/nearest_dist"]
                st.nearest_idx = data[f"{tid}/nearest_idx"]
                st.n_consumed = int(data[f"{tid}/n_consumed"][0])
                st.finished = st.n_consumed >= session.manifest.n_train
                st.curve = [
                    engine.CurvePoint(int(n), float(e), float(b))
                    for n, e, b in zip(data[f"{tid}/curve_n"],
                                       data[f"{tid}/curve_err"],
                                       data[f"{tid}/curve_ber"])
                ]
                arm.losses = [p.err_1nn for p in st.curve]
        return True

    def _load(self, session_id: str) -> Session:
        directory = self.data_dir / session_id
        journal = directory / "journal.jsonl"
        if not journal.exists():
            raise SessionNotFound(f"no session {session_id!r}")
        manifest = datamodel.load_manifest(directory / "manifest.json")
        events = [json.loads(line) for line in journal.read_text().splitlines() if line]
        cost_model = CostModel.from_dict(
            next((e["cost_model"] for e in events if e["event"] == "created"), None))
        session = Session(session_id, directory, manifest, cost_model)

        has_run = any(e["event"] == "run" for e in events)
        cache_ok = self._restore_arm_cache(session) if has_run else False
        for event in events:
            if event["event"] == "run":
                if cache_ok:
                    labels = session.ensure_labels()
                    arms = session.ensure_arms()
                    result = study.rebuild_result(session.manifest, labels, arms)
                    fit, projection = self._refit(session, result)
                    run = _scheduler_run_from_dict(event["outcome"]["scheduler"])
                    session.outcome = study.StudyOutcome(
                        result=result, run=run, fit=fit,
                        projection=projection, arms=arms)
                else:
                    # deterministic replay: recompute the run from scratch
                    labels = session.ensure_labels()
                    arms = session.ensure_arms()
                    session.outcome = study.run_study(session.manifest, labels, arms)
                    cache_ok = True
                    self._save_arm_cache(session)
                session.status = "DONE"
                session.ledger.add_machine(event["machine_seconds"], event["time"])
            elif event["event"] == "edits":
                labels = session.ensure_labels()
                labels.apply_edits([(i, l) for i, l in event["edits"]],
                                   timestamp=event["time"])
                result = study.rebuild_result(session.manifest, labels, session.arms)
                session.outcome.result = result
                if event["edits"]:
                    session.ledger.add_labels(len(event["edits"]), event["time"])
        return session

    def _refit(self, session: Session, result: estimator.StudyResult):
        arms = session.arms
        winner = arms[result.winner]
        try:
            fit = estimator.fit_loglinear(winner.state.curve)
        except SnoopyError:
            return None, None
        try:
            projection = estimator.samples_to_target(
                fit, session.manifest.target_accuracy,
                session.ensure_labels().n_classes, winner.state.n_consumed)
        except SnoopyError:
            projection = None
        return fit, projection


def _resolved_manifest_doc(manifest: StudyManifest) -> dict:
    return {
        "transformations": [
            {"transformation_id": t.transformation_id,
             "train_path": str(t.train_path),
             "test_path": str(t.test_path),
             "metric": t.metric.value}
            for t in manifest.transformations
        ],
        "train_labels": str(manifest.train_labels),
        "test_labels": str(manifest.test_labels),
        "target_accuracy": manifest.target_accuracy,
        "batch_fraction": manifest.batch_fraction,
        "strategy": manifest.strategy.value,
        "budget": manifest.budget,
        "seed": manifest.seed,
        **({"oracle_winner": manifest.oracle_winner}
           if manifest.oracle_winner else {}),
    }


def _scheduler_run_from_dict(doc: dict):
    from snoopy.scheduler import RoundLog, SchedulerRun

    return SchedulerRun(
        strategy=doc["strategy"],
        budget=doc["budget"],
        rounds=tuple(RoundLog(r["index"], tuple(r["arm_ids"]), r["pulls"],
                              r["cumulative"]) for r in doc["rounds"]),
        winner=doc["winner"],
        total_pulls=doc["total_pulls"],
        tangent_break_count=doc["tangent_break_count"],
        final_positions=doc.get("final_positions", {}),
    )


# ---------------------------------------------------------------------------
# HTTP layer
# ---------------------------------------------------------------------------

_STATUS_FOR = {
    "SessionNotFound": 404,
    "NoPriorRun": 409,
    "AlreadyRunning": 409,
    "StorageFailure": 500,
}


def _error_payload(exc: Exception) -> tuple[int, dict]:
    code = type(exc).__name__
    status = _STATUS_FOR.get(code, 400 if isinstance(exc, SnoopyError) else 500)
    return status, {"code": code, "message": str(exc), "detail": None}


class ServiceHandler(BaseHTTPRequestHandler):
    """Routes the endpoint table above onto a SessionStore."""

    store: SessionStore = None
    static_dir: Path | None = None
    quiet = True

    def log_message(self, fmt, *args):  # stdlib default spams stderr
        if not self.quiet:
            super().log_message(fmt, *args)

    # -- plumbing -----------------------------------------------------------

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length > _MAX_BODY:
            raise SnoopyError(f"request body exceeds {_MAX_BODY} bytes")
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ManifestInvalid(f"request body is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ManifestInvalid("request body must be a JSON object")
        return doc

    def _dispatch(self, method: str) -> None:
        try:
            handled = self._route(method)
        except Exception as exc:  # noqa: BLE001 - boundary translation
            status, payload = _error_payload(exc)
            self._send_json(status, payload)
            return
        if not handled:
            self._send_json(404, {"code": "NotFound",
                                  "message": f"no route for {method} {self.path}",
                                  "detail": None})

    def _route(self, method: str) -> bool:
        parts = [p for p in self.path.split("?")[0].split("/") if p]
        if method == "OPTIONS":
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.end_headers()
            return True
        if parts[:1] == ["sessions"]:
            return self._route_sessions(method, parts)
        if method == "GET":
            return self._serve_static(parts)
        return False

    def _route_sessions(self, method: str, parts: list[str]) -> bool:
        store = self.store
        if len(parts) == 1 and method == "POST":
            session = store.create(self._read_body())
            self._send_json(201, {"session_id": session.session_id,
                                  "status": session.status})
            return True
        if len(parts) == 1 and method == "GET":
            self._send_json(200, {"sessions": store.ids()})
            return True
        if len(parts) < 2:
            return False
        sid = parts[1]
        tail = parts[2] if len(parts) > 2 else None
        if method == "GET":
            if tail is None:
                self._send_json(200, store.status(sid))
            elif tail == "result":
                self._send_json(200, store.result(sid))
            elif tail == "curves":
                self._send_json(200, store.curves(sid))
            elif tail == "costs":
                self._send_json(200, store.costs(sid))
            elif tail == "labels":
                self._send_json(200, store.current_labels(sid))
            else:
                return False
            return True
        if method == "POST":
            if tail == "run":
                self._send_json(200, store.run(sid))
            elif tail == "labels":
                doc = self._read_body()
                edits = [(int(e["index"]), int(e["new_label"]))
                         for e in doc.get("edits", [])]
                self._send_json(200, store.edit_labels(sid, edits))
            elif tail == "whatif":
                doc = self._read_body()
                self._send_json(200, store.whatif(
                    sid, float(doc.get("clean_fraction", 0.0)),
                    float(doc.get("assumed_base_ber", 0.0))))
            else:
                return False
            return True
        return False

    def _serve_static(self, parts: list[str]) -> bool:
        if self.static_dir is None:
            return False
        rel = "/".join(parts) or "index.html"
        target = (self.static_dir / rel).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) or not target.is_file():
            return False
        types = {".html": "text/html", ".js": "text/javascript",
                 ".css": "text/css", ".json": "application/json",
                 ".svg": "image/svg+xml", ".map": "application/json"}
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", types.get(target.suffix, "application/octet-stream"))
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)
        return True

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_OPTIONS(self):
        self._dispatch("OPTIONS")


def make_server(data_dir, port: int = 8750, host: str = "127.0.0.1",
                static_dir=None) -> ThreadingHTTPServer:
    store = SessionStore(data_dir)
    handler = type("BoundHandler", (ServiceHandler,), {
        "store": store,
        "static_dir": Path(static_dir) if static_dir else None,
    })
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    return server


def serve(data_dir, port: int = 8750, host: str = "127.0.0.1",
          static_dir=None) -> None:
    server = make_server(data_dir, port, host, static_dir)
    bound = server.server_address[1]
    print(f"session service on http://{host}:{bound} (data dir: {data_dir})",
          flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
