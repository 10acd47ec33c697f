"""Append-only session logs and their live in-memory counterpart.

One session = one newline-delimited JSON file.  The first line is a
`created` event carrying the full configuration; every accepted
observation appends an `observed` + `estimator_refit` pair in a single
write, fsynced before the caller is acknowledged.  Loading a session
replays the log through the adaptive core and verifies that the
recorded estimates match the recomputed ones bit for bit.
"""

from __future__ import annotations

import copy
import json
import os
import re
import secrets
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .designs import (
    information_matrix,
    lambda_min,
    logdet,
    sensitivity_profile,
    sym_inv_sqrt,
)
from .errors import (
    SequencingError,
    SessionIntegrityError,
    StaleSuggestionError,
    UnknownSessionError,
)
from .io import dump_json, model_to_document, parse_model_document
from .model import ModelSpec
from .wynn import (
    AdaptiveState,
    _argmax_lowest,
    adaptive_init,
    estimator_from_document,
    estimator_to_document,
)

PHASE_AWAITING = "awaiting start responses"
PHASE_ACTIVE = "active"

_ID_PATTERN = re.compile(r"^[0-9a-f]{16}$")

EVENT_KINDS = ("created", "observed", "estimator_refit")


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    kind: str
    payload: dict

    def to_line(self) -> str:
        return dump_json(
            {"kind": self.kind, "payload": self.payload, "seq": self.seq}
        ) + "\n"


def parse_event_line(line: bytes | str) -> SessionEvent:
    if isinstance(line, bytes):
        line = line.decode("utf-8", errors="replace")
    try:
        doc = json.loads(line)
    except ValueError as exc:
        raise SessionIntegrityError(f"unparseable event line: {exc}") from exc
    if not isinstance(doc, dict):
        raise SessionIntegrityError("event line is not a JSON object")
    for key in ("seq", "kind", "payload"):
        if key not in doc:
            raise SessionIntegrityError(f"event missing field {key!r}")
    if doc["kind"] not in EVENT_KINDS:
        raise SessionIntegrityError(f"unknown event kind {doc['kind']!r}")
    return SessionEvent(
        seq=int(doc["seq"]), kind=str(doc["kind"]), payload=doc["payload"]
    )


def replay_events(events: list[SessionEvent]) -> tuple[ModelSpec, AdaptiveState]:
    """Rebuild the adaptive state and verify recorded estimates.

    Raises SessionIntegrityError on sequence gaps, broken event pairs,
    or any recorded estimate that differs from the recomputed one.
    """
    if not events or events[0].kind != "created":
        raise SessionIntegrityError("log must begin with a created event")
    for pos, ev in enumerate(events):
        if ev.seq != pos:
            raise SessionIntegrityError(
                f"event {pos} carries seq {ev.seq}; log is not contiguous"
            )
    cfg = events[0].payload
    spec = parse_model_document(cfg["model"])
    est = estimator_from_document(cfg.get("estimator", {}))
    seed = cfg.get("theta_seed")
    state = adaptive_init(spec, cfg["start_points"], est, seed)
    i = 1
    while i < len(events):
        ev = events[i]
        if ev.kind != "observed":
            raise SessionIntegrityError(
                f"seq {ev.seq}: expected an observed event, got {ev.kind}"
            )
        if i + 1 >= len(events) or events[i + 1].kind != "estimator_refit":
            raise SessionIntegrityError(
                f"seq {ev.seq}: observed event without its refit partner"
            )
        state.observe(int(ev.payload["index"]), float(ev.payload["y"]))
        recorded = tuple(float(v) for v in events[i + 1].payload["theta_hat"])
        replayed = tuple(float(v) for v in state.theta_hat)
        if recorded != replayed:
            raise SessionIntegrityError(
                f"seq {events[i + 1].seq}: recorded estimate {recorded} "
                f"does not replay (got {replayed})"
            )
        i += 2
    return spec, state


class SessionRecord:
    """A live session: adaptive state plus its backing event log."""

    def __init__(self, sid: str, path: Path, spec: ModelSpec,
                 state: AdaptiveState, events: list[SessionEvent]):
        self.id = sid
        self.path = path
        self.spec = spec
        self.state = state
        self.events = events
        self._lock = threading.Lock()

    @property
    def seq(self) -> int:
        return self.events[-1].seq

    @property
    def phase(self) -> str:
        return PHASE_AWAITING if self.state.pending_points else PHASE_ACTIVE

    # -- payloads -------------------------------------------------------

    def public_state(self) -> dict:
        cfg = self.events[0].payload
        st = self.state
        return {
            "id": self.id,
            "seq": self.seq,
            "phase": self.phase,
            "model": cfg["model"],
            "labels": list(self.spec.region.labels),
            "start_points": list(cfg["start_points"]),
            "pending_points": list(st.pending_points),
            "n": st.n,
            "n_observed": st.n_observed,
            "theta_hat": [float(v) for v in st.theta_hat],
            "estimator": cfg["estimator"],
        }

    def _sensitivity_table(self) -> dict:
        st = self.state
        profile = sensitivity_profile(self.spec, st.design, st.theta_hat)
        p = self.spec.region.dim
        return {
            "labels": list(self.spec.region.labels),
            "d": [float(v) for v in profile],
            "p": p,
            "argmax_index": _argmax_lowest(profile),
            "kw_gap": float(profile.max()) - p,
        }

    def suggest(self) -> dict:
        """Next-point payload.  Pure: repeated calls are identical."""
        st = self.state
        k = st.next_point()
        table = self._sensitivity_table()
        return {
            "index": k,
            "label": self.spec.region.labels[k],
            "n": st.n,
            "theta_hat": [float(v) for v in st.theta_hat],
            "suggestion_seq": self.seq,
            "sensitivity": table,
        }

    def estimate_payload(self) -> dict:
        st = self.state
        M = information_matrix(self.spec, st.design, st.theta_hat)
        inv, _ = sym_inv_sqrt(M)
        se = np.sqrt(np.diag(inv) / st.n)
        fit = st.last_fit
        table = self._sensitivity_table()
        return {
            "seq": self.seq,
            "n": st.n,
            "n_observed": st.n_observed,
            "theta_hat": [float(v) for v in st.theta_hat],
            "se": [float(v) for v in se],
            "converged": None if fit is None else bool(fit.converged),
            "at_boundary": None if fit is None else list(fit.boundary_flags),
            "logdet": logdet(M),
            "lambda_min": lambda_min(M),
            "kw_gap": table["kw_gap"],
        }

    def sensitivity_payload(self) -> dict:
        table = self._sensitivity_table()
        table["seq"] = self.seq
        table["n"] = self.state.n
        return table

    def history_payload(self) -> dict:
        rows = []
        prev = None
        for d in self.state.diagnostics:
            theta = np.asarray(d.theta_hat)
            delta = None if prev is None else float(np.linalg.norm(theta - prev))
            prev = theta
            rows.append({
                "n": d.n,
                "theta_hat": list(d.theta_hat),
                "logdet": d.logdet,
                "lambda_min": d.lambda_min,
                "kw_gap": d.kw_gap,
                "delta_theta": delta,
            })
        return {
            "seq": self.seq,
            "events": [
                {"seq": e.seq, "kind": e.kind, "payload": e.payload}
                for e in self.events
            ],
            "trajectory": rows,
        }

    # -- mutation -------------------------------------------------------

    def submit(self, index: int, y: float, suggestion_seq: int) -> dict:
        """Apply one observation; the event pair is durable before return."""
        if not self._lock.acquire(blocking=False):
            raise SequencingError(
                "another observation on this session is in flight"
            )
        try:
            if int(suggestion_seq) != self.seq:
                raise StaleSuggestionError(
                    f"suggestion_seq {suggestion_seq} is stale "
                    f"(current seq {self.seq}); refresh and retry"
                )
            # trial state first: a rejected or failing observation must
            # leave both memory and disk untouched
            candidate = copy.deepcopy(self.state)
            candidate.observe(int(index), float(y))
            fit = candidate.last_fit
            observed = SessionEvent(
                seq=self.seq + 1,
                kind="observed",
                payload={
                    "index": int(index),
                    "y": float(y),
                    "timestamp": time.time(),
                },
            )
            refit = SessionEvent(
                seq=self.seq + 2,
                kind="estimator_refit",
                payload={
                    "theta_hat": [float(v) for v in candidate.theta_hat],
                    "n": candidate.n,
                    "n_observed": candidate.n_observed,
                    "converged": None if fit is None else bool(fit.converged),
                    "at_boundary": (
                        None if fit is None else list(fit.boundary_flags)
                    ),
                },
            )
            self._append_lines([observed, refit])
            self.state = candidate
            self.events.extend([observed, refit])
        finally:
            self._lock.release()
        return {
            "state": self.public_state(),
            "estimate": self.estimate_payload(),
        }

    def _append_lines(self, new_events: list[SessionEvent]) -> None:
        # one write per accepted observation keeps the pair atomic on disk
        blob = "".join(e.to_line() for e in new_events).encode("utf-8")
        fd = os.open(self.path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
        try:
            os.write(fd, blob)
            os.fsync(fd)
        finally:
            os.close(fd)


class SessionStore:
    """Directory of session logs with an in-memory record cache."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._records: dict[str, SessionRecord] = {}
        self._lock = threading.Lock()

    def _path(self, sid: str) -> Path:
        return self.data_dir / f"{sid}.ndjson"

    def create(self, model_doc: dict, start_points, estimator_doc: dict | None = None,
               theta_seed=None) -> SessionRecord:
        spec = parse_model_document(model_doc)
        est = estimator_from_document(estimator_doc or {})
        seed = None if theta_seed is None else [float(v) for v in theta_seed]
        state = adaptive_init(spec, [int(k) for k in start_points], est, seed)
        payload = {
            "model": model_to_document(spec),
            "start_points": [int(k) for k in start_points],
            "estimator": estimator_to_document(est),
            "theta_seed": seed,
        }
        sid = secrets.token_hex(8)
        created = SessionEvent(seq=0, kind="created", payload=payload)
        record = SessionRecord(sid, self._path(sid), spec, state, [created])
        record._append_lines([created])
        with self._lock:
            self._records[sid] = record
        return record

    def load(self, sid: str) -> SessionRecord:
        with self._lock:
            cached = self._records.get(sid)
        if cached is not None:
            return cached
        if not _ID_PATTERN.match(sid or ""):
            raise UnknownSessionError(f"unknown session {sid!r}")
        path = self._path(sid)
        if not path.exists():
            raise UnknownSessionError(f"unknown session {sid!r}")
        events = self._read_log(path)
        spec, state = replay_events(events)
        record = SessionRecord(sid, path, spec, state, events)
        with self._lock:
            # another thread may have loaded it concurrently; keep the first
            return self._records.setdefault(sid, record)

    def delete(self, sid: str) -> None:
        with self._lock:
            self._records.pop(sid, None)
        if not _ID_PATTERN.match(sid or ""):
            raise UnknownSessionError(f"unknown session {sid!r}")
        path = self._path(sid)
        if not path.exists():
            raise UnknownSessionError(f"unknown session {sid!r}")
        path.unlink()

    def list_ids(self) -> list[str]:
        return sorted(
            p.stem for p in self.data_dir.glob("*.ndjson")
            if _ID_PATTERN.match(p.stem)
        )

    @staticmethod
    def _read_log(path: Path) -> list[SessionEvent]:
        raw = path.read_bytes()
        lines = raw.split(b"\n")
        # a clean log ends with a newline, so the final split element is
        # empty; anything else is a torn trailing write and is dropped
        complete, _tail = lines[:-1], lines[-1]
        events = [parse_event_line(ln) for ln in complete]
        dropped = 0
        while events and events[-1].kind == "observed":
            # an observed line whose refit partner never hit the disk
            events.pop()
            dropped += 1
        if not events:
            raise SessionIntegrityError(f"{path.name}: no usable events")
        if dropped or _tail:
            kept = sum(len(ln) + 1 for ln in complete[: len(events)])
            with open(path, "r+b") as fh:
                fh.truncate(kept)
                fh.flush()
                os.fsync(fh.fileno())
        return events
