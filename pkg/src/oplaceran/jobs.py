"""Asynchronous placement jobs with token polling.

Submitting returns immediately with an unguessable token; the job runs on a
small worker pool and its ticket moves Pending -> Running -> one of
Succeeded / Failed / Infeasible, never backwards. Infeasibility is a normal
terminal state, not a failure. With a results directory configured, tickets
(and their results) survive restarts and stay retrievable indefinitely.
"""

from __future__ import annotations

import secrets
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import yaml

from .catalogs import dump_doc
from .errors import InfeasibleRequest, UnknownSolver, UnknownToken
from .feasibility import (
    PlacementRequest,
    PlacementResult,
    result_doc,
    result_from_doc,
    validate_request,
)
from .solvers import SolverRegistry

TERMINAL_STATES = ("Succeeded", "Failed", "Infeasible")


class JobStatus(Enum):
    PENDING = "Pending"
    RUNNING = "Running"
    SUCCEEDED = "Succeeded"
    FAILED = "Failed"
    INFEASIBLE = "Infeasible"

    @property
    def terminal(self) -> bool:
        return self.value in TERMINAL_STATES


@dataclass
class JobTicket:
    token: str
    status: JobStatus
    result: PlacementResult | None = None
    error: str | None = None
    detail: str | None = None
    submitted_at: float = 0.0
    finished_at: float | None = None


def ticket_doc(ticket: JobTicket) -> dict:
    return {
        "token": ticket.token,
        "status": ticket.status.value,
        "result": result_doc(ticket.result) if ticket.result is not None else None,
        "error": ticket.error,
        "detail": ticket.detail,
        "submitted_at": ticket.submitted_at,
        "finished_at": ticket.finished_at,
    }


def ticket_from_doc(doc: dict) -> JobTicket:
    return JobTicket(
        token=doc["token"],
        status=JobStatus(doc["status"]),
        result=result_from_doc(doc["result"]) if doc.get("result") else None,
        error=doc.get("error"),
        detail=doc.get("detail"),
        submitted_at=doc.get("submitted_at", 0.0),
        finished_at=doc.get("finished_at"),
    )


class JobRunner:
    """Runs placement jobs on a bounded pool; tickets are read-only snapshots."""

    def __init__(
        self,
        registry: SolverRegistry,
        max_jobs: int = 2,
        results_dir: str | Path | None = None,
    ) -> None:
        self._registry = registry
        self._lock = threading.Lock()
        self._tickets: dict[str, JobTicket] = {}
        self._executor = ThreadPoolExecutor(max_workers=max_jobs)
        self._results_dir = Path(results_dir) if results_dir is not None else None
        if self._results_dir is not None:
            self._results_dir.mkdir(parents=True, exist_ok=True)
            self._load_persisted()

    def submit(self, request: PlacementRequest) -> str:
        """Validate and enqueue; returns the polling token without waiting."""
        validate_request(request)
        if not self._registry.has(request.solver_id):
            raise UnknownSolver(f"unknown solver {request.solver_id!r}")
        token = secrets.token_urlsafe(16)
        ticket = JobTicket(
            token=token, status=JobStatus.PENDING, submitted_at=time.time()
        )
        with self._lock:
            self._tickets[token] = ticket
        self._persist(ticket)
        self._executor.submit(self._run, token, request)
        return token

    def status(self, token: str) -> JobTicket:
        with self._lock:
            if token not in self._tickets:
                raise UnknownToken(f"unknown placement token {token!r}")
            return replace(self._tickets[token])

    def wait(self, token: str, timeout: float = 30.0, poll: float = 0.005) -> JobTicket:
        deadline = time.monotonic() + timeout
        while True:
            ticket = self.status(token)
            if ticket.status.terminal:
                return ticket
            if time.monotonic() > deadline:
                raise TimeoutError(f"job {token} not terminal after {timeout}s")
            time.sleep(poll)

    def tokens(self) -> list[str]:
        with self._lock:
            return sorted(self._tickets)

    def shutdown(self) -> None:
        self._executor.shutdown(wait=True)

    # -- internals -----------------------------------------------------------

    def _run(self, token: str, request: PlacementRequest) -> None:
        self._transition(token, JobStatus.RUNNING)
        try:
            result = self._registry.solve(request)
        except InfeasibleRequest as exc:
            self._finish(token, JobStatus.INFEASIBLE, detail=str(exc))
        except Exception as exc:  # solver plug-ins may raise anything
            self._finish(token, JobStatus.FAILED, error=str(exc))
        else:
            self._finish(token, JobStatus.SUCCEEDED, result=result)

    def _transition(self, token: str, status: JobStatus) -> None:
        with self._lock:
            ticket = self._tickets[token]
            ticket.status = status
            snapshot = replace(ticket)
        self._persist(snapshot)

    def _finish(
        self,
        token: str,
        status: JobStatus,
        result: PlacementResult | None = None,
        error: str | None = None,
        detail: str | None = None,
    ) -> None:
        with self._lock:
            ticket = self._tickets[token]
            ticket.status = status
            ticket.result = result
            ticket.error = error
            ticket.detail = detail
            ticket.finished_at = max(time.time(), ticket.submitted_at)
            snapshot = replace(ticket)
        self._persist(snapshot)

    def _persist(self, ticket: JobTicket) -> None:
        if self._results_dir is None:
            return
        path = self._results_dir / f"{ticket.token}.yaml"
        path.write_text(dump_doc(ticket_doc(ticket)))

    def _load_persisted(self) -> None:
        for path in sorted(self._results_dir.glob("*.yaml")):
            doc = yaml.safe_load(path.read_text())
            ticket = ticket_from_doc(doc)
            if not ticket.status.terminal:
                # A restart interrupted this job; it cannot be resumed.
                ticket.status = JobStatus.FAILED
                ticket.error = "interrupted by restart"
                ticket.finished_at = max(time.time(), ticket.submitted_at)
            self._tickets[ticket.token] = ticket
