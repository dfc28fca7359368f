"""Wire interface: a small threaded HTTP server over the orchestrator modules.

Every endpoint is a thin adapter: it decodes the request document, calls the
owning module, and re-encodes the module's result. Bodies use the same YAML
encoding as the scenario file format. Failed responses always carry exactly
one error document ``{code, message, detail}``.

Placement submission is asynchronous by contract: POST /placements returns
the polling token immediately, however long the solve takes.
"""

from __future__ import annotations

import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import requests
import yaml

from .catalogs import (
    Scenario,
    dump_doc,
    nfvi_entry_doc,
    parse_scenario,
    scenario_doc,
    topology_doc,
)
from .deployer import (
    AllocationPlan,
    ChainingEntry,
    PodSpec,
    deployment_doc,
)
from .errors import (
    DuplicateId,
    InfeasibleRequest,
    InsufficientResources,
    LinkOverCommit,
    MissingEntry,
    OplaceranError,
    ParseError,
    SimulatorUnavailable,
    TooLarge,
    UnknownDeployment,
    UnknownNode,
    UnknownSolver,
    UnknownToken,
    ValidationError,
)
from .feasibility import PlacementRequest, request_from_scenario
from .jobs import JobStatus, ticket_doc
from .model import Chain, CnfSpec, RadioFunction
from .placer import ExternalInputs, Orchestrator, record_doc

DEFAULT_PORT = 8080

_ERROR_STATUS = {
    "BadRequest": 400,
    "NotFound": 404,
    "Conflict": 409,
    "Infeasible": 422,
    "Internal": 500,
}


class ApiError(Exception):
    def __init__(self, code: str, message: str, detail: str = "") -> None:
        super().__init__(message)
        self.code = code
        self.message = message
        self.detail = detail

    @property
    def status(self) -> int:
        return _ERROR_STATUS[self.code]

    def doc(self) -> dict:
        return {"code": self.code, "message": self.message, "detail": self.detail}


def _to_api_error(exc: Exception) -> ApiError:
    if isinstance(exc, ApiError):
        return exc
    if isinstance(exc, (UnknownToken, UnknownDeployment, MissingEntry)):
        return ApiError("NotFound", str(exc))
    if isinstance(exc, (ParseError, ValidationError, UnknownSolver, UnknownNode, TooLarge)):
        return ApiError("BadRequest", str(exc))
    if isinstance(exc, InfeasibleRequest):
        return ApiError("Infeasible", str(exc))
    if isinstance(exc, (InsufficientResources, LinkOverCommit, DuplicateId)):
        return ApiError("Conflict", str(exc))
    if isinstance(exc, (SimulatorUnavailable, OplaceranError)):
        return ApiError("Internal", str(exc))
    return ApiError("Internal", f"{type(exc).__name__}: {exc}")


def plan_from_doc(doc: dict) -> AllocationPlan:
    pod_specs = []
    for p in doc.get("pod_specs", []):
        function = RadioFunction(p["function"])
        pod_specs.append(
            PodSpec(
                chain_id=p["chain_id"],
                function=function,
                node=p["node"],
                spec=CnfSpec(
                    function=function,
                    cpu_demand=int(p["cpu_demand"]),
                    memory_demand=int(p["memory_demand"]),
                    image_ref=p["image_ref"],
                ),
                image_ref=p["image_ref"],
            )
        )
    chaining = [
        ChainingEntry(
            chain_id=c["chain_id"],
            from_function=c["from_function"],
            to_function=c["to_function"],
            interface=c["interface"],
            path=tuple(c.get("path", [])),
        )
        for c in doc.get("chaining", [])
    ]
    return AllocationPlan(
        plan_id=doc.get("plan_id", "plan-external"),
        pod_specs=pod_specs,
        chaining=chaining,
        link_reservations=dict(doc.get("link_reservations", {})),
    )


def _parse_chains(docs) -> list[Chain]:
    if not isinstance(docs, list):
        raise ApiError("BadRequest", "chains must be a list")
    chains = []
    for c in docs:
        if not isinstance(c, dict) or "chain_id" not in c or "vru_node" not in c:
            raise ApiError("BadRequest", "each chain needs chain_id and vru_node")
        chains.append(Chain(chain_id=str(c["chain_id"]), vru_node=str(c["vru_node"])))
    return chains


class OrchestratorService:
    """HTTP front end bound to one orchestrator instance."""

    def __init__(
        self, orchestrator: Orchestrator, host: str = "127.0.0.1", port: int = DEFAULT_PORT
    ) -> None:
        self.orchestrator = orchestrator
        service = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, *args) -> None:  # keep test output quiet
                pass

            def _body(self):
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length) if length else b""
                if not raw:
                    return None
                try:
                    return yaml.safe_load(raw)
                except yaml.YAMLError as exc:
                    raise ApiError("BadRequest", f"malformed request body: {exc}") from exc

            def _send(self, status: int, payload, content_type: str = "application/x-yaml"):
                body = payload if isinstance(payload, bytes) else dump_doc(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", content_type)
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def _dispatch(self, method: str) -> None:
                try:
                    handled = service.handle(method, self.path.rstrip("/"), self._body)
                except Exception as exc:  # every failure maps to one error document
                    error = _to_api_error(exc)
                    self._send(error.status, error.doc())
                    return
                status, payload, content_type = handled
                self._send(status, payload, content_type)

            def do_GET(self) -> None:
                self._dispatch("GET")

            def do_PUT(self) -> None:
                self._dispatch("PUT")

            def do_POST(self) -> None:
                self._dispatch("POST")

            def do_DELETE(self) -> None:
                self._dispatch("DELETE")

        self._server = ThreadingHTTPServer((host, port), Handler)
        self._server.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> None:
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    # -- routing -----------------------------------------------------------------

    def handle(self, method: str, path: str, read_body):
        orch = self.orchestrator
        parts = [p for p in path.split("/") if p]

        if method == "GET" and parts == ["catalog", "topology"]:
            return 200, {"topology": topology_doc(orch.catalogs.topology())}, "application/x-yaml"

        if method == "PUT" and parts == ["catalog", "topology"]:
            body = read_body()
            if not isinstance(body, dict):
                raise ApiError("BadRequest", "expected a topology document")
            doc = body.get("topology", body)
            from .catalogs import parse_topology_doc

            topology = parse_topology_doc(doc)
            orch.catalogs.set_topology_inputs(topology)
            return 200, {"topology": topology_doc(orch.catalogs.topology())}, "application/x-yaml"

        if method == "GET" and parts == ["catalog", "nfvi"]:
            snapshot = orch.catalogs.nfvi_snapshot()
            return (
                200,
                {
                    "snapshot_seq": snapshot.seq,
                    "entries": [nfvi_entry_doc(e) for e in snapshot.entries],
                },
                "application/x-yaml",
            )

        if method == "POST" and parts == ["catalog", "nfvi", "refresh"]:
            return 200, {"snapshot_seq": orch.refresh_nfvi_view()}, "application/x-yaml"

        if method == "GET" and parts == ["catalog", "solvers"]:
            return (
                200,
                {
                    "solvers": [
                        {
                            "solver_id": d.solver_id,
                            "kind": d.kind.value,
                            "description": d.description,
                        }
                        for d in orch.catalogs.solvers()
                    ]
                },
                "application/x-yaml",
            )

        if method == "GET" and parts == ["catalog", "cnfs"]:
            return (
                200,
                {
                    "cnfs": {
                        e.function.value: {
                            "image_ref": e.image_ref,
                            "cpu_demand": e.spec.cpu_demand,
                            "memory_demand": e.spec.memory_demand,
                        }
                        for e in orch.catalogs.cnf_entries()
                    }
                },
                "application/x-yaml",
            )

        if method == "POST" and parts == ["placements"]:
            body = read_body()
            if not isinstance(body, dict):
                raise ApiError("BadRequest", "expected a placement request document")
            request = self._placement_request(body)
            token = orch.jobs.submit(request)
            return 202, {"token": token}, "application/x-yaml"

        if method == "GET" and len(parts) == 2 and parts[0] == "placements":
            ticket = orch.jobs.status(parts[1])
            return 200, ticket_doc(ticket), "application/x-yaml"

        if method == "POST" and parts == ["orchestrations"]:
            body = read_body()
            if not isinstance(body, dict):
                raise ApiError("BadRequest", "expected an orchestration request document")
            scenario = None
            if body.get("scenario") is not None:
                scenario = parse_scenario(dump_doc(body["scenario"]))
            if "chains" in body and body["chains"] is not None:
                chains = _parse_chains(body["chains"])
            elif scenario is not None:
                chains = list(scenario.chains)
            else:
                raise ApiError("BadRequest", "orchestration needs chains or a scenario")
            solver_id = body.get("solver_id") or (
                scenario.solver_id if scenario is not None else "aggregation-max"
            )
            record = orch.run_workflow(
                ExternalInputs(
                    operator_chains=chains,
                    topology_source=scenario,
                    solver_id=solver_id,
                )
            )
            return 201, {"run_id": record.run_id}, "application/x-yaml"

        if method == "GET" and len(parts) == 2 and parts[0] == "orchestrations":
            record = orch.get_record(parts[1])
            if record is None:
                raise ApiError("NotFound", f"unknown orchestration run {parts[1]!r}")
            return 200, record_doc(record), "application/x-yaml"

        if method == "POST" and parts == ["deployments"]:
            body = read_body()
            if not isinstance(body, dict):
                raise ApiError("BadRequest", "expected a deployment request document")
            if "token" in body:
                ticket = orch.jobs.status(str(body["token"]))
                if ticket.status is JobStatus.INFEASIBLE:
                    raise ApiError(
                        "Infeasible",
                        "placement job ended infeasible",
                        ticket.detail or "",
                    )
                if ticket.status is not JobStatus.SUCCEEDED:
                    raise ApiError(
                        "Conflict",
                        f"placement job is {ticket.status.value}, not Succeeded",
                        ticket.error or "",
                    )
                plan = orch.deployer.build_allocation_plan(ticket.result)
            elif "plan" in body:
                plan = plan_from_doc(body["plan"])
            else:
                raise ApiError("BadRequest", "deployment needs a token or a plan")
            record = orch.deployer.apply_plan(plan)
            return 201, deployment_doc(record), "application/x-yaml"

        if method == "DELETE" and len(parts) == 2 and parts[0] == "deployments":
            orch.deployer.release_deployment(parts[1])
            return 200, {"released": parts[1]}, "application/x-yaml"

        if (
            method == "GET"
            and len(parts) == 3
            and parts[0] == "deployments"
            and parts[2] == "timeline"
        ):
            lines = orch.deployer.timeline_lines(parts[1])
            return 200, lines.encode(), "text/plain"

        if method == "GET" and len(parts) == 2 and parts[0] == "deployments":
            record = orch.deployer.get_deployment(parts[1])
            return 200, deployment_doc(record), "application/x-yaml"

        if method == "GET" and parts == ["metrics"]:
            return 200, orch.deployer.cluster_metrics(), "application/x-yaml"

        raise ApiError("NotFound", f"no route for {method} {path}")

    def _placement_request(self, body: dict) -> PlacementRequest:
        orch = self.orchestrator
        if body.get("scenario") is not None:
            scenario = parse_scenario(dump_doc(body["scenario"]))
            return request_from_scenario(scenario, body.get("solver_id"))
        chains = _parse_chains(body.get("chains", []))
        if not orch.catalogs.has_topology():
            raise ApiError("Conflict", "no topology loaded; provide a scenario")
        snapshot = orch.catalogs.nfvi_snapshot()
        return PlacementRequest(
            topology=orch.catalogs.topology(),
            nfvi=list(snapshot.entries),
            chains=chains,
            split_profile=orch.catalogs.split_profile(),
            cnf_specs=orch.catalogs.cnf_specs(),
            solver_id=str(body.get("solver_id", "aggregation-max")),
            nfvi_seq=snapshot.seq,
        )


class ServiceClient:
    """YAML-over-HTTP client used by the CLI and the tests."""

    def __init__(self, base_url: str, timeout: float = 30.0) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def request(self, method: str, path: str, body: dict | None = None):
        data = dump_doc(body).encode() if body is not None else None
        response = requests.request(
            method,
            f"{self.base_url}{path}",
            data=data,
            headers={"Content-Type": "application/x-yaml"} if data else None,
            timeout=self.timeout,
        )
        content_type = response.headers.get("Content-Type", "")
        payload = (
            response.text
            if content_type.startswith("text/")
            else yaml.safe_load(response.text)
        )
        return response.status_code, payload

    def get(self, path: str):
        return self.request("GET", path)

    def put(self, path: str, body: dict):
        return self.request("PUT", path, body)

    def post(self, path: str, body: dict | None = None):
        return self.request("POST", path, body)

    def delete(self, path: str):
        return self.request("DELETE", path)


def scenario_to_doc(scenario: Scenario) -> dict:
    return scenario_doc(scenario)
