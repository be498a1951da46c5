"""HTTP/JSON host for negotiation sessions (paths versioned under /v1).

One process serves many sessions. Requests that mutate a session are
serialized by that session's lock; different sessions proceed in
parallel. Every accepted mutation is fsynced to the event log before the
response goes out. Error mapping onto the session state machine's typed
errors: 403 bad token/role, 404 unknown session or stakeholder, 409
phase/state violations (including submissions to a closed phase), 422
inconsistent matrices (body carries the consistency report), 400
malformed domain payloads.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import secrets
import sys
import threading
import time
from typing import Any

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from ..ahp import ComparisonMatrix
from ..attributes import QualityAttribute
from ..canonical import canonical_json
from ..errors import (
    AggregationError,
    DelegationError,
    InvalidMatrixError,
    MatrixRejectedError,
    PhaseError,
    SessionError,
    UnknownStakeholderError,
    UtilityError,
)
from ..session import (
    Abstention,
    AbstentionKind,
    DelphiSession,
    Phase,
    RationaleKind,
    SessionConfig,
)
from ..utility import export_utility
from .config import ServiceConfig, load_config
from .store import SNAPSHOT_EVERY, SessionStore

log = logging.getLogger("ahpdelphi.service")

FACILITATOR = "facilitator"
STAKEHOLDER = "stakeholder"


class SessionRuntime:
    """One hosted session: state machine, lock, tokens, persistence meta."""

    def __init__(self, session: DelphiSession, event_count: int = 0,
                 read_only: bool = False, valid_bytes: int = 0) -> None:
        self.session = session
        self.lock = threading.RLock()
        self.tokens: dict[str, dict] = {}  # token -> {role, stakeholder_id}
        self.event_count = event_count
        self.read_only = read_only
        self.valid_bytes = valid_bytes


class ApiError(Exception):
    def __init__(self, status: int, detail: str, body: dict | None = None):
        self.status = status
        self.detail = detail
        self.body = body


# -- request models ----------------------------------------------------------


class AttributeModel(BaseModel):
    id: str
    name: str
    description: str = ""
    metric_unit: str = ""
    direction: str = "higher_is_better"


class ParticipantModel(BaseModel):
    stakeholder_id: str
    weight: float = 1.0


class CreateSessionModel(BaseModel):
    attributes: list[AttributeModel]
    participants: list[ParticipantModel]
    config: dict[str, Any] | None = None
    session_id: str | None = None


class InviteModel(BaseModel):
    stakeholder_id: str


class AbstentionModel(BaseModel):
    attribute_id: str
    kind: str = "dont_know"


class SubmissionModel(BaseModel):
    matrix: dict[str, Any]
    abstentions: list[AbstentionModel] = Field(default_factory=list)


class RationaleModel(BaseModel):
    kind: str
    body: str
    prompt: str = ""
    attribute_ids: list[str] = Field(default_factory=list)
    proposed_attribute: AttributeModel | None = None


class DelegationModel(BaseModel):
    delegate_id: str


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    store = SessionStore(config.data_dir)
    registry: dict[str, SessionRuntime] = {}
    registry_lock = threading.Lock()

    for session_id, recovered in store.recover_all().items():
        runtime = SessionRuntime(
            recovered.session,
            event_count=recovered.event_count,
            read_only=recovered.read_only,
            valid_bytes=recovered.valid_bytes,
        )
        runtime.tokens = store.load_tokens(session_id)
        registry[session_id] = runtime

    app = FastAPI(title="ahpdelphi", version="1")

    # -- plumbing -------------------------------------------------------

    @app.middleware("http")
    async def request_logging(request: Request, call_next):
        started = time.monotonic()
        response = await call_next(request)
        log.info(
            "%s",
            json.dumps(
                {
                    "at": time.time(),
                    "method": request.method,
                    "path": request.url.path,
                    "status": response.status_code,
                    "ms": round((time.monotonic() - started) * 1000, 2),
                },
                separators=(",", ":"),
            ),
        )
        return response

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        body = {"detail": exc.detail}
        if exc.body:
            body.update(exc.body)
        return JSONResponse(status_code=exc.status, content=body)

    def runtime_of(session_id: str) -> SessionRuntime:
        runtime = registry.get(session_id)
        if runtime is None:
            raise ApiError(404, f"unknown session: {session_id}")
        return runtime

    def authenticate(request: Request, session_id: str) -> tuple[SessionRuntime, dict]:
        runtime = runtime_of(session_id)
        header = request.headers.get("authorization", "")
        token = header.removeprefix("Bearer ").strip()
        grant = runtime.tokens.get(token)
        if not token or grant is None:
            raise ApiError(403, "missing or invalid token")
        return runtime, grant

    def require_role(grant: dict, role: str) -> None:
        if grant["role"] != role:
            raise ApiError(403, f"this endpoint requires the {role} role")

    def persist(runtime: SessionRuntime) -> None:
        """Write-ahead: fsync new events (and periodic snapshots) before
        the response leaves the handler."""
        events = runtime.session.take_new_events()
        if not events:
            return
        try:
            store.append_events(runtime.session.session_id, events)
        except OSError:
            runtime.read_only = True
            raise ApiError(500, "event log write failed; session is read-only")
        before = runtime.event_count
        runtime.event_count += len(events)
        if before // SNAPSHOT_EVERY != runtime.event_count // SNAPSHOT_EVERY:
            store.write_snapshot(runtime.session)

    def reject_read_only(runtime: SessionRuntime) -> None:
        if runtime.read_only:
            raise ApiError(
                409,
                "session is read-only after log-tail recovery; "
                "a facilitator must repair it first",
            )

    def domain(callable_, *args, **kwargs):
        """Run a session operation, translating typed errors to HTTP."""
        try:
            return callable_(*args, **kwargs)
        except MatrixRejectedError as exc:
            raise ApiError(
                422,
                "matrix rejected: consistency ratio exceeds the limit",
                {"consistency": exc.report.to_dict()},
            ) from exc
        except UnknownStakeholderError as exc:
            raise ApiError(404, str(exc)) from exc
        except (PhaseError, DelegationError, AggregationError, SessionError) as exc:
            raise ApiError(409, str(exc)) from exc
        except (InvalidMatrixError, UtilityError, ValueError) as exc:
            raise ApiError(400, str(exc)) from exc

    def pseudonymize_events(session: DelphiSession, events: list[dict]) -> list[dict]:
        """Audit view for stakeholders: identities become pseudonyms."""
        alias = {
            sid: p.pseudonym for sid, p in session.participants.items()
        }
        sanitized = []
        for event in events:
            event = copy.deepcopy(event)
            payload = event.get("payload", {})
            for key in ("stakeholder_id", "delegator_id", "delegate_id"):
                if key in payload:
                    payload[key] = alias.get(payload[key], payload[key])
            if "participants" in payload:
                payload["participants"] = [
                    {"pseudonym": alias[p["stakeholder_id"]], "weight": p["weight"]}
                    for p in payload["participants"]
                ]
            sanitized.append(event)
        return sanitized

    # -- endpoints ------------------------------------------------------

    @app.get("/v1/healthz")
    def healthz():
        return {"status": "ok", "sessions": len(registry)}

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: CreateSessionModel):
        session_id = body.session_id or secrets.token_urlsafe(8)
        with registry_lock:
            if session_id in registry:
                raise ApiError(409, f"session {session_id} already exists")
            attributes = [
                QualityAttribute(
                    id=a.id,
                    name=a.name,
                    description=a.description,
                    metric_unit=a.metric_unit,
                    direction=a.direction,
                )
                for a in body.attributes
            ]
            session_config = (
                SessionConfig.from_dict(body.config) if body.config else SessionConfig()
            )
            session = domain(
                DelphiSession.create,
                session_id,
                attributes,
                [(p.stakeholder_id, p.weight) for p in body.participants],
                session_config,
                at=time.time(),
                pseudonym_seed=secrets.randbits(63),
            )
            runtime = SessionRuntime(session)
            facilitator_token = secrets.token_urlsafe(32)
            runtime.tokens[facilitator_token] = {"role": FACILITATOR, "stakeholder_id": None}
            registry[session_id] = runtime
            persist(runtime)
            store.save_tokens(session_id, runtime.tokens)
        return {"session_id": session_id, "facilitator_token": facilitator_token}

    @app.post("/v1/sessions/{session_id}/invitations")
    def invite(session_id: str, body: InviteModel, request: Request):
        runtime, grant = authenticate(request, session_id)
        require_role(grant, FACILITATOR)
        with runtime.lock:
            domain(runtime.session.participant, body.stakeholder_id)
            token = secrets.token_urlsafe(32)
            runtime.tokens[token] = {
                "role": STAKEHOLDER,
                "stakeholder_id": body.stakeholder_id,
            }
            store.save_tokens(session_id, runtime.tokens)
        return {"stakeholder_id": body.stakeholder_id, "token": token}

    @app.get("/v1/sessions/{session_id}")
    def session_status(session_id: str, request: Request):
        runtime, grant = authenticate(request, session_id)
        session = runtime.session
        with runtime.lock:
            status = {
                "session_id": session.session_id,
                "phase": session.phase.value,
                "attribute_count": len(session.attributes),
                "participant_count": len(session.participants),
                "read_only": runtime.read_only,
                "closed": session.phase is Phase.CLOSED,
            }
            if grant["role"] == STAKEHOLDER:
                sid = grant["stakeholder_id"]
                participant = session.participants.get(sid)
                status["pseudonym"] = participant.pseudonym if participant else None
                status["delegating"] = session.is_delegating(sid)
                status["submitted_this_phase"] = (
                    session.phase in session.submissions
                    and sid in session.submissions.get(session.phase, {})
                )
            else:
                status["participants"] = [
                    {
                        "stakeholder_id": p.stakeholder_id,
                        "pseudonym": p.pseudonym,
                        "weight": p.weight,
                        "delegating": session.is_delegating(p.stakeholder_id),
                        "submitted_this_phase": p.stakeholder_id
                        in session.submissions.get(session.phase, {}),
                    }
                    for p in session.participants.values()
                ]
                status["prompts"] = list(session.config.prompts)
        return status

    @app.get("/v1/sessions/{session_id}/attributes")
    def attributes(session_id: str, request: Request):
        runtime, _ = authenticate(request, session_id)
        return {"attributes": [a.to_dict() for a in runtime.session.attributes]}

    @app.post("/v1/sessions/{session_id}/submissions")
    def submit(session_id: str, body: SubmissionModel, request: Request):
        runtime, grant = authenticate(request, session_id)
        require_role(grant, STAKEHOLDER)
        with runtime.lock:
            reject_read_only(runtime)
            matrix = domain(ComparisonMatrix.from_dict, body.matrix)
            abstentions = [
                Abstention(a.attribute_id, AbstentionKind(a.kind))
                for a in body.abstentions
            ]
            submission = domain(
                runtime.session.submit_matrix,
                grant["stakeholder_id"],
                matrix,
                abstentions,
                at=time.time(),
            )
            persist(runtime)
            return {
                "accepted": True,
                "round": submission.round.value,
                "priorities": submission.derived_priorities.to_dict(),
                "consistency": submission.consistency_report.to_dict(),
            }

    @app.get("/v1/sessions/{session_id}/submissions/mine")
    def my_submission(session_id: str, request: Request):
        runtime, grant = authenticate(request, session_id)
        require_role(grant, STAKEHOLDER)
        with runtime.lock:
            submission = runtime.session.latest_submission(grant["stakeholder_id"])
            if submission is None:
                return {"submitted": False}
            return {
                "submitted": True,
                "round": submission.round.value,
                "priorities": submission.derived_priorities.to_dict(),
                "consistency": submission.consistency_report.to_dict(),
                "abstentions": [a.to_dict() for a in submission.abstentions],
            }

    @app.post("/v1/sessions/{session_id}/rationales")
    def post_rationale(session_id: str, body: RationaleModel, request: Request):
        runtime, grant = authenticate(request, session_id)
        require_role(grant, STAKEHOLDER)
        with runtime.lock:
            reject_read_only(runtime)
            proposed = None
            if body.proposed_attribute is not None:
                a = body.proposed_attribute
                proposed = QualityAttribute(
                    id=a.id, name=a.name, description=a.description,
                    metric_unit=a.metric_unit, direction=a.direction,
                )
            try:
                kind = RationaleKind(body.kind)
            except ValueError:
                raise ApiError(400, f"unknown rationale kind: {body.kind!r}")
            rationale = domain(
                runtime.session.post_rationale,
                grant["stakeholder_id"],
                kind,
                body.body,
                prompt=body.prompt,
                attribute_ids=tuple(body.attribute_ids),
                proposed_attribute=proposed,
                at=time.time(),
            )
            persist(runtime)
            return {"acknowledged": True, "round": rationale.round.value}

    @app.post("/v1/sessions/{session_id}/delegation")
    def delegate(session_id: str, body: DelegationModel, request: Request):
        runtime, grant = authenticate(request, session_id)
        require_role(grant, STAKEHOLDER)
        with runtime.lock:
            reject_read_only(runtime)
            domain(
                runtime.session.delegate,
                grant["stakeholder_id"],
                body.delegate_id,
                at=time.time(),
            )
            persist(runtime)
        return {"delegated_to": body.delegate_id}

    @app.delete("/v1/sessions/{session_id}/delegation")
    def revoke(session_id: str, request: Request):
        runtime, grant = authenticate(request, session_id)
        require_role(grant, STAKEHOLDER)
        with runtime.lock:
            reject_read_only(runtime)
            domain(
                runtime.session.revoke_delegation,
                grant["stakeholder_id"],
                at=time.time(),
            )
            persist(runtime)
        return {"revoked": True}

    @app.get("/v1/sessions/{session_id}/feedback")
    def feedback(session_id: str, request: Request):
        runtime, grant = authenticate(request, session_id)
        require_role(grant, STAKEHOLDER)
        with runtime.lock:
            return domain(runtime.session.feedback_bundle, grant["stakeholder_id"])

    @app.post("/v1/sessions/{session_id}/gate")
    def check_gate(session_id: str, request: Request):
        runtime, grant = authenticate(request, session_id)
        require_role(grant, FACILITATOR)
        with runtime.lock:
            reject_read_only(runtime)
            report = domain(runtime.session.check_agreement_gate, at=time.time())
            persist(runtime)
            return {"phase": runtime.session.phase.value, "concordance": report.to_dict()}

    @app.get("/v1/sessions/{session_id}/concordance")
    def concordance_status(session_id: str, request: Request):
        runtime, _ = authenticate(request, session_id)
        with runtime.lock:
            report = domain(runtime.session.current_concordance)
            return {"phase": runtime.session.phase.value, "concordance": report.to_dict()}

    @app.post("/v1/sessions/{session_id}/advance")
    def advance(session_id: str, request: Request):
        runtime, grant = authenticate(request, session_id)
        require_role(grant, FACILITATOR)
        with runtime.lock:
            reject_read_only(runtime)
            phase = domain(runtime.session.advance_round, at=time.time())
            persist(runtime)
            return {"phase": phase.value}

    @app.get("/v1/sessions/{session_id}/result")
    def result(session_id: str, request: Request, format: str = "canonical_json"):
        runtime, _ = authenticate(request, session_id)
        with runtime.lock:
            session = runtime.session
            if session.phase is not Phase.CLOSED or session.result is None:
                raise ApiError(409, "session is not closed yet; no result available")
            if format == "human_readable_expression":
                return PlainTextResponse(
                    export_utility(session.result.utility, "human_readable_expression")
                )
            if format != "canonical_json":
                raise ApiError(400, f"unknown result format: {format!r}")
            document = {
                "priorities": session.result.priorities.to_dict(),
                "utility": json.loads(export_utility(session.result.utility)),
                "dissents": [r.to_dict() for r in session.result.dissents],
            }
            return Response(
                content=canonical_json(document), media_type="application/json"
            )

    @app.get("/v1/sessions/{session_id}/suggestions")
    def suggestions(session_id: str, request: Request):
        runtime, grant = authenticate(request, session_id)
        require_role(grant, FACILITATOR)
        with runtime.lock:
            return {
                "suggestions": [r.to_dict() for r in runtime.session.suggestion_queue()]
            }

    @app.get("/v1/sessions/{session_id}/events")
    def audit_log(session_id: str, request: Request):
        runtime, grant = authenticate(request, session_id)
        with runtime.lock:
            events = store.read_events(session_id)
            if grant["role"] == FACILITATOR:
                return {"events": events}
            return {"events": pseudonymize_events(runtime.session, events)}

    @app.post("/v1/sessions/{session_id}/reopen")
    def reopen(session_id: str, request: Request):
        runtime, grant = authenticate(request, session_id)
        require_role(grant, FACILITATOR)
        with runtime.lock:
            if not runtime.read_only:
                return {"read_only": False}
            store.repair_log_tail(session_id, runtime.valid_bytes)
            runtime.read_only = False
        return {"read_only": False}

    if config.static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount(
            "/app", StaticFiles(directory=config.static_dir, html=True), name="webui"
        )

    return app


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="ahpdelphi-serve")
    parser.add_argument("--config", default=None, help="path to a JSON config file")
    args = parser.parse_args(argv)
    config = load_config(args.config)

    logging.basicConfig(
        stream=sys.stdout, level=logging.INFO, format="%(message)s"
    )

    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port, log_config=None)
    return 0


if __name__ == "__main__":
    sys.exit(main())
