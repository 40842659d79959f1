"""HTTP JSON API over the dialog engine.

One catalog is loaded at startup and shared read-only. Sessions live in
memory behind per-session locks; every state-changing request is appended
to an event log (newline-delimited JSON) so the whole store can be rebuilt
by replay after a restart. No authentication: student_id is caller-asserted,
which is a deployment caveat, not an oversight.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .catalog import (
    UnknownCourse,
    UnknownProgram,
    courses_for_program,
    load_catalog,
)
from .dialog import DialogEngine, DialogSession, Registered, ProgramSet
from .planner import (
    Infeasible,
    PlanConstraints,
    StudentRecord,
    plan_semesters,
    prerequisite_closure,
)
from .transport import DEFAULT_THRESHOLD, UtteranceEvent


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


@dataclass
class ServiceConfig:
    catalog_path: Path
    data_dir: Path | None = None
    threshold: float = DEFAULT_THRESHOLD
    locale: str = "en"
    credit_cap: int = 9


class SessionStore:
    """In-memory sessions and student records with append-only durability.

    Updates to one session are serialized by a per-session lock; the log
    file is guarded by its own lock so interleaved sessions cannot corrupt
    each other's records.
    """

    def __init__(self, engine: DialogEngine, config: ServiceConfig, clock=time.time):
        self.engine = engine
        self.config = config
        self.clock = clock
        self.sessions: dict[str, DialogSession] = {}
        self.students: dict[str, StudentRecord] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._store_lock = threading.Lock()
        self._log_lock = threading.Lock()
        self._log_path = (config.data_dir / "events.ndjson") if config.data_dir else None
        if self._log_path is not None:
            self._log_path.parent.mkdir(parents=True, exist_ok=True)
            if self._log_path.exists():
                self._replay()

    def create_session(
        self,
        student_id: str,
        *,
        threshold: float | None = None,
        locale: str | None = None,
        session_id: str | None = None,
        log: bool = True,
    ) -> DialogSession:
        session_id = session_id or uuid.uuid4().hex
        threshold = self.config.threshold if threshold is None else threshold
        locale = locale or self.config.locale
        with self._store_lock:
            student = self.students.setdefault(student_id, StudentRecord(student_id))
            session = DialogSession(
                session_id=session_id,
                student=student,
                locale=locale,
                threshold=threshold,
            )
            self.sessions[session_id] = session
            self._locks[session_id] = threading.Lock()
        if log:
            self._append(
                {
                    "type": "session_created",
                    "session_id": session_id,
                    "student_id": student_id,
                    "threshold": threshold,
                    "locale": locale,
                }
            )
        return session

    def get(self, session_id: str) -> DialogSession | None:
        with self._store_lock:
            return self.sessions.get(session_id)

    def post_utterance(self, session_id: str, event: UtteranceEvent):
        session = self.get(session_id)
        if session is None:
            raise ApiError(404, "unknown_session", f"no session {session_id!r}")
        lock = self._locks[session_id]
        with lock:
            received = event.timestamp if event.timestamp is not None else self.clock()
            pinned = UtteranceEvent(event.text, event.confidence, event.lang, received)
            answered = self.clock()
            intent, response = self.engine.handle(session, pinned, now=answered)
            # logged under the session lock so per-session records can never
            # interleave out of turn order
            self._append(
                {
                    "type": "utterance",
                    "session_id": session_id,
                    "text": event.text,
                    "confidence": event.confidence,
                    "lang": event.lang,
                    "t_user": received,
                    "t_agent": answered,
                }
            )
        return intent, response

    def _append(self, record: dict):
        if self._log_path is None:
            return
        line = json.dumps(record, ensure_ascii=False, separators=(",", ":"))
        with self._log_lock:
            with self._log_path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def _replay(self):
        """Rebuild sessions and students by re-running the logged events
        through the (deterministic) engine with logged timestamps."""
        with self._log_path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                if record["type"] == "session_created":
                    self.create_session(
                        record["student_id"],
                        threshold=record.get("threshold"),
                        locale=record.get("locale"),
                        session_id=record["session_id"],
                        log=False,
                    )
                elif record["type"] == "utterance":
                    session = self.sessions.get(record["session_id"])
                    if session is None:
                        continue
                    event = UtteranceEvent(
                        record["text"],
                        record.get("confidence", 1.0),
                        record.get("lang", "en"),
                        record.get("t_user"),
                    )
                    self.engine.handle(session, event, now=record.get("t_agent"))


# --- request/response bodies --------------------------------------------------


class CreateSessionBody(BaseModel):
    student_id: str
    threshold: float | None = None
    locale: str | None = None


class MessageBody(BaseModel):
    text: str
    confidence: float = 1.0
    lang: str | None = None


class PlanBody(BaseModel):
    program: str | None = None
    completed: list[str] = []
    targets: list[str] = []
    credit_cap: int = 9
    horizon: list[str] | None = None


def _display_payload(display) -> dict:
    return {"kind": display.kind, "rows": display.rows}


def _effect_payload(effect) -> dict:
    if isinstance(effect, Registered):
        return {"kind": "registered", "course": str(effect.course), "term": effect.term_id}
    if isinstance(effect, ProgramSet):
        return {"kind": "program_set", "program": effect.program_id}
    return {"kind": "unknown"}


def _course_payload(course) -> dict:
    return {
        "code": str(course.code),
        "title": course.title,
        "credits": course.credits,
        "program_ids": sorted(course.program_ids),
        "prerequisites": [str(p) for p in sorted(course.prerequisites)],
    }


def create_app(config: ServiceConfig, *, clock=time.time) -> FastAPI:
    catalog = load_catalog(config.catalog_path)
    engine = DialogEngine(catalog, credit_cap=config.credit_cap, clock=clock)
    store = SessionStore(engine, config, clock=clock)

    app = FastAPI(title="dona", version="0.1.0")
    app.state.store = store
    app.state.catalog = catalog
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def _api_error(_: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={"code": "invalid_request", "message": str(exc.errors()[:1])},
        )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        if not body.student_id.strip():
            raise ApiError(400, "invalid_student_id", "student_id must be nonempty")
        if body.threshold is not None and not 0.0 <= body.threshold <= 1.0:
            raise ApiError(400, "invalid_threshold", "threshold must be within [0, 1]")
        session = store.create_session(
            body.student_id.strip(), threshold=body.threshold, locale=body.locale
        )
        return {
            "session_id": session.session_id,
            "student_id": session.student.student_id,
            "phase": session.state.phase.value,
        }

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = store.get(session_id)
        if session is None:
            raise ApiError(404, "unknown_session", f"no session {session_id!r}")
        return {
            "session_id": session.session_id,
            "student_id": session.student.student_id,
            "phase": session.state.phase.value,
            "locale": session.locale,
        }

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody):
        if not 0.0 <= body.confidence <= 1.0:
            raise ApiError(422, "invalid_confidence", "confidence must be within [0, 1]")
        session = store.get(session_id)
        if session is None:
            raise ApiError(404, "unknown_session", f"no session {session_id!r}")
        event = UtteranceEvent(
            text=body.text,
            confidence=body.confidence,
            lang=body.lang or session.locale,
        )
        intent, response = store.post_utterance(session_id, event)
        return {
            "say": response.say,
            "displays": [_display_payload(d) for d in response.displays],
            "phase_after": response.state_after.phase.value,
            "effects": [_effect_payload(e) for e in response.effects],
            "rejected": intent is None,
        }

    @app.get("/sessions/{session_id}/transcript")
    def get_transcript(session_id: str):
        session = store.get(session_id)
        if session is None:
            raise ApiError(404, "unknown_session", f"no session {session_id!r}")
        return {
            "session_id": session_id,
            "turns": [
                {
                    "speaker": turn.speaker,
                    "text": turn.text,
                    "timestamp": turn.timestamp,
                    "latency_ms": turn.latency_ms,
                }
                for turn in session.transcript
            ],
        }

    @app.post("/plan")
    def plan_endpoint(body: PlanBody):
        student = StudentRecord("planner")
        for raw in body.completed:
            course = catalog.course(raw)
            if course is None:
                raise ApiError(422, "unknown_course", f"completed course {raw!r} does not resolve")
            student.completed.add(course.code)
        targets = set(body.targets)
        if not targets and body.program:
            program = catalog.program(body.program)
            if program is None:
                raise ApiError(404, "unknown_program", f"no program {body.program!r}")
            targets = {
                str(c.code)
                for c in courses_for_program(catalog, program.id)
                if c.code not in student.completed
            }
        horizon = tuple(body.horizon) if body.horizon else tuple(
            t.id for t in catalog.terms_ordered()
        )
        constraints = PlanConstraints(body.credit_cap, horizon)
        try:
            plan = plan_semesters(catalog, student, targets, constraints)
        except UnknownCourse as exc:
            raise ApiError(422, "unknown_course", str(exc))
        except ValueError as exc:
            raise ApiError(422, "invalid_request", str(exc))
        except Infeasible as exc:
            return JSONResponse(
                status_code=409,
                content={
                    "code": "infeasible",
                    "message": str(exc),
                    "reason": {
                        "kind": exc.reason.kind,
                        "course": exc.reason.course,
                        "message": exc.reason.message,
                    },
                },
            )
        return {"total_terms": plan.total_terms, "terms": plan.rows(catalog)}

    @app.get("/catalog/programs")
    def list_programs():
        return [
            {"id": p.id, "name": p.name, "required_credits": p.required_credits}
            for p in catalog.programs
        ]

    @app.get("/catalog/courses")
    def list_courses(program: str | None = None):
        if program is None:
            courses = sorted(catalog.courses, key=lambda c: c.code.sort_key())
        else:
            try:
                courses = courses_for_program(catalog, program)
            except UnknownProgram:
                raise ApiError(404, "unknown_program", f"no program {program!r}")
        return [_course_payload(c) for c in courses]

    @app.get("/catalog/courses/{code}/prerequisites")
    def course_prerequisites(code: str):
        course = catalog.course(code)
        if course is None:
            raise ApiError(404, "unknown_course", f"no course {code!r}")
        transitive = prerequisite_closure(catalog, course.code)
        return {
            "code": str(course.code),
            "direct": [str(p) for p in sorted(course.prerequisites)],
            "transitive": [str(p) for p in sorted(transitive)],
        }

    return app
