"""Dialog state machine and response generation.

The engine sleeps in Idle until it hears the wake phrase ("hey dona" or
"dona"), then handles commands turn by turn until it gets the quit command
and goes back to sleep. Every spoken line is rendered from a locale-aware
template table; hard-coded user-facing strings are not allowed, which makes
locale coverage mechanically checkable.

step() is deterministic in (session, intent, catalog): replaying the same
intents against the same starting session always reproduces the same final
session. Timestamps come from an injectable clock so tests can pin them.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from string import Formatter

from . import nlu
from .catalog import CourseCatalog, CourseCode, courses_for_program
from .planner import (
    AlreadyRegistered,
    Infeasible,
    PlanConstraints,
    StudentRecord,
    check_eligibility,
    plan_semesters,
)
from .transport import DEFAULT_THRESHOLD, Display, Rejected, UtteranceEvent, gate


class Phase(str, Enum):
    IDLE = "Idle"
    AWAITING_COMMAND = "AwaitingCommand"
    AWAITING_PROGRAM = "AwaitingProgram"
    AWAITING_COURSE_CHOICE = "AwaitingCourseChoice"
    AWAITING_PREREQ_CONFIRMATION = "AwaitingPrereqConfirmation"
    AWAITING_MORE_REQUESTS = "AwaitingMoreRequests"


@dataclass(frozen=True)
class PendingRegistration:
    code: CourseCode
    missing: frozenset[CourseCode]


@dataclass
class DialogState:
    phase: Phase = Phase.IDLE
    pending: PendingRegistration | None = None


@dataclass
class TranscriptTurn:
    speaker: str  # "user" | "agent"
    text: str
    timestamp: float
    latency_ms: float | None = None


@dataclass
class DialogSession:
    session_id: str
    student: StudentRecord
    state: DialogState = field(default_factory=DialogState)
    locale: str = "en"
    threshold: float = DEFAULT_THRESHOLD
    transcript: list[TranscriptTurn] = field(default_factory=list)


@dataclass(frozen=True)
class Registered:
    course: CourseCode
    term_id: str


@dataclass(frozen=True)
class ProgramSet:
    program_id: str


@dataclass
class AgentResponse:
    say: str
    displays: list[Display]
    state_after: DialogState
    effects: list
    template_key: str | None = None
    lang: str = "en"


# --- response templates ------------------------------------------------------


class MissingPlaceholder(Exception):
    def __init__(self, key: str, names: set[str]):
        self.key = key
        self.names = names
        super().__init__(f"template {key!r} is missing placeholders: {sorted(names)}")


@dataclass(frozen=True)
class ResponseTemplate:
    key: str
    locale: str
    pattern: str


class TemplateCatalog:
    """Table of (key, locale, pattern) rows. Every key must exist for the
    default locale "en"; other locales fall back to it."""

    def __init__(self, templates: list[ResponseTemplate]):
        self._patterns = {(t.key, t.locale): t.pattern for t in templates}
        self._keys = sorted({t.key for t in templates})
        for key in self._keys:
            if (key, "en") not in self._patterns:
                raise ValueError(f"template {key!r} has no 'en' pattern")

    @classmethod
    def from_file(cls, path: "str | Path | None" = None) -> "TemplateCatalog":
        if path is None:
            text = resources.files("dona").joinpath("data/templates.json").read_text("utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        doc = json.loads(text)
        rows = [ResponseTemplate(r["key"], r["locale"], r["pattern"]) for r in doc["templates"]]
        return cls(rows)

    def keys(self) -> list[str]:
        return list(self._keys)

    def locales(self) -> list[str]:
        return sorted({locale for _, locale in self._patterns})

    def placeholders(self, key: str, locale: str = "en") -> set[str]:
        pattern = self._patterns[(key, locale)]
        return {name for _, name, _, _ in Formatter().parse(pattern) if name}

    def render(self, key: str, placeholders: dict | None = None, locale: str = "en") -> str:
        placeholders = placeholders or {}
        pattern = self._patterns.get((key, locale))
        if pattern is None:
            pattern = self._patterns.get((key, "en"))
        if pattern is None:
            raise KeyError(f"unknown template key: {key!r}")
        needed = {name for _, name, _, _ in Formatter().parse(pattern) if name}
        missing = needed - set(placeholders)
        if missing:
            raise MissingPlaceholder(key, missing)
        return pattern.format(**placeholders)


_default_templates: TemplateCatalog | None = None


def default_templates() -> TemplateCatalog:
    global _default_templates
    if _default_templates is None:
        _default_templates = TemplateCatalog.from_file()
    return _default_templates


def render(template_key: str, placeholders: dict | None = None, locale: str = "en") -> str:
    """Render against the shipped template table (falls back to "en")."""
    return default_templates().render(template_key, placeholders, locale)


# --- the engine --------------------------------------------------------------


class DialogEngine:
    def __init__(
        self,
        catalog: CourseCatalog,
        templates: TemplateCatalog | None = None,
        rules: "nlu.RulesTable | None" = None,
        *,
        credit_cap: int = 9,
        horizon: "tuple[str, ...] | None" = None,
        clock=time.time,
    ):
        self.catalog = catalog
        self.templates = templates or default_templates()
        self.rules = rules or nlu.default_rules()
        self.credit_cap = credit_cap
        self.horizon = tuple(horizon) if horizon else tuple(t.id for t in catalog.terms_ordered())
        self.clock = clock

    # -- one FSM transition ----------------------------------------------------

    def step(self, session: DialogSession, intent: nlu.Intent, lang: str | None = None) -> AgentResponse:
        """Apply one intent to the session per the FSM table.

        Never raises for user input: every failure becomes a spoken apology
        with the state unchanged. Committed effects (Registered, ProgramSet)
        appear only on success paths.
        """
        lang = lang or session.locale
        kind = intent.kind
        phase = session.state.phase

        if phase is Phase.IDLE:
            if kind is nlu.IntentKind.WAKE:
                session.state = DialogState(Phase.AWAITING_COMMAND)
                return self._say(session, "greeting", lang)
            # asleep: nothing but the wake phrase changes state, and the
            # agent stays silent
            return self._silent(session)

        if kind is nlu.IntentKind.QUIT:
            session.state = DialogState(Phase.IDLE)
            return self._say(session, "farewell", lang)

        if kind is nlu.IntentKind.WAKE:
            session.state = DialogState(Phase.AWAITING_COMMAND)
            return self._say(session, "greeting", lang)

        if phase is Phase.AWAITING_PREREQ_CONFIRMATION:
            return self._confirmation_turn(session, intent, lang)

        if kind is nlu.IntentKind.REGISTER_COURSE:
            return self._register_turn(session, intent, lang)
        if kind is nlu.IntentKind.LIST_COURSES:
            return self._course_list_turn(session, lang)
        if kind is nlu.IntentKind.SET_PROGRAM:
            return self._set_program_turn(session, intent, lang)
        if kind is nlu.IntentKind.QUERY_PREREQUISITES:
            return self._prereq_query_turn(session, intent, lang)
        if kind is nlu.IntentKind.PLAN_DEGREE:
            return self._plan_turn(session, intent, lang)

        # Unknown, or a confirmation that leaked outside its context
        return self._say(session, "unknown", lang)

    # -- the full utterance pipeline --------------------------------------------

    def handle(
        self, session: DialogSession, event: UtteranceEvent, *, now: float | None = None
    ) -> tuple[nlu.Intent | None, AgentResponse]:
        """gate -> tokenize -> parse -> step, with transcript bookkeeping.

        Rejected events never reach the parser or mutate dialog state; they
        only add a reprompt to the transcript.
        """
        received = event.timestamp if event.timestamp is not None else self.clock()
        session.transcript.append(TranscriptTurn("user", event.text, received))

        lang = event.lang or session.locale
        outcome = gate(event, session.threshold)
        if isinstance(outcome, Rejected):
            intent = None
            response = self._say(session, "reprompt", lang)
        else:
            tokens = nlu.tokenize(outcome.text)
            intent = nlu.parse_intent(tokens, session.state, self.rules)
            response = self.step(session, intent, lang)

        answered = now if now is not None else self.clock()
        if response.say or response.displays:
            session.transcript.append(
                TranscriptTurn(
                    "agent",
                    response.say,
                    answered,
                    latency_ms=round((answered - received) * 1000.0, 3),
                )
            )
        return intent, response

    def run_loop(self, session: DialogSession, input_source, output_sink) -> DialogSession:
        """Take commands until the quit command or source exhaustion.

        Empty commands are skipped without a response; transport failures
        end the loop with the session state intact.
        """
        for event in input_source:
            if not event.text.strip():
                continue
            intent, response = self.handle(session, event)
            try:
                output_sink(response)
            except OSError:
                break
            if intent is not None and intent.kind is nlu.IntentKind.QUIT:
                break
        return session

    # -- per-intent turns --------------------------------------------------------

    def _register_turn(self, session, intent, lang) -> AgentResponse:
        if not intent.slots:
            return self._course_list_turn(session, lang)
        return self._attempt_registration(session, intent, lang)

    def _course_list_turn(self, session, lang) -> AgentResponse:
        if session.student.program_id is None:
            session.state = DialogState(Phase.AWAITING_PROGRAM)
            return self._say(session, "ask_program", lang)
        table = self._course_table(session.student.program_id)
        session.state = DialogState(Phase.AWAITING_COURSE_CHOICE)
        return self._say(session, "courses_available", lang, displays=[table])

    def _set_program_turn(self, session, intent, lang) -> AgentResponse:
        program = self._resolve_program(intent.slots)
        if program is None:
            return self._say(session, "unknown_program", lang)
        session.student.program_id = program.id
        table = self._course_table(program.id)
        session.state = DialogState(Phase.AWAITING_COURSE_CHOICE)
        return self._say(
            session, "courses_available", lang,
            displays=[table], effects=[ProgramSet(program.id)],
        )

    def _attempt_registration(self, session, intent, lang) -> AgentResponse:
        code, failure = self._resolve_course(intent.slots)
        if code is None:
            key, placeholders = failure
            return self._say(session, key, lang, placeholders=placeholders)
        try:
            eligibility = check_eligibility(self.catalog, session.student, code)
        except AlreadyRegistered:
            return self._say(
                session, "already_registered", lang, placeholders={"course": str(code)}
            )
        if eligibility.eligible:
            return self._commit_registration(session, code, lang)
        display = self._prereq_display(session, code)
        session.state = DialogState(
            Phase.AWAITING_PREREQ_CONFIRMATION,
            PendingRegistration(code, eligibility.missing),
        )
        return self._say(session, "prereq_question", lang, displays=[display])

    def _confirmation_turn(self, session, intent, lang) -> AgentResponse:
        pending = session.state.pending
        if intent.kind is nlu.IntentKind.CONFIRM_YES:
            session.student.self_certified |= set(pending.missing)
            session.state = DialogState(Phase.AWAITING_MORE_REQUESTS)
            return self._commit_registration(session, pending.code, lang)
        if intent.kind is nlu.IntentKind.CONFIRM_NO:
            session.state = DialogState(Phase.AWAITING_MORE_REQUESTS)
            constraints = PlanConstraints(self.credit_cap, self.horizon)
            try:
                plan = plan_semesters(self.catalog, session.student, {pending.code}, constraints)
            except Infeasible as exc:
                return self._say(
                    session, "plan_infeasible", lang,
                    placeholders={"reason": exc.reason.message or exc.reason.kind},
                )
            return self._say(
                session,
                "plan_offer",
                lang,
                placeholders={"course": str(pending.code)},
                displays=[Display("plan", plan.rows(self.catalog))],
            )
        # anything else re-asks the pending question, keeping the pending action
        return self._say(session, "confirm_reprompt", lang)

    def _prereq_query_turn(self, session, intent, lang) -> AgentResponse:
        code, failure = self._resolve_course(intent.slots)
        if code is None:
            key, placeholders = failure
            return self._say(session, key, lang, placeholders=placeholders)
        course = self.catalog.course(code)
        if not course.prerequisites:
            return self._say(session, "no_prereqs", lang, placeholders={"course": str(code)})
        return self._say(
            session,
            "prereq_list",
            lang,
            placeholders={"course": str(code)},
            displays=[self._prereq_display(session, code)],
        )

    def _plan_turn(self, session, intent, lang) -> AgentResponse:
        if intent.slots:
            code, failure = self._resolve_course(intent.slots)
            if code is None:
                key, placeholders = failure
                return self._say(session, key, lang, placeholders=placeholders)
            targets = {code}
        else:
            if session.student.program_id is None:
                session.state = DialogState(Phase.AWAITING_PROGRAM)
                return self._say(session, "ask_program", lang)
            done = session.student.completed | session.student.registered_codes()
            targets = {
                c.code
                for c in courses_for_program(self.catalog, session.student.program_id)
                if c.code not in done
            }
        if not targets:
            return self._say(session, "nothing_to_plan", lang)

        constraints = PlanConstraints(self.credit_cap, self.horizon)
        try:
            plan = plan_semesters(self.catalog, session.student, targets, constraints)
        except Infeasible as exc:
            return self._say(
                session, "plan_infeasible", lang,
                placeholders={"reason": exc.reason.message or exc.reason.kind},
            )
        except ValueError:
            sample = sorted(targets)[0]
            return self._say(
                session, "already_completed", lang, placeholders={"course": str(sample)}
            )
        session.state = DialogState(Phase.AWAITING_MORE_REQUESTS)
        return self._say(
            session,
            "plan_ready",
            lang,
            placeholders={"terms": plan.total_terms},
            displays=[Display("plan", plan.rows(self.catalog))],
        )

    # -- helpers -------------------------------------------------------------------

    def _commit_registration(self, session, code, lang) -> AgentResponse:
        """Commit to the earliest horizon term that offers the course and
        still has room under the credit cap."""
        course = self.catalog.course(code)
        for term_id in self.horizon:
            term = self.catalog.term(term_id)
            if term is None or code not in term.offered:
                continue
            used = session.student.credits_registered(self.catalog, term_id)
            if used + course.credits > self.credit_cap:
                continue
            session.student.registrations.append((term_id, code))
            session.state = DialogState(Phase.AWAITING_MORE_REQUESTS)
            return self._say(
                session,
                "registered",
                lang,
                placeholders={"course": str(code), "term": term_id},
                effects=[Registered(code, term_id)],
            )
        return self._say(session, "not_offered", lang, placeholders={"course": str(code)})

    def _course_table(self, program_id) -> Display:
        courses = courses_for_program(self.catalog, program_id)
        return Display(
            "course_table",
            [{"code": str(c.code), "title": c.title, "credits": c.credits} for c in courses],
        )

    def _resolve_course(self, slots):
        """Returns (code, None) on success or (None, (template_key, placeholders))."""
        if "course_code" in slots:
            course = self.catalog.course(slots["course_code"])
            if course is None:
                return None, ("unknown_course", {"query": slots["course_code"]})
            return course.code, None
        if "course_query" in slots:
            candidates = nlu.match_course(slots["course_query"], self.catalog)
            if not candidates:
                return None, ("unknown_course", {"query": slots["course_query"]})
            return candidates[0].code, None
        return None, ("which_course", {})

    def _resolve_program(self, slots):
        name = nlu._normalize(slots.get("program_name", ""))
        degree = nlu._normalize(slots.get("degree_level", ""))
        if not name and not degree:
            return None
        if name:
            by_id = self.catalog.program(name.replace(" ", "-"))
            if by_id is not None:
                return by_id
        best, best_score = None, 0.0
        for program in self.catalog.programs:
            norm_t = nlu._normalize(program.name)
            score = 0.0
            if name:
                if name == norm_t:
                    score = 1.0
                elif name in norm_t or norm_t in name:
                    score = 0.9
                else:
                    distance = nlu.edit_distance(name, norm_t)
                    similarity = 1.0 - distance / max(len(name), len(norm_t))
                    score = similarity if similarity >= nlu.FUZZY_THRESHOLD else 0.0
            elif degree and norm_t.startswith(degree):
                score = 0.7
            if degree and norm_t.startswith(degree):
                score += 0.05
            if score > best_score:
                best, best_score = program, score
        return best if best_score >= nlu.FUZZY_THRESHOLD else None

    def _prereq_display(self, session, code) -> Display:
        satisfied = session.student.completed | session.student.self_certified
        rows = []
        for pre in sorted(self.catalog.course(code).prerequisites):
            course = self.catalog.course(pre)
            rows.append(
                {
                    "code": str(pre),
                    "title": course.title if course else "",
                    "status": "satisfied" if pre in satisfied else "missing",
                }
            )
        return Display("prereq_list", rows)

    def _say(self, session, template_key, lang, *, placeholders=None, displays=None, effects=None) -> AgentResponse:
        text = self.templates.render(template_key, placeholders or {}, lang)
        return AgentResponse(
            say=text,
            displays=list(displays or []),
            state_after=session.state,
            effects=list(effects or []),
            template_key=template_key,
            lang=lang,
        )

    def _silent(self, session) -> AgentResponse:
        return AgentResponse(
            say="",
            displays=[],
            state_after=session.state,
            effects=[],
            template_key=None,
            lang=session.locale,
        )
