"""Shared fixtures-in-code for the test suite."""

import itertools

from dona.catalog import Course, CourseCatalog, CourseCode, Program, Term
from dona.dialog import DialogEngine, DialogSession
from dona.planner import StudentRecord
from dona.transport import UtteranceEvent

TERM_IDS = ("2030-SPRING", "2030-SUMMER", "2030-FALL", "2031-SPRING")

GOLDEN_SCRIPT = (
    "hey dona",
    "I want to register for a course.",
    "Masters in Computer Science.",
    "Register me for HCI (CSIT-535)",
    "Yes.",
)

GOLDEN_SAYS = (
    "How can I help you?",
    "What is your degree and major?",
    "These courses are available...",
    "Did you complete prerequisites?",
    "You are registered for CSIT-535 in 2026-FALL. Anything else I can help you with?",
)


def build_catalog(courses, terms=(), programs=()):
    """courses: (code, credits, prereq codes, program ids) tuples;
    terms: (term_id, offered codes) tuples; programs: (id, name, credits)."""
    return CourseCatalog(
        programs=[Program(pid, name, credits) for pid, name, credits in programs],
        courses=[
            Course(
                CourseCode.parse(code),
                title or f"Course {code}",
                credits,
                frozenset(pids),
                frozenset(CourseCode.parse(p) for p in prereqs),
            )
            for code, title, credits, prereqs, pids in (
                (c[0], None, c[1], c[2] if len(c) > 2 else (), c[3] if len(c) > 3 else ())
                for c in courses
            )
        ],
        terms=[
            Term(tid, frozenset(CourseCode.parse(c) for c in offered)) for tid, offered in terms
        ],
    )


def counter_clock():
    ticker = itertools.count()
    return lambda: float(next(ticker))


def make_engine(catalog, **kwargs) -> DialogEngine:
    kwargs.setdefault("clock", counter_clock())
    return DialogEngine(catalog, **kwargs)


def make_session(student_id="student", **kwargs) -> DialogSession:
    return DialogSession(session_id="test", student=StudentRecord(student_id), **kwargs)


def drive(engine, session, utterances):
    """Run a list of raw strings through the full pipeline; returns responses."""
    responses = []
    for text in utterances:
        _, response = engine.handle(session, UtteranceEvent(text))
        responses.append(response)
    return responses


def random_plan_instance(rng):
    """A random planning instance within the acceptance envelope:
    at most 8 courses, at most 4 terms, credits 1..4, cap 3..12."""
    n_courses = rng.randint(1, 8)
    n_terms = rng.randint(1, 4)
    cap = rng.randint(3, 12)
    codes = [f"CS-{100 + i}" for i in range(n_courses)]
    courses = {}
    for i, code in enumerate(codes):
        prereqs = {codes[j] for j in range(i) if rng.random() < 0.3}
        offered = sorted(t for t in range(n_terms) if rng.random() < 0.7)
        if not offered:
            offered = [rng.randrange(n_terms)]
        courses[code] = {
            "credits": rng.randint(1, 4),
            "prereqs": prereqs,
            "offered": offered,
        }
    return courses, n_terms, cap


def catalog_from_instance(courses, n_terms):
    """Materialize an oracle-style instance as a CourseCatalog."""
    term_ids = TERM_IDS[:n_terms]
    spec = [(code, info["credits"], sorted(info["prereqs"])) for code, info in courses.items()]
    terms = [
        (tid, [code for code, info in courses.items() if t in info["offered"]])
        for t, tid in enumerate(term_ids)
    ]
    return build_catalog(spec, terms), term_ids
