"""University knowledge base: courses, programs, term offerings, prerequisites.

The catalog is loaded from a single JSON document (see ``load_catalog``),
validated as a whole, and treated as immutable afterwards. It is safe to
share one catalog across concurrent sessions.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

_CODE_RE = re.compile(r"^([A-Za-z]{2,5})[ -]?([0-9]{3,4})$")
_TERM_RE = re.compile(r"^([0-9]{4})-(SPRING|SUMMER|FALL)$")

_SEASON_ORDER = {"SPRING": 0, "SUMMER": 1, "FALL": 2}


class CatalogError(Exception):
    """Base class for catalog failures."""


class ParseError(CatalogError):
    """The catalog document is malformed. Carries a line/field locus."""

    def __init__(self, message: str, locus: str = ""):
        self.locus = locus
        super().__init__(f"{message} (at {locus})" if locus else message)


class ValidationError(CatalogError):
    """The document parsed but the catalog invariants do not hold."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        summary = "; ".join(f.detail for f in report.findings[:5])
        if len(report.findings) > 5:
            summary += f"; and {len(report.findings) - 5} more"
        super().__init__(f"invalid catalog: {summary}")


class UnknownProgram(CatalogError):
    def __init__(self, program_id: str):
        self.program_id = program_id
        super().__init__(f"unknown program: {program_id!r}")


class UnknownCourse(CatalogError):
    def __init__(self, code: str):
        self.code = code
        super().__init__(f"unknown course: {code!r}")


@dataclass(frozen=True)
class CourseCode:
    """A course identifier like CSIT-535: department letters plus a number."""

    dept: str
    number: str

    @classmethod
    def parse(cls, text: str) -> "CourseCode":
        m = _CODE_RE.match(text.strip())
        if not m:
            raise ValueError(f"not a course code: {text!r}")
        return cls(m.group(1).upper(), m.group(2))

    def __str__(self) -> str:
        return f"{self.dept}-{self.number}"

    def sort_key(self) -> tuple:
        return (self.dept, int(self.number), self.number)

    def __lt__(self, other: "CourseCode") -> bool:
        return self.sort_key() < other.sort_key()

    def __le__(self, other: "CourseCode") -> bool:
        return self.sort_key() <= other.sort_key()


@dataclass(frozen=True)
class Course:
    code: CourseCode
    title: str
    credits: int
    program_ids: frozenset[str] = frozenset()
    prerequisites: frozenset[CourseCode] = frozenset()


@dataclass(frozen=True)
class Program:
    id: str
    name: str
    required_credits: int


@dataclass(frozen=True)
class Term:
    """An academic term, identified as YYYY-SEASON and totally ordered."""

    id: str
    offered: frozenset[CourseCode] = frozenset()

    def __post_init__(self):
        if not _TERM_RE.match(self.id):
            raise ValueError(f"not a term id (want YYYY-SEASON): {self.id!r}")

    def sort_key(self) -> tuple[int, int]:
        year, season = self.id.split("-", 1)
        return (int(year), _SEASON_ORDER[season])


@dataclass
class CourseCatalog:
    programs: list[Program] = field(default_factory=list)
    courses: list[Course] = field(default_factory=list)
    terms: list[Term] = field(default_factory=list)

    def course(self, code: "CourseCode | str") -> Course | None:
        if isinstance(code, str):
            try:
                code = CourseCode.parse(code)
            except ValueError:
                return None
        for c in self.courses:
            if c.code == code:
                return c
        return None

    def program(self, program_id: str) -> Program | None:
        for p in self.programs:
            if p.id.upper() == program_id.upper():
                return p
        return None

    def term(self, term_id: str) -> Term | None:
        for t in self.terms:
            if t.id == term_id:
                return t
        return None

    def terms_ordered(self) -> list[Term]:
        return sorted(self.terms, key=Term.sort_key)


@dataclass(frozen=True)
class Finding:
    """One validation problem. Findings are data, not failures."""

    kind: str  # duplicate_code | duplicate_program | duplicate_term |
    #            unresolved_reference | cycle | bad_credits
    subject: str
    detail: str
    path: tuple[str, ...] = ()


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def cycles(self) -> list[Finding]:
        return [f for f in self.findings if f.kind == "cycle"]


def lookup_course(catalog: CourseCatalog, code: "CourseCode | str") -> Course | None:
    """Exact case-insensitive code lookup; None when absent."""
    return catalog.course(code)


def courses_for_program(catalog: CourseCatalog, program_id: str) -> list[Course]:
    """All courses attached to a program, ascending by code, duplicate-free."""
    if catalog.program(program_id) is None:
        raise UnknownProgram(program_id)
    wanted = catalog.program(program_id).id.upper()
    seen: set[CourseCode] = set()
    out = []
    for c in catalog.courses:
        if any(p.upper() == wanted for p in c.program_ids) and c.code not in seen:
            seen.add(c.code)
            out.append(c)
    out.sort(key=lambda c: c.code.sort_key())
    return out


def validate_catalog(catalog: CourseCatalog) -> ValidationReport:
    """Check every catalog invariant, collecting all findings rather than
    failing on the first one."""
    findings: list[Finding] = []

    seen_codes: set[str] = set()
    for c in catalog.courses:
        key = str(c.code)
        if key in seen_codes:
            findings.append(Finding("duplicate_code", key, f"duplicate course code {key}"))
        seen_codes.add(key)

    seen_programs: set[str] = set()
    for p in catalog.programs:
        key = p.id.upper()
        if key in seen_programs:
            findings.append(Finding("duplicate_program", p.id, f"duplicate program id {p.id}"))
        seen_programs.add(key)

    seen_terms: set[str] = set()
    for t in catalog.terms:
        if t.id in seen_terms:
            findings.append(Finding("duplicate_term", t.id, f"duplicate term id {t.id}"))
        seen_terms.add(t.id)

    for c in catalog.courses:
        if c.credits < 1:
            findings.append(
                Finding("bad_credits", str(c.code), f"{c.code} has non-positive credits {c.credits}")
            )
        for pre in c.prerequisites:
            if str(pre) not in seen_codes:
                findings.append(
                    Finding(
                        "unresolved_reference",
                        str(pre),
                        f"{c.code} requires unknown course {pre}",
                    )
                )
        for pid in c.program_ids:
            if pid.upper() not in seen_programs:
                findings.append(
                    Finding(
                        "unresolved_reference",
                        pid,
                        f"{c.code} belongs to unknown program {pid}",
                    )
                )

    for t in catalog.terms:
        for code in t.offered:
            if str(code) not in seen_codes:
                findings.append(
                    Finding(
                        "unresolved_reference",
                        str(code),
                        f"term {t.id} offers unknown course {code}",
                    )
                )

    findings.extend(_cycle_findings(catalog))
    return ValidationReport(findings)


def _cycle_findings(catalog: CourseCatalog) -> list[Finding]:
    """Iterative three-color DFS over the prerequisite relation. Every back
    edge yields one finding whose path spells out the full cycle."""
    codes = sorted({str(c.code) for c in catalog.courses})
    prereqs: dict[str, list[str]] = {k: [] for k in codes}
    for c in catalog.courses:
        prereqs[str(c.code)] = sorted(
            str(p) for p in c.prerequisites if str(p) in prereqs
        )

    WHITE, GRAY, BLACK = 0, 1, 2
    color = {k: WHITE for k in codes}
    findings: list[Finding] = []
    for start in codes:
        if color[start] != WHITE:
            continue
        color[start] = GRAY
        path = [start]
        stack = [(start, iter(prereqs[start]))]
        while stack:
            node, neighbors = stack[-1]
            nxt = next(neighbors, None)
            if nxt is None:
                color[node] = BLACK
                stack.pop()
                path.pop()
            elif color[nxt] == GRAY:
                cycle = tuple(path[path.index(nxt):] + [nxt])
                findings.append(
                    Finding(
                        "cycle",
                        nxt,
                        "prerequisite cycle: " + " -> ".join(cycle),
                        path=cycle,
                    )
                )
            elif color[nxt] == WHITE:
                color[nxt] = GRAY
                path.append(nxt)
                stack.append((nxt, iter(prereqs[nxt])))
    return findings


# --- file format -----------------------------------------------------------
#
# One top-level object with keys "programs", "courses", "terms". Unknown keys
# are rejected everywhere. Encoding is UTF-8.

_TOP_KEYS = {"programs", "courses", "terms"}
_PROGRAM_KEYS = {"id", "name", "required_credits"}
_COURSE_KEYS = {"code", "title", "credits", "program_ids", "prerequisites"}
_TERM_KEYS = {"id", "offered"}


def _require(cond: bool, message: str, locus: str):
    if not cond:
        raise ParseError(message, locus)


def _check_keys(obj: dict, allowed: set[str], required: set[str], locus: str):
    _require(isinstance(obj, dict), "expected an object", locus)
    for k in obj:
        _require(k in allowed, f"unknown key {k!r}", locus)
    for k in required:
        _require(k in obj, f"missing key {k!r}", locus)


def _parse_code(raw, locus: str) -> CourseCode:
    _require(isinstance(raw, str), "course code must be a string", locus)
    try:
        return CourseCode.parse(raw)
    except ValueError as exc:
        raise ParseError(str(exc), locus) from exc


def _parse_code_list(raw, locus: str) -> frozenset[CourseCode]:
    _require(isinstance(raw, list), "expected a list of course codes", locus)
    return frozenset(_parse_code(item, f"{locus}[{i}]") for i, item in enumerate(raw))


def catalog_from_dict(doc: dict) -> CourseCatalog:
    """Strictly parse an already-decoded catalog document (no validation)."""
    _check_keys(doc, _TOP_KEYS, _TOP_KEYS, "top level")

    programs = []
    for i, raw in enumerate(_as_list(doc["programs"], "programs")):
        locus = f"programs[{i}]"
        _check_keys(raw, _PROGRAM_KEYS, _PROGRAM_KEYS, locus)
        _require(isinstance(raw["id"], str) and raw["id"], "program id must be a nonempty string", locus)
        _require(isinstance(raw["name"], str), "program name must be a string", locus)
        _require(
            isinstance(raw["required_credits"], int) and not isinstance(raw["required_credits"], bool)
            and raw["required_credits"] >= 1,
            "required_credits must be a positive integer",
            locus,
        )
        programs.append(Program(raw["id"], raw["name"], raw["required_credits"]))

    courses = []
    for i, raw in enumerate(_as_list(doc["courses"], "courses")):
        locus = f"courses[{i}]"
        _check_keys(raw, _COURSE_KEYS, {"code", "title", "credits"}, locus)
        code = _parse_code(raw["code"], f"{locus}.code")
        _require(isinstance(raw["title"], str), "title must be a string", f"{locus}.title")
        _require(
            isinstance(raw["credits"], int) and not isinstance(raw["credits"], bool),
            "credits must be an integer",
            f"{locus}.credits",
        )
        program_ids = raw.get("program_ids", [])
        _require(
            isinstance(program_ids, list) and all(isinstance(p, str) for p in program_ids),
            "program_ids must be a list of strings",
            f"{locus}.program_ids",
        )
        prerequisites = _parse_code_list(raw.get("prerequisites", []), f"{locus}.prerequisites")
        courses.append(
            Course(code, raw["title"], raw["credits"], frozenset(program_ids), prerequisites)
        )

    terms = []
    for i, raw in enumerate(_as_list(doc["terms"], "terms")):
        locus = f"terms[{i}]"
        _check_keys(raw, _TERM_KEYS, {"id"}, locus)
        _require(isinstance(raw["id"], str), "term id must be a string", f"{locus}.id")
        offered = _parse_code_list(raw.get("offered", []), f"{locus}.offered")
        try:
            terms.append(Term(raw["id"], offered))
        except ValueError as exc:
            raise ParseError(str(exc), f"{locus}.id") from exc

    return CourseCatalog(programs, courses, terms)


def _as_list(raw, locus: str) -> list:
    _require(isinstance(raw, list), "expected a list", locus)
    return raw


def read_catalog_file(path: "str | Path") -> CourseCatalog:
    """Parse a catalog file without enforcing the semantic invariants."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ParseError(f"no such file: {path}") from exc
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid UTF-8: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, locus=f"line {exc.lineno}, column {exc.colno}") from exc
    return catalog_from_dict(doc)


def load_catalog(path: "str | Path") -> CourseCatalog:
    """Parse and validate a catalog file.

    Raises ParseError for malformed documents and ValidationError when the
    parsed catalog breaks an invariant.
    """
    catalog = read_catalog_file(path)
    report = validate_catalog(catalog)
    if not report.ok:
        raise ValidationError(report)
    return catalog


def catalog_to_dict(catalog: CourseCatalog) -> dict:
    """Inverse of catalog_from_dict, with deterministic ordering of sets."""
    return {
        "programs": [
            {"id": p.id, "name": p.name, "required_credits": p.required_credits}
            for p in catalog.programs
        ],
        "courses": [
            {
                "code": str(c.code),
                "title": c.title,
                "credits": c.credits,
                "program_ids": sorted(c.program_ids),
                "prerequisites": [str(p) for p in sorted(c.prerequisites)],
            }
            for c in catalog.courses
        ],
        "terms": [
            {"id": t.id, "offered": [str(c) for c in sorted(t.offered)]}
            for t in catalog.terms
        ],
    }


def save_catalog(catalog: CourseCatalog, path: "str | Path"):
    Path(path).write_text(
        json.dumps(catalog_to_dict(catalog), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
