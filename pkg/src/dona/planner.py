"""Task-dependency engine: prerequisite closure, eligibility, term planning.

plan_semesters runs an exact branch-and-bound search over course-to-term
assignments: it minimizes the number of nonempty terms and, among optimal
plans, returns the lexicographically earliest assignment (courses considered
in ascending code order, each placed in the earliest feasible term). All
functions here are pure over immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .catalog import CourseCatalog, CourseCode, UnknownCourse


@dataclass
class StudentRecord:
    student_id: str
    program_id: str | None = None
    completed: set[CourseCode] = field(default_factory=set)
    self_certified: set[CourseCode] = field(default_factory=set)
    registrations: list[tuple[str, CourseCode]] = field(default_factory=list)

    def registered_codes(self) -> set[CourseCode]:
        return {code for _, code in self.registrations}

    def credits_registered(self, catalog: CourseCatalog, term_id: str) -> int:
        total = 0
        for tid, code in self.registrations:
            if tid == term_id:
                course = catalog.course(code)
                total += course.credits if course else 0
        return total


@dataclass(frozen=True)
class PlanConstraints:
    credit_cap: int
    horizon: tuple[str, ...]


@dataclass
class SemesterPlan:
    """Assignment of courses to horizon terms. Only nonempty terms appear in
    the mapping, which is keyed in horizon order."""

    assignments: dict[str, frozenset[CourseCode]]
    total_terms: int

    def rows(self, catalog: CourseCatalog) -> list[dict]:
        out = []
        for term_id, codes in self.assignments.items():
            ordered = sorted(codes)
            credits = sum(catalog.course(c).credits for c in ordered)
            out.append(
                {"term": term_id, "courses": [str(c) for c in ordered], "credits": credits}
            )
        return out


@dataclass(frozen=True)
class Eligibility:
    missing: frozenset[CourseCode]

    @property
    def eligible(self) -> bool:
        return not self.missing


class AlreadyRegistered(Exception):
    def __init__(self, code: CourseCode):
        self.code = code
        super().__init__(f"already registered for {code}")


@dataclass(frozen=True)
class InfeasibleReason:
    kind: str  # not_offered | exceeds_credit_cap | horizon_exhausted
    course: str | None = None
    message: str = ""


class Infeasible(Exception):
    def __init__(self, reason: InfeasibleReason):
        self.reason = reason
        super().__init__(reason.message or reason.kind)


def prerequisite_closure(catalog: CourseCatalog, code: "CourseCode | str") -> set[CourseCode]:
    """Transitive closure of prerequisites, excluding the course itself."""
    start = _resolve(catalog, code)
    closure: set[CourseCode] = set()
    frontier = list(catalog.course(start).prerequisites)
    while frontier:
        current = frontier.pop()
        if current in closure:
            continue
        course = catalog.course(current)
        if course is None:
            raise UnknownCourse(str(current))
        closure.add(current)
        frontier.extend(course.prerequisites)
    closure.discard(start)
    return closure


def check_eligibility(
    catalog: CourseCatalog, student: StudentRecord, code: "CourseCode | str"
) -> Eligibility:
    """Direct prerequisites not yet completed or self-certified.

    Raises AlreadyRegistered when the course already appears among the
    student's registrations.
    """
    resolved = _resolve(catalog, code)
    if resolved in student.registered_codes():
        raise AlreadyRegistered(resolved)
    satisfied = student.completed | student.self_certified
    missing = frozenset(
        p for p in catalog.course(resolved).prerequisites if p not in satisfied
    )
    return Eligibility(missing)


def plan_semesters(
    catalog: CourseCatalog,
    student: StudentRecord,
    targets: "set[CourseCode] | set[str]",
    constraints: PlanConstraints,
) -> SemesterPlan:
    """Optimal assignment of the targets plus their unmet prerequisite
    closure to horizon terms.

    Minimizes the count of nonempty terms; ties resolve to the earliest
    lexicographic assignment. Raises Infeasible with a structured reason
    when no assignment exists.
    """
    needed, satisfied = _needed_courses(catalog, student, targets)
    if not needed:
        return SemesterPlan({}, 0)

    terms = _resolve_horizon(catalog, constraints)
    cap = constraints.credit_cap
    courses = sorted(needed)
    info = {c: catalog.course(c) for c in courses}

    offered_at = {
        c: [i for i, t in enumerate(terms) if c in t.offered] for c in courses
    }
    for c in courses:
        if not offered_at[c]:
            raise Infeasible(
                InfeasibleReason("not_offered", str(c), f"{c} is offered in no horizon term")
            )
        if info[c].credits > cap:
            raise Infeasible(
                InfeasibleReason(
                    "exceeds_credit_cap",
                    str(c),
                    f"{c} needs {info[c].credits} credits but the cap is {cap}",
                )
            )

    direct = {
        c: sorted(p for p in info[c].prerequisites if p in needed) for c in courses
    }
    dependents: dict[CourseCode, list[CourseCode]] = {c: [] for c in courses}
    for c in courses:
        for p in direct[c]:
            dependents[p].append(c)

    # Earliest index each course could ever occupy, from offerings plus chain
    # depth. Doubles as an infeasibility probe for chains longer than the
    # horizon.
    earliest: dict[CourseCode, int] = {}

    def _earliest(c: CourseCode) -> int:
        if c in earliest:
            return earliest[c]
        floor = 0
        for p in direct[c]:
            floor = max(floor, _earliest(p) + 1)
        idx = next((i for i in offered_at[c] if i >= floor), len(terms))
        earliest[c] = idx
        return idx

    for c in courses:
        if _earliest(c) >= len(terms):
            raise Infeasible(
                InfeasibleReason(
                    "horizon_exhausted",
                    str(c),
                    f"{c} cannot be scheduled within the horizon",
                )
            )

    lb = _lower_bound_of(needed, info, direct, cap)
    n = len(courses)
    assignment: dict[CourseCode, int] = {}
    load = [0] * len(terms)

    def search(i: int, used: int, budget: int) -> bool:
        if i == n:
            return True
        c = courses[i]
        floor = 0
        for p in direct[c]:
            floor = max(floor, (assignment[p] if p in assignment else earliest[p]) + 1)
        ceiling = len(terms) - 1
        for d in dependents[c]:
            if d in assignment:
                ceiling = min(ceiling, assignment[d] - 1)
        for t in offered_at[c]:
            if t < floor or t > ceiling:
                continue
            if load[t] + info[c].credits > cap:
                continue
            opened = 1 if load[t] == 0 else 0
            if used + opened > budget:
                continue
            assignment[c] = t
            load[t] += info[c].credits
            if search(i + 1, used + opened, budget):
                return True
            del assignment[c]
            load[t] -= info[c].credits
        return False

    for budget in range(max(lb, 1), len(terms) + 1):
        if search(0, 0, budget):
            by_term: dict[str, set[CourseCode]] = {}
            for c, t in assignment.items():
                by_term.setdefault(terms[t].id, set()).add(c)
            ordered = {
                terms[i].id: frozenset(by_term[terms[i].id])
                for i in range(len(terms))
                if terms[i].id in by_term
            }
            return SemesterPlan(ordered, len(ordered))

    raise Infeasible(
        InfeasibleReason(
            "horizon_exhausted",
            None,
            "no assignment fits the horizon under the credit cap",
        )
    )


def lower_bound(
    catalog: CourseCatalog,
    student: StudentRecord,
    targets: "set[CourseCode] | set[str]",
    constraints: PlanConstraints,
) -> int:
    """Admissible bound: max of the longest unmet prerequisite chain and the
    total-credits/cap quotient. Never exceeds the optimum."""
    needed, _ = _needed_courses(catalog, student, targets)
    if not needed:
        return 0
    info = {c: catalog.course(c) for c in needed}
    direct = {
        c: [p for p in info[c].prerequisites if p in needed] for c in needed
    }
    return _lower_bound_of(needed, info, direct, constraints.credit_cap)


def _lower_bound_of(needed, info, direct, cap) -> int:
    depth: dict[CourseCode, int] = {}

    def chain(c) -> int:
        if c in depth:
            return depth[c]
        depth[c] = 1 + max((chain(p) for p in direct[c]), default=0)
        return depth[c]

    longest = max(chain(c) for c in needed)
    credits = sum(info[c].credits for c in needed)
    return max(longest, math.ceil(credits / cap))


def _needed_courses(catalog, student, targets):
    target_codes = {_resolve(catalog, t) for t in targets}
    for t in sorted(target_codes):
        if t in student.completed:
            raise ValueError(f"target {t} is already completed")
    satisfied = student.completed | student.self_certified
    needed = set(target_codes)
    for t in target_codes:
        needed |= {p for p in prerequisite_closure(catalog, t) if p not in satisfied}
    return needed, satisfied


def _resolve_horizon(catalog, constraints: PlanConstraints):
    if not constraints.horizon:
        raise ValueError("horizon must not be empty")
    terms = []
    for term_id in constraints.horizon:
        term = catalog.term(term_id)
        if term is None:
            raise ValueError(f"unknown horizon term: {term_id!r}")
        terms.append(term)
    keys = [t.sort_key() for t in terms]
    if any(b <= a for a, b in zip(keys, keys[1:])):
        raise ValueError("horizon must be strictly increasing in term order")
    return terms


def _resolve(catalog: CourseCatalog, code: "CourseCode | str") -> CourseCode:
    if isinstance(code, CourseCode):
        if catalog.course(code) is None:
            raise UnknownCourse(str(code))
        return code
    course = catalog.course(code)
    if course is None:
        raise UnknownCourse(str(code))
    return course.code
