"""Rule-based utterance understanding.

Turns raw text into tokens, tokens into an Intent via an ordered keyword
rules table (shipped as an editable JSON data file), and free-text course
mentions into ranked catalog candidates via normalized edit distance.
Everything here is stateless and deterministic.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .catalog import CourseCatalog, CourseCode

FUZZY_THRESHOLD = 0.6
MAX_CANDIDATES = 3


class TokenKind(Enum):
    WORD = "word"
    COURSE_CODE = "course_code"
    NUMBER = "number"
    PUNCT = "punct"


@dataclass(frozen=True)
class Token:
    text: str
    kind: TokenKind


class IntentKind(str, Enum):
    WAKE = "Wake"
    REGISTER_COURSE = "RegisterCourse"
    LIST_COURSES = "ListCourses"
    SET_PROGRAM = "SetProgram"
    QUERY_PREREQUISITES = "QueryPrerequisites"
    PLAN_DEGREE = "PlanDegree"
    CONFIRM_YES = "ConfirmYes"
    CONFIRM_NO = "ConfirmNo"
    QUIT = "Quit"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Intent:
    kind: IntentKind
    slots: dict = field(default_factory=dict)
    parse_confidence: float = 1.0


@dataclass(frozen=True)
class MatchCandidate:
    code: CourseCode
    score: float
    matched_on: str  # "code" | "title"


_TOKEN_RE = re.compile(
    r"\(\s*(?P<pdept>[A-Za-z]{2,5})\s*-?\s*(?P<pnum>[0-9]{3,4})\s*\)"
    r"|(?P<dept>[A-Za-z]{2,5})(?:-|\s+)?(?P<num>[0-9]{3,4})\b"
    r"|(?P<word>[A-Za-z]+(?:'[A-Za-z]+)*)"
    r"|(?P<number>[0-9]+)"
    r"|(?P<punct>[^\sA-Za-z0-9])"
)


def tokenize(utterance: str) -> list[Token]:
    """Lowercased word tokens; course-code shapes (hyphen, space, or no
    separator, optionally parenthesized) collapse into single tokens."""
    tokens: list[Token] = []
    for m in _TOKEN_RE.finditer(utterance):
        if m.group("pdept") or m.group("dept"):
            dept = (m.group("pdept") or m.group("dept")).lower()
            num = m.group("pnum") or m.group("num")
            tokens.append(Token(f"{dept}-{num}", TokenKind.COURSE_CODE))
        elif m.group("word"):
            tokens.append(Token(m.group("word").lower(), TokenKind.WORD))
        elif m.group("number"):
            tokens.append(Token(m.group("number"), TokenKind.NUMBER))
        else:
            tokens.append(Token(m.group("punct"), TokenKind.PUNCT))
    return tokens


def stem(word: str) -> str:
    """Minimal suffix strip (plural -s, -ing, -ed) used only while matching
    rule keywords."""
    if len(word) > 5 and word.endswith("ing"):
        return word[:-3]
    if len(word) > 4 and word.endswith("ed"):
        return word[:-2]
    if word.endswith(("sses", "xes", "ches", "shes")):
        return word[:-2]
    if len(word) > 3 and word.endswith("s") and not word.endswith("ss"):
        return word[:-1]
    return word


@dataclass(frozen=True)
class IntentRule:
    kind: IntentKind
    keywords: tuple[tuple[str, ...], ...] = ()
    prefixes: tuple[tuple[str, ...], ...] = ()
    contexts: tuple[str, ...] = ()
    bare_code_contexts: tuple[str, ...] = ()
    course_slot: bool = False
    program_slot: bool = False
    slot_markers: tuple[str, ...] = ()


@dataclass(frozen=True)
class RulesTable:
    version: int
    stopwords: frozenset[str]
    degree_words: dict
    intents: tuple[IntentRule, ...]


def load_rules(path: "str | Path | None" = None) -> RulesTable:
    if path is None:
        text = resources.files("dona").joinpath("data/intent_rules.json").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    doc = json.loads(text)
    intents = tuple(
        IntentRule(
            kind=IntentKind(raw["kind"]),
            keywords=tuple(tuple(alt) for alt in raw.get("keywords", [])),
            prefixes=tuple(tuple(p) for p in raw.get("prefixes", [])),
            contexts=tuple(raw.get("contexts", [])),
            bare_code_contexts=tuple(raw.get("bare_code_contexts", [])),
            course_slot=raw.get("course_slot", False),
            program_slot=raw.get("program_slot", False),
            slot_markers=tuple(raw.get("slot_markers", [])),
        )
        for raw in doc["intents"]
    )
    return RulesTable(
        version=doc["version"],
        stopwords=frozenset(doc["stopwords"]),
        degree_words=dict(doc["degree_words"]),
        intents=intents,
    )


@lru_cache(maxsize=1)
def default_rules() -> RulesTable:
    return load_rules()


def _phase_name(context) -> str:
    phase = getattr(context, "phase", context)
    value = getattr(phase, "value", phase)
    return str(value) if value is not None else ""


def parse_intent(tokens: list[Token], context=None, rules: RulesTable | None = None) -> Intent:
    """First matching rule wins; rule order is fixed by the rules table.
    Unparseable input yields Unknown, never an error."""
    rules = rules or default_rules()
    phase = _phase_name(context)
    words = [t.text for t in tokens if t.kind is TokenKind.WORD]
    stems = {stem(w) for w in words}
    code_tokens = [t for t in tokens if t.kind is TokenKind.COURSE_CODE]

    for rule in rules.intents:
        if rule.contexts and phase not in rule.contexts:
            continue
        matched = bool(rule.prefixes) and _prefix_match(words, rule.prefixes)
        if not matched and rule.keywords:
            matched = any(all(stem(k) in stems for k in alt) for alt in rule.keywords)
        if not matched and rule.bare_code_contexts:
            matched = phase in rule.bare_code_contexts and bool(code_tokens)
        if matched:
            slots, confidence = _extract_slots(rule, words, code_tokens, rules)
            return Intent(rule.kind, slots, confidence)
    return Intent(IntentKind.UNKNOWN, {}, 1.0)


def _prefix_match(words: list[str], prefixes) -> bool:
    for prefix in prefixes:
        if len(words) >= len(prefix) and tuple(words[: len(prefix)]) == tuple(prefix):
            return True
    return False


def _extract_slots(rule: IntentRule, words, code_tokens, rules: RulesTable):
    slots: dict = {}
    confidence = 1.0

    if rule.course_slot:
        if code_tokens:
            slots["course_code"] = str(CourseCode.parse(code_tokens[0].text))
        else:
            mention = _mention_words(rule, words, rules)
            if mention:
                slots["course_query"] = " ".join(mention)
                confidence = 0.9

    if rule.program_slot:
        for w in words:
            if w in rules.degree_words:
                slots["degree_level"] = rules.degree_words[w]
                break
        mention = _mention_words(rule, words, rules, drop_degree=True)
        if mention:
            slots["program_name"] = " ".join(mention)
            confidence = 0.9

    return slots, confidence


def _mention_words(rule: IntentRule, words, rules: RulesTable, drop_degree: bool = False):
    candidate = words
    markers = set(rule.slot_markers)
    last = max((i for i, w in enumerate(words) if w in markers), default=-1)
    if last >= 0:
        candidate = words[last + 1:]
    keyword_stems = {stem(k) for alt in rule.keywords for k in alt}
    out = []
    for w in candidate:
        if w in rules.stopwords or w in markers:
            continue
        if stem(w) in keyword_stems:
            continue
        if drop_degree and w in rules.degree_words:
            continue
        out.append(w)
    return out


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance, two-row dynamic programming."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return previous[-1]


_NORM_RE = re.compile(r"[^a-z0-9]+")


def _normalize(text: str) -> str:
    return " ".join(_NORM_RE.sub(" ", text.lower()).split())


def match_course(mention: str, catalog: CourseCatalog) -> list[MatchCandidate]:
    """Rank catalog courses against a free-text mention.

    Exact code and exact title (including the title's initialism) score 1.0;
    everything else scores by normalized edit distance against the title,
    cut off at FUZZY_THRESHOLD, at most MAX_CANDIDATES results.
    """
    mention = mention.strip()
    if not mention:
        return []

    try:
        code = CourseCode.parse(mention)
    except ValueError:
        code = None
    if code is not None and catalog.course(code) is not None:
        return [MatchCandidate(code, 1.0, "code")]

    norm_m = _normalize(mention)
    compact = norm_m.replace(" ", "")
    candidates: list[MatchCandidate] = []
    for course in catalog.courses:
        norm_t = _normalize(course.title)
        if not norm_t or not norm_m:
            continue
        initials = "".join(w[0] for w in norm_t.split())
        if norm_m == norm_t or (len(compact) >= 2 and compact == initials):
            candidates.append(MatchCandidate(course.code, 1.0, "title"))
            continue
        distance = edit_distance(norm_m, norm_t)
        score = 1.0 - distance / max(len(norm_m), len(norm_t))
        if score >= FUZZY_THRESHOLD:
            candidates.append(MatchCandidate(course.code, score, "title"))
    candidates.sort(key=lambda m: (-m.score, m.code.sort_key()))
    return candidates[:MAX_CANDIDATES]
