"""The speech boundary: confidence-tagged utterances in, say/display out.

Real recognizers and synthesizers live outside this contract. The canonical
transport is newline-delimited JSON records over byte streams, so any
external speech engine, the web client, or a test script can drive the
agent. The confidence gate keeps noise away from the parser.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

DEFAULT_THRESHOLD = 0.5


class WireError(Exception):
    """A malformed wire record."""


@dataclass(frozen=True)
class UtteranceEvent:
    text: str
    confidence: float = 1.0
    lang: str = "en"
    timestamp: float | None = None


@dataclass(frozen=True)
class Say:
    text: str


@dataclass
class Display:
    kind: str  # course_table | prereq_list | plan
    rows: list = field(default_factory=list)


@dataclass(frozen=True)
class Accepted:
    text: str
    lang: str


@dataclass(frozen=True)
class Rejected:
    reason: str  # "low_confidence" | "empty"


def gate(event: UtteranceEvent, threshold: float = DEFAULT_THRESHOLD) -> "Accepted | Rejected":
    """Quality control for recognizer output.

    Accepted iff confidence clears the threshold and the text is nonempty
    after trimming; everything else becomes a reprompt directive and must
    never reach the intent parser.
    """
    if not event.text.strip():
        return Rejected("empty")
    if event.confidence < threshold:
        return Rejected("low_confidence")
    return Accepted(event.text.strip(), event.lang)


_INBOUND_KEYS = {"type", "text", "confidence", "lang"}


def read_event(line: str) -> UtteranceEvent:
    """Parse one inbound wire record.

    Missing confidence defaults to 1.0 (typed input); missing lang to "en".
    """
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise WireError(f"not valid JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise WireError("wire record must be an object")
    if raw.get("type") != "utterance":
        raise WireError(f"unsupported record type: {raw.get('type')!r}")
    for key in raw:
        if key not in _INBOUND_KEYS:
            raise WireError(f"unknown key {key!r}")
    if "text" not in raw or not isinstance(raw["text"], str):
        raise WireError("utterance record needs a string 'text'")
    confidence = raw.get("confidence", 1.0)
    if isinstance(confidence, bool) or not isinstance(confidence, (int, float)):
        raise WireError("'confidence' must be a number")
    if not 0.0 <= confidence <= 1.0:
        raise WireError("'confidence' must be within [0, 1]")
    lang = raw.get("lang", "en")
    if not isinstance(lang, str) or not lang:
        raise WireError("'lang' must be a nonempty string")
    return UtteranceEvent(text=raw["text"], confidence=float(confidence), lang=lang)


def write_event(event: "Say | Display") -> str:
    """Serialize one outbound event as a single wire line with stable field
    order, so output is bit-reproducible."""
    if isinstance(event, Say):
        if not event.text:
            raise ValueError("Say payload must be nonempty")
        record = {"type": "say", "text": event.text}
    elif isinstance(event, Display):
        record = {"type": "display", "kind": event.kind, "rows": event.rows}
    else:
        raise TypeError(f"not an output event: {event!r}")
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def utterance_to_wire(event: UtteranceEvent) -> str:
    """Serialize an utterance the way clients put it on the wire."""
    record = {
        "type": "utterance",
        "text": event.text,
        "confidence": event.confidence,
        "lang": event.lang,
    }
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))
