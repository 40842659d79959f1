"""Operator entry point: REPL, catalog validation, batch planning, server.

Exit codes: 0 success, 1 validation findings, 2 bad input, 3 infeasible plan.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .catalog import (
    CourseCode,
    ParseError,
    UnknownCourse,
    ValidationError,
    load_catalog,
    read_catalog_file,
    validate_catalog,
)
from .dialog import DialogEngine, DialogSession
from .planner import Infeasible, PlanConstraints, StudentRecord, plan_semesters
from .transport import (
    DEFAULT_THRESHOLD,
    Display,
    Say,
    UtteranceEvent,
    WireError,
    read_event,
    write_event,
)

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_BAD_INPUT = 2
EXIT_INFEASIBLE = 3


@click.group()
@click.option("--catalog", "catalog_path", envvar="DONA_CATALOG", type=click.Path(path_type=Path), help="Catalog file path.")
@click.option("--data-dir", envvar="DONA_DATA_DIR", type=click.Path(path_type=Path), default=None, help="Directory for session logs.")
@click.option("--locale", envvar="DONA_LOCALE", default="en", show_default=True)
@click.option("--threshold", envvar="DONA_THRESHOLD", type=float, default=DEFAULT_THRESHOLD, show_default=True, help="Confidence gate threshold.")
@click.pass_context
def main(ctx, catalog_path, data_dir, locale, threshold):
    """Dona: a conversational agent for student course registration."""
    if not 0.0 <= threshold <= 1.0:
        click.echo("threshold must be within [0, 1]", err=True)
        ctx.exit(EXIT_BAD_INPUT)
    ctx.obj = {
        "catalog_path": catalog_path,
        "data_dir": data_dir,
        "locale": locale,
        "threshold": threshold,
    }


def _require_catalog(ctx):
    path = ctx.obj["catalog_path"]
    if path is None:
        click.echo("a catalog is required; pass --catalog or set DONA_CATALOG", err=True)
        ctx.exit(EXIT_BAD_INPUT)
    try:
        return load_catalog(path)
    except (ParseError, ValidationError) as exc:
        click.echo(f"catalog error: {exc}", err=True)
        ctx.exit(EXIT_BAD_INPUT)


def _render_table(rows: list[dict]) -> str:
    if not rows:
        return "  (none)"
    headers = list(rows[0].keys())
    table = [[str(r.get(h, "")) for h in headers] for r in rows]
    widths = [max(len(h), *(len(row[i]) for row in table)) for i, h in enumerate(headers)]
    lines = ["  " + "  ".join(h.upper().ljust(w) for h, w in zip(headers, widths))]
    for row in table:
        lines.append("  " + "  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
    return "\n".join(lines)


def _print_display(display: Display):
    rows = [dict(r) for r in display.rows]
    for row in rows:
        if isinstance(row.get("courses"), list):
            row["courses"] = " ".join(row["courses"])
    click.echo(_render_table(rows))


@main.command()
@click.option("--wire", is_flag=True, help="Speak the raw line-record protocol.")
@click.option("--confidence", type=float, default=1.0, show_default=True, help="Confidence stamped on typed utterances.")
@click.option("--student", "student_id", default="repl", show_default=True)
@click.pass_context
def repl(ctx, wire, confidence, student_id):
    """Interactive loop: read utterances from stdin, print responses."""
    catalog = _require_catalog(ctx)
    engine = DialogEngine(catalog)
    session = DialogSession(
        session_id="repl",
        student=StudentRecord(student_id),
        locale=ctx.obj["locale"],
        threshold=ctx.obj["threshold"],
    )

    def events():
        for line in sys.stdin:
            line = line.rstrip("\n")
            if wire:
                if not line.strip():
                    continue
                try:
                    yield read_event(line)
                except WireError as exc:
                    click.echo('{"type":"error","message":' + _json_str(str(exc)) + "}")
                    continue
            else:
                yield UtteranceEvent(line, confidence=confidence, lang=ctx.obj["locale"])

    def sink(response):
        if wire:
            if response.say:
                click.echo(write_event(Say(response.say)))
            for display in response.displays:
                click.echo(write_event(display))
        else:
            if response.say:
                click.echo(response.say)
            for display in response.displays:
                _print_display(display)

    engine.run_loop(session, events(), sink)
    ctx.exit(EXIT_OK)


def _json_str(text: str) -> str:
    import json

    return json.dumps(text, ensure_ascii=False)


@main.command()
@click.pass_context
def validate(ctx):
    """Validate the catalog file; exit 0 only when it is clean."""
    path = ctx.obj["catalog_path"]
    if path is None:
        click.echo("a catalog is required; pass --catalog or set DONA_CATALOG", err=True)
        ctx.exit(EXIT_BAD_INPUT)
    try:
        catalog = read_catalog_file(path)
    except ParseError as exc:
        click.echo(f"parse error: {exc}", err=True)
        ctx.exit(EXIT_BAD_INPUT)
    report = validate_catalog(catalog)
    if report.ok:
        click.echo("OK")
        ctx.exit(EXIT_OK)
    for finding in report.findings:
        click.echo(f"{finding.kind}: {finding.detail}")
    ctx.exit(EXIT_FINDINGS)


@main.command()
@click.option("--target", "targets", multiple=True, required=True, help="Course code to plan for (repeatable).")
@click.option("--completed", multiple=True, help="Course code already completed (repeatable).")
@click.option("--cap", type=int, default=9, show_default=True, help="Credit cap per term.")
@click.option("--horizon", multiple=True, help="Term id in the planning horizon (repeatable; defaults to all catalog terms).")
@click.pass_context
def plan(ctx, targets, completed, cap, horizon):
    """Compute an optimal semester plan and print it term by term."""
    catalog = _require_catalog(ctx)
    student = StudentRecord("cli")
    try:
        student.completed = {CourseCode.parse(c) for c in completed}
        parsed_targets = {CourseCode.parse(c) for c in targets}
    except ValueError as exc:
        click.echo(f"bad course code: {exc}", err=True)
        ctx.exit(EXIT_BAD_INPUT)
    horizon = tuple(horizon) if horizon else tuple(t.id for t in catalog.terms_ordered())
    try:
        result = plan_semesters(catalog, student, parsed_targets, PlanConstraints(cap, horizon))
    except (UnknownCourse, ValueError) as exc:
        click.echo(f"bad input: {exc}", err=True)
        ctx.exit(EXIT_BAD_INPUT)
    except Infeasible as exc:
        click.echo(f"infeasible: {exc.reason.message or exc.reason.kind}", err=True)
        ctx.exit(EXIT_INFEASIBLE)
    click.echo(f"total terms: {result.total_terms}")
    _print_display(Display("plan", result.rows(catalog)))
    ctx.exit(EXIT_OK)


@main.command()
@click.option("--port", envvar="DONA_PORT", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.pass_context
def serve(ctx, port, host):
    """Run the HTTP JSON API."""
    import uvicorn

    from .service import ServiceConfig, create_app

    path = ctx.obj["catalog_path"]
    if path is None:
        click.echo("a catalog is required; pass --catalog or set DONA_CATALOG", err=True)
        ctx.exit(EXIT_BAD_INPUT)
    try:
        config = ServiceConfig(
            catalog_path=path,
            data_dir=ctx.obj["data_dir"],
            threshold=ctx.obj["threshold"],
            locale=ctx.obj["locale"],
        )
        app = create_app(config)
    except (ParseError, ValidationError) as exc:
        click.echo(f"catalog error: {exc}", err=True)
        ctx.exit(EXIT_BAD_INPUT)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
