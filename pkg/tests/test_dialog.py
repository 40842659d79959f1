import copy

import pytest

from dona.catalog import CourseCode
from dona.dialog import (
    DialogSession,
    DialogState,
    MissingPlaceholder,
    PendingRegistration,
    Phase,
    ProgramSet,
    Registered,
    render,
)
from dona.nlu import Intent, IntentKind
from dona.transport import UtteranceEvent

from helpers import (
    GOLDEN_SAYS,
    GOLDEN_SCRIPT,
    counter_clock,
    drive,
    make_engine,
    make_session,
)


def code(raw):
    return CourseCode.parse(raw)


class TestRender:
    def test_greeting(self):
        assert render("greeting", {}, "en") == "How can I help you?"

    def test_unknown_locale_falls_back_to_english(self):
        assert render("greeting", {}, "xx-unknown") == "How can I help you?"

    def test_prereq_question(self):
        assert render("prereq_question", {"course": "CSIT-535"}, "en") == (
            "Did you complete prerequisites?"
        )

    def test_missing_placeholder_raises(self):
        with pytest.raises(MissingPlaceholder):
            render("registered", {"course": "CSIT-535"}, "en")

    def test_unknown_key_raises(self):
        with pytest.raises(KeyError):
            render("no_such_template", {}, "en")

    def test_spanish_templates_render(self):
        assert render("greeting", {}, "es") == "¿Cómo puedo ayudarte?"


class TestTemplateTable:
    def test_every_key_has_both_locales(self, templates):
        locales = templates.locales()
        assert "en" in locales and "es" in locales
        for key in templates.keys():
            for locale in ("en", "es"):
                assert (key, locale) in templates._patterns

    def test_placeholder_sets_identical_across_locales(self, templates):
        for key in templates.keys():
            assert templates.placeholders(key, "en") == templates.placeholders(key, "es")


class TestGoldenDialog:
    def test_golden_sequence_turn_for_turn(self, sample_catalog):
        engine = make_engine(sample_catalog)
        session = make_session()
        responses = drive(engine, session, GOLDEN_SCRIPT)
        assert tuple(r.say for r in responses) == GOLDEN_SAYS
        assert responses[-1].effects == [Registered(code("CSIT-535"), "2026-FALL")]
        assert session.state.phase is Phase.AWAITING_MORE_REQUESTS
        assert session.student.self_certified == {code("CSIT-501")}

    def test_displays_accompany_the_right_turns(self, sample_catalog):
        engine = make_engine(sample_catalog)
        responses = drive(engine, make_session(), GOLDEN_SCRIPT)
        course_table = responses[2].displays
        assert [d.kind for d in course_table] == ["course_table"]
        assert course_table[0].rows[0]["code"] == "CSIT-501"
        prereq_list = responses[3].displays
        assert [d.kind for d in prereq_list] == ["prereq_list"]
        assert prereq_list[0].rows == [
            {"code": "CSIT-501", "title": "Foundations of Computing", "status": "missing"}
        ]

    def test_byte_identical_across_runs(self, sample_catalog):
        transcripts = []
        for _ in range(2):
            engine = make_engine(sample_catalog)
            session = make_session()
            drive(engine, session, GOLDEN_SCRIPT)
            transcripts.append(
                "\n".join(
                    f"{t.speaker}\t{t.text}\t{t.timestamp}\t{t.latency_ms}"
                    for t in session.transcript
                ).encode("utf-8")
            )
        assert transcripts[0] == transcripts[1]

    def test_confirm_no_offers_a_plan(self, sample_catalog):
        engine = make_engine(sample_catalog)
        session = make_session()
        responses = drive(engine, session, GOLDEN_SCRIPT[:-1] + ("No.",))
        final = responses[-1]
        assert final.template_key == "plan_offer"
        assert [d.kind for d in final.displays] == ["plan"]
        assert final.displays[0].rows == [
            {"term": "2026-FALL", "courses": ["CSIT-501"], "credits": 3},
            {"term": "2027-SPRING", "courses": ["CSIT-535"], "credits": 3},
        ]
        assert final.effects == [] and session.student.registrations == []


class TestWakeAndQuit:
    def test_minimal_wake_quit_cycle(self, sample_catalog):
        engine = make_engine(sample_catalog)
        session = make_session()
        responses = drive(engine, session, ["hey dona", "quit"])
        assert [r.say for r in responses] == ["How can I help you?", "Goodbye!"]
        assert session.state.phase is Phase.IDLE

    def test_commands_before_wake_are_ignored(self, sample_catalog):
        engine = make_engine(sample_catalog)
        session = make_session()
        (response,) = drive(engine, session, ["list the courses"])
        assert response.say == "" and response.effects == []
        assert session.state.phase is Phase.IDLE

    def test_run_loop_terminates_on_quit(self, sample_catalog):
        engine = make_engine(sample_catalog)
        session = make_session()
        script = [UtteranceEvent(t) for t in ["hey dona", "quit", "hey dona"]]
        seen = []
        engine.run_loop(session, iter(script), seen.append)
        assert [r.say for r in seen] == ["How can I help you?", "Goodbye!"]

    def test_run_loop_skips_empty_commands(self, sample_catalog):
        engine = make_engine(sample_catalog)
        session = make_session()
        script = [UtteranceEvent(""), UtteranceEvent("  "), UtteranceEvent("hey dona")]
        seen = []
        engine.run_loop(session, iter(script), seen.append)
        assert [r.say for r in seen] == ["How can I help you?"]

    def test_run_loop_on_empty_source(self, sample_catalog):
        engine = make_engine(sample_catalog)
        session = make_session()
        engine.run_loop(session, iter(()), lambda r: None)
        assert session.state.phase is Phase.IDLE and session.transcript == []

    def test_run_loop_survives_a_broken_sink(self, sample_catalog):
        engine = make_engine(sample_catalog)
        session = make_session()

        def broken(_response):
            raise BrokenPipeError("sink went away")

        script = [UtteranceEvent(t) for t in ["hey dona", "list the courses"]]
        engine.run_loop(session, iter(script), broken)
        # the loop ended on the transport failure; the session kept the
        # state it had already reached
        assert session.state.phase is Phase.AWAITING_COMMAND
        assert [t.text for t in session.transcript if t.speaker == "user"] == ["hey dona"]


ALL_INTENTS = {
    IntentKind.WAKE: Intent(IntentKind.WAKE),
    IntentKind.REGISTER_COURSE: Intent(IntentKind.REGISTER_COURSE, {"course_code": "CSIT-535"}),
    IntentKind.LIST_COURSES: Intent(IntentKind.LIST_COURSES),
    IntentKind.SET_PROGRAM: Intent(
        IntentKind.SET_PROGRAM, {"degree_level": "masters", "program_name": "computer science"}
    ),
    IntentKind.QUERY_PREREQUISITES: Intent(
        IntentKind.QUERY_PREREQUISITES, {"course_code": "CSIT-535"}
    ),
    IntentKind.PLAN_DEGREE: Intent(IntentKind.PLAN_DEGREE, {"course_code": "CSIT-535"}),
    IntentKind.CONFIRM_YES: Intent(IntentKind.CONFIRM_YES),
    IntentKind.CONFIRM_NO: Intent(IntentKind.CONFIRM_NO),
    IntentKind.QUIT: Intent(IntentKind.QUIT),
    IntentKind.UNKNOWN: Intent(IntentKind.UNKNOWN),
}


def session_in(phase: Phase) -> DialogSession:
    session = make_session()
    pending = None
    if phase is Phase.AWAITING_PREREQ_CONFIRMATION:
        pending = PendingRegistration(code("CSIT-535"), frozenset({code("CSIT-501")}))
    session.state = DialogState(phase, pending)
    return session


class TestFsmTable:
    def test_every_cell_is_total_and_safe(self, sample_catalog):
        engine = make_engine(sample_catalog)
        for phase in Phase:
            for kind, intent in ALL_INTENTS.items():
                session = session_in(phase)
                response = engine.step(session, intent)
                after = response.state_after.phase
                if kind is IntentKind.QUIT:
                    assert after is Phase.IDLE, (phase, kind)
                if phase is Phase.IDLE and kind is not IntentKind.WAKE:
                    assert after is Phase.IDLE and response.effects == []
                if after is not Phase.IDLE:
                    assert response.say, (phase, kind)
                # pending exists exactly in the confirmation phase
                if response.state_after.pending is not None:
                    assert after is Phase.AWAITING_PREREQ_CONFIRMATION

    def test_say_always_comes_from_a_template(self, sample_catalog, templates):
        engine = make_engine(sample_catalog)
        for phase in Phase:
            for intent in ALL_INTENTS.values():
                session = session_in(phase)
                response = engine.step(session, intent)
                if response.say:
                    assert response.template_key in templates.keys()
                    if not templates.placeholders(response.template_key):
                        assert response.say == templates.render(
                            response.template_key, {}, response.lang
                        )

    def test_no_effect_on_failed_eligibility(self, sample_catalog):
        engine = make_engine(sample_catalog)
        for phase in (
            Phase.AWAITING_COMMAND,
            Phase.AWAITING_COURSE_CHOICE,
            Phase.AWAITING_MORE_REQUESTS,
        ):
            session = session_in(phase)
            # CSIT-598 needs CSIT-535 and CSIT-555; the student has nothing
            response = engine.step(
                session, Intent(IntentKind.REGISTER_COURSE, {"course_code": "CSIT-598"})
            )
            assert response.effects == []
            assert session.student.registrations == []
            assert response.state_after.phase is Phase.AWAITING_PREREQ_CONFIRMATION

    def test_wake_gating_from_idle_is_exhaustive(self, sample_catalog):
        engine = make_engine(sample_catalog)
        for kind, intent in ALL_INTENTS.items():
            session = session_in(Phase.IDLE)
            response = engine.step(session, intent)
            if kind is IntentKind.WAKE:
                assert response.state_after.phase is Phase.AWAITING_COMMAND
            else:
                assert response.state_after.phase is Phase.IDLE
                assert response.say == "" and response.effects == []


class TestStepBehavior:
    def test_already_registered_is_an_apology_not_an_error(self, sample_catalog):
        engine = make_engine(sample_catalog)
        session = session_in(Phase.AWAITING_COURSE_CHOICE)
        session.student.completed.add(code("CSIT-501"))
        first = engine.step(
            session, Intent(IntentKind.REGISTER_COURSE, {"course_code": "CSIT-535"})
        )
        assert first.template_key == "registered"
        second = engine.step(
            session, Intent(IntentKind.REGISTER_COURSE, {"course_code": "CSIT-535"})
        )
        assert second.template_key == "already_registered"
        assert second.effects == []
        assert len(session.student.registrations) == 1

    def test_unknown_course_mention_apologizes(self, sample_catalog):
        engine = make_engine(sample_catalog)
        session = session_in(Phase.AWAITING_COURSE_CHOICE)
        response = engine.step(
            session,
            Intent(IntentKind.REGISTER_COURSE, {"course_query": "underwater basket weaving"}),
        )
        assert response.template_key == "unknown_course"
        assert response.state_after.phase is Phase.AWAITING_COURSE_CHOICE

    def test_fuzzy_mention_resolves_to_course(self, sample_catalog):
        engine = make_engine(sample_catalog)
        session = session_in(Phase.AWAITING_COURSE_CHOICE)
        session.student.completed.add(code("CSIT-501"))
        response = engine.step(
            session, Intent(IntentKind.REGISTER_COURSE, {"course_query": "HCI"})
        )
        assert response.effects == [Registered(code("CSIT-535"), "2026-FALL")]

    def test_program_effect_emitted_once(self, sample_catalog):
        engine = make_engine(sample_catalog)
        session = session_in(Phase.AWAITING_PROGRAM)
        response = engine.step(session, ALL_INTENTS[IntentKind.SET_PROGRAM])
        assert response.effects == [ProgramSet("MS-CS")]
        assert session.student.program_id == "MS-CS"

    def test_unknown_program_keeps_state(self, sample_catalog):
        engine = make_engine(sample_catalog)
        session = session_in(Phase.AWAITING_PROGRAM)
        response = engine.step(
            session, Intent(IntentKind.SET_PROGRAM, {"program_name": "basket weaving"})
        )
        assert response.template_key == "unknown_program"
        assert response.state_after.phase is Phase.AWAITING_PROGRAM

    def test_prereq_query_reports_status(self, sample_catalog):
        engine = make_engine(sample_catalog)
        session = session_in(Phase.AWAITING_COMMAND)
        session.student.completed.add(code("CSIT-535"))
        response = engine.step(
            session, Intent(IntentKind.QUERY_PREREQUISITES, {"course_code": "CSIT-598"})
        )
        assert response.displays[0].rows == [
            {"code": "CSIT-535", "title": "Human Computer Interaction", "status": "satisfied"},
            {"code": "CSIT-555", "title": "Database Systems", "status": "missing"},
        ]
        assert response.state_after.phase is Phase.AWAITING_COMMAND

    def test_confirmation_reprompt_preserves_pending(self, sample_catalog):
        engine = make_engine(sample_catalog)
        session = session_in(Phase.AWAITING_PREREQ_CONFIRMATION)
        pending = session.state.pending
        response = engine.step(session, Intent(IntentKind.LIST_COURSES))
        assert response.template_key == "confirm_reprompt"
        assert session.state.pending == pending

    def test_per_utterance_language_tag_localizes_the_reply(self, sample_catalog):
        engine = make_engine(sample_catalog)
        session = make_session()
        _, response = engine.handle(session, UtteranceEvent("hey dona", lang="es"))
        assert response.say == "¿Cómo puedo ayudarte?"
        _, response = engine.handle(session, UtteranceEvent("quit", lang="en"))
        assert response.say == "Goodbye!"


class TestReplayDeterminism:
    def test_replaying_intents_reproduces_the_final_session(self, sample_catalog):
        script_intents = []
        engine = make_engine(sample_catalog)
        original = make_session()
        for text in GOLDEN_SCRIPT:
            intent, _ = engine.handle(original, UtteranceEvent(text))
            script_intents.append(intent)

        replayed = make_session()
        replay_engine = make_engine(sample_catalog)
        for intent in script_intents:
            replay_engine.step(replayed, intent)

        assert replayed.state == original.state
        assert replayed.student.registrations == original.student.registrations
        assert replayed.student.self_certified == original.student.self_certified
        assert replayed.student.program_id == original.student.program_id

    def test_step_is_deterministic_given_equal_sessions(self, sample_catalog):
        engine = make_engine(sample_catalog)
        one = session_in(Phase.AWAITING_COURSE_CHOICE)
        two = copy.deepcopy(one)
        intent = Intent(IntentKind.REGISTER_COURSE, {"course_code": "CSIT-535"})
        r1 = engine.step(one, intent)
        r2 = engine.step(two, intent)
        assert r1.say == r2.say and r1.effects == r2.effects
        assert one.state == two.state


class TestTranscript:
    def test_per_turn_latency_recorded(self, sample_catalog):
        engine = make_engine(sample_catalog, clock=counter_clock())
        session = make_session()
        drive(engine, session, GOLDEN_SCRIPT)
        agent_turns = [t for t in session.transcript if t.speaker == "agent"]
        assert agent_turns and all(t.latency_ms is not None for t in agent_turns)

    def test_transcript_is_append_only_through_a_conversation(self, sample_catalog):
        engine = make_engine(sample_catalog)
        session = make_session()
        seen = []
        for text in GOLDEN_SCRIPT:
            engine.handle(session, UtteranceEvent(text))
            assert session.transcript[: len(seen)] == seen
            seen = list(session.transcript)
