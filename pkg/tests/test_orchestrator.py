"""Session state machine: planning, advancing, interrupts, terminal absorption."""

import pytest

from stepchef.errors import IllegalTransition, SessionTerminal
from stepchef.orchestrator import (
    SessionState,
    advance,
    completed_steps,
    create_session,
    run,
    session_view,
    submit_request,
)
from stepchef.transcript import replay, replayable_view
from stepchef.world import conservation_ok, cup_ingredients, drink_complete


def test_fresh_boba_milk_session():
    session = create_session("drink")
    state = submit_request(session, "I want to order a boba milk.")
    assert state is SessionState.EXECUTING
    assert len(session.plan.steps) == 4
    assert completed_steps(session) == []


def test_boba_milk_runs_to_completion():
    session = create_session("drink")
    submit_request(session, "I want to order a boba milk.")
    for expected in (1, 2, 3):
        advance(session)
        assert len(completed_steps(session)) == expected
    assert advance(session) is SessionState.COMPLETED
    assert drink_complete(session.world, [], wants_boba=True)
    cup = session.world.find_cup_at("finished_location")
    assert cup_ingredients(session.world, cup.id) == {"boba", "milk"}
    assert conservation_ok(session.world)


def test_refusal_is_terminal():
    session = create_session("drink")
    state = submit_request(session, "I would like a cup of passion fruit milk.")
    assert state is SessionState.REFUSED
    assert "is not available" in session.refusal_message
    with pytest.raises(SessionTerminal):
        submit_request(session, "anything else")
    assert advance(session) is SessionState.REFUSED  # no-op on terminal


def test_interrupt_queued_until_boundary():
    session = create_session("drink")
    submit_request(session, "Can I have a cup of strawberry milk?")
    advance(session)
    state = submit_request(session, "I want to add boba into the drink.")
    assert state is SessionState.EXECUTING
    assert session.plan.origin == "initial"  # not replanned yet
    assert len(session.interrupt_queue) == 1
    advance(session)  # boundary: replan happens here
    assert session.plan.origin == "replan"
    assert session.interrupt_queue == []
    run(session)
    assert session.state is SessionState.COMPLETED
    cup = session.world.find_cup_at("finished_location")
    assert cup_ingredients(session.world, cup.id) == {"strawberry jam", "boba", "milk"}


def test_fig4_scenario_replan_after_first_step():
    session = create_session("drink")
    submit_request(session, "May I have a cup of taro milk?")
    assert len(session.plan.steps) == 4
    advance(session)  # step 1: get the cup
    submit_request(session, "May I change to a taro boba milk?")
    run(session)
    assert session.state is SessionState.COMPLETED
    cup = session.world.find_cup_at("finished_location")
    assert cup_ingredients(session.world, cup.id) == {"boba", "taro", "milk"}
    # memorized steps: old plan prefix ++ executed steps of the new plan
    texts = [s.text for s in completed_steps(session)]
    assert texts[0] == "get an empty cup and bring it to the working area"
    assert texts[1] == "add boba to the working cup"
    assert len(texts) == 5


def test_completed_steps_monotone_and_memorized():
    session = create_session("drink")
    submit_request(session, "I want to order a boba milk.")
    seen = []
    while session.state is SessionState.EXECUTING:
        advance(session)
        texts = [s.text for s in completed_steps(session)]
        assert texts[: len(seen)] == seen  # never shrinks, never reorders
        seen = texts


def test_latest_interrupt_wins():
    session = create_session("drink")
    submit_request(session, "Can I have a cup of strawberry milk?")
    advance(session)
    submit_request(session, "I want to add boba into the drink.")
    submit_request(session, "Actually, can I replace the strawberry with mango?")
    run(session)
    assert session.state is SessionState.COMPLETED
    cup = session.world.find_cup_at("finished_location")
    assert cup_ingredients(session.world, cup.id) == {"mango jam", "milk"}
    replanned = [e for e in session.events if e.event_type == "replanned"]
    assert len(replanned) == 1
    assert replanned[0].payload["superseded"] == ["I want to add boba into the drink."]


def test_replan_refusal_discards_cup():
    session = create_session("drink")
    submit_request(session, "Can I have a cup of strawberry milk?")
    advance(session)
    advance(session)  # strawberry jam now in the cup
    submit_request(session, "Change it to a passion fruit milk please.")
    state = advance(session)
    assert state is SessionState.REFUSED
    discarded = [i for i in session.world.objects.values() if i.zone == "discard"]
    assert len(discarded) == 1
    assert session.world.cup_contents[discarded[0].id]


def test_interrupt_effect_at_every_boundary():
    for boundary in (0, 1, 2):
        session = create_session("drink")
        submit_request(session, "I want a matcha latte.")
        for _ in range(boundary):
            advance(session)
        submit_request(session, "Sorry, I want boba milk without matcha instead.")
        run(session)
        assert session.state is SessionState.COMPLETED
        events = session.events
        completed_before = 0
        for event in events:
            if event.event_type == "replanned":
                break
            if event.event_type == "step_completed":
                completed_before += 1
        assert completed_before == boundary
        cup = session.world.find_cup_at("finished_location")
        assert cup_ingredients(session.world, cup.id) == {"boba", "milk"}


def test_advance_on_idle_session_rejected():
    session = create_session("drink")
    with pytest.raises(IllegalTransition):
        advance(session)


def test_dishwash_session_completes():
    session = create_session("dishwash", world_items={"plate": 1})
    submit_request(session, "Wash one dirty plate with rose flavor.")
    assert len(session.plan.steps) == 11
    run(session)
    assert session.state is SessionState.COMPLETED
    from stepchef.world import dishwash_complete

    assert dishwash_complete(session.world, {"plate": 1})


def test_world_revision_matches_recorded_mutations():
    session = create_session("drink")
    submit_request(session, "I'd order a strawberry matcha milk with boba.")
    run(session)
    assert session.state is SessionState.COMPLETED
    mutating = sum(
        1
        for ex in session.trace.steps
        for _, outcome in ex.invocations
        if outcome.ok and outcome.state_delta
    )
    assert session.world.revision == mutating  # no mutation outside dispatched skills


def test_event_log_replays_to_live_view():
    session = create_session("drink")
    submit_request(session, "Can I have a cup of strawberry milk?")
    advance(session)
    submit_request(session, "I want to add boba into the drink.")
    run(session)
    assert replay(session.events) == replayable_view(session_view(session))
