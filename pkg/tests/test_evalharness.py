"""Plan scoring semantics and suite report plumbing."""

import json

import pytest

from stepchef.evalharness import load_suite, run_suite, score_plan
from stepchef.planner import PlanStep

CUP = "get an empty cup and bring it to the working area"
BOBA = "add boba to the working cup"
MATCHA = "add matcha powder to the working cup"
MILK = "pour the milk into the working cup"
PLACE = "put the working cup in the finished location"
STIR = "stir the mixture until the matcha powder is well mixed"
DISCARD = "discard the current cup"


def steps(texts):
    return [PlanStep(index=i, text=t) for i, t in enumerate(texts, 1)]


def test_identical_plans_full_score():
    plan = steps([CUP, BOBA, MILK, PLACE])
    assert score_plan(plan, plan) == (4, 4, 0)


def test_swapped_middle_steps_score_two_of_four():
    truth = steps([CUP, BOBA, MILK, PLACE])
    generated = steps([CUP, MILK, BOBA, PLACE])
    assert score_plan(generated, truth) == (2, 4, 0)


def test_inserted_stir_counts_as_extra_only():
    truth = steps([DISCARD, CUP, BOBA, MATCHA, MILK, PLACE])
    generated = steps([DISCARD, CUP, BOBA, MATCHA, MILK, STIR, PLACE])
    assert score_plan(generated, truth) == (6, 6, 1)


def test_score_symmetric_identity():
    for texts in ([CUP], [CUP, MILK, PLACE], [DISCARD, CUP, BOBA, MILK, PLACE]):
        plan = steps(texts)
        n = len(texts)
        assert score_plan(plan, plan) == (n, n, 0)


def test_unparsed_steps_compared_by_text():
    truth = steps(["recite a poem"])
    assert score_plan(steps(["Recite a poem."]), truth) == (1, 1, 0)
    assert score_plan(steps(["sing a song"]), truth) == (0, 1, 0)


def test_suite_fixtures_load():
    drinks, _ = load_suite("drinks")
    assert len(drinks) == 10
    assert sum(1 for c in drinks if c.refusal_missing) == 1
    replan, boundaries = load_suite("replan")
    assert len(replan) == 5 and boundaries == [0, 1, 2]
    dishwash, _ = load_suite("dishwash")
    assert len(dishwash) == 10
    lengths = sorted(len(c.ground_truth) for c in dishwash if c.ground_truth)
    assert lengths == [11, 11, 14, 17, 17, 17, 20, 23, 26]


def test_unknown_suite():
    with pytest.raises(ValueError):
        load_suite("laundry")


def test_drinks_suite_oracle_self_consistency():
    result = run_suite("drinks")
    assert result.report.planning_rate == 1.0
    assert result.report.success_count == 10
    assert all(r.replay_ok for r in result.results)


def test_report_determinism_bytes():
    a = run_suite("drinks").report
    b = run_suite("drinks").report
    assert a.to_text() == b.to_text()
    assert json.dumps(a.to_json_dict(), sort_keys=True) == json.dumps(b.to_json_dict(), sort_keys=True)


def test_report_text_has_total_line():
    report = run_suite("drinks").report
    assert "Total: planning 100.0%, success 10/10" in report.to_text()


def test_parallel_mode_matches_sequential():
    sequential = run_suite("drinks").report
    parallel = run_suite("drinks", parallel=True).report
    assert parallel.to_text() == sequential.to_text()
