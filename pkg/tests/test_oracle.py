"""Oracle provider: request parsing, plan templates, step-to-skill mapping."""

import random

import pytest

from stepchef.assets import data_path, load_domain_assets
from stepchef.errors import UnmappableStep
from stepchef.planner import PlanContext, PlanStep, Plan, Refusal, plan, replan
from stepchef.providers import Message, OracleProvider
from stepchef.providers.oracle import (
    dish_plan_steps,
    drink_plan_steps,
    fold_dish_request,
    fold_drink_request,
    oracle_execute,
    oracle_parse_request,
    parse_dish_request,
    rack_rule_from_guidelines,
    rack_rule_from_tools,
)
from stepchef.skills import generate_schema, load_registry

CUP = "get an empty cup and bring it to the working area"
MILK = "pour the milk into the working cup"
PLACE = "put the working cup in the finished location"


@pytest.fixture(scope="module")
def drink():
    return load_domain_assets("drink")


@pytest.fixture(scope="module")
def dish():
    return load_domain_assets("dishwash")


def fresh_ctx(assets):
    return PlanContext(guidelines=assets.guidelines, system_prompt=assets.planner_prompt)


def plan_texts(assets, request):
    result = plan(fresh_ctx(assets), request, OracleProvider(assets.lexicon))
    assert isinstance(result, Plan), result
    return result.texts()


# --- drink request parsing --------------------------------------------------


def test_parse_strawberry_matcha_boba(drink):
    p = oracle_parse_request("I'd order a strawberry matcha milk with boba.", drink.guidelines, drink.lexicon)
    assert p.flavors == ["strawberry jam", "matcha powder"]
    assert p.wants_boba
    assert p.unknown_mentions == []


def test_parse_plain_milk(drink):
    p = oracle_parse_request("I would like to order a cup of milk.", drink.guidelines, drink.lexicon)
    assert p.flavors == [] and not p.wants_boba


def test_parse_passion_fruit_unknown(drink):
    p = oracle_parse_request("I would like a cup of passion fruit milk.", drink.guidelines, drink.lexicon)
    assert p.unknown_mentions == ["passion fruit jam"]


def test_parse_negation(drink):
    p = oracle_parse_request(
        "Can I just get matcha boba milk and no strawberry?", drink.guidelines, drink.lexicon
    )
    assert p.flavors == ["matcha powder"] and p.wants_boba


# --- drink plans --------------------------------------------------------------


def test_plan_pure_milk_matches_recipe(drink):
    assert plan_texts(drink, "I would like to order a cup of milk.") == (
        drink.guidelines.recipes["Pure milk"].steps
    )


def test_plan_boba_milk_four_steps(drink):
    texts = plan_texts(drink, "I want to order a boba milk.")
    assert texts == [CUP, "add boba to the working cup", MILK, PLACE]


@pytest.mark.parametrize(
    "request_text,length",
    [
        ("I would like to order a cup of milk.", 3),
        ("I want to order a boba milk.", 4),
        ("Can I have a cup of strawberry milk?", 4),
        ("I want a matcha latte.", 4),
        ("May I have a cup of milk with taro?", 4),
        ("I want taro milk with boba.", 5),
        ("Can I get a strawberry boba milk?", 5),
        ("I want to order a strawberry matcha milk.", 5),
        ("I'd order a strawberry matcha milk with boba.", 6),
    ],
)
def test_plan_lengths_follow_three_plus_k(drink, request_text, length):
    assert len(plan_texts(drink, request_text)) == length


def test_boba_always_precedes_flavors(drink):
    texts = plan_texts(drink, "I want taro milk with boba.")
    assert texts == [CUP, "add boba to the working cup", "add taro to the working cup", MILK, PLACE]


def test_plan_refusal(drink):
    result = plan(
        fresh_ctx(drink), "I would like a cup of passion fruit milk.", OracleProvider(drink.lexicon)
    )
    assert isinstance(result, Refusal)
    assert result.message == "Passion fruit jam is not available"


def test_plan_length_law_random_subsets(drink):
    rng = random.Random(11)
    flavors = ["strawberry jam", "mango jam", "matcha powder", "taro", "blueberry"]
    for _ in range(50):
        chosen = rng.sample(flavors, k=rng.randint(0, 4))
        boba = rng.random() < 0.5
        mention = [f.replace(" jam", "").replace(" powder", "") for f in chosen]
        request = "I want a milk with " + ", ".join(mention + (["boba"] if boba else [])) + "."
        if not mention and not boba:
            request = "I want a cup of milk."
        texts = plan_texts(drink, request)
        assert len(texts) == 3 + len(chosen) + (1 if boba else 0)


# --- drink replanning ---------------------------------------------------------


def run_replan(assets, first_request, completed_texts, new_request):
    ctx = fresh_ctx(assets)
    provider = OracleProvider(assets.lexicon)
    first = plan(ctx, first_request, provider)
    assert isinstance(first, Plan)
    ctx.completed = [PlanStep(index=i, text=t) for i, t in enumerate(completed_texts, 1)]
    return replan(ctx, new_request, provider)


def test_replan_fig4_taro_boba(drink):
    result = run_replan(
        drink, "May I have a cup of taro milk?", [CUP], "May I change to a taro boba milk?"
    )
    assert result.texts() == [
        "add boba to the working cup",
        "add taro to the working cup",
        MILK,
        PLACE,
    ]


def test_replan_empty_completed_is_fresh_plan(drink):
    result = run_replan(drink, "Can I have a cup of strawberry milk?", [], "I want to add boba into the drink.")
    assert result.texts() == [
        CUP,
        "add boba to the working cup",
        "add strawberry jam to the working cup",
        MILK,
        PLACE,
    ]


def test_replan_contradiction_discards(drink):
    result = run_replan(
        drink,
        "Can I have a cup of strawberry milk?",
        [CUP, "add strawberry jam to the working cup"],
        "Sorry, can I reorder a plain boba milk?",
    )
    assert result.texts() == [
        "discard the current cup",
        CUP,
        "add boba to the working cup",
        MILK,
        PLACE,
    ]


def test_replan_keeps_compatible_progress(drink):
    result = run_replan(
        drink,
        "Can I get a strawberry boba milk?",
        [CUP, "add boba to the working cup"],
        "I want to add mango into the drink.",
    )
    assert result.texts() == [
        "add strawberry jam to the working cup",
        "add mango jam to the working cup",
        MILK,
        PLACE,
    ]


def test_fold_replace(drink):
    prev = oracle_parse_request("May I have a cup of milk with taro?", drink.guidelines, drink.lexicon)
    merged = fold_drink_request(prev, "Can I replace the taro with strawberry?", drink.guidelines, drink.lexicon)
    assert merged.flavors == ["strawberry jam"] and not merged.wants_boba


def test_fold_without(drink):
    prev = oracle_parse_request("I want a matcha latte.", drink.guidelines, drink.lexicon)
    merged = fold_drink_request(
        prev, "Sorry, I want boba bilk without matcha instead.", drink.guidelines, drink.lexicon
    )
    assert merged.flavors == [] and merged.wants_boba


# --- dishwashing --------------------------------------------------------------


def test_parse_dish_counts(dish):
    p = parse_dish_request("Please wash 2 forks and one bowl.", dish.guidelines, dish.lexicon)
    assert p.items == {"fork": 2, "bowl": 1}
    assert p.flavor == "original detergent"


def test_parse_dish_all_with_count(dish):
    p = parse_dish_request("Wash all forks, there are 3.", dish.guidelines, dish.lexicon)
    assert p.items == {"fork": 3}


def test_parse_dish_flavor(dish):
    p = parse_dish_request("Wash one dirty plate with rose flavor.", dish.guidelines, dish.lexicon)
    assert p.items == {"plate": 1} and p.flavor == "rose detergent"


def test_parse_dish_lemon_unknown(dish):
    p = parse_dish_request("Wash one dirty plate with lemon flavor", dish.guidelines, dish.lexicon)
    assert p.unknown_mentions == ["lemon detergent"]


def test_fold_wash_another(dish):
    prev = parse_dish_request("Can you wash 2 plates?", dish.guidelines, dish.lexicon)
    merged = fold_dish_request(prev, "Can you wash another?", dish.guidelines, dish.lexicon)
    assert merged.items == {"plate": 3}


def test_rack_rule_from_guidelines(dish):
    rule = rack_rule_from_guidelines(dish.guidelines, dish.lexicon)
    assert rule.rack_for("fork", dish.lexicon) == 1
    assert rule.rack_for("bowl", dish.lexicon) == 2
    assert rule.rack_for("cup", dish.lexicon) == 2
    assert rule.rack_for("plate", dish.lexicon) == 3
    assert rule.rack_for("knife", dish.lexicon) == 1  # small utensil


def test_dish_plan_eleven_steps_matches_recipe(dish):
    texts = plan_texts(dish, "Wash one dirty plate with rose flavor.")
    assert len(texts) == 11
    assert texts[0] == "grasp the dirty plate"
    assert texts[4] == "put the plate on the third rack"
    assert texts[5] == "add rose detergent into the detergent dispenser"
    assert texts[10] == "return the clean plate to the finished location"


@pytest.mark.parametrize(
    "request_text,length",
    [
        ("Wash one dirty plate with rose flavor.", 11),
        ("Please wash 1 dirty bowl with rose flavor.", 11),
        ("Please clean the 2 dirty cups.", 14),
        ("Wash all forks, there are 3.", 17),
        ("Please wash 2 forks and one bowl.", 17),
        ("May you wash 2 cups and 2 plates?", 20),
        ("Please wash 2 fork, 2 plate and 2 bowl.", 26),
        ("Wash 2 plates,1 bowl, 1 fork and 1 knife with rose flavor.", 23),
    ],
)
def test_dish_plan_lengths_follow_3n_plus_8(dish, request_text, length):
    assert len(plan_texts(dish, request_text)) == length


def test_dish_rack_assignments_in_plan(dish):
    texts = plan_texts(dish, "Please wash 2 forks and one bowl.")
    assert "put the fork on the first rack" in texts
    assert "put the bowl on the second rack" in texts
    texts = plan_texts(dish, "Wash 2 plates,1 bowl, 1 fork and 1 knife with rose flavor.")
    assert "put the knife on the first rack" in texts
    assert "put the plate on the third rack" in texts


def test_dish_refusal_lemon(dish):
    result = plan(
        fresh_ctx(dish), "Wash one dirty plate with lemon flavor", OracleProvider(dish.lexicon)
    )
    assert isinstance(result, Refusal)
    assert result.message == "Lemon detergent is not available"


def test_dish_length_law_random_multisets(dish):
    rng = random.Random(3)
    classes = ["plate", "fork", "bowl", "cup", "knife"]
    for _ in range(50):
        chosen = {cls: rng.randint(1, 3) for cls in rng.sample(classes, k=rng.randint(1, 4))}
        parse = parse_dish_request("wash things", dish.guidelines, dish.lexicon)
        parse.items = chosen
        steps = dish_plan_steps(parse, rack_rule_from_guidelines(dish.guidelines, dish.lexicon), dish.lexicon)
        assert len(steps) == 3 * sum(chosen.values()) + 8


def test_dish_replan_resumes_template(dish):
    result = run_replan(
        dish, "Can you wash 2 plates?", ["grasp the first dirty plate"], "Can you wash another?"
    )
    texts = result.texts()
    assert len(texts) == 16  # 17-step merged template minus 1 completed
    assert texts[0] == "remove large particle from the plate"
    assert "grasp the third dirty plate" in texts


def test_history_grows_monotonically_across_replans(drink):
    ctx = fresh_ctx(drink)
    provider = OracleProvider(drink.lexicon)
    plan(ctx, "Can I have a cup of strawberry milk?", provider)
    lengths = [len(ctx.history)]
    frozen = [
        (m.role, m.content) for m in ctx.history
    ]
    ctx.completed = [PlanStep(index=1, text=CUP)]
    replan(ctx, "I want to add boba into the drink.", provider)
    lengths.append(len(ctx.history))
    replan(ctx, "Can I replace the strawberry with mango?", provider)
    lengths.append(len(ctx.history))
    assert lengths == sorted(set(lengths)), "history length strictly increases"
    assert [(m.role, m.content) for m in ctx.history[: len(frozen)]] == frozen


# --- executor mapping ---------------------------------------------------------


@pytest.fixture(scope="module")
def dish_tools():
    return generate_schema(load_registry(data_path("skills", "dishwash.json")), "dishwash")


def test_execute_add_boba(drink):
    seq = oracle_execute("add boba to the working cup", [], [], drink.lexicon)
    assert [c.name for c in seq] == ["scoop_to_location", "step_complete"]
    assert seq[0].arguments == {"ingredient": "boba", "location": "working_area"}


def test_execute_get_cup_uses_scene_position(drink):
    scene = [("empty cup", 0.30, 0.40), ("milk carton", 0.05, 0.40)]
    seq = oracle_execute(CUP, scene, [], drink.lexicon)
    assert seq[0].name == "grasp_cup"
    assert seq[0].arguments == {"x": 0.30, "y": 0.40}
    assert [c.name for c in seq] == ["grasp_cup", "place_cup", "step_complete"]


def test_execute_out_of_grammar(drink):
    with pytest.raises(UnmappableStep):
        oracle_execute("recite a poem", [], [], drink.lexicon)


def test_execute_missing_cup_raises(drink):
    with pytest.raises(UnmappableStep):
        oracle_execute(CUP, [], [], drink.lexicon)


def test_execute_put_on_rack_self_pulls(dish, dish_tools):
    seq = oracle_execute("put the fork on the first rack", [], dish_tools, dish.lexicon)
    assert [c.name for c in seq] == ["pull_out_rack", "put_item_on_rack", "step_complete"]
    assert seq[0].arguments == {"rack": "1"}


def test_execute_pull_rack_uses_last_grasp(dish, dish_tools):
    seq = oracle_execute(
        "pull out the rack", [], dish_tools, dish.lexicon, completed=["grasp the dirty fork"]
    )
    assert seq[0].arguments == {"rack": "1"}
    seq = oracle_execute(
        "pull out the rack", [], dish_tools, dish.lexicon, completed=["grasp the first dirty plate"]
    )
    assert seq[0].arguments == {"rack": "3"}


def test_rack_rule_from_tool_docs(dish, dish_tools):
    rule = rack_rule_from_tools(dish_tools, dish.lexicon)
    assert rule.rack_for("fork", dish.lexicon) == 1
    assert rule.rack_for("cup", dish.lexicon) == 2
    assert rule.rack_for("plate", dish.lexicon) == 3


def test_execute_verify_inspects_each_class(dish, dish_tools):
    seq = oracle_execute(
        "make sure the plates and bowl are clean and dry, otherwise go into step 12)",
        [], dish_tools, dish.lexicon,
    )
    assert [c.name for c in seq] == ["inspect_item", "inspect_item", "step_complete"]
    assert seq[0].arguments == {"label": "plate"}
    assert seq[1].arguments == {"label": "bowl"}


# --- provider-level determinism ------------------------------------------------


def test_oracle_determinism(drink):
    provider = OracleProvider(drink.lexicon)
    history = [
        Message(role="system", content="MODE: PLANNER"),
        Message(
            role="user",
            content=f"Task guidelines:\n{drink.guidelines.raw_text}\n\nUser request: I want to order a boba milk.",
        ),
    ]
    first = provider.complete(history, [])
    second = provider.complete(history, [])
    assert first == second
    assert first.text == (
        "1) get an empty cup and bring it to the working area\n"
        "2) add boba to the working cup\n"
        "3) pour the milk into the working cup\n"
        "4) put the working cup in the finished location"
    )
