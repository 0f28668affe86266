import json

import numpy as np
import pytest

from hsictune.space import (
    MAIN_GROUP,
    ConditionalRule,
    SearchSpace,
    SpaceError,
    boolean_param,
    build_groups,
    categorical_param,
    cdf_transform,
    continuous_param,
    integer_param,
    normalize_trials,
    parse_space,
    restrict,
    sample_configuration,
    space_to_dict,
)


def make_space(params, rules=()):
    return SearchSpace(tuple(params), tuple(rules))


def dropout_space():
    return make_space(
        [
            continuous_param("lr", 1e-6, 1e-2, scale="log"),
            boolean_param("dropout"),
            continuous_param("dropout_rate", 0.0, 1.0),
        ],
        [ConditionalRule("dropout_rate", "dropout", (True,))],
    )


# -- parsing -----------------------------------------------------------------


def test_parse_single_log_param():
    doc = {"params": [{"name": "lr", "kind": "continuous", "lo": 1e-6, "hi": 1e-2,
                       "scale": "log"}]}
    space = parse_space(json.dumps(doc))
    assert len(space.params) == 1
    p = space.params[0]
    assert p.kind == "continuous" and p.scale == "log"
    assert p.lo == 1e-6 and p.hi == 1e-2


def test_parse_conditional_rule_gives_two_groups():
    doc = {
        "params": [
            {"name": "dropout", "kind": "boolean"},
            {"name": "dropout_rate", "kind": "continuous", "lo": 0.0, "hi": 1.0},
        ],
        "rules": [{"child": "dropout_rate", "parent": "dropout", "when": [True]}],
    }
    space = parse_space(json.dumps(doc))
    groups = build_groups(space)
    assert [g.id for g in groups] == [MAIN_GROUP, "dropout_rate"]


def test_parse_two_level_conditioning_rejected():
    doc = {
        "params": [
            {"name": "a", "kind": "boolean"},
            {"name": "b", "kind": "boolean"},
            {"name": "c", "kind": "continuous", "lo": 0, "hi": 1},
        ],
        "rules": [
            {"child": "b", "parent": "a", "when": [True]},
            {"child": "c", "parent": "b", "when": [True]},
        ],
    }
    with pytest.raises(SpaceError, match="two-level"):
        parse_space(json.dumps(doc))


def test_parse_rejects_unknown_keys():
    with pytest.raises(SpaceError, match="unknown top-level"):
        parse_space(json.dumps({"params": [], "extra": 1}))
    doc = {"params": [{"name": "x", "kind": "continuous", "lo": 0, "hi": 1,
                       "wat": True}]}
    with pytest.raises(SpaceError, match="unknown keys"):
        parse_space(json.dumps(doc))


def test_parse_syntax_error_reports_location():
    with pytest.raises(SpaceError, match="line 1"):
        parse_space("{not json")


def test_weights_must_sum_to_one():
    with pytest.raises(SpaceError, match="sum to 1"):
        categorical_param("act", ("a", "b"), (0.5, 0.6))


def test_unknown_parent_rejected():
    with pytest.raises(SpaceError, match="unknown parent"):
        make_space(
            [boolean_param("a"), continuous_param("b", 0, 1)],
            [ConditionalRule("b", "nope", (True,))],
        )


def test_duplicate_child_rule_rejected():
    with pytest.raises(SpaceError, match="two rules"):
        make_space(
            [boolean_param("a"), boolean_param("b"),
             continuous_param("c", 0, 1)],
            [ConditionalRule("c", "a", (True,)),
             ConditionalRule("c", "b", (True,))],
        )


# -- sampling ----------------------------------------------------------------


def test_sampling_is_deterministic():
    space = dropout_space()
    a = [sample_configuration(space, np.random.default_rng(5)) for _ in range(10)]
    b = [sample_configuration(space, np.random.default_rng(5)) for _ in range(10)]
    assert a[0] == b[0]


def test_child_present_iff_parent_activated():
    space = dropout_space()
    rng = np.random.default_rng(0)
    for _ in range(500):
        config = sample_configuration(space, rng)
        assert ("dropout_rate" in config) == (config["dropout"] is True)
        space.validate_config(config)


def test_uniform_value_in_bounds():
    space = make_space([continuous_param("x", 0.0, 2.0)])
    rng = np.random.default_rng(11)
    vals = [sample_configuration(space, rng)["x"] for _ in range(100)]
    assert all(0.0 <= v <= 2.0 for v in vals)


def test_categorical_frequencies_near_weights():
    space = make_space([categorical_param("c", ("a", "b", "c", "d"))])
    rng = np.random.default_rng(2)
    draws = [sample_configuration(space, rng)["c"] for _ in range(10_000)]
    for level in "abcd":
        freq = sum(d == level for d in draws) / 10_000
        assert abs(freq - 0.25) < 0.02


# -- cdf ranks ---------------------------------------------------------------


def test_linear_cdf_exact():
    spec = continuous_param("x", 0.0, 2.0)
    assert cdf_transform(spec, 0.5, np.random.default_rng(0)) == 0.25


def test_log_cdf_midpoint():
    spec = continuous_param("lr", 1e-6, 1e-2, scale="log")
    r = cdf_transform(spec, 1e-4, np.random.default_rng(0))
    assert abs(r - 0.5) < 1e-12


def test_categorical_rank_lands_in_level_band():
    spec = categorical_param("c", ("a", "b", "c", "d"))
    rng = np.random.default_rng(3)
    for _ in range(200):
        r = cdf_transform(spec, "c", rng)
        assert 0.50 <= r < 0.75


def test_out_of_domain_names_parameter():
    spec = continuous_param("x", 0.0, 2.0)
    with pytest.raises(SpaceError, match="x"):
        cdf_transform(spec, 3.0, np.random.default_rng(0))


@pytest.mark.parametrize(
    "spec",
    [
        continuous_param("x", 0.0, 2.0),
        continuous_param("lr", 1e-6, 1e-2, scale="log"),
        integer_param("n", 1, 10),
        categorical_param("c", ("a", "b", "c"), (0.2, 0.5, 0.3)),
        boolean_param("b", weight_true=0.3),
    ],
)
def test_rank_marginal_is_uniform(spec):
    # Kolmogorov-Smirnov style check against the uniform CDF
    space = make_space([spec])
    rng = np.random.default_rng(17)
    ranks = np.empty(10_000)
    for i in range(10_000):
        v = sample_configuration(space, rng)[spec.name]
        ranks[i] = cdf_transform(spec, v, rng)
    ranks.sort()
    grid = (np.arange(1, 10_001)) / 10_000
    assert np.max(np.abs(ranks - grid)) < 0.02


# -- normalization -----------------------------------------------------------


def _fake_trials(space, n, seed):
    rng = np.random.default_rng(seed)
    return [sample_configuration(space, rng) for _ in range(n)]


def test_normalize_all_active_has_no_mask():
    space = make_space([continuous_param("x", 0, 1), integer_param("n", 1, 4)])
    trials = _fake_trials(space, 3, 0)
    m = normalize_trials(space, trials, seed=1)
    assert all(m.mask(name).all() for name in m.names)
    for name in m.names:
        col = m.column(name)
        assert np.all((col >= 0) & (col < 1))


def test_normalize_masks_inactive_child():
    space = dropout_space()
    trials = [
        {"lr": 1e-4, "dropout": False},
        {"lr": 1e-3, "dropout": True, "dropout_rate": 0.5},
    ]
    m = normalize_trials(space, trials, seed=1)
    assert not m.mask("dropout_rate")[0]
    assert m.mask("dropout_rate")[1]
    assert np.isnan(m.column("dropout_rate")[0])


def test_normalize_is_bit_reproducible():
    space = dropout_space()
    trials = _fake_trials(space, 50, 4)
    a = normalize_trials(space, trials, seed=9)
    b = normalize_trials(space, trials, seed=9)
    for name in a.names:
        assert np.array_equal(a.column(name), b.column(name), equal_nan=True)


def test_normalize_rejects_mismatched_config():
    space = make_space([continuous_param("x", 0, 1)])
    with pytest.raises(SpaceError):
        normalize_trials(space, [{"x": 5.0}], seed=0)


# -- groups ------------------------------------------------------------------


def test_no_rules_single_group():
    space = make_space([continuous_param("x", 0, 1), boolean_param("b")])
    groups = build_groups(space)
    assert len(groups) == 1
    assert groups[0].id == MAIN_GROUP
    assert set(groups[0].members) == {"x", "b"}


def test_two_parents_give_three_groups_no_joint():
    space = make_space(
        [
            boolean_param("dropout"),
            categorical_param("optimizer", ("adam", "sgd")),
            continuous_param("dropout_rate", 0, 1),
            continuous_param("momentum", 0.5, 0.99),
        ],
        [
            ConditionalRule("dropout_rate", "dropout", (True,)),
            ConditionalRule("momentum", "optimizer", ("sgd",)),
        ],
    )
    groups = build_groups(space)
    assert len(groups) == 3
    ids = {g.id for g in groups}
    assert ids == {MAIN_GROUP, "dropout_rate", "momentum"}
    for g in groups:
        if g.id == "dropout_rate":
            assert "momentum" not in g.members
        if g.id == "momentum":
            assert "dropout_rate" not in g.members


def test_same_parent_same_activation_children_merge():
    space = make_space(
        [
            categorical_param("optimizer", ("adam", "nadam", "sgd")),
            continuous_param("beta_1", 0.8, 1.0),
            continuous_param("beta_2", 0.8, 1.0),
            boolean_param("amsgrad"),
        ],
        [
            ConditionalRule("beta_1", "optimizer", ("adam", "nadam")),
            ConditionalRule("beta_2", "optimizer", ("adam", "nadam")),
            ConditionalRule("amsgrad", "optimizer", ("adam",)),
        ],
    )
    groups = build_groups(space)
    ids = {g.id: g for g in groups}
    assert set(ids) == {MAIN_GROUP, "beta_1+beta_2", "amsgrad"}
    # amsgrad's subpopulation also has both betas active
    assert {"beta_1", "beta_2", "amsgrad"} <= set(ids["amsgrad"].members)
    assert "amsgrad" not in ids["beta_1+beta_2"].members


def test_groups_do_not_depend_on_declaration_order():
    params = [
        boolean_param("dropout"),
        continuous_param("dropout_rate", 0, 1),
        continuous_param("lr", 1e-6, 1e-2, scale="log"),
    ]
    rules = [ConditionalRule("dropout_rate", "dropout", (True,))]
    a = build_groups(make_space(params, rules))
    b = build_groups(make_space(params[::-1], rules))
    assert [g.id for g in a] == [g.id for g in b]
    for ga, gb in zip(a, b):
        assert set(ga.members) == set(gb.members)


# -- restriction -------------------------------------------------------------


def test_restrict_integer_range():
    space = make_space([integer_param("n_layers", 1, 10)])
    out = restrict(space, "n_layers", (3, 10))
    spec = out.param("n_layers")
    assert (spec.lo, spec.hi) == (3, 10)


def test_restrict_categorical_renormalizes():
    space = make_space(
        [categorical_param("act", ("elu", "relu", "tanh", "sigmoid"))]
    )
    out = restrict(space, "act", ("elu", "relu", "tanh"))
    spec = out.param("act")
    assert spec.levels == ("elu", "relu", "tanh")
    assert abs(sum(spec.weights) - 1.0) < 1e-12
    assert all(abs(w - 1 / 3) < 1e-12 for w in spec.weights)


def test_restrict_to_same_domain_is_identity():
    space = make_space([integer_param("n", 1, 10)])
    out = restrict(space, "n", (1, 10))
    assert space_to_dict(out) == space_to_dict(space)


def test_restrict_empty_or_oversized_rejected():
    space = make_space([integer_param("n", 1, 10)])
    with pytest.raises(SpaceError):
        restrict(space, "n", (0, 10))
    with pytest.raises(SpaceError):
        restrict(space, "n", (7, 7))


def test_restrict_then_sample_stays_inside():
    space = make_space([integer_param("n", 1, 10),
                        categorical_param("c", ("a", "b", "c"))])
    out = restrict(restrict(space, "n", (4, 10)), "c", ("b", "c"))
    rng = np.random.default_rng(8)
    for _ in range(300):
        cfg = sample_configuration(out, rng)
        assert 4 <= cfg["n"] <= 10
        assert cfg["c"] in ("b", "c")
