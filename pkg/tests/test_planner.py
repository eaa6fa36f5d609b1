"""Prune-count selection tests.

The reference behavior comes from oracles.enum_* which build both index
sets by explicit sorting and set intersection. Random cases mix
continuous scores with coarse-grid draws so ties are exercised.
"""

import numpy as np
import pytest

from oracles import enum_d_idx, enum_i_idx, enum_select, enum_tod
from todprune import planner
from todprune.diagnostics import LayerDiagnostics, ScoreReport
from todprune.errors import ContractError


def make_diag(u, e, layer_id=1):
    return LayerDiagnostics(
        layer_id=layer_id,
        utilization=np.asarray(u, dtype=np.float64),
        reconstruction=np.asarray(e, dtype=np.float64),
    )


def random_scores(rng, j_count):
    # half continuous, half drawn from a 5-point grid to force ties
    if rng.random() < 0.5:
        u = rng.normal(size=j_count) ** 2
        e = rng.normal(size=j_count)
    else:
        u = rng.integers(0, 5, size=j_count) / 4.0
        e = rng.integers(-2, 3, size=j_count) / 2.0
    return u, e


ALIGNED = make_diag([0.1, 0.2, 0.8, 0.9], [0.1, 0.2, 0.8, 0.9])


def test_index_sets_on_aligned_example():
    u = ALIGNED.utilization
    e = ALIGNED.reconstruction
    assert set(planner.d_idx(u, 3)) == {0, 1, 2} == enum_d_idx(u, 3)
    assert set(planner.i_idx(e, 3)) == {1, 2, 3} == enum_i_idx(e, 3)
    assert set(planner.d_idx(u, 2)) == {0, 1}
    assert set(planner.i_idx(e, 2)) == {2, 3}


def test_tod_on_aligned_example():
    assert planner.tod(ALIGNED, 3) == pytest.approx(2 / 3)
    assert planner.tod(ALIGNED, 2) == 0.0


def test_tod_boundaries():
    assert planner.tod(ALIGNED, 0) == 0.0
    assert planner.tod(ALIGNED, 4) == 1.0
    curve = planner.tod_curve(ALIGNED)
    assert curve.values[0] == 0.0
    assert curve.values[-1] == 1.0
    assert np.all((curve.values >= 0) & (curve.values <= 1))


def test_select_on_aligned_example():
    assert planner.select_m(ALIGNED, 0.1) == 2


def test_select_near_one_hits_survivor_clamp():
    # every m except J qualifies at alpha near 1; clamp leaves J-1
    assert planner.select_m(ALIGNED, 0.99) == 3


def test_select_anti_aligned_is_zero():
    # lowest-utilization units carry the highest errors: ToD(m) = 1 always
    diag = make_diag([1, 2, 3, 4, 5], [5, 4, 3, 2, 1])
    for m in range(1, 6):
        assert planner.tod(diag, m) == 1.0
    assert planner.select_m(diag, 0.1) == 0


def test_all_tied_layer_selects_zero():
    # every threshold admits the whole layer, so no m leaves a survivor
    diag = make_diag([1.0, 1.0, 1.0], [2.0, 2.0, 2.0])
    assert planner.select_m(diag, 0.5) == 0


def test_value_ties_inflate_beyond_m():
    u = np.array([1.0, 1.0, 2.0])
    assert set(planner.d_idx(u, 1)) == {0, 1}


def test_m_out_of_range():
    with pytest.raises(ValueError):
        planner.tod(ALIGNED, 5)
    with pytest.raises(ValueError):
        planner.tod(ALIGNED, -1)
    with pytest.raises(ValueError):
        planner.i_idx(ALIGNED.reconstruction, 0)


def test_alpha_out_of_range():
    for alpha in (0.0, 1.0, -0.5, 2.0):
        with pytest.raises(ValueError):
            planner.select_m(ALIGNED, alpha)


def test_matches_enumeration_oracle():
    rng = np.random.default_rng(21)
    for _ in range(2000):
        j_count = int(rng.integers(1, 13))
        u, e = random_scores(rng, j_count)
        diag = make_diag(u, e)
        for m in range(j_count + 1):
            assert planner.tod(diag, m) == enum_tod(u, e, m), (u, e, m)
            assert set(planner.d_idx(u, m)) == enum_d_idx(u, m)
            if m >= 1:
                assert set(planner.i_idx(e, m)) == enum_i_idx(e, m)
        alpha = float(rng.uniform(0.01, 0.99))
        assert planner.select_m(diag, alpha) == enum_select(u, e, alpha)


def increasing_transforms(rng):
    a = float(rng.uniform(0.5, 3.0))
    b = float(rng.uniform(-1.0, 1.0))
    return [
        lambda x: a * x + b,
        lambda x: np.exp(x / 4.0),
        lambda x: x**3,
        lambda x: np.arctan(x) * 2.0 + 0.001 * x,
    ]


def test_rank_invariance():
    rng = np.random.default_rng(22)
    for _ in range(100):
        j_count = int(rng.integers(2, 13))
        u, e = random_scores(rng, j_count)
        diag = make_diag(u, e)
        alpha = float(rng.uniform(0.05, 0.95))
        base_m = planner.select_m(diag, alpha)
        for transform in increasing_transforms(rng):
            # transform utilization only (shift keeps scores nonnegative)
            tu = transform(u)
            tu = tu - tu.min() if tu.min() < 0 else tu
            diag_u = make_diag(tu, e)
            # and reconstruction only
            diag_e = make_diag(u, transform(e))
            for m in range(j_count + 1):
                assert planner.tod(diag_u, m) == planner.tod(diag, m)
                assert planner.tod(diag_e, m) == planner.tod(diag, m)
                assert np.array_equal(planner.d_idx(tu, m), planner.d_idx(u, m))
            assert planner.select_m(diag_u, alpha) == base_m
            assert planner.select_m(diag_e, alpha) == base_m


def test_selected_count_nondecreasing_in_alpha():
    rng = np.random.default_rng(23)
    for _ in range(200):
        j_count = int(rng.integers(1, 13))
        u, e = random_scores(rng, j_count)
        diag = make_diag(u, e)
        alphas = np.sort(rng.uniform(0.01, 0.99, size=5))
        selected = [planner.select_m(diag, a) for a in alphas]
        assert selected == sorted(selected)


# --------------------------------------------------------- rate accounting


def test_chain_param_count():
    assert planner.chain_param_count([2, 3, 2]) == 17
    assert planner.chain_param_count([4, 3, 5]) == 3 * 5 + 5 * 4


def test_pruning_rate_hand_counts():
    # remove 1 of 3 hidden units in [2,3,2]: drop (2+1) own + 2 downstream
    assert planner.pruning_rate_for_removals([2, 3, 2], [1]) == pytest.approx(5 / 17)
    assert planner.pruning_rate_for_removals([2, 3, 2], [0]) == 0.0


def test_pruning_rate_composes_across_layers():
    # removing from consecutive layers shares the cross-term parameters
    sizes = [4, 6, 5, 3]
    before = planner.chain_param_count(sizes)
    after = planner.chain_param_count([4, 4, 3, 3])
    assert planner.pruning_rate_for_removals(sizes, [2, 2]) == pytest.approx(
        (before - after) / before
    )


def test_pruning_rate_contract_errors():
    with pytest.raises(ContractError):
        planner.pruning_rate_for_removals([2, 3, 2], [1, 1])
    with pytest.raises(ContractError):
        planner.pruning_rate_for_removals([2, 3, 2], [3])


# ----------------------------------------------------------- plan assembly


def two_layer_report(seed=30):
    rng = np.random.default_rng(seed)
    return ScoreReport(
        layers=[
            make_diag(rng.normal(size=6) ** 2, rng.normal(size=6), layer_id=1),
            make_diag(rng.normal(size=4) ** 2, rng.normal(size=4), layer_id=2),
        ]
    )


def test_build_plan_on_aligned_example():
    report = ScoreReport(layers=[ALIGNED])
    plan = planner.build_plan(report, 0.1, [3, 4, 2])
    assert plan.layers[0].m_hat == 2
    assert plan.layers[0].remove == (0, 1)
    assert plan.layers[0].achieved_tod == 0.0
    # removing 2 of 4: 2*(3+1) own plus 2*2 downstream columns of 32 total
    assert plan.pruning_rate == pytest.approx((2 * 4 + 2 * 2) / (4 * 4 + 2 * 5))


def test_build_plan_matches_enumeration_and_hand_rate():
    report = two_layer_report()
    sizes = [5, 6, 4, 3]
    alpha = 0.4
    plan = planner.build_plan(report, alpha, sizes)
    removed = []
    for diag, lp in zip(report.layers, plan.layers):
        m = enum_select(diag.utilization, diag.reconstruction, alpha)
        assert lp.m_hat == m
        assert set(lp.remove) == enum_d_idx(diag.utilization, m)
        assert lp.achieved_tod <= alpha
        removed.append(len(lp.remove))
    surviving = [sizes[0], sizes[1] - removed[0], sizes[2] - removed[1], sizes[3]]
    expected = 1 - planner.chain_param_count(surviving) / planner.chain_param_count(sizes)
    assert plan.pruning_rate == pytest.approx(expected)


def test_build_plan_all_zero_selection():
    diag = make_diag([1, 2, 3, 4, 5], [5, 4, 3, 2, 1])
    plan = planner.build_plan(ScoreReport(layers=[diag]), 0.1, [2, 5, 2])
    assert plan.layers[0].m_hat == 0
    assert plan.layers[0].remove == ()
    assert plan.pruning_rate == 0.0


def test_build_plan_size_chain_mismatch():
    report = two_layer_report()
    with pytest.raises(ContractError):
        planner.build_plan(report, 0.1, [5, 6, 3])  # missing one entry
    with pytest.raises(ContractError):
        planner.build_plan(report, 0.1, [5, 7, 4, 3])  # wrong hidden width


def test_sweep_monotone_and_deterministic():
    report = two_layer_report(seed=31)
    sizes = [5, 6, 4, 3]
    same = planner.sweep(report, [0.1, 0.1], sizes)
    assert planner.plan_to_json(same[0]) == planner.plan_to_json(same[1])
    plans = planner.sweep(report, [0.05, 0.3, 0.9], sizes)
    rates = [p.pruning_rate for p in plans]
    assert rates == sorted(rates)
    with pytest.raises(ValueError):
        planner.sweep(report, [], sizes)


def test_plan_json_roundtrip(tmp_path):
    plan = planner.build_plan(two_layer_report(), 0.4, [5, 6, 4, 3])
    path = tmp_path / "plan.json"
    planner.write_plan(path, plan)
    back = planner.read_plan(path)
    assert back == plan


def test_plan_json_nullable_fields(tmp_path):
    from todprune.planner import LayerPlan, PruningPlan

    plan = PruningPlan(
        tod_level=None,
        layers=[
            LayerPlan(layer_id=1, unit_count=4, m_hat=1, remove=(2,), achieved_tod=None)
        ],
        pruning_rate=0.1,
    )
    path = tmp_path / "baseline_plan.json"
    planner.write_plan(path, plan)
    back = planner.read_plan(path)
    assert back.tod_level is None
    assert back.layers[0].achieved_tod is None


def invalid_plans():
    from todprune.planner import LayerPlan, PruningPlan

    def lp(**kw):
        base = dict(layer_id=1, unit_count=4, m_hat=1, remove=(0,), achieved_tod=0.0)
        base.update(kw)
        return LayerPlan(**base)

    yield PruningPlan(0.1, [lp(remove=(1, 0))], 0.1)  # unsorted
    yield PruningPlan(0.1, [lp(remove=(0, 0))], 0.1)  # duplicate
    yield PruningPlan(0.1, [lp(remove=(4,))], 0.1)  # out of range
    yield PruningPlan(0.1, [lp(remove=(0, 1, 2, 3))], 0.1)  # no survivor
    yield PruningPlan(0.1, [lp(achieved_tod=0.5)], 0.1)  # exceeds level
    yield PruningPlan(0.1, [lp(), lp()], 0.1)  # duplicate layer ids
    yield PruningPlan(0.1, [lp()], 1.0)  # rate out of range
    yield PruningPlan(1.5, [lp()], 0.1)  # bad level


@pytest.mark.parametrize("plan", list(invalid_plans()))
def test_validate_plan_rejections(plan):
    with pytest.raises((ContractError, ValueError)):
        planner.validate_plan(plan)
