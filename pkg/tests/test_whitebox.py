import math

import pytest

from helpers import random_fixture, stump_trees
from seqauction.auction import ItemMultiset
from seqauction.features import FeatureSchema
from seqauction.reductions import brute_force_optimum, multiset_permutations
from seqauction.regressors import LinearModel, evaluate_ordering
from seqauction.whitebox import (assignment_for_ordering, check_assignment, compute_bounds, encode, lp_text,
                                 objective_value, parse_lp, read_lp, solve, write_lp)


def test_sold_bounds_enumerated():
    ms = ItemMultiset({1: 1, 2: 2})
    b = compute_bounds(ms, stump_trees())
    # at position 3 the orderings 122, 212, 221 have 2, 1, 1 earlier r2 items
    assert b.get("sold_r2", 3) == (1, 2)
    for i in (1, 2, 3):
        assert b.get("index", i) == (i, i)


def test_value_range_of_second_type():
    b = compute_bounds(ItemMultiset({1: 1, 2: 2}), stump_trees())
    lo = min(b.vrange[(i, 2)][0] for i in (1, 2, 3))
    hi = max(b.vrange[(i, 2)][1] for i in (1, 2, 3))
    assert (lo, hi) == (0, 5)


def test_bounds_contain_every_ordering():
    for seed in range(15):
        models, ms = random_fixture(seed, 5)
        schema = next(iter(models.values())).schema
        b = compute_bounds(ms, models)
        from seqauction.features import PrefixState
        for order in multiset_permutations(ms):
            st = PrefixState(schema, ms)
            for i, r in enumerate(order, start=1):
                x = st.vector(r)
                for f, v in enumerate(x):
                    assert b.lo[i][f] - 1e-9 <= v <= b.hi[i][f] + 1e-9
                v = models[r].predict(x)
                lo, hi = b.vrange[(i, r)]
                assert lo - 1e-9 <= v <= hi + 1e-9
                st.advance(r, v)


def test_small_mip_optimum():
    res = solve(stump_trees(), ItemMultiset({1: 1, 2: 2}))
    assert (res.objective, res.ordering, res.status) == (12, [1, 2, 2], "optimal")
    res = solve(stump_trees(), ItemMultiset({1: 1, 2: 3}))
    assert res.objective == 16 and res.ordering[0] == 1


def test_solve_accepts_encoded_model():
    mip = encode(stump_trees(), ItemMultiset({1: 1, 2: 2}))
    assert solve(mip).objective == 12


def test_loose_bounds_coefficient():
    text = lp_text(encode(stump_trees(), ItemMultiset({1: 1, 2: 2}), loose=True))
    assert "99.5 z_1_1_r1" in text
    assert "x_1_r2 + 99.5 z_2_1_r1 <= 100" in text


def test_lp_roundtrip(tmp_path):
    mip = encode(stump_trees(), ItemMultiset({1: 1, 2: 2}))
    path = write_lp(mip, tmp_path / "m.lp")
    back = read_lp(path)
    assert len(back.constraints) == len(mip.constraints)
    assert back.bounds == pytest.approx(mip.bounds)
    assert set(back.binaries) == set(mip.binaries)
    assert lp_text(back) == lp_text(mip)


def test_lp_format_details():
    text = lp_text(encode(stump_trees(), ItemMultiset({1: 1, 2: 2})))
    lines = text.splitlines()
    for head in ("Maximize", "Subject To", "Bounds", "Binaries", "End"):
        assert head in lines
    assert "e+" not in text and "e-" not in text
    assert all(line.split(":")[0].strip().startswith("c") for line in
               lines[lines.index("Subject To") + 1:lines.index("Bounds")])


def test_linear_lp_has_indicators():
    schema = FeatureSchema([1, 2])
    models = {1: LinearModel(schema, {schema.index_of["sum_r2"]: -0.25}, 6.0, 0.0, 1),
              2: LinearModel(schema, {schema.index_of["index"]: 1.0}, 1.0, 0.0, 2)}
    ms = ItemMultiset({1: 2, 2: 1})
    text = lp_text(encode(models, ms))
    assert "x_1_r1 = 1 -> " in text and "x_1_r1 = 0 -> v_1_r1 = 0" in text
    assert len(parse_lp(text).constraints) == len(encode(models, ms).constraints)


def test_empty_objective_rejected():
    mip = encode(stump_trees(), ItemMultiset({1: 1}))
    mip.objective.clear()
    with pytest.raises(ValueError):
        lp_text(mip)


def test_single_item():
    models = stump_trees()
    res = solve(models, ItemMultiset({2: 1}))
    assert res.ordering == [2] and res.objective == 5


def test_zero_coefficient_linear_optimum():
    schema = FeatureSchema([1, 2])
    models = {1: LinearModel(schema, {}, 3.0, 0.0, 1), 2: LinearModel(schema, {}, 2.5, 0.0, 2)}
    ms = ItemMultiset({1: 2, 2: 3})
    assert solve(models, ms).objective == pytest.approx(2 * 3.0 + 3 * 2.5)


def test_faithfulness_small_fixtures():
    for seed in range(20):
        models, ms = random_fixture(1000 + seed, 5)
        mip = encode(models, ms)
        for order in multiset_permutations(ms):
            vals = assignment_for_ordering(mip, order)
            assert check_assignment(mip, vals) == []
            assert objective_value(mip, vals) == pytest.approx(evaluate_ordering(models, order, ms), abs=1e-6)


def test_wrong_assignment_detected():
    mip = encode(stump_trees(), ItemMultiset({1: 1, 2: 2}))
    vals = assignment_for_ordering(mip, [1, 2, 2])
    vals["v_2_r2"] = 5.0  # claims the first-position value at position 2
    assert check_assignment(mip, vals)


def test_solver_matches_brute_force_small():
    for seed in range(12):
        models, ms = random_fixture(2000 + seed, 6)
        res = solve(models, ms, time_limit=60, incumbent_seed_count=3, seed=seed)
        bf = brute_force_optimum(lambda o: evaluate_ordering(models, o, ms), ms)
        assert res.status == "optimal"
        assert res.objective == pytest.approx(bf.value, abs=1e-9)
        assert evaluate_ordering(models, res.ordering, ms) == pytest.approx(res.objective)


def test_node_bounds_admissible():
    # every bound reported for a partial ordering dominates all of its completions
    for seed in range(8):
        models, ms = random_fixture(3000 + seed, 5)
        values = {tuple(o): evaluate_ordering(models, o, ms) for o in multiset_permutations(ms)}
        seen = []
        solve(models, ms, incumbent_seed_count=1, on_node=lambda p, b: seen.append((tuple(p), b)))
        for prefix, bound in seen:
            best = max(v for o, v in values.items() if o[:len(prefix)] == prefix)
            assert bound >= best - 1e-9


def test_node_limit_status():
    models, ms = random_fixture(7, 7, kind="tree")
    res = solve(models, ms, incumbent_seed_count=1, node_limit=1)
    assert res.status in ("node-limit", "optimal")
    assert res.upper_bound >= res.objective - 1e-9


def test_bad_time_limit():
    with pytest.raises(ValueError):
        solve(stump_trees(), ItemMultiset({1: 1}), time_limit=0)


def test_missing_model_rejected():
    with pytest.raises(ValueError):
        encode(stump_trees(), ItemMultiset({1: 1, 3: 1}))


def test_upper_bound_never_below_objective():
    models, ms = random_fixture(11, 7)
    res = solve(models, ms, time_limit=5)
    assert res.upper_bound >= res.objective - 1e-9 and not math.isnan(res.objective)
