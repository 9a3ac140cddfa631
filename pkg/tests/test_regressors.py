import json
import random

import numpy as np
import pytest

from helpers import stump_trees, two_item_traces
from seqauction.auction import ItemMultiset
from seqauction.features import FeatureSchema, make_row, traces_to_dataset
from seqauction.regressors import (LinearModel, ModelSpec, UndefinedScoreError, evaluate_ordering, fit_lasso,
                                   fit_models, fit_tree, lasso_cd, lasso_objective, models_from_dict,
                                   models_to_dict, predict, r_squared)
from seqauction.reductions import multiset_permutations


def _history():
    return traces_to_dataset(two_item_traces(), FeatureSchema([1, 2]))


def _row(schema, r, v, x):
    from seqauction.features import _row_from_vector
    return _row_from_vector(schema, r, v, x)


def test_stumps_learned_from_history():
    ds = _history()
    want = stump_trees()
    for r in (1, 2):
        got = fit_tree(ds.for_type(r), ds.schema, 3, 2, r)
        assert got.to_dict()["root"] == {**want[r].to_dict()["root"], "n": 2,
                                         "left": {**want[r].to_dict()["root"]["left"], "n": 1},
                                         "right": {**want[r].to_dict()["root"]["right"], "n": 1}}


def test_stump_predictions():
    t2 = stump_trees()[2]
    s = t2.schema
    x = [0.0] * len(s)
    assert t2.predict(x) == 5
    x[s.index_of["sold_r1"]] = 1
    assert t2.predict(x) == 4


def test_ordering_values():
    models = stump_trees()
    ms = ItemMultiset({1: 1, 2: 3})
    vals = {tuple(o): evaluate_ordering(models, o, ms) for o in multiset_permutations(ms)}
    assert vals == {(1, 2, 2, 2): 16, (2, 1, 2, 2): 13, (2, 2, 1, 2): 14, (2, 2, 2, 1): 15}
    assert evaluate_ordering(models, []) == 0


def test_constant_target_single_leaf():
    schema = FeatureSchema([1])
    rows = [make_row(schema, 1, 3.0, {1: k}, {1: 5 - k}, {1: 3.0 * k}, k + 1) for k in range(6)]
    t = fit_tree(rows, schema, 5, 2)
    assert t.root.is_leaf and t.root.value == 3.0


def test_tree_sse_never_worse_than_mean():
    rng = random.Random(4)
    schema = FeatureSchema([1, 2])
    rows = [_row(schema, 1, rng.uniform(0, 20), [rng.randint(0, 3), rng.randint(0, 3), rng.randint(0, 3),
                                                 rng.randint(0, 3), 0, rng.uniform(0, 30), rng.uniform(0, 30),
                                                 0, rng.randint(1, 8)]) for _ in range(60)]
    for r in rows:
        r.sum_total = sum(r.sum.values())
    y = np.array([r.observed_value for r in rows])
    t = fit_tree(rows, schema, 4, 5)
    pred = np.array([predict(t, r) for r in rows])
    assert ((y - pred) ** 2).sum() <= ((y - y.mean()) ** 2).sum() + 1e-6


def test_leaf_values_rounded_and_numbered():
    ds = traces_to_dataset(two_item_traces() * 3, FeatureSchema([1, 2]))
    t = fit_tree(ds.for_type(2), ds.schema, 3, 2)
    assert all(round(v, 2) == v for v in t.leaf_values)
    x = [0.0] * len(ds.schema)
    assert t.leaf_of(x) == 1


def test_lasso_ols_limit():
    X = np.array([[1.0], [2.0]])
    c, d, _ = lasso_cd(X, np.array([2.0, 4.0]), 0.0, tol=1e-12)
    assert c[0] == pytest.approx(2.0) and d == pytest.approx(0.0, abs=1e-9)


def test_lasso_full_shrinkage():
    X = np.array([[1.0, 0.0], [2.0, 1.0], [3.0, 5.0]])
    y = np.array([1.0, 2.0, 6.0])
    c, d, _ = lasso_cd(X, y, 1e6)
    assert not c.any() and d == pytest.approx(3.0)


def test_lasso_beats_zero_model_on_history():
    ds = _history()
    X, y = ds.matrix(ds.for_type(2))
    c, d, _ = lasso_cd(X, y, 0.1)
    assert lasso_objective(c, d, X, y, 0.1) <= lasso_objective(np.zeros_like(c), y.mean(), X, y, 0.1) + 1e-12


def test_lasso_objective_monotone_per_sweep():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 6))
    y = X @ np.array([1.0, 0, -2, 0, 0.5, 0]) + rng.normal(scale=0.1, size=40)
    seen = []
    lasso_cd(X, y, 0.05, tol=1e-10, callback=lambda c, d: seen.append(lasso_objective(c, d, X, y, 0.05)))
    assert all(b <= a + 1e-12 for a, b in zip(seen, seen[1:]))


def test_lasso_support_shrinks_with_alpha():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(60, 8))
    y = X @ rng.normal(size=8) + rng.normal(scale=0.1, size=60)
    sizes = [np.count_nonzero(lasso_cd(X, y, a, tol=1e-10)[0]) for a in (1e-6, 0.1, 1.0, 10.0)]
    assert sizes == sorted(sizes, reverse=True)


def test_fit_lasso_validation():
    schema = FeatureSchema([1])
    row = make_row(schema, 1, 3.0, {}, {}, {}, 1)
    with pytest.raises(ValueError):
        fit_lasso([row], schema, 0.1)
    with pytest.raises(ValueError):
        fit_lasso([row, row], schema, -1)


def test_zero_coefficient_linear_model():
    schema = FeatureSchema([1, 2])
    m = LinearModel(schema, {}, 7.5, 1.0, 1)
    assert m.predict([3.0] * len(schema)) == 7.5 == m.predict([0.0] * len(schema))


def test_r_squared_cases():
    assert r_squared([0, 4], [0, 4]) == 1.0
    assert r_squared([2, 2], [0, 4]) == 0.0
    assert r_squared([1, 3], [0, 4]) == pytest.approx(0.75)
    with pytest.raises(UndefinedScoreError):
        r_squared([1, 1], [2, 2])


def test_interval_prediction_contains_point():
    rng = random.Random(3)
    ds = traces_to_dataset(two_item_traces() * 2, FeatureSchema([1, 2]))
    for spec in (ModelSpec("t", "tree", depth=3, min_samples_split=2), ModelSpec("l", "linear", alpha=0.01)):
        models = fit_models(ds, spec)
        for _ in range(50):
            x = [rng.uniform(-2, 6) for _ in ds.schema.names]
            lo = [v - rng.uniform(0, 2) for v in x]
            hi = [v + rng.uniform(0, 2) for v in x]
            for m in models.values():
                a, b = m.predict_interval(lo, hi)
                assert a - 1e-9 <= m.predict(x) <= b + 1e-9


def test_model_json_roundtrip():
    ds = _history()
    for spec in (ModelSpec("tree3", "tree", depth=3, min_samples_split=2), ModelSpec("lasso1", "linear", alpha=0.1)):
        models = fit_models(ds, spec)
        d = json.loads(json.dumps(models_to_dict(models, spec.name)))
        back = models_from_dict(d)
        x = [1.0] * len(ds.schema)
        assert all(back[r].predict(x) == models[r].predict(x) for r in models)


def test_fit_models_unseen_type_gets_constant():
    ds = traces_to_dataset(two_item_traces(), FeatureSchema([1, 2, 3]))
    models = fit_models(ds, ModelSpec("tree3", "tree", depth=3, min_samples_split=2))
    assert models[3].predict([0.0] * len(ds.schema)) == 0.0
