"""Hand-built fixtures and random model generators shared by the tests."""

from __future__ import annotations

import random

from seqauction.auction import AgentProfile, ItemMultiset, ItemType, run_auction
from seqauction.features import FeatureSchema
from seqauction.regressors import LinearModel, RegressionTree, TreeNode


def two_item_market():
    """Two bidders, two items, budgets 5, reserves 4, reservation = value - 1."""
    types = [ItemType(1, 5.0, 4.0), ItemType(2, 6.0, 4.0)]
    agents = [
        AgentProfile(1, 5.0, {1: 5.0, 2: 6.0}, {1: 4.0, 2: 5.0}),
        AgentProfile(2, 5.0, {2: 5.0}, {2: 4.0}),
    ]
    return types, agents


def two_item_traces():
    types, agents = two_item_market()
    return [run_auction(types, agents, [1, 2]), run_auction(types, agents, [2, 1])]


# Training rows of the two-auction history, written out by hand:
# (type, value, sold_r1, sold_r2, diff_r1_r2, sum_r1, sum_r2, sum, index)
HISTORY_ROWS = [
    (1, 4, 0, 0, 0, 0, 0, 0, 1),
    (2, 4, 1, 0, 1, 4, 0, 4, 2),
    (2, 5, 0, 0, 0, 0, 0, 0, 1),
    (1, 0, 0, 1, -1, 0, 5, 5, 2),
]


def stump_trees():
    """r1: sold_r2 <= 0.5 -> 4 else 0; r2: sold_r1 <= 0.5 -> 5 else 4."""
    schema = FeatureSchema([1, 2])
    f = schema.index_of
    t1 = TreeNode(feature=f["sold_r2"], threshold=0.5, left=TreeNode(value=4.0), right=TreeNode(value=0.0))
    t2 = TreeNode(feature=f["sold_r1"], threshold=0.5, left=TreeNode(value=5.0), right=TreeNode(value=4.0))
    return {1: RegressionTree(schema, t1, 1), 2: RegressionTree(schema, t2, 2)}


def _threshold(rng: random.Random, schema: FeatureSchema, f: int, n: int) -> float:
    kind = schema.kinds[f][0]
    if kind in ("sum_r", "sum"):
        return round(rng.uniform(0, 25), 2)
    if kind == "diff":
        return rng.randint(-n, n - 1) + 0.5
    if kind == "index":
        return rng.randint(1, n) + 0.5
    return rng.randint(0, n - 1) + 0.5


def random_tree_node(rng: random.Random, schema: FeatureSchema, depth: int, n: int) -> TreeNode:
    if depth == 0 or rng.random() < 0.25:
        return TreeNode(value=round(rng.uniform(0, 10), 2))
    f = rng.randrange(len(schema))
    return TreeNode(feature=f, threshold=_threshold(rng, schema, f, n),
                    left=random_tree_node(rng, schema, depth - 1, n),
                    right=random_tree_node(rng, schema, depth - 1, n))


def random_linear(rng: random.Random, schema: FeatureSchema, r: int) -> LinearModel:
    feats = rng.sample(range(len(schema)), k=min(len(schema), rng.randint(0, 3)))
    coefs = {f: round(rng.uniform(-1.5, 1.5), 3) for f in feats}
    return LinearModel(schema, coefs, round(rng.uniform(0, 10), 2), 0.0, r)


def random_fixture(seed: int, max_n: int, max_depth: int = 4, kind: str | None = None, min_n: int = 1):
    """(models, multiset) with 1-3 types, n in [min_n, max_n], trees or linear models."""
    rng = random.Random(seed)
    n_types = rng.randint(1 if min_n < 3 else 2, 3)
    ids = list(range(1, n_types + 1))
    schema = FeatureSchema(ids)
    n = rng.randint(max(min_n, n_types), max_n)
    seq = ids + [rng.choice(ids) for _ in range(n - n_types)]
    multiset = ItemMultiset.from_sequence(seq)
    kind = kind or rng.choice(["tree", "linear"])
    if kind == "tree":
        models = {r: RegressionTree(schema, random_tree_node(rng, schema, rng.randint(1, max_depth), n), r)
                  for r in ids}
    else:
        models = {r: random_linear(rng, schema, r) for r in ids}
    return models, multiset
