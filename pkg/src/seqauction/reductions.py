"""Partition-problem gadgets and a brute-force ordering oracle.

The gadgets turn a partition instance into (a) two budget-constrained bidders,
(b) one small regression tree per item, and (c) linear models over the ``sum``
features, such that a target value is reachable iff the instance splits into
two halves of equal sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, NamedTuple, Sequence

from .auction import AgentProfile, ItemMultiset, ItemType
from .features import FeatureSchema
from .regressors import LinearModel, RegressionTree, TreeNode


@dataclass(frozen=True)
class PartitionInstance:
    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if len(self.values) < 2 or any(v <= 0 for v in self.values):
            raise ValueError("need at least two positive integers")

    @property
    def total(self) -> int:
        return sum(self.values)

    @property
    def k(self) -> float:
        return self.total / 2


def is_partitionable(values: Sequence[int]) -> bool:
    """Subset-sum decision by reachable-sum set."""
    total = sum(values)
    if total % 2:
        return False
    reach = {0}
    for v in values:
        reach |= {s + v for s in reach if s + v <= total // 2}
    return total // 2 in reach


# -- enumeration oracle ------------------------------------------------------------

def count_orderings(multiset: ItemMultiset) -> int:
    out = math.factorial(multiset.n)
    for c in multiset.counts.values():
        out //= math.factorial(c)
    return out


def multiset_permutations(multiset: ItemMultiset) -> Iterator[list[int]]:
    """Every distinct ordering, each exactly once, in lexicographic order."""
    counts = dict(multiset.counts)
    types = sorted(counts)
    n = multiset.n
    seq: list[int] = []

    def rec():
        if len(seq) == n:
            yield list(seq)
            return
        for r in types:
            if counts[r]:
                counts[r] -= 1
                seq.append(r)
                yield from rec()
                seq.pop()
                counts[r] += 1

    yield from rec()


class BruteForceResult(NamedTuple):
    ordering: list[int]
    value: float
    count: int


def brute_force_optimum(evaluator: Callable[[list[int]], float], multiset: ItemMultiset,
                        cap: int = 10**6) -> BruteForceResult:
    """Exhaustive argmax over all distinct orderings (first maximiser wins)."""
    total = count_orderings(multiset)
    if total > cap:
        raise ValueError(f"{total} orderings exceed the enumeration cap {cap}")
    best, best_val, seen = None, -math.inf, 0
    for order in multiset_permutations(multiset):
        seen += 1
        val = evaluator(order)
        if val > best_val:
            best, best_val = order, val
    return BruteForceResult(best or [], best_val if best is not None else 0.0, seen)


# -- bidder reduction ------------------------------------------------------------

def bidder_gadget(inst: PartitionInstance) -> tuple[list[ItemType], list[AgentProfile], float]:
    """One item type per integer; agent 1 values item k at 2*i_k, agent 2 at 2*i_k + 1."""
    types = [ItemType(k, 2.0 * v + 1, float(v)) for k, v in enumerate(inst.values, start=1)]
    v1 = {k: 2.0 * v for k, v in enumerate(inst.values, start=1)}
    v2 = {k: 2.0 * v + 1 for k, v in enumerate(inst.values, start=1)}
    agents = [AgentProfile(1, inst.total / 2, v1, dict(v1)),
              AgentProfile(2, float(inst.total), v2, dict(v2))]
    return types, agents, 1.5 * inst.total


def bidder_gadget_revenue(inst: PartitionInstance, ordering: Sequence[int]) -> float:
    """Revenue under the reduction's deterministic pricing.

    Agent 2 buys item k for 2*i_k (the least bid beating agent 1) whenever it
    can pay that and agent 1 could still meet the reserve. Otherwise the
    highest affordable bidder, agent 2 first on ties, buys at the reserve i_k.
    """
    _, agents, _ = bidder_gadget(inst)
    b1, b2 = agents[0].budget, agents[1].budget
    revenue = 0.0
    for k in ordering:
        i_k = inst.values[k - 1]
        can1, can2 = b1 >= i_k, b2 >= i_k
        if can1 and b2 >= 2 * i_k:
            b2 -= 2 * i_k
            revenue += 2 * i_k
        elif can1 or can2:
            bid1 = min(2 * i_k, b1) if can1 else -1
            bid2 = min(2 * i_k + 1, b2) if can2 else -1
            if bid2 >= bid1:
                b2 -= i_k
            else:
                b1 -= i_k
            revenue += i_k
    return revenue


# -- model reductions -------------------------------------------------------------

def tree_gadget(inst: PartitionInstance) -> tuple[dict[int, RegressionTree], ItemMultiset, float]:
    """Three-leaf trees on the overall ``sum`` feature, one per item.

    Item k predicts 2*i_k while the running total leaves room for it within
    sum(I), else i_k while the total stays within 1.5*sum(I), else 0. Returns
    (models, one-item-per-type multiset, target 1.5*sum(I)).
    """
    S = inst.total
    ids = list(range(1, len(inst.values) + 1))
    schema = FeatureSchema(ids)
    f = schema.index_of["sum"]
    models = {}
    for k, v in zip(ids, inst.values):
        inner = TreeNode(feature=f, threshold=math.floor(1.5 * S - v) + 0.5,
                         left=TreeNode(value=float(v)), right=TreeNode(value=0.0))
        root = TreeNode(feature=f, threshold=S - 2 * v + 0.5,
                        left=TreeNode(value=2.0 * v), right=inner)
        models[k] = RegressionTree(schema, root, k)
    return models, ItemMultiset({k: 1 for k in ids}), 1.5 * S


def tree_gadget_naive(inst: PartitionInstance) -> dict[int, RegressionTree]:
    """Naive variant: sum <= S ? (sum <= S - v2 ? 0 : v2) : v1.

    Kept for comparison only: its optimum can exceed 1.5*sum(I) (e.g. for
    I = {1, 1}), so reaching the target does not decide partition.
    """
    S = inst.total
    ids = list(range(1, len(inst.values) + 1))
    schema = FeatureSchema(ids)
    f = schema.index_of["sum"]
    out = {}
    for k, v in zip(ids, inst.values):
        v1, v2 = 2.0 * v, 2.0 * v + 1
        left = TreeNode(feature=f, threshold=S - v2, left=TreeNode(value=0.0), right=TreeNode(value=v2))
        out[k] = RegressionTree(schema, TreeNode(feature=f, threshold=float(S), left=left,
                                                 right=TreeNode(value=v1)), k)
    return out


def linear_gadget(inst: PartitionInstance) -> tuple[dict[int, LinearModel], ItemMultiset, float]:
    """Linear models whose best ordering value is 2.5k iff the instance splits evenly.

    Types 1..n are the integers (value v_i - v_i * sum_y / 2k), type n+1 is y
    (value 2k - sum of the x sums). Returns (models, multiset, target 2.5k).
    """
    k = inst.k
    if k <= 0:
        raise ValueError("k must be positive")
    n = len(inst.values)
    y = n + 1
    schema = FeatureSchema(range(1, n + 2))
    sy = schema.index_of[f"sum_r{y}"]
    models: dict[int, LinearModel] = {}
    for i, v in enumerate(inst.values, start=1):
        models[i] = LinearModel(schema, {sy: -v / (2 * k)}, float(v), 0.0, i)
    models[y] = LinearModel(schema, {schema.index_of[f"sum_r{i}"]: -1.0 for i in range(1, n + 1)},
                            2 * k, 0.0, y)
    return models, ItemMultiset({r: 1 for r in range(1, n + 2)}), 2.5 * k


def linear_gadget_value(inst: PartitionInstance, ordering: Sequence[int]) -> float:
    """2k + v(y) - v(y)^2 / 2k with v(y) = 2k minus the integers placed before y."""
    k = inst.k
    y = len(inst.values) + 1
    before = ordering[:list(ordering).index(y)]
    vy = 2 * k - sum(inst.values[r - 1] for r in before)
    return 2 * k + vy - vy * vy / (2 * k)
