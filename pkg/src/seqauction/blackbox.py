"""Best-first search over auction prefixes using models only as predictors."""

from __future__ import annotations

import heapq
import itertools
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .auction import ItemMultiset
from .features import FeatureSchema, PrefixState
from .regressors import evaluate_ordering, predict


@dataclass
class SearchNode:
    prefix: list[int]
    prefix_value: float
    priority: float
    state: PrefixState = field(repr=False)


def state_key(state: PrefixState) -> tuple:
    """Per-type auctioned counts plus per-type predicted sums rounded to cents."""
    return tuple(state.sold), tuple(round(s, 2) + 0.0 for s in state.sums)


def _complete(models, state: PrefixState, rest: list[int]) -> float:
    st = state.copy()
    total = 0.0
    for r in rest:
        v = predict(models[r], st.vector(r))
        total += v
        st.advance(r, v)
    return total


def best_first_search(models: Mapping[int, object], multiset: ItemMultiset,
                      max_expansions: int = 1000, time_limit: float = 30.0, seed: int = 0,
                      completions: int = 1,
                      on_progress: Callable[[int, float], None] | None = None,
                      schema: FeatureSchema | None = None) -> tuple[list[int], float]:
    """Anytime best-first search with dynamic-programming cuts.

    Each child prefix is scored by its own predicted value plus the predicted
    value of a random completion (averaged over ``completions`` draws). The
    best complete ordering evaluated anywhere is returned together with its
    value under :func:`evaluate_ordering`.
    """
    if max_expansions < 1:
        raise ValueError("max_expansions must be >= 1")
    if schema is None:
        schema = next(iter(models.values())).schema
    rng = random.Random(seed)
    deadline = time.perf_counter() + time_limit
    root = PrefixState(schema, multiset)
    tie = itertools.count()
    queue = [(-0.0, next(tie), SearchNode([], 0.0, 0.0, root))]
    visited: dict[tuple, float] = {}
    best_order = multiset.items()
    best_val = evaluate_ordering(models, best_order, multiset, schema)
    expansions = 0

    while queue and expansions < max_expansions and time.perf_counter() < deadline:
        _, _, node = heapq.heappop(queue)
        key = state_key(node.state)
        if key in visited and visited[key] >= node.prefix_value:
            continue
        visited[key] = node.prefix_value
        expansions += 1
        st = node.state
        left = [r for r in schema.type_ids if st.remaining(r) > 0]
        for r in left:
            v = predict(models[r], st.vector(r))
            child = st.copy()
            child.advance(r, v)
            pool = []
            for r2 in schema.type_ids:
                pool.extend([r2] * child.remaining(r2))
            prefix_value = node.prefix_value + v
            comp_total = 0.0
            for _ in range(completions):
                rest = list(pool)
                rng.shuffle(rest)
                comp = _complete(models, child, rest)
                comp_total += comp
                if prefix_value + comp > best_val:
                    best_val, best_order = prefix_value + comp, node.prefix + [r] + rest
            priority = prefix_value + comp_total / completions
            if pool:
                heapq.heappush(queue, (-priority, next(tie), SearchNode(node.prefix + [r], prefix_value, priority, child)))
        if on_progress:
            on_progress(expansions, best_val)

    # report the value exactly as an external re-evaluation would compute it
    return list(best_order), evaluate_ordering(models, best_order, multiset, schema)
