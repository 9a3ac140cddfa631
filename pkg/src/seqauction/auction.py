"""Agent populations, item sets and sequential auction simulation."""

from __future__ import annotations

import enum
import random
import statistics
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


def money(x: float) -> float:
    """Round a currency amount to 4 fractional digits."""
    return round(float(x) + 0.0, 4) + 0.0


class InvalidOrderingError(ValueError):
    pass


class BiddingRegime(str, enum.Enum):
    FIRST_PRICE = "FirstPriceReservation"
    VICKREY = "VickreyTruthful"
    VICKREY_SMART = "VickreySmart"


@dataclass(frozen=True)
class ItemType:
    id: int
    base_value: float
    reserve_price: float
    popularity: float = 6.0
    sparsity: float = 6.0

    def __post_init__(self):
        if not self.reserve_price > 0:
            raise ValueError(f"type {self.id}: reserve price must be positive")
        if self.reserve_price > self.base_value:
            raise ValueError(f"type {self.id}: reserve price above base value")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "base_value": self.base_value,
            "reserve_price": self.reserve_price,
            "popularity": self.popularity,
            "sparsity": self.sparsity,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ItemType":
        return cls(int(d["id"]), float(d["base_value"]), float(d["reserve_price"]),
                   float(d["popularity"]), float(d["sparsity"]))


@dataclass(frozen=True)
class AgentProfile:
    id: int
    budget: float
    valuations: Mapping[int, float]
    reservations: Mapping[int, float]

    def __post_init__(self):
        if not self.budget > 0:
            raise ValueError(f"agent {self.id}: budget must be positive")
        if set(self.valuations) != set(self.reservations):
            raise ValueError(f"agent {self.id}: reservations must cover exactly the valued types")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "budget": self.budget,
            "valuations": {str(k): v for k, v in sorted(self.valuations.items())},
            "reservations": {str(k): v for k, v in sorted(self.reservations.items())},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "AgentProfile":
        return cls(
            int(d["id"]),
            float(d["budget"]),
            {int(k): float(v) for k, v in d["valuations"].items()},
            {int(k): float(v) for k, v in d["reservations"].items()},
        )


@dataclass(frozen=True)
class ItemMultiset:
    counts: Mapping[int, int]

    def __post_init__(self):
        clean = {int(r): int(c) for r, c in sorted(self.counts.items()) if c}
        if any(c < 0 for c in clean.values()):
            raise ValueError("negative item count")
        object.__setattr__(self, "counts", clean)

    @classmethod
    def from_sequence(cls, seq: Iterable[int]) -> "ItemMultiset":
        return cls(Counter(seq))

    @property
    def n(self) -> int:
        return sum(self.counts.values())

    @property
    def type_ids(self) -> list[int]:
        return sorted(self.counts)

    def items(self) -> list[int]:
        """The items as a sorted list of type ids."""
        return [r for r in sorted(self.counts) for _ in range(self.counts[r])]

    def is_ordering(self, ordering: Sequence[int]) -> bool:
        return Counter(ordering) == Counter(self.counts)

    def random_ordering(self, rng: random.Random) -> list[int]:
        seq = self.items()
        rng.shuffle(seq)
        return seq

    def to_dict(self) -> dict:
        return {"counts": {str(k): v for k, v in self.counts.items()}}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ItemMultiset":
        return cls({int(k): int(v) for k, v in d["counts"].items()})


@dataclass(frozen=True)
class TraceEntry:
    index: int
    type_id: int
    winner: int | None
    price: float
    sold: bool


@dataclass(frozen=True)
class AuctionTrace:
    entries: tuple[TraceEntry, ...]
    total_revenue: float
    regime: BiddingRegime = BiddingRegime.FIRST_PRICE
    seed: int | None = None

    @property
    def sequence(self) -> list[int]:
        return [e.type_id for e in self.entries]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "regime": self.regime.value,
            "sequence": self.sequence,
            "entries": [
                {"index": e.index, "type": e.type_id, "winner": e.winner,
                 "price": e.price, "sold": e.sold}
                for e in self.entries
            ],
            "total_revenue": self.total_revenue,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "AuctionTrace":
        entries = tuple(
            TraceEntry(int(e["index"]), int(e["type"]),
                       None if e["winner"] is None else int(e["winner"]),
                       float(e["price"]), bool(e["sold"]))
            for e in d["entries"]
        )
        return cls(entries, float(d["total_revenue"]), BiddingRegime(d["regime"]), d.get("seed"))


def population_to_dict(types: Sequence[ItemType], agents: Sequence[AgentProfile], seed=None) -> dict:
    return {
        "seed": seed,
        "types": [t.to_dict() for t in types],
        "agents": [a.to_dict() for a in agents],
    }


def population_from_dict(d: Mapping) -> tuple[list[ItemType], list[AgentProfile]]:
    return ([ItemType.from_dict(t) for t in d["types"]],
            [AgentProfile.from_dict(a) for a in d["agents"]])


def _roulette_without_replacement(rng: random.Random, ids: list[int],
                                  weights: list[float], k: int) -> list[int]:
    ids, weights = list(ids), list(weights)
    chosen = []
    for _ in range(k):
        pick = rng.uniform(0.0, sum(weights))
        acc = 0.0
        j = len(ids) - 1
        for pos, w in enumerate(weights):
            acc += w
            if pick <= acc:
                j = pos
                break
        chosen.append(ids.pop(j))
        weights.pop(j)
    return sorted(chosen)


def generate_population(seed: int, n_types: int, n_agents: int,
                        ) -> tuple[list[ItemType], list[AgentProfile]]:
    """Item types with base value 25 + 5i and agents with 1-5 desired types.

    Desired types are drawn by roulette wheel on popularity. Valuations equal
    the type's base value; first-price reservations are ``u * base_value`` with
    ``u ~ U[0.5, 2]``.
    """
    if n_types < 1 or n_agents < 1:
        raise ValueError("need at least one type and one agent")
    rng = random.Random(seed)
    types = []
    for i in range(1, n_types + 1):
        base = 25.0 + 5.0 * i
        types.append(ItemType(i, base, base / 2, money(rng.uniform(2, 10)), money(rng.uniform(2, 10))))
    ids = [t.id for t in types]
    pops = [t.popularity for t in types]
    agents = []
    for a in range(1, n_agents + 1):
        budget = money(rng.uniform(50, 250))
        k = rng.randint(1, min(5, n_types))
        desired = _roulette_without_replacement(rng, ids, pops, k)
        vals = {r: types[r - 1].base_value for r in desired}
        res = {r: money(rng.uniform(0.5, 2.0) * types[r - 1].base_value) for r in desired}
        agents.append(AgentProfile(a, budget, vals, res))
    return types, agents


def generate_items(seed: int, types: Sequence[ItemType], n_items: int) -> ItemMultiset:
    if n_items < 1:
        raise ValueError("n_items must be >= 1")
    rng = random.Random(seed)
    draws = rng.choices([t.id for t in types], weights=[t.sparsity for t in types], k=n_items)
    return ItemMultiset.from_sequence(draws)


# -- bidding -------------------------------------------------------------------

def _vickrey_bids(agents: Sequence[AgentProfile], budgets: Sequence[float],
                  r: int, reserve: float) -> list[tuple[float, int]]:
    bids = []
    for j, ag in enumerate(agents):
        v = ag.valuations.get(r)
        if v is None:
            continue
        b = min(v, budgets[j])
        if b >= reserve:
            bids.append((b, j))
    return bids


def _vickrey_outcome(bids, reserve, rng=None):
    """Winner position and price; ties go to a random top bidder, or the lowest
    position when ``rng`` is None."""
    if not bids:
        return None, 0.0
    top = max(b for b, _ in bids)
    leaders = [j for b, j in bids if b == top]
    w = rng.choice(leaders) if (rng is not None and len(leaders) > 1) else min(leaders)
    others = [b for b, j in bids if j != w]
    price = max(max(others), reserve) if others else reserve
    return w, price


def _truthful_rollout(agents, budgets, remaining: Sequence[int],
                      types: Mapping[int, ItemType], me: int) -> tuple[float, float]:
    """Simulate ``remaining`` under truthful Vickrey bidding (deterministic ties).

    Returns (surplus from won items, final budget) for agent position ``me``.
    """
    budgets = list(budgets)
    surplus = 0.0
    for r in remaining:
        reserve = types[r].reserve_price
        w, price = _vickrey_outcome(_vickrey_bids(agents, budgets, r, reserve), reserve)
        if w is None:
            continue
        budgets[w] -= price
        if w == me:
            surplus += agents[me].valuations[r] - price
    return surplus, budgets[me]


def smart_bid(agent_pos: int, item: int, remaining: Sequence[int],
              agents: Sequence[AgentProfile], budgets: Sequence[float],
              types: Mapping[int, ItemType]) -> float:
    """Bid of a utility-comparing agent on ``item`` given the items still to come.

    Utility is surplus on owned items plus leftover budget; both inner runs
    assume everybody else bids truthfully.
    """
    ag = agents[agent_pos]
    v = ag.valuations[item]
    truthful = min(v, budgets[agent_pos])
    if not remaining:
        return truthful
    bought = list(budgets)
    bought[agent_pos] -= truthful
    s1, left1 = _truthful_rollout(agents, bought, remaining, types, agent_pos)
    u1 = (v - truthful) + s1 + left1
    s2, left2 = _truthful_rollout(agents, budgets, remaining, types, agent_pos)
    u2 = s2 + left2
    if left2 > v:
        return truthful
    if u2 < u1:
        return truthful
    return min(max(0.0, v - (u2 - u1)), budgets[agent_pos])


def run_auction(types: Sequence[ItemType] | Mapping[int, ItemType],
                agents: Sequence[AgentProfile], ordering: Sequence[int],
                regime: BiddingRegime | str = BiddingRegime.FIRST_PRICE,
                seed: int | None = 0) -> AuctionTrace:
    regime = BiddingRegime(regime)
    tmap = dict(types) if isinstance(types, Mapping) else {t.id: t for t in types}
    bad = [r for r in ordering if r not in tmap]
    if bad:
        raise InvalidOrderingError(f"ordering references unknown item types {sorted(set(bad))}")
    rng = random.Random(seed)
    budgets = [a.budget for a in agents]
    entries = []
    revenue = 0.0
    for k, r in enumerate(ordering):
        reserve = tmap[r].reserve_price
        bids: list[tuple[float, int]] = []
        if regime is BiddingRegime.FIRST_PRICE:
            for j, ag in enumerate(agents):
                q = ag.reservations.get(r)
                if q is None:
                    continue
                b = min(q, budgets[j])
                if b >= reserve:
                    bids.append((b, j))
        elif regime is BiddingRegime.VICKREY:
            bids = _vickrey_bids(agents, budgets, r, reserve)
        else:
            rest = ordering[k + 1:]
            for j, ag in enumerate(agents):
                if r not in ag.valuations:
                    continue
                b = smart_bid(j, r, rest, agents, budgets, tmap)
                if b >= reserve:
                    bids.append((b, j))

        if not bids:
            entries.append(TraceEntry(k + 1, r, None, 0.0, False))
            continue
        if regime is BiddingRegime.FIRST_PRICE:
            top = max(b for b, _ in bids)
            leaders = [j for b, j in bids if b == top]
            w = rng.choice(leaders) if len(leaders) > 1 else leaders[0]
            price = top
        else:
            w, price = _vickrey_outcome(bids, reserve, rng)
        price = money(min(price, budgets[w]))
        budgets[w] -= price
        revenue += price
        entries.append(TraceEntry(k + 1, r, agents[w].id, price, True))
    return AuctionTrace(tuple(entries), money(revenue), regime, seed)


def relevance_check(types: Sequence[ItemType], agents: Sequence[AgentProfile], seed: int,
                    n_orderings: int = 100, *, n_items: int = 40,
                    items: ItemMultiset | None = None,
                    regime: BiddingRegime | str = BiddingRegime.FIRST_PRICE) -> bool:
    """True iff random orderings of one item set spread revenue by >= median/10."""
    if n_orderings < 3:
        raise ValueError("n_orderings must be >= 3")
    rng = random.Random(seed)
    if items is None:
        items = generate_items(rng.randrange(2**31), types, n_items)
    revenues = []
    for _ in range(n_orderings):
        order = items.random_ordering(rng)
        revenues.append(run_auction(types, agents, order, regime, rng.randrange(2**31)).total_revenue)
    spread = max(revenues) - min(revenues)
    return spread > 0 and spread >= statistics.median(revenues) / 10
