"""Feature rows for per-item revenue regression.

For an item auctioned at position ``index`` the features are, per type ``r``:
``sold_r`` (items of r auctioned earlier), ``remain_r`` (items of r still to
come), ``diff_r_s`` for r < s, ``sum_r`` (value obtained from earlier r items),
plus the overall ``sum`` and the ``index``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .auction import AuctionTrace, ItemMultiset, ItemType

SOLD, REMAIN, DIFF, SUM, SUM_TOTAL, INDEX = "sold", "remain", "diff", "sum_r", "sum", "index"


class FeatureSchema:
    """Fixed feature order: sold, remain, diff (lexicographic), sum per type, sum, index."""

    def __init__(self, type_ids: Iterable[int]):
        self.type_ids = tuple(sorted(set(int(t) for t in type_ids)))
        self.pos = {r: k for k, r in enumerate(self.type_ids)}
        kinds: list[tuple[str, int, int]] = []
        names: list[str] = []
        for k, r in enumerate(self.type_ids):
            kinds.append((SOLD, k, -1)); names.append(f"sold_r{r}")
        for k, r in enumerate(self.type_ids):
            kinds.append((REMAIN, k, -1)); names.append(f"remain_r{r}")
        for (a, ra), (b, rb) in combinations(enumerate(self.type_ids), 2):
            kinds.append((DIFF, a, b)); names.append(f"diff_r{ra}_r{rb}")
        for k, r in enumerate(self.type_ids):
            kinds.append((SUM, k, -1)); names.append(f"sum_r{r}")
        kinds.append((SUM_TOTAL, -1, -1)); names.append("sum")
        kinds.append((INDEX, -1, -1)); names.append("index")
        self.kinds = tuple(kinds)
        self.pairs = tuple((a, b) for kind, a, b in kinds if kind == DIFF)
        self.names = tuple(names)
        self.index_of = {n: i for i, n in enumerate(names)}

    def __len__(self) -> int:
        return len(self.names)

    def __eq__(self, other) -> bool:
        return isinstance(other, FeatureSchema) and other.type_ids == self.type_ids

    def __hash__(self) -> int:
        return hash(self.type_ids)

    def __repr__(self) -> str:
        return f"FeatureSchema({list(self.type_ids)})"

    def is_continuous(self, f: int) -> bool:
        return self.kinds[f][0] in (SUM, SUM_TOTAL)

    def build(self, sold: Sequence[float], remain: Sequence[float],
              sums: Sequence[float], index: int) -> list[float]:
        """Feature vector from per-type (schema-ordered) sold/remain/sum lists."""
        x = list(sold)
        x.extend(remain)
        x.extend([sold[a] - sold[b] for a, b in self.pairs])
        x.extend(sums)
        x.append(sum(sums))
        x.append(index)
        return x

    def vector(self, row: "FeatureRow") -> list[float]:
        return self.build([row.sold.get(r, 0) for r in self.type_ids],
                          [row.remain.get(r, 0) for r in self.type_ids],
                          [row.sum.get(r, 0.0) for r in self.type_ids],
                          row.index)


@dataclass
class FeatureRow:
    type_id: int
    observed_value: float
    sold: dict[int, int]
    remain: dict[int, int]
    diff: dict[tuple[int, int], int]
    sum: dict[int, float]
    sum_total: float
    index: int


@dataclass
class Dataset:
    schema: FeatureSchema
    rows: list[FeatureRow] = field(default_factory=list)

    def for_type(self, r: int) -> list[FeatureRow]:
        return [row for row in self.rows if row.type_id == r]

    def matrix(self, rows: Sequence[FeatureRow] | None = None):
        import numpy as np
        rows = self.rows if rows is None else rows
        X = np.array([self.schema.vector(row) for row in rows], dtype=float).reshape(len(rows), len(self.schema))
        y = np.array([row.observed_value for row in rows], dtype=float)
        return X, y

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["type", "value", *self.schema.names])
            for row in self.rows:
                w.writerow([row.type_id, _fmt(row.observed_value),
                            *(_fmt(v) for v in self.schema.vector(row))])

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            sold_names = [h for h in header[2:] if h.startswith("sold_r")]
            schema = FeatureSchema(int(h[len("sold_r"):]) for h in sold_names)
            if tuple(header[2:]) != schema.names:
                raise ValueError("CSV header does not match a feature schema")
            rows = []
            for rec in reader:
                x = [float(v) for v in rec[2:]]
                rows.append(_row_from_vector(schema, int(rec[0]), float(rec[1]), x))
        return cls(schema, rows)


def _fmt(v: float) -> str:
    return repr(int(v)) if float(v).is_integer() else repr(float(v))


def _row_from_vector(schema: FeatureSchema, r: int, value: float, x: Sequence[float]) -> FeatureRow:
    l = len(schema.type_ids)
    ids = schema.type_ids
    sold = {ids[k]: int(x[k]) for k in range(l)}
    remain = {ids[k]: int(x[l + k]) for k in range(l)}
    diff = {(a, b): sold[a] - sold[b] for a, b in combinations(ids, 2)}
    off = len(x) - 2 - l
    sums = {ids[k]: x[off + k] for k in range(l)}
    return FeatureRow(r, value, sold, remain, diff, sums, x[-2], int(x[-1]))


def make_row(schema: FeatureSchema, type_id: int, observed: float,
             sold: Mapping[int, int], remain: Mapping[int, int],
             sums: Mapping[int, float], index: int) -> FeatureRow:
    ids = schema.type_ids
    sold = {r: int(sold.get(r, 0)) for r in ids}
    remain = {r: int(remain.get(r, 0)) for r in ids}
    sums = {r: sums.get(r, 0.0) for r in ids}
    diff = {(a, b): sold[a] - sold[b] for a, b in combinations(ids, 2)}
    return FeatureRow(type_id, observed, sold, remain, diff, sums, sum(sums.values()), index)


def trace_to_rows(trace: AuctionTrace, types: Sequence[ItemType] | FeatureSchema) -> list[FeatureRow]:
    schema = types if isinstance(types, FeatureSchema) else FeatureSchema(t.id for t in types)
    seq = trace.sequence
    total = {r: 0 for r in schema.type_ids}
    for r in seq:
        total[r] += 1
    sold = {r: 0 for r in schema.type_ids}
    sums = {r: 0.0 for r in schema.type_ids}
    rows = []
    for e in trace.entries:
        remain = {r: total[r] - sold[r] - (r == e.type_id) for r in schema.type_ids}
        rows.append(make_row(schema, e.type_id, e.price if e.sold else 0.0, sold, remain, sums, e.index))
        sold[e.type_id] += 1
        sums[e.type_id] += e.price if e.sold else 0.0
    return rows


def traces_to_dataset(traces: Iterable[AuctionTrace], schema: FeatureSchema) -> Dataset:
    ds = Dataset(schema)
    for tr in traces:
        ds.rows.extend(trace_to_rows(tr, schema))
    return ds


class PrefixState:
    """Running feature state while an ordering is built item by item.

    ``sums`` accumulate whatever values are fed to :meth:`advance` (model
    predictions during optimisation), which is how the ``sum`` features loop
    back predictions into later inputs.
    """

    __slots__ = ("schema", "total", "sold", "sums", "index")

    def __init__(self, schema: FeatureSchema, multiset: ItemMultiset):
        self.schema = schema
        missing = set(multiset.counts) - set(schema.type_ids)
        if missing:
            raise ValueError(f"multiset types {sorted(missing)} are not in the feature schema")
        self.total = [multiset.counts.get(r, 0) for r in schema.type_ids]
        self.sold = [0] * len(schema.type_ids)
        self.sums = [0.0] * len(schema.type_ids)
        self.index = 0

    def copy(self) -> "PrefixState":
        new = PrefixState.__new__(PrefixState)
        new.schema, new.total = self.schema, self.total
        new.sold, new.sums, new.index = list(self.sold), list(self.sums), self.index
        return new

    def remaining(self, r: int) -> int:
        k = self.schema.pos[r]
        return self.total[k] - self.sold[k]

    def vector(self, next_type: int) -> list[float]:
        k = self.schema.pos[next_type]
        if self.total[k] - self.sold[k] <= 0:
            raise ValueError(f"no items of type {next_type} left to auction")
        remain = [t - s for t, s in zip(self.total, self.sold)]
        remain[k] -= 1
        return self.schema.build(self.sold, remain, self.sums, self.index + 1)

    def advance(self, r: int, value: float) -> None:
        k = self.schema.pos[r]
        self.sold[k] += 1
        self.sums[k] += value
        self.index += 1


def prefix_features(prefix: Sequence[int], predicted_values: Sequence[float],
                    multiset: ItemMultiset, next_type: int,
                    schema: FeatureSchema | None = None) -> FeatureRow:
    """Features of ``next_type`` auctioned right after ``prefix``."""
    schema = schema or FeatureSchema(multiset.type_ids)
    if len(prefix) != len(predicted_values):
        raise ValueError("predicted values must align with the prefix")
    st = PrefixState(schema, multiset)
    for r, v in zip(prefix, predicted_values):
        if st.remaining(r) <= 0:
            raise ValueError("prefix is inconsistent with the multiset")
        st.advance(r, v)
    if next_type not in schema.pos or st.remaining(next_type) <= 0:
        raise ValueError(f"no items of type {next_type} left to auction")
    remain = {r: st.total[k] - st.sold[k] - (r == next_type) for k, r in enumerate(schema.type_ids)}
    return make_row(schema, next_type, 0.0,
                    dict(zip(schema.type_ids, st.sold)), remain,
                    dict(zip(schema.type_ids, st.sums)), st.index + 1)
