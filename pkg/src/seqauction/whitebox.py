"""Compile learned per-type models into a mixed-integer program and solve it.

The MIP follows the usual ordering formulation: binaries ``x_i_r`` pick the type
sold at position ``i``; feature values are linear in ``x`` (and in the
cumulative prediction variables ``sum_i_r``); tree models add one binary
``z_i_l_r`` per leaf with a big-M pair per decision node; linear models use
indicator constraints. ``write_lp`` emits CPLEX LP text for external solvers,
``solve`` runs a bundled depth-first branch-and-bound over orderings.
"""

from __future__ import annotations

import math
import random
import re
import time
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .auction import ItemMultiset
from .features import DIFF, INDEX, REMAIN, SOLD, SUM, SUM_TOTAL, FeatureSchema, PrefixState
from .regressors import LinearModel, RegressionTree, evaluate_ordering

SUM_EPS = 1e-6
LOOSE_M = 100.0


# -- feature bounds ------------------------------------------------------------------

@dataclass
class FeatureBounds:
    """``lo[i][f]``/``hi[i][f]`` for positions i = 1..n (row 0 unused)."""

    schema: FeatureSchema
    lo: list[list[float]]
    hi: list[list[float]]
    vrange: dict[tuple[int, int], tuple[float, float]]

    def get(self, name: str, i: int) -> tuple[float, float]:
        f = self.schema.index_of[name]
        return self.lo[i][f], self.hi[i][f]


def _interval_vector(schema: FeatureSchema, slo, shi, rlo, rhi, sumlo, sumhi, index):
    lo = list(slo) + list(rlo)
    hi = list(shi) + list(rhi)
    for a, b in schema.pairs:
        lo.append(slo[a] - shi[b])
        hi.append(shi[a] - slo[b])
    lo.extend(sumlo)
    hi.extend(sumhi)
    lo.append(sum(sumlo))
    hi.append(sum(sumhi))
    lo.append(index)
    hi.append(index)
    return lo, hi


def _schema_of(models) -> FeatureSchema:
    schemas = {m.schema for m in models.values()}
    if len(schemas) != 1:
        raise ValueError("models must share one feature schema")
    return schemas.pop()


def _check_models(models, multiset: ItemMultiset) -> FeatureSchema:
    missing = [r for r in multiset.type_ids if r not in models]
    if missing:
        raise ValueError(f"no model for item types {missing}")
    schema = _schema_of({r: models[r] for r in multiset.type_ids}) if multiset.counts else _schema_of(models)
    extra = set(multiset.type_ids) - set(schema.type_ids)
    if extra:
        raise ValueError(f"item types {sorted(extra)} are outside the model feature schema")
    return schema


def compute_bounds(multiset: ItemMultiset, models: Mapping[int, object],
                   loose: bool = False) -> FeatureBounds:
    """Valid per-position ranges of every feature over all orderings of ``multiset``.

    ``sum`` ranges come from interval evaluation of the models at earlier
    positions. With ``loose`` every range is widened to at least [0, 100].
    """
    schema = _check_models(models, multiset)
    ids = schema.type_ids
    n = multiset.n
    tot = [multiset.counts.get(r, 0) for r in ids]
    L = len(ids)
    lo_rows: list[list[float]] = [[]]
    hi_rows: list[list[float]] = [[]]
    vrange: dict[tuple[int, int], tuple[float, float]] = {}
    sumlo, sumhi = [0.0] * L, [0.0] * L
    capneg, cappos = [0.0] * L, [0.0] * L
    for i in range(1, n + 1):
        slo = [max(0, (i - 1) - (n - t)) for t in tot]
        shi = [min(i - 1, t) for t in tot]
        rlo = [max(0, (n - i) - (n - t)) for t in tot]
        rhi = [min(n - i, t) for t in tot]
        lo, hi = _interval_vector(schema, slo, shi, rlo, rhi, sumlo, sumhi, i)
        lo_rows.append(lo)
        hi_rows.append(hi)
        for k, r in enumerate(ids):
            if not tot[k]:
                continue
            a, b = models[r].predict_interval(lo, hi)
            vrange[(i, r)] = (min(0.0, a), max(0.0, b))
            capneg[k] = min(capneg[k], a)
            cappos[k] = max(cappos[k], b)
            cnt = min(i, tot[k])
            sumlo[k] = max(sumlo[k] + min(0.0, a), cnt * capneg[k])
            sumhi[k] = min(sumhi[k] + max(0.0, b), cnt * cappos[k])
    if loose:
        for i in range(1, n + 1):
            lo_rows[i] = [min(0.0, v) for v in lo_rows[i]]
            hi_rows[i] = [max(LOOSE_M, v) for v in hi_rows[i]]
    return FeatureBounds(schema, lo_rows, hi_rows, vrange)


# -- MIP model -----------------------------------------------------------------------

@dataclass
class Constraint:
    name: str
    terms: dict[str, float]
    sense: str
    rhs: float
    indicator: tuple[str, int] | None = None


@dataclass
class MipModel:
    objective: dict[str, float] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    binaries: list[str] = field(default_factory=list)
    # (i, r) -> leaf variable names, for tree-encoded types
    leaf_groups: dict[tuple[int, int], list[str]] = field(default_factory=dict)
    models: Mapping[int, object] | None = None
    multiset: ItemMultiset | None = None

    def add(self, terms: Mapping[str, float], sense: str, rhs: float,
            indicator: tuple[str, int] | None = None) -> Constraint | None:
        terms = {v: c for v, c in terms.items() if c != 0.0}
        if not terms:
            ok = {"<=": 0 <= rhs + 1e-9, ">=": 0 >= rhs - 1e-9, "=": abs(rhs) <= 1e-9}[sense]
            if not ok and indicator is None:
                raise ValueError(f"constant constraint 0 {sense} {rhs} is infeasible")
            if ok:
                return None
        con = Constraint(f"c{len(self.constraints) + 1}", dict(terms), sense, float(rhs), indicator)
        self.constraints.append(con)
        return con

    @property
    def variables(self) -> list[str]:
        return list(self.binaries) + [v for v in self.bounds if v not in set(self.binaries)]

    def validate(self) -> None:
        declared = set(self.binaries) | set(self.bounds)
        for con in self.constraints:
            names = set(con.terms) | ({con.indicator[0]} if con.indicator else set())
            undeclared = names - declared
            if undeclared:
                raise ValueError(f"{con.name} uses undeclared variables {sorted(undeclared)}")
            if con.indicator and con.indicator[0] not in self.binaries:
                raise ValueError(f"{con.name}: indicator variable must be binary")
        if set(self.objective) - declared:
            raise ValueError("objective uses undeclared variables")


def _xname(i, r): return f"x_{i}_r{r}"
def _zname(i, l, r): return f"z_{i}_{l}_r{r}"
def _vname(i, r): return f"v_{i}_r{r}"
def _sname(i, r): return f"sum_{i}_r{r}"


def _feature_expr(schema: FeatureSchema, f: int, i: int, n: int,
                  present: set[int]) -> tuple[dict[str, float], float]:
    """Feature ``f`` at position ``i`` as (linear terms, constant)."""
    kind, a, b = schema.kinds[f]
    ids = schema.type_ids
    terms: dict[str, float] = defaultdict(float)

    def sold(k, sign):
        r = ids[k]
        if r in present:
            for j in range(1, i):
                terms[_xname(j, r)] += sign

    if kind == SOLD:
        sold(a, 1.0)
    elif kind == REMAIN:
        r = ids[a]
        if r in present:
            for j in range(i + 1, n + 1):
                terms[_xname(j, r)] += 1.0
    elif kind == DIFF:
        sold(a, 1.0)
        sold(b, -1.0)
    elif kind == SUM:
        r = ids[a]
        if r in present and i > 1:
            terms[_sname(i - 1, r)] += 1.0
    elif kind == SUM_TOTAL:
        if i > 1:
            for r in ids:
                if r in present:
                    terms[_sname(i - 1, r)] += 1.0
    elif kind == INDEX:
        return {}, float(i)
    return {k: v for k, v in terms.items() if v != 0.0}, 0.0


def encode(models: Mapping[int, object], multiset: ItemMultiset, *, loose: bool = False,
           bounds: FeatureBounds | None = None) -> MipModel:
    """Build the MIP whose optimum is the best ordering under ``models``.

    ``sum_i_r`` is the cumulative prediction for type r through position i, so
    the ``sum_r`` feature at position i reads ``sum_{i-1}_r``.
    """
    schema = _check_models(models, multiset)
    for r in multiset.type_ids:
        m = models[r]
        if not isinstance(m, (RegressionTree, LinearModel)):
            raise TypeError(f"model for type {r} cannot be encoded")
        if m.used_features and max(m.used_features) >= len(schema):
            raise ValueError(f"model for type {r} references a feature outside the schema")
    fb = bounds or compute_bounds(multiset, models, loose)
    n = multiset.n
    R = multiset.type_ids
    present = set(R)
    mip = MipModel(models=models, multiset=multiset)

    for i in range(1, n + 1):
        for r in R:
            mip.binaries.append(_xname(i, r))
            lo, hi = fb.vrange[(i, r)]
            mip.bounds[_vname(i, r)] = (lo, hi)
            mip.objective[_vname(i, r)] = 1.0
    fsum = schema.index_of
    for i in range(1, n + 1):
        for r in R:
            # sum_i_r equals the sum feature at position i + 1
            if i < n:
                mip.bounds[_sname(i, r)] = fb.get(f"sum_r{r}", i + 1)
            else:
                lo = sum(fb.vrange[(j, r)][0] for j in range(1, n + 1))
                hi = sum(fb.vrange[(j, r)][1] for j in range(1, n + 1))
                mip.bounds[_sname(i, r)] = (lo, hi)

    # ordering
    for i in range(1, n + 1):
        mip.add({_xname(i, r): 1.0 for r in R}, "=", 1)
    for r in R:
        mip.add({_xname(i, r): 1.0 for i in range(1, n + 1)}, "=", multiset.counts[r])
    # cumulative predictions
    for i in range(1, n + 1):
        for r in R:
            terms = {_sname(i, r): 1.0}
            for j in range(1, i + 1):
                terms[_vname(j, r)] = -1.0
            mip.add(terms, "=", 0)

    exprs: dict[tuple[int, int], tuple[dict[str, float], float]] = {}

    def expr(f, i):
        key = (f, i)
        if key not in exprs:
            exprs[key] = _feature_expr(schema, f, i, n, present)
        return exprs[key]

    for r in R:
        model = models[r]
        for i in range(1, n + 1):
            x, v = _xname(i, r), _vname(i, r)
            if isinstance(model, RegressionTree):
                leaves = [_zname(i, l, r) for l in range(1, len(model.leaf_values) + 1)]
                mip.binaries.extend(leaves)
                mip.leaf_groups[(i, r)] = leaves
                for f, c, left, right in model.decision_nodes():
                    terms, const = expr(f, i)
                    M, m = fb.hi[i][f], fb.lo[i][f]
                    eps = SUM_EPS if schema.is_continuous(f) else 0.0
                    t = dict(terms)
                    for l in left:
                        t[_zname(i, l, r)] = M - c
                    mip.add(t, "<=", M - const)
                    t = dict(terms)
                    for l in right:
                        t[_zname(i, l, r)] = m - c - eps
                    mip.add(t, ">=", m - const)
                t = {z: 1.0 for z in leaves}
                t[x] = -1.0
                mip.add(t, "=", 0)
                t = {v: 1.0}
                for l, z in enumerate(leaves):
                    t[z] = -model.leaf_values[l]
                mip.add(t, "=", 0)
            else:
                t: dict[str, float] = defaultdict(float)
                t[v] += 1.0
                rhs = model.intercept
                for f, c in model.coefs.items():
                    terms, const = expr(f, i)
                    for name, w in terms.items():
                        t[name] -= c * w
                    rhs += c * const
                mip.add(dict(t), "=", rhs, indicator=(x, 1))
                mip.add({v: 1.0}, "=", 0, indicator=(x, 0))
    mip.validate()
    return mip


# -- LP format ----------------------------------------------------------------------

def _num(c: float) -> str:
    s = f"{c:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _lin(terms: Mapping[str, float]) -> str:
    parts = []
    for name, c in terms.items():
        s = _num(abs(c))
        if s == "0":
            continue
        neg = c < 0
        body = name if s == "1" else f"{s} {name}"
        if not parts:
            parts.append(f"-{body}" if neg and s == "1" else (f"-{s} {name}" if neg else body))
        else:
            parts.append(f"- {body}" if neg else f"+ {body}")
    return " ".join(parts) if parts else "0"


def lp_text(mip: MipModel) -> str:
    if not mip.objective:
        raise ValueError("refusing to write a model with an empty objective")
    out = ["\\ sequential auction ordering model", "Maximize", f" obj: {_lin(mip.objective)}", "Subject To"]
    for con in mip.constraints:
        body = f"{_lin(con.terms)} {con.sense} {_num(con.rhs)}"
        if con.indicator:
            body = f"{con.indicator[0]} = {con.indicator[1]} -> {body}"
        out.append(f" {con.name}: {body}")
    out.append("Bounds")
    binset = set(mip.binaries)
    for name, (lo, hi) in mip.bounds.items():
        if name not in binset:
            out.append(f" {_num(lo)} <= {name} <= {_num(hi)}")
    out.append("Binaries")
    out.extend(f" {b}" for b in mip.binaries)
    out.append("End")
    return "\n".join(out) + "\n"


def write_lp(mip: MipModel, path) -> Path:
    text = lp_text(mip)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


_TERM = re.compile(r"^(-?\d+(?:\.\d+)?)$")


def _parse_lin(tokens: list[str]) -> dict[str, float]:
    terms: dict[str, float] = {}
    sign = 1.0
    coef = None
    for tok in tokens:
        if tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
            continue
        if _TERM.match(tok):
            coef = float(tok)
            continue
        if tok.startswith("-") and not _TERM.match(tok):
            sign, tok = -sign, tok[1:]
        terms[tok] = sign * (1.0 if coef is None else coef)
        sign, coef = 1.0, None
    if list(terms) == [] and coef is not None:
        return {}
    return terms


def parse_lp(text: str) -> MipModel:
    """Read back the LP subset produced by :func:`write_lp`."""
    mip = MipModel()
    section = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        low = line.lower()
        if low in ("maximize", "subject to", "bounds", "binaries", "end"):
            section = low
            continue
        if section == "maximize":
            mip.objective = _parse_lin(line.split(":", 1)[1].split())
        elif section == "subject to":
            name, body = (s.strip() for s in line.split(":", 1))
            indicator = None
            if "->" in body:
                head, body = (s.strip() for s in body.split("->", 1))
                var, val = (s.strip() for s in head.split("="))
                indicator = (var, int(val))
            toks = body.split()
            sense, rhs = toks[-2], float(toks[-1])
            mip.constraints.append(Constraint(name, _parse_lin(toks[:-2]), sense, rhs, indicator))
        elif section == "bounds":
            lo, _, name, _, hi = line.split()
            mip.bounds[name] = (float(lo), float(hi))
        elif section == "binaries":
            mip.binaries.extend(line.split())
    return mip


def read_lp(path) -> MipModel:
    return parse_lp(Path(path).read_text())


# -- fixed-ordering propagation ------------------------------------------------------

def _lhs(con: Constraint, vals: Mapping[str, float]) -> float:
    return sum(c * vals[v] for v, c in con.terms.items())


def _holds(con: Constraint, vals, tol: float) -> bool:
    if con.indicator and round(vals[con.indicator[0]]) != con.indicator[1]:
        return True
    lhs = _lhs(con, vals)
    if con.sense == "<=":
        return lhs <= con.rhs + tol
    if con.sense == ">=":
        return lhs >= con.rhs - tol
    return abs(lhs - con.rhs) <= tol


def assignment_for_ordering(mip: MipModel, ordering: Sequence[int], tol: float = 1e-6) -> dict[str, float]:
    """Fix ``x`` to ``ordering`` and derive every other variable from the constraints.

    Leaf binaries are chosen as the unique leaf whose decision-node
    constraints hold; continuous variables are solved from equality rows with
    a single unknown. Raises ``ValueError`` if propagation gets stuck.
    """
    vals: dict[str, float] = {}
    xs = [b for b in mip.binaries if b.startswith("x_")]
    for b in xs:
        vals[b] = 0.0
    for i, r in enumerate(ordering, start=1):
        name = _xname(i, r)
        if name not in vals:
            raise ValueError(f"ordering places unknown type {r} at position {i}")
        vals[name] = 1.0
    by_var: dict[str, list[Constraint]] = defaultdict(list)
    for con in mip.constraints:
        for v in con.terms:
            by_var[v].append(con)
        if con.indicator:
            by_var[con.indicator[0]].append(con)

    def propagate(seed_vars):
        work = list(seed_vars)
        while work:
            var = work.pop()
            for con in by_var[var]:
                if con.sense != "=":
                    continue
                if con.indicator:
                    iv = con.indicator[0]
                    if iv not in vals or round(vals[iv]) != con.indicator[1]:
                        continue
                unknown = [v for v in con.terms if v not in vals]
                if len(unknown) != 1:
                    continue
                u = unknown[0]
                rest = sum(c * vals[v] for v, c in con.terms.items() if v != u)
                vals[u] = (con.rhs - rest) / con.terms[u]
                work.append(u)

    propagate(list(vals))
    n = len(ordering)
    groups = defaultdict(list)
    for (i, r), leaves in mip.leaf_groups.items():
        groups[i].append((r, leaves))
    for i in range(1, n + 1):
        newly = []
        for r, leaves in groups.get(i, []):
            if vals[_xname(i, r)] < 0.5:
                for z in leaves:
                    vals[z] = 0.0
                newly.extend(leaves)
                continue
            feasible = []
            for pick in leaves:
                trial = dict(vals)
                for z in leaves:
                    trial[z] = 1.0 if z == pick else 0.0
                cons = {id(c): c for z in leaves for c in by_var[z]}.values()
                ok = True
                for con in cons:
                    if any(v not in trial for v in con.terms):
                        continue
                    if not _holds(con, trial, tol):
                        ok = False
                        break
                if ok:
                    feasible.append(pick)
            if len(feasible) != 1:
                raise ValueError(f"position {i}, type {r}: {len(feasible)} feasible leaves")
            for z in leaves:
                vals[z] = 1.0 if z == feasible[0] else 0.0
            newly.extend(leaves)
        propagate(newly)
    missing = [v for v in mip.variables if v not in vals]
    if missing:
        raise ValueError(f"could not determine {missing[:5]}")
    return vals


def check_assignment(mip: MipModel, vals: Mapping[str, float], tol: float = 1e-6) -> list[str]:
    """Names of violated constraints, bounds and integrality conditions."""
    bad = [c.name for c in mip.constraints if not _holds(c, vals, tol)]
    for name, (lo, hi) in mip.bounds.items():
        if not lo - tol <= vals[name] <= hi + tol:
            bad.append(f"bound:{name}")
    for b in mip.binaries:
        if min(abs(vals[b]), abs(vals[b] - 1.0)) > tol:
            bad.append(f"integrality:{b}")
    return bad


def objective_value(mip: MipModel, vals: Mapping[str, float]) -> float:
    return sum(c * vals[v] for v, c in mip.objective.items())


# -- branch and bound ----------------------------------------------------------------

@dataclass
class SolveResult:
    ordering: list[int]
    objective: float
    upper_bound: float
    status: str
    nodes: int
    wall_time: float


class _Bounder:
    """Upper bounds on the best completion of a prefix by interval propagation."""

    def __init__(self, schema: FeatureSchema, models, multiset: ItemMultiset):
        self.schema = schema
        self.ids = schema.type_ids
        self.models = [models.get(r) for r in self.ids]
        self.tot = [multiset.counts.get(r, 0) for r in self.ids]
        self.n = multiset.n

    def completion_bound(self, sold: list[int], sums: list[float], p: int) -> tuple[float, list[float]]:
        """Bound on the value of positions p+1..n and the per-type bound at p+1."""
        L = len(self.ids)
        n, tot, schema, models = self.n, self.tot, self.schema, self.models
        rem = [tot[k] - sold[k] for k in range(L)]
        R = n - p
        active = [k for k in range(L) if rem[k] > 0]
        sumlo, sumhi = list(sums), list(sums)
        capneg = [0.0] * L
        cappos = [0.0] * L
        total = 0.0
        first = [-math.inf] * L
        for i in range(p + 1, n + 1):
            t = i - 1 - p
            best = -math.inf
            contrib = []
            for k0 in active:
                slo, shi, rlo, rhi = [], [], [], []
                for k in range(L):
                    avail = rem[k] - (k == k0)
                    a = sold[k] + max(0, t - (R - 1 - avail))
                    b = sold[k] + min(t, avail)
                    slo.append(a); shi.append(b)
                    rlo.append(tot[k] - b - (k == k0)); rhi.append(tot[k] - a - (k == k0))
                lo, hi = _interval_vector(schema, slo, shi, rlo, rhi, sumlo, sumhi, i)
                a, b = models[k0].predict_interval(lo, hi)
                contrib.append((k0, a, b))
                if b > best:
                    best = b
                if i == p + 1:
                    first[k0] = b
            total += best
            for k0, a, b in contrib:
                capneg[k0] = min(capneg[k0], a)
                cappos[k0] = max(cappos[k0], b)
                cnt = min(t + 1, rem[k0])
                sumlo[k0] = max(sumlo[k0] + min(0.0, a), sums[k0] + cnt * capneg[k0])
                sumhi[k0] = min(sumhi[k0] + max(0.0, b), sums[k0] + cnt * cappos[k0])
        return total, first


def solve(models, multiset: ItemMultiset | None = None, time_limit: float = 30.0,
          incumbent_seed_count: int = 1000, seed: int = 0, node_limit: int | None = None,
          on_node: Callable[[list[int], float], None] | None = None) -> SolveResult:
    """Exact depth-first branch-and-bound over position-by-position type choices.

    ``models`` may also be a :class:`MipModel` produced by :func:`encode`.
    The incumbent starts as the best of ``incumbent_seed_count`` random
    orderings; seeding time counts against ``time_limit``.
    """
    if isinstance(models, MipModel):
        if models.models is None or models.multiset is None:
            raise ValueError("MIP carries no source models; pass models and multiset")
        models, multiset = models.models, models.multiset
    if time_limit <= 0:
        raise ValueError("time_limit must be positive")
    if multiset is None:
        raise ValueError("multiset is required")
    schema = _check_models(models, multiset)
    start = time.perf_counter()
    deadline = start + time_limit
    n = multiset.n
    if n == 0:
        return SolveResult([], 0.0, 0.0, "optimal", 0, 0.0)

    rng = random.Random(seed)
    best_order: list[int] = multiset.items()
    best_val = evaluate_ordering(models, best_order, multiset, schema)
    for _ in range(max(0, incumbent_seed_count - 1)):
        if time.perf_counter() > deadline:
            break
        cand = multiset.random_ordering(rng)
        val = evaluate_ordering(models, cand, multiset, schema)
        if val > best_val:
            best_order, best_val = cand, val

    bounder = _Bounder(schema, models, multiset)
    ids = schema.type_ids
    L = len(ids)
    tol = 1e-9
    # stack entries: (prefix, sold, sums, value, parent bound)
    stack = [([], [0] * L, [0.0] * L, 0.0, math.inf)]
    nodes = 0
    timed_out = False
    stop_status = "time-limit"
    open_bound = -math.inf
    st = PrefixState(schema, multiset)
    while stack:
        if node_limit is not None and nodes >= node_limit:
            stop_status = "node-limit"
        if time.perf_counter() > deadline or stop_status == "node-limit":
            timed_out = True
            open_bound = max(e[4] for e in stack)
            break
        prefix, sold, sums, value, parent_bound = stack.pop()
        if parent_bound <= best_val + tol:
            continue
        nodes += 1
        p = len(prefix)
        if p == n:
            if on_node:
                on_node(prefix, value)
            if value > best_val:
                best_val, best_order = value, prefix
            continue
        comp, first = bounder.completion_bound(sold, sums, p)
        bound = value + comp
        if on_node:
            on_node(prefix, bound)
        if bound <= best_val + tol:
            continue
        st.sold, st.sums, st.index = sold, sums, p
        children = []
        for k, r in enumerate(ids):
            if sold[k] < bounder.tot[k]:
                v = models[r].predict(st.vector(r))
                children.append((-v, r, k, v))
        children.sort()
        for _, r, k, v in reversed(children):
            s2 = list(sold); s2[k] += 1
            u2 = list(sums); u2[k] += v
            stack.append((prefix + [r], s2, u2, value + v, bound))

    objective = evaluate_ordering(models, best_order, multiset, schema)
    if timed_out:
        status = stop_status
        upper = max(objective, open_bound)
    else:
        status = "optimal"
        upper = objective
    return SolveResult(list(best_order), objective, upper, status, nodes, time.perf_counter() - start)
