"""Experiment pipeline: generate, simulate, train, optimise, evaluate."""

from __future__ import annotations

import csv
import json
import logging
import random
import re
import statistics
import time
import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import blackbox, whitebox
from .auction import (AgentProfile, BiddingRegime, ItemMultiset, ItemType, generate_items,
                      generate_population, population_to_dict, relevance_check, run_auction)
from .features import FeatureSchema, traces_to_dataset
from .regressors import (ModelSpec, UndefinedScoreError, evaluate_ordering, fit_models,
                         models_to_dict, predict_ordering, r_squared)

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class RelevanceAbort(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    seed: int = 0
    n_agent_sets: int = 10
    item_sets_per_agents: int = 3
    n_train_auctions: int = 200
    n_items: int = 12
    n_types: int = 4
    n_agents: int = 6
    regime: str = BiddingRegime.FIRST_PRICE.value
    tree_depths: tuple[int, ...] = (3, 5, 8)
    lasso_alphas: tuple[float, ...] = (1.0, 0.1, 1e-6)
    min_samples_split: int = 10
    time_limit: float = 30.0
    random_n: int = 500
    max_expansions: int = 2000
    completions: int = 1
    incumbent_seed_count: int = 1000
    node_limit: int | None = None
    r2_orderings: int = 50
    relevance_orderings: int = 100
    max_relevance_attempts: int = 50
    write_lp: bool = False

    def __post_init__(self):
        self.tree_depths = tuple(int(d) for d in self.tree_depths)
        self.lasso_alphas = tuple(float(a) for a in self.lasso_alphas)

    def validate(self) -> "ExperimentConfig":
        counts = ["n_agent_sets", "item_sets_per_agents", "n_train_auctions", "n_items",
                  "n_types", "n_agents", "random_n", "max_expansions", "completions",
                  "r2_orderings", "max_relevance_attempts"]
        for name in counts:
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.relevance_orderings < 3:
            raise ConfigError("relevance_orderings must be >= 3")
        if not self.time_limit > 0:
            raise ConfigError("time_limit must be > 0")
        try:
            BiddingRegime(self.regime)
        except ValueError:
            raise ConfigError(f"unknown regime {self.regime!r}") from None
        if any(d < 1 for d in self.tree_depths) or any(a < 0 for a in self.lasso_alphas):
            raise ConfigError("tree depths must be >= 1 and alphas >= 0")
        return self

    @property
    def model_specs(self) -> list[ModelSpec]:
        specs = [ModelSpec(f"tree{d}", "tree", depth=d, min_samples_split=self.min_samples_split)
                 for d in self.tree_depths]
        specs += [ModelSpec(f"lasso{k}", "linear", alpha=a)
                  for k, a in enumerate(self.lasso_alphas, start=1)]
        return specs

    @property
    def methods(self) -> list[str]:
        out = []
        for spec in self.model_specs:
            out += [f"{spec.name}-lp", f"{spec.name}-bf"]
        return out + ["mvf", f"rand{self.random_n}-best", f"rand{self.random_n}-mean"]

    @classmethod
    def from_mapping(cls, d: Mapping) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            return cls(**d).validate()
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def load(cls, path=None, overrides: Sequence[str] = ()) -> "ExperimentConfig":
        data: dict = {}
        if path:
            try:
                data = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigError(f"cannot read config {path}: {e}") from None
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not key=value")
            key, raw = item.split("=", 1)
            try:
                data[key] = json.loads(raw)
            except json.JSONDecodeError:
                data[key] = raw
        return cls.from_mapping(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tree_depths"] = list(self.tree_depths)
        d["lasso_alphas"] = list(self.lasso_alphas)
        return d


def derive_seed(*parts) -> int:
    """Stable 31-bit seed from a master seed and labels."""
    ints = [p if isinstance(p, int) else zlib.crc32(str(p).encode()) for p in parts]
    return int(np.random.SeedSequence(ints).generate_state(1)[0] & 0x7FFFFFFF)


# -- generation and training ---------------------------------------------------------

@dataclass
class AgentSet:
    set_id: int
    seed: int
    types: list[ItemType]
    agents: list[AgentProfile]
    attempts: int


def find_population(cfg: ExperimentConfig, set_id: int) -> AgentSet:
    """Regenerate agents until random orderings produce a relevant revenue spread."""
    for attempt in range(cfg.max_relevance_attempts):
        seed = derive_seed(cfg.seed, "population", set_id, attempt)
        types, agents = generate_population(seed, cfg.n_types, cfg.n_agents)
        if relevance_check(types, agents, derive_seed(seed, "relevance"), cfg.relevance_orderings,
                           n_items=cfg.n_items, regime=cfg.regime):
            return AgentSet(set_id, seed, types, agents, attempt + 1)
    raise RelevanceAbort(
        f"agent set {set_id}: no relevant population after {cfg.max_relevance_attempts} attempts "
        f"({cfg.n_agents} agents, {cfg.n_items} items)")


def simulate_history(cfg: ExperimentConfig, aset: AgentSet):
    rng = random.Random(derive_seed(aset.seed, "history"))
    traces = []
    for _ in range(cfg.n_train_auctions):
        items = generate_items(rng.randrange(2**31), aset.types, cfg.n_items)
        order = items.random_ordering(rng)
        traces.append(run_auction(aset.types, aset.agents, order, cfg.regime, rng.randrange(2**31)))
    return traces


def train_models(cfg: ExperimentConfig, aset: AgentSet, traces) -> dict[str, dict[int, object]]:
    schema = FeatureSchema(t.id for t in aset.types)
    ds = traces_to_dataset(traces, schema)
    return {spec.name: fit_models(ds, spec) for spec in cfg.model_specs}


def test_item_sets(cfg: ExperimentConfig, aset: AgentSet) -> list[ItemMultiset]:
    return [generate_items(derive_seed(aset.seed, "items", j), aset.types, cfg.n_items)
            for j in range(cfg.item_sets_per_agents)]


def r2_scores(cfg: ExperimentConfig, aset: AgentSet, model_sets: Mapping[str, Mapping[int, object]],
              item_sets: Sequence[ItemMultiset]) -> dict[str, float]:
    """Per-item R^2 of loop-back predictions against simulated prices on random orderings."""
    rng = random.Random(derive_seed(aset.seed, "r2"))
    observed: list[float] = []
    orders = []
    for items in item_sets:
        for _ in range(cfg.r2_orderings):
            order = items.random_ordering(rng)
            tr = run_auction(aset.types, aset.agents, order, cfg.regime, rng.randrange(2**31))
            observed.extend(e.price for e in tr.entries)
            orders.append((order, items))
    out = {}
    for name, models in model_sets.items():
        preds = []
        for order, items in orders:
            preds.extend(predict_ordering(models, order, items))
        try:
            out[name] = r_squared(preds, observed)
        except UndefinedScoreError:
            out[name] = float("nan")
    return out


# -- optimisation ------------------------------------------------------------------

_METHOD = re.compile(r"^(?:(?P<model>(?:tree|lasso)\d+)-(?P<opt>lp|bf)|(?P<mvf>mvf)|rand(?P<n>\d+)-(?P<agg>mean|best))$")


@dataclass
class OptimizeResult:
    method: str
    ordering: list[int] | None
    predicted_value: float | None
    extra: dict = field(default_factory=dict)


def parse_method(method: str) -> dict:
    m = _METHOD.match(method)
    if not m:
        raise ValueError(f"unknown method {method!r}")
    return {k: v for k, v in m.groupdict().items() if v is not None}


def mvf_ordering(types: Sequence[ItemType], multiset: ItemMultiset) -> list[int]:
    """Most valuable type first by configured base value; ties by type id."""
    base = {t.id: t.base_value for t in types}
    return sorted(multiset.items(), key=lambda r: (-base[r], r))


def random_baseline(n: int, multiset: ItemMultiset, evaluator, seed: int) -> tuple[float, list[int], float]:
    """(mean value, best ordering, best value) over ``n`` random orderings."""
    rng = random.Random(seed)
    vals, best, best_val = [], None, -np.inf
    for _ in range(n):
        order = multiset.random_ordering(rng)
        v = evaluator(order)
        vals.append(v)
        if v > best_val:
            best, best_val = order, v
    return statistics.fmean(vals), best, best_val


def optimize(method: str, model_sets: Mapping[str, Mapping[int, object]], types: Sequence[ItemType],
             multiset: ItemMultiset, cfg: ExperimentConfig, seed: int,
             simulator=None, lp_path=None) -> OptimizeResult:
    """Run one ordering method. ``simulator`` maps an ordering to revenue (random baselines)."""
    p = parse_method(method)
    if "model" in p:
        models = model_sets[p["model"]]
        if p["opt"] == "lp":
            if lp_path is not None:
                whitebox.write_lp(whitebox.encode(models, multiset), lp_path)
            res = whitebox.solve(models, multiset, cfg.time_limit, cfg.incumbent_seed_count,
                                 seed, cfg.node_limit)
            return OptimizeResult(method, res.ordering, res.objective,
                                  {"status": res.status, "nodes": res.nodes,
                                   "upper_bound": res.upper_bound, "wall_time": res.wall_time})
        t0 = time.perf_counter()
        order, val = blackbox.best_first_search(models, multiset, cfg.max_expansions,
                                                cfg.time_limit, seed, cfg.completions)
        return OptimizeResult(method, order, val, {"wall_time": time.perf_counter() - t0})
    if "mvf" in p:
        return OptimizeResult(method, mvf_ordering(types, multiset), None)
    if simulator is None:
        raise ValueError("random baselines need an evaluator")
    mean, best, best_val = random_baseline(int(p["n"]), multiset, simulator, seed)
    if p["agg"] == "best":
        return OptimizeResult(method, best, None, {"value": best_val})
    return OptimizeResult(method, None, None, {"value": mean})


# -- evaluation --------------------------------------------------------------------

@dataclass
class WinTable:
    methods: list[str]
    wins: np.ndarray

    def to_rows(self) -> list[list]:
        rows = [["method", *self.methods, "total"]]
        for a, name in enumerate(self.methods):
            rows.append([name, *map(int, self.wins[a]), int(self.wins[a].sum())])
        return rows


def win_table(revenues: Mapping[str, Sequence[float]], methods: Sequence[str], tol: float = 1e-9) -> WinTable:
    """wins[a, b] = number of instances where method a earned strictly more than b."""
    k = len(methods)
    wins = np.zeros((k, k), dtype=int)
    for a, ma in enumerate(methods):
        for b, mb in enumerate(methods):
            if a != b:
                wins[a, b] = sum(1 for x, y in zip(revenues[ma], revenues[mb]) if x > y + tol)
    return WinTable(list(methods), wins)


def evaluate_instance(results: Mapping[str, OptimizeResult], model_sets, aset: AgentSet,
                      multiset: ItemMultiset, regime: str, eval_seed: int) -> list[dict]:
    """Model value and simulator revenue per method; one simulator seed for all methods."""
    rows = []
    for method, res in results.items():
        p = parse_method(method)
        model_value = None
        if res.ordering is not None and "model" in p:
            model_value = evaluate_ordering(model_sets[p["model"]], res.ordering, multiset)
        if res.ordering is not None and p.get("agg") != "best":
            sim = run_auction(aset.types, aset.agents, res.ordering, regime, eval_seed).total_revenue
        else:
            sim = res.extra["value"]
        rows.append({"method": method, "model_value": model_value, "sim_revenue": sim,
                     "ordering": res.ordering})
    return rows


# -- full pipeline ---------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def _write_csv(path: Path, rows: Sequence[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in rows:
            w.writerow([_fmt(v) for v in row])


@dataclass
class BenchResult:
    records: list[dict]
    r2: dict[int, dict[str, float]]
    wins: WinTable
    timings: list[dict]


def run_agent_set(cfg: ExperimentConfig, set_id: int, outdir: Path | None = None) -> tuple[list[dict], dict, list[dict]]:
    aset = find_population(cfg, set_id)
    traces = simulate_history(cfg, aset)
    model_sets = train_models(cfg, aset, traces)
    items = test_item_sets(cfg, aset)
    r2 = r2_scores(cfg, aset, model_sets, items)
    if outdir is not None:
        (outdir / "models").mkdir(parents=True, exist_ok=True)
        (outdir / "traces").mkdir(parents=True, exist_ok=True)
        for name, models in model_sets.items():
            (outdir / "models" / f"set{set_id}_{name}.json").write_text(
                json.dumps(models_to_dict(models, name), indent=1, sort_keys=True))
        (outdir / "traces" / f"set{set_id}.json").write_text(json.dumps({
            "population": population_to_dict(aset.types, aset.agents, aset.seed),
            "traces": [t.to_dict() for t in traces[:20]],
            "n_traces": len(traces)}, indent=1))
    records, timings = [], []
    for j, multiset in enumerate(items):
        inst = set_id * cfg.item_sets_per_agents + j
        eval_seed = derive_seed(cfg.seed, "evaluate", inst)

        def sim(order, _s=eval_seed):
            return run_auction(aset.types, aset.agents, order, cfg.regime, _s).total_revenue

        results = {}
        for method in cfg.methods:
            lp_path = None
            if cfg.write_lp and outdir is not None and method.endswith("-lp"):
                lp_path = outdir / "mip" / f"inst{inst}_{method}.lp"
            t0 = time.perf_counter()
            results[method] = optimize(method, model_sets, aset.types, multiset, cfg,
                                       derive_seed(cfg.seed, "optimize", inst, method), sim, lp_path)
            timings.append({"instance": inst, "method": method, "seconds": time.perf_counter() - t0,
                            **{k: v for k, v in results[method].extra.items() if k in ("status", "nodes")}})
        for row in evaluate_instance(results, model_sets, aset, multiset, cfg.regime, eval_seed):
            row.update(instance=inst, agent_set=set_id)
            records.append(row)
    return records, r2, timings


def run_bench(cfg: ExperimentConfig, outdir=None, workers: int = 1) -> BenchResult:
    outdir = Path(outdir) if outdir is not None else None
    ids = list(range(cfg.n_agent_sets))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(run_agent_set, [cfg] * len(ids), ids, [outdir] * len(ids)))
    else:
        parts = [run_agent_set(cfg, i, outdir) for i in ids]
    records = [r for part in parts for r in part[0]]
    records.sort(key=lambda r: (r["instance"], cfg.methods.index(r["method"])))
    r2 = {i: part[1] for i, part in zip(ids, parts)}
    timings = [t for part in parts for t in part[2]]
    revenues = {m: [r["sim_revenue"] for r in records if r["method"] == m] for m in cfg.methods}
    wins = win_table(revenues, cfg.methods)
    if outdir is not None:
        write_bench_outputs(cfg, outdir, records, r2, wins, timings)
    return BenchResult(records, r2, wins, timings)


def write_bench_outputs(cfg, outdir: Path, records, r2, wins: WinTable, timings) -> None:
    res = outdir / "results"
    _write_csv(res / "instances.csv",
               [["instance", "agent_set", "method", "model_value", "sim_revenue", "gap", "ordering"]] +
               [[r["instance"], r["agent_set"], r["method"], r["model_value"], r["sim_revenue"],
                 None if r["model_value"] is None else r["model_value"] - r["sim_revenue"],
                 " ".join(map(str, r["ordering"])) if r["ordering"] else ""] for r in records])
    names = [s.name for s in cfg.model_specs]
    _write_csv(res / "r2.csv", [["agent_set", *names]] + [[i, *(r2[i][n] for n in names)] for i in sorted(r2)])
    _write_csv(res / "wins.csv", wins.to_rows())
    # wall times vary run to run, so they stay out of the CSV tables
    (outdir / "timing.json").write_text(json.dumps(timings, indent=1))
    _write_csv(res / "solver_status.csv", [["instance", "method", "status", "nodes"]] +
               [[t["instance"], t["method"], t.get("status"), t.get("nodes")] for t in timings if "status" in t])


def trend_summary(cfg: ExperimentConfig, res: BenchResult) -> dict:
    """Headline comparisons over a bench run.

    ``r2_median``: median R^2 per model across agent sets.
    ``beats``: per learned-model optimiser, the fraction of instances where its
    simulator revenue strictly exceeds mvf and the random-mean baseline.
    ``wb_ge_bb``: per model, the fraction of instances where the white-box
    model value is at least the black-box one.
    """
    by = {(r["instance"], r["method"]): r for r in res.records}
    instances = sorted({r["instance"] for r in res.records})
    mean_name = f"rand{cfg.random_n}-mean"
    out = {"instances": len(instances), "r2_median": {}, "beats": {}, "wb_ge_bb": {}}
    for spec in cfg.model_specs:
        vals = [res.r2[i][spec.name] for i in res.r2 if res.r2[i][spec.name] == res.r2[i][spec.name]]
        out["r2_median"][spec.name] = statistics.median(vals) if vals else float("nan")
        for opt in ("lp", "bf"):
            m = f"{spec.name}-{opt}"
            out["beats"][m] = {
                base: sum(by[i, m]["sim_revenue"] > by[i, base]["sim_revenue"] + 1e-9
                          for i in instances) / len(instances)
                for base in ("mvf", mean_name)}
        out["wb_ge_bb"][spec.name] = sum(
            by[i, f"{spec.name}-lp"]["model_value"] >= by[i, f"{spec.name}-bf"]["model_value"] - 1e-9
            for i in instances) / len(instances)
    return out
