"""Command-line entry point: ``python -m seqauction <command>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness, reductions
from .auction import ItemMultiset, population_from_dict, population_to_dict, run_auction
from .regressors import evaluate_ordering, models_from_dict, models_to_dict

EXIT_CONFIG = 2
EXIT_RELEVANCE = 3


def _config(args) -> harness.ExperimentConfig:
    return harness.ExperimentConfig.load(args.config, args.set or ())


def _out(args) -> Path:
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise harness.ConfigError(f"cannot read {path}: {e}") from None


def cmd_generate(args) -> int:
    cfg, out = _config(args), _out(args)
    (out / "traces").mkdir(exist_ok=True)
    for set_id in range(cfg.n_agent_sets):
        aset = harness.find_population(cfg, set_id)
        traces = harness.simulate_history(cfg, aset)
        items = harness.test_item_sets(cfg, aset)
        doc = {"population": population_to_dict(aset.types, aset.agents, aset.seed),
               "attempts": aset.attempts,
               "item_sets": [m.to_dict() for m in items],
               "traces": [t.to_dict() for t in traces]}
        path = out / "traces" / f"set{set_id}.json"
        path.write_text(json.dumps(doc, indent=1))
        print(f"set {set_id}: {len(traces)} traces, {aset.attempts} population attempt(s) -> {path}")
    return 0


def cmd_train(args) -> int:
    cfg, out = _config(args), _out(args)
    (out / "models").mkdir(exist_ok=True)
    rows = [["agent_set", *(s.name for s in cfg.model_specs)]]
    for set_id in range(cfg.n_agent_sets):
        aset = harness.find_population(cfg, set_id)
        traces = harness.simulate_history(cfg, aset)
        model_sets = harness.train_models(cfg, aset, traces)
        for name, models in model_sets.items():
            (out / "models" / f"set{set_id}_{name}.json").write_text(
                json.dumps(models_to_dict(models, name), indent=1, sort_keys=True))
        r2 = harness.r2_scores(cfg, aset, model_sets, harness.test_item_sets(cfg, aset))
        rows.append([set_id, *(r2[s.name] for s in cfg.model_specs)])
        degenerate = [n for n, v in r2.items() if v != v or v < 0]
        note = f" (degenerate: {', '.join(degenerate)})" if degenerate else ""
        print(f"set {set_id}: " + " ".join(f"{n}={v:.3f}" for n, v in r2.items()) + note)
    harness._write_csv(out / "results" / "r2.csv", rows)
    return 0


def _read_items(arg) -> ItemMultiset:
    if Path(arg).exists():
        d = _load_json(arg)
        return ItemMultiset.from_dict(d) if "counts" in d else ItemMultiset.from_sequence(d["sequence"])
    try:
        return ItemMultiset.from_sequence(int(t) for t in arg.replace(",", " ").split())
    except ValueError:
        raise harness.ConfigError(f"items must be a JSON file or a list of type ids, got {arg!r}") from None


def cmd_optimize(args) -> int:
    cfg, out = _config(args), _out(args)
    try:
        parsed = harness.parse_method(args.method)
    except ValueError as e:
        raise harness.ConfigError(str(e)) from None
    multiset = _read_items(args.items)
    model_sets, types, sim = {}, [], None
    if "model" in parsed:
        model_sets[parsed["model"]] = models_from_dict(_load_json(args.models))
    if args.population:
        types, agents = population_from_dict(_load_json(args.population))
        sim = lambda o: run_auction(types, agents, o, cfg.regime, cfg.seed).total_revenue  # noqa: E731
    elif "mvf" in parsed or "n" in parsed:
        raise harness.ConfigError(f"{args.method} needs --population")
    lp = out / "mip" / f"{args.method}.lp" if parsed.get("opt") == "lp" else None
    res = harness.optimize(args.method, model_sets, types, multiset, cfg, cfg.seed, sim, lp)
    doc = {"method": res.method, "ordering": res.ordering, "predicted_value": res.predicted_value,
           **{k: v for k, v in res.extra.items() if k != "wall_time"}}
    print(json.dumps(doc))
    (out / "results").mkdir(exist_ok=True)
    (out / "results" / f"{args.method}.json").write_text(json.dumps(doc, indent=1))
    return 0


def cmd_evaluate(args) -> int:
    """Orderings file: {"items": [...], "orderings": {method: [...]}, "models": {method: path}}."""
    cfg, out = _config(args), _out(args)
    types, agents = population_from_dict(_load_json(args.population))
    doc = _load_json(args.orderings)
    multiset = ItemMultiset.from_sequence(doc["items"])
    methods = list(doc["orderings"])
    rows = [["method", "model_value", "sim_revenue", "gap"]]
    revenues = {}
    for m in methods:
        order = doc["orderings"][m]
        if not multiset.is_ordering(order):
            raise harness.ConfigError(f"ordering for {m} does not match the item multiset")
        mv = None
        if m in doc.get("models", {}):
            mv = evaluate_ordering(models_from_dict(_load_json(doc["models"][m])), order, multiset)
        rev = run_auction(types, agents, order, cfg.regime, cfg.seed).total_revenue
        revenues[m] = [rev]
        rows.append([m, mv, rev, None if mv is None else mv - rev])
    harness._write_csv(out / "results" / "evaluate.csv", rows)
    harness._write_csv(out / "results" / "wins.csv", harness.win_table(revenues, methods).to_rows())
    for r in rows:
        print(",".join(harness._fmt(v) for v in r))
    return 0


def cmd_bench(args) -> int:
    cfg = _config(args)
    out = _out(args)
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=1, sort_keys=True))
    res = harness.run_bench(cfg, out, workers=args.workers)
    for row in res.wins.to_rows():
        print(",".join(harness._fmt(v) for v in row))
    return 0


def cmd_fixtures(args) -> int:
    """Check every partition gadget against the subset-sum decider."""
    import itertools
    failures = 0
    checked = 0
    for n in range(2, args.max_n + 1):
        for values in itertools.combinations_with_replacement(range(1, args.max_value + 1), n):
            inst = reductions.PartitionInstance(values)
            want = reductions.is_partitionable(values)
            ms = ItemMultiset({k: 1 for k in range(1, n + 1)})
            got1 = reductions.brute_force_optimum(lambda o: reductions.bidder_gadget_revenue(inst, o), ms).value
            trees, ms1, target1 = reductions.tree_gadget(inst)
            got2 = reductions.brute_force_optimum(lambda o: evaluate_ordering(trees, o, ms1), ms1).value
            lin, ms2, target2 = reductions.linear_gadget(inst)
            got3 = reductions.brute_force_optimum(lambda o: evaluate_ordering(lin, o, ms2), ms2).value
            t = 1.5 * inst.total
            ok = ((got1 >= t - 1e-9) == want and (got2 >= target1 - 1e-9) == want
                  and (got3 >= target2 - 1e-9) == want)
            checked += 1
            if not ok:
                failures += 1
                print(f"MISMATCH {values}: partitionable={want} bidders={got1} trees={got2} linear={got3}")
    print(f"{checked} partition instances checked, {failures} mismatches")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seqauction", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field")
        if out:
            sp.add_argument("--out", default="out", help="output directory")

    for name, fn in [("generate", cmd_generate), ("train", cmd_train), ("bench", cmd_bench)]:
        sp = sub.add_parser(name)
        common(sp)
        sp.set_defaults(fn=fn)
        if name == "bench":
            sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("optimize")
    common(sp)
    sp.add_argument("--method", required=True)
    sp.add_argument("--items", required=True, help="type ids like '1 2 2' or an item-set JSON file")
    sp.add_argument("--models", help="model set JSON (learned-model methods)")
    sp.add_argument("--population", help="population JSON (baselines)")
    sp.set_defaults(fn=cmd_optimize)

    sp = sub.add_parser("evaluate")
    common(sp)
    sp.add_argument("--orderings", required=True)
    sp.add_argument("--population", required=True)
    sp.set_defaults(fn=cmd_evaluate)

    sp = sub.add_parser("fixtures")
    sp.add_argument("--max-n", type=int, default=6)
    sp.add_argument("--max-value", type=int, default=6)
    sp.set_defaults(fn=cmd_fixtures)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.fn(args)
    except harness.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except harness.RelevanceAbort as e:
        print(f"relevance search aborted: {e}", file=sys.stderr)
        return EXIT_RELEVANCE


if __name__ == "__main__":
    sys.exit(main())
