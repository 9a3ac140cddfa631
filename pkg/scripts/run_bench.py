#!/usr/bin/env python3
"""Run the full bench for a config and print the trend summary.

    python3 scripts/run_bench.py configs/desk.json out/desk
"""

import argparse
import json
import time

from seqauction import harness


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("config")
    ap.add_argument("out")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    cfg = harness.ExperimentConfig.load(args.config)
    t0 = time.perf_counter()
    res = harness.run_bench(cfg, args.out, workers=args.workers)
    summary = harness.trend_summary(cfg, res)
    summary["seconds"] = round(time.perf_counter() - t0, 1)
    print(json.dumps(summary, indent=1))


if __name__ == "__main__":
    main()
