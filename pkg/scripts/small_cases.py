#!/usr/bin/env python3
"""Walk through the two-item market end to end and print every intermediate."""

import sys
from pathlib import Path

from seqauction.auction import AgentProfile, ItemMultiset, ItemType, run_auction
from seqauction.features import FeatureSchema, trace_to_rows, traces_to_dataset
from seqauction.reductions import multiset_permutations
from seqauction.regressors import evaluate_ordering, fit_tree
from seqauction.whitebox import encode, lp_text, solve

types = [ItemType(1, 5.0, 4.0), ItemType(2, 6.0, 4.0)]
agents = [AgentProfile(1, 5.0, {1: 5.0, 2: 6.0}, {1: 4.0, 2: 5.0}),
          AgentProfile(2, 5.0, {2: 5.0}, {2: 4.0})]

traces = [run_auction(types, agents, o) for o in ([1, 2], [2, 1])]
for tr in traces:
    print("ordering", tr.sequence, "revenue", tr.total_revenue)

schema = FeatureSchema([1, 2])
print("\ntraining rows")
for tr in traces:
    for row in trace_to_rows(tr, schema):
        print(" ", dict(zip(schema.names, schema.vector(row))), "->", row.observed_value)

ds = traces_to_dataset(traces, schema)
models = {r: fit_tree(ds.for_type(r), schema, 3, 2, r) for r in (1, 2)}
print("\ntrees")
for r, m in models.items():
    print(" ", r, m.to_dict()["root"])

ms = ItemMultiset({1: 1, 2: 3})
print("\nordering values")
for o in multiset_permutations(ms):
    print(" ", o, evaluate_ordering(models, o, ms))

small = ItemMultiset({1: 1, 2: 2})
print("\nsolve", solve(models, small))
if len(sys.argv) > 1:
    Path(sys.argv[1]).write_text(lp_text(encode(models, small, loose=True)))
    print("LP written to", sys.argv[1])
