#!/usr/bin/env python3
"""Builds the cross-package fixtures the bridge tests diff against.

Produces, in the directory given as argv[1]:
  dense.fpm    trained dense checkpoint (the host model's source of truth)
  prune.csv    the pruning split, in capture order
  py_dumps/    capture dumps written by the reference implementation
  plan.json    a plan built from those dumps
  pruned.fpm   the reference surgery result for that plan
  probe.csv    held-out rows for logit equivalence checks

Everything is seeded; runs must be byte-stable. Floats go through
%.17g so the CSV round-trips float64 exactly.
"""

import json
import sys
from pathlib import Path

from todprune import diagnostics, mininet, planner, surgery

SEED = 11
ALPHAS = (0.1, 0.15, 0.2, 0.25, 0.3, 0.4)


def write_csv(path, features, labels):
    cols = features.shape[1]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join([f"f{i}" for i in range(cols)] + ["label"]) + "\n")
        for row, label in zip(features, labels):
            fh.write(",".join("%.17g" % v for v in row) + f",{int(label)}\n")


def main() -> int:
    out = Path(sys.argv[1])
    out.mkdir(parents=True, exist_ok=True)

    data = mininet.synthetic_blobs(6, 8, 3.0, 900, seed=SEED)
    split = mininet.stratified_split(data, 400, 240, 260, seed=SEED)
    net = mininet.init([8, 24, 12, 6], seed=SEED)
    net, _ = mininet.train(net, split.train, epochs=25, lr=0.25)
    mininet.save_checkpoint(out / "dense.fpm", net)
    dense_acc, _ = mininet.evaluate(net, split.test)

    write_csv(out / "prune.csv", split.prune.features, split.prune.labels)
    write_csv(out / "probe.csv", split.test.features[:64], split.test.labels[:64])

    cap = mininet.capture(net, split.prune)
    mininet.write_capture(out / "py_dumps", cap)

    layers = [
        diagnostics.diagnose_layer(
            lc.activations,
            lc.weight_gradients,
            lc.bias_gradients,
            lc.weights,
            lc.biases,
            seed=0,
        )
        for lc in cap.layers
    ]
    report = diagnostics.ScoreReport(layers=layers, meta={"seed": 0})

    plan = None
    alpha_used = None
    for alpha in ALPHAS:
        candidate = planner.build_plan(report, alpha, net.sizes)
        if all(lp.m_hat >= 1 for lp in candidate.layers):
            plan, alpha_used = candidate, alpha
            break
        if plan is None and any(lp.m_hat >= 1 for lp in candidate.layers):
            plan, alpha_used = candidate, alpha
    if plan is None:
        print("no alpha in the scan produced a non-empty plan", file=sys.stderr)
        return 1
    planner.write_plan(out / "plan.json", plan)

    pruned, _report = surgery.apply(net, plan)
    mininet.save_checkpoint(out / "pruned.fpm", pruned)
    pruned_acc, _ = mininet.evaluate(pruned, split.test)

    print(
        json.dumps(
            {
                "dense_acc": dense_acc,
                "pruned_acc": pruned_acc,
                "alpha": alpha_used,
                "rate": plan.pruning_rate,
                "removed": {lp.layer_id: lp.m_hat for lp in plan.layers},
                "sizes": list(net.sizes),
            }
        )
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
