"""End-to-end structured pruning on a synthetic task, library API only.

Pipeline: train a small MLP, capture activations and gradient sums on a
held-out prune split, score every hidden unit (utilization from
class-conditional output distances, reconstruction error from a
first-order Taylor estimate), pick per-layer removal counts by bounding
the tolerance-of-difference statistic, cut the network, measure.

Run: python3 demos/02_end_to_end.py
"""

import numpy as np

from todprune import diagnostics, mininet, planner, surgery

SEED = 70

data = mininet.synthetic_blobs(num_classes=10, dim=16, separation=5.0, count=4640, seed=SEED)
split = mininet.stratified_split(data, train_n=2000, prune_n=640, test_n=2000, seed=SEED)

net = mininet.init([16, 64, 32, 10], seed=SEED)
net, trace = mininet.train(net, split.train, epochs=60, lr=0.3, batch_size=32)
dense_acc, _ = mininet.evaluate(net, split.test)
print(f"dense net [16, 64, 32, 10]: test accuracy {dense_acc:.4f}, "
      f"{surgery.count_params(net)} params, final train loss {trace[-1]:.2e}")

# one forward/backward sweep over the prune split; everything the scorer
# needs is in these per-layer dumps
cap = mininet.capture(net, split.prune)
diags = [
    diagnostics.diagnose_layer(
        lc.activations, lc.weight_gradients, lc.bias_gradients, lc.weights, lc.biases,
        seed=SEED,
    )
    for lc in cap.layers
]
report = diagnostics.ScoreReport(layers=diags)

for diag in diags:
    u, e = diag.utilization, diag.reconstruction
    print(f"layer {diag.layer_id}: J={diag.unit_count}, "
          f"utilization [{u.min():.3f} .. {u.max():.3f}], "
          f"reconstruction [{e.min():.2e} .. {e.max():.2e}]")

# the planner walks m = 1..J per layer and keeps the largest m whose
# low-utilization set and high-error set barely overlap
ALPHA = 0.1
for diag in diags:
    curve = planner.tod_curve(diag)
    m_hat = planner.select_m(diag, ALPHA)
    shown = ", ".join(f"{v:.2f}" for v in curve.values[1:9])
    print(f"layer {diag.layer_id}: ToD(1..8) = [{shown} ...], m_hat at alpha={ALPHA} -> {m_hat}")

plan = planner.build_plan(report, ALPHA, net.sizes)
removed = {lp.layer_id: lp.m_hat for lp in plan.layers}
print(f"plan: remove {removed}, predicted pruning rate {plan.pruning_rate:.4f}")

pruned, srep = surgery.apply(net, plan)
os_acc, _ = mininet.evaluate(pruned, split.test)
print(f"pruned net {list(pruned.sizes)}: {surgery.count_params(pruned)} params "
      f"(realized rate {srep.realized_rate:.4f}), one-shot accuracy {os_acc:.4f}")

tuned = mininet.finetune(pruned, split.train, epochs=10, lr=0.05)
ft_acc, _ = mininet.evaluate(tuned, split.test)
print(f"after 10 fine-tune epochs: {ft_acc:.4f} (dense was {dense_acc:.4f})")
