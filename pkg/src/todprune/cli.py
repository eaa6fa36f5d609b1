"""Command-line pipeline: train, capture, score, plan, sweep, apply, eval,
compare, converge, iterate. Every command prints a single JSON summary line
on success. Exit codes: 0 success, 1 internal error, 2 missing or invalid
input, 3 contract mismatch between artifacts.

One --seed flag feeds every random consumer through named streams (init,
batching, data, splits, baselines); --deterministic drops timestamps so
reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

from . import baselines, convergence, diagnostics, dumpio, planner, surgery
from .errors import ContractError, DumpFormatError, TodpruneError
from .mininet import (
    capture,
    evaluate,
    finetune,
    init,
    load_checkpoint,
    load_csv,
    save_checkpoint,
    stratified_split,
    synthetic_blobs,
    train,
    write_capture,
)

_REQUIRED_KINDS = {
    dumpio.KIND_ACTIVATIONS: "activations",
    dumpio.KIND_WEIGHT_GRADIENT: "wgrad",
    dumpio.KIND_BIAS_GRADIENT: "bgrad",
    dumpio.KIND_WEIGHTS: "weights",
    dumpio.KIND_BIASES: "biases",
}


def _tod_level(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not (0.0 < value < 1.0):
        raise argparse.ArgumentTypeError(f"tod level must lie in (0, 1), got {value}")
    return value


def _tod_list(text: str) -> list:
    return [_tod_level(part) for part in text.split(",") if part]


def _int_list(text: str) -> list:
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _synthetic_spec(text: str):
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(
            f"--synthetic takes classes,dim,separation,count; got {text!r}"
        )
    try:
        return int(parts[0]), int(parts[1]), float(parts[2]), int(parts[3])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad --synthetic value {text!r}")


def _add_data_opts(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--dataset", help="CSV with a header and a 'label' column")
    cmd.add_argument(
        "--synthetic",
        type=_synthetic_spec,
        help="Gaussian blob generator: classes,dim,separation,count",
    )
    cmd.add_argument(
        "--splits",
        type=_int_list,
        help="train,prune,test sample counts (default 60/15/25 percent)",
    )


def _load_splits(args):
    if args.dataset and args.synthetic:
        raise ValueError("--dataset and --synthetic are mutually exclusive")
    if args.dataset:
        data = load_csv(args.dataset)
    elif args.synthetic:
        num_classes, dim, separation, count = args.synthetic
        data = synthetic_blobs(num_classes, dim, separation, count, args.seed)
    else:
        raise ValueError("need --dataset or --synthetic")
    if args.splits:
        if len(args.splits) != 3:
            raise ValueError("--splits takes exactly three counts: train,prune,test")
        train_n, prune_n, test_n = args.splits
    else:
        n = len(data)
        train_n, prune_n = int(n * 0.6), int(n * 0.15)
        test_n = n - train_n - prune_n
    return stratified_split(data, train_n, prune_n, test_n, seed=args.seed)


def cmd_train(args):
    splits = _load_splits(args)
    net = init(args.sizes, args.seed)
    net, trace = train(net, splits.train, epochs=args.epochs, lr=args.lr, batch_size=args.batch)
    save_checkpoint(args.checkpoint, net)
    train_acc, train_loss = evaluate(net, splits.train)
    test_acc, test_loss = evaluate(net, splits.test)
    return {
        "command": "train",
        "checkpoint": str(args.checkpoint),
        "sizes": list(net.sizes),
        "epochs": args.epochs,
        "final_loss": trace[-1] if trace else None,
        "train_acc": train_acc,
        "train_loss": train_loss,
        "test_acc": test_acc,
        "test_loss": test_loss,
    }


def cmd_capture(args):
    net = load_checkpoint(args.checkpoint)
    splits = _load_splits(args)
    result = capture(net, splits.prune)
    paths = write_capture(args.dumps, result)
    return {
        "command": "capture",
        "dumps_dir": str(args.dumps),
        "files": len(paths),
        "layers": len(result.layers),
        "samples": result.sample_count,
    }


def _discover_dumps(dumps_dir):
    root = Path(dumps_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"dump directory {root} does not exist")
    by_layer = {}
    for path in sorted(root.glob("*.fpd")):
        dump = dumpio.read_dump(path)
        layer = by_layer.setdefault(dump.header.layer_id, {})
        kind = dump.header.kind
        if kind in layer:
            raise ContractError(
                f"layer {dump.header.layer_id}: duplicate {dumpio.kind_name(kind)} dump"
            )
        layer[kind] = (dump, str(path))
    if not by_layer:
        raise ValueError(f"no .fpd dumps found in {root}")
    for layer_id, kinds in sorted(by_layer.items()):
        for kind in _REQUIRED_KINDS:
            if kind not in kinds:
                raise ValueError(
                    f"layer {layer_id} is missing its {dumpio.kind_name(kind)} dump (kind {kind})"
                )
    return by_layer


def cmd_score(args):
    by_layer = _discover_dumps(args.dumps)
    layers = []
    layer_meta = {}
    paths = []
    for layer_id, kinds in sorted(by_layer.items()):
        diag = diagnostics.diagnose_layer(
            kinds[dumpio.KIND_ACTIVATIONS][0],
            kinds[dumpio.KIND_WEIGHT_GRADIENT][0],
            kinds[dumpio.KIND_BIAS_GRADIENT][0],
            kinds[dumpio.KIND_WEIGHTS][0],
            kinds[dumpio.KIND_BIASES][0],
            num_projections=args.projections,
            seed=args.seed,
        )
        layers.append(diag)
        layer_meta[str(layer_id)] = {
            "sample_count": diag.sample_count,
            "class_count": diag.class_count,
        }
        paths.extend(path for _, path in kinds.values())
    meta = {
        "dumps_dir": str(args.dumps),
        "dumps": sorted(paths),
        "seed": args.seed,
        "num_projections": args.projections,
        "layers": layer_meta,
    }
    if not args.deterministic:
        meta["created"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    report = diagnostics.ScoreReport(layers=layers, meta=meta)
    diagnostics.write_score_report(args.report, report)
    return {
        "command": "score",
        "report": str(args.report),
        "layers": [
            {"layer": diag.layer_id, "J": diag.unit_count} for diag in layers
        ],
    }


def cmd_plan(args):
    report = diagnostics.read_score_report(args.report)
    net = load_checkpoint(args.checkpoint)
    plan = planner.build_plan(report, args.tod, net.sizes)
    planner.write_plan(args.plan, plan)
    return {
        "command": "plan",
        "plan": str(args.plan),
        "tod_level": plan.tod_level,
        "pruning_rate": plan.pruning_rate,
        "m_hat": {str(lp.layer_id): lp.m_hat for lp in plan.layers},
    }


def cmd_sweep(args):
    report = diagnostics.read_score_report(args.report)
    net = load_checkpoint(args.checkpoint)
    plans = planner.sweep(report, args.tod, net.sizes)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for alpha, plan in zip(args.tod, plans):
        path = out_dir / f"plan_tod{alpha:g}.json"
        planner.write_plan(path, plan)
        entries.append(
            {"tod_level": alpha, "plan": str(path), "pruning_rate": plan.pruning_rate}
        )
    return {"command": "sweep", "plans": entries}


def cmd_apply(args):
    net = load_checkpoint(args.checkpoint)
    plan = planner.read_plan(args.plan)
    pruned, report = surgery.apply(net, plan)
    save_checkpoint(args.out, pruned)
    if args.surgery_report:
        surgery.write_surgery_report(args.surgery_report, report)
    return {
        "command": "apply",
        "checkpoint": str(args.out),
        "sizes": list(pruned.sizes),
        "params_before": report.params_before,
        "params_after": report.params_after,
        "pruning_rate": report.realized_rate,
        "flops_before": report.flops_before,
        "flops_after": report.flops_after,
    }


def cmd_eval(args):
    splits = _load_splits(args)
    split = getattr(splits, args.split)
    rows = []
    for path in args.checkpoint:
        net = load_checkpoint(path)
        acc, loss = evaluate(net, split)
        rows.append({"checkpoint": str(path), "accuracy": acc, "mean_loss": loss})
    return {"command": "eval", "split": args.split, "results": rows}


def _parse_methods(text: str) -> list:
    specs = []
    for part in text.split(","):
        if not part:
            continue
        name, _, knob = part.partition(":")
        if not knob:
            raise ValueError(f"method {part!r} needs a value, e.g. l1:0.25")
        value = float(knob)
        if name in ("l1", "random_uniform"):
            specs.append(baselines.BaselineSpec(method=name, rate=value))
        else:
            specs.append(baselines.BaselineSpec(method=name, alpha=value))
    if not specs:
        raise ValueError("no comparison methods given")
    return specs


def cmd_compare(args):
    net = load_checkpoint(args.checkpoint)
    splits = _load_splits(args)
    specs = _parse_methods(args.methods)
    report = diagnostics.read_score_report(args.report) if args.report else None
    rows = baselines.run_comparison(
        net,
        splits,
        specs,
        trials=args.trials,
        seed=args.seed,
        report=report,
        ft_epochs=args.ft_epochs,
        lr=args.lr,
        batch_size=args.batch,
    )
    if args.out:
        baselines.write_comparison_csv(args.out, rows)
    return {
        "command": "compare",
        "rows": len(rows),
        "csv": str(args.out) if args.out else None,
        "summary": baselines.summarize_comparison(rows),
    }


def cmd_converge(args):
    net = load_checkpoint(args.checkpoint)
    splits = _load_splits(args)
    report = convergence.run_convergence(
        net,
        splits.prune,
        sizes=args.sizes,
        resamples=args.resamples,
        seed=args.seed,
        layer_id=args.layer,
        num_projections=args.projections,
    )
    include_timing = not args.deterministic
    if args.out:
        convergence.write_convergence_report(args.out, report, include_timing)
    if args.csv:
        convergence.write_convergence_csv(args.csv, report, include_timing)
    summary = {
        "command": "converge",
        "layer": report.layer_id,
        "sizes": report.sizes,
        "resamples": report.resamples,
        "mean_sd_per_size": [float(v) for v in report.unit_sds.mean(axis=1)],
    }
    if include_timing:
        summary["wall_time_sec"] = [float(t) for t in report.wall_times]
    return summary


def cmd_iterate(args):
    net = load_checkpoint(args.checkpoint)
    splits = _load_splits(args)
    params_start = surgery.count_params(net)
    rows = []
    status = "completed"
    for round_index in range(1, args.rounds + 1):
        result = capture(net, splits.prune)
        layers = [
            diagnostics.diagnose_layer(
                layer.activations,
                layer.weight_gradients,
                layer.bias_gradients,
                layer.weights,
                layer.biases,
                num_projections=args.projections,
                seed=args.seed,
            )
            for layer in result.layers
        ]
        report = diagnostics.ScoreReport(layers=layers)
        plan = planner.build_plan(report, args.tod, net.sizes)
        if all(lp.m_hat == 0 for lp in plan.layers):
            status = "converged"
            break
        net, _ = surgery.apply(net, plan)
        os_acc, _ = evaluate(net, splits.test)
        net = finetune(net, splits.train, epochs=args.ft_epochs, lr=args.lr, batch_size=args.batch)
        ft_acc, _ = evaluate(net, splits.test)
        cumulative = (params_start - surgery.count_params(net)) / params_start
        rows.append(
            {
                "round": round_index,
                "round_pr": plan.pruning_rate,
                "cumulative_pr": cumulative,
                "os_acc": os_acc,
                "ft_acc": ft_acc,
            }
        )
    save_checkpoint(args.out, net)
    if args.csv:
        with open(args.csv, "w", newline="") as handle:
            writer = csv.DictWriter(
                handle, fieldnames=["round", "round_pr", "cumulative_pr", "os_acc", "ft_acc"]
            )
            writer.writeheader()
            writer.writerows(rows)
    final_acc, _ = evaluate(net, splits.test)
    return {
        "command": "iterate",
        "status": status,
        "rounds_run": len(rows),
        "checkpoint": str(args.out),
        "cumulative_pr": rows[-1]["cumulative_pr"] if rows else 0.0,
        "final_acc": final_acc,
        "rounds": rows,
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="todprune",
        description="Structured pruning driven by class-distribution utilization "
        "scores and first-order reconstruction errors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cmd = sub.add_parser("train", help="train the embedded dense classifier")
    _add_data_opts(cmd)
    cmd.add_argument("--sizes", type=_int_list, required=True, help="e.g. 16,64,32,10")
    cmd.add_argument("--epochs", type=int, default=40)
    cmd.add_argument("--lr", type=float, default=0.1)
    cmd.add_argument("--batch", type=int, default=32)
    cmd.add_argument("--checkpoint", required=True, help="output FPM1 path")
    cmd.set_defaults(func=cmd_train)

    cmd = sub.add_parser("capture", help="dump activations, gradients, parameters")
    _add_data_opts(cmd)
    cmd.add_argument("--checkpoint", required=True)
    cmd.add_argument("--dumps", required=True, help="output directory for FPD1 files")
    cmd.set_defaults(func=cmd_capture)

    cmd = sub.add_parser("score", help="compute utilization and reconstruction scores")
    cmd.add_argument("--dumps", required=True)
    cmd.add_argument("--report", required=True, help="output ScoreReport JSON")
    cmd.set_defaults(func=cmd_score)

    cmd = sub.add_parser("plan", help="select per-layer prune counts at one tod level")
    cmd.add_argument("--report", required=True)
    cmd.add_argument("--checkpoint", required=True)
    cmd.add_argument("--tod", type=_tod_level, required=True)
    cmd.add_argument("--plan", required=True, help="output PruningPlan JSON")
    cmd.set_defaults(func=cmd_plan)

    cmd = sub.add_parser("sweep", help="plans for several tod levels from one report")
    cmd.add_argument("--report", required=True)
    cmd.add_argument("--checkpoint", required=True)
    cmd.add_argument("--tod", type=_tod_list, required=True, help="e.g. 0.05,0.1,0.3")
    cmd.add_argument("--out-dir", required=True)
    cmd.set_defaults(func=cmd_sweep)

    cmd = sub.add_parser("apply", help="apply a plan to a checkpoint")
    cmd.add_argument("--checkpoint", required=True)
    cmd.add_argument("--plan", required=True)
    cmd.add_argument("--out", required=True, help="output FPM1 path")
    cmd.add_argument("--surgery-report", help="optional SurgeryReport JSON path")
    cmd.set_defaults(func=cmd_apply)

    cmd = sub.add_parser("eval", help="accuracy and loss of one or more checkpoints")
    _add_data_opts(cmd)
    cmd.add_argument("--checkpoint", nargs="+", required=True)
    cmd.add_argument("--split", choices=["train", "prune", "test"], default="test")
    cmd.set_defaults(func=cmd_eval)

    cmd = sub.add_parser("compare", help="prune with competing strategies and measure")
    _add_data_opts(cmd)
    cmd.add_argument("--checkpoint", required=True)
    cmd.add_argument("--report", help="ScoreReport JSON (needed by fair/random_tod)")
    cmd.add_argument(
        "--methods",
        required=True,
        help="comma list of method:value, e.g. fair:0.1,l1:0.25,random_uniform:0.25,random_tod:0.1",
    )
    cmd.add_argument("--trials", type=int, default=20)
    cmd.add_argument("--ft-epochs", type=int, default=10)
    cmd.add_argument("--lr", type=float, default=0.05)
    cmd.add_argument("--batch", type=int, default=32)
    cmd.add_argument("--out", help="results CSV path")
    cmd.set_defaults(func=cmd_compare)

    cmd = sub.add_parser("converge", help="score stability vs pruning-set size")
    _add_data_opts(cmd)
    cmd.add_argument("--checkpoint", required=True)
    cmd.add_argument("--sizes", type=_int_list, required=True, help="e.g. 64,256,1024")
    cmd.add_argument("--resamples", type=int, default=20)
    cmd.add_argument("--layer", type=int, default=1)
    cmd.add_argument("--out", help="report JSON path")
    cmd.add_argument("--csv", help="report CSV path")
    cmd.set_defaults(func=cmd_converge)

    cmd = sub.add_parser("iterate", help="repeated capture-score-plan-apply-finetune")
    _add_data_opts(cmd)
    cmd.add_argument("--checkpoint", required=True)
    cmd.add_argument("--tod", type=_tod_level, default=0.1)
    cmd.add_argument("--rounds", type=int, default=3)
    cmd.add_argument("--ft-epochs", type=int, default=10)
    cmd.add_argument("--lr", type=float, default=0.05)
    cmd.add_argument("--batch", type=int, default=32)
    cmd.add_argument("--out", required=True, help="final checkpoint path")
    cmd.add_argument("--csv", help="per-round metrics CSV")
    cmd.set_defaults(func=cmd_iterate)

    for sp in sub.choices.values():
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--projections", type=int, default=32)
        sp.add_argument("--deterministic", action="store_true", help="omit timestamps")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        summary = args.func(args)
    except (DumpFormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except TodpruneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
