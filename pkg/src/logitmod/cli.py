"""Command-line interface.

Subcommands: ``theory`` (closed-form values), ``verify`` (closed form vs
Monte Carlo), ``modulate`` (transform a dataset file), ``sweep`` (sigma
sweeps to CSV), ``eval`` (metrics of stored logits), and ``synth``
(synthetic dataset generation).

Exit codes: 0 on success, 1 for data/parse errors, 2 for usage errors.
JSON-producing commands print exactly one JSON object on stdout, with
numbers at 15 significant digits.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .dataio import (
    DatasetManifest,
    ParseError,
    SyntheticSpec,
    load_classification_manifest,
    load_segmentation_manifest,
    read_classification,
    read_logits_tensor,
    synth_classification,
    synth_segmentation,
    write_classification,
    write_logits_tensor,
    write_manifest,
    write_segmentation,
)
from .mc import mc_focus_preservation, mc_order_preservation
from .metrics import ClassificationDataset, segmentation_metrics, predict_map
from .modulate import ModulationSpec, apply_focus, apply_to_tensor, apply_utility
from .stats import RngStream
from .sweep import FocusSweepConfig, SweepConfig, sweep_focus, sweep_utility, write_sweep_csv
from .theory import focus_preservation_prob, gap_profile, order_preservation_prob, order_preservation_rate

_K_MODULATE = 301
_K_SYNTH_SEG = 302

_INDEPENDENCE_NOTE = (
    "closed form multiplies per-adjacent-pair probabilities and treats those "
    "events as independent; for n >= 3 it approximates the exact joint "
    "order-preservation probability"
)


def _round15(value):
    if isinstance(value, float):
        return float(format(value, ".15g"))
    if isinstance(value, dict):
        return {k: _round15(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_round15(v) for v in value]
    return value


def _emit_json(obj) -> None:
    sys.stdout.write(json.dumps(_round15(obj)) + "\n")


def _parse_floats(text: str) -> list[float]:
    try:
        values = [float(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise ValueError(f"expected a comma-separated list of numbers, got {text!r}") from None
    if not values:
        raise ValueError("expected a non-empty list of numbers")
    return values


def _parse_ints(text: str) -> list[int]:
    try:
        values = [int(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise ValueError(f"expected a comma-separated list of integers, got {text!r}") from None
    if not values:
        raise ValueError("expected a non-empty list of integers")
    return values


def read_tier_config(path) -> dict[str, float]:
    """Parse ``name=sigma`` lines; ``#`` starts a comment."""
    tiers: dict[str, float] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, value = line.partition("=")
        if not sep:
            raise ParseError(path, "expected 'name=sigma'", line=lineno)
        try:
            sigma = float(value.strip())
        except ValueError:
            raise ParseError(path, f"bad sigma value {value.strip()!r}", line=lineno) from None
        tiers[name.strip()] = sigma
    return tiers


def _resolve_sigma(args) -> float:
    if args.tier is not None:
        if args.tier_config is None:
            raise ValueError("--tier requires --tier-config")
        tiers = read_tier_config(args.tier_config)
        if args.tier not in tiers:
            raise ValueError(f"tier {args.tier!r} not found in {args.tier_config}")
        return tiers[args.tier]
    if args.sigma is None:
        raise ValueError("one of --sigma or --tier is required")
    return args.sigma


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_theory_order_prob(args) -> int:
    profile = gap_profile(_parse_floats(args.logits))
    _emit_json({"probability": order_preservation_prob(profile, args.sigma)})
    return 0


def _cmd_theory_order_rate(args) -> int:
    profile = gap_profile(_parse_floats(args.logits))
    _emit_json({"rate": order_preservation_rate(profile, args.sigma)})
    return 0


def _cmd_theory_focus_prob(args) -> int:
    _emit_json({"probability": focus_preservation_prob(args.gap, args.sigma)})
    return 0


def _cmd_verify_order_prob(args) -> int:
    logits = _parse_floats(args.logits)
    closed = order_preservation_prob(gap_profile(logits), args.sigma)
    est = mc_order_preservation(
        logits, args.sigma, args.trials, RngStream(args.seed, args.stream), args.confidence
    )
    report = {
        "kind": "order-preservation",
        "n": len(logits),
        "sigma": args.sigma,
        "closed_form": closed,
        "estimate": est.estimate,
        "ci_low": est.ci_low,
        "ci_high": est.ci_high,
        "trials": est.trials,
        "confidence": est.confidence,
        "deviation": est.estimate - closed,
        "consistent": est.consistent_with(closed),
    }
    if len(logits) >= 3:
        report["note"] = _INDEPENDENCE_NOTE
    _emit_json(report)
    return 0


def _cmd_verify_focus_prob(args) -> int:
    closed = focus_preservation_prob(args.gap, args.sigma)
    est = mc_focus_preservation(
        args.gap, args.sigma, args.trials, RngStream(args.seed, args.stream), args.confidence
    )
    _emit_json(
        {
            "kind": "focus-preservation",
            "gap": args.gap,
            "sigma": args.sigma,
            "closed_form": closed,
            "estimate": est.estimate,
            "ci_low": est.ci_low,
            "ci_high": est.ci_high,
            "trials": est.trials,
            "confidence": est.confidence,
            "deviation": est.estimate - closed,
            "consistent": est.consistent_with(closed),
        }
    )
    return 0


def _infer_kind(args) -> str:
    if args.kind:
        return args.kind
    suffix = Path(args.input).suffix.lower()
    if suffix == ".csv":
        return "classification"
    if suffix == ".aimt":
        return "segmentation"
    raise ValueError("cannot infer --kind from the input extension; pass --kind")


def _cmd_modulate(args) -> int:
    sigma = _resolve_sigma(args)
    targets = frozenset(_parse_ints(args.targets)) if args.targets else frozenset()
    spec = ModulationSpec(args.mode, sigma, targets=targets, seed=args.seed)
    root = RngStream(spec.seed)
    if _infer_kind(args) == "classification":
        dataset = read_classification(args.input)
        rows = []
        for i, row in enumerate(dataset.logits):
            stream = root.substream(_K_MODULATE, i)
            if spec.mode == "utility":
                rows.append(apply_utility(row, spec.sigma, stream))
            else:
                rows.append(apply_focus(row, spec.targets, spec.direction, spec.sigma, stream))
        out = ClassificationDataset(dataset.num_classes, np.array(rows), dataset.labels)
        write_classification(out, args.output)
    else:
        tensor = read_logits_tensor(args.input)
        modulated = apply_to_tensor(tensor, spec, root.substream(_K_MODULATE, 0))
        write_logits_tensor(modulated, args.output)
    print(f"wrote {args.output} (mode={spec.mode}, sigma={sigma:g})")
    return 0


def _load_sweep_input(args):
    if args.dataset is not None:
        return read_classification(args.dataset)
    return load_segmentation_manifest(args.manifest)


def _print_records(result) -> None:
    for rec in result.records:
        parts = " ".join(f"{k}={v:.6f}" for k, v in rec.metrics.items())
        print(f"sigma={rec.sigma:g} {parts}")


def _cmd_sweep_utility(args) -> int:
    data = _load_sweep_input(args)
    cfg = SweepConfig(
        sigma_max=args.sigma_max,
        seed=args.seed,
        sigma_start=args.sigma_start,
        sigma_step=args.sigma_step,
        stop_rule=args.stop_rule,
        chance_epsilon=args.chance_epsilon,
        plateau_steps=args.plateau_steps,
        repeats=args.repeats,
    )
    result = sweep_utility(data, cfg)
    write_sweep_csv(result, args.out)
    _print_records(result)
    print(f"stop_reason={result.stop_reason} records={len(result.records)} out={args.out}")
    return 0


def _cmd_sweep_focus(args) -> int:
    instances = load_segmentation_manifest(args.manifest)
    cfg = FocusSweepConfig(
        base=SweepConfig(
            sigma_max=args.sigma_max,
            seed=args.seed,
            sigma_start=args.sigma_start,
            sigma_step=args.sigma_step,
            stop_rule="explicit-max",
            repeats=args.repeats,
        ),
        targets=tuple(_parse_ints(args.targets)),
        direction=args.direction,
        miou_tolerance=args.miou_tolerance,
    )
    result = sweep_focus(instances, cfg)
    write_sweep_csv(result, args.out)
    _print_records(result)
    print(
        f"stop_reason={result.stop_reason} max_feasible_sigma="
        f"{result.max_feasible_sigma:g} out={args.out}"
    )
    return 0


def _cmd_eval_classify(args) -> int:
    if args.dataset.endswith(".txt"):
        dataset = load_classification_manifest(args.dataset)
    else:
        dataset = read_classification(args.dataset)
    accuracy = float(np.mean(np.argmax(dataset.logits, axis=1) == dataset.labels))
    _emit_json({"accuracy": accuracy})
    return 0


def _cmd_eval_segment(args) -> int:
    instances = load_segmentation_manifest(args.manifest)
    m = segmentation_metrics(instances, [predict_map(i.logits) for i in instances])
    _emit_json(
        {
            "mean_iou": m.mean_iou,
            "per_class_pixel_accuracy": {str(k): v for k, v in sorted(m.per_class_pixel_accuracy.items())},
            "per_class_iou": {str(k): v for k, v in sorted(m.per_class_iou.items())},
        }
    )
    return 0


def _cmd_synth_classify(args) -> int:
    spec = SyntheticSpec(
        num_classes=args.classes,
        samples=args.samples,
        margin=args.margin,
        intra_noise=args.intra_noise,
        seed=args.seed,
    )
    write_classification(synth_classification(spec), args.out)
    print(f"wrote {args.out} ({args.samples} samples, {args.classes} classes)")
    return 0


def _cmd_synth_segment(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for k in range(args.instances):
        child_seed = RngStream(args.seed).substream(_K_SYNTH_SEG, k).stream
        spec = SyntheticSpec(
            num_classes=args.classes,
            samples=1,
            margin=args.margin,
            intra_noise=args.intra_noise,
            seed=child_seed,
        )
        instance = synth_segmentation(spec, args.height, args.width)
        logits_name = f"{args.prefix}{k:04d}.aimt"
        labels_name = f"{args.prefix}{k:04d}.aiml"
        write_segmentation(instance, out_dir / logits_name, out_dir / labels_name)
        entries.append((logits_name, labels_name))
    manifest = DatasetManifest(
        kind="segmentation", num_classes=args.classes, paths=tuple(entries), seed=args.seed
    )
    write_manifest(manifest, out_dir / args.manifest)
    print(f"wrote {args.instances} instances plus {out_dir / args.manifest}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logitmod",
        description="Modulate model logits and analyze the effect on output order.",
    )
    top = parser.add_subparsers(dest="command", required=True)

    theory = top.add_parser("theory", help="closed-form probabilities").add_subparsers(
        dest="subcommand", required=True
    )
    p = theory.add_parser("order-prob", help="order-preservation probability")
    p.add_argument("--logits", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.set_defaults(func=_cmd_theory_order_prob)
    p = theory.add_parser("order-rate", help="its derivative w.r.t. sigma^2")
    p.add_argument("--logits", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.set_defaults(func=_cmd_theory_order_rate)
    p = theory.add_parser("focus-prob", help="focus-preservation probability")
    p.add_argument("--gap", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.set_defaults(func=_cmd_theory_focus_prob)

    verify = top.add_parser("verify", help="closed form vs Monte Carlo").add_subparsers(
        dest="subcommand", required=True
    )
    for name, handler, value_flags in (
        ("order-prob", _cmd_verify_order_prob, "logits"),
        ("focus-prob", _cmd_verify_focus_prob, "gap"),
    ):
        p = verify.add_parser(name)
        if value_flags == "logits":
            p.add_argument("--logits", required=True)
        else:
            p.add_argument("--gap", type=float, required=True)
        p.add_argument("--sigma", type=float, required=True)
        p.add_argument("--trials", type=int, required=True)
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--stream", type=int, default=0)
        p.add_argument("--confidence", type=float, default=0.99)
        p.set_defaults(func=handler)

    p = top.add_parser("modulate", help="modulate a stored dataset")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--mode", choices=["utility", "focus-up", "focus-down"], required=True)
    p.add_argument("--sigma", type=float)
    p.add_argument("--tier")
    p.add_argument("--tier-config")
    p.add_argument("--targets", help="comma-separated class indices (focus modes)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--kind", choices=["classification", "segmentation"])
    p.set_defaults(func=_cmd_modulate)

    sweep = top.add_parser("sweep", help="sigma sweeps").add_subparsers(
        dest="subcommand", required=True
    )
    p = sweep.add_parser("utility")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset", help="classification CSV")
    src.add_argument("--manifest", help="segmentation manifest")
    p.add_argument("--sigma-start", type=float, default=0.0)
    p.add_argument("--sigma-step", type=float, default=0.2)
    p.add_argument("--sigma-max", type=float, required=True)
    p.add_argument("--stop-rule", choices=["explicit-max", "chance-plateau"], default="chance-plateau")
    p.add_argument("--chance-epsilon", type=float, default=0.02)
    p.add_argument("--plateau-steps", type=int, default=2)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep_utility)
    p = sweep.add_parser("focus")
    p.add_argument("--manifest", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--direction", choices=["up", "down"], default="up")
    p.add_argument("--sigma-start", type=float, default=0.0)
    p.add_argument("--sigma-step", type=float, default=0.2)
    p.add_argument("--sigma-max", type=float, required=True)
    p.add_argument("--miou-tolerance", type=float, default=0.5)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep_focus)

    evalp = top.add_parser("eval", help="evaluate stored logits").add_subparsers(
        dest="subcommand", required=True
    )
    p = evalp.add_parser("classify")
    p.add_argument("--dataset", required=True)
    p.set_defaults(func=_cmd_eval_classify)
    p = evalp.add_parser("segment")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=_cmd_eval_segment)

    synth = top.add_parser("synth", help="synthetic datasets").add_subparsers(
        dest="subcommand", required=True
    )
    p = synth.add_parser("classify")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--margin", type=float, required=True)
    p.add_argument("--intra-noise", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth_classify)
    p = synth.add_parser("segment")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--instances", type=int, required=True)
    p.add_argument("--margin", type=float, required=True)
    p.add_argument("--intra-noise", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--prefix", default="inst_")
    p.add_argument("--manifest", default="manifest.txt")
    p.set_defaults(func=_cmd_synth_segment)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
