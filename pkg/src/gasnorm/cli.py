"""Command line entry point.

Subcommands: gen, fit, normalize, forecast, eval, experiment.
Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .datagen import ArSpec, LorenzSpec, gen_ar, gen_lorenz, write_spec_sidecar
from .errors import NumericalError, ValidationError
from .evaluation import EvalReport, ExperimentSpec, emit_report, mase, run_experiment
from .filtering import Family, GasParams
from .fitting import FitConfig, fit_frame, fit_results_from_dict, fit_results_to_dict
from .mlp import MlpSpec, TrainedModel, predict
from .normalization import (
    NormalizerKind,
    NormalizerSpec,
    denormalize,
    normalize,
    save_batch,
)
from .series import SeriesFrame, SplitSpec, load_csv, write_csv


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--config", type=str, default=None, help="JSON config file")
    parser.add_argument("--output-dir", type=str, default=".")
    parser.add_argument("--dist", choices=["gaussian", "student_t"], default="student_t")
    parser.add_argument("--nu", type=float, default=100.0)
    parser.add_argument("--gamma", type=float, default=0.5)


def _load_config(args) -> dict:
    if not args.config:
        return {}
    with open(args.config) as fh:
        return json.load(fh)


def _out(args, name: str) -> str:
    os.makedirs(args.output_dir, exist_ok=True)
    return os.path.join(args.output_dir, name)


def _cmd_gen(args) -> int:
    cfg = _load_config(args)
    kind = args.kind or cfg.get("kind")
    if kind == "ar":
        spec = ArSpec(
            length=cfg.get("length", args.length),
            ar_coeffs=tuple(cfg.get("ar_coeffs", args.ar_coeffs)),
            noise_std=cfg.get("noise_std", args.noise_std),
            season_amplitude=cfg.get("season_amplitude", args.season_amplitude),
            season_period=cfg.get("season_period", args.season_period),
            trend_slope=cfg.get("trend_slope", args.trend_slope),
            seed=cfg.get("seed", args.seed),
        )
        frame = gen_ar(spec)
    elif kind == "lorenz":
        spec = LorenzSpec(
            dt=cfg.get("dt", args.dt),
            steps=cfg.get("steps", args.steps),
            noise_std=cfg.get("noise_std"),
            seed=cfg.get("seed", args.seed),
        )
        frame = gen_lorenz(spec)
    else:
        raise ValidationError(f"unknown generator kind {kind!r}")
    csv_path = _out(args, f"{kind}.csv")
    write_csv(frame, csv_path)
    write_spec_sidecar(spec, _out(args, f"{kind}.json"))
    print(csv_path)
    return 0


def _cmd_fit(args) -> int:
    frame = load_csv(args.data)
    config = FitConfig(
        gamma=args.gamma,
        family=Family(args.dist),
        nu=args.nu,
        seed=args.seed,
        restarts=args.restarts,
        max_iters=args.max_iters,
        fit_nu=args.fit_nu,
    )
    results = fit_frame(frame, config)
    path = _out(args, "params.json")
    with open(path, "w") as fh:
        json.dump(fit_results_to_dict(results), fh, indent=2)
    print(path)
    return 0


def _load_params(path) -> dict[str, GasParams]:
    with open(path) as fh:
        doc = json.load(fh)
    return {name: r.params for name, r in fit_results_from_dict(doc).items()}


def _make_normalizer(args, frame: SeriesFrame) -> NormalizerSpec:
    kind = NormalizerKind(args.normalizer)
    if kind is NormalizerKind.GAS_NORM:
        if not args.params:
            raise ValidationError("gas_norm requires --params")
        return NormalizerSpec(kind, gas_params=_load_params(args.params))
    if kind is NormalizerKind.GLOBAL_NORM:
        stats = {
            n: (float(np.mean(frame.feature(n))), float(np.var(frame.feature(n))))
            for n in frame.feature_names
        }
        return NormalizerSpec(kind, global_stats=stats)
    return NormalizerSpec(kind)


def _cmd_normalize(args) -> int:
    frame = load_csv(args.data)
    nspec = _make_normalizer(args, frame)
    batch = normalize(nspec, frame.values, args.horizon, frame.feature_names)
    stem = _out(args, args.stem)
    save_batch(batch, stem)
    print(stem + "_normalized.csv")
    return 0


def _cmd_forecast(args) -> int:
    frame = load_csv(args.data)
    nspec = _make_normalizer(args, frame)
    batch = normalize(nspec, frame.values, args.horizon, frame.feature_names)
    if args.model:
        with open(args.model) as fh:
            model = TrainedModel.from_dict(json.load(fh))
        residual = predict(model, batch.normalized_context)
    else:
        # no residual model: the forecast is the filter's own statistics path
        residual = np.zeros_like(batch.horizon_mu)
    forecast = denormalize(residual, batch)
    path = _out(args, "forecast.csv")
    write_csv(SeriesFrame(forecast, frame.feature_names), path)
    print(path)
    return 0


def _cmd_eval(args) -> int:
    actual = load_csv(args.actual)
    forecast = load_csv(args.forecast)
    train = load_csv(args.train)
    values = mase(actual.values, forecast.values, train.values, args.m)
    for name, v in zip(actual.feature_names, values):
        print(f"{name},{v:.17g}")
    return 0


def experiment_spec_from_dict(doc: dict) -> ExperimentSpec:
    ds = doc["dataset"]
    kind = ds.get("kind", "csv")
    if kind == "ar":
        dataset = ArSpec(**{k: v for k, v in ds.items() if k != "kind"})
    elif kind == "lorenz":
        dataset = LorenzSpec(**{k: v for k, v in ds.items() if k != "kind"})
    else:
        dataset = ds["path"]
    fc = doc.get("forecaster", {})
    forecaster = MlpSpec(
        tuple(fc.get("layer_widths", (64, 64))),
        fc.get("activation", "relu"),
        fc.get("learning_rate", 0.01),
        fc.get("epochs", 100),
        fc.get("batch_size", 32),
        fc.get("seed", 0),
    )
    sp = doc["split"]
    split_spec = SplitSpec(
        sp["train_fraction"],
        sp.get("val_fraction", 0.0),
        sp["context_length"],
        sp["horizon"],
    )
    return ExperimentSpec(
        dataset=dataset,
        normalizers=tuple(doc.get("normalizers", ["gas_norm", "global_norm"])),
        forecaster=forecaster,
        split=split_spec,
        gammas=tuple(doc.get("gammas", (0.0, 0.1, 0.5))),
        seeds=tuple(doc.get("seeds", (0,))),
        mase_seasonality=doc.get("mase_seasonality", 1),
        family=doc.get("family", "student_t"),
        nu=doc.get("nu", 100.0),
        fit_seed=doc.get("fit_seed", 0),
        fit_restarts=doc.get("fit_restarts", 2),
        fit_max_iters=doc.get("fit_max_iters", 300),
        stride=doc.get("stride", 1),
    )


def _cmd_experiment(args) -> int:
    if not args.config:
        raise ValidationError("experiment requires --config")
    spec = experiment_spec_from_dict(_load_config(args))
    report = run_experiment(spec)
    os.makedirs(args.output_dir, exist_ok=True)
    csv_path, json_path = emit_report(report, os.path.join(args.output_dir, "report"))
    print(csv_path)
    print(json_path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gasnorm",
        description="Score-driven adaptive normalization for time series forecasting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    _common_flags(p)
    p.add_argument("kind", nargs="?", choices=["ar", "lorenz"])
    p.add_argument("--length", type=int, default=1000)
    p.add_argument("--ar-coeffs", type=float, nargs="*", default=[0.9])
    p.add_argument("--noise-std", type=float, default=1.0)
    p.add_argument("--season-amplitude", type=float, default=0.0)
    p.add_argument("--season-period", type=int, default=12)
    p.add_argument("--trend-slope", type=float, default=0.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--steps", type=int, default=5000)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("fit", help="fit filter parameters per feature")
    _common_flags(p)
    p.add_argument("data", help="training CSV")
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--max-iters", type=int, default=400)
    p.add_argument("--fit-nu", action="store_true")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("normalize", help="normalize a context CSV")
    _common_flags(p)
    p.add_argument("data", help="context CSV")
    p.add_argument("--normalizer", default="gas_norm",
                   choices=[k.value for k in NormalizerKind])
    p.add_argument("--params", help="fitted params JSON (gas_norm)")
    p.add_argument("--horizon", type=int, default=1)
    p.add_argument("--stem", default="batch")
    p.set_defaults(func=_cmd_normalize)

    p = sub.add_parser("forecast", help="denormalized forecast from a context CSV")
    _common_flags(p)
    p.add_argument("data", help="context CSV")
    p.add_argument("--normalizer", default="gas_norm",
                   choices=[k.value for k in NormalizerKind])
    p.add_argument("--params", help="fitted params JSON (gas_norm)")
    p.add_argument("--model", help="trained residual model JSON")
    p.add_argument("--horizon", type=int, default=1)
    p.set_defaults(func=_cmd_forecast)

    p = sub.add_parser("eval", help="MASE between forecast files")
    _common_flags(p)
    p.add_argument("--actual", required=True)
    p.add_argument("--forecast", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("-m", type=int, default=1, help="seasonal naive lag")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("experiment", help="run a full normalizer comparison")
    _common_flags(p)
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
