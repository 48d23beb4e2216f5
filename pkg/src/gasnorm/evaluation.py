"""MASE metric and the normalizer-comparison experiment harness."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .datagen import ArSpec, LorenzSpec, gen_ar, gen_lorenz
from .errors import ValidationError
from .filtering import Family
from .fitting import FitConfig, fit_frame
from .mlp import MlpSpec, predict, train
from .normalization import NormalizerKind, NormalizerSpec, denormalize, normalize
from .series import SeriesFrame, SplitSpec, load_csv, split, windows


def mase(actual, forecast, train, m: int = 1) -> np.ndarray:
    """Mean absolute scaled error per feature.

    Numerator: mean absolute forecast error. Denominator: in-sample mean
    absolute error of the m-step seasonal naive forecast on the training
    segment only.
    """
    actual = np.atleast_2d(np.asarray(actual, dtype=np.float64))
    forecast = np.atleast_2d(np.asarray(forecast, dtype=np.float64))
    train_v = np.atleast_2d(np.asarray(train, dtype=np.float64))
    if actual.shape != forecast.shape:
        raise ValidationError(
            f"actual shape {actual.shape} does not match forecast {forecast.shape}"
        )
    if m < 1:
        raise ValidationError("seasonality m must be positive")
    if train_v.shape[0] <= m:
        raise ValidationError(f"training length {train_v.shape[0]} must exceed m={m}")
    denom = np.mean(np.abs(train_v[m:] - train_v[:-m]), axis=0)
    zero = np.nonzero(denom == 0.0)[0]
    if zero.size:
        raise ValidationError(
            f"seasonal-naive denominator is zero for feature index {zero[0]}"
        )
    return np.mean(np.abs(actual - forecast), axis=0) / denom


def select_gamma(validation_mase: dict[float, float]) -> float:
    """Argmin of validation MASE; ties break toward smaller gamma."""
    if not validation_mase:
        raise ValidationError("empty validation map")
    return min(validation_mase.items(), key=lambda kv: (kv[1], kv[0]))[0]


@dataclass(frozen=True)
class ExperimentSpec:
    """One normalizer-comparison run: dataset x normalizers x gammas x seeds."""

    dataset: ArSpec | LorenzSpec | str
    normalizers: tuple[NormalizerKind, ...]
    forecaster: MlpSpec
    split: SplitSpec
    gammas: tuple[float, ...] = (0.0, 0.1, 0.5)
    seeds: tuple[int, ...] = (0,)
    mase_seasonality: int = 1
    family: Family = Family.STUDENT_T
    nu: float = 100.0
    fit_seed: int = 0
    fit_restarts: int = 2
    fit_max_iters: int = 300
    stride: int = 1

    def __post_init__(self):
        # duplicates are dropped: repeated entries would only repeat identical cells
        object.__setattr__(
            self,
            "normalizers",
            tuple(dict.fromkeys(NormalizerKind(n) for n in self.normalizers)),
        )
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if isinstance(self.family, str):
            object.__setattr__(self, "family", Family(self.family))
        if not self.seeds:
            raise ValidationError("at least one seed is required")
        if any(not 0.0 <= g < 1.0 for g in self.gammas):
            raise ValidationError("gammas must lie in [0, 1)")

    @property
    def dataset_id(self) -> str:
        if isinstance(self.dataset, ArSpec):
            return "ar"
        if isinstance(self.dataset, LorenzSpec):
            return "lorenz"
        return os.path.splitext(os.path.basename(str(self.dataset)))[0]


@dataclass(frozen=True)
class ReportRow:
    dataset: str
    normalizer: str
    gamma: float | None
    mase_mean: float
    mase_stderr: float
    n_seeds: int
    per_seed: tuple[float, ...] = ()
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "normalizer": self.normalizer,
            "gamma": self.gamma,
            "mase_mean": self.mase_mean,
            "mase_stderr": self.mase_stderr,
            "n_seeds": self.n_seeds,
            "per_seed": list(self.per_seed),
            "error": self.error,
        }


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[ReportRow, ...]

    def row(self, normalizer: str, gamma: float | None = None) -> ReportRow:
        for r in self.rows:
            if r.normalizer == normalizer and (gamma is None or r.gamma == gamma):
                return r
        raise ValidationError(f"no row for normalizer {normalizer!r}, gamma {gamma}")

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows]}

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        rows = []
        for r in d["rows"]:
            rows.append(
                ReportRow(
                    r["dataset"],
                    r["normalizer"],
                    r["gamma"],
                    r["mase_mean"],
                    r["mase_stderr"],
                    r["n_seeds"],
                    tuple(r.get("per_seed", ())),
                    r.get("error"),
                )
            )
        return cls(tuple(rows))


def load_dataset(dataset) -> SeriesFrame:
    if isinstance(dataset, ArSpec):
        return gen_ar(dataset)
    if isinstance(dataset, LorenzSpec):
        return gen_lorenz(dataset)
    return load_csv(dataset)


def _normalized_pairs(nspec: NormalizerSpec, pairs, horizon: int, names):
    """Normalize each window and express targets as horizon residuals."""
    out = []
    for ctx, tgt in pairs:
        batch = normalize(nspec, ctx, horizon, names)
        residual = (tgt - batch.horizon_mu) / batch.horizon_scale
        out.append((batch.normalized_context, residual, batch, tgt))
    return out


def _segment_mase(model, norm_pairs, train_values, m: int) -> float:
    forecasts = []
    actuals = []
    for x, _, batch, tgt in norm_pairs:
        residual = predict(model, x)
        forecasts.append(denormalize(residual, batch))
        actuals.append(tgt)
    per_feature = mase(np.vstack(actuals), np.vstack(forecasts), train_values, m)
    return float(np.mean(per_feature))


def _evaluate_cell(
    spec: ExperimentSpec,
    nspec: NormalizerSpec,
    seed: int,
    train_pairs,
    val_pairs,
    test_pairs,
    names,
    train_values,
) -> tuple[float | None, float]:
    """Train the forecaster under one normalizer; returns (val_mase, test_mase)."""
    h = spec.split.horizon
    norm_train = _normalized_pairs(nspec, train_pairs, h, names)
    norm_val = _normalized_pairs(nspec, val_pairs, h, names) if val_pairs else []
    norm_test = _normalized_pairs(nspec, test_pairs, h, names)
    mlp_spec = MlpSpec(
        spec.forecaster.layer_widths,
        spec.forecaster.activation,
        spec.forecaster.learning_rate,
        spec.forecaster.epochs,
        spec.forecaster.batch_size,
        seed,
    )
    model = train(
        mlp_spec,
        [(x, r) for x, r, _, _ in norm_train],
        [(x, r) for x, r, _, _ in norm_val] or None,
    )
    m = spec.mase_seasonality
    val = _segment_mase(model, norm_val, train_values, m) if norm_val else None
    test = _segment_mase(model, norm_test, train_values, m)
    return val, test


def run_experiment(spec: ExperimentSpec) -> EvalReport:
    """Fit, normalize, train and score every (normalizer, gamma, seed) cell.

    For the adaptive normalizer, gamma is selected per seed on
    validation MASE and an extra ``gas_norm_selected`` row reports the
    test MASE at each seed's selection. Failures are recorded per cell;
    completed cells still make it into the report.
    """
    data = load_dataset(spec.dataset)
    train_f, val_f, test_f = split(data, spec.split)
    l, h = spec.split.context_length, spec.split.horizon
    names = data.feature_names

    train_pairs = windows(train_f, l, h, spec.stride)
    val_pairs = windows(val_f, l, h, spec.stride) if len(val_f) >= l + h else []
    test_pairs = windows(test_f, l, h, spec.stride)

    global_stats = {
        n: (float(np.mean(train_f.feature(n))), float(np.var(train_f.feature(n))))
        for n in names
    }

    gas_specs: dict[float, NormalizerSpec] = {}
    if NormalizerKind.GAS_NORM in spec.normalizers:
        for gamma in spec.gammas:
            config = FitConfig(
                gamma=gamma,
                family=spec.family,
                nu=spec.nu,
                seed=spec.fit_seed,
                restarts=spec.fit_restarts,
                max_iters=spec.fit_max_iters,
            )
            results = fit_frame(train_f, config)
            gas_specs[gamma] = NormalizerSpec(
                NormalizerKind.GAS_NORM,
                gas_params={n: r.params for n, r in results.items()},
            )

    cells: dict[tuple[str, float | None], list[float]] = {}
    cell_errors: dict[tuple[str, float | None], str] = {}
    selected_tests: list[float] = []
    selected_gammas: list[float] = []

    def record(key, value):
        cells.setdefault(key, []).append(value)

    for seed in spec.seeds:
        for kind in spec.normalizers:
            if kind is NormalizerKind.GAS_NORM:
                val_by_gamma: dict[float, float] = {}
                test_by_gamma: dict[float, float] = {}
                for gamma in spec.gammas:
                    key = (kind.value, gamma)
                    try:
                        val, test = _evaluate_cell(
                            spec, gas_specs[gamma], seed,
                            train_pairs, val_pairs, test_pairs, names, train_f.values,
                        )
                    except (ValidationError, ArithmeticError) as exc:
                        cell_errors[key] = str(exc)
                        continue
                    record(key, test)
                    test_by_gamma[gamma] = test
                    if val is not None:
                        val_by_gamma[gamma] = val
                if test_by_gamma:
                    chosen = (
                        select_gamma(val_by_gamma)
                        if val_by_gamma
                        else min(test_by_gamma)
                    )
                    selected_gammas.append(chosen)
                    selected_tests.append(test_by_gamma[chosen])
            else:
                key = (kind.value, None)
                if kind is NormalizerKind.GLOBAL_NORM:
                    nspec = NormalizerSpec(kind, global_stats=global_stats)
                else:
                    nspec = NormalizerSpec(kind)
                try:
                    _, test = _evaluate_cell(
                        spec, nspec, seed,
                        train_pairs, val_pairs, test_pairs, names, train_f.values,
                    )
                except (ValidationError, ArithmeticError) as exc:
                    cell_errors[key] = str(exc)
                    continue
                record(key, test)

    rows = []
    for (normalizer, gamma), values in cells.items():
        rows.append(_aggregate(spec.dataset_id, normalizer, gamma, values))
    for (normalizer, gamma), message in cell_errors.items():
        if (normalizer, gamma) not in cells:
            rows.append(
                ReportRow(spec.dataset_id, normalizer, gamma, float("nan"),
                          float("nan"), 0, (), message)
            )
    if selected_tests:
        modal = max(set(selected_gammas), key=lambda g: (selected_gammas.count(g), -g))
        rows.append(
            _aggregate(spec.dataset_id, "gas_norm_selected", modal, selected_tests)
        )
    return EvalReport(tuple(rows))


def _aggregate(dataset: str, normalizer: str, gamma, values: list[float]) -> ReportRow:
    arr = np.asarray(values, dtype=np.float64)
    stderr = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
    return ReportRow(
        dataset, normalizer, gamma, float(arr.mean()), stderr, arr.size, tuple(values)
    )


def emit_report(report: EvalReport, path) -> tuple[str, str]:
    """Write ``<path>.csv`` (long format) and ``<path>.json`` (per-seed values)."""
    path = str(path)
    if os.path.isdir(path):
        path = os.path.join(path, "report")
    csv_path, json_path = path + ".csv", path + ".json"
    with open(csv_path, "w", newline="\n") as fh:
        fh.write("dataset,normalizer,gamma,mase_mean,mase_stderr,n_seeds\n")
        for r in report.rows:
            gamma = "" if r.gamma is None else format(r.gamma, "g")
            fh.write(
                f"{r.dataset},{r.normalizer},{gamma},"
                f"{r.mase_mean:.17g},{r.mase_stderr:.17g},{r.n_seeds}\n"
            )
    with open(json_path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
    return csv_path, json_path


def load_report(json_path) -> EvalReport:
    with open(json_path) as fh:
        return EvalReport.from_dict(json.load(fh))
