"""Normalize a context window, denormalize a horizon forecast.

All four normalizers share one contract: they emit a NormalizedBatch
holding the normalized context plus the per-step (mu, scale) statistics
needed to denormalize any forecast over the requested horizon via
y = mu + scale * e. The adaptive normalizer uses the filter's one-step
predictions theta_{t|t-1}, never the filtered theta_{t|t}, so the value
at time t depends only on strictly earlier observations.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .filtering import (
    VARIANCE_FLOOR,
    GasParams,
    filter_series,
    forecast_statistics,
)

_MEAN_SCALE_EPS = 1e-12


class NormalizerKind(enum.Enum):
    GAS_NORM = "gas_norm"
    GLOBAL_NORM = "global_norm"
    LOCAL_NORM = "local_norm"
    MEAN_SCALING = "mean_scaling"


@dataclass(frozen=True)
class NormalizerSpec:
    """Which normalizer to run, plus its fitted inputs.

    ``gas_params`` maps feature name -> GasParams and must be present
    exactly for GAS_NORM; ``global_stats`` holds per-feature training
    (mean, variance) pairs and must be present exactly for GLOBAL_NORM.
    """

    kind: NormalizerKind
    gas_params: dict[str, GasParams] | None = None
    global_stats: dict[str, tuple[float, float]] | None = None

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", NormalizerKind(self.kind))
        if (self.kind is NormalizerKind.GAS_NORM) != (self.gas_params is not None):
            raise ValidationError("gas_params must be given iff kind is gas_norm")
        if (self.kind is NormalizerKind.GLOBAL_NORM) != (self.global_stats is not None):
            raise ValidationError("global_stats must be given iff kind is global_norm")


@dataclass(frozen=True)
class NormalizedBatch:
    """Normalized context plus the statistics to undo it on any horizon.

    ``context_mu``/``context_scale`` are the per-timestep affine
    statistics applied to the context, ``horizon_mu``/``horizon_scale``
    the forecast statistics for denormalization. ``scale`` is the signed
    multiplier of the affine map; for the distributional normalizers it
    equals sqrt(max(sigma2, floor)), for mean scaling it is the context
    mean itself. ``fallback`` flags features where a near-zero context
    mean forced mean scaling back to scale 1.
    """

    normalized_context: np.ndarray
    context_mu: np.ndarray
    context_scale: np.ndarray
    horizon_mu: np.ndarray
    horizon_scale: np.ndarray
    normalizer_id: NormalizerKind
    feature_names: list[str] = field(default_factory=list)
    fallback: np.ndarray | None = None

    @property
    def horizon(self) -> int:
        return self.horizon_mu.shape[0]

    @property
    def context_sigma2(self) -> np.ndarray:
        return self.context_scale**2

    @property
    def horizon_sigma2(self) -> np.ndarray:
        return self.horizon_scale**2


def _as_context(context) -> np.ndarray:
    ctx = np.asarray(context, dtype=np.float64)
    if ctx.ndim == 1:
        ctx = ctx[:, None]
    if ctx.ndim != 2 or ctx.size == 0:
        raise ValidationError("context must be a non-empty 2-D (time, feature) array")
    if not np.all(np.isfinite(ctx)):
        raise ValidationError("context contains non-finite values")
    return ctx


def _names(ctx: np.ndarray, feature_names) -> list[str]:
    names = list(feature_names) if feature_names else [f"f{i}" for i in range(ctx.shape[1])]
    if len(names) != ctx.shape[1]:
        raise ValidationError("feature_names length does not match context width")
    return names


def _std(sigma2: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(sigma2, VARIANCE_FLOOR))


def gas_normalize(
    context,
    params: dict[str, GasParams],
    horizon: int,
    feature_names=None,
) -> NormalizedBatch:
    """Filter each feature over the context and standardize online.

    Each observation is normalized with the prediction made before it
    was seen; horizon statistics continue the filter's affine forecast
    recursion past the end of the context.
    """
    ctx = _as_context(context)
    names = _names(ctx, feature_names)
    missing = [n for n in names if n not in params]
    if missing:
        raise ValidationError(f"no fitted parameters for features {missing}")
    T, k = ctx.shape
    c_mu = np.empty((T, k))
    c_s2 = np.empty((T, k))
    h_mu = np.empty((horizon, k))
    h_s2 = np.empty((horizon, k))
    for j, name in enumerate(names):
        trace = filter_series(params[name], ctx[:, j])
        c_mu[:, j] = trace.mu_prior
        c_s2[:, j] = trace.sigma2_prior
        stats = forecast_statistics(params[name], trace.last_state, horizon)
        h_mu[:, j] = stats[:, 0]
        h_s2[:, j] = stats[:, 1]
    c_scale = _std(c_s2)
    return NormalizedBatch(
        (ctx - c_mu) / c_scale,
        c_mu,
        c_scale,
        h_mu,
        _std(h_s2),
        NormalizerKind.GAS_NORM,
        names,
    )


def local_normalize(context, horizon: int, feature_names=None) -> NormalizedBatch:
    """Standardize with the context window's own mean and population variance."""
    ctx = _as_context(context)
    if ctx.shape[0] < 2:
        raise ValidationError("local normalization needs a context of length >= 2")
    names = _names(ctx, feature_names)
    mu = ctx.mean(axis=0)
    scale = _std(ctx.var(axis=0))
    T = ctx.shape[0]
    return NormalizedBatch(
        (ctx - mu) / scale,
        np.tile(mu, (T, 1)),
        np.tile(scale, (T, 1)),
        np.tile(mu, (horizon, 1)),
        np.tile(scale, (horizon, 1)),
        NormalizerKind.LOCAL_NORM,
        names,
    )


def global_normalize(
    context,
    horizon: int,
    global_stats: dict[str, tuple[float, float]],
    feature_names=None,
) -> NormalizedBatch:
    """Standardize with training-set-wide mean and variance per feature."""
    ctx = _as_context(context)
    names = _names(ctx, feature_names)
    missing = [n for n in names if n not in global_stats]
    if missing:
        raise ValidationError(f"no global statistics for features {missing}")
    mu = np.array([global_stats[n][0] for n in names])
    scale = _std(np.array([global_stats[n][1] for n in names]))
    T = ctx.shape[0]
    return NormalizedBatch(
        (ctx - mu) / scale,
        np.tile(mu, (T, 1)),
        np.tile(scale, (T, 1)),
        np.tile(mu, (horizon, 1)),
        np.tile(scale, (horizon, 1)),
        NormalizerKind.GLOBAL_NORM,
        names,
    )


def mean_scale(context, horizon: int, feature_names=None) -> NormalizedBatch:
    """Divide by the context mean; scale-only, mu channel stays at 0.

    Features whose context mean is within 1e-12 of zero fall back to
    scale 1 and are flagged in ``fallback``.
    """
    ctx = _as_context(context)
    names = _names(ctx, feature_names)
    mean = ctx.mean(axis=0)
    fallback = np.abs(mean) < _MEAN_SCALE_EPS
    scale = np.where(fallback, 1.0, mean)
    T = ctx.shape[0]
    zeros_c = np.zeros((T, ctx.shape[1]))
    zeros_h = np.zeros((horizon, ctx.shape[1]))
    return NormalizedBatch(
        ctx / scale,
        zeros_c,
        np.tile(scale, (T, 1)),
        zeros_h,
        np.tile(scale, (horizon, 1)),
        NormalizerKind.MEAN_SCALING,
        names,
        fallback=fallback,
    )


def normalize(spec: NormalizerSpec, context, horizon: int, feature_names=None) -> NormalizedBatch:
    """Dispatch to the normalizer named by ``spec``."""
    if spec.kind is NormalizerKind.GAS_NORM:
        return gas_normalize(context, spec.gas_params, horizon, feature_names)
    if spec.kind is NormalizerKind.GLOBAL_NORM:
        return global_normalize(context, horizon, spec.global_stats, feature_names)
    if spec.kind is NormalizerKind.LOCAL_NORM:
        return local_normalize(context, horizon, feature_names)
    return mean_scale(context, horizon, feature_names)


def denormalize(residual_forecast, batch: NormalizedBatch) -> np.ndarray:
    """Affine recombination y = mu + scale * e over the stored horizon stats."""
    e = np.asarray(residual_forecast, dtype=np.float64)
    if e.ndim == 1:
        e = e[:, None]
    if e.shape != batch.horizon_mu.shape:
        raise ValidationError(
            f"residual shape {e.shape} does not match horizon stats {batch.horizon_mu.shape}"
        )
    return batch.horizon_mu + batch.horizon_scale * e


def save_batch(batch: NormalizedBatch, stem) -> None:
    """Write the batch as two CSVs plus a JSON sidecar under ``stem``.

    Files: ``<stem>_normalized.csv`` (the normalized context),
    ``<stem>_stats.csv`` (long format: phase, step, feature, mu, scale),
    ``<stem>.json`` (normalizer id and shapes).
    """
    stem = str(stem)
    names = batch.feature_names
    with open(stem + "_normalized.csv", "w", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for row in batch.normalized_context:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")
    with open(stem + "_stats.csv", "w", newline="\n") as fh:
        fh.write("phase,step,feature,mu,scale\n")
        for phase, mu, scale in (
            ("context", batch.context_mu, batch.context_scale),
            ("horizon", batch.horizon_mu, batch.horizon_scale),
        ):
            for t in range(mu.shape[0]):
                for j, name in enumerate(names):
                    fh.write(
                        f"{phase},{t},{name},{mu[t, j]:.17g},{scale[t, j]:.17g}\n"
                    )
    with open(stem + ".json", "w") as fh:
        json.dump(
            {
                "normalizer": batch.normalizer_id.value,
                "feature_names": names,
                "context_length": int(batch.normalized_context.shape[0]),
                "horizon": int(batch.horizon),
                "fallback": None if batch.fallback is None else batch.fallback.tolist(),
            },
            fh,
            indent=2,
        )
