"""Static parameter estimation for the score-driven filter.

The objective trades the prediction-error-decomposition log-likelihood
against an information-weighted penalty on how far each update step
moved the state, weighted gamma vs (1 - gamma). It is maximized per
feature with a bounded Nelder-Mead simplex search and multiplicative
multi-start, which copes with the non-smoothness near the stability
boundary without needing gradients.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import Bounds, minimize

from .errors import FitError, ValidationError
from .filtering import Family, GasParams, filter_series
from .series import SeriesFrame

_MOMENT_FLOOR = 1e-8


@dataclass(frozen=True)
class FitConfig:
    gamma: float = 0.5
    family: Family = Family.STUDENT_T
    max_iters: int = 400
    restarts: int = 3
    seed: int = 0
    fit_nu: bool = False
    nu: float = 100.0
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        if isinstance(self.family, str):
            object.__setattr__(self, "family", Family(self.family))
        if not 0.0 <= self.gamma < 1.0:
            raise ValidationError("gamma must lie in [0, 1)")
        if self.restarts < 1:
            raise ValidationError("restarts must be at least 1")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be at least 1")


@dataclass(frozen=True)
class FitResult:
    params: GasParams
    objective: float
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "objective": self.objective,
            "iterations": self.iterations,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        return cls(
            GasParams.from_dict(d["params"]),
            d["objective"],
            d["iterations"],
            d["converged"],
        )


def penalized_objective(params: GasParams, ys) -> float:
    """gamma-weighted log-likelihood minus (1-gamma)/2 times the step penalty."""
    trace = filter_series(params, ys)
    return params.gamma * trace.loglik - 0.5 * (1.0 - params.gamma) * trace.penalty


_PARAM_ORDER = ("alpha_mu", "alpha_sigma", "beta_mu", "beta_sigma", "omega_mu", "omega_sigma")


def _default_bounds(mean: float, var: float) -> dict[str, tuple[float, float]]:
    w = 10.0 * abs(mean) + 1.0
    return {
        "alpha_mu": (0.0, 2.0),
        "alpha_sigma": (0.0, 2.0),
        "beta_mu": (0.0, 0.999),
        "beta_sigma": (0.0, 0.999),
        "omega_mu": (-w, w),
        "omega_sigma": (0.0, 10.0 * var + 1.0),
        "nu": (2.1, 1000.0),
    }


def _initial_params(config: FitConfig, mean: float, var: float) -> GasParams:
    beta = 0.95
    return GasParams(
        alpha_mu=0.05,
        alpha_sigma=0.05,
        beta_mu=beta,
        beta_sigma=beta,
        omega_mu=(1.0 - beta) * mean,
        omega_sigma=(1.0 - beta) * var,
        nu=config.nu,
        gamma=config.gamma,
        mu0=mean,
        sigma2_0=var,
        family=config.family,
    )


def _to_params(x: np.ndarray, template: GasParams, fit_nu: bool) -> GasParams:
    kwargs = dict(zip(_PARAM_ORDER, x[: len(_PARAM_ORDER)]))
    if fit_nu:
        kwargs["nu"] = x[len(_PARAM_ORDER)]
    return replace(template, **kwargs)


def fit(ys, config: FitConfig) -> FitResult:
    """Maximize the penalized objective for one feature's training series.

    The initial state is pinned to the training-set unconditional mean
    and (floored) variance. Restarts perturb the initial point by up to
    +/-50% multiplicatively; the returned objective never falls below
    the one at the unperturbed initialization.
    """
    ys = np.asarray(ys, dtype=np.float64).ravel()
    if ys.size < 10:
        raise ValidationError(f"need at least 10 observations to fit, got {ys.size}")
    mean = float(np.mean(ys))
    var = max(float(np.var(ys)), _MOMENT_FLOOR)

    fit_nu = config.fit_nu and config.family is Family.STUDENT_T
    names = _PARAM_ORDER + ("nu",) if fit_nu else _PARAM_ORDER
    bounds_map = {**_default_bounds(mean, var), **config.bounds}
    lo = np.array([bounds_map[n][0] for n in names])
    hi = np.array([bounds_map[n][1] for n in names])

    template = _initial_params(config, mean, var)
    x0 = np.array([getattr(template, n) for n in names])
    x0 = np.clip(x0, lo, hi)

    def negative(x: np.ndarray) -> float:
        try:
            return -penalized_objective(_to_params(x, template, fit_nu), ys)
        except (ValidationError, ArithmeticError):
            return np.inf

    init_objective = -negative(x0)
    if not np.isfinite(init_objective):
        raise FitError("objective is non-finite at the initialization point")

    rng = np.random.default_rng(config.seed)
    starts = [x0]
    for _ in range(config.restarts - 1):
        factors = rng.uniform(0.5, 1.5, size=x0.shape)
        starts.append(np.clip(x0 * factors, lo, hi))

    best = (init_objective, x0, 0, True)
    diagnostics = []
    any_success = False
    for start in starts:
        try:
            res = minimize(
                negative,
                start,
                method="Nelder-Mead",
                bounds=Bounds(lo, hi),
                options={"maxiter": config.max_iters, "xatol": 1e-6, "fatol": 1e-8},
            )
        except (ValidationError, ArithmeticError) as exc:
            diagnostics.append(str(exc))
            continue
        any_success = True
        if np.isfinite(res.fun) and -res.fun > best[0]:
            best = (-res.fun, res.x, int(res.nit), bool(res.success))
    if not any_success and diagnostics:
        raise FitError("all restarts failed", diagnostics)

    objective, x, iterations, converged = best
    return FitResult(_to_params(x, template, fit_nu), objective, iterations, converged)


def fit_frame(frame: SeriesFrame, config: FitConfig) -> dict[str, FitResult]:
    """Independent per-feature fits; failures are collected, not fail-fast."""
    results: dict[str, FitResult] = {}
    errors: dict[str, Exception] = {}
    for name in frame.feature_names:
        try:
            results[name] = fit(frame.feature(name), config)
        except (ValidationError, ArithmeticError) as exc:
            errors[name] = exc
    if errors and not results:
        raise FitError(
            "every feature failed to fit", [f"{k}: {v}" for k, v in errors.items()]
        )
    if errors:
        import warnings

        for name, exc in errors.items():
            warnings.warn(f"feature {name!r} failed to fit: {exc}", stacklevel=2)
    return results


def fit_results_to_dict(results: dict[str, FitResult]) -> dict:
    return {name: r.to_dict() for name, r in results.items()}


def fit_results_from_dict(d: dict) -> dict[str, FitResult]:
    return {name: FitResult.from_dict(v) for name, v in d.items()}
