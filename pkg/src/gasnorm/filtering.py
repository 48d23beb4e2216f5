"""Score-driven filtering of time-varying means and variances.

One filter tracks a single feature. At each observation the state moves
in the direction of the inverse-Fisher-scaled score (a natural gradient
step) damped by the normalization strength, then a linear prediction
step pulls it toward its unconditional level:

    theta_{t|t}   = theta_{t|t-1} + (g/(1-g)) * alpha * scaled_score
    theta_{t+1|t} = omega + beta * theta_{t|t}

with g in [0, 1). g = 0 freezes the score term entirely, which reduces
the filter to a deterministic affine recursion (static normalization).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._recursions import GAUSSIAN, STUDENT_T, filter_recursion
from .errors import NumericalError, ValidationError

VARIANCE_FLOOR = 1e-8


class Family(enum.Enum):
    GAUSSIAN = "gaussian"
    STUDENT_T = "student_t"

    @property
    def code(self) -> int:
        return GAUSSIAN if self is Family.GAUSSIAN else STUDENT_T


@dataclass(frozen=True)
class GasParams:
    """Static filter parameters for one feature."""

    alpha_mu: float = 0.05
    alpha_sigma: float = 0.05
    beta_mu: float = 0.95
    beta_sigma: float = 0.95
    omega_mu: float = 0.0
    omega_sigma: float = 0.05
    nu: float = 100.0
    gamma: float = 0.5
    mu0: float = 0.0
    sigma2_0: float = 1.0
    family: Family = Family.STUDENT_T

    def __post_init__(self):
        if isinstance(self.family, str):
            object.__setattr__(self, "family", Family(self.family))
        if self.alpha_mu < 0 or self.alpha_sigma < 0:
            raise ValidationError("learning rates alpha must be non-negative")
        if abs(self.beta_mu) >= 1 or abs(self.beta_sigma) >= 1:
            raise ValidationError("mean-reversion beta must lie in (-1, 1)")
        if not 0.0 <= self.gamma < 1.0:
            raise ValidationError("gamma must lie in [0, 1)")
        if self.sigma2_0 <= 0:
            raise ValidationError("sigma2_0 must be positive")
        if self.family is Family.STUDENT_T and self.nu <= 2:
            raise ValidationError("nu must exceed 2 for the Student's t family")

    @property
    def gamma_ratio(self) -> float:
        return self.gamma / (1.0 - self.gamma)

    def to_dict(self) -> dict:
        return {
            "alpha_mu": self.alpha_mu,
            "alpha_sigma": self.alpha_sigma,
            "beta_mu": self.beta_mu,
            "beta_sigma": self.beta_sigma,
            "omega_mu": self.omega_mu,
            "omega_sigma": self.omega_sigma,
            "nu": self.nu,
            "gamma": self.gamma,
            "mu0": self.mu0,
            "sigma2_0": self.sigma2_0,
            "family": self.family.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GasParams":
        return cls(**d)

    def with_gamma(self, gamma: float) -> "GasParams":
        return replace(self, gamma=gamma)


@dataclass(frozen=True)
class FilterState:
    """Latest prediction theta_{t+1|t} and filtered value theta_{t|t}."""

    mu_pred: float
    sigma2_pred: float
    mu_filt: float
    sigma2_filt: float

    def __post_init__(self):
        vals = (self.mu_pred, self.sigma2_pred, self.mu_filt, self.sigma2_filt)
        if not all(math.isfinite(v) for v in vals):
            raise NumericalError(f"non-finite filter state {vals}")
        if self.sigma2_pred < VARIANCE_FLOOR or self.sigma2_filt < VARIANCE_FLOOR:
            raise ValidationError("variance below floor")


def initial_state(params: GasParams) -> FilterState:
    s2 = max(params.sigma2_0, VARIANCE_FLOOR)
    return FilterState(params.mu0, s2, params.mu0, s2)


@dataclass(frozen=True)
class FilterTrace:
    """Per-timestep filter output for one feature.

    ``mu_prior``/``sigma2_prior`` hold theta_{t|t-1}, the prediction
    available *before* observing y_t (what leak-free normalization
    uses); ``mu_filt``/``sigma2_filt`` hold theta_{t|t}. ``loglik``
    accumulates log p(y_t | theta_{t|t-1}) over the prediction-error
    decomposition, ``penalty`` the FIM-weighted squared update steps.
    """

    mu_prior: np.ndarray
    sigma2_prior: np.ndarray
    mu_filt: np.ndarray
    sigma2_filt: np.ndarray
    loglik: float
    penalty: float
    params: GasParams = field(repr=False)

    def __len__(self) -> int:
        return self.mu_prior.shape[0]

    @property
    def states(self) -> list[FilterState]:
        p = self.params
        out = []
        for t in range(len(self)):
            mu_next = p.omega_mu + p.beta_mu * self.mu_filt[t]
            s2_next = max(p.omega_sigma + p.beta_sigma * self.sigma2_filt[t], VARIANCE_FLOOR)
            out.append(FilterState(mu_next, s2_next, self.mu_filt[t], self.sigma2_filt[t]))
        return out

    @property
    def last_state(self) -> FilterState:
        return self.states[-1]


def score_and_fim(
    family: Family, y: float, mu: float, sigma2: float, nu: float = 100.0
) -> tuple[float, float, float, float]:
    """Scores of the conditional log-density and the diagonal Fisher information.

    Returns (score_mu, score_sigma2, fim_mu, fim_sigma2) evaluated at
    (mu, sigma2). Cross terms of the FIM are zero for both families, so
    the diagonal is the whole matrix.
    """
    if sigma2 <= 0:
        raise ValidationError(f"sigma2 must be positive, got {sigma2}")
    r = y - mu
    if family is Family.GAUSSIAN:
        score_mu = r / sigma2
        score_s2 = 0.5 * (r * r / sigma2**2 - 1.0 / sigma2)
        return score_mu, score_s2, 1.0 / sigma2, 0.5 / sigma2**2
    if nu <= 2:
        raise ValidationError(f"nu must exceed 2, got {nu}")
    score_mu = (nu + 1.0) * r / (nu * sigma2 + r * r)
    score_s2 = 0.5 * ((nu + 1.0) * r * r / (nu * sigma2**2 + sigma2 * r * r) - 1.0 / sigma2)
    fim_mu = (nu + 1.0) / ((nu + 3.0) * sigma2)
    fim_s2 = nu / (2.0 * (nu + 3.0) * sigma2**2)
    return score_mu, score_s2, fim_mu, fim_s2


def log_density(family: Family, y: float, mu: float, sigma2: float, nu: float = 100.0) -> float:
    """Conditional log-density of one observation."""
    if sigma2 <= 0:
        raise ValidationError(f"sigma2 must be positive, got {sigma2}")
    r = y - mu
    if family is Family.GAUSSIAN:
        return -0.5 * math.log(2.0 * math.pi) - 0.5 * math.log(sigma2) - 0.5 * r * r / sigma2
    return (
        math.lgamma(0.5 * (nu + 1.0))
        - math.lgamma(0.5 * nu)
        - 0.5 * math.log(math.pi * nu)
        - 0.5 * math.log(sigma2)
        - 0.5 * (nu + 1.0) * math.log1p(r * r / (nu * sigma2))
    )


def scaled_score(
    family: Family, y: float, mu: float, sigma2: float, nu: float = 100.0
) -> tuple[float, float]:
    """Inverse-FIM-scaled (natural gradient) scores for both channels.

    Gaussian scaling is the exact inverse FIM; the Student's t scaling
    uses S_mu = nu*sigma2/(1+nu) and S_sigma2 = 2*sigma2^2, proportional
    to the inverse information.
    """
    if sigma2 <= 0:
        raise ValidationError(f"sigma2 must be positive, got {sigma2}")
    r = y - mu
    if family is Family.GAUSSIAN:
        return r, r * r - sigma2
    return (
        r / (1.0 + r * r / (nu * sigma2)),
        (nu + 1.0) * r * r / (nu + r * r / sigma2) - sigma2,
    )


def update(params: GasParams, state: FilterState, y: float) -> FilterState:
    """One observation step: natural-gradient update then linear prediction."""
    if not math.isfinite(y):
        raise ValidationError(f"observation must be finite, got {y}")
    mu, s2 = state.mu_pred, state.sigma2_pred
    s_mu, s_s2 = scaled_score(params.family, y, mu, s2, params.nu)
    g = params.gamma_ratio
    mu_filt = mu + g * params.alpha_mu * s_mu
    s2_filt = max(s2 + g * params.alpha_sigma * s_s2, VARIANCE_FLOOR)
    mu_next = params.omega_mu + params.beta_mu * mu_filt
    s2_next = max(params.omega_sigma + params.beta_sigma * s2_filt, VARIANCE_FLOOR)
    if not all(math.isfinite(v) for v in (mu_filt, s2_filt, mu_next, s2_next)):
        raise NumericalError("filter state became non-finite")
    return FilterState(mu_next, s2_next, mu_filt, s2_filt)


def filter_series(params: GasParams, ys) -> FilterTrace:
    """Run the filter over a full series, accumulating the log-likelihood."""
    ys = np.ascontiguousarray(ys, dtype=np.float64).ravel()
    if ys.size == 0:
        raise ValidationError("cannot filter an empty series")
    if not np.all(np.isfinite(ys)):
        raise ValidationError("series contains non-finite values")
    mu_p, s2_p, mu_f, s2_f, loglik, penalty, status = filter_recursion(
        ys,
        params.family.code,
        params.alpha_mu,
        params.alpha_sigma,
        params.beta_mu,
        params.beta_sigma,
        params.omega_mu,
        params.omega_sigma,
        params.nu,
        params.gamma_ratio,
        params.mu0,
        max(params.sigma2_0, VARIANCE_FLOOR),
        VARIANCE_FLOOR,
    )
    if status >= 0:
        raise NumericalError(f"filter state became non-finite at timestep {status}")
    return FilterTrace(mu_p, s2_p, mu_f, s2_f, float(loglik), float(penalty), params)


def forecast_statistics(
    params: GasParams, last_state: FilterState, horizon: int
) -> np.ndarray:
    """h-step iterate of mu <- omega + beta*mu from the last filtered state.

    Returns an array of shape (horizon, 2) with (mu, sigma2) rows; the
    first row is theta_{T+1|T}, i.e. ``last_state``'s own prediction.
    """
    if horizon < 1:
        raise ValidationError("horizon must be at least 1")
    out = np.empty((horizon, 2))
    mu, s2 = last_state.mu_filt, last_state.sigma2_filt
    for j in range(horizon):
        mu = params.omega_mu + params.beta_mu * mu
        s2 = max(params.omega_sigma + params.beta_sigma * s2, VARIANCE_FLOOR)
        out[j, 0] = mu
        out[j, 1] = s2
    return out
