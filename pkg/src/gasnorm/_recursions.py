"""Hot sequential kernels for the score-driven filter.

The per-timestep recursion cannot be vectorized, so it is compiled with
numba by default. Setting the environment variable ``GASNORM_NUMBA=0``
(or numba being unavailable) selects the pure-Python/numpy fallback,
which runs the very same function body. ``benchmarks/bench_filter.py``
compares the two paths.

Family codes: 0 = Gaussian, 1 = Student's t.
The kernel returns a status: -1 on success, otherwise the index of the
first timestep at which the state became non-finite.
"""

import math
import os

import numpy as np

_LOG_2PI = math.log(2.0 * math.pi)

GAUSSIAN = 0
STUDENT_T = 1


def filter_recursion_py(
    ys,
    family,
    alpha_mu,
    alpha_sigma,
    beta_mu,
    beta_sigma,
    omega_mu,
    omega_sigma,
    nu,
    gamma_ratio,
    mu0,
    sigma2_0,
    floor,
):
    """Run the full filter over ``ys``.

    gamma_ratio is gamma / (1 - gamma). Returns prior predictions
    (theta_{t|t-1}), filtered states (theta_{t|t}), the accumulated
    conditional log-likelihood, the accumulated FIM-weighted squared
    update steps, and a status code.
    """
    n = ys.shape[0]
    mu_prior = np.empty(n)
    s2_prior = np.empty(n)
    mu_filt = np.empty(n)
    s2_filt = np.empty(n)
    loglik = 0.0
    penalty = 0.0
    mu = mu0
    s2 = sigma2_0 if sigma2_0 > floor else floor
    lgam = 0.0
    if family == STUDENT_T:
        # constant part of the Student's t log-density
        lgam = (
            math.lgamma(0.5 * (nu + 1.0))
            - math.lgamma(0.5 * nu)
            - 0.5 * math.log(math.pi * nu)
        )
    for t in range(n):
        y = ys[t]
        mu_prior[t] = mu
        s2_prior[t] = s2
        r = y - mu
        if family == GAUSSIAN:
            loglik += -0.5 * _LOG_2PI - 0.5 * math.log(s2) - 0.5 * r * r / s2
            # inverse-FIM-scaled (natural gradient) scores
            scaled_mu = r
            scaled_s2 = r * r - s2
            fim_mu = 1.0 / s2
            fim_s2 = 0.5 / (s2 * s2)
        else:
            z2 = r * r / (nu * s2)
            loglik += lgam - 0.5 * math.log(s2) - 0.5 * (nu + 1.0) * math.log1p(z2)
            scaled_mu = r / (1.0 + z2)
            scaled_s2 = (nu + 1.0) * r * r / (nu + r * r / s2) - s2
            fim_mu = (nu + 1.0) / ((nu + 3.0) * s2)
            fim_s2 = nu / (2.0 * (nu + 3.0) * s2 * s2)
        m_f = mu + gamma_ratio * alpha_mu * scaled_mu
        v_f = s2 + gamma_ratio * alpha_sigma * scaled_s2
        if v_f < floor:
            v_f = floor
        d_mu = m_f - mu
        d_s2 = v_f - s2
        penalty += fim_mu * d_mu * d_mu + fim_s2 * d_s2 * d_s2
        mu_filt[t] = m_f
        s2_filt[t] = v_f
        mu = omega_mu + beta_mu * m_f
        s2 = omega_sigma + beta_sigma * v_f
        if s2 < floor:
            s2 = floor
        if not (math.isfinite(mu) and math.isfinite(s2) and math.isfinite(loglik)):
            return mu_prior, s2_prior, mu_filt, s2_filt, loglik, penalty, t
    return mu_prior, s2_prior, mu_filt, s2_filt, loglik, penalty, -1


def _numba_enabled() -> bool:
    return os.environ.get("GASNORM_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


def _compile():
    if not _numba_enabled():
        return filter_recursion_py, False
    try:
        from numba import njit
    except ImportError:
        return filter_recursion_py, False
    return njit(cache=True)(filter_recursion_py), True


filter_recursion, NUMBA_ACTIVE = _compile()
