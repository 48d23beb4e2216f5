import json

import numpy as np
import pytest

from _oracles import naive_filter
from gasnorm import (
    Family,
    GasParams,
    NormalizerKind,
    NormalizerSpec,
    denormalize,
    gas_normalize,
    global_normalize,
    local_normalize,
    mean_scale,
    normalize,
)
from gasnorm.errors import ValidationError
from gasnorm.normalization import save_batch


def static_params(mean, var, gamma=0.0, family=Family.GAUSSIAN, **kw):
    """Parameters whose affine recursion has its fixed point at (mean, var)."""
    beta = kw.pop("beta", 0.9)
    return GasParams(
        family=family, gamma=gamma, alpha_mu=kw.pop("alpha_mu", 0.1),
        alpha_sigma=kw.pop("alpha_sigma", 0.1),
        beta_mu=beta, beta_sigma=beta,
        omega_mu=(1 - beta) * mean, omega_sigma=(1 - beta) * var,
        mu0=mean, sigma2_0=var, **kw,
    )


class TestGasNormalize:
    def test_gamma_zero_equals_global(self):
        rng = np.random.default_rng(0)
        ctx = rng.normal(loc=5.0, scale=2.0, size=(60, 2))
        stats = {f"f{j}": (float(ctx[:, j].mean()), float(ctx[:, j].var())) for j in range(2)}
        params = {
            f"f{j}": static_params(*stats[f"f{j}"], gamma=0.0) for j in range(2)
        }
        gas = gas_normalize(ctx, params, horizon=4)
        glob = global_normalize(ctx, 4, stats)
        np.testing.assert_allclose(gas.normalized_context, glob.normalized_context, atol=1e-12)
        np.testing.assert_allclose(gas.horizon_mu, glob.horizon_mu, atol=1e-12)
        np.testing.assert_allclose(gas.horizon_scale, glob.horizon_scale, atol=1e-12)

    def test_constant_context_at_mu0_is_zero(self):
        c = 2.5
        ctx = np.full((20, 1), c)
        batch = gas_normalize(ctx, {"f0": static_params(c, 1.0, gamma=0.5)}, horizon=2)
        np.testing.assert_allclose(batch.normalized_context, 0.0, atol=1e-12)

    def test_matches_oracle_recursion(self):
        ys = np.array([0.3, -1.2, 0.8, 2.0, -0.5])
        p = GasParams(family=Family.STUDENT_T, nu=20.0, gamma=0.4, alpha_mu=0.2,
                      alpha_sigma=0.15, beta_mu=0.9, beta_sigma=0.85,
                      omega_mu=0.05, omega_sigma=0.1, mu0=0.0, sigma2_0=1.0)
        batch = gas_normalize(ys[:, None], {"f0": p}, horizon=1)
        prior, _, _, _ = naive_filter(
            ys, "t", 0.2, 0.15, 0.9, 0.85, 0.05, 0.1, 20.0, 0.4, 0.0, 1.0
        )
        expected = (ys - prior[:, 0]) / np.sqrt(np.maximum(prior[:, 1], 1e-8))
        np.testing.assert_allclose(batch.normalized_context[:, 0], expected, atol=1e-12)

    def test_missing_params_errors(self):
        with pytest.raises(ValidationError, match="f1"):
            gas_normalize(np.ones((5, 2)), {"f0": static_params(1.0, 1.0)}, 1)

    def test_no_lookahead_prefix_property(self):
        rng = np.random.default_rng(2)
        ctx = rng.normal(size=(40, 1))
        p = static_params(0.0, 1.0, gamma=0.6)
        full = gas_normalize(ctx, {"f0": p}, 1)
        prefix = gas_normalize(ctx[:25], {"f0": p}, 1)
        np.testing.assert_allclose(
            full.normalized_context[:25], prefix.normalized_context, atol=1e-14
        )

    def test_strength_monotone_level_shift_tracking(self):
        level = 5.0
        ys = np.concatenate([np.zeros(100), np.full(200, level)])
        errors = []
        for gamma in (0.0, 0.1, 0.5, 0.9):
            p = GasParams(family=Family.GAUSSIAN, gamma=gamma, alpha_mu=0.1,
                          alpha_sigma=0.1, beta_mu=0.999, beta_sigma=0.999,
                          omega_mu=0.0, omega_sigma=0.0, mu0=0.0, sigma2_0=1.0)
            batch = gas_normalize(ys[:, None], {"f0": p}, 1)
            errors.append(np.sum(np.abs(batch.context_mu[100:, 0] - level)))
        assert all(a >= b - 1e-9 for a, b in zip(errors, errors[1:]))

    def test_outlier_moves_student_t_less_than_gaussian(self):
        ys = np.zeros(50)
        ys[30] = 10.0  # 10 sigma for sigma2 = 1
        kw = dict(gamma=0.5, alpha_mu=0.1, alpha_sigma=0.1, beta_mu=0.95,
                  beta_sigma=0.95, omega_mu=0.0, omega_sigma=0.05,
                  mu0=0.0, sigma2_0=1.0)
        t_batch = gas_normalize(ys[:, None], {"f0": GasParams(family=Family.STUDENT_T, nu=20.0, **kw)}, 1)
        g_batch = gas_normalize(ys[:, None], {"f0": GasParams(family=Family.GAUSSIAN, **kw)}, 1)
        d_t = abs(t_batch.context_mu[31, 0] - t_batch.context_mu[30, 0])
        d_g = abs(g_batch.context_mu[31, 0] - g_batch.context_mu[30, 0])
        assert d_t < d_g


class TestLocalNormalize:
    def test_hand_case_population_variance(self):
        batch = local_normalize(np.array([[0.0], [2.0]]), horizon=2)
        assert batch.context_mu[0, 0] == 1.0
        assert batch.context_scale[0, 0] == 1.0
        np.testing.assert_allclose(batch.normalized_context[:, 0], [-1.0, 1.0])

    def test_idempotent_on_standardized_data(self):
        rng = np.random.default_rng(3)
        ctx = rng.normal(size=(500, 1))
        ctx = (ctx - ctx.mean()) / ctx.std()
        batch = local_normalize(ctx, 1)
        np.testing.assert_allclose(batch.normalized_context, ctx, atol=1e-10)

    def test_outlier_shifts_local_more_than_gas(self):
        rng = np.random.default_rng(4)
        clean = rng.normal(size=25)
        spiked = clean.copy()
        spiked[12] += 10.0 * clean.std()
        p = GasParams(family=Family.STUDENT_T, nu=20.0, gamma=0.5, alpha_mu=0.05,
                      alpha_sigma=0.05, beta_mu=0.95, beta_sigma=0.95,
                      omega_mu=0.0, omega_sigma=0.05, mu0=0.0, sigma2_0=1.0)
        d_local = abs(
            local_normalize(spiked[:, None], 1).context_mu[0, 0]
            - local_normalize(clean[:, None], 1).context_mu[0, 0]
        )
        gas_clean = gas_normalize(clean[:, None], {"f0": p}, 1)
        gas_spiked = gas_normalize(spiked[:, None], {"f0": p}, 1)
        d_gas = abs(gas_spiked.context_mu[13, 0] - gas_clean.context_mu[13, 0])
        assert d_local > d_gas

    def test_short_context_errors(self):
        with pytest.raises(ValidationError):
            local_normalize(np.ones((1, 1)), 1)


class TestGlobalNormalize:
    def test_identity_stats(self):
        ctx = np.random.default_rng(5).normal(size=(30, 1))
        batch = global_normalize(ctx, 2, {"f0": (0.0, 1.0)})
        np.testing.assert_allclose(batch.normalized_context, ctx, atol=1e-15)

    def test_round_trip(self):
        ctx = np.random.default_rng(6).normal(loc=3.0, scale=2.0, size=(10, 1))
        batch = global_normalize(ctx, 10, {"f0": (3.0, 4.0)})
        back = denormalize(batch.normalized_context, batch)
        np.testing.assert_allclose(back, ctx, atol=1e-12)

    def test_training_moments_standardize(self):
        T = 20000
        data = np.random.default_rng(7).normal(loc=5.0, scale=2.0, size=(T, 1))
        stats = {"f0": (float(data.mean()), float(data.var()))}
        batch = global_normalize(data, 1, stats)
        tol = 3.0 / np.sqrt(T)
        assert abs(batch.normalized_context.mean()) < tol
        assert abs(batch.normalized_context.var() - 1.0) < tol

    def test_missing_stats_errors(self):
        with pytest.raises(ValidationError):
            global_normalize(np.ones((5, 1)), 1, {"other": (0.0, 1.0)})


class TestMeanScale:
    def test_constant_context(self):
        batch = mean_scale(np.full((8, 1), 4.0), 2)
        np.testing.assert_allclose(batch.normalized_context, 1.0)

    def test_hand_case(self):
        batch = mean_scale(np.array([[1.0], [3.0]]), 1)
        assert batch.horizon_scale[0, 0] == 2.0
        np.testing.assert_allclose(batch.normalized_context[:, 0], [0.5, 1.5])

    def test_zero_mean_fallback(self):
        ctx = np.array([[1.0], [-1.0]])
        batch = mean_scale(ctx, 1)
        assert batch.fallback[0]
        np.testing.assert_allclose(batch.normalized_context, ctx)

    def test_mu_channel_zero(self):
        batch = mean_scale(np.array([[2.0], [4.0]]), 3)
        assert np.all(batch.context_mu == 0.0)
        assert np.all(batch.horizon_mu == 0.0)

    def test_negative_mean_round_trip(self):
        ctx = np.array([[-1.0], [-3.0]])
        batch = mean_scale(ctx, 2)
        residual = np.array([[1.5], [0.5]])
        np.testing.assert_allclose(denormalize(residual, batch), -2.0 * residual)


class TestDenormalize:
    def test_zero_residual_gives_mu_path(self):
        ctx = np.random.default_rng(8).normal(size=(30, 1))
        p = static_params(0.0, 1.0, gamma=0.5)
        batch = gas_normalize(ctx, {"f0": p}, 5)
        out = denormalize(np.zeros((5, 1)), batch)
        np.testing.assert_allclose(out, batch.horizon_mu)

    def test_beta_zero_omega_seven(self):
        p = GasParams(family=Family.GAUSSIAN, gamma=0.5, beta_mu=0.0, omega_mu=7.0,
                      alpha_mu=0.1, alpha_sigma=0.1, beta_sigma=0.9,
                      omega_sigma=0.1, mu0=0.0, sigma2_0=1.0)
        batch = gas_normalize(np.random.default_rng(9).normal(size=(10, 1)), {"f0": p}, 4)
        out = denormalize(np.zeros((4, 1)), batch)
        np.testing.assert_allclose(out, 7.0)

    def test_shape_mismatch_errors(self):
        batch = local_normalize(np.ones((5, 2)) + np.arange(5)[:, None], 3)
        with pytest.raises(ValidationError):
            denormalize(np.zeros((2, 2)), batch)

    def test_affine_consistency_all_normalizers(self):
        rng = np.random.default_rng(10)
        ctx = rng.normal(loc=2.0, size=(20, 2))
        residual = rng.normal(size=(3, 2))
        stats = {"f0": (2.0, 1.5), "f1": (1.0, 0.5)}
        params = {n: static_params(*stats[n], gamma=0.3) for n in stats}
        specs = [
            NormalizerSpec(NormalizerKind.GAS_NORM, gas_params=params),
            NormalizerSpec(NormalizerKind.GLOBAL_NORM, global_stats=stats),
            NormalizerSpec(NormalizerKind.LOCAL_NORM),
            NormalizerSpec(NormalizerKind.MEAN_SCALING),
        ]
        for spec in specs:
            batch = normalize(spec, ctx, 3, ["f0", "f1"])
            out = denormalize(residual, batch)
            np.testing.assert_allclose(
                out, batch.horizon_mu + batch.horizon_scale * residual, atol=1e-12
            )
            assert batch.normalized_context.shape == ctx.shape
            assert out.shape == (3, 2)


class TestNormalizerSpec:
    def test_gas_requires_params(self):
        with pytest.raises(ValidationError):
            NormalizerSpec(NormalizerKind.GAS_NORM)
        with pytest.raises(ValidationError):
            NormalizerSpec(NormalizerKind.LOCAL_NORM, gas_params={})

    def test_global_requires_stats(self):
        with pytest.raises(ValidationError):
            NormalizerSpec(NormalizerKind.GLOBAL_NORM)


def test_save_batch_files(tmp_path):
    ctx = np.random.default_rng(11).normal(size=(6, 2))
    batch = local_normalize(ctx, 2, ["a", "b"])
    stem = tmp_path / "out"
    save_batch(batch, stem)
    assert (tmp_path / "out_normalized.csv").exists()
    stats_lines = (tmp_path / "out_stats.csv").read_text().strip().splitlines()
    assert stats_lines[0] == "phase,step,feature,mu,scale"
    assert len(stats_lines) == 1 + (6 + 2) * 2
    doc = json.loads((tmp_path / "out.json").read_text())
    assert doc["normalizer"] == "local_norm"
    assert doc["horizon"] == 2
