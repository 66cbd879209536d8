import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metabandit import (
    GaussianBelief,
    PriorBank,
    finite_prior_select,
    finite_prior_update,
    mixture_moment_match,
    sample_prior_index,
)
from metabandit.core import HistoryEntry
from metabandit.harness import generate_covariance
from metabandit.rng import substream


def scalar_bank(mus, sigs, v=0.5, weights=None):
    priors = [
        GaussianBelief(np.array([mu]), np.array([[sig]]), v) for mu, sig in zip(mus, sigs)
    ]
    if weights is None:
        return PriorBank.uniform(priors)
    return PriorBank(tuple(priors), np.asarray(weights, dtype=float))


def quadrature_evidence(mu_j, sig_j, v, bs, rs, points=20001, width=60.0):
    """Independent 1-D oracle: integrate the reward likelihood against the
    candidate prior density on a wide dense grid."""
    us = np.linspace(mu_j - width, mu_j + width, points)
    log_prior = -0.5 * (us - mu_j) ** 2 / (v**2 * sig_j) - 0.5 * np.log(
        2 * np.pi * v**2 * sig_j
    )
    log_lik = np.zeros_like(us)
    for b, r in zip(bs, rs):
        log_lik += -0.5 * (r - b * us) ** 2 / v**2 - 0.5 * np.log(2 * np.pi * v**2)
    vals = np.exp(log_prior + log_lik - (log_prior + log_lik).max())
    integral = np.trapezoid(vals, us)
    return integral, (log_prior + log_lik).max()


class TestBankValidation:
    def test_weights_must_sum_to_one(self):
        priors = [GaussianBelief(np.zeros(1), np.eye(1), 1.0)] * 2
        with pytest.raises(ValueError):
            PriorBank(tuple(priors), np.array([0.6, 0.6]))

    def test_weights_nonnegative(self):
        priors = [GaussianBelief(np.zeros(1), np.eye(1), 1.0)] * 2
        with pytest.raises(ValueError):
            PriorBank(tuple(priors), np.array([1.5, -0.5]))

    def test_mixed_noise_scale_rejected(self):
        priors = (
            GaussianBelief(np.zeros(1), np.eye(1), 1.0),
            GaussianBelief(np.zeros(1), np.eye(1), 2.0),
        )
        with pytest.raises(ValueError):
            PriorBank(priors, np.array([0.5, 0.5]))


class TestFinitePriorUpdate:
    def test_single_prior_weight_stays_one(self):
        bank = scalar_bank([0.0], [1.0])
        history = [HistoryEntry(1, 0, np.array([1.0]), 0.4)]
        out = finite_prior_update(bank, history)
        assert out.weights[0] == 1.0

    def test_identical_priors_keep_equal_weights(self):
        bank = scalar_bank([0.3, 0.3], [1.2, 1.2])
        history = [
            HistoryEntry(t, 0, np.array([0.7]), float(t) * 0.1) for t in range(1, 6)
        ]
        out = finite_prior_update(bank, history)
        assert out.weights == pytest.approx([0.5, 0.5], abs=1e-14)

    def test_quadrature_oracle_weight_ratio(self):
        rng = substream(17, "quad")
        for _ in range(8):
            mus = [float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2))]
            sigs = [float(rng.uniform(0.3, 2.0)), float(rng.uniform(0.3, 2.0))]
            v = float(rng.uniform(0.2, 0.8))
            bank = scalar_bank(mus, sigs, v=v)
            bs = rng.uniform(-1, 1, 10)
            true_mu = float(rng.uniform(-2, 2))
            rs = bs * true_mu + v * rng.standard_normal(10)
            history = [
                HistoryEntry(t + 1, 0, np.array([bs[t]]), float(rs[t]))
                for t in range(10)
            ]
            out = finite_prior_update(bank, history)
            ev0, peak0 = quadrature_evidence(mus[0], sigs[0], v, bs, rs)
            ev1, peak1 = quadrature_evidence(mus[1], sigs[1], v, bs, rs)
            oracle_ratio = (ev0 / ev1) * np.exp(peak0 - peak1)
            got_ratio = out.weights[0] / out.weights[1]
            assert got_ratio == pytest.approx(oracle_ratio, rel=1e-6)

    def test_log_domain_survives_many_tasks(self):
        # Dozens of very informative tasks would underflow naive products.
        rng = substream(19, "underflow")
        bank = scalar_bank([0.0, 4.0], [1.0, 1.0], v=0.1)
        for _ in range(60):
            bs = rng.uniform(0.5, 1.0, 20)
            rs = bs * 4.0 + 0.1 * rng.standard_normal(20)
            history = [
                HistoryEntry(t + 1, 0, np.array([bs[t]]), float(rs[t]))
                for t in range(20)
            ]
            bank = finite_prior_update(bank, history)
        assert np.isfinite(bank.weights).all()
        assert bank.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert finite_prior_select(bank) == 1

    @settings(max_examples=20, deadline=None, derandomize=True)
    @given(st.integers(0, 2**31), st.integers(2, 6))
    def test_permutation_equivariance_and_normalization(self, seed, L):
        rng = np.random.default_rng(seed)
        d = 2
        priors = [
            GaussianBelief(rng.standard_normal(d), generate_covariance(d, rng), 0.5)
            for _ in range(L)
        ]
        w = rng.uniform(0.1, 1.0, L)
        w /= w.sum()
        bank = PriorBank(tuple(priors), w)
        history = [
            HistoryEntry(t, 0, rng.standard_normal(d), float(rng.standard_normal()))
            for t in range(1, 7)
        ]
        out = finite_prior_update(bank, history)
        assert out.weights.sum() == pytest.approx(1.0, abs=1e-12)
        perm = rng.permutation(L)
        bank_p = PriorBank(
            tuple(priors[i] for i in perm), np.array([w[i] for i in perm])
        )
        out_p = finite_prior_update(bank_p, history)
        assert np.allclose(out_p.weights, out.weights[perm], atol=1e-12)


class TestSelection:
    def test_argmax(self):
        bank = scalar_bank([0, 0, 0], [1, 1, 1], weights=[0.2, 0.5, 0.3])
        assert finite_prior_select(bank) == 1

    def test_uniform_tie_break_lowest(self):
        bank = scalar_bank([0, 0, 0], [1, 1, 1])
        assert finite_prior_select(bank) == 0

    def test_sampling_follows_weights(self):
        bank = scalar_bank([0, 0], [1, 1], weights=[0.9, 0.1])
        rng = substream(23, "sample_idx")
        draws = [sample_prior_index(bank, rng) for _ in range(2000)]
        assert abs(np.mean([d == 0 for d in draws]) - 0.9) < 0.03


class TestMomentMatch:
    def test_single_prior_is_identity(self):
        belief = GaussianBelief(np.array([1.0, 2.0]), np.eye(2), 0.5)
        matched = mixture_moment_match(PriorBank.uniform([belief]))
        assert np.allclose(matched.mean, belief.mean)
        assert np.allclose(matched.cov_core, belief.cov_core)

    def test_matches_monte_carlo_moments(self):
        rng = substream(29, "mm")
        v = 0.5
        priors = [
            GaussianBelief(rng.standard_normal(2), generate_covariance(2, rng), v)
            for _ in range(3)
        ]
        w = np.array([0.5, 0.3, 0.2])
        bank = PriorBank(tuple(priors), w)
        matched = mixture_moment_match(bank)
        draws = []
        for _ in range(200_000):
            j = sample_prior_index(bank, rng)
            p = priors[j]
            draws.append(p.mean + v * np.linalg.cholesky(p.cov_core) @ rng.standard_normal(2))
        draws = np.array(draws)
        assert np.allclose(draws.mean(axis=0), matched.mean, atol=0.02)
        assert np.allclose(np.cov(draws.T) / v**2, matched.cov_core, atol=0.05)
