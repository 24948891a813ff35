import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from perceptrisk._quadrature import GL_NODES, GL_WEIGHTS, exceedance_numba, exceedance_numpy
from perceptrisk.dirichlet import (
    BeliefBatch,
    DirichletParams,
    estimate_mle,
    exceedance_probs,
    log_density,
    log_likelihood,
    moment_initializer,
    raw_exceedance,
    sample,
)
from perceptrisk.errors import DivergentMLEError, QuadratureError, ValidationError
from perceptrisk.oracles import binomial_budget, compare_cells, mc_exceedance
from perceptrisk.verify import random_alphas

# Log density of Dirichlet(3, 2, 4) at (0.2, 0.3, 0.5), evaluated term by
# term with mpmath loggamma at 50 digits.
LOG_DENSITY_324 = 1.617406082083277248111557
# Voronoi-cell counts of 1e6 draws from Dirichlet(4.2, 1.3, 0.7, 2.5) using
# sample() with default_rng(424242) in 10 batches of 1e5 and voronoi_cell().
MC_CELLS_4 = np.array([709551, 54583, 16663, 219203])


@pytest.mark.parametrize("alpha", [[0.0, 1.0], [1.0, -2.0], [1.0, np.inf], [3.0], [[1.0, 1.0]]])
def test_params_validation(alpha):
    with pytest.raises(ValidationError):
        DirichletParams(alpha)


def test_log_density_examples():
    assert log_density(DirichletParams([1, 1]), [0.3, 0.7]) == pytest.approx(0.0, abs=1e-14)
    assert log_density(DirichletParams([2, 1]), [0.5, 0.5]) == pytest.approx(0.0, abs=1e-14)
    assert log_density(DirichletParams([3, 2, 4]), [0.2, 0.3, 0.5]) == pytest.approx(
        LOG_DENSITY_324, abs=1e-12
    )
    with pytest.raises(ValidationError):
        log_density(DirichletParams([1, 1]), [0.2, 0.3, 0.5])


def test_log_density_batch_matches_scalar():
    p = DirichletParams([0.7, 2.0, 5.0])
    b = sample(p, np.random.default_rng(0), 20)
    assert np.allclose(log_density(p, b), [log_density(p, row) for row in b])
    assert log_likelihood(p, b) == pytest.approx(sum(log_density(p, row) for row in b))


def test_sample_means():
    rng = np.random.default_rng(1)
    assert abs(sample(DirichletParams([1, 1]), rng, 10**6)[:, 0].mean() - 0.5) <= 0.002
    m = sample(DirichletParams([5, 2, 1]), rng, 10**6).mean(axis=0)
    assert np.all(np.abs(m - [0.625, 0.25, 0.125]) <= 0.002)


def test_sample_deterministic():
    p = DirichletParams([2, 3, 4])
    a = sample(p, np.random.default_rng(99), 10)
    b = sample(p, np.random.default_rng(99), 10)
    assert np.array_equal(a, b)
    assert np.allclose(a.sum(axis=1), 1.0)


def test_batch_validation():
    with pytest.raises(ValidationError, match="q < 2"):
        BeliefBatch([[0.5, 0.5]])
    with pytest.raises(ValidationError):
        BeliefBatch([[0.5, 0.5], [0.5, 0.5]], interval_length=0)
    with pytest.raises(ValidationError, match="row 1"):
        BeliefBatch([[0.5, 0.5], [0.9, 0.9]])


def test_mle_recovers_asymmetric():
    b = sample(DirichletParams([5, 2, 1]), np.random.default_rng(2024), 10_000)
    fit = estimate_mle(BeliefBatch(b))
    assert fit.converged
    assert np.all(np.abs(fit.params.alpha / [5, 2, 1] - 1) <= 0.05)


def test_mle_symmetric():
    b = sample(DirichletParams([3, 3, 3]), np.random.default_rng(5), 10_000)
    a = estimate_mle(BeliefBatch(b)).params.alpha
    assert np.all(np.abs(a / 3 - 1) <= 0.05)
    assert np.max(a) / np.min(a) - 1 <= 0.05


def test_mle_divergent():
    with pytest.raises(DivergentMLEError, match="divergent MLE"):
        estimate_mle(BeliefBatch([[0.3, 0.7]] * 5))


def test_mle_nonconvergence_warns():
    b = sample(DirichletParams([400.0, 300.0]), np.random.default_rng(3), 50)
    with pytest.warns(RuntimeWarning):
        fit = estimate_mle(BeliefBatch(b), max_iter=3)
    assert not fit.converged and fit.iterations == 3


def test_moment_initializer_formula():
    b = sample(DirichletParams([2, 5]), np.random.default_rng(4), 500)
    mean = b.mean(axis=0)
    s0 = mean[0] * (1 - mean[0]) / b[:, 0].var(ddof=1) - 1
    assert np.allclose(moment_initializer(b), s0 * mean)


@given(st.lists(st.floats(0.3, 30), min_size=2, max_size=5), st.integers(0, 2**32 - 1))
def test_mle_ascends_likelihood(alpha, seed):
    b = sample(DirichletParams(alpha), np.random.default_rng(seed), 60)
    batch = BeliefBatch(b)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        fit = estimate_mle(batch, max_iter=100_000)
    assert log_likelihood(fit.params, batch.beliefs) >= log_likelihood(fit.initial, batch.beliefs) - 1e-9


def test_exceedance_uniform():
    assert np.allclose(exceedance_probs(DirichletParams(np.ones(10))), 0.1, atol=1e-6, rtol=0)


def test_exceedance_beta_closed_form():
    # P{Beta(2, 1) > 1/2} = 1 - (1/2)^2
    assert np.allclose(exceedance_probs(DirichletParams([2, 1])), [0.75, 0.25], atol=1e-6, rtol=0)


def test_exceedance_matches_frozen_monte_carlo():
    p = exceedance_probs(DirichletParams([4.2, 1.3, 0.7, 2.5]))
    n = MC_CELLS_4.sum()
    freq = MC_CELLS_4 / n
    se = np.sqrt(freq * (1 - freq) / n)
    assert np.all(np.abs(p - freq) <= 3 * se)


def test_exceedance_mass_random():
    rng = np.random.default_rng(11)
    for alpha in random_alphas(rng, 200):
        raw, _ = raw_exceedance(alpha)
        assert abs(raw.sum() - 1) <= 1e-6
        p = exceedance_probs(DirichletParams(alpha))
        assert np.all(p >= 0) and abs(p.sum() - 1) <= 1e-12


def test_exceedance_permutation_equivariant():
    rng = np.random.default_rng(12)
    for alpha in random_alphas(rng, 30):
        perm = rng.permutation(alpha.size)
        p = exceedance_probs(DirichletParams(alpha))
        pp = exceedance_probs(DirichletParams(alpha[perm]))
        assert np.max(np.abs(pp - p[perm])) <= 1e-9


def test_exceedance_monotone_in_own_alpha():
    rng = np.random.default_rng(13)
    for alpha in random_alphas(rng, 50):
        k = int(rng.integers(alpha.size))
        bigger = alpha.copy()
        bigger[k] *= float(rng.uniform(1.01, 3.0))
        before = exceedance_probs(DirichletParams(alpha))[k]
        after = exceedance_probs(DirichletParams(bigger))[k]
        assert after >= before - 1e-6


def test_exceedance_extreme_concentrations():
    for alpha in ([1000.0, 1.0, 1.0], [0.05, 0.05, 0.05], [3000.0, 2700.0], [200.0] + [0.5] * 9):
        p = exceedance_probs(DirichletParams(alpha))
        assert abs(p.sum() - 1) <= 1e-12
    assert exceedance_probs(DirichletParams([1000.0, 1.0, 1.0]))[0] > 0.999


def test_exceedance_beyond_term_budget_raises():
    # the 500-term incomplete gamma budget runs out for concentrations near 1e4
    with pytest.raises(QuadratureError):
        exceedance_probs(DirichletParams([1e4, 9e3]))


def test_exceedance_monte_carlo_random():
    rng = np.random.default_rng(14)
    outside = cells = 0
    for alpha in random_alphas(rng, 10):
        cmp = compare_cells(exceedance_probs(DirichletParams(alpha)), mc_exceedance(alpha, 200_000, rng))
        outside += cmp.outside
        cells += cmp.cells
    assert outside <= binomial_budget(cells)


def test_backends_agree():
    rng = np.random.default_rng(15)
    for alpha in random_alphas(rng, 4) + [np.array([0.2, 0.3]), np.array([150.0, 0.5, 0.5])]:
        a, _ = exceedance_numba(alpha, 1e-8, GL_NODES, GL_WEIGHTS)
        b, _ = exceedance_numpy(alpha, 1e-8, GL_NODES, GL_WEIGHTS)
        assert np.max(np.abs(a - b)) <= 1e-12
