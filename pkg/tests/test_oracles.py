import math

import numpy as np
import pytest
import scipy.stats

from perceptrisk.errors import ValidationError
from perceptrisk.oracles import (
    MCExceedance,
    binomial_budget,
    compare_cells,
    mc_exceedance,
    tail_cvar,
)


def within_3se(mc, expected):
    return np.all(np.abs(mc.probs - expected) <= 3 * np.maximum(mc.stderr, 1 / mc.n))


def test_mc_symmetric(rng):
    assert within_3se(mc_exceedance([1.0, 1.0], 10**6, rng), [0.5, 0.5])


def test_mc_beta_closed_form(rng):
    # P{Beta(2, 1) > 1/2}
    p = 1 - scipy.stats.beta(2, 1).cdf(0.5)
    assert within_3se(mc_exceedance([2.0, 1.0], 10**6, rng), [p, 1 - p])


def test_mc_deterministic_and_validated():
    a = mc_exceedance([1.0, 2.0, 3.0], 20_000, np.random.default_rng(3))
    b = mc_exceedance([1.0, 2.0, 3.0], 20_000, np.random.default_rng(3))
    assert np.array_equal(a.probs, b.probs) and a.n == 20_000
    with pytest.raises(ValidationError):
        mc_exceedance([1.0, 1.0], 9_999, np.random.default_rng(0))


def test_tail_cvar_examples():
    assert tail_cvar([100, 0], [0.05, 0.95], 0.1) == pytest.approx(50.0)
    vals, probs = [3.0, 9.0, 1.0], [0.2, 0.3, 0.5]
    assert tail_cvar(vals, probs, 1.0) == pytest.approx(np.dot(vals, probs))
    for eps in (0.01, 0.3, 1.0):
        assert tail_cvar([42.0], [1.0], eps) == pytest.approx(42.0)
    # unsorted outcomes with duplicates
    assert tail_cvar([5, 10, 10], [0.5, 0.25, 0.25], 0.6) == pytest.approx((10 * 0.5 + 5 * 0.1) / 0.6)
    with pytest.raises(ValidationError):
        tail_cvar([1.0], [1.0], 0.0)


def test_binomial_budget():
    tail = 0.0027
    for cells in (10, 184, 1000):
        k = binomial_budget(cells, tail)
        assert scipy.stats.binom(cells, tail).cdf(k) >= 0.999
        assert k == 0 or scipy.stats.binom(cells, tail).cdf(k - 1) < 0.999


def test_compare_cells():
    mc = MCExceedance(np.array([0.5, 0.5]), np.full(2, math.sqrt(0.25 / 1e4)), 10_000)
    assert compare_cells([0.5, 0.5], mc).outside == 0
    far = compare_cells([0.6, 0.4], mc)
    assert far.outside == 2 and far.max_z > 3
    assert compare_cells([0.6, 0.4], mc, slack=0.1).outside == 0
