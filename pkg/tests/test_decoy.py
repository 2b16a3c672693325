import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from cvmdi.decoy import (
    DECOY,
    EST,
    KEY,
    DecoyPlan,
    decoy_cutoff,
    decoy_feasibility,
    mixture_weights,
    residual_min_eigenvalue,
    sample_labels,
    thermal_diagonal,
)
from cvmdi.errors import DomainError

from oracles import decoy_pmax_closed_form

# regression target from the eigenvalue bisection, confirmed by the closed form
PMAX_02_02 = 0.833778


def test_mixture_weights_examples():
    assert mixture_weights(1, 0) == (1, 0, 0)
    assert mixture_weights(0, 1) == (0, 0, 1)
    assert mixture_weights(0.5, 0.1) == pytest.approx((0.45, 0.45, 0.1), abs=1e-15)
    with pytest.raises(DomainError):
        mixture_weights(1.2, 0)
    with pytest.raises(DomainError):
        mixture_weights(0.5, -0.1)


@given(st.floats(0, 1), st.floats(0, 1))
def test_mixture_weights_sum(p, p_est):
    assert sum(mixture_weights(p, p_est)) == pytest.approx(1, abs=1e-15)


def test_plan_defaults():
    plan = DecoyPlan(0.5, 0.1, 0.2)
    assert plan.nbar == 0.2
    with pytest.raises(DomainError):
        DecoyPlan(0.5, 0.1, 0.0)
    with pytest.raises(DomainError):
        DecoyPlan(0.5, 0.1, 0.2, nbar=-1)


def test_thermal_diagonal_normalized():
    d = thermal_diagonal(0.3, decoy_cutoff(0.2, 0.3))
    assert d.sum() == pytest.approx(1, abs=1e-12)


def test_pmax_regression_and_closed_form():
    p = decoy_feasibility(0.2, 0.2, cutoff=40)
    assert 0 < p < 1
    assert p == pytest.approx(PMAX_02_02, abs=1e-6)
    assert p == pytest.approx(decoy_pmax_closed_form(0.2, 0.2, 40), rel=2e-6)


@pytest.mark.parametrize("alpha_sq, nbar", [(0.2, 0.2), (0.5, 0.5), (0.5, 0.05), (0.5, 0.01), (1.0, 0.2), (0.1, 1.0), (0.3, 0.6)])
def test_pmax_matches_closed_form(alpha_sq, nbar):
    cutoff = decoy_cutoff(alpha_sq, nbar)
    assert decoy_feasibility(alpha_sq, nbar) == pytest.approx(
        decoy_pmax_closed_form(alpha_sq, nbar, cutoff), rel=2e-6)


def test_weak_thermal_state_cannot_cover():
    weak = decoy_feasibility(0.5, 0.01)
    strong = decoy_feasibility(0.5, 0.5)
    assert weak < 1e-15
    assert weak < strong


def test_pmax_below_double_range_is_zero():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert decoy_feasibility(20.0, 1e-6) == 0.0


def test_vacuum_limit():
    # both states approach the vacuum with alpha^2 / nbar -> 0
    assert decoy_feasibility(1e-8, 1e-4) > 0.9998


def test_vacuum_weight_limits_hot_thermal_state():
    # rho_4 has vacuum weight e^{-alpha^2} while tau has only 1/(1 + nbar)
    p = decoy_feasibility(0.01, 2.0)
    assert p <= math.exp(0.01) / 3 * (1 + 1e-9)
    assert p == pytest.approx(math.exp(0.01) / 3, rel=0.01)


@pytest.mark.parametrize("alpha_sq, nbar", [(0.2, 0.2), (0.5, 0.5)])
def test_residual_eigenvalue_brackets_pmax(alpha_sq, nbar):
    p = decoy_feasibility(alpha_sq, nbar)
    at = residual_min_eigenvalue(alpha_sq, nbar, p)
    assert -1e-8 <= at <= 1e-6
    assert residual_min_eigenvalue(alpha_sq, nbar, p * (1 + 1e-3)) < -1e-8


def test_pmax_monotone_in_nbar():
    ps = [decoy_feasibility(0.3, nb) for nb in (0.05, 0.1, 0.2, 0.3, 0.5)]
    assert all(x < y for x, y in zip(ps, ps[1:]))


def test_feasibility_domain():
    with pytest.raises(DomainError):
        decoy_feasibility(0, 0.2)
    with pytest.raises(DomainError):
        decoy_feasibility(0.2, -1)


def test_sampling_all_key():
    labels = sample_labels(DecoyPlan(1, 0, 0.2), 1000)
    assert np.all(labels == KEY)


def test_sampling_fractions():
    n = 1_000_000
    labels = sample_labels(DecoyPlan(0.5, 0.1, 0.2, seed=7), n)
    counts = np.bincount(labels, minlength=3)
    assert counts[KEY] / n == pytest.approx(0.45, abs=0.0015)
    expected = np.array([0.45, 0.45, 0.1]) * n
    assert stats.chisquare(counts, expected).pvalue > 0.01
    assert set(np.unique(labels)) <= {KEY, DECOY, EST}


def test_sampling_deterministic():
    plan = DecoyPlan(0.6, 0.2, 0.2, seed=11)
    assert np.array_equal(sample_labels(plan, 5000), sample_labels(plan, 5000))
    other = DecoyPlan(0.6, 0.2, 0.2, seed=12)
    assert not np.array_equal(sample_labels(plan, 5000), sample_labels(other, 5000))
    assert sample_labels(plan, 10, np.random.default_rng(3)).dtype == np.uint8


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.9), st.floats(0.05, 0.9))
def test_pmax_in_unit_interval(alpha_sq, nbar):
    assert 0 <= decoy_feasibility(alpha_sq, nbar) <= 1
