import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvmdi.errors import DomainError, TruncationError
from cvmdi.modulation import (
    Kind,
    ModulationScheme,
    SourceCM,
    coherent_state,
    fock_phi_state,
    fock_psi_state,
    fock_source_oracle,
    fock_two_mode_state,
    four_state_amplitudes,
    four_state_correlation,
    four_state_density,
    lambda_weights,
    resolve_cutoff,
    source_covariance,
)

from oracles import mp_lambda, mp_z4

GRID = np.logspace(-6, math.log10(4), 60)

# 50-digit evaluations from oracles.mp_lambda / mp_z4
LAMBDA_02 = (0.81878533518, 0.163748333899, 0.0163746878376, 0.00109164308342)
LAMBDA_10 = (0.383216875982, 0.370946117017, 0.184450765636, 0.0613862413643)
Z4_02 = 0.96487492935924


def test_scheme_invariants():
    s = ModulationScheme.four_state(0.2)
    assert s.v_mod == 0.4
    assert s.alpha_sq == 0.2
    assert s.variance == pytest.approx(1.4)
    with pytest.raises(DomainError):
        ModulationScheme(Kind.GAUSSIAN, -0.1)
    with pytest.raises(DomainError):
        ModulationScheme("four-state", math.nan)


def test_lambda_vacuum():
    assert tuple(lambda_weights(0.0)) == (1.0, 0.0, 0.0, 0.0)


@pytest.mark.parametrize("alpha_sq, expected", [(0.2, LAMBDA_02), (1.0, LAMBDA_10)])
def test_lambda_values(alpha_sq, expected):
    assert lambda_weights(alpha_sq).as_array() == pytest.approx(expected, abs=1e-11)
    assert sum(lambda_weights(alpha_sq)) == pytest.approx(1, abs=1e-12)


def test_lambda_spot_values_within_stated_tolerance():
    assert lambda_weights(0.2).as_array() == pytest.approx((0.818786, 0.163748, 0.0163746, 0.0010918), abs=1e-5)


@pytest.mark.parametrize("alpha_sq", [1e-6, 1e-3, 0.05, 0.3, 0.99, 1.0, 2.5, 4.0])
def test_lambda_matches_high_precision(alpha_sq):
    ref = [float(x) for x in mp_lambda(alpha_sq)]
    got = lambda_weights(alpha_sq).as_array()
    assert np.allclose(got, ref, rtol=1e-12, atol=0)


@pytest.mark.parametrize("bad", [-1e-3, math.inf, math.nan])
def test_lambda_domain(bad):
    with pytest.raises(DomainError):
        lambda_weights(bad)


def test_lambda_grid_invariants():
    for a2 in GRID:
        lam = lambda_weights(a2).as_array()
        assert abs(lam.sum() - 1) <= 1e-12
        assert np.all(lam >= 0)
        if a2 <= 1.0:
            assert np.all(np.diff(lam) <= 0), a2


def test_lambda_ordering_breaks_above_unit_amplitude():
    # lambda_0 = lambda_1 near alpha^2 = 1.0384; ordering is a small-amplitude property
    assert lambda_weights(1.03)[0] > lambda_weights(1.03)[1]
    assert lambda_weights(1.05)[0] < lambda_weights(1.05)[1]


def test_z4_value():
    assert four_state_correlation(0.2) == pytest.approx(Z4_02, abs=1e-13)
    assert four_state_correlation(0.2) == pytest.approx(0.964872, abs=1e-4)


def test_z4_small_alpha_asymptote():
    a2 = 1e-6
    ratio = four_state_correlation(a2) / (2 * math.sqrt(a2))
    # Z4 = 2 alpha (1 + c alpha^2 + ...), c ~ 0.41 > 0, so the ratio sits just above 1
    assert abs(ratio - 1) < 1e-5


def test_z4_domain():
    with pytest.raises(DomainError):
        four_state_correlation(0.0)


@pytest.mark.parametrize("alpha_sq", [1e-4, 0.1, 0.7, 3.0])
def test_z4_high_precision(alpha_sq):
    assert four_state_correlation(alpha_sq) == pytest.approx(float(mp_z4(alpha_sq)), rel=1e-12)


def test_z4_below_gaussian_and_ratio_monotone():
    ratios = []
    for a2 in GRID:
        z4 = four_state_correlation(a2)
        zg = math.sqrt((1 + 2 * a2) ** 2 - 1)
        assert 0 < z4 < zg
        ratios.append(z4 / zg)
    ratios = np.array(ratios)
    # Z4/Z_G has its minimum near alpha^2 = 1.84 and rises slowly beyond it
    assert np.all(np.diff(ratios[GRID <= 1.8]) < 0)
    assert ratios[0] == pytest.approx(1, abs=1e-5)


@given(st.floats(min_value=1e-8, max_value=6.0))
def test_z4_strictly_below_gaussian(alpha_sq):
    assert four_state_correlation(alpha_sq) < math.sqrt((1 + 2 * alpha_sq) ** 2 - 1)


def test_source_covariance_branches():
    dm = source_covariance(ModulationScheme.four_state(0.2))
    assert (dm.x_var, dm.y_var) == pytest.approx((1.4, 1.4))
    assert dm.z_corr == pytest.approx(0.964872, abs=1e-4)
    gm = source_covariance(ModulationScheme.gaussian(0.4))
    assert gm.z_corr == pytest.approx(math.sqrt(0.96), abs=1e-15)
    assert gm.z_corr == pytest.approx(0.979796, abs=1e-6)
    vac = source_covariance(ModulationScheme.four_state(0.0))
    assert (vac.x_var, vac.y_var, vac.z_corr) == (1.0, 1.0, 0.0)


def test_source_physicality_on_grid():
    for a2 in GRID:
        for scheme in (ModulationScheme.four_state(a2), ModulationScheme.gaussian(2 * a2)):
            cm = source_covariance(scheme)
            assert cm.x_var**2 - cm.z_corr**2 >= 1 - 1e-12
            assert cm.is_physical()
    assert not SourceCM(1.4, 1.4, 1.0).is_physical()


# --------------------------------------------------------------------------- #
#                               Fock oracle                                   #
# --------------------------------------------------------------------------- #

def test_phi_vacuum_limit():
    vec = fock_phi_state(0, 1e-6, 40)
    assert abs(vec[0]) == pytest.approx(1, abs=1e-12)


def test_phi_support_and_sign():
    alpha = math.sqrt(0.5)
    for k in range(4):
        vec = fock_phi_state(k, alpha, 40)
        support = np.nonzero(vec)[0]
        assert np.all(support % 4 == k)
        assert np.linalg.norm(vec) == pytest.approx(1, abs=1e-14)
        # consecutive amplitudes in a class alternate in sign
        assert np.all(np.sign(vec[support].real[:-1]) != np.sign(vec[support].real[1:]))


def test_phi_orthonormal():
    alpha = math.sqrt(0.5)
    basis = np.array([fock_phi_state(k, alpha, 40) for k in range(4)])
    assert np.allclose(basis.conj() @ basis.T, np.eye(4), atol=1e-10)


def test_mixture_reproduces_poisson():
    alpha_sq = 0.5
    alpha = math.sqrt(alpha_sq)
    lam = lambda_weights(alpha_sq)
    dist = sum(lam[k] * np.abs(fock_phi_state(k, alpha, 40)) ** 2 for k in range(4))
    n = np.arange(41)
    poisson = np.array([math.exp(-alpha_sq) * alpha_sq**m / math.factorial(m) for m in n])
    assert np.allclose(dist, poisson, atol=1e-8)


def test_phi_cutoff_errors():
    with pytest.raises(TruncationError) as info:
        fock_phi_state(0, 3.0, 10)
    assert info.value.required_cutoff > 10
    with pytest.raises(TruncationError):
        fock_phi_state(0, 0.1, 3)
    with pytest.raises(DomainError):
        fock_phi_state(4, 0.5, 40)
    with pytest.raises(DomainError):
        fock_phi_state(0, 0.0, 40)


def test_cutoff_escalation():
    assert resolve_cutoff(0.5) == 40
    big = resolve_cutoff(16.0)
    assert big > 40
    assert resolve_cutoff(16.0, big) == big


@pytest.mark.parametrize("alpha_sq, cutoff", [(0.05, 40), (0.2, 40), (0.5, 40), (1.0, 60)])
def test_fock_oracle_matches_closed_forms(alpha_sq, cutoff):
    x, y, z = fock_source_oracle(math.sqrt(alpha_sq), cutoff)
    closed = source_covariance(ModulationScheme.four_state(alpha_sq))
    assert x == pytest.approx(closed.x_var, abs=1e-8)
    assert y == pytest.approx(closed.y_var, abs=1e-8)
    assert z == pytest.approx(closed.z_corr, abs=1e-8)


def test_fock_oracle_vacuum_limit():
    x, y, z = fock_source_oracle(1e-7, 40)
    assert (x, y, z) == pytest.approx((1, 1, 0), abs=1e-6)


def test_two_mode_state_normalized():
    psi, _ = fock_two_mode_state(math.sqrt(0.5), 40)
    assert np.linalg.norm(psi) == pytest.approx(1, abs=1e-12)


def test_density_trace_and_spectrum():
    alpha_sq = 0.5
    rho = four_state_density(math.sqrt(alpha_sq), 40)
    assert np.trace(rho).real == pytest.approx(1, abs=1e-10)
    assert np.allclose(rho, rho.conj().T)
    ev = np.sort(np.linalg.eigvalsh(rho))[::-1]
    assert np.allclose(ev[:4], lambda_weights(alpha_sq).as_array(), atol=1e-8)
    assert np.all(np.abs(ev[4:]) < 1e-8)


def test_density_equals_coherent_mixture():
    alpha = math.sqrt(0.5)
    rho = four_state_density(alpha, 40)
    mix = sum(np.outer(v, v.conj()) for v in (coherent_state(g, 40) for g in four_state_amplitudes(alpha))) / 4
    assert np.linalg.norm(rho - mix, 2) < 1e-8


def test_psi_states_unitary_relation():
    alpha = math.sqrt(0.5)
    cutoff = 40
    psis = np.array([fock_psi_state(k, alpha, cutoff) for k in range(4)])
    assert np.allclose(psis.conj() @ psis.T, np.eye(4), atol=1e-10)
    coh = [coherent_state(g, cutoff) for g in four_state_amplitudes(alpha)]
    rhs = 0.5 * sum(np.kron(psis[k], coh[k]) for k in range(4))
    lhs, _ = fock_two_mode_state(alpha, cutoff)
    assert np.allclose(lhs, rhs, atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1.0))
def test_fock_oracle_property(alpha_sq):
    _, _, z = fock_source_oracle(math.sqrt(alpha_sq), 40)
    assert z == pytest.approx(four_state_correlation(alpha_sq), abs=1e-8)
