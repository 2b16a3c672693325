"""Joint covariance matrix, Holevo bound and reverse-reconciliation key rate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .channel import IDEAL_DETECTOR, DetectorModel, EquivalentChannel, LinkBudget, equivalent_channel, transmittance_from_distance
from .errors import DomainError, ModelError
from .modulation import ModulationScheme, SourceCM, source_covariance

PHYS_TOL = 1e-9
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class JointCM:
    """Covariance of (A1, B'1) with blocks a*I, c*sigma_z, b*I."""

    a: float
    b: float
    c: float

    def matrix(self):
        """4x4 covariance in (x_A, p_A, x_B, p_B) ordering."""
        a, b, c = self.a, self.b, self.c
        return np.array([
            [a, 0, c, 0],
            [0, a, 0, -c],
            [c, 0, b, 0],
            [0, -c, 0, b],
        ], dtype=float)


@dataclass(frozen=True)
class KeyRateReport:
    i_ab: float
    kappa: tuple
    chi_be: float
    key_rate: float
    plob: float
    beta: float
    cm: JointCM
    channel: EquivalentChannel
    metadata: dict = field(default_factory=dict)


def assemble_joint_cm(source: SourceCM, chan: EquivalentChannel, use_detector_noise=True) -> JointCM:
    """(a, b, c) = (X, eta (Y + chi), sqrt(eta) Z), chi = chi_t' or chi_t."""
    chi = chan.chi_t_prime if use_detector_noise else chan.chi_t
    cm = JointCM(source.x_var, chan.eta * (source.y_var + chi), math.sqrt(chan.eta) * source.z_corr)
    k1, k2 = symplectic_pair(cm)
    if k2 < 1 - PHYS_TOL:
        raise ModelError(f"unphysical joint CM {cm} from source={source}, channel={chan}: kappa_2={k2:.12g}")
    return cm


def _check_heterodyne(cm):
    if cm.c**2 >= (cm.a + 1) * (cm.b + 1):
        raise DomainError(f"unphysical input: c^2 >= (a+1)(b+1) for {cm}")


def mutual_information(cm: JointCM):
    """I_AB = log2[(a + 1) / (a + 1 - c^2/(b + 1))], both quadratures heterodyned."""
    _check_heterodyne(cm)
    a, b, c = cm.a, cm.b, cm.c
    return math.log2((a + 1) / (a + 1 - c * c / (b + 1)))


def heterodyne_mutual_information(cm: JointCM):
    """Same quantity written per quadrature: 2 * 1/2 log2(V_A / V_A|B)."""
    _check_heterodyne(cm)
    v_a = (cm.a + 1) / 2
    v_b = (cm.b + 1) / 2
    v_a_given_b = v_a - cm.c**2 / (4 * v_b)
    return 2 * 0.5 * math.log2(v_a / v_a_given_b)


def symplectic_pair(cm: JointCM):
    """Symplectic eigenvalues (kappa_1 >= kappa_2) of the joint CM.

    kappa^2 = (A +- sqrt(A^2 - 4B^2)) / 2 with A = a^2 + b^2 - 2c^2, B = ab - c^2.
    """
    a, b, c = cm.a, cm.b, cm.c
    big_a = a * a + b * b - 2 * c * c
    big_b = a * b - c * c
    if big_b <= 0:
        raise ModelError(f"non-positive determinant for {cm}")
    disc = big_a * big_a - 4 * big_b * big_b
    if disc < 0:
        if disc < -PHYS_TOL * max(1.0, big_a * big_a):
            raise ModelError(f"negative discriminant {disc:.3g} for {cm}")
        disc = 0.0
    root = math.sqrt(disc)
    k1_sq = 0.5 * (big_a + root)
    # |B| = k1 k2 is better conditioned than the difference for the small root
    k2_sq = big_b * big_b / k1_sq
    return math.sqrt(k1_sq), math.sqrt(k2_sq)


def conditional_eigenvalue(cm: JointCM):
    """kappa_3 = a - c^2/(b + 1): Alice's mode after Bob's heterodyne."""
    _check_heterodyne(cm)
    return cm.a - cm.c**2 / (cm.b + 1)


def entropy_g(x):
    """G(x) = (x+1) log2(x+1) - x log2 x, in bits; G(0) = 0."""
    x = float(x)
    if x < 0:
        if x < -1e-12:
            raise DomainError(f"G(x) needs x >= 0, got {x}")
        x = 0.0
    return ((x + 1) * math.log1p(x) - xlogy(x, x)) / _LN2


def holevo_bound(cm: JointCM):
    """chi_BE = G[(k1-1)/2] + G[(k2-1)/2] - G[(k3-1)/2]."""
    k1, k2 = symplectic_pair(cm)
    k3 = conditional_eigenvalue(cm)
    return entropy_g((k1 - 1) / 2) + entropy_g((k2 - 1) / 2) - entropy_g((k3 - 1) / 2)


def plob_bound(eta):
    """Repeaterless secret-key capacity -log2(1 - eta) of a pure-loss channel."""
    eta = float(eta)
    if not math.isfinite(eta) or eta <= 0:
        raise DomainError(f"PLOB needs eta > 0, got {eta}")
    if eta >= 1:
        raise DomainError("PLOB capacity is infinite for eta >= 1")
    return -math.log1p(-eta) / _LN2


def generic_symplectic_oracle(cm4):
    """Symplectic spectrum of a two-mode CM as moduli of eig(i Omega gamma), ascending.

    Ordering is (x1, p1, x2, p2).
    """
    g = np.asarray(cm4, dtype=float)
    if g.shape != (4, 4):
        raise DomainError(f"expected a 4x4 matrix, got shape {g.shape}")
    if not np.allclose(g, g.T, rtol=0, atol=1e-12 * max(1.0, np.abs(g).max())):
        raise DomainError("covariance matrix must be symmetric")
    omega = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    ev = np.sort(np.abs(np.linalg.eigvals(1j * omega @ g)))
    # eigenvalues come in +-nu pairs
    return float(0.5 * (ev[0] + ev[1])), float(0.5 * (ev[2] + ev[3]))


def plob_reference(link: LinkBudget):
    """PLOB over the full Alice-to-Bob line; infinite at zero length."""
    eta_ch = transmittance_from_distance(link.total_length, link.loss_db_per_km)
    if eta_ch >= 1:
        return math.inf
    return plob_bound(eta_ch)


def secret_key_rate(scheme: ModulationScheme, link: LinkBudget, det: DetectorModel = IDEAL_DETECTOR,
                    beta=1.0, gain_sq=None) -> KeyRateReport:
    """K = beta * I_AB - chi_BE, bits per pulse.  Negative K is returned as is."""
    beta = float(beta)
    if not 0 <= beta <= 1:
        raise DomainError(f"reconciliation efficiency must lie in [0, 1], got {beta}")
    if scheme.v_mod <= 0:
        raise DomainError("key rate needs V_M > 0")
    source = source_covariance(scheme)
    chan = equivalent_channel(link, scheme.variance, det, gain_sq=gain_sq)
    cm = assemble_joint_cm(source, chan, use_detector_noise=True)
    i_ab = mutual_information(cm)
    k1, k2 = symplectic_pair(cm)
    k3 = conditional_eigenvalue(cm)
    chi_be = entropy_g((k1 - 1) / 2) + entropy_g((k2 - 1) / 2) - entropy_g((k3 - 1) / 2)
    return KeyRateReport(
        i_ab=i_ab,
        kappa=(k1, k2, k3),
        chi_be=chi_be,
        key_rate=beta * i_ab - chi_be,
        plob=plob_reference(link),
        beta=beta,
        cm=cm,
        channel=chan,
    )
