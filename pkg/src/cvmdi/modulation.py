"""
Source models for the four-state and Gaussian modulations.

Quadrature convention: x = a + a^dag, p = i(a^dag - a), so the vacuum has unit
variance (shot-noise units) and |gamma> has mean (2 Re gamma, 2 Im gamma).

The four-state source is handled in two independent ways:

* closed forms for the Schmidt weights and the correlation Z4, and
* a truncated Fock-space construction (``fock_*`` functions) that builds the
  purification explicitly and evaluates expectation values with ladder
  operators.  The latter is used as a brute-force oracle for the former.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln, logsumexp
from scipy.stats import poisson

from .errors import DomainError, TruncationError

DEFAULT_CUTOFF = 40
TAIL_TOL = 1e-12
_MAX_CUTOFF = 400


class Kind(str, enum.Enum):
    FOUR_STATE = "four-state"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class ModulationScheme:
    """Modulation of a single sender.

    ``v_mod`` is the modulation variance V_M in shot-noise units.  For the
    four-state scheme it is tied to the coherent amplitude by V_M = 2 alpha^2.
    """

    kind: Kind
    v_mod: float

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        v = float(self.v_mod)
        if not math.isfinite(v) or v < 0:
            raise DomainError(f"modulation variance must be finite and >= 0, got {self.v_mod!r}")
        object.__setattr__(self, "v_mod", v)

    @classmethod
    def four_state(cls, alpha_sq):
        return cls(Kind.FOUR_STATE, 2.0 * float(alpha_sq))

    @classmethod
    def gaussian(cls, v_mod):
        return cls(Kind.GAUSSIAN, v_mod)

    @property
    def alpha_sq(self):
        return self.v_mod / 2.0

    @property
    def variance(self):
        """V = 1 + V_M, the quadrature variance of each source mode."""
        return 1.0 + self.v_mod


@dataclass(frozen=True)
class SchmidtWeights:
    lambdas: tuple

    def __iter__(self):
        return iter(self.lambdas)

    def __getitem__(self, k):
        return self.lambdas[k % 4]

    def as_array(self):
        return np.array(self.lambdas)


@dataclass(frozen=True)
class SourceCM:
    """Two-mode source covariance with blocks X*I, Z*sigma_z, Y*I."""

    x_var: float
    y_var: float
    z_corr: float

    def is_physical(self, tol=1e-12):
        """Smaller symplectic eigenvalue >= 1 (and Z >= 0)."""
        x, y, z = self.x_var, self.y_var, self.z_corr
        big = x * x + y * y - 2 * z * z
        det = x * y - z * z
        disc = max(big * big - 4 * det * det, 0.0)
        nu_minus_sq = 0.5 * (big - math.sqrt(disc))
        return z >= 0 and det > 0 and nu_minus_sq >= (1 - tol) ** 2

    def matrix(self):
        """4x4 covariance in (x1, p1, x2, p2) ordering."""
        x, y, z = self.x_var, self.y_var, self.z_corr
        return np.array([
            [x, 0, z, 0],
            [0, x, 0, -z],
            [z, 0, y, 0],
            [0, -z, 0, y],
        ], dtype=float)


def _check_alpha_sq(alpha_sq):
    a2 = float(alpha_sq)
    if not math.isfinite(a2) or a2 < 0:
        raise DomainError(f"alpha^2 must be finite and >= 0, got {alpha_sq!r}")
    return a2


def _mod4_series(x, k, terms=40):
    # sum_{m = k mod 4} x^m / m!, accurate for small x where cosh - cos cancels
    total, m = 0.0, k
    term = x**k / math.factorial(k)
    for _ in range(terms):
        total += term
        term *= x**4 / ((m + 1) * (m + 2) * (m + 3) * (m + 4))
        m += 4
        if term < 1e-18 * total:
            break
    return total


def lambda_weights(alpha_sq) -> SchmidtWeights:
    """Schmidt weights of the four-state purification (eigenvalues of rho_4).

    lambda_{0,2} = e^{-a}/2 [cosh a +- cos a],  lambda_{1,3} = e^{-a}/2 [sinh a +- sin a]
    with a = alpha^2.  The difference branches are summed as power series for
    a < 1 to avoid cancellation.
    """
    a = _check_alpha_sq(alpha_sq)
    if a == 0:
        return SchmidtWeights((1.0, 0.0, 0.0, 0.0))
    pref = 0.5 * math.exp(-a)
    lam0 = pref * (math.cosh(a) + math.cos(a))
    lam1 = pref * (math.sinh(a) + math.sin(a))
    if a < 1.0:
        lam2 = math.exp(-a) * _mod4_series(a, 2)
        lam3 = math.exp(-a) * _mod4_series(a, 3)
    else:
        lam2 = pref * (math.cosh(a) - math.cos(a))
        lam3 = pref * (math.sinh(a) - math.sin(a))
    return SchmidtWeights((lam0, lam1, lam2, lam3))


def four_state_correlation(alpha_sq):
    """Z4 = 2 alpha^2 sum_k lambda_{k-1}^{3/2} lambda_k^{-1/2}, indices mod 4."""
    a = _check_alpha_sq(alpha_sq)
    if a <= 0:
        raise DomainError("Z4 requires alpha^2 > 0 (all Schmidt weights nonzero)")
    lam = lambda_weights(a)
    return 2.0 * a * sum(lam[k - 1] ** 1.5 / math.sqrt(lam[k]) for k in range(4))


def gaussian_correlation(variance):
    """Z_G = sqrt(V^2 - 1) of a two-mode squeezed vacuum."""
    return math.sqrt(max(variance * variance - 1.0, 0.0))


def source_covariance(scheme: ModulationScheme) -> SourceCM:
    v = scheme.variance
    if scheme.kind is Kind.GAUSSIAN:
        z = gaussian_correlation(v)
    elif scheme.v_mod == 0:
        z = 0.0
    else:
        z = four_state_correlation(scheme.alpha_sq)
    return SourceCM(v, v, z)


# --------------------------------------------------------------------------- #
#                          truncated Fock-space oracle                        #
# --------------------------------------------------------------------------- #

def poisson_tail(mean, cutoff):
    """Probability mass above ``cutoff`` of a Poisson law with the given mean."""
    return float(poisson.sf(cutoff, mean))


def required_cutoff(mean, tol=TAIL_TOL, start=4):
    n = max(int(start), 4)
    while poisson_tail(mean, n) >= tol:
        n += 1
        if n > _MAX_CUTOFF:
            raise TruncationError(f"no cutoff <= {_MAX_CUTOFF} holds tail below {tol:g}")
    return n


def resolve_cutoff(mean, cutoff=None, tol=TAIL_TOL):
    """Validate ``cutoff``, or pick one (default 40, escalated) when None."""
    if cutoff is None:
        return required_cutoff(mean, tol, start=DEFAULT_CUTOFF)
    cutoff = int(cutoff)
    if cutoff < 4:
        raise TruncationError(f"cutoff must be >= 4, got {cutoff}", required_cutoff=4)
    if poisson_tail(mean, cutoff) >= tol:
        need = required_cutoff(mean, tol, start=cutoff)
        raise TruncationError(
            f"cutoff {cutoff} leaves Poisson tail {poisson_tail(mean, cutoff):.3g} >= {tol:g}; "
            f"need cutoff >= {need}",
            required_cutoff=need,
        )
    return cutoff


def _check_alpha(alpha):
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha <= 0:
        raise DomainError(f"alpha must be finite and > 0, got {alpha!r}")
    return alpha


def _class_log_amplitudes(k, alpha, cutoff):
    m = np.arange(k, cutoff + 1, 4)
    logc = m * math.log(alpha) - 0.5 * gammaln(m + 1)
    sign = np.where(((m - k) // 4) % 2 == 0, 1.0, -1.0)
    return m, logc, sign


def fock_phi_state(k, alpha, cutoff=None, tol=TAIL_TOL):
    """Schmidt vector |phi_k>, supported on photon numbers n = k (mod 4).

    Amplitudes (-1)^j alpha^(4j+k) / sqrt((4j+k)!) are normalized after
    truncation; the returned vector has length ``cutoff + 1``.
    """
    if k not in (0, 1, 2, 3):
        raise DomainError(f"k must be in 0..3, got {k!r}")
    alpha = _check_alpha(alpha)
    cutoff = resolve_cutoff(alpha**2, cutoff, tol)
    m, logc, sign = _class_log_amplitudes(k, alpha, cutoff)
    amp = sign * np.exp(logc - logc.max())
    vec = np.zeros(cutoff + 1, dtype=complex)
    vec[m] = amp / np.linalg.norm(amp)
    return vec


def fock_psi_state(k, alpha, cutoff=None, tol=TAIL_TOL):
    """Non-Gaussian state |psi_k> = 1/2 sum_m exp(-i(1+2k) m pi/4) |phi_m>.

    With this phase the purification satisfies
    sum_k sqrt(lambda_k)|phi_k>|phi_k> = 1/2 sum_k |psi_k>|alpha_k>.
    """
    if k not in (0, 1, 2, 3):
        raise DomainError(f"k must be in 0..3, got {k!r}")
    cutoff = resolve_cutoff(_check_alpha(alpha) ** 2, cutoff, tol)
    phases = np.exp(-1j * (1 + 2 * k) * np.arange(4) * math.pi / 4)
    return 0.5 * sum(phases[m] * fock_phi_state(m, alpha, cutoff) for m in range(4))


def coherent_state(gamma, cutoff):
    """Truncated coherent state |gamma> (not renormalized)."""
    n = np.arange(cutoff + 1)
    r = abs(gamma)
    if r == 0:
        vec = np.zeros(cutoff + 1, dtype=complex)
        vec[0] = 1
        return vec
    logmag = -0.5 * r**2 + n * math.log(r) - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.exp(1j * n * np.angle(gamma))


def four_state_amplitudes(alpha):
    """The four coherent amplitudes alpha*exp(i(2k+1)pi/4), k = 0..3."""
    return alpha * np.exp(1j * (2 * np.arange(4) + 1) * math.pi / 4)


def annihilation(cutoff):
    return sp.diags(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1, format="csr")


def _fock_weights(alpha, cutoff):
    # lambda_k as truncated Poisson class masses, independent of the cosh/cos forms
    logs = []
    for k in range(4):
        _, logc, _ = _class_log_amplitudes(k, alpha, cutoff)
        logs.append(-alpha**2 + logsumexp(2 * logc))
    return np.exp(logs)


def fock_two_mode_state(alpha, cutoff=None, tol=TAIL_TOL):
    """|Psi_4> = sum_k sqrt(lambda_k) |phi_k>|phi_k> as a (cutoff+1)^2 vector."""
    alpha = _check_alpha(alpha)
    cutoff = resolve_cutoff(alpha**2, cutoff, tol)
    lam = _fock_weights(alpha, cutoff)
    lam = lam / lam.sum()
    psi = sum(math.sqrt(lam[k]) * np.kron(fock_phi_state(k, alpha, cutoff), fock_phi_state(k, alpha, cutoff))
              for k in range(4))
    return psi, cutoff


def fock_source_oracle(alpha, cutoff=None, tol=TAIL_TOL):
    """(X, Y, Z) of |Psi_4> from truncated ladder operators.

    X = 1 + 2<a1^dag a1>, Y = 1 + 2<a2^dag a2>, Z = <a1 a2 + a1^dag a2^dag>.
    """
    psi, cutoff = fock_two_mode_state(alpha, cutoff, tol)
    a = annihilation(cutoff)
    eye = sp.identity(cutoff + 1, format="csr")
    a1 = sp.kron(a, eye, format="csr")
    a2 = sp.kron(eye, a, format="csr")
    a1psi, a2psi = a1 @ psi, a2 @ psi
    n1 = np.vdot(a1psi, a1psi).real
    n2 = np.vdot(a2psi, a2psi).real
    pair = np.vdot(psi, a1 @ a2psi)
    return 1 + 2 * n1, 1 + 2 * n2, 2 * pair.real


def four_state_density(alpha, cutoff=None, tol=TAIL_TOL):
    """rho_4 = sum_k lambda_k |phi_k><phi_k| in the truncated Fock basis."""
    alpha = _check_alpha(alpha)
    cutoff = resolve_cutoff(alpha**2, cutoff, tol)
    lam = lambda_weights(alpha**2)
    rho = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    for k in range(4):
        phi = fock_phi_state(k, alpha, cutoff)
        rho += lam[k] * np.outer(phi, phi.conj())
    return rho
