"""
Decoy-state mixtures.

The key states (average state rho_4) and the decoy states are mixed so that
the average emitted state is the thermal state tau(nbar) of a Gaussian
modulation:  p * rho_4 + (1 - p) * sigma_decoy = tau(nbar).  A decoy state
exists iff tau(nbar) - p * rho_4 is positive semidefinite, which bounds the
key-state weight by ``p_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from scipy.special import gammaln

from .errors import DomainError
from .modulation import TAIL_TOL, _MAX_CUTOFF, four_state_density, resolve_cutoff

LABELS = ("key", "decoy", "est")
KEY, DECOY, EST = range(3)

# pencil entries beyond e^690 mean p_max < 1e-300: reported as infeasible
_LOG_PENCIL_MAX = 690.0


def mixture_weights(p, p_est):
    """Probabilities of key, decoy and estimation pulses."""
    p, p_est = float(p), float(p_est)
    for name, v in (("p", p), ("p_est", p_est)):
        if not 0 <= v <= 1:
            raise DomainError(f"{name} must lie in [0, 1], got {v}")
    w_decoy = (1 - p) * (1 - p_est)
    w_key = p * (1 - p_est)
    return w_key, w_decoy, p_est


@dataclass(frozen=True)
class DecoyPlan:
    p: float
    p_est: float
    alpha_sq: float
    nbar: float | None = None
    seed: int = 0

    def __post_init__(self):
        mixture_weights(self.p, self.p_est)
        if self.alpha_sq <= 0:
            raise DomainError("alpha^2 must be > 0")
        if self.nbar is None:
            object.__setattr__(self, "nbar", float(self.alpha_sq))
        elif self.nbar <= 0:
            raise DomainError("nbar must be > 0")

    @property
    def weights(self):
        return mixture_weights(self.p, self.p_est)


def _log_thermal(nbar, cutoff):
    n = np.arange(cutoff + 1)
    return n * math.log(nbar) - (n + 1) * math.log1p(nbar)


def thermal_diagonal(nbar, cutoff):
    """Photon-number distribution of the thermal state, truncated (not renormalized)."""
    return np.exp(_log_thermal(nbar, cutoff))


def _thermal_cutoff(nbar, tol):
    # geometric tail: P(N > n) = (nbar / (1 + nbar))^(n + 1)
    q = nbar / (1 + nbar)
    return max(4, math.ceil(math.log(tol) / math.log(q)) - 1)


def decoy_cutoff(alpha_sq, nbar, cutoff=None, tol=TAIL_TOL):
    """Cutoff holding both the Poisson and the thermal tails below ``tol``."""
    need = max(resolve_cutoff(alpha_sq, None, tol), _thermal_cutoff(nbar, tol))
    if need > _MAX_CUTOFF:
        raise DomainError(f"thermal tail of nbar={nbar} needs cutoff {need} > {_MAX_CUTOFF}")
    if cutoff is None:
        return need
    resolve_cutoff(alpha_sq, cutoff, tol)
    return int(cutoff)


def residual_min_eigenvalue(alpha_sq, nbar, p, cutoff=None):
    """Smallest eigenvalue of tau(nbar) - p * rho_4 in the truncated Fock space."""
    cutoff = decoy_cutoff(alpha_sq, nbar, cutoff)
    rho = four_state_density(math.sqrt(alpha_sq), cutoff)
    tau = np.diag(thermal_diagonal(nbar, cutoff))
    return float(np.linalg.eigvalsh(tau - p * rho)[0])


def _whitened_pencil(alpha_sq, nbar, cutoff):
    """tau^{-1/2} rho_4 tau^{-1/2}, or None when its entries exceed double range.

    Congruence keeps the inertia of tau - p rho_4.  rho_4 is the uniform
    mixture of the four coherent states, so the pencil is built from whitened
    coherent amplitudes in log space; nothing underflows before whitening.
    The diagonal entries e^{-a} a^m / m! / tau_m bound the top eigenvalue from
    below, so an overflowing diagonal already certifies p_max < 1e-300.
    """
    n = np.arange(cutoff + 1)
    log_mag = -0.5 * alpha_sq + 0.5 * n * math.log(alpha_sq) - 0.5 * gammaln(n + 1) \
        - 0.5 * _log_thermal(nbar, cutoff)
    if 2 * log_mag.max() > _LOG_PENCIL_MAX:
        return None
    mag = np.exp(log_mag)
    m = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    for theta in (2 * np.arange(4) + 1) * math.pi / 4:
        v = mag * np.exp(1j * n * theta)
        m += np.outer(v, v.conj())
    return m / 4


def decoy_feasibility(alpha_sq, nbar=None, cutoff=None, rtol=1e-6):
    """Largest key weight p with tau(nbar) - p * rho_4 >= 0; 0.0 if none exists.

    Bisection on the minimum eigenvalue of the whitened pencil I - p * M,
    with M = tau^{-1/2} rho_4 tau^{-1/2}.  The bracket is searched
    geometrically first so that very small p_max keep relative precision.
    """
    alpha_sq = float(alpha_sq)
    if alpha_sq <= 0:
        raise DomainError("alpha^2 must be > 0")
    nbar = alpha_sq if nbar is None else float(nbar)
    if nbar <= 0:
        raise DomainError("nbar must be > 0")
    cutoff = decoy_cutoff(alpha_sq, nbar, cutoff)
    m = _whitened_pencil(alpha_sq, nbar, cutoff)
    if m is None:
        return 0.0

    def feasible(p):
        return np.linalg.eigvalsh(np.eye(len(m)) - p * m)[0] >= 0

    if feasible(1.0):
        return 1.0
    hi, lo = 1.0, 0.1
    while not feasible(lo):
        hi, lo = lo, lo * 0.1
        if lo < 1e-300:
            return 0.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def sample_labels(plan: DecoyPlan, n, rng=None):
    """Draw ``n`` pulse labels (0=key, 1=decoy, 2=est) as uint8.

    Uses ``plan.seed`` unless an explicit generator is passed.
    """
    n = int(n)
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = np.random.default_rng(plan.seed) if rng is None else rng
    w_key, w_decoy, w_est = plan.weights
    u = rng.random(n)
    labels = np.full(n, KEY, dtype=np.uint8)
    labels[u >= w_key] = DECOY
    labels[u >= w_key + w_decoy] = EST
    return labels
