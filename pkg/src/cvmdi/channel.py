"""Reduction of the two-link relay configuration to an equivalent one-way channel."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

DEFAULT_LOSS_DB_PER_KM = 0.2


def _finite(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


def transmittance_from_distance(length_km, loss_db_per_km=DEFAULT_LOSS_DB_PER_KM):
    """Fibre transmittance 10^(-loss * L / 10)."""
    length_km = _finite("length", length_km)
    loss_db_per_km = _finite("loss", loss_db_per_km)
    if length_km < 0:
        raise DomainError(f"length must be >= 0 km, got {length_km}")
    if loss_db_per_km <= 0:
        raise DomainError(f"loss must be > 0 dB/km, got {loss_db_per_km}")
    return 10.0 ** (-loss_db_per_km * length_km / 10.0)


@dataclass(frozen=True)
class LinkBudget:
    """Alice-Charlie and Bob-Charlie fibre links.

    Excess noises are referred to the channel input, in shot-noise units.
    """

    l_ac: float = 0.0
    l_bc: float = 0.0
    loss_db_per_km: float = DEFAULT_LOSS_DB_PER_KM
    eps_a: float = 0.0
    eps_b: float = 0.0

    def __post_init__(self):
        for name in ("l_ac", "l_bc", "eps_a", "eps_b"):
            value = _finite(name, getattr(self, name))
            if value < 0:
                raise DomainError(f"{name} must be >= 0, got {value}")
            object.__setattr__(self, name, value)
        loss = _finite("loss_db_per_km", self.loss_db_per_km)
        if loss <= 0:
            raise DomainError(f"loss_db_per_km must be > 0, got {loss}")
        object.__setattr__(self, "loss_db_per_km", loss)

    @property
    def eta_a(self):
        return transmittance_from_distance(self.l_ac, self.loss_db_per_km)

    @property
    def eta_b(self):
        return transmittance_from_distance(self.l_bc, self.loss_db_per_km)

    @property
    def total_length(self):
        return self.l_ac + self.l_bc


@dataclass(frozen=True)
class DetectorModel:
    """Charlie's homodyne detectors: quantum efficiency and electronic noise."""

    eta_hom: float = 1.0
    v_el: float = 0.0

    def __post_init__(self):
        eta = _finite("eta_hom", self.eta_hom)
        v_el = _finite("v_el", self.v_el)
        if not 0 < eta <= 1:
            raise DomainError(f"eta_hom must lie in (0, 1], got {eta}")
        if v_el < 0:
            raise DomainError(f"v_el must be >= 0, got {v_el}")
        object.__setattr__(self, "eta_hom", eta)
        object.__setattr__(self, "v_el", v_el)

    @property
    def is_ideal(self):
        return self.eta_hom == 1.0 and self.v_el == 0.0

    @property
    def chi_hom(self):
        """Detection-added noise [v_el + (1 - eta_hom)] / eta_hom."""
        return (self.v_el + 1.0 - self.eta_hom) / self.eta_hom


IDEAL_DETECTOR = DetectorModel()


@dataclass(frozen=True)
class EquivalentChannel:
    gain_sq: float
    eta: float
    eps: float
    chi_t: float
    chi_t_prime: float

    @property
    def gain(self):
        return math.sqrt(self.gain_sq)


def line_noise(eta, eps):
    """Noise added by one link, 1/eta - 1 + eps."""
    eta = _finite("eta", eta)
    if not 0 < eta <= 1:
        raise DomainError(f"transmittance must lie in (0, 1], got {eta}")
    return 1.0 / eta - 1.0 + float(eps)


def optimal_gain(v_b, eta_b):
    """Displacement gain g^2 = 2(V_B - 1) / (eta_B (V_B + 1)) that minimizes the excess noise."""
    v_b = _finite("V_B", v_b)
    eta_b = _finite("eta_B", eta_b)
    if v_b <= 1:
        raise DomainError(f"optimal gain needs V_B > 1 (nonzero modulation), got {v_b}")
    if not 0 < eta_b <= 1:
        raise DomainError(f"eta_B must lie in (0, 1], got {eta_b}")
    return 2.0 * (v_b - 1.0) / (eta_b * (v_b + 1.0))


def equivalent_excess_noise(link: LinkBudget, gain_sq, v_b):
    """Excess noise of the equivalent one-way channel for an arbitrary gain.

    eps = 1 + chi_A + (eta_B/eta_A)(chi_B - 1)
          + (eta_B/eta_A) (sqrt(2/(eta_B g^2)) sqrt(V_B - 1) - sqrt(V_B + 1))^2
    """
    gain_sq = _finite("g^2", gain_sq)
    if gain_sq <= 0:
        raise DomainError(f"g^2 must be > 0, got {gain_sq}")
    if v_b < 1:
        raise DomainError(f"V_B must be >= 1, got {v_b}")
    eta_a, eta_b = link.eta_a, link.eta_b
    if eta_a <= 0 or eta_b <= 0:
        raise DomainError("degenerate transmittance (link too long for double precision)")
    chi_a = line_noise(eta_a, link.eps_a)
    chi_b = line_noise(eta_b, link.eps_b)
    ratio = eta_b / eta_a
    mismatch = math.sqrt(2.0 / (eta_b * gain_sq)) * math.sqrt(v_b - 1.0) - math.sqrt(v_b + 1.0)
    return 1.0 + chi_a + ratio * (chi_b - 1.0) + ratio * mismatch**2


def equivalent_excess_noise_optimal(link: LinkBudget):
    """Closed form at the optimal gain: (eta_B/eta_A)(eps_B - 2) + eps_A + 2/eta_A."""
    eta_a, eta_b = link.eta_a, link.eta_b
    return eta_b / eta_a * (link.eps_b - 2.0) + link.eps_a + 2.0 / eta_a


def equivalent_channel(link: LinkBudget, v_b, det: DetectorModel = IDEAL_DETECTOR, gain_sq=None):
    """Bundle gain, normalized transmittance, excess noise and total added noise.

    ``gain_sq`` defaults to the optimal gain; any other value goes through the
    full (unsimplified) excess-noise expression.
    """
    if gain_sq is None:
        gain_sq = optimal_gain(v_b, link.eta_b)
        eps = equivalent_excess_noise_optimal(link)
    else:
        eps = equivalent_excess_noise(link, gain_sq, v_b)
    eta = link.eta_a * gain_sq / 2.0
    chi_t = 1.0 / eta - 1.0 + eps
    chi_t_prime = chi_t + 2.0 * det.chi_hom / link.eta_a
    return EquivalentChannel(gain_sq=gain_sq, eta=eta, eps=eps, chi_t=chi_t, chi_t_prime=chi_t_prime)
