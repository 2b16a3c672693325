"""Scenarios, single-point evaluation and grid sweeps."""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import DetectorModel, LinkBudget
from .errors import CVMDIError, DomainError
from .keyrate import KeyRateReport, secret_key_rate
from .modulation import Kind, ModulationScheme

# the modulation variances used for the distance and efficiency comparisons
DM_VMOD = 0.4
GM_VMOD = 40.0

SWEEP_VARIABLES = ("v_mod", "distance", "beta", "excess_noise")


@dataclass(frozen=True)
class Scenario:
    """One operating point.  Defaults: extreme asymmetric relay (L_BC = 0),
    0.2 dB/km, ideal detectors, four-state V_M = 0.4 at 20 km, eps = 0.002, beta = 0.9."""

    scheme: ModulationScheme = ModulationScheme(Kind.FOUR_STATE, DM_VMOD)
    link: LinkBudget = LinkBudget(l_ac=20.0, l_bc=0.0, eps_a=0.002, eps_b=0.002)
    detector: DetectorModel = DetectorModel()
    beta: float = 0.9
    label: str = ""
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        beta = float(self.beta)
        if not 0 <= beta <= 1:
            raise DomainError(f"beta must lie in [0, 1], got {beta}")
        object.__setattr__(self, "beta", beta)

    def with_value(self, variable, value):
        """Copy with one sweep variable replaced."""
        value = float(value)
        if variable == "v_mod":
            return dataclasses.replace(self, scheme=ModulationScheme(self.scheme.kind, value))
        if variable == "distance":
            return dataclasses.replace(self, link=dataclasses.replace(self.link, l_ac=value))
        if variable == "beta":
            return dataclasses.replace(self, beta=value)
        if variable == "excess_noise":
            return dataclasses.replace(self, link=dataclasses.replace(self.link, eps_a=value, eps_b=value))
        raise DomainError(f"unknown sweep variable {variable!r}; expected one of {SWEEP_VARIABLES}")

    def to_dict(self):
        return {
            "scheme": {"kind": self.scheme.kind.value, "v_mod": self.scheme.v_mod},
            "link": dataclasses.asdict(self.link),
            "detector": dataclasses.asdict(self.detector),
            "beta": self.beta,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, data):
        base = cls()
        scheme = base.scheme
        if "scheme" in data:
            s = data["scheme"]
            scheme = ModulationScheme(s.get("kind", scheme.kind), s.get("v_mod", scheme.v_mod))
        link = dataclasses.replace(base.link, **data.get("link", {}))
        detector = dataclasses.replace(base.detector, **data.get("detector", {}))
        return cls(scheme=scheme, link=link, detector=detector,
                   beta=data.get("beta", base.beta), label=data.get("label", ""))


def dm_scenario(distance=20.0, eps=0.002, beta=0.9, v_mod=DM_VMOD, **kw):
    return Scenario(ModulationScheme(Kind.FOUR_STATE, v_mod),
                    LinkBudget(l_ac=distance, eps_a=eps, eps_b=eps, **kw), beta=beta, label="DM")


def gm_scenario(distance=20.0, eps=0.002, beta=0.9, v_mod=GM_VMOD, **kw):
    return Scenario(ModulationScheme(Kind.GAUSSIAN, v_mod),
                    LinkBudget(l_ac=distance, eps_a=eps, eps_b=eps, **kw), beta=beta, label="GM")


def run_scenario(s: Scenario) -> KeyRateReport:
    try:
        report = secret_key_rate(s.scheme, s.link, s.detector, s.beta)
    except CVMDIError as exc:
        exc.args = (f"{exc.args[0] if exc.args else exc} [scenario: {s.to_dict()}]",) + exc.args[1:]
        raise
    report.metadata.update(scenario=s.to_dict(), **s.metadata)
    return report


def key_rate(s: Scenario):
    return run_scenario(s).key_rate


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    lo: float
    hi: float
    steps: int
    log: bool = False
    base: Scenario = field(default_factory=Scenario)

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise DomainError(f"unknown sweep variable {self.variable!r}")
        if not self.lo < self.hi:
            raise DomainError(f"need lo < hi, got {self.lo}, {self.hi}")
        if int(self.steps) < 2:
            raise DomainError("need steps >= 2")
        if self.log and self.lo <= 0:
            raise DomainError("log sweep needs lo > 0")

    def grid(self):
        if self.log:
            return np.geomspace(self.lo, self.hi, int(self.steps))
        return np.linspace(self.lo, self.hi, int(self.steps))


SWEEP_COLUMNS = ("label", "variable", "value", "key_rate", "i_ab", "chi_be", "plob", "error")


def _row(base: Scenario, variable, value):
    row = {"label": base.label, "variable": variable, "value": float(value)}
    try:
        rep = run_scenario(base.with_value(variable, value))
    except CVMDIError as exc:
        row.update(key_rate=math.nan, i_ab=math.nan, chi_be=math.nan, plob=math.nan,
                   error=f"{type(exc).__name__}: {exc}")
        return row
    row.update(key_rate=rep.key_rate, i_ab=rep.i_ab, chi_be=rep.chi_be, plob=rep.plob, error="")
    return row


def sweep(spec: SweepSpec, workers=1):
    """One row per grid point, in grid order.  Failed points carry an ``error`` string."""
    grid = spec.grid()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda v: _row(spec.base, spec.variable, v), grid))
    return [_row(spec.base, spec.variable, v) for v in grid]
