"""Root finding and maximization for the headline comparison numbers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError
from .scenario import Scenario, key_rate, run_scenario

VM_TOL = 1e-3
BETA_TOL = 1e-7
DISTANCE_TOL = 0.05
CROSSING_TOL = 1e-3
MAX_SCAN_KM = 500.0

_INVPHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class FinderResult:
    target: str
    value: float
    achieved_tolerance: float
    iterations: int
    bracket: tuple
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "target": self.target,
            "value": self.value,
            "achieved_tolerance": self.achieved_tolerance,
            "iterations": self.iterations,
            "bracket": list(self.bracket),
            "details": dict(self.details),
        }


def bisect_root(f, lo, hi, xtol):
    """Plain bisection on a verified sign change.

    Returns (root, final bracket width, iterations).
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo, 0.0, 0
    if fhi == 0:
        return hi, 0.0, 0
    if np.sign(flo) == np.sign(fhi):
        raise InfeasibleError(f"no sign change on [{lo}, {hi}]: f = {flo:.3g}, {fhi:.3g}")
    it = 0
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        it += 1
        if fmid == 0:
            return mid, 0.0, it
        if np.sign(fmid) == np.sign(flo):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi), hi - lo, it


def golden_section_max(f, lo, hi, xtol):
    """Golden-section search for the maximum of a unimodal f on [lo, hi]."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > xtol:
        it += 1
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b), b - a, it


def _scan_bracket_max(f, lo, hi, steps):
    xs = np.linspace(lo, hi, steps)
    ys = np.array([f(x) for x in xs])
    i = int(np.argmax(ys))
    if i == 0 or i == len(xs) - 1:
        raise InfeasibleError(f"no interior maximum on [{lo}, {hi}] (coarse argmax at {xs[i]:.4g})")
    return xs[i - 1], xs[i + 1]


def find_optimal_vm(base: Scenario, bracket=(0.05, 1.5), tol=VM_TOL, scan_steps=60):
    """Modulation variance maximizing K.  A coarse scan locates and verifies the peak bracket."""

    def f(v):
        return key_rate(base.with_value("v_mod", v))

    lo, hi = _scan_bracket_max(f, *bracket, scan_steps)
    v, width, it = golden_section_max(f, lo, hi, tol)
    return FinderResult("optimal_vm", v, width, it, (lo, hi), {"key_rate": f(v)})


def find_beta_threshold(base: Scenario, tol=BETA_TOL):
    """Smallest reconciliation efficiency with K >= 0 (bisection on K(beta) = 0)."""

    def f(b):
        return key_rate(base.with_value("beta", b))

    if f(1.0) <= 0:
        raise InfeasibleError("K(beta = 1) <= 0: no threshold in [0, 1]")
    beta, width, it = bisect_root(f, 0.0, 1.0, tol)
    rep = run_scenario(base.with_value("beta", 1.0))
    return FinderResult("beta_threshold", beta, width, it, (0.0, 1.0),
                        {"closed_form": rep.chi_be / rep.i_ab})


def _first_sign_change(f, xs):
    prev_x, prev = xs[0], f(xs[0])
    for x in xs[1:]:
        cur = f(x)
        if prev == 0 or np.sign(cur) != np.sign(prev):
            return prev_x, x
        prev_x, prev = x, cur
    return None


def find_crossing(base_dm: Scenario, base_gm: Scenario, variable, scan=None, tol=CROSSING_TOL):
    """Point where the two protocols' key rates coincide.

    ``variable`` is ``"distance"`` (scan 0.5-40 km) or ``"beta"`` (scan 0.5-1).
    """
    if variable == "distance":
        var = "distance"
        xs = np.linspace(0.5, 40.0, 80) if scan is None else np.asarray(scan)
    elif variable == "beta":
        var = "beta"
        xs = np.linspace(0.5, 1.0, 51) if scan is None else np.asarray(scan)
    else:
        raise InfeasibleError(f"unsupported crossing variable {variable!r}")

    def diff(x):
        return key_rate(base_dm.with_value(var, x)) - key_rate(base_gm.with_value(var, x))

    bracket = _first_sign_change(diff, xs)
    if bracket is None:
        raise InfeasibleError(f"K_DM - K_GM does not change sign over {variable} in [{xs[0]}, {xs[-1]}]")
    x, width, it = bisect_root(diff, *bracket, tol)
    return FinderResult(f"crossing_{variable}", x, width, it, tuple(bracket),
                        {"key_rate": key_rate(base_dm.with_value(var, x))})


def find_max_distance(base: Scenario, tol=DISTANCE_TOL, step_km=1.0, max_km=MAX_SCAN_KM):
    """Distance L_AC at which K falls to zero."""

    def f(d):
        return key_rate(base.with_value("distance", d))

    if f(0.0) <= 0:
        raise InfeasibleError("K(0 km) <= 0: scenario never yields a key")
    xs = np.arange(0.0, max_km + step_km, step_km)
    bracket = _first_sign_change(f, xs)
    if bracket is None:
        raise InfeasibleError(f"K stays positive up to {max_km} km")
    d, width, it = bisect_root(f, *bracket, tol)
    return FinderResult("max_distance", d, width, it, tuple(bracket))
