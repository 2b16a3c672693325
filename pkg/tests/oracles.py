"""Independent reference computations used to freeze expected values.

None of these call into the closed-form code paths they check.
"""

import math

import mpmath
import numpy as np

mpmath.mp.dps = 50


def mp_lambda(alpha_sq):
    """Schmidt weights at 50-digit precision, straight from cosh/cos and sinh/sin."""
    a = mpmath.mpf(alpha_sq)
    pref = mpmath.exp(-a) / 2
    return [
        pref * (mpmath.cosh(a) + mpmath.cos(a)),
        pref * (mpmath.sinh(a) + mpmath.sin(a)),
        pref * (mpmath.cosh(a) - mpmath.cos(a)),
        pref * (mpmath.sinh(a) - mpmath.sin(a)),
    ]


def mp_z4(alpha_sq):
    lam = mp_lambda(alpha_sq)
    a = mpmath.mpf(alpha_sq)
    return 2 * a * sum(lam[k - 1] ** mpmath.mpf(1.5) / mpmath.sqrt(lam[k]) for k in range(4))


def _omega(n):
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_spectrum(cm):
    ev = np.sort(np.abs(np.linalg.eigvals(1j * _omega(len(cm) // 2) @ cm)))
    return ev[::2]


def g_entropy(nu):
    x = (nu - 1) / 2
    if x <= 0:
        return 0.0
    return (x + 1) * math.log2(x + 1) - x * math.log2(x)


def tmss_cm(x, y, z):
    return np.array([[x, 0, z, 0], [0, x, 0, -z], [z, 0, y, 0], [0, -z, 0, y]], dtype=float)


def propagate_protocol(v_mod, z_alice, l_ac, l_bc, eps_a, eps_b, loss=0.2, chi_hom=0.0, gain_sq=None):
    """Covariance-level propagation of the full relay protocol.

    Quadrature vector (xA1 pA1 xA2 pA2 xB1 pB1 xB2 pB2); Bob's source is the
    Gaussian two-mode squeezed vacuum.  Returns the 4x4 CM of (A1, B'1).
    """
    v = 1 + v_mod
    eta_a = 10 ** (-loss * l_ac / 10)
    eta_b = 10 ** (-loss * l_bc / 10)
    if gain_sq is None:
        gain_sq = 2 * (v - 1) / (eta_b * (v + 1))
    g = math.sqrt(gain_sq)
    cov = np.zeros((8, 8))
    cov[:4, :4] = tmss_cm(v, v, z_alice)
    cov[4:, 4:] = tmss_cm(v, v, math.sqrt(v * v - 1))

    # lossy links on A2 and B2
    t = np.eye(8)
    noise = np.zeros((8, 8))
    for idx, eta, eps in ((slice(2, 4), eta_a, eps_a), (slice(6, 8), eta_b, eps_b)):
        t[idx, idx] = math.sqrt(eta) * np.eye(2)
        noise[idx, idx] = (1 - eta + eta * eps) * np.eye(2)
    cov = t @ cov @ t.T + noise

    # output vector (xA1, pA1, xB1', pB1') with X_C = (xA' - xB')/sqrt2, P_D = (pA' + pB')/sqrt2
    s = 1 / math.sqrt(2)
    m = np.zeros((4, 8))
    m[0, 0] = 1
    m[1, 1] = 1
    m[2, 4] = 1
    m[2, 2], m[2, 6] = g * s, -g * s
    m[3, 5] = 1
    m[3, 3], m[3, 7] = g * s, g * s
    out = m @ cov @ m.T
    out[2, 2] += gain_sq * chi_hom
    out[3, 3] += gain_sq * chi_hom
    return out


def brute_force_rates(cm4, beta):
    """(I_AB, chi_BE, K) from a 4x4 (A, B) covariance using matrix formulas only."""
    ga, gb, sg = cm4[:2, :2], cm4[2:, 2:], cm4[:2, 2:]
    eye = np.eye(2)
    cond = ga - sg @ np.linalg.inv(gb + eye) @ sg.T
    i_ab = 0.5 * math.log2(np.linalg.det(ga + eye) / np.linalg.det(cond + eye))
    nus = symplectic_spectrum(cm4)
    nu3 = math.sqrt(np.linalg.det(cond))
    chi = sum(g_entropy(n) for n in nus) - g_entropy(nu3)
    return i_ab, chi, beta * i_ab - chi


def decoy_pmax_closed_form(alpha_sq, nbar, cutoff):
    """Largest p with tau(nbar) - p rho_4 >= 0 on the truncated space.

    tau^{-1/2} rho_4 tau^{-1/2} is block diagonal over photon number mod 4
    with rank-one blocks, so its top eigenvalue is a sum over one residue
    class of (1 + nbar) e^{-alpha^2} y^m / m!, y = alpha^2 (1 + nbar) / nbar.
    """
    a = mpmath.mpf(alpha_sq)
    nb = mpmath.mpf(nbar)
    y = a * (1 + nb) / nb
    sums = [mpmath.mpf(0)] * 4
    for m in range(cutoff + 1):
        sums[m % 4] += y**m / mpmath.factorial(m)
    top = (1 + nb) * mpmath.exp(-a) * max(sums)
    return float(min(1, 1 / top))
