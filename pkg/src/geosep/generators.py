"""Scalar windows, bumps and cone functions, vectorised over numpy arrays.

Every smooth profile is built from the single ramp ``ramp`` mapped affinely
onto its transition interval, so plateau and support values are exact.
Frequencies are plain lattice coordinates (no 2*pi factors).
"""

import numpy as np
from scipy.special import expit

CONES = ("h", "v")


def ramp(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, ramp(t) + ramp(1-t) = 1."""
    t = np.asarray(t, dtype=float)
    inner = (t > 0) & (t < 1)
    tc = np.where(inner, t, 0.5)
    # exp(-1/t) / (exp(-1/t) + exp(-1/(1-t))) written as a logistic
    with np.errstate(over="ignore", divide="ignore"):
        val = expit(1.0 / (1.0 - tc) - 1.0 / tc)
    return np.where(inner, val, np.where(t >= 1, 1.0, 0.0))


def _plateau(t, inner, outer):
    """Even bump equal to 1 on |t| <= inner and 0 on |t| >= outer."""
    return ramp((outer - np.abs(t)) / (outer - inner))


def _step_up(t, start, end):
    """Function of |t|: 0 for |t| <= start, 1 for |t| >= end."""
    return ramp((np.abs(t) - start) / (end - start))


def xi_hat(t):
    """One-dimensional low-pass profile: 1 on [-1/32, 1/32], 0 off [-1/16, 1/16]."""
    return _plateau(t, 1 / 32, 1 / 16)


def omega_hat(xi1, xi2):
    return xi_hat(xi1) * xi_hat(xi2)


def window_W(xi1, xi2):
    """Corona window sqrt(omega_hat(xi/4)**2 - omega_hat(xi)**2), radicand clamped at 0."""
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    rad = omega_hat(xi1 / 4, xi2 / 4) ** 2 - omega_hat(xi1, xi2) ** 2
    return np.sqrt(np.maximum(rad, 0.0))


def window_Wj(xi1, xi2, j):
    if j < 0:
        raise ValueError("scale must be nonnegative")
    s = 4.0**-j
    return window_W(np.asarray(xi1) * s, np.asarray(xi2) * s)


def corona_bounds(j):
    """(inner, outer) sup-norm radii of the corona carrying scale j."""
    return 2.0 ** (2 * j - 5), 2.0 ** (2 * j - 2)


def bump_u(w):
    """Unnormalised bump: 1 on [-1/2, 1/2], supported in [-3/2, 3/2]."""
    return _plateau(w, 0.5, 1.5)


def bump_v(w):
    """u(w) / sqrt(sum_l u(w-l)**2); the integer shifts of v**2 sum to one."""
    w = np.asarray(w, dtype=float)
    finite = np.isfinite(w)
    wf = np.where(finite, w, 0.0)
    base = np.floor(wf)
    frac = wf - base
    denom = sum(bump_u(frac - l) ** 2 for l in range(-2, 3))
    return np.where(finite, bump_u(wf) / np.sqrt(denom), 0.0)


def slope(num, den):
    """num/den with the conventions x/0 = inf (x != 0) and 0/0 = inf."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    safe = den != 0
    out = np.full(np.broadcast(num, den).shape, np.inf)
    np.divide(num, den, out=out, where=safe)
    return out


def cone_V(xi1, xi2, cone):
    """Angular bump v(xi2/xi1) for the horizontal cone, v(xi1/xi2) for the vertical one."""
    if cone == "h":
        return bump_v(slope(xi2, xi1))
    if cone == "v":
        return bump_v(slope(xi1, xi2))
    raise ValueError(f"unknown cone {cone!r}")


def g_h(t):
    return _step_up(t, 1 / 8, 1 / 2)


def h_h(t):
    return _plateau(t, 4 / 3, 3 / 2)


def g_v(t):
    return _step_up(t, 1 / 4, 1 / 2)


def h_v(t):
    return _plateau(t, 3 / 4, 4 / 3)


def chi_0(xi1, xi2):
    """Radial low-frequency window: 1 on |xi| <= 2/3, 0 on |xi| >= 1."""
    return _plateau(np.hypot(xi1, xi2), 2 / 3, 1.0)


def chi(xi1, xi2, cone):
    """Primal cone windows; functions of slope vanish on infinite slopes."""
    if cone == "h":
        return g_h(xi1) * h_h(slope(xi2, xi1))
    if cone == "v":
        return g_h(xi2) * h_h(slope(xi1, xi2))
    if cone == "0":
        return chi_0(xi1, xi2)
    raise ValueError(f"unknown cone {cone!r}")


def gamma(xi1, xi2, cone):
    """Dual cone windows paired with ``chi`` so that sum chi*gamma = 1."""
    if cone == "h":
        return g_v(xi1) * h_v(slope(xi2, xi1))
    if cone == "v":
        return g_v(xi2) * (1.0 - h_v(slope(xi2, xi1)))
    if cone == "0":
        return (1.0 - chi(xi1, xi2, "h") * gamma(xi1, xi2, "h")
                - chi(xi1, xi2, "v") * gamma(xi1, xi2, "v"))
    raise ValueError(f"unknown cone {cone!r}")
