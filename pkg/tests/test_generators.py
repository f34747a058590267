import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geosep import generators as gen
from geosep.grid_fft import make_grid


def ramp_oracle(t):
    """exp(-1/t) / (exp(-1/t) + exp(-1/(1-t))) evaluated with math.exp."""
    if t <= 0:
        return 0.0
    if t >= 1:
        return 1.0
    a, b = math.exp(-1 / t), math.exp(-1 / (1 - t))
    return a / (a + b)


@pytest.mark.parametrize("t", [-1.0, 0.0, 0.01, 0.2, 0.5, 0.77, 0.99, 1.0, 3.0])
def test_ramp_matches_closed_form(t):
    assert gen.ramp(t) == pytest.approx(ramp_oracle(t), abs=1e-15)


@settings(max_examples=200)
@given(st.floats(-2, 3, allow_nan=False))
def test_ramp_symmetry_and_range(t):
    v = float(gen.ramp(t))
    assert 0.0 <= v <= 1.0
    assert abs(v + float(gen.ramp(1 - t)) - 1.0) <= 1e-14


def test_ramp_monotone():
    t = np.linspace(-0.5, 1.5, 20001)
    assert np.all(np.diff(gen.ramp(t)) >= 0)


def test_xi_hat_examples():
    assert gen.xi_hat(0.0) == 1.0
    assert gen.xi_hat(1 / 32) == 1.0
    assert gen.xi_hat(0.07) == 0.0
    assert gen.xi_hat(1 / 16) == 0.0
    mid = gen.xi_hat(3 / 64)
    assert 0 < mid < 1
    assert gen.xi_hat(-3 / 64) == mid


def test_omega_hat_examples():
    assert gen.omega_hat(0.0, 0.0) == 1.0
    assert gen.omega_hat(1 / 32, 1 / 32) == 1.0
    assert gen.omega_hat(1 / 8, 0.0) == 0.0


def test_window_examples():
    assert gen.window_W(0.0, 0.0) == 0.0
    assert gen.window_Wj(2.0, 0.0, 1) == 0.0
    with pytest.raises(ValueError):
        gen.window_Wj(1.0, 1.0, -1)


@pytest.mark.parametrize("j", [1, 2, 3, 4, 5])
def test_window_support_in_corona(j):
    g = make_grid(1024)
    xi1, xi2 = g.xi
    W = gen.window_Wj(xi1, xi2, j)
    inner, outer = gen.corona_bounds(j)
    sup = np.maximum(np.abs(xi1), np.abs(xi2))
    assert np.all(W[(sup <= inner) | (sup >= outer)] == 0)
    assert np.all((W >= 0) & (W <= 1))


def test_partition_of_unity_on_lattice():
    g = make_grid(512)
    xi1, xi2 = g.xi
    total = gen.omega_hat(xi1, xi2) ** 2
    for j in range(g.j_max + 1):
        total = total + gen.window_Wj(xi1, xi2, j) ** 2
    assert np.abs(total - 1)[g.covered_mask()].max() < 1e-12


def test_bump_v_examples():
    v = gen.bump_v
    assert v(1.6) == 0.0
    assert v(-1.6) == 0.0
    assert v(0.0) ** 2 + 2 * v(1.0) ** 2 == pytest.approx(1.0, abs=1e-14)
    s = 2.0 ** ((2 - 1) * 2)
    assert sum(v(s * 0.3 - l) ** 2 for l in range(-10, 11)) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=300)
@given(st.floats(-1.5, 1.5, allow_nan=False))
def test_bump_v_shift_identity(w):
    total = sum(float(gen.bump_v(w - l)) ** 2 for l in range(-2, 3))
    assert abs(total - 1.0) <= 1e-12
    assert 0 <= gen.bump_v(w) <= 1
    assert gen.bump_v(w) == pytest.approx(gen.bump_v(-w), abs=1e-15)


@pytest.mark.parametrize("alpha", [1.0, 1.5, 1.9])
def test_scaled_shift_identity(alpha):
    w = np.random.default_rng(7).uniform(-0.5, 0.5, 1000)
    for j in range(6):
        s = 2.0 ** ((2 - alpha) * j)
        L = math.ceil(2 * s) + 3
        total = sum(gen.bump_v(s * w - l) ** 2 for l in range(-L, L + 1))
        assert np.abs(total - 1).max() < 1e-12


def test_bump_v_non_finite_is_zero():
    assert gen.bump_v(np.inf) == 0.0
    assert gen.bump_v(np.nan) == 0.0


def test_slope_conventions():
    assert gen.slope(1.0, 0.0) == np.inf
    assert gen.slope(0.0, 0.0) == np.inf
    assert gen.slope(-2.0, 4.0) == -0.5


def test_cone_V_examples():
    v0 = gen.bump_v(0.0)
    assert gen.cone_V(1.0, 0.0, "h") == v0
    assert gen.cone_V(1.0, 2.0, "h") == 0.0
    assert gen.cone_V(0.0, 1.0, "v") == v0
    assert gen.cone_V(0.0, 0.0, "h") == 0.0
    with pytest.raises(ValueError):
        gen.cone_V(1.0, 1.0, "x")


def test_helper_profiles():
    assert gen.g_h(0.1) == 0 and gen.g_h(0.5) == 1 and gen.g_h(-7.0) == 1
    assert gen.g_v(0.25) == 0 and gen.g_v(0.5) == 1
    assert gen.h_h(4 / 3) == 1 and gen.h_h(1.5) == 0
    assert gen.h_v(0.75) == 1 and gen.h_v(4 / 3) == 0


def _windows(x1, x2):
    chi = {c: gen.chi(x1, x2, c) for c in ("h", "v", "0")}
    gam = {c: gen.gamma(x1, x2, c) for c in ("h", "v", "0")}
    return chi, gam


def test_duality_examples():
    chi, gam = _windows(1.0, 0.0)
    assert (chi["h"], gam["h"], chi["v"], gam["v"], gam["0"]) == (1, 1, 0, 0, 0)
    chi, gam = _windows(0.1, 0.1)
    assert chi["0"] == 1
    assert sum(chi[c] * gam[c] for c in chi) == pytest.approx(1.0, abs=1e-15)
    chi, gam = _windows(0.0, 1.0)
    assert chi["v"] * gam["v"] == 1
    assert chi["h"] == gam["h"] == 0


def test_duality_at_every_lattice_point():
    g = make_grid(256)
    chi, gam = _windows(*g.xi)
    total = sum(chi[c] * gam[c] for c in chi)
    assert np.abs(total - 1).max() < 1e-12


def test_window_supports_on_lattice():
    g = make_grid(256)
    x1, x2 = g.xi
    chi, gam = _windows(x1, x2)
    a1, a2 = np.abs(x1), np.abs(x2)
    with np.errstate(divide="ignore", invalid="ignore"):
        sl_h = np.where(a1 > 0, a2 / np.where(a1 > 0, a1, 1), np.inf)
        sl_v = np.where(a2 > 0, a1 / np.where(a2 > 0, a2, 1), np.inf)
    # primal: horizontal cone |xi2/xi1| <= 3/2 and |xi1| >= 1/8
    assert np.all(chi["h"][(sl_h > 1.5) | (a1 < 1 / 8)] == 0)
    assert np.all(chi["v"][(sl_v > 1.5) | (a2 < 1 / 8)] == 0)
    # dual windows live inside the primal ones
    assert np.all(gam["h"][chi["h"] == 0] == 0)
    assert np.all(gam["v"][chi["v"] == 0] == 0)
    assert np.all(chi["0"][np.hypot(x1, x2) >= 1] == 0)


def test_smoothness_spot_check():
    # second differences of the ramp shrink like h**2 away from the endpoints
    t = np.linspace(0.2, 0.8, 7)
    d = [np.abs(gen.ramp(t + h) - 2 * gen.ramp(t) + gen.ramp(t - h)).max() for h in (1e-2, 5e-3)]
    assert d[1] / d[0] == pytest.approx(0.25, rel=0.05)
