import numpy as np
import pytest

from geosep import generators as gen
from geosep.bands import aggregate
from geosep.grid_fft import forward_ft, inverse_ft, make_grid, norm
from geosep.shearlet_frame import (ShearletFrame, ShearletIndex, analyze_shearlet, atom_inner_product,
                                   atom_position, duality_defect, frame_bounds_estimate, lattice_shape,
                                   shear_range, shearlet_density, shearlet_symbol, spectral_norm_ratio,
                                   synthesize_shearlet)
from geosep.wavelet_frame import WaveletIndex


def bandlimited(rng, grid):
    spec = forward_ft(rng.standard_normal((grid.N, grid.N)))
    spec[~grid.covered_mask()] = 0
    return inverse_ft(spec, real=True)


@pytest.mark.parametrize("j, alpha, want", [(0, 1.0, 2), (0, 1.7, 2), (1, 1.0, 4), (3, 1.5, 6)])
def test_shear_range_examples(j, alpha, want):
    assert shear_range(j, alpha) == want


@pytest.mark.parametrize("alpha", [0.9, 2.0, -1.0])
def test_alpha_out_of_range(alpha):
    with pytest.raises(ValueError):
        ShearletFrame(16, alpha)


def test_symbol_support():
    g = make_grid(64)
    x1, x2 = g.xi
    s = shearlet_symbol(2, 0, "v", 1.0, "primal", g)
    assert np.any(s != 0)
    assert np.all(s[np.abs(x2) > 4] == 0)
    h = shearlet_symbol(2, 0, "h", 1.0, "primal", g)
    assert np.all(h[x1 == 0] == 0)


def test_symbol_rejects_bad_index():
    with pytest.raises(ValueError):
        shearlet_symbol(2, 9, "v", 1.0, "primal", 64)
    with pytest.raises(ValueError):
        shearlet_symbol(2, 0, "x", 1.0, "primal", 64)


def test_lattice_and_density():
    assert lattice_shape(3, 1.0, "v") == (8, 64)
    assert lattice_shape(3, 1.0, "h") == (64, 8)
    assert shearlet_density(2, 1.5) == 16 * 8
    # shear relabels: (k1, k2) = (1, l) maps back onto the first coordinate line
    assert atom_position(2, 1, (1, 1), "v", 1.0) == (0.25, 0.0)


@pytest.mark.parametrize("alpha", [1.0, 1.5, 1.9])
def test_duality_identity(alpha):
    assert duality_defect(alpha, make_grid(256)) < 1e-10


@pytest.mark.parametrize("alpha", [1.0, 1.5])
def test_plain_system_parseval_per_cone(alpha):
    g = make_grid(256)
    F = ShearletFrame(g, alpha, "plain")
    x1, x2 = g.xi
    cov = g.covered_mask() & ((x1 != 0) | (x2 != 0))
    for cone, inside in (("h", np.abs(x2) <= np.abs(x1)), ("v", np.abs(x1) <= np.abs(x2))):
        agg = aggregate([b for b in F.bands.values() if b.key[3] == cone], g.N)
        assert np.abs(agg - 1)[cov & inside].max() < 1e-10


def test_zero_image():
    c = analyze_shearlet(np.zeros((32, 32)), 1.0)
    assert np.all(synthesize_shearlet(c, 1.0) == 0)


@pytest.mark.parametrize("alpha", [1.0, 1.5])
def test_round_trip_both_ways(alpha):
    g = make_grid(128)
    rng = np.random.default_rng(0)
    P = ShearletFrame(g, alpha, "primal")
    D = ShearletFrame(g, alpha, "dual")
    for _ in range(3):
        f = bandlimited(rng, g)
        for a, s in ((P, D), (D, P)):
            back = s.synthesize(a.analyze(f))
            assert np.linalg.norm(back - f) / np.linalg.norm(f) < 1e-8


def test_frame_bounds():
    g = make_grid(128)
    x1, x2 = g.xi
    lower = 1 / (3 * max(np.abs(gen.gamma(x1, x2, c)).max() for c in gen.CONES + ("0",)) ** 2)
    upper = sum(np.abs(gen.chi(x1, x2, c)).max() ** 2 for c in gen.CONES + ("0",))
    A, B = frame_bounds_estimate(1.0, "primal", g)
    assert lower - 1e-9 <= A <= B <= upper + 1e-9
    P = ShearletFrame(g, 1.0, "primal")
    rng = np.random.default_rng(1)
    for _ in range(5):
        r = spectral_norm_ratio(bandlimited(rng, g), P)
        assert A - 1e-9 <= r <= B + 1e-9


def test_coefficient_energy_uses_density():
    g = make_grid(64)
    f = bandlimited(np.random.default_rng(2), g)
    c = ShearletFrame(g, 1.0, "primal").analyze(f)
    key = next(iter(c.spectra))
    field = c.field(key)
    assert np.sum(np.abs(field) ** 2) / 64**2 * c.bands[key].density == pytest.approx(
        c.bands[key].density * np.sum(np.abs(c.spectra[key]) ** 2), rel=1e-10)
    direct = sum(np.sum(np.abs(c.decimated(k)) ** 2) for k in c.spectra if c.bands[k].j <= 2)
    weighted = sum(c.bands[k].density * np.sum(np.abs(c.spectra[k]) ** 2)
                   for k in c.spectra if c.bands[k].j <= 2)
    assert direct == pytest.approx(weighted, rel=1e-10)


def test_atom_inner_products():
    g = make_grid(256)
    assert atom_inner_product(WaveletIndex(2, (0, 0)), ShearletIndex(4, 0, (0, 0), "v"),
                              1.0, "primal", g) == 0
    scaled = [abs(atom_inner_product(WaveletIndex(j, (0, 0)), ShearletIndex(j, 0, (0, 0), "v"),
                                     1.0, "primal", g)) * 2 ** (j / 2) for j in (2, 3, 4)]
    assert max(scaled) / min(scaled) < 4
    F = ShearletFrame(g, 1.0, "primal", scales=[3])
    a = F.atom_spectrum(ShearletIndex(3, 1, (2, 5), "h"))
    assert np.vdot(a, a).real == pytest.approx(norm(a) ** 2) and norm(a) > 0


@pytest.mark.parametrize("alpha, l", [(1.0, 0), (1.0, 1), (1.5, 0), (1.5, 1)])
def test_spatial_decay_with_shared_constant(alpha, l):
    # |phi(x)| <= C 2**((2+alpha)j/2) <a x1>**-4 <4**j x2 + l a x1>**-4 near the atom
    g = make_grid(512)
    x1, x2 = g.positions()
    x1 = np.where(x1 >= 0.5, x1 - 1, x1)
    x2 = np.where(x2 >= 0.5, x2 - 1, x2)
    consts = []
    for j in (2, 3):
        F = ShearletFrame(g, alpha, "primal", scales=[j])
        phi = np.abs(inverse_ft(F.atom_spectrum(ShearletIndex(j, l, (0, 0), "v")), real=False))
        a = 2.0 ** (alpha * j)
        env = (2 ** ((2 + alpha) * j / 2) * (1 + np.abs(a * x1)) ** -4
               * (1 + np.abs(4.0**j * x2 + l * a * x1)) ** -4)
        near = env >= 1e-4 * env.max()
        consts.append((phi / env)[near].max())
    assert max(consts) / min(consts) < 1.25


def test_dump_files(tmp_path):
    g = make_grid(16)
    c = ShearletFrame(g, 1.0).analyze(np.random.default_rng(3).standard_normal((16, 16)))
    c.dump(tmp_path)
    lines = (tmp_path / "shearlet_manifest.txt").read_text().splitlines()
    assert len(lines) == 1 + len(c.spectra)
    names = ShearletFrame(g, 1.0, "dual").dump_symbols(tmp_path, keys={(1, 0, "v")})
    assert names == ["symbol_dual_j1_l0_v.gsep"]
