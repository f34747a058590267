"""Bandlimited alpha-shearlet frame and its synthesis pseudo-dual.

A band (j, l, cone) has multiplier ``W_j(xi) v(s_j * slope - l) window(xi)``
with ``s_j = 2**((2 - alpha) j)`` and ``slope = xi2/xi1`` (horizontal cone)
or ``xi1/xi2`` (vertical cone).  The window is chi for the primal system,
gamma for the dual one and 1 for the plain cone system.  Atoms sit on the
torus lattice {k1/a} x {n/4**j} (vertical cone; transposed for horizontal)
with ``a = round(2**(alpha j))``; the shear only relabels lattice points.
"""

from collections import namedtuple
from dataclasses import dataclass
import math

import numpy as np

from . import generators as gen
from .bands import Band, aggregate
from .grid_fft import FreqGrid, forward_ft, inverse_ft, norm, sample_on_lattice, write_gsep
from .wavelet_frame import wavelet_band

ShearletIndex = namedtuple("ShearletIndex", "j l k cone")
VARIANTS = ("primal", "dual", "plain")


def check_alpha(alpha):
    if not 1.0 <= alpha < 2.0:
        raise ValueError(f"alpha must lie in [1, 2), got {alpha}")


def shear_range(j, alpha):
    """Largest |l| at scale j: ceil(2 * 2**((2 - alpha) j))."""
    return math.ceil(2 * 2.0 ** ((2 - alpha) * j) - 1e-12)


def shear_factor(j, alpha):
    return 2.0 ** ((2 - alpha) * j)


def lattice_width(j, alpha):
    """Number of translates across the cone direction, round(2**(alpha j))."""
    return max(1, int(round(2.0 ** (alpha * j))))


def shearlet_density(j, alpha):
    return float(4**j * lattice_width(j, alpha))


def lattice_shape(j, alpha, cone):
    a = lattice_width(j, alpha)
    return (a, 4**j) if cone == "v" else (4**j, a)


def atom_position(j, l, k, cone, alpha):
    """Translation t with atom spectrum m(xi) exp(2 pi i xi.t); atom centred at -t."""
    a = lattice_width(j, alpha)
    k1, k2 = k
    if cone == "v":
        return (k1 / a, (k2 - l * k1) / 4**j)
    return ((k1 - l * k2) / 4**j, k2 / a)


def _window(xi1, xi2, cone, variant):
    if variant == "primal":
        return gen.chi(xi1, xi2, cone)
    if variant == "dual":
        return gen.gamma(xi1, xi2, cone)
    if variant == "plain":
        return np.ones_like(xi1)
    raise ValueError(f"unknown variant {variant!r}")


class _ScaleCone:
    """Support points of W_j inside one cone, sorted by slope."""

    def __init__(self, grid, j, cone, alpha, wband=None):
        wband = wband if wband is not None else wavelet_band(grid, j)
        xi1, xi2 = (a.reshape(-1)[wband.idx] for a in grid.xi)
        num, den = (xi2, xi1) if cone == "h" else (xi1, xi2)
        keep = den != 0
        ratio = num[keep] / den[keep]
        order = np.argsort(ratio, kind="stable")
        self.idx = wband.idx[keep][order]
        self.W = wband.vals[keep][order]
        self.ratio = ratio[order]
        self.xi1 = xi1[keep][order]
        self.xi2 = xi2[keep][order]
        self.s = shear_factor(j, alpha)
        self._windows = {}

    def window(self, cone, variant):
        if variant not in self._windows:
            self._windows[variant] = _window(self.xi1, self.xi2, cone, variant)
        return self._windows[variant]

    def select(self, l):
        lo = np.searchsorted(self.ratio, (l - 1.5) / self.s, side="right")
        hi = np.searchsorted(self.ratio, (l + 1.5) / self.s, side="left")
        return slice(lo, hi)


class ShearletFrame:
    """All bands (j, l, cone) for the requested scales plus the low band.

    Parameters
    ----------
    grid : FreqGrid or int
    alpha : float
        Anisotropy in [1, 2).
    variant : {"primal", "dual", "plain"}
    scales : iterable of int, optional
        Defaults to 0..j_max.  Scales above j_max are allowed; their symbols
        are truncated to the lattice.
    """

    def __init__(self, grid, alpha, variant="primal", scales=None):
        check_alpha(alpha)
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        if not isinstance(grid, FreqGrid):
            grid = FreqGrid(grid)
        self.grid = grid
        self.alpha = float(alpha)
        self.variant = variant
        self.scales = list(range(grid.j_max + 1) if scales is None else scales)
        self.bands = {}
        for j in self.scales:
            wband = wavelet_band(grid, j)
            for cone in gen.CONES:
                for band in scale_bands(grid, j, cone, alpha, variant, wband):
                    self.bands[band.key] = band
        self.low = low_band(grid, variant)

    def band(self, j, l, cone):
        key = ("s", j, l, cone)
        if key not in self.bands:
            raise ValueError(f"index {key[1:]} not in the shearlet system")
        return self.bands[key]

    def bands_at(self, j):
        return [b for b in self.bands.values() if b.j == j]

    def aggregate(self, include_low=True):
        """Sum of squared multipliers over all bands."""
        acc = aggregate(self.bands.values(), self.grid.N)
        if include_low:
            acc += self.low.dense() ** 2
        return acc

    def atom_spectrum(self, idx):
        band = self.band(idx.j, idx.l, idx.cone)
        t = atom_position(idx.j, idx.l, idx.k, idx.cone, self.alpha)
        xi1, xi2 = self.grid.xi
        return band.atom_spectrum() * np.exp(2j * np.pi * (xi1 * t[0] + xi2 * t[1]))

    def analyze(self, img):
        spec = forward_ft(img)
        coeffs = {key: spec.reshape(-1)[b.idx] * b.vals / np.sqrt(b.density)
                  for key, b in self.bands.items()}
        low = spec.reshape(-1)[self.low.idx] * self.low.vals
        return ShearletCoeffs(self.grid.N, self.alpha, self.variant, dict(self.bands), coeffs,
                              self.low, low)

    def synthesize(self, coeffs):
        """Synthesis with this frame's atoms from any coefficient set on the same bands."""
        N = self.grid.N
        if coeffs.N != N:
            raise ValueError("coefficients belong to a different grid")
        acc = np.zeros(N * N, dtype=complex)
        # primal and dual bands of one key can have different supports
        tmp = np.zeros(N * N, dtype=complex)
        for key, c in coeffs.spectra.items():
            b, src = self.bands[key], coeffs.bands[key]
            if src.idx is b.idx or np.array_equal(src.idx, b.idx):
                acc[b.idx] += c * b.vals * np.sqrt(b.density)
                continue
            tmp[src.idx] = c
            acc[b.idx] += tmp[b.idx] * b.vals * np.sqrt(b.density)
            tmp[src.idx] = 0
        tmp[coeffs.low.idx] = coeffs.low_spectrum
        acc[self.low.idx] += tmp[self.low.idx] * self.low.vals
        return inverse_ft(acc.reshape(N, N))

    def dump_symbols(self, directory, keys=None):
        """One real GSEP1 file per band, named by (j, l, cone)."""
        names = []
        for key, b in self.bands.items():
            if keys is not None and key[1:] not in keys:
                continue
            _, j, l, cone = key
            name = f"symbol_{self.variant}_j{j}_l{l}_{cone}.gsep"
            write_gsep(f"{directory}/{name}", b.dense())
            names.append(name)
        return names


def scale_bands(grid, j, cone, alpha, variant="primal", wband=None):
    """Bands of one scale and cone, ordered by shear."""
    sc = _ScaleCone(grid, j, cone, alpha, wband)
    win = sc.window(cone, variant)
    L = shear_range(j, alpha)
    d = shearlet_density(j, alpha)
    lat = lattice_shape(j, alpha, cone)
    out = []
    for l in range(-L, L + 1):
        sel = sc.select(l)
        vals = sc.W[sel] * gen.bump_v(sc.s * sc.ratio[sel] - l) * win[sel]
        nz = vals != 0
        out.append(Band(("s", j, l, cone), j, d, lat, grid.N, sc.idx[sel][nz], vals[nz]))
    return out


def low_band(grid, variant):
    """Low band: sharp projector on |xi|_inf <= 1 times the variant's low window."""
    xi1, xi2 = (a.reshape(-1) for a in grid.xi)
    idx = np.flatnonzero(np.maximum(np.abs(xi1), np.abs(xi2)) <= 1)
    x1, x2 = xi1[idx], xi2[idx]
    if variant == "primal":
        vals = gen.chi(x1, x2, "0")
    elif variant == "dual":
        vals = gen.gamma(x1, x2, "0")
    else:
        vals = np.ones(idx.size)
    nz = vals != 0
    return Band(("low",), 0, 1.0, (1, 1), grid.N, idx[nz], vals[nz])


def shearlet_symbol(j, l, cone, alpha, variant, grid):
    """Dense band multiplier of (j, l, cone) (modulation at k = 0 factored out)."""
    check_alpha(alpha)
    if cone not in gen.CONES:
        raise ValueError(f"unknown cone {cone!r}")
    L = shear_range(j, alpha)
    if j < 0 or abs(l) > L:
        raise ValueError(f"index (j={j}, l={l}) outside the shearlet system (|l| <= {L})")
    if not isinstance(grid, FreqGrid):
        grid = FreqGrid(grid)
    for b in scale_bands(grid, j, cone, alpha, variant):
        if b.key[2] == l:
            return b.dense()


@dataclass
class ShearletCoeffs:
    """Band spectra of the undecimated coefficient fields.

    ``spectra[key]`` holds the Fourier coefficients of the field of band
    ``key`` on the band support; fields and lattice samples are produced on
    demand so that large systems stay within memory.
    """

    N: int
    alpha: float
    variant: str
    bands: dict
    spectra: dict
    low: Band
    low_spectrum: np.ndarray

    def _full(self, key):
        b = self.bands[key]
        out = np.zeros(self.N * self.N, dtype=complex)
        out[b.idx] = self.spectra[key]
        return out.reshape(self.N, self.N)

    def field(self, key):
        return np.fft.ifft2(self._full(key)) * self.N**2

    def decimated(self, key):
        return sample_on_lattice(self._full(key), *self.bands[key].lattice)

    def l2_squared(self, include_low=True):
        total = sum(self.bands[k].density * np.sum(np.abs(c) ** 2) for k, c in self.spectra.items())
        if include_low:
            total += np.sum(np.abs(self.low_spectrum) ** 2)
        return float(total)

    def l1(self):
        return float(sum(self.bands[k].weight * np.sum(np.abs(self.field(k)))
                         for k in self.spectra))

    def dump(self, directory):
        lines = ["# j l cone weight file"]
        for key in self.spectra:
            _, j, l, cone = key
            name = f"shearlet_j{j}_l{l}_{cone}.gsep"
            write_gsep(f"{directory}/{name}", self.field(key))
            lines.append(f"{j} {l} {cone} {self.bands[key].weight!r} {name}")
        with open(f"{directory}/shearlet_manifest.txt", "w") as fh:
            fh.write("\n".join(lines) + "\n")


def analyze_shearlet(img, alpha, variant="primal"):
    grid = FreqGrid(np.asarray(img).shape[0])
    return ShearletFrame(grid, alpha, variant).analyze(img)


def synthesize_shearlet(coeffs, alpha, variant="dual"):
    return ShearletFrame(FreqGrid(coeffs.N), alpha, variant).synthesize(coeffs)


def frame_bounds_estimate(alpha, variant, grid):
    """(min, max) of the aggregate squared multiplier over the covered band, DC excluded."""
    if not isinstance(grid, FreqGrid):
        grid = FreqGrid(grid)
    agg = ShearletFrame(grid, alpha, variant).aggregate()
    mask = grid.covered_mask()
    mask.reshape(-1)[0] = False
    vals = agg[mask]
    return float(vals.min()), float(vals.max())


def duality_defect(alpha, grid):
    """max |sum_b primal_b * dual_b - 1| over the covered lattice."""
    if not isinstance(grid, FreqGrid):
        grid = FreqGrid(grid)
    P = ShearletFrame(grid, alpha, "primal")
    D = ShearletFrame(grid, alpha, "dual")
    acc = np.zeros(grid.N * grid.N)
    for key, b in P.bands.items():
        d = D.bands[key]
        prod = np.zeros(grid.N * grid.N)
        prod[b.idx] = b.vals
        acc[d.idx] += prod[d.idx] * d.vals
    low = np.zeros(grid.N * grid.N)
    low[P.low.idx] = P.low.vals
    acc[D.low.idx] += low[D.low.idx] * D.low.vals
    return float(np.abs(acc.reshape(grid.N, grid.N) - 1)[grid.covered_mask()].max())


def atom_inner_product(w, s, alpha, variant, grid):
    """<psi_w, phi_s> as an exact lattice sum; ``w`` a WaveletIndex, ``s`` a ShearletIndex."""
    from .wavelet_frame import WaveletFrame

    if not isinstance(grid, FreqGrid):
        grid = FreqGrid(grid)
    psi = WaveletFrame(grid).atom_spectrum(w)
    frame = ShearletFrame(grid, alpha, variant, scales=[s.j])
    return complex(np.vdot(frame.atom_spectrum(s), psi))


def spectral_norm_ratio(f, frame):
    """Analysis energy over signal energy, used for frame-bound checks."""
    return frame.analyze(f).l2_squared() / norm(forward_ft(f)) ** 2
