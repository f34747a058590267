"""Radial wavelet Parseval frame built from the corona windows W_j.

Scale j atoms are ``4**-j W_j(xi) exp(2 pi i xi.m / 4**j)``, i.e. the band
multiplier W_j at lattice density 16**j.  The low-pass system reduces to the
single constant atom on the torus.
"""

from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from . import generators as gen
from .bands import from_dense
from .grid_fft import FreqGrid, forward_ft, inverse_ft, write_gsep

WaveletIndex = namedtuple("WaveletIndex", "j m")


def wavelet_density(j):
    return 16.0**j


def wavelet_band(grid, j):
    """Scale-j band W_j on the lattice of ``grid``; any j >= 0 is allowed."""
    xi1, xi2 = grid.xi
    inner, outer = gen.corona_bounds(j)
    values = np.zeros((grid.N, grid.N))
    box = np.maximum(np.abs(xi1), np.abs(xi2)) < outer
    values[box] = gen.window_Wj(xi1[box], xi2[box], j)
    lat = 4**j
    return from_dense(("w", j), j, wavelet_density(j), (lat, lat), values)


def low_band(grid):
    xi1, xi2 = grid.xi
    return from_dense(("low",), 0, 1.0, (1, 1), gen.omega_hat(xi1, xi2))


class WaveletFrame:
    """Wavelet bands j = 0..j_max plus the low-pass band on one grid."""

    def __init__(self, grid):
        if not isinstance(grid, FreqGrid):
            grid = FreqGrid(grid)
        self.grid = grid
        self.low = low_band(grid)
        self.bands = {j: wavelet_band(grid, j) for j in range(grid.j_max + 1)}

    @property
    def scales(self):
        return list(self.bands)

    def band(self, j):
        if j not in self.bands:
            raise ValueError(f"scale {j} outside 0..{self.grid.j_max}")
        return self.bands[j]

    def atom_spectrum(self, idx):
        b = self.band(idx.j)
        xi1, xi2 = self.grid.xi
        m1, m2 = idx.m
        phase = np.exp(2j * np.pi * (xi1 * m1 + xi2 * m2) / 4**idx.j)
        return b.atom_spectrum() * phase

    def analyze(self, img):
        spec = forward_ft(img)
        return WaveletCoeffs(
            N=self.grid.N,
            fields={j: b.field(spec) for j, b in self.bands.items()},
            density={j: b.density for j, b in self.bands.items()},
            low=self.low.field(spec),
            decimated={j: b.decimated(spec) for j, b in self.bands.items()},
        )

    def synthesize(self, coeffs):
        if coeffs.N != self.grid.N:
            raise ValueError("coefficients belong to a different grid")
        spec = self.low.synthesis_spectrum(coeffs.low)
        for j, f in coeffs.fields.items():
            spec += self.band(j).synthesis_spectrum(f)
        return inverse_ft(spec)


@dataclass
class WaveletCoeffs:
    """Undecimated per-scale fields with their lattice densities."""

    N: int
    fields: dict
    density: dict
    low: np.ndarray
    decimated: dict = field(default_factory=dict)

    def weight(self, j):
        return self.density[j] / self.N**2

    def l2_squared(self, include_low=True):
        total = sum(self.weight(j) * np.sum(np.abs(f) ** 2) for j, f in self.fields.items())
        if include_low:
            total += np.sum(np.abs(self.low) ** 2) / self.N**2
        return float(total)

    def l1(self, include_low=True):
        total = sum(self.weight(j) * np.sum(np.abs(f)) for j, f in self.fields.items())
        if include_low:
            total += np.sum(np.abs(self.low)) / self.N**2
        return float(total)

    def dump(self, directory):
        """One complex GSEP1 file per scale plus a manifest of (j, weight)."""
        lines = ["# j weight file"]
        write_gsep(f"{directory}/wavelet_low.gsep", self.low)
        lines.append(f"low {1.0 / self.N**2!r} wavelet_low.gsep")
        for j, f in self.fields.items():
            name = f"wavelet_j{j}.gsep"
            write_gsep(f"{directory}/{name}", np.asarray(f, dtype=complex))
            lines.append(f"{j} {self.weight(j)!r} {name}")
        with open(f"{directory}/wavelet_manifest.txt", "w") as fh:
            fh.write("\n".join(lines) + "\n")


def analyze_wavelet(img, grid=None):
    grid = grid or FreqGrid(np.asarray(img).shape[0])
    return WaveletFrame(grid).analyze(img)


def synthesize_wavelet(coeffs):
    return WaveletFrame(FreqGrid(coeffs.N)).synthesize(coeffs)


def wavelet_atom_spectrum(idx, grid):
    return WaveletFrame(grid).atom_spectrum(idx)
