"""Sparse Fourier-multiplier bands shared by the wavelet and shearlet frames."""

from dataclasses import dataclass

import numpy as np

from .grid_fft import sample_on_lattice


@dataclass(frozen=True)
class Band:
    """One frame subband: a real multiplier stored on its support.

    ``idx`` are flat indices into the N x N spectrum (FFT order) and ``vals``
    the multiplier there.  Atoms of the band are ``vals / sqrt(density)``
    modulated to positions of the ``lattice`` = (M1, M2) torus grid, so
    ``density`` is the number of atoms per unit area.
    """

    key: tuple
    j: int
    density: float
    lattice: tuple
    N: int
    idx: np.ndarray
    vals: np.ndarray

    @property
    def weight(self):
        """Per-sample weight turning undecimated sums into lattice sums."""
        return self.density / self.N**2

    def dense(self):
        out = np.zeros(self.N * self.N)
        out[self.idx] = self.vals
        return out.reshape(self.N, self.N)

    def atom_spectrum(self):
        """Spectrum of the atom centred at the origin."""
        return self.dense() / np.sqrt(self.density)

    def field(self, spec):
        """Undecimated coefficient field IFT(spec * conj(atom spectrum))."""
        N = self.N
        prod = np.zeros(N * N, dtype=complex)
        prod[self.idx] = spec.reshape(-1)[self.idx] * self.vals
        return np.fft.ifft2(prod.reshape(N, N)) * (N * N / np.sqrt(self.density))

    def decimated(self, spec):
        """Coefficients on the band lattice, indexed by position (n1/M1, n2/M2)."""
        return sample_on_lattice(self.apply(spec) / np.sqrt(self.density), *self.lattice)

    def apply(self, spec):
        out = np.zeros(self.N * self.N, dtype=complex)
        out[self.idx] = spec.reshape(-1)[self.idx] * self.vals
        return out.reshape(self.N, self.N)

    def synthesis_spectrum(self, field):
        """Adjoint of ``field`` with respect to the density-weighted inner product."""
        N = self.N
        fhat = np.fft.fft2(field).reshape(-1)[self.idx] / N**2
        out = np.zeros(N * N, dtype=complex)
        out[self.idx] = fhat * self.vals * np.sqrt(self.density)
        return out.reshape(N, N)


def from_dense(key, j, density, lattice, values):
    """Build a band from a dense N x N multiplier."""
    flat = np.asarray(values, dtype=float).reshape(-1)
    idx = np.flatnonzero(flat)
    return Band(key, j, float(density), tuple(lattice), values.shape[0], idx, flat[idx])


def aggregate(bands, N, power=2):
    """Pointwise sum of |multiplier|**power over the given bands."""
    acc = np.zeros(N * N)
    for b in bands:
        acc[b.idx] += np.abs(b.vals) ** power
    return acc.reshape(N, N)
