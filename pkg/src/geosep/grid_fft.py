"""Discrete torus, integer frequency lattice and the Fourier transform pair.

The spatial domain is the unit torus sampled at ``x = (n1/N, n2/N)``.  A
spectrum holds Fourier-series coefficients indexed by integer frequencies
``xi in [-N/2, N/2)^2`` stored in standard FFT order (index ``xi mod N``).
The pair is normalised so that Plancherel holds with cell weight ``1/N**2``
on the spatial side and weight 1 on the frequency side.
"""

from dataclasses import dataclass
from functools import cached_property
import struct

import numpy as np

MIN_GRID = 16


@dataclass(frozen=True)
class FreqGrid:
    """Square N x N torus grid with its integer frequency lattice."""

    N: int

    def __post_init__(self):
        N = self.N
        if isinstance(N, bool) or not isinstance(N, (int, np.integer)):
            raise ValueError(f"grid size must be an integer, got {N!r}")
        if N < MIN_GRID or N & (N - 1):
            raise ValueError(f"grid size must be a power of two >= {MIN_GRID}, got {N!r}")

    @property
    def j_max(self):
        """Largest scale whose corona fits the lattice: 2**(2j-2) <= N/2."""
        j = 0
        while 2.0 ** (2 * (j + 1) - 2) <= self.N / 2:
            j += 1
        return j

    @cached_property
    def freqs(self):
        """Integer frequencies along one axis in FFT order."""
        return np.fft.fftfreq(self.N, 1.0 / self.N).round().astype(np.int64)

    @cached_property
    def xi(self):
        """Pair of N x N float arrays (xi1, xi2); axis 0 is the first coordinate."""
        f = self.freqs.astype(float)
        xi1, xi2 = np.meshgrid(f, f, indexing="ij")
        xi1.flags.writeable = False
        xi2.flags.writeable = False
        return xi1, xi2

    @property
    def covered_radius(self):
        """Sup-norm radius on which the scale partition sums to one."""
        return 2 ** (2 * self.j_max - 3)

    def covered_mask(self):
        xi1, xi2 = self.xi
        return np.maximum(np.abs(xi1), np.abs(xi2)) <= self.covered_radius

    def positions(self):
        """Spatial sample coordinates (x1, x2) as N x N arrays."""
        t = np.arange(self.N) / self.N
        return np.meshgrid(t, t, indexing="ij")


def make_grid(N):
    return FreqGrid(N)


def forward_ft(img):
    """Fourier-series coefficients of a sampled field (1/N**2 normalisation)."""
    img = np.asarray(img)
    N = img.shape[0]
    if img.ndim != 2 or img.shape[1] != N:
        raise ValueError(f"expected a square 2-D array, got shape {img.shape}")
    return np.fft.fft2(img) / N**2


def inverse_ft(spec, real=None):
    """Sample the trigonometric polynomial with coefficients ``spec``.

    With ``real=None`` the result is returned as a real array whenever the
    imaginary residue is at roundoff level; ``real=True`` forces the real part.
    """
    spec = np.asarray(spec)
    N = spec.shape[0]
    if spec.ndim != 2 or spec.shape[1] != N:
        raise ValueError(f"expected a square 2-D array, got shape {spec.shape}")
    img = np.fft.ifft2(spec) * N**2
    if real is None:
        scale = np.abs(img).max(initial=0.0)
        real = np.abs(img.imag).max(initial=0.0) <= 1e-12 * max(scale, 1e-300)
    return img.real.copy() if real else img


def plancherel_inner(a, b):
    """<a, b> = sum_xi a(xi) conj(b(xi))."""
    return complex(np.vdot(b, a))


def spatial_inner(f, g):
    """Torus inner product of two sampled fields, cell weight 1/N**2."""
    f = np.asarray(f)
    return complex(np.vdot(g, f)) / f.size


def norm(spec):
    return float(np.sqrt(np.vdot(spec, spec).real))


def sample_on_lattice(spec, M1, M2, freqs=None):
    """Evaluate the trigonometric polynomial at positions (n1/M1, n2/M2).

    Frequencies are folded modulo the lattice size, which is exact both for
    subsampling (M < N) and for interpolation onto finer lattices (M > N).
    """
    spec = np.asarray(spec)
    if freqs is None:
        freqs = np.fft.fftfreq(spec.shape[0], 1.0 / spec.shape[0]).round().astype(np.int64)
    folded = _fold_axis(spec, freqs, M1, axis=0)
    folded = _fold_axis(folded, freqs, M2, axis=1)
    return np.fft.ifft2(folded) * (M1 * M2)


def _fold_axis(a, freqs, M, axis):
    idx = np.mod(freqs, M)
    if len(freqs) == M and np.array_equal(idx, np.arange(M)):
        return a
    shape = list(a.shape)
    shape[axis] = M
    out = np.zeros(shape, dtype=complex)
    if axis == 0:
        np.add.at(out, idx, a)
    else:
        np.add.at(out.T, idx, a.T)
    return out


# ---------------------------------------------------------------- GSEP1 files

MAGIC = b"GSEP"
VERSION = 1


def write_gsep(path, values):
    """Write a square real or complex array in the GSEP1 container."""
    values = np.asarray(values)
    N = values.shape[0]
    if values.ndim != 2 or values.shape[1] != N:
        raise ValueError("GSEP1 holds square 2-D arrays only")
    is_complex = np.iscomplexobj(values)
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<III", VERSION, int(is_complex), N))
        if is_complex:
            payload = np.empty((N, N, 2), dtype="<f8")
            payload[..., 0] = values.real
            payload[..., 1] = values.imag
        else:
            payload = np.ascontiguousarray(values, dtype="<f8")
        fh.write(payload.tobytes())


def read_gsep(path):
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != MAGIC:
            raise ValueError(f"{path}: not a GSEP1 file")
        version, flag, N = struct.unpack("<III", header[4:])
        if version != VERSION or flag not in (0, 1):
            raise ValueError(f"{path}: unsupported GSEP version {version} / flag {flag}")
        count = N * N * (2 if flag else 1)
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != count:
        raise ValueError(f"{path}: payload has {data.size} values, expected {count}")
    if flag:
        data = data.reshape(N, N, 2)
        return data[..., 0] + 1j * data[..., 1]
    return data.reshape(N, N).copy()
