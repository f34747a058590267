"""Ground-truth components, subband filters and subband reconstruction.

The point component is defined through its spectrum
``sum_i c_i exp(-2 pi i xi.x_i) |xi|**-(2 - lambda_i)`` (zero at xi = 0).
The line component is the distribution ``f -> int w(x1) f(x1, offset) dx1``
whose Fourier coefficients are ``w_hat(xi1) exp(-2 pi i xi2 offset)``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import generators as gen
from .grid_fft import FreqGrid, inverse_ft, norm


@dataclass(frozen=True)
class Point:
    x1: float
    x2: float
    lam: float = 1.5
    c: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.lam < 2.0:
            raise ValueError(f"point exponent must lie in (0, 2), got {self.lam}")
        if not self.c > 0:
            raise ValueError(f"point amplitude must be positive, got {self.c}")


@dataclass(frozen=True)
class PointModel:
    points: tuple = (Point(0.5, 0.5),)


@dataclass(frozen=True)
class LineModel:
    """Horizontal line x2 = offset weighted by a bump centred at x1 = center."""

    rho: float = 0.25
    offset: float = 0.5
    center: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.rho < 0.5:
            raise ValueError(f"line half-width must lie in (0, 1/2), got {self.rho}")

    def weight(self, t):
        """Default weight ramp((t + rho)/rho) * ramp((rho - t)/rho), 0 <= w <= 1."""
        r = self.rho
        return gen.ramp((t + r) / r) * gen.ramp((r - t) / r)


@dataclass(frozen=True)
class Model:
    """A point part and/or a line part; either may be absent."""

    points: PointModel = field(default_factory=PointModel)
    line: LineModel = field(default_factory=LineModel)

    def __post_init__(self):
        if self.points is None and self.line is None:
            raise ValueError("model has neither points nor a line")


def _grid(grid):
    return grid if isinstance(grid, FreqGrid) else FreqGrid(grid)


def point_spectrum(model, grid):
    grid = _grid(grid)
    xi1, xi2 = grid.xi
    r = np.hypot(xi1, xi2)
    r[0, 0] = 1.0
    spec = np.zeros((grid.N, grid.N), dtype=complex)
    for p in model.points:
        spec += p.c * np.exp(-2j * np.pi * (xi1 * p.x1 + xi2 * p.x2)) * r ** (p.lam - 2)
    spec[0, 0] = 0.0
    return spec


def weight_transform(line, freqs, samples):
    """Trapezoid quadrature of int w(t) exp(-2 pi i xi t) dt over [-rho, rho]."""
    t = np.linspace(-line.rho, line.rho, samples + 1)
    wq = line.weight(t)
    wq[[0, -1]] *= 0.5
    h = t[1] - t[0]
    freqs = np.asarray(freqs, dtype=float)
    return h * (np.exp(-2j * np.pi * np.outer(freqs, t)) @ wq)


def line_spectrum(model, grid):
    grid = _grid(grid)
    f = grid.freqs.astype(float)
    w_hat = weight_transform(model, f, 8 * grid.N) * np.exp(-2j * np.pi * f * model.center)
    return np.outer(w_hat, np.exp(-2j * np.pi * f * model.offset))


def component_spectra(model, grid):
    """(point spectrum, line spectrum); an absent part gives zeros."""
    grid = _grid(grid)
    zero = np.zeros((grid.N, grid.N), dtype=complex)
    P = point_spectrum(model.points, grid) if model.points is not None else zero
    C = line_spectrum(model.line, grid) if model.line is not None else zero.copy()
    return P, C


def subband_filter(grid, j):
    grid = _grid(grid)
    return gen.window_Wj(*grid.xi, j)


def filter_subband(spec, j, grid=None):
    grid = _grid(grid or spec.shape[0])
    return spec * subband_filter(grid, j)


def low_subband(spec, grid=None):
    grid = _grid(grid or spec.shape[0])
    return spec * gen.omega_hat(*grid.xi)


@dataclass
class SubbandStack:
    """Filtered spectra f_j = W_j f for j = 0..j_max and the low band."""

    N: int
    bands: dict
    low: np.ndarray


def decompose(spec, grid=None):
    grid = _grid(grid or spec.shape[0])
    return SubbandStack(grid.N,
                        {j: filter_subband(spec, j, grid) for j in range(grid.j_max + 1)},
                        low_subband(spec, grid))


def reconstruct_spectrum(stack):
    grid = FreqGrid(stack.N)
    out = low_subband(stack.low, grid)
    for j, fj in stack.bands.items():
        out = out + filter_subband(fj, j, grid)
    return out


def reconstruct(stack):
    """f = F_low * F_low * f + sum_j F_j * f_j, returned as a sampled image."""
    return inverse_ft(reconstruct_spectrum(stack))


def subband_energies(model, j, grid):
    """(||P_j||_2, ||wL_j||_2) as exact lattice sums."""
    grid = _grid(grid)
    P, C = component_spectra(model, grid)
    Wj = subband_filter(grid, j)
    return norm(P * Wj), norm(C * Wj)


# ------------------------------------------------------------------ model files

def parse_keyvalue(text):
    """key=value lines with '#' comments; repeated keys accumulate in a list."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out.setdefault(key.lower(), []).append(value)
    return out


def _floats(text, count, what):
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if len(parts) != count:
        raise ValueError(f"{what} needs {count} comma-separated numbers, got {text!r}")
    return [float(p) for p in parts]


def model_from_text(text):
    """Build a Model from ``points = x1,x2,lambda,c; ...`` and ``line = rho,offset``."""
    kv = parse_keyvalue(text)
    unknown = set(kv) - {"points", "point", "line"}
    if unknown:
        raise ValueError(f"unknown model keys: {sorted(unknown)}")
    entries = []
    for value in kv.get("points", []) + kv.get("point", []):
        entries += [e for e in value.split(";") if e.strip()]
    points = None
    if entries and entries[0].strip().lower() != "none":
        points = PointModel(tuple(Point(*_floats(e, 4, "point")) for e in entries))
    line = None
    if "line" in kv and kv["line"][-1].strip().lower() != "none":
        rho, offset = _floats(kv["line"][-1], 2, "line")
        line = LineModel(rho=rho, offset=offset)
    return Model(points=points, line=line)


def model_to_text(model):
    lines = []
    if model.points is not None:
        pts = "; ".join(f"{p.x1!r},{p.x2!r},{p.lam!r},{p.c!r}" for p in model.points.points)
        lines.append(f"points = {pts}")
    else:
        lines.append("points = none")
    if model.line is not None:
        lines.append(f"line = {model.line.rho!r},{model.line.offset!r}")
    else:
        lines.append("line = none")
    return "\n".join(lines) + "\n"


def load_model(path):
    with open(path) as fh:
        return model_from_text(fh.read())
