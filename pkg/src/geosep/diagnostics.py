"""Clusters, cluster coherence, relative sparsity and the separation study.

Atoms of a band B are ``m_B(xi) / sqrt(d_B)`` modulated to the positions of
the band's torus lattice, so the inner product of a wavelet atom at y with a
shearlet atom at t is g(t - y) with

    g(z) = sum_xi W_j'(xi) m_B(xi) exp(2 pi i xi.z) / sqrt(d_w d_B).

All symbols are real and even, hence g is real and even.  It is evaluated
exactly at arbitrary points by a separable non-uniform DFT over the support
box of the product symbol.
"""

import csv
from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np

from . import kernels
from .grid_fft import FreqGrid, forward_ft, norm
from .models import Model, component_spectra, filter_subband
from .separation import SolverConfig, SubbandProblem, separate_subband, solve_grid_size
from .shearlet_frame import (ShearletFrame, ShearletIndex, check_alpha, lattice_width,
                             scale_bands)
from .wavelet_frame import WaveletIndex, wavelet_band

K_MAX = 32


def check_eps(eps, alpha):
    """Reject eps outside (0, (2 - alpha)/4)."""
    check_alpha(alpha)
    hi = (2.0 - alpha) / 4.0
    if not 0.0 < eps < hi:
        raise ValueError(f"eps must lie in (0, (2 - alpha)/4) = (0, {hi:g}) for alpha={alpha:g}, "
                         f"got {eps:g}")


def diagnostics_grid(j, N=16):
    """Smallest grid (at least N) carrying the scale j+1 symbols untruncated."""
    return FreqGrid(max(N, 16, 2 ** (2 * j + 1)))


def _scales(j):
    return [s for s in (j - 1, j, j + 1) if s >= 0]


# ------------------------------------------------------------------ clusters

@dataclass
class Cluster:
    """Finite set of frame indices, stored per band as lattice sample indices.

    ``members[key] = (n1, n2)`` lists positions (n1/M1, n2/M2) on the lattice
    (M1, M2) of band ``key``; ``lattices[key]`` holds (M1, M2).
    """

    kind: str
    j: int
    eps: float
    alpha: float
    members: dict = field(default_factory=dict)
    lattices: dict = field(default_factory=dict)

    @property
    def size(self):
        return int(sum(len(n1) for n1, _ in self.members.values()))

    def positions(self, key):
        n1, n2 = self.members[key]
        M1, M2 = self.lattices[key]
        return n1 / M1, n2 / M2

    def contains(self, key, n1, n2):
        if key not in self.members:
            return False
        m1, m2 = self.members[key]
        return bool(np.any((m1 == n1 % self.lattices[key][0]) & (m2 == n2 % self.lattices[key][1])))

    def indices(self):
        """Members as WaveletIndex / ShearletIndex values.

        A coefficient at lattice position y belongs to the atom with
        translation t = -y.
        """
        out = []
        for key, (n1, n2) in self.members.items():
            M1, M2 = self.lattices[key]
            if key[0] == "w":
                for a, b in zip(n1, n2):
                    out.append(WaveletIndex(key[1], ((-a) % M1, (-b) % M2)))
            else:
                _, j, l, cone = key
                for a, b in zip(n1, n2):
                    if cone == "v":
                        k1 = (-a) % M1
                        k = (k1, (-b + l * k1) % M2)
                    else:
                        k2 = (-b) % M2
                        k = ((-a + l * k2) % M1, k2)
                    out.append(ShearletIndex(j, l, k, cone))
        return out


def cluster_radius(j, eps):
    return 2.0 ** (eps * j)


def _disc(radius):
    r = int(math.floor(radius))
    m1, m2 = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    keep = m1**2 + m2**2 <= radius**2 + 1e-12
    return m1[keep], m2[keep]


def build_lambda1(j, eps, alpha=1.0, center=(0.5, 0.5)):
    """Wavelet atoms of scales j-1..j+1 with |m| <= 2**(eps j) around ``center``.

    ``m`` counts lattice steps from the lattice point nearest to the point
    singularity.
    """
    check_eps(eps, alpha)
    if j < 0:
        raise ValueError("j must be >= 0")
    m1, m2 = _disc(cluster_radius(j, eps))
    cl = Cluster("wavelet", j, eps, alpha)
    for s in _scales(j):
        M = 4**s
        c1, c2 = (int(round(c * M)) for c in center)
        pts = np.unique(np.stack([(c1 + m1) % M, (c2 + m2) % M], axis=1), axis=0)
        cl.members[("w", s)] = (pts[:, 0], pts[:, 1])
        cl.lattices[("w", s)] = (M, M)
    return cl


def build_lambda2(j, eps, alpha, offset=0.5, shears=1):
    """Vertical-cone shearlets of scales j-1..j+1 hugging the line x2 = offset.

    Every translate along the line is included (the torus closes the range
    of k1) and the offset |k2 - l k1| from the line is at most 2**(eps j).
    ``shears`` caps |l|; the default keeps the shears -1, 0, 1 aligned with
    the line, ``None`` takes every shear of the system.
    """
    check_eps(eps, alpha)
    if j < 0:
        raise ValueError("j must be >= 0")
    from .shearlet_frame import shear_range

    r = int(math.floor(cluster_radius(j, eps) + 1e-12))
    cl = Cluster("shearlet", j, eps, alpha)
    for s in _scales(j):
        a, M2 = lattice_width(s, alpha), 4**s
        c2 = int(round(offset * M2))
        n2 = np.unique((c2 + np.arange(-r, r + 1)) % M2)
        g1, g2 = np.meshgrid(np.arange(a), n2, indexing="ij")
        L = shear_range(s, alpha)
        cap = L if shears is None else min(L, shears)
        for l in range(-cap, cap + 1):
            key = ("s", s, l, "v")
            cl.members[key] = (g1.ravel(), g2.ravel())
            cl.lattices[key] = (a, M2)
    return cl


# ------------------------------------------------------- exact inner products

class PairKernel:
    """g(z) for one (wavelet band, target band) pair, evaluated exactly."""

    def __init__(self, grid, wband, band):
        dense = np.zeros(grid.N * grid.N)
        dense[wband.idx] = wband.vals
        vals = dense[band.idx] * band.vals / math.sqrt(wband.density * band.density)
        keep = vals != 0
        freqs = grid.freqs
        r, c = np.divmod(band.idx[keep], grid.N)
        self.empty = not keep.any()
        if self.empty:
            return
        self.u1, i1 = np.unique(freqs[r], return_inverse=True)
        self.u2, i2 = np.unique(freqs[c], return_inverse=True)
        box = np.zeros((self.u1.size, self.u2.size))
        box[i1, i2] = vals[keep]
        self.box = box
        self.total = float(vals[keep].sum())

    def __call__(self, z1, z2):
        """Matrix g(z1[a], z2[b]); zero when the symbols do not overlap."""
        z1 = np.asarray(z1, dtype=float)
        z2 = np.asarray(z2, dtype=float)
        if self.empty:
            return np.zeros((z1.size, z2.size))
        e1 = np.exp(2j * np.pi * np.outer(z1, self.u1))
        e2 = np.exp(2j * np.pi * np.outer(self.u2, z2))
        return ((e1 @ self.box) @ e2).real


def _unique_mod1(z):
    """Unique values of z modulo 1 (rounded) and the inverse map."""
    z = np.mod(np.round(np.mod(z, 1.0), 12), 1.0)
    return np.unique(z.ravel(), return_inverse=True)


def _member_sums(kernel, t1, t2, y1, y2):
    """S[a, b] = sum_m |g(t1[a] - y1[m], t2[b] - y2[m])| for explicit members."""
    u1, inv1 = _unique_mod1(t1[:, None] - y1[None, :])
    u2, inv2 = _unique_mod1(t2[:, None] - y2[None, :])
    G = np.abs(kernel(u1, u2))
    return kernels.gather_sums(G, inv1.reshape(t1.size, y1.size), inv2.reshape(t2.size, y2.size))


def _window(center, M, K):
    c = int(round(center * M))
    if 2 * K + 1 >= M:
        return np.arange(M)
    return np.unique((c + np.arange(-K, K + 1)) % M)


@dataclass
class CoherenceResult:
    value: float
    target: tuple
    window: int
    window_ok: bool
    change: float


def _target_bands(grid, j, alpha, variant):
    frame = ShearletFrame(grid, alpha, variant, scales=_scales(j))
    return list(frame.bands.values())


def _wavelet_vs_targets(cluster, grid, targets, center, K):
    """max over targets of sum over wavelet members, target windows of +-K steps."""
    best = (0.0, None)
    wbands = {key: wavelet_band(grid, key[1]) for key in cluster.members}
    for band in targets:
        M1, M2 = band.lattice
        n1 = _window(center[0], M1, K)
        n2 = _window(center[1], M2, K)
        S = np.zeros((n1.size, n2.size))
        for key, wb in wbands.items():
            kern = PairKernel(grid, wb, band)
            if kern.empty:
                continue
            y1, y2 = cluster.positions(key)
            S += _member_sums(kern, n1 / M1, n2 / M2, y1, y2)
        if S.size and S.max() > best[0]:
            a, b = np.unravel_index(np.argmax(S), S.shape)
            best = (float(S.max()), (band.key, int(n1[a]), int(n2[b])))
    return best


def _shearlet_vs_wavelets(cluster, grid, alpha, variant, offset, K):
    """max over wavelet targets near the line of sum over shearlet members."""
    best = (0.0, None)
    src = ShearletFrame(grid, alpha, variant, scales=_scales(cluster.j))
    for tj in _scales(cluster.j):
        wb = wavelet_band(grid, tj)
        M = 4**tj
        t1 = np.arange(M) / M
        n2 = _window(offset, M, K)
        t2 = n2 / M
        S = np.zeros((M, n2.size))
        for key, (m1, m2) in cluster.members.items():
            if abs(key[1] - tj) > 1:
                continue
            kern = PairKernel(grid, wb, src.bands[key])
            if kern.empty:
                continue
            a, M2 = cluster.lattices[key]
            y2 = np.unique(m2) / M2
            # members cover every x1 translate, so the sum is 1/a periodic in t1
            res, inv = _unique_mod1(t1 * a)
            res = res / a
            part = np.zeros((res.size, n2.size))
            chunk = max(1, 4_000_000 // max(1, a * kern.u1.size))
            y1 = np.arange(a) / a
            for s in range(0, res.size, chunk):
                r = res[s:s + chunk]
                yy1 = np.repeat(y1, y2.size)
                yy2 = np.tile(y2, a)
                part[s:s + chunk] = _member_sums(kern, r, t2, yy1, yy2)
            S += part[inv]
        if S.max() > best[0]:
            a_, b_ = np.unravel_index(np.argmax(S), S.shape)
            best = (float(S.max()), (("w", tj), int(a_), int(n2[b_])))
    return best


def cluster_coherence(cluster, alpha=None, variant="dual", grid=None, center=(0.5, 0.5),
                      offset=0.5, k_max=K_MAX, check=True):
    """Cluster coherence of a wavelet or shearlet cluster against the other system.

    For a wavelet cluster the targets are the shearlet atoms (``variant``
    selects primal or dual) of scales j-1..j+1, all shears, both cones, at
    lattice positions within ``k_max`` steps of the cluster centre.  For a
    shearlet cluster (built from the primal system unless ``variant`` says
    otherwise) the targets are wavelet atoms at every x1 and within
    ``k_max`` steps of the line.

    Returns
    -------
    CoherenceResult
        ``window_ok`` is False when doubling ``k_max`` moved the value by
        more than 1e-6.
    """
    if cluster.size == 0:
        return CoherenceResult(0.0, None, k_max, True, 0.0)
    alpha = cluster.alpha if alpha is None else alpha
    grid = grid or diagnostics_grid(cluster.j)
    if cluster.kind == "wavelet":
        targets = _target_bands(grid, cluster.j, alpha, variant)

        def run(K):
            return _wavelet_vs_targets(cluster, grid, targets, center, K)
    else:
        def run(K):
            return _shearlet_vs_wavelets(cluster, grid, alpha, variant, offset, K)
    value, target = run(k_max)
    change = 0.0
    if check:
        change = abs(run(2 * k_max)[0] - value)
    return CoherenceResult(value, target, k_max, change <= 1e-6, change)


@lru_cache(maxsize=None)
def cross_coherence_max(j, alpha, variant="primal", N=None):
    """M(j) = max over shears and cones of |<psi_{j,m}, phi_{j,l,k}>|.

    Both symbols are nonnegative, so the maximum over translations sits at
    zero offset and equals the sum of the product symbol.
    """
    grid = diagnostics_grid(j - 1, N or 16)
    wb = wavelet_band(grid, j)
    best = 0.0
    for cone in ("h", "v"):
        for band in scale_bands(grid, j, cone, alpha, variant, wb):
            kern = PairKernel(grid, wb, band)
            if not kern.empty:
                best = max(best, kern.total)
    return best


# ------------------------------------------------------------ sparsity, bound

def _embed(spec, N):
    """Zero-pad (or crop) a spectrum to an N x N grid in FFT order."""
    spec = np.asarray(spec)
    n = spec.shape[0]
    if n == N:
        return spec
    f = np.fft.fftfreq(n, 1.0 / n).round().astype(int)
    keep = np.abs(f) < min(n, N) // 2
    out = np.zeros((N, N), dtype=complex)
    idx = np.mod(f[keep], N)
    out[np.ix_(idx, idx)] = spec[np.ix_(keep, keep)]
    return out


def relative_sparsity(spec, frame, cluster, j=None):
    """l1 mass of the lattice coefficients of scales j-1..j+1 outside the cluster.

    Parameters
    ----------
    spec : ndarray
        Component spectrum (any grid; padded to the frame's grid).
    frame : {"wavelet"} or ShearletFrame
        Analysis system.  The string selects the Parseval wavelets.
    cluster : Cluster
    j : int, optional
        Centre scale; defaults to ``cluster.j``.

    Returns
    -------
    float
        Sum of |<f, atom>| over every lattice atom of the three scales not in
        the cluster.  The sum is exact (finite torus lattice).
    """
    j = cluster.j if j is None else j
    if isinstance(frame, str):
        if frame != "wavelet":
            raise ValueError(f"unknown frame {frame!r}")
        grid = diagnostics_grid(j, spec.shape[0])
        bands = [wavelet_band(grid, s) for s in _scales(j)]
    else:
        grid = frame.grid
        bands = [b for b in frame.bands.values() if b.j in _scales(j)]
    F = _embed(spec, grid.N)
    total = 0.0
    for band in bands:
        coeffs = np.abs(band.decimated(F))
        if band.key in cluster.members:
            n1, n2 = cluster.members[band.key]
            coeffs[n1, n2] = 0.0
        total += float(coeffs.sum())
    return total


def error_bound(delta1, delta2, mu_c, B1=1.0, B2=1.0):
    """2 max(B1, B2) (delta1 + delta2) / (1 - 2 mu_c); inf when mu_c >= 1/2."""
    if mu_c >= 0.5:
        return math.inf
    return 2.0 * max(B1, B2) * (delta1 + delta2) / (1.0 - 2.0 * mu_c)


@lru_cache(maxsize=None)
def upper_frame_bound(alpha, variant="primal", N=256):
    """Largest aggregate squared symbol of the shearlet system (undecimated bound)."""
    frame = ShearletFrame(FreqGrid(N), alpha, variant)
    return float(frame.aggregate().max())


@dataclass
class CoherenceReport:
    j: int
    alpha: float
    eps: float
    mu1: float
    mu2: float
    mu1_primal: float
    value: float
    flag: bool
    window_ok: bool


def coherence_bound_check(j, alpha, eps, center=(0.5, 0.5), offset=0.5, shears=1,
                          k_max=K_MAX, check=True):
    """Coherence bound max(mu_c(L1, Psi; Phi^d), mu_c(L2, Phi; Psi)) and flag < 1/2."""
    L1 = build_lambda1(j, eps, alpha, center)
    L2 = build_lambda2(j, eps, alpha, offset, shears)
    grid = diagnostics_grid(j)
    r1 = cluster_coherence(L1, alpha, "dual", grid, center, offset, k_max, check)
    r1p = cluster_coherence(L1, alpha, "primal", grid, center, offset, k_max, check)
    r2 = cluster_coherence(L2, alpha, "primal", grid, center, offset, k_max, check)
    value = max(r1.value, r2.value)
    return CoherenceReport(j, alpha, eps, r1.value, r2.value, r1p.value, value, value < 0.5,
                           r1.window_ok and r1p.window_ok and r2.window_ok)


# ---------------------------------------------------------------- the study

@dataclass
class ScaleReport:
    j: int
    alpha: float
    errP: float
    errC: float
    abs_error: float
    bound: float
    mu: float
    delta1: float
    delta2: float
    energyP: float
    energyC: float
    iterations: int
    kkt: float
    converged: bool
    coherence: CoherenceReport = None


def sparsity_pair(model, j, alpha, eps, N, shears=1):
    """(delta1, delta2) for the model's subband components at scale j."""
    grid = diagnostics_grid(j, N)
    P, C = component_spectra(model, grid)
    Pj = filter_subband(P, j, grid)
    Cj = filter_subband(C, j, grid)
    center, offset = _anchors(model)
    d1 = relative_sparsity(Pj, "wavelet", build_lambda1(j, eps, alpha, center), j)
    frame = ShearletFrame(grid, alpha, "primal", scales=_scales(j))
    d2 = relative_sparsity(Cj, frame, build_lambda2(j, eps, alpha, offset, shears), j)
    return d1, d2


def _anchors(model):
    center = (model.points.points[0].x1, model.points.points[0].x2) if model.points else (0.5, 0.5)
    offset = model.line.offset if model.line else 0.5
    return center, offset


def scale_report(result, model, alpha, eps, N, diagnostics=True, k_max=K_MAX):
    """ScaleReport of one separation result against the model's subbands."""
    grid = FreqGrid(N)
    j = result.j
    P, C = component_spectra(model, grid)
    Pj = filter_subband(P, j, grid)
    Cj = filter_subband(C, j, grid)
    eP = norm(forward_ft(result.point) - Pj)
    eC = norm(forward_ft(result.curve) - Cj)
    nP, nC = norm(Pj), norm(Cj)
    # without diagnostics no bound is certified: report the infinite sentinel
    rep = ScaleReport(j, alpha, eP / nP if nP > 0 else eP, eC / nC if nC > 0 else eC,
                      eP + eC, math.inf, math.nan, math.nan, math.nan, nP, nC,
                      result.iterations, result.kkt, result.converged)
    if diagnostics:
        center, offset = _anchors(model)
        coh = coherence_bound_check(j, alpha, eps, center, offset, k_max=k_max)
        d1, d2 = sparsity_pair(model, j, alpha, eps, N)
        B2 = upper_frame_bound(alpha, "primal", min(N, 256))
        rep.coherence = coh
        rep.mu = coh.value
        rep.delta1, rep.delta2 = d1, d2
        rep.bound = error_bound(d1, d2, coh.value, 1.0, B2)
    return rep


def separation_study(alpha, eps, j_range, model=None, cfg=None, N=256, diagnostics=True,
                     k_max=K_MAX):
    """Separate P_j + wL_j for each j and attach coherence, sparsity and bound.

    Errors are relative L2 errors against the filtered ground truth (the
    absolute error when a component is absent); ``abs_error`` is
    ||P* - P_j|| + ||C* - wL_j|| for the literal bound check.
    """
    check_eps(eps, alpha)
    model = model or Model()
    cfg = cfg or SolverConfig()
    grid = FreqGrid(N)
    P, C = component_spectra(model, grid)
    reports = []
    for j in j_range:
        f_j = np.real(np.fft.ifft2(filter_subband(P + C, j, grid))) * N**2
        n = solve_grid_size(j, N, cfg.solve_grid)
        res = separate_subband(f_j, j, alpha, cfg, SubbandProblem(j, alpha, n))
        reports.append(scale_report(res, model, alpha, eps, N, diagnostics, k_max))
    return reports


def bound_holds(report, slack=1e-5):
    """Literal check: only binding when the flag holds and the solver converged."""
    if not (report.mu < 0.5 and report.converged):
        return None
    return report.abs_error <= report.bound + slack


# ---------------------------------------------------------------- CSV files

def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_coherence_csv(path, reports):
    _write_csv(path, ["j", "alpha", "eps", "mu1", "mu2", "flag"],
               [(r.j, r.alpha, r.eps, r.mu1, r.mu2, r.flag) for r in reports])


def write_sparsity_csv(path, rows):
    """``rows`` are (j, delta1, delta2) tuples."""
    _write_csv(path, ["j", "delta1", "delta2"], rows)


def write_study_csv(path, reports):
    _write_csv(path, ["j", "errP", "errC", "bound", "iters", "kkt"],
               [(r.j, r.errP, r.errC, r.bound, r.iterations, r.kkt) for r in reports])
