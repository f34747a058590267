"""Pure numpy versions of the fused solver and diagnostics kernels."""

import numpy as np


def dual_step(y, v_new, v_old, sigma, bound):
    """In-place dual update y <- clip(y + sigma (2 v_new - v_old), -bound, bound).

    Arrays have shape (bands, n1, n2); ``sigma`` and ``bound`` are per band.
    Returns per-band sums of |v_new|, of y * v_new after the update and of
    the squared dual residual ((y_old - y) / sigma - (v_old - v_new))**2.
    """
    s = sigma[:, None, None]
    c = bound[:, None, None]
    y_old = y.copy()
    y += s * (2.0 * v_new - v_old)
    np.clip(y, -c, c, out=y)
    axes = (1, 2)
    res = (y_old - y) / s - (v_old - v_new)
    return (np.abs(v_new).sum(axis=axes), (y * v_new).sum(axis=axes),
            (res * res).sum(axis=axes))


def soft_shrink(c, tau):
    """Reduce magnitudes by tau (floored at 0) keeping the phase; ties map to 0."""
    c = np.asarray(c)
    mag = np.abs(c)
    keep = mag > tau
    scale = np.zeros(mag.shape)
    np.divide(mag - tau, mag, out=scale, where=keep)
    return c * scale


def gather_sums(table, rows, cols):
    """S[a, b] = sum_m table[rows[a, m], cols[b, m]].

    ``rows`` is (A, n) and ``cols`` (B, n) with a shared member axis n.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    out = np.zeros((rows.shape[0], cols.shape[0]))
    for m in range(rows.shape[1]):
        out += table[rows[:, m][:, None], cols[:, m][None, :]]
    return out
