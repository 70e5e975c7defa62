"""Pure numpy version of the semi-discrete recursion."""

from __future__ import annotations

import numpy as np


def log_partition(log_d, incr, dt: float) -> float:
    """log Z_N(tau) for one disorder sample.

    Level l carries Z_l(t_j) = e^{c} y[j].  Each level rescales so that the
    largest entry of y is at most one, which keeps everything in range.
    """
    log_d = np.asarray(log_d, dtype=float)
    incr = np.asarray(incr, dtype=float)
    n_lev, m = incr.shape
    c = -np.inf
    y = None
    for l in range(n_lev):
        b = np.concatenate(([0.0], np.cumsum(incr[l])))
        bmax = max(0.0, b.max())
        e = np.exp(b - bmax)
        dl = log_d[l]
        if l == 0 or c == -np.inf:
            c = dl + bmax
            y = e
            continue
        g = y / e
        acc = np.concatenate(([0.0], np.cumsum(0.5 * dt * (g[:-1] + g[1:]))))
        top = acc[-1]
        c_new = c + np.log(top) if top > 0 else -np.inf
        c_new = max(c_new, dl + bmax)
        f_d = np.exp(dl + bmax - c_new) if dl != -np.inf else 0.0
        y = e * (f_d + np.exp(c - c_new) * acc)
        c = c_new
    return float(c + np.log(y[-1]))
