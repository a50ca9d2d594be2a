"""Aitken delta-squared extrapolation with a convergence certificate.

Limits throughout the package are reported through :func:`limit`, never as
raw sequence tails.  The estimator builds a short table of repeated Aitken
transforms and picks the entry whose two neighbouring differences are both
smallest; that spread is returned as the certificate ``residual``.  Picking
the flattest spot rather than the last entry matters because the tails of
boundary-approaching sequences are dominated by cancellation noise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LimitEstimate:
    value: complex | float
    residual: float
    level: int
    index: int
    n_terms: int

    def converged(self, tol: float) -> bool:
        return bool(self.residual <= tol)


def aitken(seq) -> np.ndarray:
    """One Aitken sweep: ``s[n+2] - (s[n+2]-s[n+1])**2 / (s[n+2]-2 s[n+1]+s[n])``."""
    s = np.asarray(seq)
    if s.size < 3:
        return s.copy()
    d_last = s[2:] - s[1:-1]
    d2 = s[2:] - 2.0 * s[1:-1] + s[:-2]
    scale = np.max(np.abs(s)) if s.size else 1.0
    flat = np.abs(d2) <= 64.0 * np.finfo(float).eps * max(scale, 1e-300)
    safe = np.where(flat, 1.0, d2)
    out = np.where(flat, s[2:], s[2:] - d_last * d_last / safe)
    return out


def limit(seq, levels: int = 3, tail: int | None = None) -> LimitEstimate:
    """Extrapolated limit of ``seq`` with a certificate.

    ``tail`` restricts the search to the last ``tail`` raw terms; use it when
    the head of a sequence is known to be pre-asymptotic.
    """
    s = np.asarray(seq)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("need a non-empty 1-d sequence")
    if tail is not None:
        s = s[-tail:]
    if s.size < 3:
        res = float(abs(s[-1] - s[-2])) if s.size == 2 else float("inf")
        return LimitEstimate(s[-1].item(), res, 0, s.size - 1, s.size)

    best = None
    table = s
    for level in range(levels + 1):
        if table.size >= 3:
            d = np.abs(np.diff(table))
            score = np.maximum(d[:-1], d[1:])
            i = int(np.argmin(score))
            cand = (float(score[i]), level, i + 1, table[i + 1])
            if best is None or cand[0] < best[0]:
                best = cand
        if table.size < 3:
            break
        table = aitken(table)
    residual, level, index, value = best
    return LimitEstimate(value.item(), residual, level, index, s.size)
