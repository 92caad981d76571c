"""Householder QR with column pivoting, least squares and null-space extraction.

Everything works on the column-scaled matrix so the pivoting and the rank
cutoff see the geometry of the columns rather than their magnitudes (count
columns routinely differ by five orders of magnitude).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class PivotedQR:
    vs: list  # Householder vectors, vs[j] acts on rows j:
    r: np.ndarray  # k x n upper trapezoid, columns in pivot order
    perm: np.ndarray  # r[:, j] belongs to original column perm[j]
    m: int
    n: int

    def diag(self):
        k = min(self.m, self.n)
        return np.abs(np.diag(self.r[:k, :k]))

    def rank(self, tol=1e-8):
        d = self.diag()
        if d.size == 0 or d[0] == 0:
            return 0
        return int(np.sum(d > tol * d[0]))

    def apply_qt(self, b):
        """Q^T b."""
        y = np.array(b, dtype=float)
        for j, v in enumerate(self.vs):
            if v is not None:
                y[j:] -= 2.0 * v * (v @ y[j:])
        return y


def householder_qrp(a):
    """Pivoted factorization A P = Q R of an m x n matrix."""
    a = np.array(a, dtype=float)
    m, n = a.shape
    perm = np.arange(n)
    vs = []
    for j in range(min(m, n)):
        norms = np.einsum("ij,ij->j", a[j:, j:], a[j:, j:])
        p = j + int(np.argmax(norms))
        if p != j:
            a[:, [j, p]] = a[:, [p, j]]
            perm[[j, p]] = perm[[p, j]]
        x = a[j:, j]
        sigma = np.linalg.norm(x)
        if sigma == 0.0:
            vs.append(None)
            continue
        alpha = -sigma if x[0] >= 0 else sigma
        v = x.copy()
        v[0] -= alpha
        v /= np.linalg.norm(v)
        a[j:, j:] -= 2.0 * np.outer(v, v @ a[j:, j:])
        a[j + 1:, j] = 0.0
        vs.append(v)
    return PivotedQR(vs, np.triu(a[: min(m, n), :]), perm, m, n)


def back_substitute(r, b):
    n = r.shape[0]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - r[i, i + 1:] @ x[i + 1:]) / r[i, i]
    return x


def column_scales(a):
    s = np.linalg.norm(a, axis=0)
    s[s == 0] = 1.0
    return s


@dataclass
class LstsqResult:
    x: np.ndarray
    rank: int
    qr: PivotedQR
    scales: np.ndarray


def lstsq(a, b, tol=1e-8):
    """Basic least-squares solution via scaled pivoted QR.

    For a rank-deficient matrix the coefficients of the trailing pivot
    columns are zero; callers check ``rank`` first.
    """
    a = np.asarray(a, dtype=float)
    s = column_scales(a)
    f = householder_qrp(a / s)
    r = f.rank(tol)
    qtb = f.apply_qt(b)
    z = np.zeros(a.shape[1])
    if r:
        z[:r] = back_substitute(f.r[:r, :r], qtb[:r])
    x = np.zeros(a.shape[1])
    x[f.perm] = z
    return LstsqResult(x / s, r, f, s)


def null_space(a, tol=1e-8):
    """Columns spanning the (numerical) null space of ``a``, in scaled units.

    With A P = Q [R11 R12; 0 ~0], every column of P [-R11^-1 R12; I] is
    annihilated by the scaled matrix.  Entries are returned for the original
    column order; the scaling does not change which entries are nonzero.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[1]
    s = column_scales(a)
    f = householder_qrp(a / s)
    r = f.rank(tol)
    if r == n:
        return np.zeros((n, 0))
    r11 = f.r[:r, :r]
    r12 = f.r[:r, r:]
    top = np.zeros((r, n - r))
    for c in range(n - r):
        top[:, c] = -back_substitute(r11, r12[:, c]) if r else 0.0
    ns = np.vstack([top, np.eye(n - r)])
    out = np.zeros_like(ns)
    out[f.perm] = ns
    return out
