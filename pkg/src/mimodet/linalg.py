"""Dense complex linear-algebra kernels.

Thin QL decomposition, Gauss elimination transforms, triangular solves and
singular values; the substrate every decomposition and bound in this package
is built on.  Matrices here are tiny (tens of rows), so the kernels favor
clarity, determinism and exact structural zeros over blocked performance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RankDeficient, SingularPivot

DEFAULT_RANK_TOL = 1e-12


def as_cmatrix(a, name="matrix") -> np.ndarray:
    """Convert to a dense complex128 matrix and reject non-finite entries."""
    m = np.array(a, dtype=np.complex128, order="C")
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def as_cvector(v, name="vector") -> np.ndarray:
    """Convert to a dense complex128 vector and reject non-finite entries."""
    w = np.array(v, dtype=np.complex128)
    if w.ndim != 1 or w.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty 1-D vector, got shape {w.shape}")
    if not np.all(np.isfinite(w.real)) or not np.all(np.isfinite(w.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    return w


@dataclass
class QLFactors:
    """Thin QL factorization A = Q @ L.

    Q is m x n with orthonormal columns, L is n x n lower triangular with a
    real positive diagonal (entries above the diagonal are exact zeros).
    ``y_rot`` holds Q^H y when a right-hand side was passed to the
    decomposition; it is accumulated by the reflections themselves, Q is
    never applied to y.
    """

    Q: np.ndarray
    L: np.ndarray
    y_rot: np.ndarray | None = None


def ql_decompose(a, y=None, rank_tol=DEFAULT_RANK_TOL) -> QLFactors:
    """Thin QL decomposition by Householder reflections, columns right to left.

    Column j is compressed onto row m-n+j, so after the sweep the bottom
    n x n block is lower triangular and the top m-n rows vanish.  The same
    reflections are applied to ``y`` in the same pass, which yields
    Q^H y as a byproduct without forming Q first.  A final diagonal phase
    correction makes diag(L) real and positive.

    Raises RankDeficient when a pivot magnitude falls below
    ``rank_tol * ||A||_F`` (the offending column index is attached).
    """
    a = as_cmatrix(a, "A")
    m, n = a.shape
    if m < n:
        raise ValueError(f"QL needs m >= n, got {m} x {n}")
    r = a.copy()
    yw = as_cvector(y, "y").copy() if y is not None else None
    if yw is not None and yw.shape[0] != m:
        raise ValueError(f"y has length {yw.shape[0]}, expected {m}")
    norm_a = np.linalg.norm(a)

    reflections = []  # (k, u, 2/||u||^2), stored to assemble Q afterwards
    pivots = np.empty(n)
    for j in range(n - 1, -1, -1):
        k = m - n + j
        v = r[: k + 1, j]
        beta = np.linalg.norm(v)
        if beta <= rank_tol * norm_a:
            raise RankDeficient(
                f"QL pivot {j} is numerically zero ({beta:.3e} <= "
                f"{rank_tol:.1e} * ||A||_F)",
                index=j,
            )
        pivots[j] = beta
        phase = v[k] / abs(v[k]) if v[k] != 0 else 1.0 + 0.0j
        u = v.copy()
        u[k] += phase * beta
        scale = 2.0 / np.real(np.vdot(u, u))
        if j > 0:
            block = r[: k + 1, :j]
            block -= np.outer(u, scale * (u.conj() @ block))
        r[:k, j] = 0.0
        r[k, j] = -phase * beta
        if yw is not None:
            yw[: k + 1] -= u * (scale * np.vdot(u, yw[: k + 1]))
        reflections.append((k, u, scale))

    # Accumulate the thin Q = H_{n-1} ... H_0 [:, m-n:] by replaying the
    # reflections, innermost first, on the trailing identity columns.
    q = np.zeros((m, n), dtype=np.complex128)
    q[m - n :, :] = np.eye(n)
    for k, u, scale in reversed(reflections):
        block = q[: k + 1, :]
        block -= np.outer(u, scale * (u.conj() @ block))

    low = r[m - n :, :]
    dphase = np.diag(low).copy()
    dphase /= np.abs(dphase)
    el = dphase.conj()[:, None] * low
    np.fill_diagonal(el, pivots)  # exact real positive diagonal
    el[np.triu_indices(n, 1)] = 0.0
    q *= dphase[None, :]
    y_rot = dphase.conj() * yw[m - n :] if yw is not None else None
    return QLFactors(Q=q, L=el, y_rot=y_rot)


def gauss_eliminate_lower(s):
    """Gauss transforms reducing a lower-triangular S to its diagonal.

    Returns (E, d) with E = E_{k-1} ... E_1 unit lower triangular such that
    E @ S = diag(S) exactly, and d = diag(S).  Each transform subtracts
    multiples tau_i = s_ik / s_kk of row k; at that point row k of the work
    matrix is s_kk * e_k, so no other column is disturbed and no inverse is
    ever formed.
    """
    s = as_cmatrix(s, "S")
    k_dim = s.shape[0]
    if s.shape[0] != s.shape[1]:
        raise ValueError(f"S must be square, got {s.shape}")
    if np.any(np.triu(s, 1) != 0):
        raise ValueError("S must be lower triangular")
    d = np.diag(s).copy()
    for k in range(k_dim):
        if d[k] == 0:
            raise SingularPivot(f"zero diagonal pivot at index {k}", index=k)
    e = np.eye(k_dim, dtype=np.complex128)
    for k in range(k_dim - 1):
        tau = s[k + 1 :, k] / s[k, k]
        e[k + 1 :, : k + 1] -= np.outer(tau, e[k, : k + 1])
    return e, d


def tri_solve_lower(el, b):
    """Solve L x = b for lower-triangular L by forward substitution."""
    el = as_cmatrix(el, "L")
    b = as_cvector(b, "b")
    n = el.shape[0]
    if el.shape[1] != n or b.shape[0] != n:
        raise ValueError("dimension mismatch in triangular solve")
    x = np.zeros(n, dtype=np.complex128)
    for i in range(n):
        if el[i, i] == 0:
            raise SingularPivot(f"zero diagonal pivot at index {i}", index=i)
        x[i] = (b[i] - el[i, :i] @ x[:i]) / el[i, i]
    return x


def tri_inverse_lower(el):
    """Inverse of a lower-triangular matrix, one forward solve per column."""
    el = as_cmatrix(el, "L")
    n = el.shape[0]
    inv = np.zeros((n, n), dtype=np.complex128)
    eye = np.eye(n)
    for j in range(n):
        inv[:, j] = tri_solve_lower(el, eye[:, j])
    inv[np.triu_indices(n, 1)] = 0.0
    return inv


def singular_values(a):
    """Singular values by one-sided Jacobi, sorted descending.

    Column pairs are rotated until every pairwise inner product vanishes
    relative to the column norms; the column norms are then the singular
    values.  Quadratic convergence makes a handful of sweeps enough for the
    matrix sizes used here.
    """
    a = as_cmatrix(a, "A")
    w = a.copy() if a.shape[0] >= a.shape[1] else a.conj().T.copy()
    n = w.shape[1]
    for _ in range(60):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                wp = w[:, p]
                wq = w[:, q]
                app = np.real(np.vdot(wp, wp))
                aqq = np.real(np.vdot(wq, wq))
                apq = np.vdot(wp, wq)
                if app == 0.0 or aqq == 0.0 or apq == 0.0:
                    continue
                rel = abs(apq) / math.sqrt(app * aqq)
                off = max(off, rel)
                if rel <= 1e-15:
                    continue
                phase = apq / abs(apq)
                tau = (aqq - app) / (2.0 * abs(apq))
                t = 1.0 / (tau + math.copysign(math.hypot(1.0, tau), tau))
                c = 1.0 / math.hypot(1.0, t)
                s_ = c * t
                new_p = c * wp - s_ * phase.conjugate() * wq
                new_q = s_ * wp + c * phase.conjugate() * wq
                w[:, p] = new_p
                w[:, q] = new_q
        if off <= 1e-14:
            break
    sv = np.sqrt(np.sum(np.abs(w) ** 2, axis=0))
    sv.sort()
    return sv[::-1].copy()
