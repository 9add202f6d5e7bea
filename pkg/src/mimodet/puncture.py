"""Order-nu puncturing of lower-triangular channel factors.

Puncturing zeroes every sub-diagonal entry of the factor to the right of the
first ``nu`` (parent) columns, so each remaining (child) row couples only to
the parents and to its own diagonal.  Two routes are provided: the direct
matrix formulas built from an explicit inverse of the trailing block, and an
inverse-free route that reduces the trailing block with Gauss transforms and
replays the identical row operations on the rotated observation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_cmatrix, as_cvector, gauss_eliminate_lower, ql_decompose, tri_inverse_lower


@dataclass
class PuncturedDecomposition:
    """Punctured factor of a channel, plus the matching filtered observation.

    ``perm`` is the layer permutation applied to the channel columns before
    factorization; the first ``nu`` permuted layers are the parents.
    ``sigma`` is the real positive diagonal of the punctured child block
    (the diagonal of Sigma), and ``y_punct`` is Wp Q^H y.
    """

    nu: int
    perm: np.ndarray
    Lp: np.ndarray
    Wp: np.ndarray
    y_punct: np.ndarray | None
    sigma: np.ndarray


def _check_lower_square(el, name):
    el = as_cmatrix(el, name)
    n = el.shape[0]
    if el.shape[1] != n:
        raise ValueError(f"{name} must be square, got {el.shape}")
    if np.any(np.triu(el, 1) != 0):
        raise ValueError(f"{name} must be lower triangular")
    return el, n


def _check_nu(nu, n):
    if not 1 <= nu <= n - 1:
        raise ValueError(f"puncturing order must satisfy 1 <= nu <= {n - 1}, got {nu}")
    return int(nu)


def _as_perm(perm, n):
    if perm is None:
        return np.arange(n)
    p = np.asarray(perm, dtype=int)
    if sorted(p.tolist()) != list(range(n)):
        raise ValueError(f"perm must be a permutation of 0..{n - 1}, got {p}")
    return p


def puncture_matrix(el, nu):
    """Direct-formula puncturing of a lower-triangular factor.

    With L partitioned into [[P, 0], [R, S]] after the first ``nu`` columns,
    the puncturing filter is Wp = blkdiag(I, Sigma S^-1) where
    Sigma = diag(S^-1 S^-H)^{-1/2}, which gives diag(Wp Wp^H) = I.  The
    punctured factor Lp = Wp L then carries [[P, 0], [Sigma S^-1 R, Sigma]];
    the structural zeros and the real diagonal Sigma of the child block are
    assigned exactly.

    Returns (Wp, Lp, dp, sigma) where ``dp`` is the diagonal of the scaling
    matrix Dp = diag(L)^-1 blkdiag(I, Sigma) and ``sigma`` the diagonal of
    Sigma, both as 1-D arrays.
    """
    el, n = _check_lower_square(el, "L")
    nu = _check_nu(nu, n)
    s = el[nu:, nu:]
    sinv = tri_inverse_lower(s)
    sigma = 1.0 / np.sqrt(np.sum(np.abs(sinv) ** 2, axis=1))
    wsub = sigma[:, None] * sinv

    wp = np.zeros((n, n), dtype=np.complex128)
    wp[:nu, :nu] = np.eye(nu)
    wp[nu:, nu:] = wsub

    lp = np.zeros((n, n), dtype=np.complex128)
    lp[:nu, :] = el[:nu, :]
    lp[nu:, :nu] = wsub @ el[nu:, :nu]
    lp[nu:, nu:] = np.diag(sigma)

    dp = np.concatenate([np.ones(nu), sigma]) / np.diag(el)
    return wp, lp, dp, sigma


def puncture_ql_factors(el, y_rot, nu):
    """Inverse-free puncturing of a QL factor via Gauss elimination.

    Gauss transforms E null the sub-diagonal of the trailing block S, giving
    Sigma S^-1 = Sigma_E E with Sigma_E the inverse row norms of E; the same
    row operations (then the Sigma_E scaling) are applied to the rotated
    observation.  Row norms are accumulated directly, E E^H is never formed.

    Returns (Wp, Lp, y_punct, sigma); ``y_punct`` is None when ``y_rot`` is.
    """
    el, n = _check_lower_square(el, "L")
    nu = _check_nu(nu, n)
    e, d = gauss_eliminate_lower(el[nu:, nu:])
    sigma_e = 1.0 / np.sqrt(np.sum(np.abs(e) ** 2, axis=1))
    wsub = sigma_e[:, None] * e

    wp = np.zeros((n, n), dtype=np.complex128)
    wp[:nu, :nu] = np.eye(nu)
    wp[nu:, nu:] = wsub

    lp = np.zeros((n, n), dtype=np.complex128)
    lp[:nu, :] = el[:nu, :]
    lp[nu:, :nu] = wsub @ el[nu:, :nu]
    sigma = sigma_e * np.real(d)
    lp[nu:, nu:] = np.diag(sigma)

    y_punct = None
    if y_rot is not None:
        y_rot = as_cvector(y_rot, "y_rot")
        y_punct = np.concatenate([y_rot[:nu], wsub @ y_rot[nu:]])
    return wp, lp, y_punct, sigma


def wl_decompose(h, y, nu, perm=None) -> PuncturedDecomposition:
    """Punctured decomposition of a channel, computed inverse-free.

    Permutes the channel columns so the parent layers come first, runs the
    QL decomposition with the observation rotated in the same pass, and
    punctures the factor with Gauss transforms, replaying the identical row
    operations on Q^H y.  Equals ``puncture_matrix`` applied to the QL
    factor, without ever inverting the trailing block.
    """
    h = as_cmatrix(h, "H")
    n = h.shape[1]
    perm = _as_perm(perm, n)
    nu = _check_nu(nu, n)
    fac = ql_decompose(h[:, perm], y)
    wp, lp, y_punct, sigma = puncture_ql_factors(fac.L, fac.y_rot, nu)
    return PuncturedDecomposition(nu=nu, perm=perm, Lp=lp, Wp=wp, y_punct=y_punct, sigma=sigma)
