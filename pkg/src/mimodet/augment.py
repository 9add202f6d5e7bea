"""MMSE-augmented channel construction and its punctured decomposition.

Stacking H / sqrt(N0) on top of I / sqrt(Es) gives an augmented channel
whose QL factor La satisfies La^H La = (1/N0) H^H H + (1/Es) I, i.e. the
regularized Gram matrix of the MMSE filter.  Because the bottom block of the
augmented Q is proportional to La^{-1}, the MMSE-prefiltered observation and
the punctured factor both fall out of one QL pass plus Gauss elimination; no
matrix is ever inverted on the production path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidPower, RankDeficient
from .linalg import as_cmatrix, as_cvector, ql_decompose
from .puncture import _as_perm, _check_nu, puncture_ql_factors


@dataclass
class AugmentedDecomposition:
    """Punctured augmented factor and MMSE-prefiltered observation.

    ``La`` is the full augmented QL factor, ``Lap = Wap @ La`` its order-nu
    punctured form, and ``y_tilde = Lap Wmmse y`` the prefiltered
    observation, obtained as Wap (1/sqrt(N0)) Qa1^H y without forming the
    MMSE filter.
    """

    nu: int
    perm: np.ndarray
    La: np.ndarray
    Lap: np.ndarray
    Wap: np.ndarray
    y_tilde: np.ndarray | None
    es: float
    n0: float


def _check_powers(es, n0):
    if not (es > 0 and math.isfinite(es)):
        raise InvalidPower(f"Es must be positive and finite, got {es}")
    if not (n0 > 0 and math.isfinite(n0)):
        raise InvalidPower(f"N0 must be positive and finite, got {n0}")


def build_augmented(h, es, n0):
    """Stack H / sqrt(N0) over I / sqrt(Es) into the augmented channel."""
    h = as_cmatrix(h, "H")
    _check_powers(es, n0)
    n = h.shape[1]
    return np.vstack([h / math.sqrt(n0), np.eye(n, dtype=np.complex128) / math.sqrt(es)])


def mmse_filter(h, es, n0, route="direct"):
    """MMSE filter (H^H H + alpha I)^{-1} H^H with alpha = N0 / Es.

    ``route='direct'`` solves the regularized normal equations;
    ``route='via_ql'`` forms sqrt(Es/N0) Qa2 Qa1^H from the QL factors of
    the augmented channel.  The two agree to working precision and serve as
    oracles for each other.
    """
    h = as_cmatrix(h, "H")
    _check_powers(es, n0)
    nr, nt = h.shape
    if route == "direct":
        gram = h.conj().T @ h + (n0 / es) * np.eye(nt)
        try:
            return np.linalg.solve(gram, h.conj().T)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - alpha > 0 keeps gram PD
            raise RankDeficient(str(exc)) from exc
    if route == "via_ql":
        fac = ql_decompose(build_augmented(h, es, n0))
        qa1 = fac.Q[:nr, :]
        qa2 = fac.Q[nr:, :]
        return math.sqrt(es / n0) * (qa2 @ qa1.conj().T)
    raise ValueError(f"unknown route {route!r}")


def awl_decompose(h, y, nu, es, n0, perm=None) -> AugmentedDecomposition:
    """Punctured augmented decomposition feeding the AWLD detector.

    Runs the QL decomposition on the augmented channel with the zero-padded
    observation [y; 0] / sqrt(N0); the rotated byproduct is then exactly
    (1/sqrt(N0)) Qa1^H y, and since La Qa2 = I / sqrt(Es), applying the
    puncturing row operations to it yields y_tilde = Lap Wmmse y with no
    MMSE filter and no inverse ever formed.
    """
    h = as_cmatrix(h, "H")
    nr, n = h.shape
    perm = _as_perm(perm, n)
    nu = _check_nu(nu, n)
    ha = build_augmented(h[:, perm], es, n0)
    ya = None
    if y is not None:
        y = as_cvector(y, "y")
        if y.shape[0] != nr:
            raise ValueError(f"y has length {y.shape[0]}, expected {nr}")
        ya = np.concatenate([y, np.zeros(n)]) / math.sqrt(n0)
    # Ha has full column rank for any Es, N0 > 0, so QL cannot raise here.
    fac = ql_decompose(ha, ya)
    wap, lap, y_tilde, _sigma = puncture_ql_factors(fac.L, fac.y_rot, nu)
    return AugmentedDecomposition(
        nu=nu, perm=perm, La=fac.L, Lap=lap, Wap=wap, y_tilde=y_tilde, es=float(es), n0=float(n0)
    )
