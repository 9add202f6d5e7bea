"""Achievable-information-rate bounds and their numerical verification.

Closed forms (all reported in bits, internal logs natural):

  capacity          log2 det(I + beta H^H H)
  punctured bound   log2 det(I + beta Lp^H Lp)
                      - Tr{(I - Wp Wp^H)(I + beta Lp Lp^H)^{-1}} / ln 2
  augmented bound   Nt log2 Es + 2 sum log2 diag(Lap)
  gap to capacity   sum_k log2(s_kk^2 ||row_k(Sa^{-1}) below diag||^2 + 1)

The Monte-Carlo estimator averages log2 p_model(y|x) - log2 p_model(y) over
draws from the true channel; for Gaussian inputs the model marginal has a
closed Gaussian-integral form, for finite inputs it is an exact sum over
the alphabet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .augment import build_augmented, mmse_filter
from .constellation import Constellation
from .errors import GuardExceeded
from .linalg import as_cmatrix, ql_decompose, tri_inverse_lower
from .puncture import puncture_ql_factors
from .rng import substream

LN2 = math.log(2.0)
FINITE_INPUT_GUARD = 1 << 20


@dataclass
class AirPoint:
    """One point of a rate-versus-SNR sweep.

    ``trials`` counts the random draws behind the value (0 for a pure
    closed form on a fixed channel).  Closed-form bounds are nonnegative
    for any positive SNR, so a negative rate here is a hard error.
    """

    snr_db: float
    rate: float
    detector: str
    nu: int
    input: str
    trials: int
    stderr: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.rate) or not math.isfinite(self.stderr):
            raise ValueError(f"non-finite rate point: {self}")


def capacity_awgn(h, beta) -> float:
    """AWGN capacity log2 det(I + beta H^H H) in bits per channel use."""
    h = as_cmatrix(h, "H")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    nt = h.shape[1]
    _sign, logdet = np.linalg.slogdet(np.eye(nt) + beta * (h.conj().T @ h))
    return logdet / LN2


def ilb_wld(lp, wp, beta) -> float:
    """Rate lower bound of the punctured (unaugmented) detector, in bits."""
    lp = as_cmatrix(lp, "Lp")
    wp = as_cmatrix(wp, "Wp")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    nt = lp.shape[0]
    eye = np.eye(nt)
    _sign, logdet = np.linalg.slogdet(eye + beta * (lp.conj().T @ lp))
    resolvent = np.linalg.inv(eye + beta * (lp @ lp.conj().T))
    trace = np.real(np.trace((eye - wp @ wp.conj().T) @ resolvent))
    return (logdet - trace) / LN2


def ilb_awld(lap, es) -> float:
    """Rate lower bound of the augmented detector: Nt log2 Es + log2 det(Lap^H Lap).

    Evaluated stably from the real positive diagonal of the punctured
    triangular factor.
    """
    lap = as_cmatrix(lap, "Lap")
    nt = lap.shape[0]
    diag = np.real(np.diag(lap))
    if np.any(diag <= 0):
        raise ValueError("Lap must carry a real positive diagonal")
    return (nt * math.log(es) + 2.0 * float(np.sum(np.log(diag)))) / LN2


def gap_awld(sa, nu) -> float:
    """Gap of the augmented bound to capacity, from the child block of La.

    Sums log2(s_kk^2 ||[Sa^{-1}]_k-bar||^2 + 1) over the child rows, where
    [Sa^{-1}]_k-bar collects the first k-1 entries of row k of Sa^{-1}.
    ``nu`` is the puncturing order the block belongs to (Sa has Nt - nu
    rows); it does not enter the sum.
    """
    sa = as_cmatrix(sa, "Sa")
    del nu
    sinv = tri_inverse_lower(sa)
    total = 0.0
    for k in range(sa.shape[0]):
        off = np.sum(np.abs(sinv[k, :k]) ** 2)
        total += math.log(abs(sa[k, k]) ** 2 * off + 1.0)
    return total / LN2


def mmse_rate_gaussian(h, beta) -> float:
    """Per-layer linear-MMSE rate sum log2(1 + SINR_n), Gaussian inputs."""
    h = as_cmatrix(h, "H")
    nt = h.shape[1]
    resolvent = np.linalg.inv(np.eye(nt) + beta * (h.conj().T @ h))
    return float(np.sum(-np.log(np.real(np.diag(resolvent)))) / LN2)


def zf_rate_gaussian(h, beta) -> float:
    """Per-layer zero-forcing rate sum log2(1 + beta / [(H^H H)^{-1}]_nn)."""
    h = as_cmatrix(h, "H")
    gram_inv = np.linalg.inv(h.conj().T @ h)
    snr = beta / np.real(np.diag(gram_inv))
    return float(np.sum(np.log1p(snr)) / LN2)


def _logsumexp_rows(a):
    m = a.max(axis=1)
    return m + np.log(np.sum(np.exp(a - m[:, None]), axis=1))


def _model_terms(model, decomp, hp, es, n0, ys):
    """Per-trial linear term B (rows b^H) and quadratic kernel of the model.

    Returns (B, gmat, extra) such that
    ln p(y|x) = 2 Re{b^H x} - x^H gmat x + extra * ||x||^2.
    """
    nt = hp.shape[1]
    if model == "wld":
        fac = ql_decompose(hp)
        y_rot = ys @ fac.Q.conj()
        y_punct = np.concatenate(
            [y_rot[:, : decomp.nu], y_rot[:, decomp.nu :] @ decomp.Wp[decomp.nu :, decomp.nu :].T],
            axis=1,
        )
        bmat = (y_punct @ decomp.Lp.conj()) / n0
        gmat = decomp.Lp.conj().T @ decomp.Lp / n0
        return bmat, gmat, 0.0
    if model == "awld":
        wm = mmse_filter(hp, es, n0, "direct")
        y_tilde = ys @ (decomp.Lap @ wm).T
        bmat = y_tilde @ decomp.Lap.conj()
        gmat = decomp.Lap.conj().T @ decomp.Lap
        return bmat, gmat, 1.0 / es
    raise ValueError(f"unknown model {model!r}")


def ilb_monte_carlo(model, decomp, h, es, n0, source, trials, seed):
    """Monte-Carlo estimate of the model's rate bound, with standard error.

    Draws (x, y) from the true channel -- ``source`` is either 'gaussian'
    (x ~ CN(0, Es I)) or a Constellation (x uniform on the alphabet) -- and
    averages log2 p_model(y|x) - log2 p_model(y).  The Gaussian-input model
    marginal is evaluated in closed form; the finite-input marginal is an
    exact sum over the alphabet (guarded at 2^20 vectors).

    Returns (estimate_bits, stderr_bits).
    """
    h = as_cmatrix(h, "H")
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    hp = h[:, decomp.perm]
    nr, nt = hp.shape
    rng = substream(seed)

    finite = isinstance(source, Constellation)
    if finite:
        if source.size**nt > FINITE_INPUT_GUARD:
            raise GuardExceeded(
                f"{source.size}^{nt} alphabet vectors exceed the marginalization guard"
            )
        idx = rng.integers(0, source.size, size=(trials, nt))
        xs = source.points[idx]
    elif source == "gaussian":
        xs = math.sqrt(es / 2.0) * (
            rng.standard_normal((trials, nt)) + 1j * rng.standard_normal((trials, nt))
        )
    else:
        raise ValueError(f"source must be 'gaussian' or a Constellation, got {source!r}")
    noise = math.sqrt(n0 / 2.0) * (
        rng.standard_normal((trials, nr)) + 1j * rng.standard_normal((trials, nr))
    )
    ys = xs @ hp.T + noise

    bmat, gmat, extra = _model_terms(model, decomp, hp, es, n0, ys)
    ln_cond = (
        2.0 * np.real(np.sum(bmat.conj() * xs, axis=1))
        - np.real(np.einsum("ti,ij,tj->t", xs.conj(), gmat, xs))
        + extra * np.sum(np.abs(xs) ** 2, axis=1)
    )
    if finite:
        combos = _all_vectors(source, nt)
        quad = np.real(np.einsum("ci,ij,cj->c", combos.conj(), gmat, combos))
        quad -= extra * np.sum(np.abs(combos) ** 2, axis=1)
        ln_marg = np.empty(trials)
        step = max(1, (1 << 22) // combos.shape[0])
        for lo in range(0, trials, step):
            hi = min(lo + step, trials)
            mus = 2.0 * np.real(bmat[lo:hi] @ combos.conj().T) - quad[None, :]
            ln_marg[lo:hi] = _logsumexp_rows(mus)
        ln_marg -= nt * math.log(source.size)
    else:
        # Gaussian-integral kernel: the prior contributes I/Es, the model's
        # explicit ||x||^2 term (awld) cancels part of it.
        amat = gmat + (1.0 / es - extra) * np.eye(nt)
        _sign, logdet_a = np.linalg.slogdet(amat)
        a_inv = np.linalg.inv(amat)
        quad = np.real(np.einsum("ti,ij,tj->t", bmat.conj(), a_inv, bmat))
        ln_marg = -nt * math.log(es) - logdet_a + quad

    deltas = (ln_cond - ln_marg) / LN2
    estimate = float(np.mean(deltas))
    stderr = float(np.std(deltas, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return estimate, stderr


def _all_vectors(constellation, nt):
    """All |X|^nt symbol vectors, enumeration order matching index decode."""
    size = constellation.size
    grids = np.meshgrid(*([np.arange(size)] * nt), indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    return constellation.points[idx]


@dataclass
class Theorem3Report:
    """Perturbation probe of the optimality of the punctured augmented factor."""

    objective_nats: float  # structured-model objective at the produced factor
    ilb_bits: float  # closed-form augmented bound, for cross-checking
    objective_vs_ilb: float  # |objective/ln2 - ilb_bits|
    max_improvement: float  # best perturbed objective minus the optimum (nats)
    block_residuals: tuple  # (parent, coupling, diagonal) block mismatches


def _structured_objective(j, m_inv, es, nt):
    sign, logdet = np.linalg.slogdet(j.conj().T @ j)
    if sign <= 0:
        return -np.inf
    trace = np.real(np.sum((j @ m_inv) * j.conj()))
    return nt * math.log(es) + logdet - trace + nt


def verify_theorem3(h, nu, es, n0, perturb_trials=1000, seed=0) -> Theorem3Report:
    """Probe the structured rate objective around the punctured factor.

    Evaluates Nt ln Es + ln det(J^H J) - Tr{(La^H La)^{-1} J^H J} + Nt at
    J = Lap and at random perturbations that respect the punctured
    structure (lower-triangular parent block, dense coupling block, real
    diagonal child block) at two step sizes.  Also checks that the
    closed-form optimal blocks reproduce Lap.
    """
    h = as_cmatrix(h, "H")
    nt = h.shape[1]
    fac = ql_decompose(build_augmented(h, es, n0))
    la = fac.L
    wap, lap, _y, sigma = puncture_ql_factors(la, None, nu)
    del wap
    m_inv = np.linalg.inv(la.conj().T @ la)

    base = _structured_objective(lap, m_inv, es, nt)
    ilb_bits = ilb_awld(lap, es)

    rng = substream(seed)
    n_child = nt - nu
    best_gain = -np.inf
    for _ in range(perturb_trials):
        delta = np.zeros((nt, nt), dtype=np.complex128)
        d1 = rng.standard_normal((nu, nu)) + 1j * rng.standard_normal((nu, nu))
        delta[:nu, :nu] = np.tril(d1)
        delta[nu:, :nu] = rng.standard_normal((n_child, nu)) + 1j * rng.standard_normal(
            (n_child, nu)
        )
        delta[nu:, nu:] = np.diag(rng.standard_normal(n_child))
        delta /= np.linalg.norm(delta)
        for eps in (1e-2, 1e-1):
            gain = _structured_objective(lap + eps * delta, m_inv, es, nt) - base
            best_gain = max(best_gain, gain)

    sa = la[nu:, nu:]
    ra = la[nu:, :nu]
    sa_inv = tri_inverse_lower(sa)
    j3_opt = 1.0 / np.sqrt(np.real(np.diag(sa_inv @ sa_inv.conj().T)))
    j2_opt = j3_opt[:, None] * (sa_inv @ ra)
    residuals = (
        float(np.abs(lap[:nu, :nu] - la[:nu, :nu]).max()),
        float(np.abs(lap[nu:, :nu] - j2_opt).max()),
        float(np.abs(np.diag(lap)[nu:] - j3_opt).max()),
    )
    del sigma
    return Theorem3Report(
        objective_nats=base,
        ilb_bits=ilb_bits,
        objective_vs_ilb=abs(base / LN2 - ilb_bits),
        max_improvement=best_gain,
        block_residuals=residuals,
    )


@dataclass
class Lemma2Report:
    f_at_optimum: float
    closed_form: float  # -sum ln v_kk^2 - n from the Cholesky factor of V V^H
    max_improvement: float


def lemma2_trace_opt(v, perturb_trials=1000, seed=0) -> Lemma2Report:
    """Check that U = V^{-1} maximizes ln det(U U^H) - ||U V||_F^2.

    The optimum value is -sum_k ln v_kk^2 - n with v_kk the diagonal of the
    Cholesky factor of V V^H; random dense perturbations of V^{-1} must not
    improve on it.
    """
    v = as_cmatrix(v, "V")
    n = v.shape[0]

    def f(u):
        sign, logdet = np.linalg.slogdet(u @ u.conj().T)
        if sign <= 0:
            return -np.inf
        return logdet - np.real(np.sum(np.abs(u @ v) ** 2))

    u_opt = np.linalg.inv(v)
    f_opt = f(u_opt)
    chol = np.linalg.cholesky(v @ v.conj().T)
    closed = -float(np.sum(np.log(np.real(np.diag(chol)) ** 2))) - n

    rng = substream(seed)
    best_gain = -np.inf
    for _ in range(perturb_trials):
        delta = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        delta /= np.linalg.norm(delta)
        for eps in (1e-2, 1e-1):
            best_gain = max(best_gain, f(u_opt + eps * delta) - f_opt)
    return Lemma2Report(f_at_optimum=f_opt, closed_form=closed, max_improvement=best_gain)
