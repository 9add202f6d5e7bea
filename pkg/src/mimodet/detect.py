"""Soft-output MIMO detectors.

All detectors emit max-log LLRs, one per transmitted bit, laid out
layer-major / bit-minor.  Single-shot tree detection works in the layer
order of the decomposition it is given; the multi-round driver maps results
back to the original layer order.

Three detection models share one metric convention (larger is better):

  true   -(1/N0) ||y - H x||^2
  wld    -(1/N0) ||Wp (Q^H y - L x)||^2   ==  -(1/N0) ||y_punct - Lp x||^2
  awld   (1/Es) ||x||^2 - ||y_tilde - Lap x||^2
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .augment import AugmentedDecomposition, awl_decompose, mmse_filter
from .errors import GuardExceeded, RankDeficient
from .linalg import as_cmatrix, as_cvector, ql_decompose
from .puncture import PuncturedDecomposition, puncture_matrix, wl_decompose

BRUTEFORCE_GUARD = 1 << 20
LLR_CLIP = 50.0  # used only when a bit hypothesis was never evaluated


@dataclass
class TrueContext:
    """Observation, channel and noise power for the unpunctured metric."""

    h: np.ndarray
    y: np.ndarray
    n0: float


@dataclass
class WldContext:
    """Punctured decomposition plus the noise power its metric is scaled by."""

    decomp: PuncturedDecomposition
    n0: float


@dataclass
class AwldContext:
    decomp: AugmentedDecomposition


@dataclass
class DetectionResult:
    llrs: np.ndarray  # (n_layers * bits_per_symbol,), layer-major bit-minor
    hard: np.ndarray  # (n_layers,) constellation point indices
    best_metric: float


def _metrics_batch(model, context, xs):
    """Model metric for a batch of symbol vectors, shape (T, nt) -> (T,)."""
    if model == "true":
        if not isinstance(context, TrueContext):
            raise ValueError("true model needs a TrueContext")
        resid = context.y[None, :] - xs @ context.h.T
        return -np.sum(np.abs(resid) ** 2, axis=1) / context.n0
    if model == "wld":
        if not isinstance(context, WldContext):
            raise ValueError("wld model needs a WldContext")
        d = context.decomp
        resid = d.y_punct[None, :] - xs @ d.Lp.T
        return -np.sum(np.abs(resid) ** 2, axis=1) / context.n0
    if model == "awld":
        if not isinstance(context, AwldContext):
            raise ValueError("awld model needs an AwldContext")
        d = context.decomp
        resid = d.y_tilde[None, :] - xs @ d.Lap.T
        return np.sum(np.abs(xs) ** 2, axis=1) / d.es - np.sum(np.abs(resid) ** 2, axis=1)
    raise ValueError(f"unknown model {model!r}")


def metric_eval(model, context, x) -> float:
    """Detection metric of one symbol vector under the given model."""
    x = as_cvector(x, "x")
    return float(_metrics_batch(model, context, x[None, :])[0])


def _decode_indices(start, stop, size, nt):
    """Mixed-radix decode of enumeration indices into per-layer point indices."""
    span = np.arange(start, stop)
    idx = np.empty((span.size, nt), dtype=np.int64)
    for n in range(nt - 1, -1, -1):
        idx[:, n] = span % size
        span = span // size
    return idx


_ENUM_CACHE: dict[tuple, np.ndarray] = {}


def _enumerated_vectors(constellation, nt):
    """All |X|^nt symbol vectors in mixed-radix order, cached per alphabet."""
    key = (constellation.name, constellation.size, nt)
    if key not in _ENUM_CACHE:
        idx = _decode_indices(0, constellation.size**nt, constellation.size, nt)
        _ENUM_CACHE[key] = constellation.points[idx]
    return _ENUM_CACHE[key]


def bruteforce_maxlog_llr(model, context, constellation, nt) -> DetectionResult:
    """Exhaustive max-log LLRs: max over x with the bit pinned to each value.

    Enumerates all |X|^nt symbol vectors (chunked to bound memory) under the
    requested model.  Guarded at 2^20 combinations.
    """
    size = constellation.size
    q = constellation.bits_per_symbol
    total = size**nt
    if total > BRUTEFORCE_GUARD:
        raise GuardExceeded(f"{size}^{nt} = {total} exceeds brute-force guard {BRUTEFORCE_GUARD}")
    xs = _enumerated_vectors(constellation, nt)
    metrics = np.empty(total)
    chunk = 1 << 15
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        metrics[start:stop] = _metrics_batch(model, context, xs[start:stop])
    top = int(np.argmax(metrics))
    top_idx = _decode_indices(top, top + 1, size, nt)[0]

    # Per-layer maxima over all other layers: the mixed-radix enumeration
    # order makes these axis reductions of the metric grid.
    grid = metrics.reshape((size,) * nt)
    llrs = np.empty(nt * q)
    for n in range(nt):
        axes = tuple(a for a in range(nt) if a != n)
        point_max = grid.max(axis=axes) if axes else grid
        for qq in range(q):
            on = constellation.bit_labels[:, qq] == 1
            llrs[n * q + qq] = point_max[on].max() - point_max[~on].max()
    return DetectionResult(llrs=llrs, hard=top_idx, best_metric=float(metrics[top]))


def _bit_groups(constellation):
    """Point-index lists per (bit position, bit value)."""
    q = constellation.bits_per_symbol
    return [
        [np.flatnonzero(constellation.bit_labels[:, qq] == b) for b in (0, 1)] for qq in range(q)
    ]


def _masked_llr(values, bit_of_value):
    """max-log LLR of one bit from candidate metrics and their bit values."""
    on = values[bit_of_value == 1]
    off = values[bit_of_value == 0]
    if on.size == 0:
        return -LLR_CLIP
    if off.size == 0:
        return LLR_CLIP
    return float(on.max() - off.max())


def tree_detect(decomp, constellation, parent_mode="full", n0=None) -> DetectionResult:
    """Tree detection on a punctured factor (puncturing order 1 or 2).

    The parent layers are enumerated; thanks to the punctured structure each
    child row depends only on the parents and its own symbol, so children
    are optimized independently per parent hypothesis by scanning the
    constellation, keeping the best metric under both hypotheses of every
    child bit.  For order 1 (and order 2 in 'full' mode) the LLRs are exact
    max-log values of the punctured model.

    For order 2, ``parent_mode`` controls the second parent layer: 'full'
    enumerates it, 'z2' takes the single sliced ZF value, 'x4' scans the 4
    constellation points nearest the unsliced ZF estimate.
    """
    if isinstance(decomp, PuncturedDecomposition):
        if n0 is None:
            raise ValueError("tree detection on a WLD decomposition needs n0")
        scale = 1.0 / n0
        r = decomp.y_punct
        m = decomp.Lp
        inv_es = 0.0
    elif isinstance(decomp, AugmentedDecomposition):
        scale = 1.0
        r = decomp.y_tilde
        m = decomp.Lap
        inv_es = 1.0 / decomp.es
    else:
        raise ValueError(f"unsupported decomposition {type(decomp).__name__}")
    if r is None:
        raise ValueError("decomposition carries no filtered observation")
    nu = decomp.nu
    if nu not in (1, 2):
        raise ValueError(f"tree detection supports nu in {{1, 2}}, got {nu}")
    if parent_mode not in ("full", "z2", "x4"):
        raise ValueError(f"unknown parent_mode {parent_mode!r}")
    if parent_mode != "full" and nu != 2:
        raise ValueError(f"parent_mode {parent_mode!r} requires nu = 2")

    pts = constellation.points
    size = constellation.size
    q = constellation.bits_per_symbol
    nt = m.shape[0]
    groups = _bit_groups(constellation)

    # Parent hypothesis list: (P, nu) point indices.
    if nu == 1:
        pairs = np.arange(size)[:, None]
    elif parent_mode == "full":
        pairs = np.array(list(itertools.product(range(size), range(size))), dtype=np.int64)
    else:
        zf = (r[1] - m[1, 0] * pts) / m[1, 1]  # unsliced layer-2 estimate per first parent
        dist = np.abs(zf[:, None] - pts[None, :])
        if parent_mode == "z2":
            second = np.argmin(dist, axis=1)[:, None]
        else:
            second = np.argsort(dist, axis=1, kind="stable")[:, :4]
        first = np.repeat(np.arange(size), second.shape[1])
        pairs = np.column_stack([first, second.ravel()])

    xp = pts[pairs]  # (P, nu)
    par_resid = r[None, :nu] - xp @ m[:nu, :nu].T
    par_metric = -scale * np.sum(np.abs(par_resid) ** 2, axis=1)
    if inv_es:
        par_metric = par_metric + inv_es * np.sum(np.abs(xp) ** 2, axis=1)

    n_child = nt - nu
    child_c = r[None, nu:] - xp @ m[nu:, :nu].T  # (P, n_child)
    diag = np.real(np.diag(m))[nu:]
    # scores[p, i, k]: metric contribution of child i choosing point k
    scores = -scale * np.abs(child_c[:, :, None] - diag[None, :, None] * pts[None, None, :]) ** 2
    if inv_es:
        scores = scores + inv_es * np.abs(pts)[None, None, :] ** 2
    if n_child:
        child_best = scores.max(axis=2)
        child_arg = scores.argmax(axis=2)
        totals = par_metric + child_best.sum(axis=1)
    else:
        child_best = np.zeros((pairs.shape[0], 0))
        child_arg = np.zeros((pairs.shape[0], 0), dtype=np.int64)
        totals = par_metric

    top = int(np.argmax(totals))
    hard = np.empty(nt, dtype=np.int64)
    hard[:nu] = pairs[top]
    hard[nu:] = child_arg[top]

    llrs = np.empty(nt * q)
    for j in range(nu):
        bit_vals = constellation.bit_labels[pairs[:, j]]
        for qq in range(q):
            llrs[j * q + qq] = _masked_llr(totals, bit_vals[:, qq])
    for i in range(n_child):
        base = totals - child_best[:, i]
        for qq in range(q):
            hyp = np.empty(2)
            for b in (0, 1):
                hyp[b] = (base + scores[:, i, groups[qq][b]].max(axis=1)).max()
            llrs[(nu + i) * q + qq] = hyp[1] - hyp[0]
    return DetectionResult(llrs=llrs, hard=hard, best_metric=float(totals[top]))


def linear_detect(kind, h, y, constellation, es, n0) -> DetectionResult:
    """ZF / MMSE equalization with per-layer scalar max-log LLRs.

    Each layer is scalarized to a Gaussian channel with variance 1/rho_n:
    ZF uses rho_n = 1 / (N0 [(H^H H)^{-1}]_nn); MMSE removes the bias
    g_n = [Wmmse H]_nn and uses the standard biased-MMSE error variance
    Es (1 - g_n) / g_n.
    """
    h = as_cmatrix(h, "H")
    y = as_cvector(y, "y")
    nt = h.shape[1]
    if kind == "zf":
        gram = h.conj().T @ h
        try:
            gram_inv = np.linalg.inv(gram)
        except np.linalg.LinAlgError as exc:
            raise RankDeficient(str(exc)) from exc
        est = gram_inv @ (h.conj().T @ y)
        rho = 1.0 / (n0 * np.real(np.diag(gram_inv)))
    elif kind == "mmse":
        wm = mmse_filter(h, es, n0, "direct")
        gain = np.real(np.diag(wm @ h))
        est = (wm @ y) / gain
        rho = gain / (es * (1.0 - gain))
    else:
        raise ValueError(f"unknown linear detector {kind!r}")

    pts = constellation.points
    q = constellation.bits_per_symbol
    groups = _bit_groups(constellation)
    metrics = -rho[:, None] * np.abs(est[:, None] - pts[None, :]) ** 2  # (nt, |X|)
    hard = np.argmax(metrics, axis=1)
    llrs = np.empty(nt * q)
    for n in range(nt):
        for qq in range(q):
            llrs[n * q + qq] = metrics[n, groups[qq][1]].max() - metrics[n, groups[qq][0]].max()
    best = float(metrics[np.arange(nt), hard].sum())
    return DetectionResult(llrs=llrs, hard=hard, best_metric=best)


def _round_parent_sets(nt, nu):
    """Consecutive nu-layer parent sets covering all layers.

    When nu does not divide nt, the last round reuses trailing layers so
    every layer is a parent at least once.
    """
    sets = []
    start = 0
    while start < nt:
        if start + nu <= nt:
            sets.append(list(range(start, start + nu)))
        else:
            sets.append(list(range(nt - nu, nt)))
        start += nu
    return sets


def _round_perm(parents, nt):
    rest = [n for n in range(nt) if n not in parents]
    return np.array(parents + rest)


def _lord_round(h, y, n0, parents, constellation, bit_best, state):
    """One LORD round: QL, parent enumeration, ZF decision feedback children.

    Updates the global per-bit best metrics and the global best path; the
    path metric -(1/N0)||Q^H y - L x||^2 differs from the true metric by a
    projection constant that is identical for every round, so cross-round
    comparisons are valid.
    """
    nt = h.shape[1]
    nu = len(parents)
    perm = _round_perm(parents, nt)
    fac = ql_decompose(h[:, perm], y)
    el, yr = fac.L, fac.y_rot
    pts = constellation.points
    size = constellation.size

    combos = np.array(list(itertools.product(range(size), repeat=nu)), dtype=np.int64)
    paths = np.empty((combos.shape[0], nt), dtype=np.int64)
    paths[:, :nu] = combos
    xs = np.empty((combos.shape[0], nt), dtype=np.complex128)
    xs[:, :nu] = pts[combos]
    for i in range(nu, nt):
        resid = yr[i] - xs[:, :i] @ el[i, :i]
        choice = np.argmin(np.abs(resid[:, None] / el[i, i] - pts[None, :]), axis=1)
        paths[:, i] = choice
        xs[:, i] = pts[choice]
    metrics = -np.sum(np.abs(yr[None, :] - xs @ el.T) ** 2, axis=1) / n0

    labels = constellation.bit_labels
    q = labels.shape[1]
    for j in range(nt):
        orig = perm[j]
        bits = labels[paths[:, j]]
        for qq in range(q):
            for b in (0, 1):
                sel = metrics[bits[:, qq] == b]
                if sel.size:
                    bit_best[orig, qq, b] = max(bit_best[orig, qq, b], float(sel.max()))
    top = int(np.argmax(metrics))
    if metrics[top] > state["best_metric"]:
        state["best_metric"] = float(metrics[top])
        hard = np.empty(nt, dtype=np.int64)
        hard[perm] = paths[top]
        state["hard"] = hard


def multi_round_detect(
    detector, h, y, nu, constellation, es, n0, parent_mode="full"
) -> DetectionResult:
    """Multi-round detection: every layer serves as a parent in some round.

    Runs nt/nu rounds with consecutive parent sets.  ``wld`` and ``awld``
    rounds keep the LLRs of their parent bits only; ``lord`` additionally
    tracks the globally best and counter hypotheses of every bit across
    rounds.  The reported best_metric is the true-channel metric of the
    assembled hard decision.
    """
    h = as_cmatrix(h, "H")
    y = as_cvector(y, "y")
    nt = h.shape[1]
    q = constellation.bits_per_symbol
    if detector not in ("wld", "awld", "lord"):
        raise ValueError(f"unknown multi-round detector {detector!r}")

    llrs = np.full(nt * q, np.nan)
    hard = np.full(nt, -1, dtype=np.int64)
    if detector == "lord":
        bit_best = np.full((nt, q, 2), -np.inf)
        state = {"best_metric": -np.inf, "hard": None}
        for parents in _round_parent_sets(nt, nu):
            _lord_round(h, y, n0, parents, constellation, bit_best, state)
        for n in range(nt):
            for qq in range(q):
                on, off = bit_best[n, qq, 1], bit_best[n, qq, 0]
                if not np.isfinite(on):
                    llrs[n * q + qq] = -LLR_CLIP
                elif not np.isfinite(off):
                    llrs[n * q + qq] = LLR_CLIP
                else:
                    llrs[n * q + qq] = on - off
        hard = state["hard"]
    else:
        for parents in _round_parent_sets(nt, nu):
            perm = _round_perm(parents, nt)
            if detector == "wld":
                dec = wl_decompose(h, y, nu, perm)
                res = tree_detect(dec, constellation, parent_mode, n0=n0)
            else:
                dec = awl_decompose(h, y, nu, es, n0, perm)
                res = tree_detect(dec, constellation, parent_mode)
            for j, layer in enumerate(parents):
                if hard[layer] >= 0:
                    continue  # padded round revisits a layer: first round wins
                hard[layer] = res.hard[j]
                llrs[layer * q : (layer + 1) * q] = res.llrs[j * q : (j + 1) * q]
    best = metric_eval("true", TrueContext(h=h, y=y, n0=n0), constellation.points[hard])
    return DetectionResult(llrs=llrs, hard=hard, best_metric=best)


def select_layers(h, nu, es, n0, criterion="ilb_gaussian", detector="awld"):
    """Parent-layer selection.

    ``ilb_gaussian`` returns the single permutation whose parent set
    maximizes the Gaussian-input rate bound of the chosen detector (ties
    break to the lexicographically smallest index set); ``all_rounds``
    returns the list of multi-round permutations.
    """
    from .air import ilb_awld, ilb_wld  # local import: air depends on the decompositions only

    h = as_cmatrix(h, "H")
    nt = h.shape[1]
    if criterion == "all_rounds":
        return [_round_perm(p, nt) for p in _round_parent_sets(nt, nu)]
    if criterion != "ilb_gaussian":
        raise ValueError(f"unknown criterion {criterion!r}")
    if detector not in ("wld", "awld"):
        raise ValueError(f"layer selection supports wld or awld, got {detector!r}")
    combos = list(itertools.combinations(range(nt), nu))
    if len(combos) > 10_000:
        raise GuardExceeded(f"{len(combos)} parent sets exceed the selection guard")
    best_perm = None
    best_val = -np.inf
    for subset in combos:
        perm = _round_perm(list(subset), nt)
        if detector == "awld":
            dec = awl_decompose(h, None, nu, es, n0, perm)
            val = ilb_awld(dec.Lap, es)
        else:
            fac = ql_decompose(h[:, perm])
            wp, lp, _dp, _sig = puncture_matrix(fac.L, nu)
            val = ilb_wld(lp, wp, es / n0)
        if val > best_val:
            best_val = val
            best_perm = perm
    return best_perm
