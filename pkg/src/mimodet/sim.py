"""Monte-Carlo experiment drivers behind the ``mimo`` CLI.

Every experiment draws one fresh channel per trial (ergodic averaging) from
counter-based substreams of a single master seed, so results are
byte-identical for a given configuration regardless of the worker count.
CSV output uses a fixed header per subcommand, '.' decimals and repr-exact
floats; JSON reports carry a stable key order and no timestamps.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from . import air
from .augment import awl_decompose, mmse_filter
from .constellation import build_constellation
from .detect import TrueContext, bruteforce_maxlog_llr, linear_detect, multi_round_detect
from .errors import GuardExceeded
from .linalg import (
    gauss_eliminate_lower,
    ql_decompose,
    singular_values,
    tri_inverse_lower,
    tri_solve_lower,
)
from .puncture import puncture_matrix, wl_decompose
from .rng import CHANNEL, MC_INPUT, NOISE, SYMBOLS, derive_seed, substream

AIR_COLUMNS = ["snr_db", "detector", "nu", "input", "rate_bits", "stderr", "trials", "seed", "reason"]
BER_COLUMNS = ["snr_db", "detector", "nu", "input", "ber", "bit_count", "trials", "seed", "reason"]
LLR_COLUMNS = ["detector", "bit_index", "bin_left", "bin_right", "count"]

_VARIANT_MODES = {"": "full", "z2": "z2", "x4": "x4"}


@dataclass(frozen=True)
class DetectorSpec:
    """One detector request: base name, puncturing order, layer-2 variant."""

    name: str
    nu: int = 0
    variant: str = ""

    @property
    def label(self) -> str:
        tag = self.name
        if self.nu:
            tag += f":{self.nu}"
        if self.variant:
            tag += f":{self.variant}"
        return tag

    @classmethod
    def parse(cls, text: str) -> "DetectorSpec":
        parts = text.strip().lower().split(":")
        name = parts[0]
        if name not in ("capacity", "mlm", "zf", "mmse", "wld", "awld", "lord"):
            raise ValueError(f"unknown detector {name!r}")
        nu = 0
        variant = ""
        if len(parts) > 1:
            nu = int(parts[1])
        if len(parts) > 2:
            variant = parts[2]
            if variant not in ("z2", "x4"):
                raise ValueError(f"unknown detector variant {variant!r}")
            if name != "awld":
                raise ValueError("z2/x4 variants apply to the awld detector")
            if nu != 2:
                raise ValueError("z2/x4 variants require nu = 2")
        if len(parts) > 3:
            raise ValueError(f"malformed detector tag {text!r}")
        if name in ("wld", "awld", "lord") and nu < 1:
            raise ValueError(f"detector {name} needs a puncturing order, e.g. {name}:1")
        if name in ("capacity", "mlm", "zf", "mmse") and nu:
            raise ValueError(f"detector {name} takes no puncturing order")
        return cls(name=name, nu=nu, variant=variant)


@dataclass
class ExperimentConfig:
    nt: int
    nr: int
    mod: str  # constellation name, or "gaussian" for rate sweeps
    snr_db_grid: list[float]
    detectors: list[DetectorSpec]
    trials: int
    seed: int
    out_path: str | None = None
    workers: int = 1
    inner_trials: int = 1000  # model-marginal MC trials per channel (finite input)
    bins: int = 40
    inject_fault: bool = False

    def validate(self):
        if not (self.nr >= self.nt >= 1):
            raise ValueError(f"need nr >= nt >= 1, got nt={self.nt}, nr={self.nr}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not self.snr_db_grid:
            raise ValueError("SNR grid is empty")
        if any(b <= a for a, b in zip(self.snr_db_grid, self.snr_db_grid[1:])):
            raise ValueError(f"SNR grid must be strictly increasing: {self.snr_db_grid}")
        if self.mod != "gaussian":
            build_constellation(self.mod)
        for det in self.detectors:
            if det.nu and not 1 <= det.nu <= self.nt - 1:
                raise ValueError(f"detector {det.label}:{det.nu} needs 1 <= nu <= {self.nt - 1}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        return self


def gen_channel(nt, nr, rng_stream) -> np.ndarray:
    """i.i.d. circularly-symmetric complex Gaussian channel, unit entry power."""
    return math.sqrt(0.5) * (
        rng_stream.standard_normal((nr, nt)) + 1j * rng_stream.standard_normal((nr, nt))
    )


def _trial_map(fn, trials, workers):
    """Map a trial-index function over 0..trials-1 in fixed order."""
    if workers <= 1:
        return [fn(t) for t in range(trials)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, trials // (workers * 4))
        return list(pool.map(fn, range(trials), chunksize=chunk))


def _write_csv(path, columns, rows):
    if path is None:
        return
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row[c] for c in columns])


def _gaussian_rate(det: DetectorSpec, h, beta):
    es, n0 = 1.0, 1.0 / beta
    if det.name == "capacity":
        return air.capacity_awgn(h, beta)
    if det.name == "mmse":
        return air.mmse_rate_gaussian(h, beta)
    if det.name == "zf":
        return air.zf_rate_gaussian(h, beta)
    if det.name == "awld":
        dec = awl_decompose(h, None, det.nu, es, n0)
        return air.ilb_awld(dec.Lap, es)
    if det.name == "wld":
        fac = ql_decompose(h)
        wp, lp, _dp, _sig = puncture_matrix(fac.L, det.nu)
        return air.ilb_wld(lp, wp, beta)
    raise ValueError(f"detector {det.label} has no Gaussian-input rate")


def _air_trial(cfg: ExperimentConfig, det: DetectorSpec, snr_db: float, const, t: int):
    h = gen_channel(cfg.nt, cfg.nr, substream(cfg.seed, t, CHANNEL))
    beta = 10.0 ** (snr_db / 10.0)
    if cfg.mod == "gaussian":
        return _gaussian_rate(det, h, beta)
    es, n0 = 1.0, 1.0 / beta
    if det.name == "awld":
        dec = awl_decompose(h, None, det.nu, es, n0)
    else:
        dec = wl_decompose(h, None, det.nu)
    est, _se = air.ilb_monte_carlo(
        det.name, dec, h, es, n0, const, cfg.inner_trials, derive_seed(cfg.seed, t, MC_INPUT)
    )
    return est


def run_air_sweep(cfg: ExperimentConfig):
    """Average rate per (SNR, detector) over ``trials`` channel draws.

    Gaussian inputs use the closed-form bounds; finite inputs estimate the
    bound by exact-marginalization Monte Carlo per channel.  Guard
    violations skip the row and record the reason.
    """
    cfg.validate()
    const = None if cfg.mod == "gaussian" else build_constellation(cfg.mod)
    rows = []
    for snr_db in cfg.snr_db_grid:
        for det in cfg.detectors:
            row = {
                "snr_db": snr_db,
                "detector": det.label,
                "nu": det.nu,
                "input": cfg.mod,
                "rate_bits": "",
                "stderr": "",
                "trials": cfg.trials,
                "seed": cfg.seed,
                "reason": "",
            }
            if const is not None and det.name not in ("wld", "awld"):
                row["reason"] = "closed-form baseline requires gaussian input"
                rows.append(row)
                continue
            if const is not None and const.size**cfg.nt > air.FINITE_INPUT_GUARD:
                row["reason"] = "alphabet exceeds exact-marginalization guard"
                rows.append(row)
                continue
            if det.name == "mlm":
                row["reason"] = "mlm has no rate-bound form"
                rows.append(row)
                continue
            vals = _trial_map(partial(_air_trial, cfg, det, snr_db, const), cfg.trials, cfg.workers)
            point = air.AirPoint(
                snr_db=snr_db,
                rate=float(np.mean(vals)),
                detector=det.label,
                nu=det.nu,
                input=cfg.mod,
                trials=cfg.trials,
                stderr=float(np.std(vals, ddof=1) / math.sqrt(cfg.trials))
                if cfg.trials > 1
                else 0.0,
            )
            row["rate_bits"] = point.rate
            row["stderr"] = point.stderr
            rows.append(row)
    _write_csv(cfg.out_path, AIR_COLUMNS, rows)
    return rows


def _detect_once(det: DetectorSpec, h, y, const, es, n0):
    if det.name == "mlm":
        return bruteforce_maxlog_llr("true", TrueContext(h=h, y=y, n0=n0), const, h.shape[1])
    if det.name in ("zf", "mmse"):
        return linear_detect(det.name, h, y, const, es, n0)
    mode = _VARIANT_MODES[det.variant]
    return multi_round_detect(det.name, h, y, det.nu, const, es, n0, parent_mode=mode)


def _ber_trial(cfg: ExperimentConfig, det: DetectorSpec, snr_db: float, const, t: int):
    h = gen_channel(cfg.nt, cfg.nr, substream(cfg.seed, t, CHANNEL))
    beta = 10.0 ** (snr_db / 10.0)
    es, n0 = 1.0, 1.0 / beta
    sym_rng = substream(cfg.seed, t, SYMBOLS)
    idx = sym_rng.integers(0, const.size, cfg.nt)
    x = const.points[idx]
    noise_rng = substream(cfg.seed, t, NOISE)
    z = math.sqrt(0.5) * (noise_rng.standard_normal(cfg.nr) + 1j * noise_rng.standard_normal(cfg.nr))
    y = h @ x + math.sqrt(n0) * z
    sent = const.bit_labels[idx].ravel()
    res = _detect_once(det, h, y, const, es, n0)
    decided = (res.llrs > 0).astype(np.uint8)
    return int(np.sum(decided != sent)), sent.size


def run_ber_sweep(cfg: ExperimentConfig):
    """Uncoded bit error rate from hard LLR signs, per (SNR, detector)."""
    cfg.validate()
    if cfg.mod == "gaussian":
        raise ValueError("BER sweeps need a finite constellation")
    const = build_constellation(cfg.mod)
    rows = []
    for snr_db in cfg.snr_db_grid:
        for det in cfg.detectors:
            row = {
                "snr_db": snr_db,
                "detector": det.label,
                "nu": det.nu,
                "input": cfg.mod,
                "ber": "",
                "bit_count": "",
                "trials": cfg.trials,
                "seed": cfg.seed,
                "reason": "",
            }
            if det.name == "capacity":
                row["reason"] = "capacity is not a detector"
                rows.append(row)
                continue
            if det.name == "mlm" and const.size**cfg.nt > 1 << 20:
                row["reason"] = "alphabet exceeds brute-force guard"
                rows.append(row)
                continue
            pairs = _trial_map(partial(_ber_trial, cfg, det, snr_db, const), cfg.trials, cfg.workers)
            errors = sum(p[0] for p in pairs)
            bits = sum(p[1] for p in pairs)
            row["ber"] = errors / bits
            row["bit_count"] = bits
            rows.append(row)
    _write_csv(cfg.out_path, BER_COLUMNS, rows)
    return rows


def _llr_trial(cfg: ExperimentConfig, const, n_bits, t: int):
    h = gen_channel(cfg.nt, cfg.nr, substream(cfg.seed, t, CHANNEL))
    beta = 10.0 ** (cfg.snr_db_grid[0] / 10.0)
    es, n0 = 1.0, 1.0 / beta
    sym_rng = substream(cfg.seed, t, SYMBOLS)
    x = const.points[sym_rng.integers(0, const.size, cfg.nt)]
    noise_rng = substream(cfg.seed, t, NOISE)
    z = math.sqrt(0.5) * (noise_rng.standard_normal(cfg.nr) + 1j * noise_rng.standard_normal(cfg.nr))
    y = h @ x + math.sqrt(n0) * z
    return [
        _detect_once(det, h, y, const, es, n0).llrs[:n_bits].tolist() for det in cfg.detectors
    ]


def run_llr_hist(cfg: ExperimentConfig, bins=None):
    """Histogram the LLRs of the first symbol's bits for each detector.

    All detectors of a bit share one set of equal-width bin edges spanning
    the pooled sample range, so the histograms are directly comparable.
    """
    cfg.validate()
    if len(cfg.snr_db_grid) != 1:
        raise ValueError("LLR histograms use a single SNR point")
    const = build_constellation(cfg.mod)
    bins = cfg.bins if bins is None else bins
    if const.size**cfg.nt > 1 << 20:
        raise GuardExceeded("brute-force reference exceeds the search guard")
    n_bits = min(4, cfg.nt * const.bits_per_symbol)
    samples = _trial_map(partial(_llr_trial, cfg, const, n_bits), cfg.trials, cfg.workers)
    data = np.asarray(samples)  # (trials, n_det, n_bits)
    rows = []
    for b in range(n_bits):
        lo = float(data[:, :, b].min())
        hi = float(data[:, :, b].max())
        if hi <= lo:
            hi = lo + 1.0
        edges = np.linspace(lo, hi, bins + 1)
        for d, det in enumerate(cfg.detectors):
            counts, _ = np.histogram(data[:, d, b], bins=edges)
            for k in range(bins):
                rows.append(
                    {
                        "detector": det.label,
                        "bit_index": b,
                        "bin_left": float(edges[k]),
                        "bin_right": float(edges[k + 1]),
                        "count": int(counts[k]),
                    }
                )
    _write_csv(cfg.out_path, LLR_COLUMNS, rows)
    return rows


class _CheckTally:
    def __init__(self, name, tolerance):
        self.name = name
        self.tolerance = tolerance
        self.trials = 0
        self.failures = 0
        self.worst = 0.0

    def record(self, residual):
        self.trials += 1
        residual = float(residual)
        self.worst = max(self.worst, residual)
        if not residual <= self.tolerance:
            self.failures += 1

    def as_dict(self):
        return {
            "name": self.name,
            "trials": self.trials,
            "failures": self.failures,
            "worst_residual": self.worst,
            "tolerance": self.tolerance,
        }


def run_decomp_check(cfg: ExperimentConfig):
    """Fuzz every decomposition invariant over seeded random instances.

    Returns a deterministic JSON-ready report; failures are report content,
    not exceptions.  ``inject_fault`` corrupts the punctured factor before
    the route-equivalence comparison to prove the fuzzer can fail.
    """
    cfg.validate()
    checks = {
        name: _CheckTally(name, tol)
        for name, tol in [
            ("ql_roundtrip", 1e-10),
            ("ql_orthonormal", 1e-10),
            ("ql_structural_zeros", 0.0),
            ("gauss_inverse_equivalence", 1e-10),
            ("tri_solve_residual", 1e-10),
            ("singular_values_vs_eig", 1e-8),
            ("puncture_route_equivalence", 1e-10),
            ("wp_row_norms", 1e-10),
            ("wp_spectral_bounds", 1e-9),
            ("lp_structural_zeros", 0.0),
            ("augmented_gram_identity", 1e-9),
            ("augmented_inverse_identity", 1e-9),
            ("mmse_route_equivalence", 1e-9),
            ("mmse_elimination_identity", 1e-9),
            ("metric_decomposition", 1e-9),
        ]
    }
    for t in range(cfg.trials):
        rng = substream(cfg.seed, t, CHANNEL)
        nt = int(rng.integers(2, max(3, cfg.nt + 1)))
        nr = nt + int(rng.integers(0, max(1, cfg.nr - cfg.nt + 1)))
        h = gen_channel(nt, nr, rng)
        y = math.sqrt(0.5) * (rng.standard_normal(nr) + 1j * rng.standard_normal(nr))
        nu = int(rng.integers(1, nt))
        es = float(rng.uniform(0.5, 2.0))
        n0 = float(rng.uniform(0.05, 1.0))

        fac = ql_decompose(h, y)
        checks["ql_roundtrip"].record(
            np.linalg.norm(h - fac.Q @ fac.L) / np.linalg.norm(h)
        )
        checks["ql_orthonormal"].record(
            np.linalg.norm(fac.Q.conj().T @ fac.Q - np.eye(nt)) / nt
        )
        checks["ql_structural_zeros"].record(np.abs(fac.L[np.triu_indices(nt, 1)]).max(initial=0.0))

        el = fac.L
        e, d = gauss_eliminate_lower(el)
        checks["gauss_inverse_equivalence"].record(
            np.abs((1.0 / d)[:, None] * e - tri_inverse_lower(el)).max()
        )
        x = tri_solve_lower(el, fac.y_rot)
        checks["tri_solve_residual"].record(
            np.linalg.norm(el @ x - fac.y_rot) / max(np.linalg.norm(fac.y_rot), 1e-30)
        )

        dec = wl_decompose(h, y, nu)
        sv = singular_values(dec.Wp)
        eig = np.sqrt(np.maximum(np.linalg.eigvalsh(dec.Wp.conj().T @ dec.Wp), 0.0))[::-1]
        checks["singular_values_vs_eig"].record(np.abs(sv - eig).max() / max(eig[0], 1e-30))
        wp_d, lp_d, _dp, _sig = puncture_matrix(fac.L, nu)
        lp_route = dec.Lp.copy()
        if cfg.inject_fault:
            lp_route[0, 0] += 1e-6
        checks["puncture_route_equivalence"].record(
            max(
                np.abs(lp_route - lp_d).max(),
                np.abs(dec.Wp - wp_d).max(),
                np.abs(dec.y_punct - wp_d @ fac.y_rot).max(),
            )
        )
        checks["wp_row_norms"].record(
            np.abs(np.sum(np.abs(dec.Wp) ** 2, axis=1) - 1.0).max()
        )
        checks["wp_spectral_bounds"].record(
            max(1.0 - sv[0], sv[-1] - 1.0, -sv[-1], 0.0)
        )
        mask = np.zeros((nt, nt), bool)
        for i in range(nt):
            mask[i, nu:i] = True
        checks["lp_structural_zeros"].record(
            np.abs(dec.Lp[mask]).max(initial=0.0)
        )

        adec = awl_decompose(h, y, nu, es, n0)
        gram = h.conj().T @ h / n0 + np.eye(nt) / es
        checks["augmented_gram_identity"].record(
            np.linalg.norm(adec.La.conj().T @ adec.La - gram) / np.linalg.norm(gram)
        )
        qa2 = tri_inverse_lower(adec.La) / math.sqrt(es)  # sqrt(Es) Qa2 = La^{-1}
        checks["augmented_inverse_identity"].record(
            np.linalg.norm(adec.La @ (math.sqrt(es) * qa2) - np.eye(nt))
        )
        wm_d = mmse_filter(h, es, n0, "direct")
        wm_q = mmse_filter(h, es, n0, "via_ql")
        checks["mmse_route_equivalence"].record(
            np.linalg.norm(wm_d - wm_q) / np.linalg.norm(wm_d)
        )
        checks["mmse_elimination_identity"].record(
            np.abs(adec.Wap @ adec.La @ wm_d @ y - adec.y_tilde).max()
        )
        x1 = math.sqrt(0.5) * (rng.standard_normal(nt) + 1j * rng.standard_normal(nt))
        x2 = math.sqrt(0.5) * (rng.standard_normal(nt) + 1j * rng.standard_normal(nt))

        def neg_mu_shift(xv):
            # -mu(y|x) + (1/Es) x^H x, which the augmented form says is
            # ||La (Wmmse y - x)||^2 plus an x-independent constant
            return np.linalg.norm(y - h @ xv) ** 2 / n0 + np.vdot(xv, xv).real / es

        wy = wm_d @ y
        lhs = neg_mu_shift(x1) - neg_mu_shift(x2)
        rhs = np.linalg.norm(adec.La @ (wy - x1)) ** 2 - np.linalg.norm(adec.La @ (wy - x2)) ** 2
        scale = max(abs(lhs), abs(rhs), 1.0)
        checks["metric_decomposition"].record(abs(lhs - rhs) / scale)

    report = {
        "config": {
            "nt": cfg.nt,
            "nr": cfg.nr,
            "trials": cfg.trials,
            "seed": cfg.seed,
            "inject_fault": cfg.inject_fault,
        },
        "checks": [checks[name].as_dict() for name in checks],
        "all_pass": all(c.failures == 0 for c in checks.values()),
    }
    if cfg.out_path:
        with open(cfg.out_path, "w") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    return report
