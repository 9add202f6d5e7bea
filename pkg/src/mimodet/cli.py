"""``mimo`` command line tool.

Subcommands: ``air`` (rate sweeps), ``ber`` (uncoded bit error rates),
``llr`` (LLR histograms), ``check`` (decomposition-invariant fuzzing).
A flat key=value config file may seed any run; every key is overridable by
the CLI flag of the same name.  Exit codes: 0 success, 1 invalid
configuration, 2 internal invariant failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import MimoError
from .sim import (
    DetectorSpec,
    ExperimentConfig,
    run_air_sweep,
    run_ber_sweep,
    run_decomp_check,
    run_llr_hist,
)

_DEFAULTS = {
    "nt": 4,
    "nr": 4,
    "input": "gaussian",
    "mod": "qam16",
    "snr": "0:5:40",
    "snr_db": 20.0,
    "detectors": "mmse,wld:1,awld:1,awld:2,capacity",
    "trials": 100,
    "seed": 1,
    "workers": 1,
    "inner_trials": 1000,
    "bins": 40,
    "out": None,
}


def parse_snr_grid(text) -> list[float]:
    """Grid syntax: 'start:step:stop' (inclusive), or a comma list, or one value."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"SNR grid must be start:step:stop, got {text!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("SNR grid step must be positive")
        grid = []
        v = start
        while v <= stop + 1e-9:
            grid.append(round(v, 9))
            v += step
        return grid
    return [float(p) for p in text.split(",") if p.strip()]


def parse_detectors(text) -> list[DetectorSpec]:
    specs = [DetectorSpec.parse(p) for p in str(text).split(",") if p.strip()]
    if not specs:
        raise ValueError("detector list is empty")
    return specs


def load_config_file(path) -> dict:
    """Flat key=value lines; '#' starts a comment."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, val = line.split("=", 1)
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def _build_parser():
    parser = argparse.ArgumentParser(prog="mimo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--nt", type=int)
        p.add_argument("--nr", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--out", help="output path (CSV, or JSON for check)")

    p_air = sub.add_parser("air", help="achievable-rate sweep")
    add_common(p_air)
    p_air.add_argument("--input", help="'gaussian' or a constellation name")
    p_air.add_argument("--snr", help="SNR grid in dB, start:step:stop or comma list")
    p_air.add_argument("--detectors", help="comma list, e.g. mmse,wld:1,awld:2:x4,capacity")
    p_air.add_argument("--inner-trials", type=int, dest="inner_trials")

    p_ber = sub.add_parser("ber", help="uncoded BER sweep")
    add_common(p_ber)
    p_ber.add_argument("--mod", help="constellation name")
    p_ber.add_argument("--snr", help="SNR grid in dB")
    p_ber.add_argument("--detectors")

    p_llr = sub.add_parser("llr", help="LLR histograms of the first symbol")
    add_common(p_llr)
    p_llr.add_argument("--mod")
    p_llr.add_argument("--snr-db", type=float, dest="snr_db")
    p_llr.add_argument("--detectors")
    p_llr.add_argument("--bins", type=int)

    p_chk = sub.add_parser("check", help="decomposition-invariant fuzzer")
    add_common(p_chk)
    p_chk.add_argument("--inject-fault", action="store_true", default=None, dest="inject_fault")
    return parser


def _setting(args, file_cfg, key, cast=None):
    val = getattr(args, key, None)
    if val is None:
        val = file_cfg.get(key, _DEFAULTS.get(key))
    if val is None or cast is None:
        return val
    return cast(val)


def _make_config(args) -> ExperimentConfig:
    file_cfg = load_config_file(args.config) if args.config else {}
    command = args.command
    if command == "air":
        mod = _setting(args, file_cfg, "input")
        grid = parse_snr_grid(_setting(args, file_cfg, "snr"))
        detectors = parse_detectors(_setting(args, file_cfg, "detectors"))
    elif command == "ber":
        mod = _setting(args, file_cfg, "mod")
        grid = parse_snr_grid(_setting(args, file_cfg, "snr"))
        detectors = parse_detectors(_setting(args, file_cfg, "detectors"))
    elif command == "llr":
        mod = _setting(args, file_cfg, "mod")
        grid = [float(_setting(args, file_cfg, "snr_db"))]
        default = "mlm,awld:2:x4"
        detectors = parse_detectors(
            getattr(args, "detectors", None) or file_cfg.get("detectors", default)
        )
    else:  # check
        mod = "gaussian"
        grid = [0.0]
        detectors = [DetectorSpec("capacity")]
    fault = getattr(args, "inject_fault", None)
    if fault is None:
        fault = str(file_cfg.get("inject_fault", "0")).lower() in ("1", "true", "yes")
    cfg = ExperimentConfig(
        nt=_setting(args, file_cfg, "nt", int),
        nr=_setting(args, file_cfg, "nr", int),
        mod=mod,
        snr_db_grid=grid,
        detectors=detectors,
        trials=_setting(args, file_cfg, "trials", int),
        seed=_setting(args, file_cfg, "seed", int),
        out_path=_setting(args, file_cfg, "out"),
        workers=_setting(args, file_cfg, "workers", int),
        inner_trials=_setting(args, file_cfg, "inner_trials", int),
        bins=_setting(args, file_cfg, "bins", int),
        inject_fault=bool(fault),
    )
    return cfg.validate()


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _make_config(args)
    except (ValueError, OSError) as exc:
        print(f"mimo: invalid configuration: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "air":
            run_air_sweep(cfg)
        elif args.command == "ber":
            run_ber_sweep(cfg)
        elif args.command == "llr":
            run_llr_hist(cfg)
        else:
            report = run_decomp_check(cfg)
            if not cfg.out_path:
                json.dump(report, sys.stdout, indent=2)
                print()
            if not report["all_pass"]:
                print("mimo: invariant failures detected", file=sys.stderr)
                return 2
    except MimoError as exc:
        print(f"mimo: internal invariant failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"mimo: invalid configuration: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
