"""Renderers for the three CSV schemas the simulator emits.

``air``/``ber`` files become one curve per detector tag over SNR; ``llr``
files become a 2x2 grid of per-bit step-outline histograms with one series
per detector.  Each renderer returns a summary of exactly what was drawn so
callers can cross-check the figure against the file.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

AIR_COLUMNS = ["snr_db", "detector", "nu", "input", "rate_bits", "stderr", "trials", "seed", "reason"]
BER_COLUMNS = ["snr_db", "detector", "nu", "input", "ber", "bit_count", "trials", "seed", "reason"]
LLR_COLUMNS = ["detector", "bit_index", "bin_left", "bin_right", "count"]

_SCHEMAS = {"air": AIR_COLUMNS, "ber": BER_COLUMNS, "llr": LLR_COLUMNS}


class SchemaError(ValueError):
    """The CSV does not match the expected subcommand schema."""


@dataclass
class PlotSpec:
    input_csv: str
    kind: str  # air | ber | llr
    output: str
    title: str | None = None


def load_rows(path, kind):
    """Read and schema-check a simulator CSV; skipped rows are dropped."""
    if kind not in _SCHEMAS:
        raise SchemaError(f"unknown plot kind {kind!r}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != _SCHEMAS[kind]:
            raise SchemaError(
                f"{path}: header {reader.fieldnames} does not match the {kind} schema"
            )
        rows = [r for r in reader if not r.get("reason")]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def render_curves(spec: PlotSpec):
    """One line per detector tag, rate (or log-scale BER) against SNR."""
    value_col = {"air": "rate_bits", "ber": "ber"}.get(spec.kind)
    if value_col is None:
        raise SchemaError(f"render_curves draws air or ber files, not {spec.kind!r}")
    rows = load_rows(spec.input_csv, spec.kind)
    series: dict[str, dict[str, list[float]]] = {}
    for row in rows:
        entry = series.setdefault(row["detector"], {"x": [], "y": []})
        entry["x"].append(float(row["snr_db"]))
        entry["y"].append(float(row[value_col]))

    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    for detector in sorted(series):
        ax.plot(series[detector]["x"], series[detector]["y"], marker="o", label=detector)
    if spec.kind == "ber":
        ax.set_yscale("log")
        ax.set_ylabel("uncoded BER")
    else:
        ax.set_ylabel("rate [bits / channel use]")
    ax.set_xlabel("SNR [dB]")
    ax.grid(True, which="both", alpha=0.4)
    ax.legend()
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    fig.savefig(spec.output, dpi=120)
    plt.close(fig)
    return {"output": spec.output, "series": series}


def render_llr_hist(spec: PlotSpec):
    """2x2 grid of per-bit histograms drawn as step outlines, overlaid."""
    if spec.kind != "llr":
        raise SchemaError(f"render_llr_hist draws llr files, not {spec.kind!r}")
    rows = load_rows(spec.input_csv, spec.kind)
    bits = sorted({int(r["bit_index"]) for r in rows})
    detectors = sorted({r["detector"] for r in rows})
    data: dict[tuple, dict[str, list[float]]] = {}
    for row in rows:
        key = (row["detector"], int(row["bit_index"]))
        entry = data.setdefault(key, {"left": [], "right": [], "count": []})
        entry["left"].append(float(row["bin_left"]))
        entry["right"].append(float(row["bin_right"]))
        entry["count"].append(float(row["count"]))

    fig, axes = plt.subplots(2, 2, figsize=(9.0, 7.0), squeeze=False)
    counts_drawn: dict[str, dict[int, float]] = {d: {} for d in detectors}
    for panel, bit in enumerate(bits[:4]):
        ax = axes[panel // 2][panel % 2]
        for detector in detectors:
            entry = data.get((detector, bit))
            if entry is None:
                continue
            edges = entry["left"] + [entry["right"][-1]]
            ax.stairs(entry["count"], edges, label=detector)
            counts_drawn[detector][bit] = sum(entry["count"])
        ax.set_title(f"bit {bit}")
        ax.set_xlabel("LLR")
        ax.set_ylabel("count")
        ax.grid(True, alpha=0.4)
        ax.legend(fontsize=8)
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    fig.savefig(spec.output, dpi=120)
    plt.close(fig)
    return {"output": spec.output, "counts": counts_drawn, "bits": bits[:4]}
