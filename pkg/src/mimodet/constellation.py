"""Gray-mapped constellations normalized to unit average energy.

Square QAM points are built as a product of two Gray-coded PAM axes with
the in-phase bits first.  Bit labels live in {0, 1}; the +1 hypothesis of a
transmitted bit corresponds to label 1, so a positive LLR votes for 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_BITS = {"bpsk": 1, "qpsk": 2, "qam16": 4, "qam64": 6}


@dataclass(frozen=True)
class Constellation:
    name: str
    points: np.ndarray  # complex, size 2**q
    bit_labels: np.ndarray  # (2**q, q) uint8
    es: float

    @property
    def bits_per_symbol(self) -> int:
        return self.bit_labels.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def nearest(self, values) -> np.ndarray:
        """Indices of the closest points (ties go to the lower index)."""
        v = np.atleast_1d(np.asarray(values, dtype=np.complex128))
        return np.argmin(np.abs(v[:, None] - self.points[None, :]), axis=1)


def _gray_pam(nbits):
    """Ascending PAM levels (..., -3, -1, 1, 3, ...) with Gray bit labels."""
    m = 1 << nbits
    levels = 2.0 * np.arange(m) - (m - 1)
    codes = np.arange(m) ^ (np.arange(m) >> 1)
    labels = ((codes[:, None] >> np.arange(nbits - 1, -1, -1)[None, :]) & 1).astype(np.uint8)
    return levels, labels


def build_constellation(name: str) -> Constellation:
    """Build a unit-energy Gray-mapped constellation by name."""
    if name not in _BITS:
        raise ValueError(f"unknown constellation {name!r} (choose from {sorted(_BITS)})")
    q = _BITS[name]
    if name == "bpsk":
        levels, labels = _gray_pam(1)
        points = levels.astype(np.complex128)
    else:
        half = q // 2
        levels, axis_labels = _gray_pam(half)
        i_grid, q_grid = np.meshgrid(np.arange(levels.size), np.arange(levels.size), indexing="ij")
        points = levels[i_grid].ravel() + 1j * levels[q_grid].ravel()
        labels = np.hstack([axis_labels[i_grid.ravel()], axis_labels[q_grid.ravel()]])
    points = points / np.sqrt(np.mean(np.abs(points) ** 2))
    return Constellation(name=name, points=points, bit_labels=labels, es=1.0)
