import numpy as np
import pytest
from numpy.testing import assert_allclose

from mimodet.constellation import build_constellation


def test_bpsk():
    c = build_constellation("bpsk")
    assert sorted(c.points.real.tolist()) == [-1.0, 1.0]
    assert np.all(c.points.imag == 0)
    assert c.es == 1.0
    # the +1 point carries label 1
    assert c.bit_labels[np.argmax(c.points.real), 0] == 1


def test_qpsk():
    c = build_constellation("qpsk")
    assert c.size == 4
    assert_allclose(np.abs(c.points), np.ones(4), atol=1e-15)
    assert_allclose(np.abs(c.points.real), np.full(4, 1 / np.sqrt(2)), atol=1e-15)


def test_qam16_levels_and_power():
    c = build_constellation("qam16")
    levels = np.unique(np.round(c.points.real, 12))
    assert_allclose(levels, np.array([-3, -1, 1, 3]) / np.sqrt(10), atol=1e-12)
    # mean power by direct summation
    assert abs(np.mean(np.abs(c.points) ** 2) - 1.0) <= 1e-12


@pytest.mark.parametrize("name", ["bpsk", "qpsk", "qam16", "qam64"])
def test_unit_energy_and_bijection(name):
    c = build_constellation(name)
    assert abs(np.mean(np.abs(c.points) ** 2) - c.es) <= 1e-12
    assert len({tuple(row) for row in c.bit_labels}) == c.size
    assert c.bit_labels.shape == (c.size, c.bits_per_symbol)


@pytest.mark.parametrize("name", ["qpsk", "qam16", "qam64"])
def test_gray_per_axis(name):
    c = build_constellation(name)
    half = c.bits_per_symbol // 2
    # walk each axis at a fixed other-axis level: adjacent labels differ in one bit
    for axis, bits in (("real", slice(0, half)), ("imag", slice(half, None))):
        other = "imag" if axis == "real" else "real"
        fixed = getattr(c.points, other).min()
        sel = np.isclose(getattr(c.points, other), fixed)
        order = np.argsort(getattr(c.points, axis)[sel])
        lab = c.bit_labels[sel][order][:, bits]
        for a, b in zip(lab[:-1], lab[1:]):
            assert np.sum(a != b) == 1


def test_unknown_name():
    with pytest.raises(ValueError):
        build_constellation("qam256")


def test_nearest_ties_to_lower_index():
    c = build_constellation("bpsk")
    assert c.nearest([0.0 + 0j])[0] == 0  # equidistant: first point wins
    assert c.nearest([0.9])[0] == np.argmax(c.points.real)
