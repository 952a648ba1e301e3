import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from periodic_witness.errors import ParameterError
from periodic_witness.masks import (
    MaskSpec, fourier_coefficient, fourier_power, mask_index, mask_value, slit_range, slit_segments,
)

dims = st.integers(2, 20)
periods = st.floats(0.05, 10.0)
offsets = st.floats(-5.0, 5.0)


@settings(max_examples=100, deadline=None)
@given(dims, periods, offsets, st.floats(-50, 50))
def test_masks_partition_the_line(d, T, off, z):
    spec = MaskSpec(d, T, off)
    total = sum(mask_value(spec, k, z) for k in range(d))
    assert total == 1


@settings(max_examples=100, deadline=None)
@given(dims, periods, offsets, st.floats(-50, 50), st.integers(-5, 5))
def test_translation_by_slit_width(d, T, off, z, n):
    spec = MaskSpec(d, T, off)
    s = spec.slit_width
    k = mask_index(spec, z)
    shifted = mask_index(spec, z + n * s)
    # floating rounding can move a point across a boundary; skip points close to one
    phase = ((z - off) / s) % 1.0
    if 1e-6 < phase < 1 - 1e-6:
        assert shifted == (k + n) % d


@settings(max_examples=100, deadline=None)
@given(dims, periods, offsets, st.floats(-50, 50))
def test_periodicity(d, T, off, z):
    spec = MaskSpec(d, T, off)
    phase = ((z - off) / spec.slit_width) % 1.0
    if 1e-6 < phase < 1 - 1e-6:
        assert mask_index(spec, z) == mask_index(spec, z + 3 * T)


def test_boundaries_are_half_open():
    spec = MaskSpec(4, 4.0)
    assert mask_index(spec, 0.0) == 0
    assert mask_index(spec, 1.0) == 1
    assert mask_index(spec, np.nextafter(1.0, 0.0)) == 0
    assert mask_index(spec, -1e-300) == 3
    assert mask_index(spec, np.nextafter(4.0, 0.0)) == 3


def test_offset_shifts_the_pattern():
    spec = MaskSpec(3, 3.0, 0.5)
    assert mask_index(spec, 0.5) == 0
    assert mask_index(spec, 0.49) == 2
    assert mask_index(spec, 1.6) == 1


def test_vectorised():
    spec = MaskSpec(3, 3.0)
    np.testing.assert_array_equal(mask_index(spec, [0.5, 1.5, 2.5, 3.5]), [0, 1, 2, 0])
    np.testing.assert_array_equal(mask_value(spec, 1, [0.5, 1.5]), [0, 1])


def test_mask_value_index_error():
    spec = MaskSpec(3, 3.0)
    with pytest.raises(IndexError):
        mask_value(spec, 3, 0.0)
    with pytest.raises(IndexError):
        mask_value(spec, -1, 0.0)


@pytest.mark.parametrize("args", [(1, 1.0), (2, 0.0), (2, -1.0), (2.5, 1.0), (2, float("inf"))])
def test_invalid_specs(args):
    with pytest.raises(ParameterError):
        MaskSpec(*args)


@pytest.mark.parametrize("d", [2, 3, 5, 8])
@pytest.mark.parametrize("N", [0, 1, 2, 3, 7, -4])
def test_fourier_coefficient_by_quadrature(d, N):
    # M_0 on [0, 1) is 1 on [0, 1/d)
    re = integrate.quad(lambda z: math.cos(2 * math.pi * N * z), 0, 1 / d)[0]
    im = integrate.quad(lambda z: -math.sin(2 * math.pi * N * z), 0, 1 / d)[0]
    assert fourier_coefficient(d, N) == pytest.approx(complex(re, im), abs=1e-13)
    assert fourier_power(d, N) == pytest.approx(abs(complex(re, im)) ** 2, abs=1e-13)


@pytest.mark.parametrize("d", [2, 3, 7])
def test_fourier_vanishes_at_multiples_of_d(d):
    for N in (d, 2 * d, -3 * d):
        assert abs(fourier_coefficient(d, N)) < 1e-15


@pytest.mark.parametrize("d", [2, 4, 9])
def test_parseval(d):
    N = np.arange(-200_000, 200_001)
    assert fourier_power(d, N).sum() == pytest.approx(1 / d, abs=1e-5)


def test_fourier_reconstruction():
    d, z = 3, 0.1
    series = sum(fourier_coefficient(d, N) * cmath.exp(2j * math.pi * N * z) for N in range(-4000, 4001))
    assert series.real == pytest.approx(1.0, abs=1e-3)


def test_slit_segments():
    spec = MaskSpec(2, 2.0)
    assert slit_segments(spec, 0, (-0.5, 3.5)) == [(0.0, 1.0), (2.0, 3.0)]
    assert slit_segments(spec, 1, (-0.5, 3.5)) == [(-0.5, 0.0), (1.0, 2.0), (3.0, 3.5)]
    assert slit_segments(spec, 0, (1.0, 1.0)) == []
    assert slit_range(spec, -0.5, 3.5) == (-1, 4)


@settings(max_examples=50, deadline=None)
@given(dims, periods, offsets, st.floats(-20, 0), st.floats(0.01, 20))
def test_segments_cover_support(d, T, off, lo, width):
    spec = MaskSpec(d, T, off)
    total = sum(b - a for k in range(d) for a, b in slit_segments(spec, k, (lo, lo + width)))
    assert total == pytest.approx(width, rel=1e-9, abs=1e-9)


def test_worked_examples():
    spec = MaskSpec(2, 2.0)
    assert mask_value(spec, 0, 0.5) == 1
    assert mask_value(spec, 0, 1.5) == 0
    assert fourier_coefficient(2, 0) == pytest.approx(0.5)
    assert fourier_power(2, 1) == pytest.approx(1 / math.pi**2, rel=1e-14)
    assert slit_segments(spec, 0, (0.0, 4.0)) == [(0.0, 1.0), (2.0, 3.0)]


def test_parseval_at_one_million_terms():
    N = np.arange(1, 1_000_001)
    total = 0.25 + 2 * np.sum(fourier_power(2, N))
    assert total == pytest.approx(0.5, abs=1e-6)
