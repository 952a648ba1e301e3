import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from periodic_witness.errors import ParameterError
from periodic_witness.jointdist import JointMatrix, mask_joint_matrix, rectangle_probability
from periodic_witness.masks import MaskSpec
from periodic_witness.model import build_detection_model, joint_pdf, separable_model

from oracles import fourier_joint_matrix

INF = math.inf


def _bvn_rect(model, domain, a1, b1, a2, b2):
    """Rectangle probability from scipy's bivariate normal CDF."""
    sp, sm = model.widths(domain)
    var_a = (sp**2 + sm**2) / 4
    cov = (sp**2 - sm**2) / 4
    mvn = stats.multivariate_normal(mean=[0, 0], cov=[[var_a, cov], [cov, var_a]])
    F = lambda x, y: mvn.cdf([x, y])
    return F(b1, b2) - F(a1, b2) - F(b1, a2) + F(a1, a2)


@pytest.mark.parametrize("domain", ["IP", "FF"])
@pytest.mark.parametrize("rect", [
    ((-0.1, 0.2), (-0.05, 0.3)),
    ((0.0, 1.0), (0.5, 2.0)),
    ((-3.0, -1.0), (-2.5, 0.5)),
    ((1.0, 1.3), (-1.3, -1.0)),
])
def test_rectangle_matches_bivariate_normal_cdf(model, domain, rect):
    (a1, b1), (a2, b2) = rect
    got = rectangle_probability(model, domain, rect, tol=1e-12)
    assert got == pytest.approx(_bvn_rect(model, domain, a1, b1, a2, b2), abs=2e-7)


@pytest.mark.parametrize("domain", ["IP", "FF"])
def test_rectangle_matches_dblquad_tight(model, domain):
    rect = ((-0.2, 0.35), (0.1, 0.4))
    f = lambda xb, xa: joint_pdf(model, domain, xa, xb)
    ref, _ = integrate.dblquad(f, -0.2, 0.35, 0.1, 0.4, epsabs=1e-13, epsrel=1e-11)
    assert rectangle_probability(model, domain, rect, tol=1e-13) == pytest.approx(ref, abs=1e-10)


def test_sinc_rectangle_matches_dblquad(sinc_model):
    rect = ((-4.0, 1.0), (-2.0, 3.5))
    sp, _ = sinc_model.widths("FF")
    f = lambda u, v: joint_pdf(sinc_model, "FF", 0.5 * (v + u), 0.5 * (v - u)) / 2
    # integrate over the rotated region: v within the narrow band, u bounded by the rectangle
    (a1, b1), (a2, b2) = rect
    lo_u = lambda v: max(2 * a1 - v, v - 2 * b2)
    hi_u = lambda v: min(2 * b1 - v, v - 2 * a2)
    ref, _ = integrate.dblquad(lambda u, v: f(u, v), -12 * sp, 12 * sp, lo_u, hi_u,
                               epsabs=1e-11, epsrel=1e-10)
    assert rectangle_probability(sinc_model, "FF", rect, tol=1e-11) == pytest.approx(ref, abs=1e-8)


@pytest.mark.parametrize("domain", ["IP", "FF"])
def test_ten_sigma_box_is_one(model, domain):
    R = 10 * model.marginal_sigma(domain)
    assert rectangle_probability(model, domain, ((-R, R), (-R, R))) == pytest.approx(1, abs=1e-8)


@pytest.mark.parametrize("domain", ["IP", "FF"])
def test_quadrant_symmetry(model, sinc_model, domain):
    for m in (model, sinc_model):
        pp = rectangle_probability(m, domain, ((0, INF), (0, INF)))
        nn = rectangle_probability(m, domain, ((-INF, 0), (-INF, 0)))
        assert pp == pytest.approx(nn, abs=1e-10)


def test_quadrant_orthant_closed_form(model):
    # P(X>0, Y>0) = 1/4 + arcsin(rho) / (2 pi) for a centred bivariate normal
    for domain in ("IP", "FF"):
        sp, sm = model.widths(domain)
        rho = (sp**2 - sm**2) / (sp**2 + sm**2)
        got = rectangle_probability(model, domain, ((0, INF), (0, INF)), tol=1e-12)
        assert got == pytest.approx(0.25 + math.asin(rho) / (2 * math.pi), abs=1e-10)


def test_degenerate_and_invalid(model):
    assert rectangle_probability(model, "IP", ((1.0, 1.0), (0.0, 1.0))) == 0.0
    assert rectangle_probability(model, "IP", ((2.0, 1.0), (0.0, 1.0))) == 0.0
    with pytest.raises(ParameterError):
        rectangle_probability(model, "IP", ((0, 1), (0, 1)), tol=0.0)


@pytest.mark.parametrize("domain,d,T,offset", [
    ("IP", 2, 3.36, 0.0), ("IP", 3, 0.72, 0.1), ("IP", 5, 6.0, -0.3),
    ("FF", 2, 1.2, 0.0), ("FF", 4, 2.16, 0.05), ("FF", 6, 4.08, 0.0),
])
def test_matrix_matches_fourier_series(model, domain, d, T, offset):
    J = mask_joint_matrix(model, domain, MaskSpec(d, T, offset), tol=1e-10, support_sigmas=10)
    ref = fourier_joint_matrix(model, domain, d, T, offset)
    np.testing.assert_allclose(J.entries, ref, atol=5e-8)


def test_separable_matrix_matches_fourier_series(model):
    m = separable_model(0.7, model.c)
    for domain, T in (("IP", 1.0), ("FF", 0.8)):
        J = mask_joint_matrix(m, domain, MaskSpec(3, T), tol=1e-10, support_sigmas=10)
        np.testing.assert_allclose(J.entries, fourier_joint_matrix(m, domain, 3, T), atol=5e-8)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 6), st.floats(0.3, 8.0), st.sampled_from(["IP", "FF"]))
def test_matrix_invariants(d, T, domain):
    m = build_detection_model()
    tol = 1e-7
    J = mask_joint_matrix(m, domain, MaskSpec(d, T), tol=tol)
    assert np.all(J.entries >= 0)
    assert J.captured_mass <= 1 + 1e-9
    assert J.captured_mass == pytest.approx(1.0, abs=10 * tol)
    np.testing.assert_allclose(J.entries, J.entries.T, atol=tol)
    # x -> -x maps mask k to mask d-1-k when the offset is zero
    np.testing.assert_allclose(J.entries, J.entries[::-1, ::-1], atol=tol)


def test_distinct_arm_periods(model):
    J = mask_joint_matrix(model, "IP", MaskSpec(2, 2.0), MaskSpec(2, 3.0, 0.2), tol=1e-9,
                          support_sigmas=10)
    assert J.captured_mass == pytest.approx(1.0, abs=1e-8)
    assert J.period_b == 3.0 and J.offset_b == 0.2
    with pytest.raises(ParameterError):
        mask_joint_matrix(model, "IP", MaskSpec(2, 2.0), MaskSpec(3, 2.0))


def test_large_period_is_diagonal(model):
    # period ten times the beam diameter, slits centred on the axis
    d = 2
    T = 10 * 2 * 2 * model.marginal_sigma("IP")
    J = mask_joint_matrix(model, "IP", MaskSpec(d, T, -T / (2 * d)))
    off = J.entries.sum() - np.trace(J.entries)
    assert off < 1e-3


@pytest.mark.parametrize("d", [2, 3, 4, 6])
def test_small_period_is_uniform(model, d):
    for domain in ("IP", "FF"):
        J = mask_joint_matrix(model, domain, MaskSpec(d, 0.024))
        np.testing.assert_allclose(J.normalized(), 1 / d**2, atol=1e-3)
        np.testing.assert_allclose(J.entries.sum(axis=1), 1 / d, atol=1e-3)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_argmax_structure(model, d):
    T = 3.36 if d < 5 else 6.0
    Jx = mask_joint_matrix(model, "IP", MaskSpec(d, T))
    Jp = mask_joint_matrix(model, "FF", MaskSpec(d, T))
    assert list(np.argmax(Jx.entries, axis=1)) == list(range(d))
    assert list(np.argmax(Jp.entries, axis=1)) == list(range(d - 1, -1, -1))


def test_captured_mass_grows_with_support(model):
    masses = [mask_joint_matrix(model, "IP", MaskSpec(3, 1.0), tol=1e-10, support_sigmas=s).captured_mass
              for s in (2, 3, 4, 6)]
    assert masses == sorted(masses)
    assert masses[-1] == pytest.approx(1, abs=1e-8)


def test_joint_matrix_validation():
    with pytest.raises(ParameterError):
        JointMatrix(d=2, domain="IP", entries=np.ones((3, 3)))
    J = JointMatrix(d=2, domain="IP", entries=[[0.2, 0.1], [0.1, 0.2]])
    assert J.captured_mass == pytest.approx(0.6)
    np.testing.assert_allclose(J.normalized().sum(), 1.0)
