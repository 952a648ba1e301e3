"""Mask-integrated joint probability matrices.

``P(k, l)`` is the probability that photon A passes mask ``k`` and photon B
passes mask ``l`` at the same detection plane.  Each entry is a sum of
rectangle probabilities over slit pairs; each rectangle is a one-dimensional
adaptive integral in rotated coordinates (see ``_kernels_py``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConvergenceError, ParameterError
from .masks import MaskSpec
from .model import DetectionModel, Domain, sinc_sq_cdf

# Integration range of the narrow rotated coordinate, in its own widths.
NARROW_CUT = 8.5
MAX_DEPTH = 50


@dataclass
class JointMatrix:
    d: int
    domain: Domain
    entries: np.ndarray
    captured_mass: float = field(default=float("nan"))
    quad_tolerance: float = 0.0
    period: float | None = None
    offset: float = 0.0
    period_b: float | None = None
    offset_b: float | None = None

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        if self.entries.shape != (self.d, self.d):
            raise ParameterError(f"entries must be {self.d}x{self.d}, got {self.entries.shape}")
        self.domain = Domain.parse(self.domain)
        if math.isnan(self.captured_mass):
            self.captured_mass = float(self.entries.sum())

    def normalized(self) -> np.ndarray:
        total = self.entries.sum()
        if total <= 0:
            raise ParameterError("matrix has no probability mass")
        return self.entries / total


def _orientation(model: DetectionModel, domain: Domain):
    """Pick the integration coordinate.

    Returns ``(reflect_b, sig_outer, sig_inner, inner_cdf)``: the outer
    integral runs over ``xA - xB`` or, with ``reflect_b``, over ``xA + xB``.
    """
    sp, sm = model.widths(domain)
    if model.uses_sinc(domain):
        scale = model.sinc_scale
        return True, sp, sm, (lambda x: sinc_sq_cdf(x, scale))
    if sm <= sp:
        return False, sm, sp, None
    return True, sp, sm, None


def rectangle_probability(
    model: DetectionModel,
    domain: Domain | str,
    rect: tuple[tuple[float, float], tuple[float, float]],
    tol: float = 1e-10,
    *,
    kernel: str | None = None,
) -> float:
    """Probability that ``(xA, xB)`` falls in ``[a1, b1] x [a2, b2]``.

    Infinite bounds are allowed.  A degenerate rectangle has probability 0.
    """
    if not tol > 0:
        raise ParameterError("tol must be positive")
    domain = Domain.parse(domain)
    (a1, b1), (a2, b2) = rect
    if not (b1 > a1 and b2 > a2):
        return 0.0
    reflect, sig_n, sig_w, cdf = _orientation(model, domain)
    if reflect:
        a2, b2 = -b2, -a2
    # Infinite edges are replaced by a bound far beyond both profiles.
    big = 1e3 * (sig_n + sig_w) + 1e3
    a1, b1, a2, b2 = (min(max(x, -big), big) for x in (a1, b1, a2, b2))
    k = kernels.get(kernel, gaussian=cdf is None)
    value, err, failed = k.rect_prob(a1, b1, a2, b2, sig_n, sig_w, NARROW_CUT, tol, MAX_DEPTH,
                                     wide_cdf=cdf)
    if failed:
        raise ConvergenceError(f"rectangle integral did not reach tol={tol:g}", achieved=err)
    return value


def support_halfwidth(model: DetectionModel, domain: Domain | str, support_sigmas: float) -> float:
    return support_sigmas * model.marginal_sigma(domain)


def mask_joint_matrix(
    model: DetectionModel,
    domain: Domain | str,
    spec_a: MaskSpec,
    spec_b: MaskSpec | None = None,
    tol: float = 1e-6,
    support_sigmas: float = 6.0,
    *,
    kernel: str | None = None,
) -> JointMatrix:
    """d x d joint probabilities of mask pairs at one detection plane."""
    domain = Domain.parse(domain)
    spec_b = spec_b or spec_a
    if spec_a.d != spec_b.d:
        raise ParameterError("both arms must use the same mask dimension")
    if not tol > 0:
        raise ParameterError("tol must be positive")
    if not support_sigmas > 0:
        raise ParameterError("support_sigmas must be positive")
    d = spec_a.d
    R = support_halfwidth(model, domain, support_sigmas)
    reflect, sig_n, sig_w, cdf = _orientation(model, domain)
    ob = -spec_b.offset if reflect else spec_b.offset
    k = kernels.get(kernel, gaussian=cdf is None)
    entries, err, failed, _ = k.pair_sum(
        spec_a.offset, spec_a.slit_width, ob, spec_b.slit_width, d, -R, R, reflect,
        sig_n, sig_w, NARROW_CUT, tol, MAX_DEPTH, wide_cdf=cdf,
    )
    if failed:
        raise ConvergenceError(
            f"{failed} integration pieces missed tolerance {tol:g}", achieved=err)
    return JointMatrix(
        d=d,
        domain=domain,
        entries=entries,
        captured_mass=float(entries.sum()),
        quad_tolerance=tol,
        period=spec_a.period,
        offset=spec_a.offset,
        period_b=spec_b.period,
        offset_b=spec_b.offset,
    )
