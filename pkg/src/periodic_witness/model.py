"""Two-photon source model and the joint densities at the detection planes.

Only the horizontal transverse coordinate is modelled.  The two-photon
amplitude factorises in the rotated coordinates ``v = xA + xB`` and
``u = xA - xB``, so each detection-plane density is fixed by two widths per
plane: the standard deviation of the sum and of the difference.

Lengths are in mm throughout; ``alpha`` and ``c`` are in mm^2.  Wavelengths
are accepted in nm at construction time and converted once.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import ParameterError

NM_TO_MM = 1e-6

# Normalisation of sinc^2(q^2) over the real line: int sin^2(q^2)/q^4 dq.
SINC_SQ_NORM = 4.0 * math.sqrt(math.pi) / 3.0
# Second moment of q under the normalised sinc^2(q^2) density.
SINC_SQ_SECOND_MOMENT = 0.75


class Domain(str, enum.Enum):
    IP = "IP"
    FF = "FF"

    @classmethod
    def parse(cls, value: "Domain | str") -> "Domain":
        if isinstance(value, Domain):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ParameterError(f"unknown domain {value!r}; expected IP or FF") from None


class SincApprox(str, enum.Enum):
    GAUSSIAN_VARIANCE_MATCH = "gaussian_variance_match"
    NUMERIC = "numeric"

    @classmethod
    def parse(cls, value: "SincApprox | str") -> "SincApprox":
        if isinstance(value, SincApprox):
            return value
        v = str(value).lower()
        if v in ("gaussian", "gauss"):
            return cls.GAUSSIAN_VARIANCE_MATCH
        try:
            return cls(v)
        except ValueError:
            raise ParameterError(f"unknown sinc treatment {value!r}") from None


def _require_positive(**values: float) -> None:
    for name, v in values.items():
        if not (isinstance(v, (int, float, np.floating, np.integer)) and math.isfinite(v) and v > 0):
            raise ParameterError(f"{name} must be a finite positive number, got {v!r}")


@dataclass(frozen=True)
class SourceParams:
    """SPDC source parameters. Wavelengths in nm, lengths in mm."""

    pump_wavelength: float = 325.0
    crystal_length: float = 2.0
    pump_waist: float = 0.464
    photon_wavelength: float | None = None

    def __post_init__(self):
        if self.photon_wavelength is None:
            object.__setattr__(self, "photon_wavelength", 2.0 * self.pump_wavelength)
        _require_positive(
            pump_wavelength=self.pump_wavelength,
            photon_wavelength=self.photon_wavelength,
            crystal_length=self.crystal_length,
            pump_waist=self.pump_waist,
        )


@dataclass(frozen=True)
class OpticalSetup:
    """Imaging magnification and Fourier-system effective focal length (mm)."""

    magnification: float = 5.0
    effective_focal_length: float = 333.0

    def __post_init__(self):
        _require_positive(
            magnification=self.magnification,
            effective_focal_length=self.effective_focal_length,
        )


@dataclass(frozen=True)
class DetectionModel:
    """Rotated-coordinate widths at both detection planes.

    ``sigma_plus_*`` is the standard deviation of ``xA + xB`` and
    ``sigma_minus_*`` that of ``xA - xB``.  With ``sinc_approx=NUMERIC`` the
    far-field difference coordinate follows the exact sinc^2 phase-matching
    profile (same variance as ``sigma_minus_ff``) instead of a Gaussian.
    """

    alpha: float
    c: float
    sigma_minus_ip: float
    sigma_plus_ip: float
    sigma_plus_ff: float
    sigma_minus_ff: float
    magnification: float = 5.0
    sinc_approx: SincApprox = SincApprox.GAUSSIAN_VARIANCE_MATCH
    source: SourceParams | None = field(default=None, compare=False)
    optics: OpticalSetup | None = field(default=None, compare=False)

    def __post_init__(self):
        _require_positive(
            alpha=self.alpha,
            c=self.c,
            sigma_minus_ip=self.sigma_minus_ip,
            sigma_plus_ip=self.sigma_plus_ip,
            sigma_plus_ff=self.sigma_plus_ff,
            sigma_minus_ff=self.sigma_minus_ff,
            magnification=self.magnification,
        )
        object.__setattr__(self, "sinc_approx", SincApprox.parse(self.sinc_approx))

    @property
    def separable(self) -> bool:
        return self.sigma_minus_ip == self.sigma_plus_ip and self.sigma_minus_ff == self.sigma_plus_ff

    @property
    def entangled_ordering(self) -> bool:
        return self.sigma_minus_ip < self.sigma_plus_ip and self.sigma_plus_ff < self.sigma_minus_ff

    @property
    def sinc_scale(self) -> float:
        """Length scale of the sinc^2 profile of ``xA - xB`` in the far field."""
        return self.sigma_minus_ff / math.sqrt(SINC_SQ_SECOND_MOMENT)

    def widths(self, domain: Domain | str) -> tuple[float, float]:
        """Return ``(sigma_plus, sigma_minus)`` for a detection plane."""
        if Domain.parse(domain) is Domain.IP:
            return self.sigma_plus_ip, self.sigma_minus_ip
        return self.sigma_plus_ff, self.sigma_minus_ff

    def uses_sinc(self, domain: Domain | str) -> bool:
        return self.sinc_approx is SincApprox.NUMERIC and Domain.parse(domain) is Domain.FF

    def marginal_sigma(self, domain: Domain | str) -> float:
        """Standard deviation of a single photon's coordinate."""
        sp, sm = self.widths(domain)
        return 0.5 * math.hypot(sp, sm)


def fourier_scale(source: SourceParams, optics: OpticalSetup) -> float:
    """alpha = lambda f_e / 2 pi in mm^2."""
    return source.photon_wavelength * NM_TO_MM * optics.effective_focal_length / (2.0 * math.pi)


def phase_matching_coefficient(source: SourceParams) -> float:
    """Coefficient b (mm^2) in sinc(b (pA - pB)^2)."""
    return source.crystal_length * source.pump_wavelength * NM_TO_MM / (8.0 * math.pi)


def build_detection_model(
    source: SourceParams | None = None,
    optics: OpticalSetup | None = None,
    sinc_approx: SincApprox | str = SincApprox.GAUSSIAN_VARIANCE_MATCH,
) -> DetectionModel:
    source = source or SourceParams()
    optics = optics or OpticalSetup()
    M = optics.magnification
    alpha = fourier_scale(source, optics)
    lam_p = source.pump_wavelength * NM_TO_MM
    L = source.crystal_length
    wp = source.pump_waist

    sigma_minus_ip = M * math.sqrt(9.0 * L * lam_p / (10.0 * math.pi))
    sigma_plus_ff = 0.5 * alpha / wp
    # Pump intensity exp(-x^2 / 2 wp^2) over the pair centroid (xA + xB) / 2.
    sigma_plus_ip = 2.0 * M * wp
    # Variance of pA - pB under sinc^2(b p^2) is 3 / (4 b).
    b = phase_matching_coefficient(source)
    sigma_minus_ff = alpha * math.sqrt(SINC_SQ_SECOND_MOMENT / b)

    return DetectionModel(
        alpha=alpha,
        c=M * alpha,
        sigma_minus_ip=sigma_minus_ip,
        sigma_plus_ip=sigma_plus_ip,
        sigma_plus_ff=sigma_plus_ff,
        sigma_minus_ff=sigma_minus_ff,
        magnification=M,
        sinc_approx=SincApprox.parse(sinc_approx),
        source=source,
        optics=optics,
    )


def separable_model(sigma_ip: float, c: float, magnification: float = 5.0,
                    excess: float = 1.0) -> DetectionModel:
    """Product of two identical Gaussian photons.

    ``sigma_ip`` is the IP width of ``xA +- xB`` (both equal).  The far-field
    width is ``excess * c / sigma_ip``; ``excess = 1`` is a pure
    minimum-uncertainty photon and ``excess > 1`` a mixed one.
    """
    _require_positive(sigma_ip=sigma_ip, c=c, magnification=magnification, excess=excess)
    if excess < 1.0:
        raise ParameterError(f"excess must be >= 1 for a physical state, got {excess!r}")
    sigma_ff = excess * c / sigma_ip
    return DetectionModel(
        alpha=c / magnification,
        c=c,
        sigma_minus_ip=sigma_ip,
        sigma_plus_ip=sigma_ip,
        sigma_plus_ff=sigma_ff,
        sigma_minus_ff=sigma_ff,
        magnification=magnification,
    )


def sinc_sq_pdf(u, scale: float):
    """Density of ``u`` proportional to sinc^2((u/scale)^2), normalised."""
    q = np.asarray(u, dtype=float) / scale
    q2 = q * q
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.where(q2 < 1e-8, 1.0 - q2 * q2 / 3.0, (np.sin(q2) / np.where(q2 == 0, 1.0, q2)) ** 2)
    return val / (scale * SINC_SQ_NORM)


def _sinc_sq_half_integral(q):
    """int_0^q sin^2(t^2)/t^4 dt for q >= 0 (closed form through Fresnel C)."""
    q = np.asarray(q, dtype=float)
    small = q < 1e-2
    qs = np.where(small, 1.0, q)
    _, fc = special.fresnel(2.0 * qs / math.sqrt(math.pi))
    q2 = qs * qs
    big = (
        -np.sin(q2) ** 2 / (3.0 * qs**3)
        - 2.0 * np.sin(2.0 * q2) / (3.0 * qs)
        + (4.0 / 3.0) * math.sqrt(math.pi) * fc
    )
    # Series of the integrand 1 - t^4/3 + 2 t^8/45 integrated term by term.
    ser = q - q**5 / 15.0 + 2.0 * q**9 / 405.0
    return np.where(small, ser, big)


def sinc_sq_cdf(u, scale: float):
    """Cumulative distribution of :func:`sinc_sq_pdf`."""
    q = np.asarray(u, dtype=float) / scale
    out = 0.5 + np.sign(q) * _sinc_sq_half_integral(np.abs(q)) / SINC_SQ_NORM
    return np.clip(out, 0.0, 1.0)


def joint_pdf(model: DetectionModel, domain: Domain | str, xA, xB):
    """Normalised joint detection density (mm^-2) at one detection plane."""
    domain = Domain.parse(domain)
    sp, sm = model.widths(domain)
    xA = np.asarray(xA, dtype=float)
    xB = np.asarray(xB, dtype=float)
    v = xA + xB
    u = xA - xB
    # The Jacobian of (xA, xB) -> (u, v) is 2.
    pv = np.exp(-0.5 * (v / sp) ** 2) / (math.sqrt(2.0 * math.pi) * sp)
    if model.uses_sinc(domain):
        pu = sinc_sq_pdf(u, model.sinc_scale)
    else:
        pu = np.exp(-0.5 * (u / sm) ** 2) / (math.sqrt(2.0 * math.pi) * sm)
    out = 2.0 * pv * pu
    return float(out) if out.ndim == 0 else out
