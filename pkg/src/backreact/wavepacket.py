"""Gaussian detector wavepackets on an inverted-oscillator trajectory.

The detector branch with mass ``m`` and acceleration ``a`` follows the
classical worldline ``z = cosh(a tau)/a``. Two packet forms are provided:
the exact Gaussian solution with initial width ``b`` and its semiclassical
(hbar -> 0 at fixed b) limit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import NonConvergenceError, TransitionSpec, require_positive

__all__ = [
    "PacketParams",
    "eval_exact",
    "eval_semiclassical",
    "energy_expectation",
    "energy_closed_form",
    "norm",
    "overlap_exponent",
    "overlap_peak",
    "transition_phase",
    "LargePhaseWarning",
]


class LargePhaseWarning(UserWarning):
    code = "phase-expansion-strained"


@dataclass(frozen=True)
class PacketParams:
    m: float
    a: float
    b: float
    hbar: float = 1.0

    def __post_init__(self):
        require_positive(m=self.m, a=self.a, b=self.b, hbar=self.hbar)

    def center(self, tau: float) -> float:
        return math.cosh(self.a * tau) / self.a

    def beta(self, tau: float) -> float:
        return -self.m * self.a / (self.hbar * math.sinh(self.a * tau))

    def alpha(self, tau: float) -> float:
        beta = self.beta(tau)
        c = math.cosh(self.a * tau)
        return 2 * self.b * beta / math.sqrt(1 + 4 * self.b**4 * beta**2 * c**2)

    def width(self, tau: float) -> float:
        """Standard width of |psi|^2 * sqrt(2) for the exact packet (1/|alpha|)."""
        if tau == 0:
            return self.b
        return 1.0 / abs(self.alpha(tau))


def _initial_gaussian(p: PacketParams, z):
    z = np.asarray(z, dtype=float)
    psi = (p.b * math.sqrt(math.pi)) ** -0.5 * np.exp(-((z - 1 / p.a) ** 2) / (2 * p.b**2))
    return psi.astype(complex)


def eval_exact(p: PacketParams, z, tau: float):
    """Exact Gaussian packet at position(s) ``z`` and proper time ``tau``.

    The amplitude is singular in its parameterisation at ``tau = 0``
    (beta diverges); that point returns the initial Gaussian directly.
    Square roots use the principal branch, which is continuous on each of
    the half-lines tau > 0 and tau < 0 and joins the initial Gaussian as
    tau -> 0 from either side.
    """
    if tau == 0:
        return _initial_gaussian(p, z)
    z = np.asarray(z, dtype=float)
    a, b = p.a, p.b
    c = math.cosh(a * tau)
    beta = p.beta(tau)
    alpha = p.alpha(tau)

    pref = np.sqrt(complex(beta / (1j * b * math.sqrt(math.pi)))) / np.sqrt(
        complex(1 / (2 * b**2) - 1j * beta * c)
    )
    # beta [z^2 c + k (c/a^2 - 2z/a - 4 z^2 beta^2 b^4 c)] with k = alpha^2/(4 b^2 beta^2),
    # regrouped so nothing cancels as tau -> 0 (beta -> infinity)
    d = 4 * b**4 * beta**2
    s = math.sinh(a * tau)
    c_minus_1 = 2 * math.sinh(0.5 * a * tau) ** 2
    phase = beta * (z**2 * c * d * s**2 + c * (z - 1 / a) ** 2 + 2 * z * c_minus_1 / a) / (1 + d * c**2)
    envelope = -0.5 * alpha**2 * (z - c / a) ** 2
    return pref * np.exp(1j * phase + envelope)


def _semiclassical_exponent(p: PacketParams, z, tau: float):
    """Exponent of the semiclassical packet and its first two z-derivatives."""
    z = np.asarray(z, dtype=float)
    c = math.cosh(p.a * tau)
    w2 = (p.b * c) ** 2
    k = p.m * p.a * math.tanh(p.a * tau) / p.hbar
    center = c / p.a
    phi = -1j * k * z**2 - (z - center) ** 2 / (2 * w2)
    dphi = -2j * k * z - (z - center) / w2
    d2phi = -2j * k - 1 / w2
    return phi, dphi, d2phi


def eval_semiclassical(p: PacketParams, z, tau: float):
    """Semiclassical packet: Gaussian envelope of width b cosh(a tau) on the
    classical trajectory, with phase -(m a z^2/hbar) tanh(a tau)."""
    phi, _, _ = _semiclassical_exponent(p, z, tau)
    norm_ = (p.b * math.sqrt(math.pi) * math.cosh(p.a * tau)) ** -0.5
    return norm_ * np.exp(phi)


def _quad(fn, lo, hi, rel_tol, what):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(fn, lo, hi, epsabs=0.0, epsrel=rel_tol, limit=200)
        except integrate.IntegrationWarning as exc:
            raise NonConvergenceError(
                f"quadrature for {what} did not converge: {exc}", lo=lo, hi=hi, rel_tol=rel_tol
            ) from None
    return value, err


def _window(p: PacketParams, tau: float, exact: bool) -> tuple[float, float]:
    center = p.center(tau)
    half = 10 * p.b * math.cosh(p.a * tau)
    if exact:
        half = max(half, 10 * p.width(tau))
    return center - half, center + half


def norm(p: PacketParams, tau: float, exact: bool = True, rel_tol: float = 1e-10) -> float:
    """Integral of |psi|^2 over z by adaptive quadrature."""
    ev = eval_exact if exact else eval_semiclassical
    lo, hi = _window(p, tau, exact)
    value, _ = _quad(lambda z: float(abs(ev(p, z, tau)) ** 2), lo, hi, rel_tol, "norm")
    return value


def energy_expectation(p: PacketParams, tau: float, rel_tol: float = 1e-8) -> float:
    """<H> = m [ (hbar^2/4m^2) <psi|d^2/dz^2|psi> + a^2 <z^2> ] for the semiclassical packet.

    Both expectation values are computed by quadrature. The narrow-packet
    result is ``m``; finite width adds ``m a^2 b^2/2 - hbar^2/(8 m b^2 cosh^2)``,
    see :func:`energy_closed_form`.
    """
    lo, hi = _window(p, tau, exact=False)
    norm_ = (p.b * math.sqrt(math.pi) * math.cosh(p.a * tau)) ** -1

    def density(z):
        phi, _, _ = _semiclassical_exponent(p, z, tau)
        return norm_ * math.exp(2 * phi.real)

    def lap(z):
        _, dphi, d2phi = _semiclassical_exponent(p, z, tau)
        return density(z) * (d2phi + dphi**2).real

    z2, _ = _quad(lambda z: z * z * density(z), lo, hi, rel_tol, "<z^2>")
    d2, _ = _quad(lap, lo, hi, rel_tol, "<d^2/dz^2>")
    return p.m * (p.hbar**2 / (4 * p.m**2) * d2 + p.a**2 * z2)


def energy_closed_form(p: PacketParams, tau: float) -> float:
    """Gaussian-moment value of :func:`energy_expectation`."""
    c = math.cosh(p.a * tau)
    return p.m * (1 + p.a**2 * p.b**2 / 2) - p.hbar**2 / (8 * p.m * p.b**2 * c**2)


def _centers(spec: TransitionSpec, tau: float):
    c1, c2 = math.cosh(spec.a1 * tau), math.cosh(spec.a2 * tau)
    return c1 / spec.a1, c2 / spec.a2, c1, c2


def overlap_exponent(spec: TransitionSpec, b: float, z, tau: float, hbar: float = 1.0):
    """ln(psi_2^* psi_1) for two semiclassical packets of common width ``b``.

    Envelope centers follow the classical trajectories cosh(a_i tau)/a_i.
    """
    require_positive(b=b, hbar=hbar)
    z = np.asarray(z, dtype=float)
    z1, z2, c1, c2 = _centers(spec, tau)
    real = -((z - z1) ** 2 / c1**2 + (z - z2) ** 2 / c2**2) / (2 * b**2)
    real = real - 0.5 * math.log(b**2 * math.pi * c1 * c2)
    imag = z**2 / hbar * (
        spec.m2 * spec.a2 * math.tanh(spec.a2 * tau) - spec.m1 * spec.a1 * math.tanh(spec.a1 * tau)
    )
    return real + 1j * imag


def overlap_peak(spec: TransitionSpec, tau: float) -> float:
    """Peak of |psi_2^* psi_1|: midpoint of the two envelope centers, exact
    for equal widths and correct to O(da^2) otherwise."""
    z1, z2, _, _ = _centers(spec, tau)
    return 0.5 * (z1 + z2)


def transition_phase(m: float, a: float, da: float, dm: float, tau: float,
                     hbar: float = 1.0) -> complex:
    """Imaginary exponent of psi_2^* psi_1 at the overlap peak, to first order
    in (da, dm):  (i/2 hbar a) [ (dm + m da/a) sinh(2 a tau) + 2 m da tau ].

    Warns when ``|da*tau|`` is not small, where the expansion is unreliable.
    """
    require_positive(m=m, a=a, hbar=hbar)
    if abs(da * tau) > 0.1:
        warnings.warn(f"|da*tau| = {abs(da * tau):.3g} is not small", LargePhaseWarning,
                      stacklevel=2)
    mismatch = dm + m * da / a
    # the sinh term vanishes identically on the force law; skip it so large a*tau cannot overflow
    growing = mismatch * math.sinh(2 * a * tau) if mismatch else 0.0
    return 1j / (2 * hbar * a) * (growing + 2 * m * da * tau)
