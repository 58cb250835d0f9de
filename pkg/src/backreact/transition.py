"""Closed-form single-quantum emission and absorption with recoil.

For a transition with midpoint acceleration ``a`` and acceleration change
``da`` under constant force ``f`` the first-order weight is

    P21 = Q^2 a^2 L / (4 f |da|) * sigma(da) / (1 - exp(-2 pi f da / (hbar a^3)))

i.e. a Planck factor at the Unruh temperature hbar a / 2 pi for a quantum of
energy hbar omega = f |da| / a^2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .core import (
    ConfigurationError,
    Constants,
    DomainError,
    TransitionSpec,
    force_law,
    require_positive,
)

__all__ = [
    "TransitionResult",
    "PerturbationStrainedWarning",
    "boltzmann_exponent",
    "prefactor",
    "p21_closed_form",
    "detailed_balance_ratio",
    "unruh_temperature",
    "hawking_temperature",
]


class PerturbationStrainedWarning(UserWarning):
    code = "perturbation-strained"


@dataclass(frozen=True)
class TransitionResult:
    p21: float
    x: float
    direction: str
    prefactor: float
    temperature: float
    homega: float
    temperature_kind: str = "unruh"

    def as_dict(self) -> dict:
        return {
            "p21": self.p21,
            "x": self.x,
            "direction": self.direction,
            "prefactor": self.prefactor,
            "temperature": self.temperature,
            "temperature_kind": self.temperature_kind,
            "homega": self.homega,
        }


def _check_transition(spec: TransitionSpec) -> None:
    if spec.da == 0:
        raise DomainError(
            "da = 0: spontaneous-pole degenerate case, the n=0 pole sits on the "
            "integration contour and no transition occurs"
        )


def boltzmann_exponent(spec: TransitionSpec, c: Constants, f: float) -> float:
    """x = 2 pi f |da| / (hbar a^3) with a the midpoint acceleration."""
    _check_transition(spec)
    require_positive(f=f)
    return 2 * math.pi * f * abs(spec.da) / (c.hbar * spec.a_mid**3)


def prefactor(spec: TransitionSpec, f: float) -> float:
    """Q^2 a^2 L / (4 f |da|)."""
    _check_transition(spec)
    return spec.Q**2 * spec.a_mid**2 * spec.L / (4 * f * abs(spec.da))


def p21_closed_form(spec: TransitionSpec, c: Constants | None = None,
                    f: float = 1.0) -> TransitionResult:
    """Emission (da > 0) or absorption (da < 0) weight of one quantum.

    The result is a first-order perturbative weight, not a bounded
    probability; values above 1 raise :class:`PerturbationStrainedWarning`.

    Examples
    --------
    >>> spec = TransitionSpec.from_midpoint(a=1.0, da=0.1, f=1.0)
    >>> round(p21_closed_form(spec).p21, 6)
    5.35892
    """
    c = c or Constants()
    x = boltzmann_exponent(spec, c, f)
    pre = prefactor(spec, f)
    # 1/(1 - e^-x) without cancellation for small x
    occupation = -1.0 / math.expm1(-x)
    if spec.is_emission:
        p = pre * occupation
        direction = "emission"
    else:
        p = pre * math.exp(-x) * occupation
        direction = "absorption"
    if p > 1:
        warnings.warn(f"P21 = {p:.6g} exceeds 1; first-order perturbation theory is strained",
                      PerturbationStrainedWarning, stacklevel=2)
    kind = "hawking" if c.blackhole else "unruh"
    return TransitionResult(
        p21=p,
        x=x,
        direction=direction,
        prefactor=pre,
        temperature=unruh_temperature(spec.a_mid, c),
        homega=f * abs(spec.da) / spec.a_mid**2,
        temperature_kind=kind,
    )


def detailed_balance_ratio(spec: TransitionSpec, c: Constants | None = None,
                           f: float = 1.0) -> float:
    """P(emission, |da|) / P(absorption, |da|), which equals exp(x)."""
    c = c or Constants()
    _check_transition(spec)
    up = spec if spec.is_emission else _mirror(spec)
    down = _mirror(up)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PerturbationStrainedWarning)
        return p21_closed_form(up, c, f).p21 / p21_closed_form(down, c, f).p21


def _mirror(spec: TransitionSpec) -> TransitionSpec:
    return TransitionSpec(a1=spec.a2, a2=spec.a1, m1=spec.m2, m2=spec.m1, L=spec.L, Q=spec.Q)


def unruh_temperature(a, c: Constants | None = None) -> float:
    """hbar a / 2 pi. Accepts an acceleration or a :class:`TransitionSpec`
    (its midpoint acceleration is used)."""
    c = c or Constants()
    if isinstance(a, TransitionSpec):
        a = a.a_mid
    require_positive(a=a)
    return c.hbar * a / (2 * math.pi)


def hawking_temperature(m: float, c: Constants) -> float:
    """hbar / (8 pi G m); only defined in black-hole mode (``c.G`` set)."""
    if not c.blackhole:
        raise ConfigurationError("Hawking temperature requires black-hole mode (set G)")
    require_positive(m=m)
    return c.hbar / (8 * math.pi * c.G * m)


def unruh_of_mass(m: float, c: Constants, f: float) -> float:
    """Unruh temperature of a detector of mass ``m`` under force ``f``."""
    return unruh_temperature(force_law(m, f), c)
