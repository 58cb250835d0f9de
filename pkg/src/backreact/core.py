"""Units, constants, validation and the constant-force law.

Reduced units are used throughout: c = 1, k_B = 1, and by default hbar = 1,
f = 1. Every formula in the package is homogeneous in these constants, so
they can be overridden freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "BackreactError",
    "DomainError",
    "ConfigurationError",
    "ValidityError",
    "NumericalError",
    "NonConvergenceError",
    "IntegrationPathError",
    "SeriesTruncationError",
    "Constants",
    "ForceLaw",
    "DetectorState",
    "TransitionSpec",
    "force_law",
    "consistent_dm",
    "require_positive",
]


class BackreactError(Exception):
    """Base class for all package errors."""


class DomainError(BackreactError, ValueError):
    """An input lies outside the domain of a formula."""


class ConfigurationError(BackreactError, ValueError):
    """Inconsistent run configuration (e.g. Hawking temperature outside black-hole mode)."""


class ValidityError(BackreactError):
    """Parameters fall outside the semiclassical validity window."""

    def __init__(self, message: str, failed: tuple[str, ...] = ()):
        super().__init__(message)
        self.failed = failed


class NumericalError(BackreactError, ArithmeticError):
    """A numerical procedure did not deliver the requested accuracy."""

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class NonConvergenceError(NumericalError):
    pass


class IntegrationPathError(NumericalError):
    pass


class SeriesTruncationError(NumericalError):
    pass


def require_positive(**values: float) -> None:
    """Raise :class:`DomainError` unless every keyword value is finite and > 0."""
    for name, v in values.items():
        if not (math.isfinite(v) and v > 0):
            raise DomainError(f"{name} must be positive and finite, got {v!r}")


@dataclass(frozen=True)
class Constants:
    """Physical constants in reduced units (c = k_B = 1).

    ``G`` is only meaningful in black-hole mode, where it fixes the force
    ``f = 1/(4G)``.
    """

    hbar: float = 1.0
    G: float | None = None

    def __post_init__(self):
        require_positive(hbar=self.hbar)
        if self.G is not None:
            require_positive(G=self.G)

    @property
    def blackhole(self) -> bool:
        return self.G is not None


@dataclass(frozen=True)
class ForceLaw:
    """Constant force ``f`` linking mass and acceleration through ``m a = f``."""

    f: float = 1.0
    blackhole: bool = False

    def __post_init__(self):
        require_positive(f=self.f)

    @classmethod
    def from_constants(cls, constants: Constants, f: float | None = None) -> "ForceLaw":
        """Black-hole mode when ``constants.G`` is set, otherwise use ``f``."""
        if constants.blackhole:
            if f is not None:
                raise ConfigurationError("black-hole mode fixes f = 1/(4G); do not pass f")
            return cls(f=1.0 / (4.0 * constants.G), blackhole=True)
        return cls(f=1.0 if f is None else f)

    def acceleration(self, m: float) -> float:
        return force_law(m, self.f)

    def mass(self, a: float) -> float:
        require_positive(a=a)
        return self.f / a


def force_law(m: float, f: float) -> float:
    """Proper acceleration of a detector of mass ``m`` under constant force ``f``.

    Examples
    --------
    >>> force_law(2.0, 1.0)
    0.5
    """
    require_positive(m=m, f=f)
    return f / m


def consistent_dm(m: float, a: float, da: float) -> float:
    """Mass change required by energy conservation for an acceleration change ``da``.

    Returns ``-m*da/a``; the sign is always opposite to ``da``.
    """
    require_positive(m=m, a=a)
    if not math.isfinite(da):
        raise DomainError(f"da must be finite, got {da!r}")
    return -(m * da / a)


@dataclass(frozen=True)
class DetectorState:
    """Detector on a hyperbolic branch: mass, acceleration, packet width, proper time."""

    m: float
    a: float
    b: float
    tau: float = 0.0
    f: float | None = None

    def __post_init__(self):
        require_positive(m=self.m, a=self.a, b=self.b)
        if self.f is not None and not math.isclose(self.m * self.a, self.f, rel_tol=1e-12):
            raise DomainError(f"m*a = {self.m * self.a!r} violates the force law f = {self.f!r}")

    @classmethod
    def from_force(cls, f: float, a: float, b: float, tau: float = 0.0) -> "DetectorState":
        require_positive(a=a)
        return cls(m=f / a, a=a, b=b, tau=tau, f=f)

    @property
    def z_cl(self) -> float:
        """Classical position a^-1 cosh(a tau), never below 1/a."""
        return math.cosh(self.a * self.tau) / self.a


@dataclass(frozen=True)
class TransitionSpec:
    """A transition (a1, m1) -> (a2, m2) observed for a proper-time window ``L``.

    ``da = 0`` is allowed at construction; probability evaluations reject it.
    """

    a1: float
    a2: float
    m1: float
    m2: float
    L: float = 1.0
    Q: float = 1.0

    def __post_init__(self):
        require_positive(a1=self.a1, a2=self.a2, m1=self.m1, m2=self.m2, L=self.L, Q=self.Q)
        if self.dm * self.da > 0:
            raise DomainError(
                f"dm={self.dm!r} and da={self.da!r} have the same sign; "
                "energy conservation requires opposite signs"
            )
        if self.da != 0:
            first_order = -self.m_mid * self.da / self.a_mid
            residual = abs(self.dm - first_order) / abs(first_order)
            if residual > abs(self.da / self.a_mid):
                raise DomainError(
                    f"dm={self.dm!r} departs from -m da/a={first_order!r} "
                    f"by {residual:.3g} (relative), more than |da/a|"
                )

    @classmethod
    def from_midpoint(cls, a: float, da: float, f: float = 1.0, L: float = 1.0,
                      Q: float = 1.0) -> "TransitionSpec":
        """Symmetric transition a -/+ da/2 with masses fixed by ``m_i = f/a_i``."""
        require_positive(a=a, f=f)
        a1, a2 = a - da / 2.0, a + da / 2.0
        if a1 <= 0 or a2 <= 0:
            raise DomainError(f"|da| = {abs(da)!r} too large for a = {a!r}")
        return cls(a1=a1, a2=a2, m1=f / a1, m2=f / a2, L=L, Q=Q)

    @property
    def da(self) -> float:
        return self.a2 - self.a1

    @property
    def dm(self) -> float:
        return self.m2 - self.m1

    @property
    def a_mid(self) -> float:
        return 0.5 * (self.a1 + self.a2)

    @property
    def m_mid(self) -> float:
        return 0.5 * (self.m1 + self.m2)

    @property
    def is_emission(self) -> bool:
        return self.da > 0
