"""Evaporation of the accelerated detector and N-quantum emission cascades.

The mean mass loss per unit time is

    mdot = -Q^2 f I(x_min) / (8 pi m),   I(x_min) = int_{x_min}^inf dx / (e^x - 1),

with a sharp infrared cutoff ``x_min``. Integrating gives
``m(tau) = m0 sqrt(1 - tau/tau_d)`` with ``tau_d = 4 pi m0^2 / (f Q^2 I)``
and ``a(tau) = f / m(tau)``.
"""

from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    BackreactError,
    Constants,
    DomainError,
    TransitionSpec,
    ValidityError,
    require_positive,
)
from .transition import PerturbationStrainedWarning, p21_closed_form

__all__ = [
    "EvaporationParams",
    "EvaporationTrajectory",
    "CascadeStep",
    "CascadeResult",
    "ValidityReport",
    "ValidityWarning",
    "ir_integral",
    "mass_loss_rate",
    "decay_time",
    "trajectory",
    "discretize",
    "cascade_probability",
    "planck_cdf",
    "sample_planck_frequency",
    "derive_stream",
    "validity_check",
]


class ValidityWarning(UserWarning):
    code = "validity-marginal"


@dataclass(frozen=True)
class EvaporationParams:
    m0: float
    f: float = 1.0
    Q: float = 1.0
    x_min: float = 0.1
    hbar: float = 1.0

    def __post_init__(self):
        require_positive(m0=self.m0, f=self.f, Q=self.Q, hbar=self.hbar)
        if not (math.isfinite(self.x_min) and self.x_min > 0):
            raise DomainError(f"x_min must be > 0 (the Planck integral diverges at 0), got {self.x_min!r}")

    @property
    def constants(self) -> Constants:
        return Constants(hbar=self.hbar)


def ir_integral(x_min: float) -> float:
    """int_{x_min}^inf dx/(e^x - 1) = -ln(1 - exp(-x_min))."""
    if not x_min > 0:
        raise DomainError(f"infrared cutoff must be > 0, got {x_min!r}: the integral diverges")
    return -math.log(-math.expm1(-x_min))


def mass_loss_rate(m: float, p: EvaporationParams) -> float:
    """dm/dtau = -Q^2 f I(x_min) / (8 pi m); negative (emission only)."""
    require_positive(m=m)
    return -(p.Q**2) * p.f * ir_integral(p.x_min) / (8 * math.pi * m)


def decay_time(p: EvaporationParams) -> float:
    """tau_d = 4 pi m0^2 / (f Q^2 I(x_min))."""
    return 4 * math.pi * p.m0**2 / (p.f * p.Q**2 * ir_integral(p.x_min))


@dataclass(frozen=True)
class EvaporationTrajectory:
    params: EvaporationParams
    tau_d: float
    tau: np.ndarray
    m: np.ndarray
    a: np.ndarray
    L: float | None = None
    N: int | None = None

    @property
    def samples(self) -> list[tuple[float, float, float]]:
        return list(zip(self.tau.tolist(), self.m.tolist(), self.a.tolist()))

    def mass_at(self, tau):
        return self.params.m0 * np.sqrt(1 - np.asarray(tau) / self.tau_d)

    def acceleration_at(self, tau):
        return self.params.f / self.mass_at(tau)

    def temperature(self) -> np.ndarray:
        return self.params.hbar * self.a / (2 * math.pi)


def trajectory(p: EvaporationParams, n_samples: int = 101,
               tau_end_fraction: float = 0.99) -> EvaporationTrajectory:
    """Sample m(tau) and a(tau) uniformly on [0, tau_end_fraction * tau_d].

    ``tau_d`` itself is excluded: the acceleration diverges there.
    """
    if not 0 < tau_end_fraction < 1:
        raise DomainError(
            f"tau_end_fraction must lie in (0, 1), got {tau_end_fraction!r}; "
            "the acceleration diverges at tau_d"
        )
    if n_samples < 1:
        raise DomainError(f"n_samples must be >= 1, got {n_samples!r}")
    tau_d = decay_time(p)
    if n_samples == 1:
        tau = np.zeros(1)
    else:
        tau = np.linspace(0.0, tau_end_fraction * tau_d, n_samples)
    m = p.m0 * np.sqrt(1 - tau / tau_d)
    a = p.f / m
    return EvaporationTrajectory(params=p, tau_d=tau_d, tau=tau, m=m, a=a)


@dataclass(frozen=True)
class ValidityReport:
    hbar_ratio: float
    mass_ratio: float
    hbar_ok: bool
    mass_ok: bool
    planck_regime: bool
    L_min: float
    L_max: float
    window_nonempty: bool
    threshold: float = 0.1

    @property
    def ok(self) -> bool:
        return self.hbar_ok and self.mass_ok

    @property
    def failed(self) -> tuple[str, ...]:
        out = []
        if not self.hbar_ok:
            out.append(f"hbar/(|mdot| L^2) = {self.hbar_ratio:.3g} > {self.threshold}")
        if not self.mass_ok:
            out.append(f"f L^2 |mdot|/m^2 = {self.mass_ratio:.3g} > {self.threshold}")
        return tuple(out)

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["ok"] = self.ok
        return d


def validity_check(m: float, mdot: float, f: float, L: float, c: Constants | None = None,
                   threshold: float = 0.1) -> ValidityReport:
    """Check hbar/|mdot| << L^2 << m^2/(f |mdot|) for a step length ``L``.

    Each ratio counts as satisfied when it is at most ``threshold``. The
    admissible window is ``L_min <= L <= L_max``; it is nonempty exactly
    when ``m^2/f > hbar / threshold^2``.
    """
    c = c or Constants()
    require_positive(m=m, f=f, L=L)
    rate = abs(mdot)
    require_positive(mdot=rate)
    hbar_ratio = c.hbar / (rate * L**2)
    mass_ratio = f * L**2 * rate / m**2
    L_min = math.sqrt(c.hbar / (threshold * rate))
    L_max = math.sqrt(threshold * m**2 / (f * rate))
    return ValidityReport(
        hbar_ratio=hbar_ratio,
        mass_ratio=mass_ratio,
        hbar_ok=hbar_ratio <= threshold,
        mass_ok=mass_ratio <= threshold,
        planck_regime=m**2 / f <= 10 * c.hbar,
        L_min=L_min,
        L_max=L_max,
        window_nonempty=L_min < L_max,
        threshold=threshold,
    )


def discretize(traj: EvaporationTrajectory, L: float, N: int, *,
               check_validity: bool = True) -> list[TransitionSpec]:
    """Replace the smooth trajectory by N straight segments of length L.

    Step r runs from ``a((r-1)L)`` to ``a(rL)``; each becomes a
    :class:`TransitionSpec` (pure emission: da > 0, dm < 0).

    Raises
    ------
    ValidityError
        ``check_validity`` is set and L violates the validity window at the
        initial mass; the message names the failed inequality.
    """
    require_positive(L=L)
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N!r}")
    p = traj.params
    tau_end = traj.tau[-1] if len(traj.tau) > 1 else traj.tau_d
    if N * L > tau_end * (1 + 1e-12):
        raise DomainError(f"N*L = {N * L!r} exceeds the sampled trajectory end {tau_end!r}")
    report = validity_check(p.m0, mass_loss_rate(p.m0, p), p.f, L, p.constants)
    if not report.ok:
        msg = "step length outside validity window: " + "; ".join(report.failed)
        if check_validity:
            raise ValidityError(msg, failed=report.failed)
        warnings.warn(msg, ValidityWarning, stacklevel=2)

    r = np.arange(N + 1)
    m = traj.mass_at(r * L).tolist()
    a = [p.f / mk for mk in m]
    specs = []
    for k in range(1, N + 1):
        specs.append(TransitionSpec(a1=a[k - 1], a2=a[k], m1=m[k - 1], m2=m[k], L=L, Q=p.Q))
    return specs


@dataclass(frozen=True)
class CascadeStep:
    r: int
    a_mid: float
    da: float
    dm: float
    x: float
    P_r: float


@dataclass(frozen=True)
class CascadeResult:
    steps: tuple[CascadeStep, ...]
    log_product_weight: float
    x_constancy: float
    diagnostic_log: float | None = None
    tau_d: float | None = None

    @property
    def product_weight(self) -> float:
        return math.exp(self.log_product_weight)

    @property
    def N(self) -> int:
        return len(self.steps)

    def per_step_diagnostic_ratio(self) -> float | None:
        """(prod P_r / closed-form cascade estimate)^(1/N)."""
        if self.diagnostic_log is None:
            return None
        return math.exp((self.log_product_weight - self.diagnostic_log) / self.N)

    def summary(self) -> dict:
        return {
            "product_weight_log": self.log_product_weight,
            "x_constancy": self.x_constancy,
            "tau_d": self.tau_d,
            "diagnostic_ratio_per_step": self.per_step_diagnostic_ratio(),
        }


def cascade_probability(specs: Sequence[TransitionSpec], c: Constants | None = None,
                        f: float = 1.0, *, m0: float | None = None,
                        tau_d: float | None = None) -> CascadeResult:
    """Weight of emitting one quantum per step along a discretized trajectory.

    ``P_N = prod_r P_{r,r-1}`` is accumulated in log space. When ``m0`` and
    ``tau_d`` are given the closed-form estimate

        (4 pi m0/f / (exp(x_1) - 1))^N  prod_r (1 - r L/tau_d)^(1/2)

    is evaluated as a diagnostic (it is only a proportionality).
    """
    c = c or Constants()
    if not specs:
        raise DomainError("empty cascade")
    steps = []
    log_total = 0.0
    for r, spec in enumerate(specs, start=1):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", PerturbationStrainedWarning)
                res = p21_closed_form(spec, c, f)
        except BackreactError as exc:
            raise type(exc)(f"cascade step {r}: {exc}") from exc
        steps.append(CascadeStep(r=r, a_mid=spec.a_mid, da=spec.da, dm=spec.dm, x=res.x,
                                 P_r=res.p21))
        log_total += math.log(res.p21)

    xs = np.array([s.x for s in steps])
    x_bar = xs.mean()
    x_constancy = float(np.max(np.abs(xs - x_bar)) / x_bar)

    diag = None
    if m0 is not None and tau_d is not None:
        L = specs[0].L
        x1 = steps[0].x
        N = len(steps)
        r = np.arange(1, N + 1)
        diag = N * (math.log(4 * math.pi * m0 / f) - math.log(math.expm1(x1)))
        diag += 0.5 * float(np.sum(np.log1p(-r * L / tau_d)))
    return CascadeResult(steps=tuple(steps), log_product_weight=log_total,
                         x_constancy=x_constancy, diagnostic_log=diag, tau_d=tau_d)


def planck_cdf(x, x_min: float, x_max: float):
    """CDF of the density proportional to 1/(e^x - 1) on [x_min, x_max]."""
    g_lo, g_hi = ir_integral(x_min), ir_integral(x_max)
    x = np.clip(np.asarray(x, dtype=float), x_min, x_max)
    g = -np.log(-np.expm1(-x))
    return (g_lo - g) / (g_lo - g_hi)


def derive_stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for a named stream derived from one user seed."""
    key = int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "little")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(key,))))


def _inverse_cdf(u, x_min: float, x_max: float):
    g_lo, g_hi = ir_integral(x_min), ir_integral(x_max)
    g = g_hi + np.asarray(u, dtype=float) * (g_lo - g_hi)
    # G(x) = -ln(1 - e^-x) is its own inverse
    return -np.log(-np.expm1(-g))


def sample_planck_frequency(beta: float, x_min: float, x_max: float,
                            rng: np.random.Generator | int | None = None,
                            size: int | None = None, *, u=None):
    """Draw dimensionless x = beta hbar omega with density ~ 1/(e^x - 1).

    Exact inverse-CDF sampling on [x_min, x_max]; ``u`` may supply the
    uniform variates directly. ``beta`` is carried for interface symmetry
    with energy-valued sampling: divide the result by ``beta`` to get
    hbar omega.
    """
    require_positive(beta=beta)
    if not (0 < x_min < x_max):
        raise DomainError(f"need 0 < x_min < x_max, got ({x_min!r}, {x_max!r})")
    if u is None:
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        u = rng.random(size)
    x = _inverse_cdf(u, x_min, x_max)
    return np.clip(x, x_min, x_max)
