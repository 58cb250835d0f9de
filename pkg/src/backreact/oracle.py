"""Independent numerical checks of the closed-form transition weight.

Two routes are provided:

* :func:`integral_p21` integrates the regulated two-point kernel over the
  observation window,

      P = -(Q^2 / 8 pi hbar) int_0^L dT' int_{-l(T')}^{l(T')} dt
              exp(i omega t) ln[(2/a) sinh(a (t - i eps)/2)],

  with ``l(T') = L - 2|T' - L/2|`` and ``omega = f da / (hbar a^2)``,
  followed by extrapolation of the regulator ``eps -> 0+``.
* :func:`pole_sum_p21` sums the residues of the poles at
  ``t = 2 pi i n / a`` term by term.

The double integral is the full finite-window expression: it contains the
end-point term of the integration by parts and finite-window corrections
that the closed form drops. Those decay like ``1/(omega L)``, so agreement
with the closed form is only expected deep inside the validity window.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .core import (
    Constants,
    DomainError,
    IntegrationPathError,
    NonConvergenceError,
    SeriesTruncationError,
    TransitionSpec,
    ValidityError,
    require_positive,
)
from .transition import boltzmann_exponent, prefactor

__all__ = [
    "QuadratureConfig",
    "OracleResult",
    "TransientReport",
    "log_kernel",
    "richardson_to_zero",
    "integral_p21",
    "pole_sum_p21",
    "transient_bound",
]

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class QuadratureConfig:
    """Settings for the numerical oracle.

    ``eps_sweep`` lists decreasing regulator values used for extrapolation;
    an empty sweep evaluates at ``eps`` only. ``sweep_rtol`` is the
    convergence threshold on the extrapolated value between the last two
    sweep levels.
    """

    eps: float = 1e-3
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    n_max: int = 10_000_000
    eps_sweep: tuple[float, ...] = (1e-3, 5e-4, 2.5e-4)
    sweep_rtol: float = 1e-3
    panels_per_period: int = 8

    def __post_init__(self):
        require_positive(eps=self.eps, abs_tol=self.abs_tol, sweep_rtol=self.sweep_rtol)
        if not self.rel_tol >= 1e-12:
            raise DomainError(f"rel_tol must be >= 1e-12, got {self.rel_tol!r}")
        if self.n_max < 1:
            raise DomainError(f"n_max must be >= 1, got {self.n_max!r}")
        sweep = tuple(float(e) for e in self.eps_sweep)
        object.__setattr__(self, "eps_sweep", sweep)
        for e in sweep:
            require_positive(eps=e)
        if any(b >= a for a, b in zip(sweep, sweep[1:])):
            raise DomainError(f"eps_sweep must be strictly decreasing, got {sweep!r}")


@dataclass(frozen=True)
class OracleResult:
    value: float
    estimated_error: float
    eps_used: float
    converged: bool
    transient_estimate: float
    imag: float = 0.0
    sweep: tuple[tuple[float, complex], ...] = field(default=(), repr=False)

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "estimated_error": self.estimated_error,
            "eps_used": self.eps_used,
            "converged": self.converged,
            "transient_estimate": self.transient_estimate,
        }


@dataclass(frozen=True)
class TransientReport:
    """Smallness parameters of the neglected finite-window contributions.

    ``bound = exp(-omega L)``; ``hbar_ratio = hbar/(|mdot| L^2)`` and
    ``mass_ratio = f L^2 |mdot| / m^2`` with ``mdot = dm / L`` are the two
    ratios that must be small for the semiclassical treatment.
    """

    bound: float
    omega_L: float
    da_L: float
    hbar_ratio: float
    mass_ratio: float
    status: str

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def transient_bound(spec: TransitionSpec, c: Constants | None = None,
                    f: float = 1.0) -> TransientReport:
    c = c or Constants()
    require_positive(f=f)
    omega_L = f * abs(spec.da) * spec.L / (c.hbar * spec.a_mid**2)
    da_L = abs(spec.da) * spec.L
    if spec.dm != 0:
        hbar_ratio = c.hbar / (abs(spec.dm) * spec.L)
    else:
        hbar_ratio = math.inf
    mass_ratio = f * abs(spec.dm) * spec.L / spec.m_mid**2

    tol = 1 + 1e-9
    if omega_L * tol < 1 or da_L > tol:
        status = "invalid"
    elif omega_L * tol < 10 or da_L > 0.1 * tol:
        status = "marginal"
    else:
        status = "ok"
    return TransientReport(
        bound=math.exp(-omega_L),
        omega_L=omega_L,
        da_L=da_L,
        hbar_ratio=hbar_ratio,
        mass_ratio=mass_ratio,
        status=status,
    )


def log_kernel(t, a: float, eps: float):
    """ln[(2/a) sinh(a (t - i eps)/2)] on the principal branch.

    The regulator shifts every real zero of sinh below the real axis, so
    the imaginary part runs continuously from -pi (t < 0) to 0 (t > 0).
    Large |t| uses the asymptotic form to avoid overflow.
    """
    t = np.asarray(t, dtype=float)
    w = 0.5 * a * (t - 1j * eps)
    out = np.empty(w.shape, dtype=complex)
    mid = np.abs(w.real) <= 20
    hi = w.real > 20
    lo = w.real < -20
    out[mid] = np.log(np.sinh(w[mid]))
    out[hi] = w[hi] + np.log1p(-np.exp(-2 * w[hi])) - _LN2
    out[lo] = -w[lo] + np.log1p(-np.exp(2 * w[lo])) - _LN2 - 1j * math.pi
    return out + math.log(2.0 / a)


def _check_branch(a: float, eps: float, lo: float, hi: float) -> None:
    grid = np.union1d(np.linspace(lo, hi, 4001), [-eps, 0.0, eps])
    grid = grid[(grid >= lo) & (grid <= hi)]
    imag = log_kernel(grid, a, eps).imag
    jumps = np.abs(np.diff(imag))
    if np.any(jumps > math.pi):
        k = int(np.argmax(jumps))
        raise IntegrationPathError(
            f"kernel phase jumps by {jumps[k]:.3g} near t={grid[k]:.6g}; the path crosses a branch cut",
            t=float(grid[k]),
        )


def richardson_to_zero(h: Sequence[float], values: Sequence[complex]) -> complex:
    """Extrapolate ``values(h)`` to ``h = 0`` assuming an expansion in powers
    of ``h`` with a linear leading term (Neville scheme)."""
    h = [float(x) for x in h]
    p = [complex(v) for v in values]
    n = len(p)
    if n == 0:
        raise ValueError("need at least one value")
    for k in range(1, n):
        for i in range(n - k):
            p[i] = (h[i + k] * p[i] - h[i] * p[i + 1]) / (h[i + k] - h[i])
    return p[0]


def _breakpoints(lo: float, hi: float, omega: float, eps: float, per_period: int) -> np.ndarray:
    span = hi - lo
    step = span / 4
    if omega != 0:
        step = min(step, 2 * math.pi / abs(omega) / per_period)
    n = max(int(math.ceil(span / step)), 1)
    pts = list(np.linspace(lo, hi, n + 1))
    if lo < 0 < hi:
        # grade towards the regulated singularity at t = 0
        r = eps
        while r < step:
            pts.extend([-r, r])
            r *= 4
        pts.append(0.0)
    pts = np.unique(np.clip(pts, lo, hi))
    return pts


def _panel_quad(fn, edges, rel_tol, abs_tol, workers):
    pairs = list(zip(edges[:-1], edges[1:]))
    epsabs = abs_tol / max(len(pairs), 1)

    def one(pair):
        x0, x1 = pair
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                v, e = integrate.quad(fn, x0, x1, epsabs=epsabs, epsrel=rel_tol, limit=200,
                                      complex_func=True)
            except integrate.IntegrationWarning as exc:
                raise NonConvergenceError(
                    f"panel [{x0:.6g}, {x1:.6g}] did not converge: {exc}", panel=(x0, x1)
                ) from None
        return v, abs(e)

    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, pairs))
    else:
        parts = [one(p) for p in pairs]
    re = math.fsum(v.real for v, _ in parts)
    im = math.fsum(v.imag for v, _ in parts)
    return complex(re, im), math.fsum(e for _, e in parts)


def _window_integral(spec, c, f, eps, q, *, method, oscillation, kernel, workers):
    a, L = spec.a_mid, spec.L
    omega = f * spec.da / (c.hbar * a**2) if oscillation else 0.0
    kern = kernel if kernel is not None else (lambda t: log_kernel(t, a, eps))

    if method == "collapsed":
        # Fubini: for fixed t the T' measure with l(T') >= |t| is L - |t|
        def g(t):
            return complex((L - abs(t)) * np.exp(1j * omega * t) * kern(t))

        edges = _breakpoints(-L, L, omega, eps, q.panels_per_period)
        total, err = _panel_quad(g, edges, q.rel_tol, q.abs_tol, workers)
    elif method == "nested":
        def inner(ell):
            if ell <= 0:
                return 0j
            edges = _breakpoints(-ell, ell, omega, eps, q.panels_per_period)
            v, _ = _panel_quad(lambda t: complex(np.exp(1j * omega * t) * kern(t)),
                               edges, max(q.rel_tol, 1e-9), q.abs_tol, 1)
            return v

        # l(T') is symmetric about L/2, so integrate the first half twice
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                v, e = integrate.quad(lambda T: inner(2 * T), 0.0, L / 2, epsabs=q.abs_tol,
                                      epsrel=max(q.rel_tol, 1e-7), limit=200, complex_func=True)
            except integrate.IntegrationWarning as exc:
                raise NonConvergenceError(f"outer T' quadrature did not converge: {exc}") from None
        total, err = 2 * v, 2 * abs(e)
    else:
        raise ValueError(f"unknown method {method!r}")
    scale = -spec.Q**2 / (8 * math.pi * c.hbar)
    return scale * total, abs(scale) * err


def integral_p21(spec: TransitionSpec, c: Constants | None = None, f: float = 1.0,
                 q: QuadratureConfig | None = None, *, override_validity: bool = False,
                 method: str = "collapsed", oscillation: bool = True,
                 kernel: Callable | None = None, workers: int = 1,
                 raise_on_failure: bool = True) -> OracleResult:
    """Numerical double integral of the regulated kernel over the window.

    ``method="collapsed"`` integrates the inner variable analytically over
    the rhombic domain (weight ``L - |t|``); ``method="nested"`` performs the
    two quadratures literally. ``oscillation`` and ``kernel`` are test hooks
    that switch off the exp(i omega t) factor or replace the log kernel.

    Raises
    ------
    ValidityError
        The window is outside the regime where transients are suppressed
        and ``override_validity`` is false.
    NonConvergenceError
        Quadrature failed, or the extrapolated value moved by more than
        ``q.sweep_rtol`` between the last two sweep levels.
    """
    c = c or Constants()
    q = q or QuadratureConfig()
    boltzmann_exponent(spec, c, f)  # rejects da = 0
    report = transient_bound(spec, c, f)
    if report.status == "invalid" and not override_validity:
        raise ValidityError(
            f"window outside validity: omega*L = {report.omega_L:.3g} (needs >> 1), "
            f"da*L = {report.da_L:.3g} (needs << 1)",
            failed=tuple(k for k, bad in (("omega_L", report.omega_L * (1 + 1e-9) < 1),
                                          ("da_L", report.da_L > 1 + 1e-9)) if bad),
        )

    a = spec.a_mid
    sweep = q.eps_sweep or (q.eps,)
    if max(sweep) * a >= 0.2 * math.pi:
        raise DomainError(f"regulator eps={max(sweep)!r} is not small against the pole spacing 2 pi/a")
    if kernel is None:
        _check_branch(a, max(sweep), -spec.L, spec.L)

    vals, errs = [], []
    for eps in sweep:
        v, e = _window_integral(spec, c, f, eps, q, method=method, oscillation=oscillation,
                                kernel=kernel, workers=workers)
        vals.append(v)
        errs.append(e)

    quad_err = max(errs)
    if len(sweep) == 1:
        best, change, converged = vals[0], 0.0, True
    else:
        best = richardson_to_zero(sweep, vals)
        prev = richardson_to_zero(sweep[:-1], vals[:-1])
        change = abs(best.real - prev.real)
        converged = change <= q.sweep_rtol * abs(best.real) + q.abs_tol
        if not converged and raise_on_failure:
            raise NonConvergenceError(
                f"eps extrapolation not converged: {prev.real!r} -> {best.real!r}",
                last_two=(prev.real, best.real),
            )

    transient = report.bound * prefactor(spec, f)
    return OracleResult(
        value=best.real,
        estimated_error=quad_err + change,
        eps_used=sweep[-1],
        converged=converged,
        transient_estimate=transient,
        imag=best.imag,
        sweep=tuple(zip(sweep, vals)),
    )


def pole_sum_p21(spec: TransitionSpec, c: Constants | None = None, f: float = 1.0,
                 q: QuadratureConfig | None = None) -> OracleResult:
    """Residue ladder: prefactor * sum_n exp(-x n), n from 0 (emission) or 1 (absorption).

    Terms are accumulated in chunks with exact (fsum) summation until the
    geometric tail is below both ``q.abs_tol`` and double-precision
    resolution of the partial sum.
    """
    c = c or Constants()
    q = q or QuadratureConfig()
    x = boltzmann_exponent(spec, c, f)
    pre = prefactor(spec, f)
    n = 0 if spec.is_emission else 1
    tail_factor = -1.0 / math.expm1(-x)
    partial = []
    total = 0.0
    chunk = 4096
    while True:
        stop = min(n + chunk, q.n_max + 1)
        terms = pre * np.exp(-x * np.arange(n, stop, dtype=float))
        partial.extend(terms.tolist())
        total = math.fsum(partial)
        n = stop
        tail = pre * math.exp(-x * n) * tail_factor
        if tail <= q.abs_tol and tail <= 2.0**-53 * abs(total):
            break
        if n > q.n_max:
            raise SeriesTruncationError(
                f"pole ladder not converged after n_max={q.n_max} terms (tail {tail:.3g})",
                partial=total, tail=tail, terms=n,
            )
    return OracleResult(
        value=total,
        estimated_error=tail,
        eps_used=0.0,
        converged=True,
        transient_estimate=transient_bound(spec, c, f).bound * pre,
    )
