import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from backreact.core import ConfigurationError, Constants, DomainError, TransitionSpec, consistent_dm, force_law
from backreact.transition import (
    PerturbationStrainedWarning,
    detailed_balance_ratio,
    hawking_temperature,
    p21_closed_form,
    unruh_temperature,
)

pytestmark = pytest.mark.filterwarnings("ignore::backreact.transition.PerturbationStrainedWarning")


def geometric_partial_sum(x, start):
    # brute-force summation of exp(-x n) until terms stop changing the sum
    total, n = 0.0, start
    while True:
        term = math.exp(-x * n)
        if total + term == total:
            return total
        total += term
        n += 1


def test_example_emission():
    spec = TransitionSpec.from_midpoint(a=1.0, da=0.1, f=1.0, L=1.0, Q=1.0)
    res = p21_closed_form(spec, Constants(), 1.0)
    assert res.x == pytest.approx(2 * math.pi * 0.1, rel=1e-12)
    assert res.prefactor == pytest.approx(2.5, rel=1e-12)
    oracle = 2.5 * geometric_partial_sum(res.x, 0)
    assert res.p21 == pytest.approx(oracle, rel=1e-12)
    assert res.p21 == pytest.approx(5.358920, abs=5e-7)
    assert res.direction == "emission"


def test_example_absorption():
    spec = TransitionSpec.from_midpoint(a=1.0, da=-0.1, f=1.0)
    res = p21_closed_form(spec, Constants(), 1.0)
    assert res.p21 == pytest.approx(2.5 * geometric_partial_sum(res.x, 1), rel=1e-12)
    assert res.p21 == pytest.approx(2.858920, abs=5e-7)
    assert res.direction == "absorption"


def test_classical_limit_keeps_spontaneous_term_only():
    spec = TransitionSpec.from_midpoint(a=1.0, da=0.1, f=1.0)
    res = p21_closed_form(spec, Constants(hbar=1e-3), 1.0)
    assert res.x > 600
    assert res.p21 == pytest.approx(res.prefactor, rel=1e-15)
    down = p21_closed_form(TransitionSpec.from_midpoint(1.0, -0.1), Constants(hbar=1e-3), 1.0)
    assert down.p21 == 0.0 or down.p21 < 1e-250


def test_zero_da_rejected():
    spec = TransitionSpec(a1=1.0, a2=1.0, m1=1.0, m2=1.0)
    with pytest.raises(DomainError, match="spontaneous-pole"):
        p21_closed_form(spec)


def test_strained_warning():
    spec = TransitionSpec.from_midpoint(a=1.0, da=0.1, f=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        with pytest.raises(PerturbationStrainedWarning):
            p21_closed_form(spec)


@pytest.mark.parametrize("x", [0.6283185307179586, 31.41592653589793, 1e-4])
def test_detailed_balance_examples(x):
    f = 100.0
    spec = TransitionSpec.from_midpoint(a=1.0, da=x / (2 * math.pi * f), f=f)
    ratio = detailed_balance_ratio(spec, Constants(), f)
    series = geometric_partial_sum(x, 0) / geometric_partial_sum(x, 1) if x < 20 else math.exp(x)
    assert ratio == pytest.approx(math.exp(x), rel=1e-12)
    assert ratio == pytest.approx(series, rel=1e-11)


def test_detailed_balance_known_values():
    assert detailed_balance_ratio(TransitionSpec.from_midpoint(1.0, 0.1)) == pytest.approx(1.8744560, rel=1e-7)
    spec = TransitionSpec.from_midpoint(1.0, 0.05, f=100.0)
    assert detailed_balance_ratio(spec, Constants(), 100.0) == pytest.approx(4.4034e13, rel=1e-4)
    # the ratio does not depend on which branch the TransitionSpec describes
    mirrored = TransitionSpec.from_midpoint(1.0, -0.05, f=100.0)
    assert detailed_balance_ratio(mirrored, Constants(), 100.0) == detailed_balance_ratio(spec, Constants(), 100.0)


@given(a=st.floats(0.1, 5), frac=st.floats(0.001, 0.5), f=st.floats(0.1, 10),
       hbar=st.floats(0.05, 5))
def test_detailed_balance_and_emission_dominance(a, frac, f, hbar):
    assume(2 * math.pi * f * frac / (hbar * a**2) < 600)
    c = Constants(hbar=hbar)
    up = TransitionSpec.from_midpoint(a, frac * a, f=f)
    down = TransitionSpec.from_midpoint(a, -frac * a, f=f)
    pu, pd = p21_closed_form(up, c, f), p21_closed_form(down, c, f)
    assert pu.p21 > pd.p21
    assert pu.p21 / pd.p21 == pytest.approx(math.exp(pu.x), rel=1e-12)


@given(L=st.floats(0.01, 100))
def test_linear_in_window(L):
    ref = p21_closed_form(TransitionSpec.from_midpoint(1.0, 0.1, L=1.0)).p21
    assert p21_closed_form(TransitionSpec.from_midpoint(1.0, 0.1, L=L)).p21 == pytest.approx(L * ref, rel=1e-13)


def test_classical_limit_scaling():
    # keep the quantum energy f da / a^2 fixed while hbar -> 0
    last_abs = math.inf
    for hbar in (1.0, 0.1, 0.01, 0.001):
        c = Constants(hbar=hbar)
        up = p21_closed_form(TransitionSpec.from_midpoint(1.0, 0.1), c)
        down = p21_closed_form(TransitionSpec.from_midpoint(1.0, -0.1), c)
        assert down.p21 < last_abs
        last_abs = down.p21
    assert up.p21 == pytest.approx(up.prefactor)
    assert last_abs < 1e-200


@given(a=st.floats(0.2, 5), frac=st.floats(-0.05, 0.05).filter(lambda v: abs(v) > 1e-6))
def test_homega_is_mass_change(a, frac):
    f = 2.0
    spec = TransitionSpec.from_midpoint(a, frac * a, f=f)
    res = p21_closed_form(spec, Constants(), f)
    dm = consistent_dm(f / a, a, spec.da)
    assert res.homega == pytest.approx(abs(dm), rel=2 * abs(frac) + 1e-12)


def test_unruh_temperature():
    assert unruh_temperature(2.0) == pytest.approx(0.3183099, rel=1e-7)
    assert unruh_temperature(2 * math.pi) == pytest.approx(1.0)
    spec = TransitionSpec.from_midpoint(1.5, 0.2)
    assert unruh_temperature(spec) == pytest.approx(1.5 / (2 * math.pi))


def test_boltzmann_exponent_is_mass_change_over_temperature():
    m, a, da = 3.0, 0.7, 0.01
    f = m * a
    spec = TransitionSpec.from_midpoint(a, da, f=f)
    res = p21_closed_form(spec, Constants(), f)
    beta = 1 / unruh_temperature(a)
    assert res.x == pytest.approx(abs(consistent_dm(m, a, da)) * beta, rel=1e-12)


def test_hawking_temperature():
    c = Constants(G=1.0)
    assert hawking_temperature(1.0, c) == pytest.approx(1 / (8 * math.pi))
    assert hawking_temperature(1.0, c) == pytest.approx(0.0397887, rel=1e-6)
    for m in (0.3, 1.0, 7.0):
        assert hawking_temperature(m, c) == pytest.approx(unruh_temperature(force_law(m, 0.25), c))
    assert hawking_temperature(1e12, c) < 1e-12
    with pytest.raises(ConfigurationError):
        hawking_temperature(1.0, Constants())


def test_blackhole_label():
    res = p21_closed_form(TransitionSpec.from_midpoint(0.25, 0.01, f=0.25), Constants(G=1.0), 0.25)
    assert res.temperature_kind == "hawking"
    assert res.temperature == pytest.approx(hawking_temperature(1.0, Constants(G=1.0)))


def test_small_x_stable():
    spec = TransitionSpec.from_midpoint(1.0, 1e-12)
    res = p21_closed_form(spec)
    assert np.isfinite(res.p21)
    assert res.p21 == pytest.approx(res.prefactor / res.x, rel=1e-9)
