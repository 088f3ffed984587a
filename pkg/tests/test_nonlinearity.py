"""Nonlinearity primitives, potentials, forcing terms, and the verifiers."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from wavegalerkin.nonlinearity import (
    ZERO,
    ForcingSpec,
    NonlinearitySpec,
    affine_forcing,
    apply_F,
    apply_g,
    constant_modal,
    cubic_nonlinearity,
    custom_nonlinearity,
    f_on_grid,
    F_on_grid,
    forcing_modal_batch,
    linear_nonlinearity,
    potential_Phi,
    potential_batch,
    power_law_nonlinearity,
    primitive_F,
    tabulated_f,
    verify_conditions,
    verify_g,
    zero_forcing,
)
from wavegalerkin.spectral import SpectralField, unit_mode


def test_primitive_closed_forms():
    assert primitive_F(linear_nonlinearity(), 2.0) == pytest.approx(2.0)
    assert primitive_F(cubic_nonlinearity(), 2.0) == pytest.approx(8.0)
    assert primitive_F(cubic_nonlinearity(), -2.0) == pytest.approx(-8.0)
    assert primitive_F(power_law_nonlinearity(3.0), 2.0) == pytest.approx(4.0)
    assert primitive_F(power_law_nonlinearity(3.0), -2.0) == pytest.approx(-4.0)
    with pytest.raises(ValueError):
        primitive_F(cubic_nonlinearity(), math.inf)


def test_primitive_is_integral_of_f():
    for nl in (cubic_nonlinearity(), power_law_nonlinearity(3.5)):
        for r in (-2.3, -0.4, 0.7, 3.1):
            ref, _ = quad(lambda s: float(f_on_grid(nl, np.float64(s))), 0.0, r, epsabs=1e-13)
            assert abs(primitive_F(nl, r) - ref) <= 1e-10 * (1.0 + abs(r) ** (nl.p - 1.0))


def test_custom_primitive_from_quadrature():
    nl = custom_nonlinearity(f=np.cos, p=3.0, a0=2.0, a1=1.0, b0=0.5, b1=0.0)
    # primitive of cos is sin
    assert primitive_F(nl, math.pi / 2.0) == pytest.approx(1.0, abs=1e-10)
    u = np.linspace(-2.0, 2.0, 41)
    assert np.allclose(F_on_grid(nl, u), np.sin(u), atol=1e-12)
    nl_with_F = custom_nonlinearity(f=np.cos, p=3.0, a0=2.0, a1=1.0, b0=0.5, b1=0.0, F=np.sin)
    assert primitive_F(nl_with_F, 0.3) == pytest.approx(math.sin(0.3), rel=1e-14)


def test_apply_F_linear_is_identity(op8):
    x = unit_mode(op8, 3, amplitude=0.7)
    assert apply_F(x, linear_nonlinearity()) is x


def test_apply_F_cubic_first_mode_projections(op8):
    # (sqrt(2) sin(pi xi))^3 pairs to 3/2 on mode 1 and -1/2 on mode 3
    x = unit_mode(op8, 0)
    w = apply_F(x, cubic_nonlinearity())
    expect = np.zeros(8)
    expect[0], expect[2] = 1.5, -0.5
    assert np.allclose(w.coeffs, expect, atol=1e-12)


def test_apply_F_overflow_raises(op8):
    x = unit_mode(op8, 1, amplitude=1e80)
    with np.errstate(over="ignore"), pytest.raises(OverflowError, match="peak"):
        apply_F(x, power_law_nonlinearity(6.0))


def test_potential_closed_forms(op8):
    e1 = unit_mode(op8, 0)
    lin = potential_Phi(e1, linear_nonlinearity())
    assert lin.value == pytest.approx(0.5, rel=1e-13)
    assert lin.quadrature_nodes == 0
    cub = potential_Phi(e1, cubic_nonlinearity())
    assert cub.value == pytest.approx(0.375, rel=1e-12)
    zero = potential_Phi(SpectralField(np.zeros(8), op8), cubic_nonlinearity())
    assert zero.value == 0.0


def test_potential_quadrature_matches_closed_form(op16):
    rng = np.random.default_rng(2)
    c = rng.uniform(-0.5, 0.5, size=(5, 16))
    closed = potential_batch(c, op16, cubic_nonlinearity())
    viaquad = potential_batch(c, op16, cubic_nonlinearity(), force_quadrature=True)
    assert np.allclose(viaquad, closed, rtol=1e-9)
    one = potential_Phi(SpectralField(c[0], op16), cubic_nonlinearity(), force_quadrature=True)
    assert one.quadrature_nodes == 16


def test_potential_custom_matches_reference_integral(op8):
    # f = cos has potential integral (1 - cos(x(xi))) over the interval
    nl = custom_nonlinearity(f=np.cos, p=3.0, a0=2.0, a1=1.0, b0=0.5, b1=0.0)
    x = unit_mode(op8, 0, amplitude=0.3)
    got = potential_Phi(x, nl)
    assert got.quadrature_nodes == 16
    assert got.value == pytest.approx(0.044496274143657831, abs=1e-10)


def test_potential_is_primitive_of_F(op8):
    rng = np.random.default_rng(9)
    nl = cubic_nonlinearity()
    x = rng.normal(size=8)
    z = rng.normal(size=8)
    z /= np.linalg.norm(z)
    eps = 1e-5
    plus = potential_batch((x + eps * z)[None, :], op8, nl)[0]
    minus = potential_batch((x - eps * z)[None, :], op8, nl)[0]
    pairing = float(apply_F(SpectralField(x, op8), nl).coeffs @ z)
    assert abs((plus - minus) / (2.0 * eps) - pairing) <= 1e-6


def test_verify_conditions_power_law_passes(op8):
    rep = verify_conditions(power_law_nonlinearity(4.0), op8, samples=2000, seed=0)
    assert rep.passed
    assert [c.name for c in rep.checks] == ["monotonicity", "growth", "coercivity"]
    assert all(c.witness is None for c in rep.checks)
    d = rep.to_dict()
    assert d["passed"] is True and d["seed"] == 0 and len(d["checks"]) == 3


def test_verify_conditions_falsifies_decreasing_f(op8):
    nl = custom_nonlinearity(f=lambda u: -np.ones_like(u), p=3.0, a0=1.0, a1=1.0, b0=1.0, b1=0.0)
    rep = verify_conditions(nl, op8, samples=500, seed=1)
    assert not rep.passed
    mono = rep.checks[0]
    assert mono.name == "monotonicity" and not mono.passed
    assert mono.worst_violation > mono.tolerance
    assert mono.witness is not None and "sample" in mono.witness


def test_verify_conditions_falsifies_overstated_coercivity(op8):
    # F(u) = u only gives <F(x),x> = ||x||^2, so claiming b0 = 1 against
    # the L^3 power fails at large amplitudes
    nl = custom_nonlinearity(f=lambda u: np.ones_like(u), p=3.0, a0=1.0, a1=1.0, b0=1.0, b1=0.0)
    rep = verify_conditions(nl, op8, samples=2000, seed=2)
    coerce = rep.checks[2]
    assert coerce.name == "coercivity" and not coerce.passed


def test_verify_g_affine_passes(op8):
    fs = affine_forcing(g1=0.3, g2=0.2)
    rep = verify_g(fs, op8, samples=1000, seed=0)
    assert rep.passed
    assert [c.name for c in rep.checks] == ["g0_dominates_origin", "norm_bound", "lipschitz_pairing"]


def test_verify_g_falsifies_understated_origin(op16):
    # the projected constant 0.3 has H norm ~0.2962 > the declared 0.2
    bad = affine_forcing(g1=0.1, g2=0.0, constant=0.3, g0=0.2)
    rep = verify_g(bad, op16, samples=200, seed=0)
    assert not rep.passed
    origin = rep.checks[0]
    assert origin.name == "g0_dominates_origin" and not origin.passed

    ok = affine_forcing(g1=0.1, g2=0.0, constant=0.3, g0=0.3)
    assert verify_g(ok, op16, samples=200, seed=0).passed


def test_forcing_spec_validation():
    with pytest.raises(ValueError):
        ForcingSpec(kind=ZERO, g1=0.1)
    with pytest.raises(ValueError):
        affine_forcing(constant=0.5)
    with pytest.raises(ValueError):
        ForcingSpec(kind="affine", g0=-0.1)
    assert not zero_forcing().velocity_dependent
    assert affine_forcing(g2=0.1).velocity_dependent
    assert not affine_forcing(g1=0.5).velocity_dependent


def test_apply_g_zero_and_affine(op8):
    rng = np.random.default_rng(4)
    x = SpectralField(rng.normal(size=8), op8)
    v = SpectralField(rng.normal(size=8), op8)
    assert np.all(apply_g(zero_forcing(), x, v).coeffs == 0.0)
    fs = affine_forcing(g1=0.2, g2=0.1, constant=0.5, g0=1.0)
    got = apply_g(fs, x, v).coeffs
    want = 0.2 * x.coeffs + 0.1 * v.coeffs + 0.5 * constant_modal(op8)
    assert np.allclose(got, want, rtol=1e-14)


def test_forcing_batch_uses_smoothed_velocity(op8):
    rng = np.random.default_rng(6)
    a = rng.normal(size=8)
    adot = rng.normal(size=8)
    fs = affine_forcing(g1=0.2, g2=0.4)
    row = forcing_modal_batch(fs, op8, a[None, :], adot[None, :])[0]
    x = SpectralField(a, op8)
    v = SpectralField(adot / op8.sqrt_eigenvalues, op8)
    assert np.allclose(row, apply_g(fs, x, v).coeffs, rtol=1e-14)


def test_tabulated_f_interp_and_clamp():
    f = tabulated_f([-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0])
    assert f(np.array([0.5]))[0] == pytest.approx(1.0)
    assert f(np.array([3.0]))[0] == pytest.approx(2.0)
    assert f(np.array([-3.0]))[0] == pytest.approx(-2.0)
    with pytest.raises(ValueError):
        tabulated_f([1.0, 0.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        tabulated_f([0.0, 1.0], [0.0, 1.0, 2.0])


def test_nonlinearity_spec_validation():
    with pytest.raises(ValueError):
        power_law_nonlinearity(2.0)
    with pytest.raises(ValueError):
        NonlinearitySpec(kind="linear", p=3.0)
    with pytest.raises(ValueError):
        NonlinearitySpec(kind="power_law", p=4.0, a0=0.0)
    with pytest.raises(ValueError):
        NonlinearitySpec(kind="custom", p=3.0)
    assert linear_nonlinearity().oracle_only
    assert not cubic_nonlinearity().oracle_only
