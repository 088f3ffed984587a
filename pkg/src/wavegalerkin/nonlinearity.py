"""Scalar nonlinearity, its potential, forcing terms, and runtime verifiers.

The wave model couples a pointwise nonlinearity ``F`` (primitive of a scalar
``f``) to the diagonal operator, plus a forcing ``g(x, v)`` where ``v``
carries the half-smoothed velocity.  Structural assumptions (monotonicity,
p-growth, coercivity, Lipschitz forcing) enter the energy estimates as
numeric constants; this module stores those constants and can falsify them
by randomized sampling.  The verifiers only falsify, never certify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .spectral import OperatorSpec, SpectralField, to_grid

__all__ = [
    "ConditionCheck",
    "ConditionReport",
    "ForcingSpec",
    "NonlinearitySpec",
    "PotentialValue",
    "affine_forcing",
    "apply_F",
    "apply_g",
    "constant_modal",
    "cubic_nonlinearity",
    "custom_lipschitz_forcing",
    "custom_nonlinearity",
    "f_on_grid",
    "F_on_grid",
    "forcing_modal_batch",
    "linear_nonlinearity",
    "potential_batch",
    "potential_Phi",
    "power_law_nonlinearity",
    "primitive_F",
    "tabulated_f",
    "verify_conditions",
    "verify_g",
    "zero_forcing",
]

LINEAR = "linear"
POWER_LAW = "power_law"
CUBIC = "cubic"
CUSTOM = "custom"
NONLINEARITY_KINDS = (LINEAR, POWER_LAW, CUBIC, CUSTOM)

ZERO = "zero"
AFFINE = "affine"
CUSTOM_LIPSCHITZ = "custom_lipschitz"
FORCING_KINDS = (ZERO, AFFINE, CUSTOM_LIPSCHITZ)

# Default node count for the s-integral defining the potential; exact for
# polynomial integrands up to degree 31, which covers the built-in kinds.
S_NODES_DEFAULT = 16

# Random verifier draws: coefficients i.i.d. uniform in [-1, 1] times an
# amplitude uniform in [0, AMPLITUDE_MAX].
AMPLITUDE_MAX = 10.0

# Monotonicity slack is absolute; growth and coercivity use a relative
# slack because their two sides reach ~1e7 at the largest amplitudes and
# a bare 1e-10 would be finer than double round-off there.
MONOTONE_SLACK = 1e-10
RELATIVE_SLACK = 1e-10


@dataclass(frozen=True, eq=False)
class NonlinearitySpec:
    """Pointwise nonlinearity with its growth/coercivity constants.

    ``f`` is the scalar integrand and ``F`` its primitive from 0.  The
    constants assert ``||F(u)||_{p'} <= a0*||u||_p^(p-1) + a1*||u||_H`` and
    ``<F(u),u> >= b0*||u||_p^p + b1*||u||_H^2``; custom kinds must supply
    constants themselves and can only be falsified by :func:`verify_conditions`.
    ``p == 2`` is reserved for the linear kind, which is oracle-only: the
    decay machinery requires ``p > 2``.
    """

    kind: str
    p: float
    a0: float = 1.0
    a1: float = 0.0
    b0: float = 1.0
    b1: float = 0.0
    f: Callable[[np.ndarray], np.ndarray] | None = None
    F: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self) -> None:
        if self.kind not in NONLINEARITY_KINDS:
            raise ValueError(f"kind must be one of {NONLINEARITY_KINDS}, got {self.kind!r}")
        for name in ("p", "a0", "a1", "b0", "b1"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite number")
            object.__setattr__(self, name, float(v))
        if self.a0 <= 0 or self.b0 <= 0:
            raise ValueError("a0 and b0 must be positive")
        if self.a1 < 0 or self.b1 < 0:
            raise ValueError("a1 and b1 must be nonnegative")
        if self.kind == LINEAR:
            if self.p != 2.0:
                raise ValueError("linear kind is the oracle-only p=2 case")
        elif self.p <= 2.0:
            raise ValueError("p must be > 2 (p=2 is allowed only for the linear kind)")
        if self.kind == CUSTOM and self.f is None:
            raise ValueError("custom kind requires a pointwise f")

    @property
    def oracle_only(self) -> bool:
        return self.p == 2.0


def linear_nonlinearity() -> NonlinearitySpec:
    """F = identity; supports the exact closed-form oracle, not decay."""
    return NonlinearitySpec(kind=LINEAR, p=2.0, a0=1.0, a1=0.0, b0=1.0, b1=0.0)


def power_law_nonlinearity(p: float) -> NonlinearitySpec:
    """F(u) = |u|^(p-2) u; coercivity and growth hold exactly with a0=b0=1."""
    return NonlinearitySpec(kind=POWER_LAW, p=p, a0=1.0, a1=0.0, b0=1.0, b1=0.0)


def cubic_nonlinearity() -> NonlinearitySpec:
    """f(u) = 3u^2, F(u) = u^3: the power law at p=4."""
    return NonlinearitySpec(kind=CUBIC, p=4.0, a0=1.0, a1=0.0, b0=1.0, b1=0.0)


def custom_nonlinearity(
    f: Callable[[np.ndarray], np.ndarray],
    p: float,
    a0: float,
    a1: float,
    b0: float,
    b1: float,
    F: Callable[[np.ndarray], np.ndarray] | None = None,
) -> NonlinearitySpec:
    """User-supplied vectorized ``f``; ``F`` defaults to quadrature of ``f``."""
    return NonlinearitySpec(kind=CUSTOM, p=p, a0=a0, a1=a1, b0=b0, b1=b1, f=f, F=F)


def tabulated_f(r_values, f_values) -> Callable[[np.ndarray], np.ndarray]:
    """Piecewise-linear interpolant for a tabulated scalar f.

    Clamps to the endpoint values outside the table range, so a runaway
    trajectory sees a bounded f rather than an extrapolated one.
    """
    r = np.asarray(r_values, dtype=np.float64)
    fv = np.asarray(f_values, dtype=np.float64)
    if r.ndim != 1 or r.shape != fv.shape or r.size < 2:
        raise ValueError("table needs matching 1-D r and f arrays with >= 2 entries")
    if not np.all(np.diff(r) > 0):
        raise ValueError("table r values must be strictly increasing")
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(fv))):
        raise ValueError("table values must be finite")

    def f(u: np.ndarray) -> np.ndarray:
        return np.interp(u, r, fv)

    return f


# 32-node Gauss-Legendre on (0, 1), used to evaluate the primitive of a
# custom f on whole grids at once: F(u) = u * int_0^1 f(u*s) ds.
_GL32_NODES, _GL32_WEIGHTS = np.polynomial.legendre.leggauss(32)
_GL32_NODES = 0.5 * (_GL32_NODES + 1.0)
_GL32_WEIGHTS = 0.5 * _GL32_WEIGHTS

_GL16_NODES, _GL16_WEIGHTS = np.polynomial.legendre.leggauss(S_NODES_DEFAULT)
_GL16_NODES = 0.5 * (_GL16_NODES + 1.0)
_GL16_WEIGHTS = 0.5 * _GL16_WEIGHTS


def F_on_grid(nl: NonlinearitySpec, u: np.ndarray) -> np.ndarray:
    """Evaluate the primitive F pointwise on an array of samples."""
    if nl.kind == LINEAR:
        return np.asarray(u, dtype=np.float64).copy()
    if nl.kind == POWER_LAW:
        return np.abs(u) ** (nl.p - 2.0) * u
    if nl.kind == CUBIC:
        return u * u * u
    if nl.F is not None:
        return np.asarray(nl.F(u), dtype=np.float64)
    # Fixed-order Gauss-Legendre of f along each ray from 0; smooth custom
    # f gains nothing from adaptivity here and this vectorizes over u.
    s = _GL32_NODES.reshape((-1,) + (1,) * np.ndim(u))
    w = _GL32_WEIGHTS.reshape((-1,) + (1,) * np.ndim(u))
    return np.asarray(u) * np.sum(w * nl.f(np.asarray(u) * s), axis=0)


def f_on_grid(nl: NonlinearitySpec, u: np.ndarray) -> np.ndarray:
    """Evaluate the scalar integrand f pointwise."""
    if nl.kind == LINEAR:
        return np.ones_like(np.asarray(u, dtype=np.float64))
    if nl.kind == POWER_LAW:
        return (nl.p - 1.0) * np.abs(u) ** (nl.p - 2.0)
    if nl.kind == CUBIC:
        return 3.0 * np.asarray(u) ** 2
    return np.asarray(nl.f(u), dtype=np.float64)


def primitive_F(nl: NonlinearitySpec, r: float) -> float:
    """F(r) = integral of f from 0 to r; closed form for built-in kinds."""
    if not (isinstance(r, (int, float)) and math.isfinite(r)):
        raise ValueError("r must be finite")
    r = float(r)
    if nl.kind == LINEAR:
        return r
    if nl.kind == POWER_LAW:
        return abs(r) ** (nl.p - 2.0) * r
    if nl.kind == CUBIC:
        return r * r * r
    if nl.F is not None:
        return float(nl.F(np.float64(r)))
    from scipy.integrate import quad

    value, _ = quad(lambda s: float(nl.f(np.float64(s))), 0.0, r, epsabs=1e-12, limit=200)
    return float(value)


def apply_F(x: SpectralField, nl: NonlinearitySpec) -> SpectralField:
    """Galerkin projection of F composed with the field.

    Samples the field on the quadrature grid, applies F pointwise, and
    projects back onto the retained modes.  Overflow in F surfaces as an
    error naming the offending amplitude instead of being clamped.
    """
    if nl.kind == LINEAR:
        return x
    u = to_grid(x)
    w = F_on_grid(nl, u)
    if not np.all(np.isfinite(w)):
        peak = float(np.max(np.abs(u)))
        raise OverflowError(f"F overflowed on grid samples (peak |u| = {peak:.6g})")
    return SpectralField(x.op.projection @ w, x.op)


@dataclass(frozen=True)
class PotentialValue:
    """Potential of F at one field, plus the s-integral resolution used.

    ``quadrature_nodes == 0`` marks a closed-form evaluation.
    """

    value: float
    quadrature_nodes: int


def _grid_samples(coeffs: np.ndarray, op: OperatorSpec) -> np.ndarray:
    return coeffs @ op.basis.T


def potential_batch(
    coeffs: np.ndarray,
    op: OperatorSpec,
    nl: NonlinearitySpec,
    s_nodes: int = S_NODES_DEFAULT,
    force_quadrature: bool = False,
) -> np.ndarray:
    """Potential values for a batch of coefficient rows, vectorized.

    Phi(x) = int_0^1 <F(s x), x> ds; closed forms for the built-in kinds,
    Gauss-Legendre in s otherwise (or when ``force_quadrature`` is set).
    """
    c = np.atleast_2d(np.asarray(coeffs, dtype=np.float64))
    if not force_quadrature:
        if nl.kind == LINEAR:
            return 0.5 * np.sum(c * c, axis=1)
        if nl.kind in (POWER_LAW, CUBIC):
            u = _grid_samples(c, op)
            return (np.abs(u) ** nl.p @ op.weights) / nl.p
    if s_nodes == S_NODES_DEFAULT:
        s, w = _GL16_NODES, _GL16_WEIGHTS
    else:
        s, w = np.polynomial.legendre.leggauss(int(s_nodes))
        s = 0.5 * (s + 1.0)
        w = 0.5 * w
    u = _grid_samples(c, op)
    out = np.zeros(c.shape[0])
    for sq, wq in zip(s, w):
        out += wq * ((F_on_grid(nl, sq * u) * u) @ op.weights)
    return out


def potential_Phi(
    x: SpectralField,
    nl: NonlinearitySpec,
    s_nodes: int = S_NODES_DEFAULT,
    force_quadrature: bool = False,
) -> PotentialValue:
    """Potential of F at ``x``; see :func:`potential_batch` for the rule."""
    value = float(potential_batch(x.coeffs[None, :], x.op, nl, s_nodes, force_quadrature)[0])
    closed = (not force_quadrature) and nl.kind in (LINEAR, POWER_LAW, CUBIC)
    return PotentialValue(value=value, quadrature_nodes=0 if closed else int(s_nodes))


@dataclass(frozen=True)
class ConditionCheck:
    """Outcome of one sampled structural check.

    ``worst_violation`` is how far the worst sample crossed the asserted
    inequality (negative or zero means never crossed); ``tolerance`` is the
    slack granted before declaring failure; ``witness`` localizes the worst
    sample for reproduction.
    """

    name: str
    passed: bool
    samples: int
    worst_violation: float
    tolerance: float
    witness: dict | None = None


@dataclass(frozen=True)
class ConditionReport:
    """Bundle of condition checks with an overall verdict."""

    checks: tuple[ConditionCheck, ...]
    seed: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "seed": self.seed,
            "checks": [
                {
                    "name": c.name,
                    "passed": c.passed,
                    "samples": c.samples,
                    "worst_violation": c.worst_violation,
                    "tolerance": c.tolerance,
                    "witness": c.witness,
                }
                for c in self.checks
            ],
        }


def _draw_batch(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    coeffs = rng.uniform(-1.0, 1.0, size=(n, m))
    amps = rng.uniform(0.0, AMPLITUDE_MAX, size=(n, 1))
    return coeffs * amps


def _check(name: str, n: int, violation: np.ndarray, tol: np.ndarray, witness_extra=None) -> ConditionCheck:
    margin = violation - tol
    i = int(np.argmax(margin))
    worst = float(violation[i])
    passed = bool(margin[i] <= 0.0)
    witness = {"sample": i}
    if witness_extra is not None:
        witness.update({k: float(v[i]) for k, v in witness_extra.items()})
    return ConditionCheck(
        name=name,
        passed=passed,
        samples=n,
        worst_violation=worst,
        tolerance=float(tol[i]) if np.ndim(tol) else float(tol),
        witness=witness if not passed else None,
    )


def verify_conditions(
    nl: NonlinearitySpec,
    op: OperatorSpec,
    samples: int,
    seed: int = 0,
) -> ConditionReport:
    """Randomized falsification of monotonicity, growth, and coercivity.

    Draws ``samples`` field pairs with coefficients uniform in [-1, 1]
    scaled by amplitudes uniform in [0, 10] and checks, by grid quadrature:

    - monotonicity: <F(x) - F(z), x - z> >= -1e-10,
    - growth: ||F(x)||_{p'} <= a0*||x||_p^(p-1) + a1*||x||_H,
    - coercivity: <F(x), x> >= b0*||x||_p^p + b1*||x||_H^2,

    the last two with relative slack 1e-10*(1 + |rhs|).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    m = op.modes
    cx = _draw_batch(rng, samples, m)
    cz = _draw_batch(rng, samples, m)
    w = op.weights
    ux = _grid_samples(cx, op)
    uz = _grid_samples(cz, op)
    fx = F_on_grid(nl, ux)
    fz = F_on_grid(nl, uz)

    mono = ((fx - fz) * (ux - uz)) @ w
    mono_tol = np.full(samples, MONOTONE_SLACK)
    c_mono = _check("monotonicity", samples, -mono, mono_tol, {"pairing": mono})

    p = nl.p
    q = p / (p - 1.0)
    norm_p = (np.abs(ux) ** p @ w) ** (1.0 / p)
    norm_h = np.sqrt(np.sum(cx * cx, axis=1))
    dual = (np.abs(fx) ** q @ w) ** (1.0 / q)
    rhs_g = nl.a0 * norm_p ** (p - 1.0) + nl.a1 * norm_h
    tol_g = RELATIVE_SLACK * (1.0 + np.abs(rhs_g))
    c_growth = _check("growth", samples, dual - rhs_g, tol_g, {"lhs": dual, "rhs": rhs_g})

    pairing = (fx * ux) @ w
    rhs_c = nl.b0 * norm_p ** p + nl.b1 * norm_h ** 2
    tol_c = RELATIVE_SLACK * (1.0 + np.abs(rhs_c))
    c_coerce = _check("coercivity", samples, rhs_c - pairing, tol_c, {"lhs": pairing, "rhs": rhs_c})

    return ConditionReport(checks=(c_mono, c_growth, c_coerce), seed=seed)


@dataclass(frozen=True, eq=False)
class ForcingSpec:
    """Forcing term g(x, v) with its Lipschitz/affine constants.

    ``v`` is the half-smoothed velocity channel.  The constants assert
    ``||g(x,v)||_H <= g1*||x||_H + g2*||v||_H + g0`` and, pairing against
    any test field z, ``|<g(x,v) - g(x1,v1), z>| <= g1*|<x-x1,z>| +
    g2*|<v-v1,z>|``; ``g0`` must dominate ``||g(0,0)||_H``.
    """

    kind: str
    g0: float = 0.0
    g1: float = 0.0
    g2: float = 0.0
    constant: float = 0.0
    func: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def __post_init__(self) -> None:
        if self.kind not in FORCING_KINDS:
            raise ValueError(f"kind must be one of {FORCING_KINDS}, got {self.kind!r}")
        for name in ("g0", "g1", "g2", "constant"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite number")
            object.__setattr__(self, name, float(v))
        if self.g0 < 0 or self.g1 < 0 or self.g2 < 0:
            raise ValueError("g0, g1, g2 must be nonnegative")
        if self.kind == ZERO and (self.g0 or self.g1 or self.g2 or self.constant):
            raise ValueError("zero forcing takes no constants")
        if self.kind == CUSTOM_LIPSCHITZ and self.func is None:
            raise ValueError("custom_lipschitz requires a callable")

    @property
    def velocity_dependent(self) -> bool:
        return self.kind != ZERO and self.g2 > 0.0


def zero_forcing() -> ForcingSpec:
    return ForcingSpec(kind=ZERO)


def affine_forcing(
    g1: float = 0.0,
    g2: float = 0.0,
    constant: float = 0.0,
    g0: float | None = None,
) -> ForcingSpec:
    """g(x, v) = g1*x + g2*v + constant, with |constant| folded into g0.

    When ``g0`` is omitted it defaults to 0 for a zero constant; a nonzero
    constant needs an explicit, domain-aware g0 (its norm depends on the
    interval length).
    """
    if g0 is None:
        if constant != 0.0:
            raise ValueError("g0 must be given explicitly when constant != 0")
        g0 = 0.0
    return ForcingSpec(kind=AFFINE, g0=g0, g1=g1, g2=g2, constant=constant)


def custom_lipschitz_forcing(
    func: Callable[[np.ndarray, np.ndarray], np.ndarray],
    g0: float,
    g1: float,
    g2: float,
) -> ForcingSpec:
    """Grid-sample callable g(x_samples, v_samples) with declared constants."""
    return ForcingSpec(kind=CUSTOM_LIPSCHITZ, g0=g0, g1=g1, g2=g2, func=func)


def constant_modal(op: OperatorSpec, value: float = 1.0) -> np.ndarray:
    """Coefficients of the constant function projected onto the basis."""
    return op.projection @ np.full(op.grid_points, float(value))


def apply_g(fs: ForcingSpec, x: SpectralField, v: SpectralField) -> SpectralField:
    """Evaluate the forcing at a state, returning modal coefficients."""
    if x.op is not v.op and (x.op.domain != v.op.domain or x.op.modes != v.op.modes):
        raise ValueError("x and v belong to different operators")
    op = x.op
    if fs.kind == ZERO:
        return SpectralField(np.zeros(op.modes), op)
    if fs.kind == AFFINE:
        c = fs.g1 * x.coeffs + fs.g2 * v.coeffs
        if fs.constant != 0.0:
            c = c + fs.constant * constant_modal(op)
        return SpectralField(c, op)
    samples = fs.func(to_grid(x), to_grid(v))
    s = np.asarray(samples, dtype=np.float64)
    if s.shape != (op.grid_points,):
        raise ValueError("custom forcing must return one sample per grid node")
    if not np.all(np.isfinite(s)):
        raise OverflowError("forcing overflowed on grid samples")
    return SpectralField(op.projection @ s, op)


def forcing_modal_batch(
    fs: ForcingSpec,
    op: OperatorSpec,
    a: np.ndarray,
    adot: np.ndarray,
) -> np.ndarray:
    """Modal forcing coefficients for batches of states, vectorized.

    Rows of ``a`` and ``adot`` are displacement coefficients and their time
    derivatives; the velocity channel passed to g has coefficients
    ``adot / sqrt(lambda)``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    adot = np.atleast_2d(np.asarray(adot, dtype=np.float64))
    if fs.kind == ZERO:
        return np.zeros_like(a)
    v = adot / op.sqrt_eigenvalues[None, :]
    if fs.kind == AFFINE:
        out = fs.g1 * a + fs.g2 * v
        if fs.constant != 0.0:
            out = out + fs.constant * constant_modal(op)[None, :]
        return out
    ug = _grid_samples(a, op)
    vg = _grid_samples(v, op)
    rows = [fs.func(ug[i], vg[i]) for i in range(a.shape[0])]
    return np.asarray(rows, dtype=np.float64) @ op.projection.T


def verify_g(
    fs: ForcingSpec,
    op: OperatorSpec,
    samples: int,
    seed: int = 0,
) -> ConditionReport:
    """Randomized falsification of the forcing bounds.

    Checks ``g0 >= ||g(0,0)||_H``, the norm bound against random states,
    and the pairing Lipschitz bound against random quadruples and test
    fields, all with relative slack 1e-10.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    m = op.modes

    def g_modal(ca: np.ndarray, cv: np.ndarray) -> np.ndarray:
        return forcing_modal_batch(fs, op, ca, cv * op.sqrt_eigenvalues[None, :])

    # forcing_modal_batch expects the raw time-derivative coefficients and
    # divides by sqrt(lambda) itself, so pre-multiply to hand it the v we
    # actually drew.
    zero = np.zeros((1, m))
    origin_norm = float(np.linalg.norm(g_modal(zero, zero)[0]))
    viol0 = np.array([origin_norm - fs.g0])
    tol0 = RELATIVE_SLACK * (1.0 + np.abs(np.array([fs.g0])))
    c_origin = _check("g0_dominates_origin", 1, viol0, tol0, {"origin_norm": np.array([origin_norm])})

    cx = _draw_batch(rng, samples, m)
    cv = _draw_batch(rng, samples, m)
    gv = g_modal(cx, cv)
    lhs = np.linalg.norm(gv, axis=1)
    rhs = fs.g1 * np.linalg.norm(cx, axis=1) + fs.g2 * np.linalg.norm(cv, axis=1) + fs.g0
    tol = RELATIVE_SLACK * (1.0 + np.abs(rhs))
    c_norm = _check("norm_bound", samples, lhs - rhs, tol, {"lhs": lhs, "rhs": rhs})

    cx1 = _draw_batch(rng, samples, m)
    cv1 = _draw_batch(rng, samples, m)
    cz = _draw_batch(rng, samples, m)
    dg = g_modal(cx, cv) - g_modal(cx1, cv1)
    lhs_pair = np.abs(np.sum(dg * cz, axis=1))
    rhs_pair = fs.g1 * np.abs(np.sum((cx - cx1) * cz, axis=1)) + fs.g2 * np.abs(np.sum((cv - cv1) * cz, axis=1))
    tol_pair = RELATIVE_SLACK * (1.0 + np.abs(rhs_pair) + np.abs(lhs_pair))
    c_pair = _check("lipschitz_pairing", samples, lhs_pair - rhs_pair, tol_pair, {"lhs": lhs_pair, "rhs": rhs_pair})

    return ConditionReport(checks=(c_origin, c_norm, c_pair), seed=seed)
