"""Eigenbasis calculus on an interval.

Everything downstream works in the eigenbasis of the second-derivative
operator ``A`` on ``(0, length)``: Dirichlet sine modes, or mean-zero
Fourier modes for the periodic case.  ``A`` and its powers act diagonally
on coefficients; grid transforms use a quadrature rule that integrates
products of retained basis functions exactly, so projections of polynomial
nonlinearities are alias-free at the default grid size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BoundaryKind",
    "DomainSpec",
    "OperatorSpec",
    "PoincareViolationError",
    "SpectralField",
    "apply_A",
    "apply_A_inv",
    "apply_A_inv_sqrt",
    "apply_B",
    "build_operator",
    "dealias_floor",
    "default_grid_points",
    "from_grid",
    "inner",
    "norm_H",
    "norm_Lp",
    "to_grid",
    "unit_mode",
]

DIRICHLET = "dirichlet"
PERIODIC_MEAN_ZERO = "periodic_mean_zero"
BOUNDARY_KINDS = (DIRICHLET, PERIODIC_MEAN_ZERO)

# Alias for discoverability; values are the strings above.
BoundaryKind = str


class PoincareViolationError(ValueError):
    """Smallest eigenvalue is below 1, so norm equivalences would fail."""


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DomainSpec:
    """Interval geometry and boundary condition.

    ``grid_points`` of ``None`` asks :func:`build_operator` to pick the
    smallest grid that makes quartic products of basis functions integrate
    exactly.  ``allow_poincare_violation`` downgrades the smallest-eigenvalue
    check (which requires ``lambda_min >= 1``) from an error to a recorded
    warning.
    """

    length: float
    bc: str
    grid_points: int | None = None
    allow_poincare_violation: bool = False

    def __post_init__(self) -> None:
        if not (isinstance(self.length, (int, float)) and math.isfinite(self.length)):
            raise ValueError("length must be a finite number")
        if self.length <= 0:
            raise ValueError("length must be positive")
        if self.bc not in BOUNDARY_KINDS:
            raise ValueError(f"bc must be one of {BOUNDARY_KINDS}, got {self.bc!r}")
        if self.grid_points is not None:
            if not isinstance(self.grid_points, int) or isinstance(self.grid_points, bool):
                raise ValueError("grid_points must be an int or None")
            if self.grid_points < 1:
                raise ValueError("grid_points must be >= 1")
        object.__setattr__(self, "length", float(self.length))


def dealias_floor(modes: int, bc: str = DIRICHLET) -> int:
    """Smallest admissible grid size for ``modes`` retained modes.

    ``ceil(3 * modes / 2)`` in both cases; the periodic rule additionally
    needs ``2 * wavenumber_max + 1`` points so that no retained mode pair
    aliases to the constant under the trapezoid rule.
    """
    floor = (3 * modes + 1) // 2
    if bc == PERIODIC_MEAN_ZERO:
        floor = max(floor, 2 * ((modes + 1) // 2) + 1)
    return floor


def default_grid_points(modes: int, bc: str = DIRICHLET) -> int:
    """Grid size making products of up to four retained modes exact."""
    if bc == DIRICHLET:
        # Midpoint rule on N points integrates cos(q*pi*xi/l) exactly for
        # q <= 2N - 1; quartic products reach q = 4*modes.
        return 2 * modes + 1
    # Trapezoid rule on N points integrates wavenumber q exactly unless
    # N divides q; quartic products reach q = 4*wavenumber_max.
    return 4 * ((modes + 1) // 2) + 1


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """Discretized operator: eigenvalues, quadrature grid, transform matrices.

    ``basis`` has shape ``(grid_points, modes)`` with columns sampling the
    orthonormal eigenfunctions; ``projection`` is its quadrature-weighted
    transpose, so ``projection @ basis == identity`` up to round-off.
    """

    domain: DomainSpec
    modes: int
    eigenvalues: np.ndarray
    sqrt_eigenvalues: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    basis: np.ndarray
    projection: np.ndarray
    warnings: tuple[str, ...] = field(default=())

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def grid_points(self) -> int:
        return int(self.nodes.shape[0])


def build_operator(domain: DomainSpec, modes: int) -> OperatorSpec:
    """Assemble the diagonal operator and transform pair for ``modes`` modes.

    Raises :class:`PoincareViolationError` when the smallest eigenvalue drops
    below 1 (Dirichlet needs ``length <= pi``, periodic ``length <= 2*pi``)
    unless the domain opts out, in which case a warning string is recorded
    on the returned spec.
    """
    if not isinstance(modes, int) or isinstance(modes, bool) or modes < 1:
        raise ValueError("modes must be a positive int")
    l = domain.length
    floor = dealias_floor(modes, domain.bc)
    n = domain.grid_points if domain.grid_points is not None else default_grid_points(modes, domain.bc)
    if n < floor:
        raise ValueError(f"grid_points={n} is below the dealiasing floor {floor} for modes={modes}")

    if domain.bc == DIRICHLET:
        nodes = (np.arange(n) + 0.5) * (l / n)
        k = np.arange(1, modes + 1, dtype=np.float64)
        lam = (k * np.pi / l) ** 2
        basis = math.sqrt(2.0 / l) * np.sin(np.outer(nodes, k * np.pi / l))
    else:
        nodes = np.arange(n) * (l / n)
        idx = np.arange(modes)
        wavenumbers = idx // 2 + 1
        lam = (2.0 * np.pi * wavenumbers / l) ** 2
        phase = np.outer(nodes, 2.0 * np.pi * wavenumbers / l)
        basis = np.where(idx % 2 == 0, np.cos(phase), np.sin(phase)) * math.sqrt(2.0 / l)
    weights = np.full(n, l / n)
    projection = basis.T * weights[None, :]

    warnings: tuple[str, ...] = ()
    if lam[0] < 1.0:
        msg = (
            f"lambda_min={lam[0]:.6g} < 1 for length={l:g}, bc={domain.bc}; "
            "norm-equivalence constants in the energy estimates are invalid"
        )
        if not domain.allow_poincare_violation:
            raise PoincareViolationError(msg)
        warnings = (msg,)

    return OperatorSpec(
        domain=domain,
        modes=modes,
        eigenvalues=_readonly(lam),
        sqrt_eigenvalues=_readonly(np.sqrt(lam)),
        nodes=_readonly(nodes),
        weights=_readonly(weights),
        basis=_readonly(basis),
        projection=_readonly(projection),
        warnings=warnings,
    )


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficient vector in the eigenbasis of one operator."""

    coeffs: np.ndarray
    op: OperatorSpec

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.shape != (self.op.modes,):
            raise ValueError(f"coeffs must have shape ({self.op.modes},), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coeffs must be finite")
        object.__setattr__(self, "coeffs", _readonly(c))


def unit_mode(op: OperatorSpec, k: int, amplitude: float = 1.0) -> SpectralField:
    """Field with a single nonzero coefficient at index ``k`` (0-based)."""
    c = np.zeros(op.modes)
    c[k] = amplitude
    return SpectralField(c, op)


def _check_same_op(x: SpectralField, z: SpectralField) -> None:
    if x.op is z.op:
        return
    if x.op.domain != z.op.domain or x.op.modes != z.op.modes:
        raise ValueError("fields belong to different operators")


def apply_A(x: SpectralField) -> SpectralField:
    """Multiply coefficients by the eigenvalues."""
    return SpectralField(x.coeffs * x.op.eigenvalues, x.op)


def apply_B(x: SpectralField) -> SpectralField:
    """Square root of ``A``: multiply coefficients by ``sqrt(lambda_k)``."""
    return SpectralField(x.coeffs * x.op.sqrt_eigenvalues, x.op)


def apply_A_inv(x: SpectralField) -> SpectralField:
    return SpectralField(x.coeffs / x.op.eigenvalues, x.op)


def apply_A_inv_sqrt(x: SpectralField) -> SpectralField:
    return SpectralField(x.coeffs / x.op.sqrt_eigenvalues, x.op)


def to_grid(x: SpectralField) -> np.ndarray:
    """Sample the field on the quadrature nodes."""
    return x.op.basis @ x.coeffs


def from_grid(samples: np.ndarray, op: OperatorSpec) -> SpectralField:
    """Project grid samples onto the retained modes by quadrature."""
    u = np.asarray(samples, dtype=np.float64)
    if u.shape != (op.grid_points,):
        raise ValueError(f"samples must have shape ({op.grid_points},), got {u.shape}")
    if not np.all(np.isfinite(u)):
        raise ValueError("samples must be finite")
    return SpectralField(op.projection @ u, op)


def norm_H(x: SpectralField) -> float:
    """L2 norm via Parseval: plain 2-norm of the coefficients."""
    return float(np.linalg.norm(x.coeffs))


def inner(x: SpectralField, z: SpectralField) -> float:
    """L2 inner product of two fields over the same operator."""
    _check_same_op(x, z)
    return float(np.dot(x.coeffs, z.coeffs))


def norm_Lp(x: SpectralField, p: float) -> float:
    """Lp norm by quadrature of ``|u|^p`` on the grid."""
    if not (isinstance(p, (int, float)) and math.isfinite(p) and p >= 1):
        raise ValueError("p must be a finite number >= 1")
    u = to_grid(x)
    return float(np.dot(x.op.weights, np.abs(u) ** p) ** (1.0 / p))
