"""Spatial grid, potential families and their weighted L1 norms.

Potentials live in the weighted class defined by
``int |V(x)| (1+|x|)^j dx < infty``; every built-in family decays fast
enough that truncating the line to a finite box converges.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import simpson

from .errors import DivergenceWarning, DomainError, ValidationError

FAMILIES = ("zero", "gaussian", "sech_squared", "square_well", "custom_table")


@dataclass(frozen=True)
class Grid:
    """Uniform grid of n_points on [-l_box, l_box], symmetric about 0."""

    l_box: float
    n_points: int

    def __post_init__(self):
        if not np.isfinite(self.l_box) or self.l_box <= 0:
            raise ValidationError(f"l_box must be positive and finite, got {self.l_box}")
        if self.n_points < 16:
            raise ValidationError(f"n_points must be >= 16, got {self.n_points}")

    @property
    def h(self) -> float:
        return 2.0 * self.l_box / (self.n_points - 1)

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(-self.l_box, self.l_box, self.n_points)


@dataclass(frozen=True)
class PotentialSpec:
    """Analytic potential family.

    family       one of FAMILIES
    amplitude    overall prefactor (sign included)
    width        length scale; for square_well the half-width of the well
    table        (x, V) pairs for family "custom_table", linearly
                 interpolated between nodes and zero outside
    """

    family: str
    amplitude: float = 0.0
    width: float = 1.0
    table: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown potential family {self.family!r}")
        if self.family == "custom_table":
            if not self.table:
                raise ValidationError("custom_table requires a non-empty table")
            xs = [p[0] for p in self.table]
            if sorted(xs) != xs:
                raise ValidationError("custom_table abscissae must be sorted")
            if not all(np.isfinite(p[0]) and np.isfinite(p[1]) for p in self.table):
                raise ValidationError("custom_table entries must be finite")
        else:
            if not np.isfinite(self.amplitude):
                raise ValidationError("amplitude must be finite")
            if self.family != "zero" and (not np.isfinite(self.width) or self.width <= 0):
                raise ValidationError("width must be positive and finite")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Evaluate V pointwise (zero extension outside a custom table)."""
        x = np.asarray(x, dtype=float)
        if self.family == "zero":
            return np.zeros_like(x)
        if self.family == "gaussian":
            return self.amplitude * np.exp(-((x / self.width) ** 2))
        if self.family == "sech_squared":
            return self.amplitude / np.cosh(x / self.width) ** 2
        if self.family == "square_well":
            return np.where(np.abs(x) <= self.width, self.amplitude, 0.0)
        tx = np.array([p[0] for p in self.table])
        tv = np.array([p[1] for p in self.table])
        return np.interp(x, tx, tv, left=0.0, right=0.0)

    @property
    def is_zero(self) -> bool:
        if self.family == "zero":
            return True
        if self.family == "custom_table":
            return all(p[1] == 0 for p in self.table)
        return self.amplitude == 0

    def decay_scale(self) -> float:
        """Length scale beyond which the family is negligible."""
        if self.family == "custom_table":
            return max(abs(self.table[0][0]), abs(self.table[-1][0]))
        return max(self.width, 1.0)


@dataclass(frozen=True)
class PotentialGrid:
    """A potential sampled on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if len(self.values) != self.grid.n_points:
            raise ValidationError("values length does not match grid")
        self.values.setflags(write=False)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)

    def l1_norm(self) -> float:
        """h-weighted Simpson estimate of int |V| over the box."""
        return float(simpson(np.abs(self.values), dx=self.grid.h))


def sample_potential(spec: PotentialSpec, grid: Grid) -> PotentialGrid:
    """Sample the family pointwise on the grid.

    For custom tables the table must cover the whole box; interpolation
    never silently zero-extends inside a sampling request.
    """
    if spec.family == "custom_table":
        lo, hi = spec.table[0][0], spec.table[-1][0]
        if lo > -grid.l_box or hi < grid.l_box:
            raise DomainError(
                f"custom table covers [{lo}, {hi}] but the grid needs "
                f"[-{grid.l_box}, {grid.l_box}]"
            )
    values = spec(grid.x)
    if not np.all(np.isfinite(values)):
        raise ValidationError("potential evaluated to a non-finite value")
    return PotentialGrid(grid=grid, values=values)


def _simpson_weighted(spec: PotentialSpec, j: int, box: float, h: float) -> float:
    """Composite Simpson of |V|(1+|x|)^j over [-box, box] at fixed step h."""
    n = int(round(2.0 * box / h))
    if n % 2 == 1:
        n += 1
    x = np.linspace(-box, box, n + 1)
    f = np.abs(spec(x)) * (1.0 + np.abs(x)) ** j
    return float(simpson(f, dx=2.0 * box / n))


def weighted_l1_norm(
    spec: PotentialSpec,
    j: int,
    box: float | None = None,
    rel_tol: float = 1e-12,
    max_doublings: int = 6,
) -> float:
    """Weighted norm int |V|(1+|x|)^j dx, j in {0, 1, 2}.

    Evaluated on [-box, box] with the box doubled (step held fixed)
    until the value settles; j=0 gives the plain L1 norm.
    """
    if j not in (0, 1, 2):
        raise DomainError(f"j must be in {{0, 1, 2}}, got {j}")
    if spec.is_zero:
        return 0.0
    scale = spec.decay_scale()
    if box is None:
        box = 20.0 * scale
    if box <= 0:
        raise DomainError("quadrature box must be positive")
    h = min(scale, 1.0) / 1024.0
    prev = _simpson_weighted(spec, j, box, h)
    for _ in range(max_doublings):
        box *= 2.0
        cur = _simpson_weighted(spec, j, box, h)
        if abs(cur - prev) <= rel_tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    warnings.warn(
        f"weighted_l1_norm(j={j}) did not settle after {max_doublings} box "
        "doublings; the potential may not be integrable",
        DivergenceWarning,
        stacklevel=2,
    )
    return prev


def lambda0(spec: PotentialSpec) -> float:
    """Square of the L1 norm; the high-energy threshold of the Born series."""
    return weighted_l1_norm(spec, 0) ** 2
