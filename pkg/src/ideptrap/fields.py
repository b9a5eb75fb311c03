"""Grid-sampled scalar and vector fields, differencing, and interpolation.

Fields live at the cell centers of a Grid3.  Differencing uses second-order
central stencils on interior cells and one-sided second-order stencils on
boundary cells (numpy.gradient).  Point queries interpolate trilinearly
between cell centers; in the half-cell rim between the outermost centers and
the domain boundary the interpolation clamps to the nearest center, so every
point of the closed domain box is sampleable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryInvalid, OutOfDomain
from .geometry import Grid3


def _check_values(grid: Grid3, values: np.ndarray, expected_shape: tuple) -> None:
    if values.shape != expected_shape:
        raise GeometryInvalid(
            f"field shape {values.shape} does not match grid, expected {expected_shape}"
        )
    if not np.isfinite(values).all():
        raise GeometryInvalid("field contains non-finite values")


@dataclass(frozen=True, eq=False)
class ScalarField3:
    """One float64 value per grid cell.  `quantity` names what is stored."""

    grid: Grid3
    values: np.ndarray
    quantity: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        _check_values(self.grid, self.values, self.grid.shape)

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())


@dataclass(frozen=True, eq=False)
class VectorField3:
    """Three float64 components per grid cell, stored component-first (3, nx, ny, nz)."""

    grid: Grid3
    values: np.ndarray
    quantity: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        _check_values(self.grid, self.values, (3,) + self.grid.shape)

    def component(self, axis: int) -> ScalarField3:
        return ScalarField3(self.grid, self.values[axis], f"{self.quantity}[{'xyz'[axis]}]")

    def magnitude(self) -> ScalarField3:
        mag = np.sqrt(np.sum(self.values * self.values, axis=0))
        return ScalarField3(self.grid, mag, f"|{self.quantity}|")


def electric_field(phi: ScalarField3) -> VectorField3:
    """E = -grad(phi).  With an AC drive the input potential is an RMS
    amplitude, so the output is the RMS field."""
    g = phi.grid
    grads = np.gradient(phi.values, g.dx, g.dy, g.dz, edge_order=2)
    return VectorField3(g, -np.stack(grads), "E")


def e_squared(E: VectorField3) -> ScalarField3:
    """Pointwise squared magnitude Ex^2 + Ey^2 + Ez^2."""
    return ScalarField3(E.grid, np.sum(E.values * E.values, axis=0), "E2")


def grad_e_squared(E2: ScalarField3) -> VectorField3:
    """Gradient of E^2 with the same stencils as electric_field."""
    g = E2.grid
    grads = np.gradient(E2.values, g.dx, g.dy, g.dz, edge_order=2)
    return VectorField3(g, np.stack(grads), "gradE2")


def _trilinear_coeffs(grid: Grid3, point):
    """Base cell-center indices and fractional weights for a point.

    Points inside the domain but beyond the outermost cell centers clamp to
    the boundary center (weight 0 or 1), which keeps sampling defined on the
    whole closed box.  Points outside the box raise OutOfDomain.
    """
    if not grid.contains(point):
        raise OutOfDomain(f"point {tuple(point)} outside domain {grid.bbox}")
    base = []
    weight = []
    for c, o, d, n in zip(point, grid.origin, grid.spacing, grid.shape):
        t = (c - o) / d - 0.5
        t = min(max(t, 0.0), n - 1.0)
        i0 = min(int(t), n - 2)
        base.append(i0)
        weight.append(t - i0)
    return base, weight


def sample_scalar(f: ScalarField3, point) -> float:
    """Trilinear interpolation of a scalar field at one point."""
    (i, j, k), (wx, wy, wz) = _trilinear_coeffs(f.grid, point)
    cube = f.values[i : i + 2, j : j + 2, k : k + 2]
    cx = cube[0] * (1.0 - wx) + cube[1] * wx
    cy = cx[0] * (1.0 - wy) + cx[1] * wy
    return float(cy[0] * (1.0 - wz) + cy[1] * wz)


def sample_vector(f: VectorField3, point) -> np.ndarray:
    """Trilinear interpolation of a vector field at one point; returns shape (3,)."""
    (i, j, k), (wx, wy, wz) = _trilinear_coeffs(f.grid, point)
    cube = f.values[:, i : i + 2, j : j + 2, k : k + 2]
    cx = cube[:, 0] * (1.0 - wx) + cube[:, 1] * wx
    cy = cx[:, 0] * (1.0 - wy) + cx[:, 1] * wy
    return cy[:, 0] * (1.0 - wz) + cy[:, 1] * wz


@dataclass(frozen=True)
class AxisLine:
    """Axis-aligned sampling line.

    axis      0 = x, 1 = y, 2 = z
    through   any point on the line; its off-axis coordinates fix the line
    span      (lo, hi) along the axis; None means the full domain extent
    samples   number of uniformly spaced sample points; None means one per cell
    """

    axis: int
    through: tuple[float, float, float]
    span: tuple[float, float] | None = None
    samples: int | None = None

    def __post_init__(self):
        if self.axis not in (0, 1, 2):
            raise GeometryInvalid(f"axis must be 0, 1, or 2, got {self.axis}")
        if self.span is not None and not self.span[0] < self.span[1]:
            raise GeometryInvalid(f"span must be increasing, got {self.span}")
        if self.samples is not None and self.samples < 2:
            raise GeometryInvalid("need at least 2 samples")


def line_profile(f, line: AxisLine) -> list[tuple[float, float]]:
    """Field values at uniform stations along an axis-aligned line.

    Returns (arc_length, value) pairs with arc length measured from the span
    start.  Vector fields are profiled by magnitude.  Raises OutOfDomain if
    any part of the line leaves the domain box.
    """
    if isinstance(f, VectorField3):
        f = f.magnitude()
    grid = f.grid
    lo, hi = grid.bbox[line.axis]
    span = line.span if line.span is not None else (lo, hi)
    n = line.samples if line.samples is not None else grid.shape[line.axis]
    stations = np.linspace(span[0], span[1], n)
    point = list(line.through)
    out = []
    for s in stations:
        point[line.axis] = float(s)
        out.append((float(s - span[0]), sample_scalar(f, point)))
    return out
