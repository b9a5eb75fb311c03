"""Derived summary quantities of a solved device.

Three reports: how fast the centerline peak of |grad(E^2)| decays with
height above the floor, how that peak depends on the tip gap, and how
uniform E^2 is over a horizontal slice (uniform far above the insulator,
strongly peaked inside the constriction).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import GeometryInvalid, OutOfDomain
from .fields import AxisLine, ScalarField3, line_profile
from .geometry import DeviceSpec
from .solver import DeviceSolution, SolveConfig, solve_device


def centerline(
    spec: DeviceSpec, height: float, *, pair_index: int = 0, axis: str = "x"
) -> AxisLine:
    """Sampling line through the gap center of one tip pair at a given z.

    axis "x" runs along the channel (the default profile direction);
    axis "y" runs across the gap from tip to tip.
    """
    if not spec.tip_pairs:
        raise GeometryInvalid("device has no tip pairs")
    pair = spec.tip_pairs[pair_index]
    mid_y = spec.channel_width / 2.0
    if axis == "x":
        return AxisLine(axis=0, through=(0.0, mid_y, height))
    if axis == "y":
        return AxisLine(axis=1, through=(pair.center_x, 0.0, height))
    raise GeometryInvalid(f"axis must be 'x' or 'y', got {axis!r}")


def _peak_along(field, line: AxisLine, samples: int) -> float:
    profile = line_profile(field, replace(line, samples=samples))
    return max(v for _, v in profile)


def _profile_samples(solution: DeviceSolution, axis_index: int) -> int:
    # Two stations per cell plus one keeps the domain midpoint on a station.
    return 2 * solution.phi.grid.shape[axis_index] + 1


@dataclass(frozen=True)
class HeightDecayReport:
    """Centerline peak of |grad(E^2)| per height, relative to the first height."""

    heights: tuple[float, ...]
    peak_grad_e2: tuple[float, ...]
    relative_reduction: tuple[float, ...]

    def __post_init__(self):
        if not len(self.heights) == len(self.peak_grad_e2) == len(self.relative_reduction):
            raise GeometryInvalid("report columns differ in length")
        if self.relative_reduction and self.relative_reduction[0] != 0.0:
            raise GeometryInvalid("first reduction must be 0 (self-comparison)")


def height_decay(
    solution: DeviceSolution, heights, *, axis: str = "x"
) -> HeightDecayReport:
    """Peak |grad(E^2)| along the gap centerline at each height.

    Reductions are 1 - peak_i / peak_0, so they are invariant under any
    rescaling of the drive.
    """
    heights = tuple(float(h) for h in heights)
    if not heights:
        raise GeometryInvalid("need at least one height")
    lo, hi = solution.phi.grid.bbox[2]
    for h in heights:
        if not lo <= h <= hi:
            raise OutOfDomain(f"height {h} outside domain z range ({lo}, {hi})")
    g_mag = solution.grad_E2.magnitude()
    n = _profile_samples(solution, 0 if axis == "x" else 1)
    peaks = tuple(
        _peak_along(g_mag, centerline(solution.spec, h, axis=axis), n) for h in heights
    )
    base = peaks[0]
    if base == 0.0:
        raise GeometryInvalid("reference peak is zero; reductions undefined")
    reductions = tuple(1.0 - p / base for p in peaks)
    return HeightDecayReport(heights, peaks, reductions)


@dataclass(frozen=True)
class GapSweepReport:
    """Centerline peak of |grad(E^2)| per tip gap, at one fixed height."""

    gaps: tuple[float, ...]
    peak_grad_e2: tuple[float, ...]
    height: float

    def __post_init__(self):
        if len(self.gaps) != len(self.peak_grad_e2):
            raise GeometryInvalid("report columns differ in length")
        if any(b <= a for a, b in zip(self.gaps, self.gaps[1:])):
            raise GeometryInvalid("gaps must be strictly increasing")


def with_gap(spec: DeviceSpec, gap: float) -> DeviceSpec:
    """Template spec with every tip pair re-gapped, tip bases kept at the walls."""
    pairs = tuple(
        replace(p, gap=gap, base_depth=(spec.channel_width - gap) / 2.0)
        for p in spec.tip_pairs
    )
    return replace(spec, tip_pairs=pairs)


def gap_sweep(
    spec: DeviceSpec,
    gaps,
    height: float,
    resolution: float,
    *,
    sigma_medium: float = 1.76e-3,
    eps_r_medium: float = 78.0,
    cfg: SolveConfig | None = None,
) -> GapSweepReport:
    """One full solve per gap; peak |grad(E^2)| on the centerline at `height`."""
    gaps = tuple(float(g) for g in gaps)
    peaks = []
    for gap in gaps:
        solution = solve_device(
            with_gap(spec, gap),
            resolution,
            sigma_medium=sigma_medium,
            eps_r_medium=eps_r_medium,
            cfg=cfg,
        )
        n = _profile_samples(solution, 0)
        peaks.append(
            _peak_along(solution.grad_E2.magnitude(), centerline(solution.spec, height), n)
        )
    return GapSweepReport(gaps, tuple(peaks), height)


@dataclass(frozen=True)
class UniformityReport:
    """Spread of E^2 over the x-y slice at one height: std/mean."""

    height: float
    coefficient_of_variation: float

    def __post_init__(self):
        if self.coefficient_of_variation < 0:
            raise GeometryInvalid("coefficient of variation cannot be negative")


def uniformity(E2: ScalarField3, height: float, *, margin: int = 2) -> UniformityReport:
    """Coefficient of variation of E^2 over the slice at `height`.

    The slice is linearly interpolated between the two bracketing cell-center
    layers, and a `margin`-cell rim is excluded on the x and y edges so the
    one-sided boundary stencils do not enter the statistic.
    """
    grid = E2.grid
    lo, hi = grid.bbox[2]
    if not lo <= height <= hi:
        raise OutOfDomain(f"height {height} outside domain z range ({lo}, {hi})")
    t = (height - grid.origin[2]) / grid.dz - 0.5
    t = min(max(t, 0.0), grid.nz - 1.0)
    k0 = min(int(t), grid.nz - 2)
    w = t - k0
    sl = E2.values[:, :, k0] * (1.0 - w) + E2.values[:, :, k0 + 1] * w
    if 2 * margin >= min(grid.nx, grid.ny):
        raise GeometryInvalid("slice too small for the requested margin")
    interior = sl[margin : grid.nx - margin, margin : grid.ny - margin]
    mean = float(interior.mean())
    if mean == 0.0:
        raise GeometryInvalid("slice mean is zero; cv undefined")
    cv = float(interior.std()) / mean
    return UniformityReport(height, cv)
