"""Parametric trapping-chip geometry and its rasterization onto a 3D material grid.

The device is an open-top microchannel on a glass slide.  Pairs of triangular
insulator tips (extruded prisms of photoresist-like material) face each other
across the channel and constrict the current path between the electrodes at
the two channel ends.  All lengths are SI meters; config files use
micrometers and are converted before anything here is called.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import GeometryInvalid, OutOfDomain, ResolutionTooCoarse


class Label(IntEnum):
    MEDIUM = 0
    INSULATOR = 1


@dataclass(frozen=True)
class TipPairSpec:
    """One opposing pair of insulating tips, mirror-symmetric about the channel centerline.

    center_x    position of the constriction along the channel (m)
    gap         tip-to-tip spacing across the channel (m)
    tip_angle   full opening angle of each triangular tip (degrees)
    base_depth  distance from apex back toward the side wall (m)
    truncation  apex blunting length (m); 0 keeps a sharp apex.  A truncated
                tip is the same triangle with its point cut off at the gap
                boundary, so the gap is preserved and the tip face is flat.
    """

    center_x: float
    gap: float
    tip_angle: float
    base_depth: float
    truncation: float = 0.0

    def __post_init__(self):
        if self.gap <= 0:
            raise GeometryInvalid(f"tip gap must be positive, got {self.gap}")
        if not 0.0 < self.tip_angle < 180.0:
            raise GeometryInvalid(
                f"tip_angle must be in (0, 180) degrees, got {self.tip_angle}"
            )
        if self.base_depth <= 0:
            raise GeometryInvalid(f"base_depth must be positive, got {self.base_depth}")
        if self.truncation < 0:
            raise GeometryInvalid(f"truncation must be >= 0, got {self.truncation}")

    @property
    def half_angle_rad(self) -> float:
        return math.radians(self.tip_angle / 2.0)


@dataclass(frozen=True)
class ElectrodeMode:
    """Electrode drive: either a nominal applied field (V/m, RMS) or a voltage (V).

    Exactly one of the two must be set.  The applied field is converted to a
    voltage across the channel length when the potential is solved.
    """

    applied_field: float | None = None
    voltage: float | None = None

    def __post_init__(self):
        if (self.applied_field is None) == (self.voltage is None):
            raise GeometryInvalid(
                "electrode_mode requires exactly one of applied_field or voltage"
            )
        value = self.applied_field if self.applied_field is not None else self.voltage
        if value <= 0:
            raise GeometryInvalid("electrode drive value must be positive")

    def total_voltage(self, channel_length: float) -> float:
        if self.voltage is not None:
            return self.voltage
        return self.applied_field * channel_length


@dataclass(frozen=True)
class DeviceSpec:
    """Full parametric description of the trapping chip simulation domain.

    The domain box is [0, channel_length] x [0, channel_width] x
    [0, domain_height].  Electrodes sit on the two x faces.  The glass slide
    is z = 0; the top face is open.  Insulator tips are extruded from z = 0
    up to insulator_height; fluid fills everything else.
    """

    channel_length: float
    channel_width: float
    domain_height: float
    electrode_mode: ElectrodeMode
    insulator_height: float = 60e-6
    tip_pairs: tuple[TipPairSpec, ...] = ()

    def __post_init__(self):
        for name in ("channel_length", "channel_width", "domain_height", "insulator_height"):
            if getattr(self, name) <= 0:
                raise GeometryInvalid(f"{name} must be positive")
        if self.insulator_height > self.domain_height:
            raise GeometryInvalid(
                f"insulator_height {self.insulator_height} exceeds "
                f"domain_height {self.domain_height}"
            )
        object.__setattr__(self, "tip_pairs", tuple(self.tip_pairs))
        for n, pair in enumerate(self.tip_pairs):
            if pair.gap >= self.channel_width:
                raise GeometryInvalid(
                    f"tip pair {n}: gap {pair.gap} must be smaller than "
                    f"channel_width {self.channel_width}"
                )
            if pair.base_depth > (self.channel_width - pair.gap) / 2.0:
                raise GeometryInvalid(
                    f"tip pair {n}: base_depth {pair.base_depth} pushes the tip "
                    f"base beyond the side wall"
                )
            if not 0.0 < pair.center_x < self.channel_length:
                raise GeometryInvalid(
                    f"tip pair {n}: center_x {pair.center_x} outside the channel"
                )

    def min_gap(self) -> float:
        return min((p.gap for p in self.tip_pairs), default=math.inf)


@dataclass(frozen=True)
class Grid3:
    """Uniform structured grid of cells over a box anchored at `origin`.

    Values live at cell centers: center(i) = origin + (i + 0.5) * spacing.
    The index <-> center mapping round-trips exactly at cell centers.
    """

    nx: int
    ny: int
    nz: int
    dx: float
    dy: float
    dz: float
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if min(self.nx, self.ny, self.nz) < 2:
            raise GeometryInvalid("grid needs at least 2 cells per axis")
        if min(self.dx, self.dy, self.dz) <= 0:
            raise GeometryInvalid("grid spacings must be positive")

    @classmethod
    def from_box(cls, lengths: tuple[float, float, float], resolution: float) -> "Grid3":
        """Grid covering a box at the origin with spacing <= resolution per axis."""
        if resolution <= 0:
            raise GeometryInvalid("resolution must be positive")
        counts = [max(2, math.ceil(ext / resolution - 1e-9)) for ext in lengths]
        spacings = [ext / n for ext, n in zip(lengths, counts)]
        return cls(*counts, *spacings)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def spacing(self) -> tuple[float, float, float]:
        return (self.dx, self.dy, self.dz)

    @property
    def bbox(self) -> tuple[tuple[float, float], ...]:
        x0, y0, z0 = self.origin
        return (
            (x0, x0 + self.nx * self.dx),
            (y0, y0 + self.ny * self.dy),
            (z0, z0 + self.nz * self.dz),
        )

    def axis_centers(self, axis: int) -> np.ndarray:
        n = self.shape[axis]
        d = self.spacing[axis]
        return self.origin[axis] + (np.arange(n) + 0.5) * d

    def cell_center(self, i: int, j: int, k: int) -> tuple[float, float, float]:
        x0, y0, z0 = self.origin
        return (x0 + (i + 0.5) * self.dx, y0 + (j + 0.5) * self.dy, z0 + (k + 0.5) * self.dz)

    def contains(self, point) -> bool:
        return all(lo <= c <= hi for c, (lo, hi) in zip(point, self.bbox))

    def cell_index(self, point) -> tuple[int, int, int]:
        """Index of the cell containing `point`; the upper domain faces are inclusive."""
        if not self.contains(point):
            raise OutOfDomain(f"point {tuple(point)} outside domain {self.bbox}")
        idx = []
        for c, o, d, n in zip(point, self.origin, self.spacing, self.shape):
            i = int(math.floor((c - o) / d))
            idx.append(min(max(i, 0), n - 1))
        return tuple(idx)


@dataclass(frozen=True, eq=False)
class MaterialGrid:
    """Per-cell material labels plus per-label electrical properties.

    sigma and eps_r map Label -> conductivity (S/m) and relative permittivity.
    Immutable after construction; safe to share between workers read-only.
    """

    grid: Grid3
    labels: np.ndarray
    sigma: dict
    eps_r: dict

    def __post_init__(self):
        if self.labels.shape != self.grid.shape:
            raise GeometryInvalid(
                f"label array shape {self.labels.shape} does not match grid {self.grid.shape}"
            )
        valid = {int(label) for label in Label}
        present = set(np.unique(self.labels).tolist())
        if not present <= valid:
            raise GeometryInvalid(f"unknown material labels: {present - valid}")
        for table, name in ((self.sigma, "sigma"), (self.eps_r, "eps_r")):
            for label in Label:
                if label not in table:
                    raise GeometryInvalid(f"{name} missing entry for {label.name}")
        if not self.sigma[Label.MEDIUM] > self.sigma[Label.INSULATOR] >= 0:
            raise GeometryInvalid(
                "conductivities must satisfy sigma(MEDIUM) > sigma(INSULATOR) >= 0"
            )
        self.labels.setflags(write=False)

    def sigma_field(self) -> np.ndarray:
        """Cell-wise conductivity array (S/m)."""
        out = np.full(self.grid.shape, self.sigma[Label.MEDIUM])
        out[self.labels == Label.INSULATOR] = self.sigma[Label.INSULATOR]
        return out

    def insulator_fraction(self) -> float:
        return float(np.count_nonzero(self.labels == Label.INSULATOR)) / self.grid.n_cells


def _mirror_offsets(n: int, d: float) -> np.ndarray:
    """Signed distances of cell centers from the axis midline.

    Computed so that offset[n-1-j] is exactly -offset[j] in floating point,
    which makes every |offset|-based classification mirror-symmetric bit for
    bit.
    """
    return ((np.arange(n) + 0.5) - n / 2.0) * d


def _pair_mask_xy(pair: TipPairSpec, xs: np.ndarray, abs_off: np.ndarray) -> np.ndarray:
    """2D inside-test for both tips of a pair over the x/|y-offset| lattice."""
    u = abs_off[np.newaxis, :]                      # distance from centerline
    depth = u - pair.gap / 2.0                      # penetration into the tip body
    half_width = (depth + pair.truncation) * math.tan(pair.half_angle_rad)
    along = np.abs(xs[:, np.newaxis] - pair.center_x)
    return (depth >= 0.0) & (depth <= pair.base_depth) & (along <= half_width)


def rasterize(
    spec: DeviceSpec,
    resolution: float,
    *,
    sigma_medium: float = 1.76e-3,
    eps_r_medium: float = 78.0,
    conductivity_ratio: float = 1e-6,
) -> MaterialGrid:
    """Sample the device geometry onto a cell-centered 3D grid.

    A cell is INSULATOR iff its center lies inside some tip prism (triangular
    cross-section extruded from z = 0 to insulator_height).  Classification
    uses cell centers only, so the result is deterministic and exactly
    mirror-symmetric in y for the (always symmetric) tip pairs.

    Args:
        spec: device description, SI units.
        resolution: target cell size (m); must resolve every gap with at
            least 6 cells.
        sigma_medium: medium conductivity (S/m).
        eps_r_medium: medium relative permittivity.
        conductivity_ratio: sigma(INSULATOR) / sigma(MEDIUM), in [0, 1).

    Raises:
        ResolutionTooCoarse: some tip gap spans fewer than 6 cells.
        GeometryInvalid: bad material parameters.
    """
    if resolution <= 0:
        raise GeometryInvalid("resolution must be positive")
    if not 0.0 <= conductivity_ratio < 1.0:
        raise GeometryInvalid(f"conductivity_ratio must be in [0, 1), got {conductivity_ratio}")
    if sigma_medium <= 0 or eps_r_medium <= 0:
        raise GeometryInvalid("medium properties must be positive")
    for n, pair in enumerate(spec.tip_pairs):
        if resolution > pair.gap / 6.0:
            raise ResolutionTooCoarse(
                f"tip pair {n}: resolution {resolution} leaves fewer than 6 cells "
                f"across gap {pair.gap}"
            )

    grid = Grid3.from_box(
        (spec.channel_length, spec.channel_width, spec.domain_height), resolution
    )
    xs = grid.axis_centers(0)
    abs_off = np.abs(_mirror_offsets(grid.ny, grid.dy))
    zs = grid.axis_centers(2)

    inside_xy = np.zeros((grid.nx, grid.ny), dtype=bool)
    for pair in spec.tip_pairs:
        inside_xy |= _pair_mask_xy(pair, xs, abs_off)
    below_top = zs <= spec.insulator_height

    labels = np.where(
        inside_xy[:, :, np.newaxis] & below_top[np.newaxis, np.newaxis, :],
        np.uint8(Label.INSULATOR),
        np.uint8(Label.MEDIUM),
    )
    return MaterialGrid(
        grid=grid,
        labels=labels,
        sigma={Label.MEDIUM: sigma_medium, Label.INSULATOR: conductivity_ratio * sigma_medium},
        eps_r={Label.MEDIUM: eps_r_medium, Label.INSULATOR: 3.0},
    )


def probe_material(mg: MaterialGrid, point) -> Label:
    """Label of the cell containing `point`.  Raises OutOfDomain outside the box."""
    i, j, k = mg.grid.cell_index(point)
    return Label(int(mg.labels[i, j, k]))


@dataclass(frozen=True)
class TrapZone:
    """Constriction aperture of one tip pair: the rectangle between the two
    apices, spanning the insulator height.  Particles held near this aperture
    (at the gap center or against either apex) count as trapped there.
    """

    center_x: float
    y_lo: float
    y_hi: float
    z_lo: float
    z_hi: float

    def distance(self, point) -> float:
        x, y, z = point
        dx = x - self.center_x
        dy = max(self.y_lo - y, 0.0, y - self.y_hi)
        dz = max(self.z_lo - z, 0.0, z - self.z_hi)
        return math.sqrt(dx * dx + dy * dy + dz * dz)


def constriction_zones(spec: DeviceSpec) -> tuple[TrapZone, ...]:
    """One TrapZone per tip pair, in tip_pairs order."""
    mid = spec.channel_width / 2.0
    return tuple(
        TrapZone(
            center_x=pair.center_x,
            y_lo=mid - pair.gap / 2.0,
            y_hi=mid + pair.gap / 2.0,
            z_lo=0.0,
            z_hi=spec.insulator_height,
        )
        for pair in spec.tip_pairs
    )


def penetrates_insulator(spec: DeviceSpec, point) -> bool:
    """True when `point` lies strictly inside a tip prism; touching a tip
    surface (including the apex edge) does not count."""
    x, y, z = point
    if not 0.0 <= z < spec.insulator_height:
        return False
    for pair in spec.tip_pairs:
        u = abs(y - spec.channel_width / 2.0)
        g2 = pair.gap / 2.0
        if not g2 < u < g2 + pair.base_depth:
            continue
        half_width = (u - g2 + pair.truncation) * math.tan(pair.half_angle_rad)
        if abs(x - pair.center_x) < half_width:
            return True
    return False


def insulator_contact_normals(spec: DeviceSpec, point, tol: float = 1e-9) -> list:
    """Outward unit normals of tip surfaces within `tol` of `point`.

    At the apex edge both slant-face normals are reported, which lets a
    contact solver pin sliding motion to the edge.
    """
    x, y, z = point
    mid = spec.channel_width / 2.0
    normals = []
    for pair in spec.tip_pairs:
        g2 = pair.gap / 2.0
        t = math.tan(pair.half_angle_rad)
        s_y = 1.0 if y >= mid else -1.0
        u = abs(y - mid)
        a = x - pair.center_x
        if z > spec.insulator_height + tol or u > g2 + pair.base_depth + tol:
            continue
        half_width = (u - g2 + pair.truncation) * t
        norm = math.sqrt(1.0 + t * t)
        on_slant = abs(abs(a) - half_width) / norm <= tol and u >= g2 - tol
        if on_slant:
            if abs(a) <= tol:
                normals.append(np.array([1.0, -t * s_y, 0.0]) / norm)
                normals.append(np.array([-1.0, -t * s_y, 0.0]) / norm)
            else:
                sx = 1.0 if a > 0 else -1.0
                normals.append(np.array([sx, -t * s_y, 0.0]) / norm)
        if (
            abs(z - spec.insulator_height) <= tol
            and u >= g2 - tol
            and abs(a) <= half_width + tol
        ):
            normals.append(np.array([0.0, 0.0, 1.0]))
        if (
            pair.truncation > 0.0
            and abs(u - g2) <= tol
            and abs(a) <= pair.truncation * t + tol
        ):
            normals.append(np.array([0.0, -s_y, 0.0]))
    return normals


def apex_distance(spec: DeviceSpec, point) -> float:
    """Distance from `point` to the nearest tip apex edge (a vertical segment)."""
    if not spec.tip_pairs:
        return math.inf
    x, y, z = point
    mid = spec.channel_width / 2.0
    best = math.inf
    for pair in spec.tip_pairs:
        dz = max(-z, 0.0, z - spec.insulator_height)
        for ya in (mid - pair.gap / 2.0, mid + pair.gap / 2.0):
            d = math.sqrt((x - pair.center_x) ** 2 + (y - ya) ** 2 + dz * dz)
            best = min(best, d)
    return best
