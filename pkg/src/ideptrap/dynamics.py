"""Overdamped particle transport in the DEP force field.

Inertia is negligible for cell-sized particles at the speeds seen here, so
velocity is the instantaneous Stokes balance v = F / (6 pi eta r).  The
integrator is an explicit midpoint scheme whose step is capped so no single
step moves the particle more than a fraction of a grid cell; near the tip
singularity the cap shrinks dt until either trapping triggers or dt
underflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import GeometryInvalid, OutOfDomain, StepUnderflow
from .fields import VectorField3, sample_vector
from .dep import DielectricProps, ParticleModel
from .geometry import (
    DeviceSpec,
    TrapZone,
    insulator_contact_normals,
    penetrates_insulator,
)

_STOKES = 6.0 * math.pi


@dataclass(frozen=True)
class FluidProps:
    """Suspending fluid: viscosity, dielectric data, optional uniform drift."""

    viscosity: float = 1.0e-3
    props: DielectricProps = DielectricProps(eps_r=78.0, sigma=1.76e-3)
    ambient_velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.viscosity <= 0:
            raise GeometryInvalid(f"viscosity must be positive, got {self.viscosity}")


@dataclass(frozen=True)
class ParticleState:
    position: tuple[float, float, float]
    time: float = 0.0


class OutcomeKind(Enum):
    TRAPPED = "TRAPPED"
    EXITED = "EXITED"
    TIMEOUT = "TIMEOUT"


@dataclass(frozen=True)
class TrajectoryResult:
    """Time-ordered samples plus the single terminal outcome.

    tip_pair_index is set only for TRAPPED, exit_face ("x_min" ... "z_max")
    only for EXITED.
    """

    samples: tuple[ParticleState, ...]
    outcome: OutcomeKind
    final_speed: float
    tip_pair_index: int | None = None
    exit_face: str | None = None

    def __post_init__(self):
        times = [s.time for s in self.samples]
        if any(b < a for a, b in zip(times, times[1:])):
            raise GeometryInvalid("trajectory samples out of time order")
        if (self.outcome is OutcomeKind.TRAPPED) != (self.tip_pair_index is not None):
            raise GeometryInvalid("tip_pair_index must be set exactly for TRAPPED")
        if (self.outcome is OutcomeKind.EXITED) != (self.exit_face is not None):
            raise GeometryInvalid("exit_face must be set exactly for EXITED")

    @property
    def final_position(self) -> tuple[float, float, float]:
        return self.samples[-1].position

    def path_length(self) -> float:
        pts = np.array([s.position for s in self.samples])
        if len(pts) < 2:
            return 0.0
        return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


@dataclass(frozen=True)
class StepControl:
    """Adaptive step limits.  cell_fraction caps the per-step displacement
    in units of the smallest grid spacing."""

    dt_max: float = 1e-2
    dt_min: float = 1e-9
    cell_fraction: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.dt_min <= self.dt_max:
            raise GeometryInvalid("need 0 < dt_min <= dt_max")
        if not 0.0 < self.cell_fraction <= 1.0:
            raise GeometryInvalid("cell_fraction must be in (0, 1]")


@dataclass(frozen=True)
class StopRules:
    """Termination tests, checked in the order trapped, exited, timeout.

    Trapping requires both proximity (within capture_radius of a constriction
    aperture) and near-zero speed, so a fast fly-through does not count.
    capture_radius None means "use the particle radius".
    """

    t_max: float
    zones: tuple[TrapZone, ...] = ()
    capture_radius: float | None = None
    speed_floor: float = 1e-7

    def __post_init__(self):
        if self.t_max <= 0:
            raise GeometryInvalid("t_max must be positive")
        if self.capture_radius is not None and self.capture_radius <= 0:
            raise GeometryInvalid("capture_radius must be positive")
        if self.speed_floor < 0:
            raise GeometryInvalid("speed_floor must be >= 0")
        object.__setattr__(self, "zones", tuple(self.zones))


def velocity_at(
    force_field: VectorField3, model: ParticleModel, fluid: FluidProps, point
) -> np.ndarray:
    """Stokes terminal velocity at a point, shape (3,) in m/s."""
    drag = _STOKES * fluid.viscosity * model.radius
    v = sample_vector(force_field, point) / drag
    return v + np.asarray(fluid.ambient_velocity)


def _nearest_zone(zones: tuple[TrapZone, ...], point) -> tuple[int, float]:
    best, best_d = -1, math.inf
    for idx, zone in enumerate(zones):
        d = zone.distance(point)
        if d < best_d:
            best, best_d = idx, d
    return best, best_d


# The glass floor and molded side walls are solid: a particle pushed into
# them slides along them.  The channel ends (electrode reservoirs) and the
# open top are the only faces a particle can leave through.
SOLID_FACES = frozenset({"y_min", "y_max", "z_min"})


def _face_name(axis: int, low: bool) -> str:
    return f"{'xyz'[axis]}_{'min' if low else 'max'}"


def _slide(v: np.ndarray, x: np.ndarray, bbox, solid: frozenset) -> np.ndarray:
    """Zero velocity components that push the particle into a solid wall it
    already touches.  Contact is exact: clamping sets coordinates to the
    wall plane bit for bit."""
    out = v.copy()
    for axis, (lo, hi) in enumerate(bbox):
        if x[axis] == lo and out[axis] < 0 and _face_name(axis, True) in solid:
            out[axis] = 0.0
        if x[axis] == hi and out[axis] > 0 and _face_name(axis, False) in solid:
            out[axis] = 0.0
    return out


def _clamp_solid(q: np.ndarray, bbox, solid: frozenset) -> np.ndarray:
    out = q.copy()
    for axis, (lo, hi) in enumerate(bbox):
        if out[axis] < lo and _face_name(axis, True) in solid:
            out[axis] = lo
        if out[axis] > hi and _face_name(axis, False) in solid:
            out[axis] = hi
    return out


_CONTACT_TOL = 1e-9  # active-contact detection distance, m


def _project_contacts(spec: DeviceSpec, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Remove velocity components that push into a touched tip surface.

    Alternating half-space projections; at the apex edge both slant planes
    are active, which drives in-plane motion to zero in a few passes.
    """
    normals = insulator_contact_normals(spec, x, _CONTACT_TOL)
    if not normals:
        return v
    out = v.copy()
    for _ in range(16):
        moved_in = False
        for n in normals:
            vn = float(out @ n)
            if vn < 0.0:
                out -= vn * n
                moved_in = True
        if not moved_in:
            return out
    # Wedge corner: no feasible in-plane direction left, pin the contact.
    out[0] = 0.0
    out[1] = 0.0
    return out


def _surface_stop(spec: DeviceSpec, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Last point on segment p->q before it enters a tip prism; p is outside."""
    lo, hi = 0.0, 1.0
    for _ in range(80):
        s = 0.5 * (lo + hi)
        if penetrates_insulator(spec, p + s * (q - p)):
            hi = s
        else:
            lo = s
    return p + lo * (q - p)


def _exit_crossing(grid_bbox, p: np.ndarray, q: np.ndarray, solid: frozenset):
    """First intersection of segment p->q with an open domain face.

    Returns (fraction, face, point) or None when q stays inside (solid-wall
    contact does not count as an exit).
    """
    s_best, face = 2.0, None
    for axis, (lo, hi) in enumerate(grid_bbox):
        d = q[axis] - p[axis]
        if q[axis] < lo and d < 0 and _face_name(axis, True) not in solid:
            s = (lo - p[axis]) / d
            if s < s_best:
                s_best, face = s, _face_name(axis, True)
        elif q[axis] > hi and d > 0 and _face_name(axis, False) not in solid:
            s = (hi - p[axis]) / d
            if s < s_best:
                s_best, face = s, _face_name(axis, False)
    if face is None:
        return None
    crossing = p + s_best * (q - p)
    for axis, (lo, hi) in enumerate(grid_bbox):
        crossing[axis] = min(max(crossing[axis], lo), hi)
    return s_best, face, crossing


def integrate(
    start: ParticleState,
    force_field: VectorField3,
    model: ParticleModel,
    fluid: FluidProps,
    step_control: StepControl | None = None,
    stop_rules: StopRules | None = None,
    solid_faces: frozenset = SOLID_FACES,
    device: DeviceSpec | None = None,
) -> TrajectoryResult:
    """Track one particle until it traps, leaves through an open face, or
    times out.  Solid faces (floor and side walls by default) act as sliding
    contacts, not exits.  When `device` is given its tip prisms are solid
    obstacles too: the particle stops at their surface and slides along it,
    which is how it comes to rest against an apex.

    Raises StepUnderflow when the displacement cap pushes dt below dt_min,
    which signals a force singularity the cap cannot resolve.
    """
    ctl = step_control or StepControl()
    rules = stop_rules or StopRules(t_max=60.0)
    grid = force_field.grid
    if not grid.contains(start.position):
        raise OutOfDomain(f"release point {start.position} outside domain")
    if device is not None and penetrates_insulator(device, start.position):
        raise OutOfDomain(f"release point {start.position} inside an insulator tip")

    h_cap = ctl.cell_fraction * min(grid.spacing)
    capture = rules.capture_radius if rules.capture_radius is not None else model.radius
    bbox = grid.bbox

    x = np.asarray(start.position, dtype=np.float64)
    t = float(start.time)
    samples = [ParticleState(tuple(x), t)]

    def finish(outcome, speed, tip=None, face=None):
        return TrajectoryResult(
            samples=tuple(samples),
            outcome=outcome,
            final_speed=speed,
            tip_pair_index=tip,
            exit_face=face,
        )

    def constrained_velocity(point: np.ndarray) -> np.ndarray:
        v = _slide(velocity_at(force_field, model, fluid, point), point, bbox, solid_faces)
        if device is not None:
            v = _project_contacts(device, point, v)
        return v

    def half_step_velocity(point: np.ndarray, v: np.ndarray, dt: float):
        mid = _clamp_solid(point + 0.5 * dt * v, bbox, solid_faces)
        if device is not None and penetrates_insulator(device, mid):
            mid = _surface_stop(device, point, mid)
        if _exit_crossing(bbox, point, mid, solid_faces) is None and grid.contains(mid):
            return constrained_velocity(mid)
        return v

    dt_hint = ctl.dt_max
    while True:
        v1 = constrained_velocity(x)
        speed = float(np.linalg.norm(v1))

        if rules.zones and speed < rules.speed_floor:
            idx, dist = _nearest_zone(rules.zones, x)
            if dist <= capture:
                return finish(OutcomeKind.TRAPPED, speed, tip=idx)
        # The timeout clamp may produce dt < dt_min; only the step-control
        # limits signal a singularity, so underflow is checked before it.
        if rules.t_max - t < ctl.dt_min:
            return finish(OutcomeKind.TIMEOUT, speed)

        dt = min(ctl.dt_max, dt_hint)
        if speed > 0.0 and speed * dt > h_cap:
            dt = h_cap / speed
        # Shrink dt until the velocity is consistent across the half step;
        # without this the displacement cap alone leaves a limit cycle
        # around the stagnation point where the particle should settle.
        while True:
            if dt < ctl.dt_min:
                raise StepUnderflow(dt, tuple(x))
            v2 = half_step_velocity(x, v1, dt)
            if speed == 0.0 or float(np.linalg.norm(v2 - v1)) <= 0.8 * speed:
                break
            dt *= 0.5
        dt_hint = 2.0 * dt
        dt = min(dt, rules.t_max - t)

        target = _clamp_solid(x + dt * v2, bbox, solid_faces)
        hit = _exit_crossing(bbox, x, target, solid_faces)
        if hit is not None:
            frac, face, crossing = hit
            t += frac * dt
            x = crossing
            samples.append(ParticleState(tuple(x), t))
            return finish(OutcomeKind.EXITED, float(np.linalg.norm(v2)), face=face)
        if device is not None and penetrates_insulator(device, target):
            target = _surface_stop(device, x, target)

        x = target
        t += dt
        samples.append(ParticleState(tuple(x), t))


@dataclass(frozen=True)
class EnsembleResult:
    """Trajectories for a deterministic lattice of release points."""

    release_points: tuple[tuple[float, float, float], ...]
    trajectories: tuple[TrajectoryResult, ...]

    @property
    def capture_fraction(self) -> float:
        if not self.trajectories:
            return 0.0
        hits = sum(1 for tr in self.trajectories if tr.outcome is OutcomeKind.TRAPPED)
        return hits / len(self.trajectories)


def _lattice(lo: float, hi: float, n: int) -> np.ndarray:
    if n == 1:
        return np.array([(lo + hi) / 2.0])
    return np.linspace(lo, hi, n)


def release_grid(
    seed_region,
    counts: tuple[int, int, int],
    force_field: VectorField3,
    model: ParticleModel,
    fluid: FluidProps,
    step_control: StepControl | None = None,
    stop_rules: StopRules | None = None,
    solid_faces: frozenset = SOLID_FACES,
    device: DeviceSpec | None = None,
) -> EnsembleResult:
    """Integrate an ensemble from a regular lattice over an axis-aligned box.

    seed_region is ((x0, x1), (y0, y1), (z0, z1)); counts gives the lattice
    points per axis.  Release order is x-major, z-fastest, and is part of the
    deterministic contract.
    """
    if any(n < 1 for n in counts):
        raise GeometryInvalid("lattice counts must be >= 1")
    grid = force_field.grid
    for (lo, hi), (glo, ghi) in zip(seed_region, grid.bbox):
        if lo > hi or lo < glo or hi > ghi:
            raise OutOfDomain(f"seed region {seed_region} outside domain {grid.bbox}")
    axes = [_lattice(lo, hi, n) for (lo, hi), n in zip(seed_region, counts)]
    points = [
        (float(px), float(py), float(pz))
        for px in axes[0]
        for py in axes[1]
        for pz in axes[2]
    ]
    runs = tuple(
        integrate(
            ParticleState(p), force_field, model, fluid, step_control, stop_rules,
            solid_faces, device,
        )
        for p in points
    )
    return EnsembleResult(release_points=tuple(points), trajectories=runs)
