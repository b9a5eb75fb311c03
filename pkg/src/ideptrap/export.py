"""Plain-text serialization of fields, spectra, reports, and trajectories.

Everything here is deterministic: fixed column orders, fixed row order
(z-major, y middle, x fastest), and 17-significant-digit floats so values
survive a write/read cycle bit for bit.  Identical inputs produce identical
bytes, which the test suite checks by hashing.
"""

from __future__ import annotations

import io
import os

import numpy as np

from .dep import CMSpectrum
from .dynamics import EnsembleResult, TrajectoryResult
from .errors import GeometryInvalid, IoError
from .fields import ScalarField3, VectorField3
from .geometry import Grid3

_FMT = "%.17g"


def _f(v: float) -> str:
    return _FMT % v


def _write_text(path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _coords_block(grid: Grid3) -> np.ndarray:
    """Cell-center coordinates as columns, x varying fastest (z-major order)."""
    xs = grid.axis_centers(0)
    ys = grid.axis_centers(1)
    zs = grid.axis_centers(2)
    Z, Y, X = np.meshgrid(zs, ys, xs, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])


def _zmajor(values: np.ndarray) -> np.ndarray:
    """Flatten an (nx, ny, nz) array to z-major, x-fastest order."""
    return values.transpose(2, 1, 0).ravel()


def export_scalar_field(field: ScalarField3, path, format: str = "csv") -> None:
    """Write a scalar field as CSV (x_m,y_m,z_m,value) or legacy VTK."""
    if format == "csv":
        data = np.column_stack([_coords_block(field.grid), _zmajor(field.values)])
        _write_text(path, _table("x_m,y_m,z_m,value", data))
    elif format == "vtk_structured":
        _write_text(path, _vtk(field.grid, {field.quantity or "scalar": field.values}))
    else:
        raise IoError(f"unknown export format {format!r}")


def export_vector_field(field: VectorField3, path, format: str = "csv") -> None:
    """Write a vector field as CSV (three value columns) or legacy VTK."""
    if format == "csv":
        comps = [_zmajor(field.values[a]) for a in range(3)]
        data = np.column_stack([_coords_block(field.grid)] + comps)
        _write_text(path, _table("x_m,y_m,z_m,value_x,value_y,value_z", data))
    elif format == "vtk_structured":
        _write_text(
            path, _vtk(field.grid, {}, vectors={field.quantity or "vector": field.values})
        )
    else:
        raise IoError(f"unknown export format {format!r}")


def _table(header: str, data: np.ndarray, comment: str = "") -> str:
    buf = io.StringIO()
    if comment:
        buf.write("# " + comment + "\n")
    buf.write(header + "\n")
    np.savetxt(buf, data, fmt=_FMT, delimiter=",")
    return buf.getvalue()


def _vtk(grid: Grid3, scalars: dict, vectors: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write("# vtk DataFile Version 3.0\n")
    buf.write("structured cell-center field\n")
    buf.write("ASCII\n")
    buf.write("DATASET STRUCTURED_POINTS\n")
    buf.write(f"DIMENSIONS {grid.nx} {grid.ny} {grid.nz}\n")
    ox, oy, oz = (o + 0.5 * d for o, d in zip(grid.origin, grid.spacing))
    buf.write(f"ORIGIN {_f(ox)} {_f(oy)} {_f(oz)}\n")
    buf.write(f"SPACING {_f(grid.dx)} {_f(grid.dy)} {_f(grid.dz)}\n")
    buf.write(f"POINT_DATA {grid.n_cells}\n")
    for name, values in scalars.items():
        buf.write(f"SCALARS {name.replace(' ', '_')} double 1\n")
        buf.write("LOOKUP_TABLE default\n")
        for v in _zmajor(values):
            buf.write(_f(v) + "\n")
    for name, values in (vectors or {}).items():
        buf.write(f"VECTORS {name.replace(' ', '_')} double\n")
        rows = np.column_stack([_zmajor(values[a]) for a in range(3)])
        for row in rows:
            buf.write(" ".join(_f(v) for v in row) + "\n")
    return buf.getvalue()


def _grid_from_coords(cols: np.ndarray) -> Grid3:
    axes = []
    for a in range(3):
        vals = np.unique(cols[:, a])
        axes.append(vals)
    spacing = []
    origin = []
    for vals in axes:
        d = float(vals[1] - vals[0]) if len(vals) > 1 else 1.0
        spacing.append(d)
        origin.append(float(vals[0]) - d / 2.0)
    return Grid3(
        len(axes[0]), len(axes[1]), len(axes[2]), *spacing, origin=tuple(origin)
    )


def _load_csv(path, n_value_cols: int) -> tuple[Grid3, np.ndarray]:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise IoError(f"malformed field CSV {path}: {exc}") from exc
    if data.shape[1] != 3 + n_value_cols:
        raise IoError(
            f"field CSV {path} has {data.shape[1]} columns, expected {3 + n_value_cols}"
        )
    grid = _grid_from_coords(data[:, :3])
    if data.shape[0] != grid.n_cells:
        raise IoError(f"field CSV {path} rows do not fill the grid")
    return grid, data[:, 3:]


def _unflatten(grid: Grid3, col: np.ndarray) -> np.ndarray:
    return col.reshape(grid.nz, grid.ny, grid.nx).transpose(2, 1, 0)


def import_scalar_field(path) -> ScalarField3:
    """Read back a CSV written by export_scalar_field; values are bit-exact."""
    grid, vals = _load_csv(path, 1)
    return ScalarField3(grid, _unflatten(grid, vals[:, 0]))


def import_vector_field(path) -> VectorField3:
    """Read back a CSV written by export_vector_field; values are bit-exact."""
    grid, vals = _load_csv(path, 3)
    comps = np.stack([_unflatten(grid, vals[:, a]) for a in range(3)])
    return VectorField3(grid, comps)


def export_spectrum(spectrum: CMSpectrum, path) -> None:
    """CM spectrum CSV: frequency_hz, re_k, im_k."""
    data = np.column_stack([spectrum.frequencies, spectrum.re_k, spectrum.im_k])
    _write_text(path, _table("frequency_hz,re_k,im_k", data))


def export_trajectory(result: TrajectoryResult, path) -> None:
    """Trajectory CSV: t_s,x_m,y_m,z_m,speed_m_s,outcome (outcome on the last row)."""
    lines = ["t_s,x_m,y_m,z_m,speed_m_s,outcome"]
    n = len(result.samples)
    for row, s in enumerate(result.samples):
        x, y, z = s.position
        tag = ""
        if row == n - 1:
            tag = result.outcome.value
            if result.exit_face is not None:
                tag += f"({result.exit_face})"
            if result.tip_pair_index is not None:
                tag += f"({result.tip_pair_index})"
        speed = _f(result.final_speed) if row == n - 1 else ""
        lines.append(f"{_f(s.time)},{_f(x)},{_f(y)},{_f(z)},{speed},{tag}")
    _write_text(path, "\n".join(lines) + "\n")


def export_ensemble(ensemble: EnsembleResult, path) -> None:
    """Ensemble summary CSV: one row per release point with outcome and time to trap."""
    lines = ["release_x_m,release_y_m,release_z_m,outcome,time_to_trap_s"]
    for point, tr in zip(ensemble.release_points, ensemble.trajectories):
        t_trap = _f(tr.samples[-1].time) if tr.tip_pair_index is not None else ""
        tag = tr.outcome.value
        if tr.exit_face is not None:
            tag += f"({tr.exit_face})"
        if tr.tip_pair_index is not None:
            tag += f"({tr.tip_pair_index})"
        lines.append(",".join([_f(point[0]), _f(point[1]), _f(point[2]), tag, t_trap]))
    _write_text(path, "\n".join(lines) + "\n")


def export_report(report, path, provenance: str) -> None:
    """Write a metrics report as CSV with one provenance comment line.

    The provenance string must be deterministic (geometry and solver
    settings, never timestamps) so identical runs produce identical bytes.
    """
    from .metrics import GapSweepReport, HeightDecayReport, UniformityReport

    if isinstance(report, HeightDecayReport):
        data = np.column_stack(
            [report.heights, report.peak_grad_e2, report.relative_reduction]
        )
        text = _table("height_m,peak_grad_e2,relative_reduction", data, provenance)
    elif isinstance(report, GapSweepReport):
        data = np.column_stack([report.gaps, report.peak_grad_e2])
        text = _table(
            f"gap_m,peak_grad_e2_at_{_f(report.height)}_m", data, provenance
        )
    elif isinstance(report, UniformityReport):
        data = np.array([[report.height, report.coefficient_of_variation]])
        text = _table("height_m,coefficient_of_variation", data, provenance)
    elif isinstance(report, (list, tuple)) and all(
        isinstance(r, UniformityReport) for r in report
    ):
        data = np.array([[r.height, r.coefficient_of_variation] for r in report])
        text = _table("height_m,coefficient_of_variation", data, provenance)
    else:
        raise GeometryInvalid(f"unknown report type {type(report).__name__}")
    _write_text(path, text)


def ensure_dir(path) -> None:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create directory {path}: {exc}") from exc
