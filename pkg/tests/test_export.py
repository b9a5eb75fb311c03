"""CSV and VTK writers: layout, precision, and bit-exact round-trips."""

import numpy as np
import pytest

from ideptrap import (
    DielectricProps,
    EnsembleResult,
    GapSweepReport,
    Grid3,
    HeightDecayReport,
    IoError,
    OutcomeKind,
    ParticleState,
    ScalarField3,
    TrajectoryResult,
    VectorField3,
    cm_spectrum,
    export_ensemble,
    export_report,
    export_scalar_field,
    export_spectrum,
    export_trajectory,
    export_vector_field,
    import_scalar_field,
    import_vector_field,
    uniformity,
)


def small_grid():
    return Grid3.from_box((20e-6, 20e-6, 20e-6), 10e-6)


def test_scalar_csv_layout_constant_field(tmp_path):
    g = small_grid()
    path = tmp_path / "f.csv"
    export_scalar_field(ScalarField3(g, np.full(g.shape, 1.5)), path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x_m,y_m,z_m,value"
    assert len(lines) == 1 + 8
    assert all(line.endswith(",1.5") for line in lines[1:])


def test_scalar_csv_rows_are_z_major_x_fastest(tmp_path):
    g = small_grid()
    values = np.zeros(g.shape)
    for i in range(g.nx):
        for j in range(g.ny):
            for k in range(g.nz):
                values[i, j, k] = i + 10 * j + 100 * k
    path = tmp_path / "f.csv"
    export_scalar_field(ScalarField3(g, values), path)
    rows = [line.split(",") for line in path.read_text().strip().splitlines()[1:]]
    got = [float(r[3]) for r in rows]
    assert got == [0, 1, 10, 11, 100, 101, 110, 111]
    # Coordinates advance x first, then y, then z.
    assert float(rows[0][0]) < float(rows[1][0])
    assert rows[0][1] == rows[1][1]
    assert float(rows[1][1]) < float(rows[2][1])


def test_field_csv_roundtrip_bit_exact(tmp_path):
    g = Grid3.from_box((60e-6, 40e-6, 30e-6), 10e-6)
    rng = np.random.default_rng(29)
    scalar = ScalarField3(g, rng.normal(size=g.shape) * 10.0 ** rng.integers(-9, 9))
    spath = tmp_path / "s.csv"
    export_scalar_field(scalar, spath)
    back = import_scalar_field(spath)
    assert back.grid.shape == g.shape
    assert np.array_equal(back.values, scalar.values)

    vector = VectorField3(g, rng.normal(size=(3,) + g.shape))
    vpath = tmp_path / "v.csv"
    export_vector_field(vector, vpath)
    vback = import_vector_field(vpath)
    assert np.array_equal(vback.values, vector.values)


def test_vtk_structured_points_layout(tmp_path):
    g = Grid3.from_box((40e-6, 30e-6, 20e-6), 10e-6)
    path = tmp_path / "f.vtk"
    export_scalar_field(ScalarField3(g, np.ones(g.shape), "E_squared"), path, "vtk_structured")
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# vtk DataFile")
    assert "ASCII" in lines[2]
    assert lines[3] == "DATASET STRUCTURED_POINTS"
    assert lines[4] == f"DIMENSIONS {g.nx} {g.ny} {g.nz}"
    origin = [float(v) for v in lines[5].split()[1:]]
    assert lines[5].startswith("ORIGIN ") and origin == [5e-6, 5e-6, 5e-6]
    spacing = [float(v) for v in lines[6].split()[1:]]
    assert lines[6].startswith("SPACING ") and spacing == [1e-5, 1e-5, 1e-5]
    assert lines[7] == f"POINT_DATA {g.n_cells}"
    assert lines[8] == "SCALARS E_squared double 1"
    assert lines[9] == "LOOKUP_TABLE default"
    assert len(lines) == 10 + g.n_cells


def test_vtk_vector_layout(tmp_path):
    g = small_grid()
    path = tmp_path / "v.vtk"
    export_vector_field(VectorField3(g, np.ones((3,) + g.shape), "F"), path, "vtk_structured")
    lines = path.read_text().splitlines()
    assert "VECTORS F double" in lines
    data = lines[lines.index("VECTORS F double") + 1 :]
    assert len(data) == g.n_cells
    assert all(len(row.split()) == 3 for row in data)


def test_unknown_format_rejected(tmp_path):
    g = small_grid()
    with pytest.raises(IoError):
        export_scalar_field(ScalarField3(g, np.ones(g.shape)), tmp_path / "f.bin", "hdf5")


def test_full_precision_survives_csv(tmp_path):
    g = small_grid()
    value = 0.1234567890123456789  # needs all 17 significant digits
    path = tmp_path / "f.csv"
    export_scalar_field(ScalarField3(g, np.full(g.shape, value)), path)
    assert import_scalar_field(path).values[0, 0, 0] == value


def test_spectrum_csv(tmp_path):
    medium = DielectricProps(eps_r=78.0, sigma=1.76e-3)
    particle = DielectricProps(eps_r=2.5, sigma=0.01)
    spectrum = cm_spectrum(particle, medium, 1e3, 1e6, points_per_decade=2)
    path = tmp_path / "k.csv"
    export_spectrum(spectrum, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "frequency_hz,re_k,im_k"
    assert len(lines) == 1 + len(spectrum.frequencies)
    first = [float(v) for v in lines[1].split(",")]
    assert first[0] == 1e3
    assert first[1] == spectrum.re_k[0]


def test_trajectory_csv_tags_only_the_last_row(tmp_path):
    samples = (
        ParticleState((0.0, 0.0, 0.0), 0.0),
        ParticleState((1e-6, 0.0, 0.0), 0.5),
        ParticleState((2e-6, 0.0, 0.0), 1.0),
    )
    result = TrajectoryResult(samples, OutcomeKind.EXITED, 0.25, exit_face="x_max")
    path = tmp_path / "t.csv"
    export_trajectory(result, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t_s,x_m,y_m,z_m,speed_m_s,outcome"
    assert len(lines) == 4
    assert lines[1].endswith(",,")
    assert lines[-1].endswith(",0.25,EXITED(x_max)")


def test_trajectory_csv_trapped_tag(tmp_path):
    samples = (ParticleState((0.0, 0.0, 0.0), 0.0),)
    result = TrajectoryResult(samples, OutcomeKind.TRAPPED, 0.0, tip_pair_index=0)
    path = tmp_path / "t.csv"
    export_trajectory(result, path)
    assert path.read_text().strip().splitlines()[-1].endswith(",TRAPPED(0)")


def test_ensemble_csv(tmp_path):
    t1 = TrajectoryResult(
        (ParticleState((0.0, 0.0, 0.0), 0.0), ParticleState((0.0, 0.0, 0.0), 2.0)),
        OutcomeKind.TRAPPED,
        0.0,
        tip_pair_index=0,
    )
    t2 = TrajectoryResult(
        (ParticleState((1e-6, 0.0, 0.0), 0.0),), OutcomeKind.TIMEOUT, 1e-9
    )
    ens = EnsembleResult(
        release_points=((0.0, 0.0, 0.0), (1e-6, 0.0, 0.0)), trajectories=(t1, t2)
    )
    assert ens.capture_fraction == 0.5
    path = tmp_path / "e.csv"
    export_ensemble(ens, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "release_x_m,release_y_m,release_z_m,outcome,time_to_trap_s"
    assert lines[1].endswith(",TRAPPED(0),2")
    assert lines[2].endswith(",TIMEOUT,")


def test_report_csvs(tmp_path):
    decay = HeightDecayReport(
        heights=(0.0, 30e-6),
        peak_grad_e2=(2.0e13, 1.6e13),
        relative_reduction=(0.0, 0.2),
    )
    p1 = tmp_path / "decay.csv"
    export_report(decay, p1, "chip gap=60um")
    lines = p1.read_text().strip().splitlines()
    assert lines[0] == "# chip gap=60um"
    assert lines[1] == "height_m,peak_grad_e2,relative_reduction"
    assert len(lines) == 4

    sweep = GapSweepReport(gaps=(40e-6, 60e-6), peak_grad_e2=(4e13, 2e13), height=0.0)
    p2 = tmp_path / "sweep.csv"
    export_report(sweep, p2, "sweep")
    assert "gap_m,peak_grad_e2_at_0_m" in p2.read_text().splitlines()[1]

    g = Grid3.from_box((100e-6, 80e-6, 60e-6), 10e-6)
    flat = uniformity(ScalarField3(g, np.full(g.shape, 2.0)), 30e-6)
    p3 = tmp_path / "cv.csv"
    export_report([flat, flat], p3, "cv")
    assert len(p3.read_text().strip().splitlines()) == 4


def test_export_into_missing_directory_raises(tmp_path):
    g = small_grid()
    with pytest.raises(IoError):
        export_scalar_field(
            ScalarField3(g, np.ones(g.shape)), tmp_path / "absent" / "f.csv"
        )
