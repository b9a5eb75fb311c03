"""Device geometry, grids, rasterization, and tip-contact queries."""

import numpy as np
import pytest

from ideptrap import (
    DeviceSpec,
    ElectrodeMode,
    GeometryInvalid,
    Grid3,
    Label,
    MaterialGrid,
    OutOfDomain,
    ResolutionTooCoarse,
    TipPairSpec,
    TrapZone,
    apex_distance,
    constriction_zones,
    insulator_contact_normals,
    penetrates_insulator,
    probe_material,
    rasterize,
)
from conftest import make_chip


def test_grid_from_box_exact_spacing():
    g = Grid3.from_box((100e-6, 40e-6, 30e-6), 2e-6)
    assert g.shape == (50, 20, 15)
    assert g.spacing == (100e-6 / 50, 40e-6 / 20, 30e-6 / 15)


def test_grid_from_box_minimum_two_cells():
    g = Grid3.from_box((10e-6, 10e-6, 10e-6), 20e-6)
    assert g.shape == (2, 2, 2)


def test_grid_rejects_degenerate_axes():
    with pytest.raises(GeometryInvalid):
        Grid3(1, 4, 4, 1e-6, 1e-6, 1e-6)
    with pytest.raises(GeometryInvalid):
        Grid3(4, 4, 4, 0.0, 1e-6, 1e-6)
    with pytest.raises(GeometryInvalid):
        Grid3.from_box((1e-5, 1e-5, 1e-5), 0.0)


def test_cell_index_center_roundtrip():
    g = Grid3.from_box((100e-6, 40e-6, 30e-6), 2e-6)
    rng = np.random.default_rng(7)
    for _ in range(50):
        ijk = tuple(int(rng.integers(0, n)) for n in g.shape)
        assert g.cell_index(g.cell_center(*ijk)) == ijk


def test_cell_index_upper_faces_inclusive():
    g = Grid3.from_box((100e-6, 40e-6, 30e-6), 2e-6)
    top = tuple(hi for _, hi in g.bbox)
    assert g.cell_index(top) == (g.nx - 1, g.ny - 1, g.nz - 1)
    with pytest.raises(OutOfDomain):
        g.cell_index((top[0] * (1 + 1e-9), top[1], top[2]))


def test_device_spec_validation():
    mode = ElectrodeMode(applied_field=3e4)
    pair = TipPairSpec(center_x=300e-6, gap=60e-6, tip_angle=30.0, base_depth=70e-6)
    with pytest.raises(GeometryInvalid):  # gap as wide as the channel
        DeviceSpec(600e-6, 60e-6, 300e-6, mode, tip_pairs=(pair,))
    with pytest.raises(GeometryInvalid):  # tip base pokes through the wall
        DeviceSpec(600e-6, 150e-6, 300e-6, mode, tip_pairs=(pair,))
    with pytest.raises(GeometryInvalid):  # constriction outside the channel
        DeviceSpec(200e-6, 200e-6, 300e-6, mode, tip_pairs=(pair,))
    with pytest.raises(GeometryInvalid):  # insulator taller than the domain
        DeviceSpec(600e-6, 200e-6, 50e-6, mode, tip_pairs=(pair,))


def test_tip_pair_validation():
    with pytest.raises(GeometryInvalid):
        TipPairSpec(center_x=1e-4, gap=-5e-6, tip_angle=30.0, base_depth=1e-5)
    with pytest.raises(GeometryInvalid):
        TipPairSpec(center_x=1e-4, gap=5e-6, tip_angle=180.0, base_depth=1e-5)
    with pytest.raises(GeometryInvalid):
        TipPairSpec(center_x=1e-4, gap=5e-6, tip_angle=30.0, base_depth=1e-5, truncation=-1e-9)


def test_electrode_mode_exactly_one():
    with pytest.raises(GeometryInvalid):
        ElectrodeMode()
    with pytest.raises(GeometryInvalid):
        ElectrodeMode(applied_field=3e4, voltage=10.0)
    assert ElectrodeMode(applied_field=3e4).total_voltage(600e-6) == 3e4 * 600e-6
    assert ElectrodeMode(voltage=12.0).total_voltage(600e-6) == 12.0


def test_rasterize_resolution_gate():
    spec = make_chip(gap=60e-6, base_depth=70e-6)
    rasterize(spec, 10e-6)  # exactly gap / 6 passes
    with pytest.raises(ResolutionTooCoarse):
        rasterize(spec, 10.5e-6)


@pytest.mark.parametrize("resolution", [2.5e-6, 8e-6])  # even and odd cell counts across y
def test_rasterize_mirror_symmetric_labels(resolution):
    mg = rasterize(make_chip(gap=60e-6, base_depth=70e-6), resolution)
    assert np.array_equal(mg.labels, mg.labels[:, ::-1, :])


def test_rasterize_insulator_confined_to_tips():
    spec = make_chip(gap=60e-6, base_depth=70e-6)
    mg = rasterize(spec, 4e-6)
    assert 0.0 < mg.insulator_fraction() < 0.5
    zs = mg.grid.axis_centers(2)
    above = zs > spec.insulator_height
    assert np.all(mg.labels[:, :, above] == Label.MEDIUM)
    # No insulator far from the constriction plane.
    xs = mg.grid.axis_centers(0)
    far = np.abs(xs - 300e-6) > 100e-6
    assert np.all(mg.labels[far, :, :] == Label.MEDIUM)


def test_rasterize_no_tips_all_medium():
    spec = DeviceSpec(200e-6, 100e-6, 100e-6, ElectrodeMode(voltage=1.0))
    mg = rasterize(spec, 10e-6)
    assert mg.insulator_fraction() == 0.0


def test_probe_material():
    spec = make_chip(gap=60e-6, base_depth=70e-6)
    mg = rasterize(spec, 2e-6)
    assert probe_material(mg, (300e-6, 100e-6, 30e-6)) == Label.MEDIUM  # gap center
    assert probe_material(mg, (300e-6, 150e-6, 30e-6)) == Label.INSULATOR  # inside a tip
    assert probe_material(mg, (300e-6, 150e-6, 100e-6)) == Label.MEDIUM  # above the tips
    with pytest.raises(OutOfDomain):
        probe_material(mg, (-1e-6, 100e-6, 30e-6))


def test_material_grid_validation():
    g = Grid3.from_box((20e-6, 20e-6, 20e-6), 10e-6)
    labels = np.zeros(g.shape, dtype=np.uint8)
    sigma = {Label.MEDIUM: 1e-3, Label.INSULATOR: 0.0}
    eps = {Label.MEDIUM: 78.0, Label.INSULATOR: 3.0}
    mg = MaterialGrid(g, labels, sigma, eps)
    with pytest.raises(ValueError):
        mg.labels[0, 0, 0] = 1  # frozen after construction
    with pytest.raises(GeometryInvalid):
        MaterialGrid(g, np.zeros((2, 2, 3), dtype=np.uint8), sigma, eps)
    with pytest.raises(GeometryInvalid):
        MaterialGrid(g, labels, {Label.MEDIUM: 1e-3}, eps)
    with pytest.raises(GeometryInvalid):  # insulator more conductive than medium
        MaterialGrid(g, labels, {Label.MEDIUM: 1e-3, Label.INSULATOR: 2e-3}, eps)


def test_trap_zone_distance():
    zone = TrapZone(center_x=300e-6, y_lo=50e-6, y_hi=150e-6, z_lo=0.0, z_hi=60e-6)
    assert zone.distance((300e-6, 100e-6, 30e-6)) == 0.0
    assert zone.distance((290e-6, 100e-6, 30e-6)) == pytest.approx(10e-6)
    d = zone.distance((300e-6, 40e-6, 70e-6))
    assert d == pytest.approx(np.hypot(10e-6, 10e-6))


def test_constriction_zones_span_gap_and_height():
    spec = make_chip(gap=100e-6, base_depth=50e-6)
    zones = constriction_zones(spec)
    assert len(zones) == 1
    z = zones[0]
    assert (z.y_lo, z.y_hi) == pytest.approx((50e-6, 150e-6), rel=1e-12)
    assert (z.z_lo, z.z_hi) == (0.0, spec.insulator_height)


def test_penetrates_insulator_strict_interior():
    spec = make_chip(gap=60e-6, base_depth=70e-6)
    assert not penetrates_insulator(spec, (300e-6, 130e-6, 30e-6))  # apex edge touches
    assert penetrates_insulator(spec, (300e-6, 131e-6, 30e-6))
    assert not penetrates_insulator(spec, (300e-6, 131e-6, 60e-6))  # at the top face
    assert not penetrates_insulator(spec, (300e-6, 100e-6, 30e-6))  # open gap


def test_penetrates_insulator_truncated_tip_is_wider():
    sharp = make_chip(gap=60e-6, base_depth=70e-6)
    pair = sharp.tip_pairs[0]
    blunt = DeviceSpec(
        sharp.channel_length,
        sharp.channel_width,
        sharp.domain_height,
        sharp.electrode_mode,
        sharp.insulator_height,
        (TipPairSpec(pair.center_x, pair.gap, pair.tip_angle, pair.base_depth, 5e-6),),
    )
    probe = (301e-6, 131e-6, 30e-6)
    assert not penetrates_insulator(sharp, probe)
    assert penetrates_insulator(blunt, probe)


def test_contact_normals_on_slant_face():
    spec = make_chip(gap=60e-6, base_depth=70e-6)
    pair = spec.tip_pairs[0]
    u = 10e-6  # depth into the tip from the gap boundary
    x = 300e-6 + u * np.tan(pair.half_angle_rad)
    normals = insulator_contact_normals(spec, (x, 140e-6, 30e-6))
    assert len(normals) == 1
    n = normals[0]
    assert np.linalg.norm(n) == pytest.approx(1.0)
    assert n[0] > 0 and n[1] < 0 and n[2] == 0  # faces downstream, away from the wall


def test_contact_normals_at_apex_and_top():
    spec = make_chip(gap=60e-6, base_depth=70e-6)
    apex = insulator_contact_normals(spec, (300e-6, 130e-6, 30e-6))
    assert len(apex) == 2  # both slant faces meet at the apex edge
    assert apex[0][0] > 0 > apex[1][0]
    top = insulator_contact_normals(spec, (302e-6, 140e-6, 60e-6))
    assert any(np.array_equal(n, [0.0, 0.0, 1.0]) for n in top)


def test_contact_normals_clear_of_tips():
    spec = make_chip(gap=60e-6, base_depth=70e-6)
    assert insulator_contact_normals(spec, (300e-6, 100e-6, 30e-6)) == []
    assert insulator_contact_normals(spec, (100e-6, 150e-6, 30e-6)) == []


def test_apex_distance():
    spec = make_chip(gap=60e-6, base_depth=70e-6)
    assert apex_distance(spec, (300e-6, 130e-6, 30e-6)) < 1e-12
    assert apex_distance(spec, (290e-6, 130e-6, 30e-6)) == pytest.approx(10e-6)
    assert apex_distance(spec, (300e-6, 100e-6, 30e-6)) == pytest.approx(30e-6)
    # Above the insulator the gap to the edge top counts.
    assert apex_distance(spec, (300e-6, 130e-6, 70e-6)) == pytest.approx(10e-6)
