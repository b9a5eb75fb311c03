"""Shared fixtures for the test suite.

The full-size device solves dominate the suite runtime, so they are built
once per session and shared read-only by every test that only inspects the
solution.
"""

import pytest

from ideptrap import (
    DeviceSpec,
    DielectricProps,
    ElectrodeMode,
    FluidProps,
    ParticleModel,
    TipPairSpec,
    solve_device,
)


def make_chip(gap: float, base_depth: float) -> DeviceSpec:
    """Open-top trapping chip with one opposing tip pair mid-channel."""
    return DeviceSpec(
        channel_length=600e-6,
        channel_width=200e-6,
        domain_height=300e-6,
        electrode_mode=ElectrodeMode(applied_field=3e4),
        insulator_height=60e-6,
        tip_pairs=(
            TipPairSpec(
                center_x=300e-6,
                gap=gap,
                tip_angle=30.0,
                base_depth=base_depth,
            ),
        ),
    )


@pytest.fixture(scope="session")
def gap60_spec():
    return make_chip(gap=60e-6, base_depth=70e-6)


@pytest.fixture(scope="session")
def gap100_spec():
    return make_chip(gap=100e-6, base_depth=50e-6)


@pytest.fixture(scope="session")
def solution_gap60_2um(gap60_spec):
    # Production resolution; roughly half a minute, shared across modules.
    return solve_device(gap60_spec, 2e-6)


@pytest.fixture(scope="session")
def solution_gap60_4um(gap60_spec):
    return solve_device(gap60_spec, 4e-6)


@pytest.fixture(scope="session")
def solution_gap100_4um(gap100_spec):
    return solve_device(gap100_spec, 4e-6)


@pytest.fixture(scope="session")
def medium():
    # 17.6 uS/cm aqueous buffer.
    return DielectricProps(eps_r=78.0, sigma=1.76e-3)


@pytest.fixture(scope="session")
def cell_model():
    # Homogeneous-sphere stand-in for a cultured mammalian cell.
    return ParticleModel(radius=7.5e-6, props=DielectricProps(eps_r=60.0, sigma=0.2))


@pytest.fixture(scope="session")
def water():
    return FluidProps()
