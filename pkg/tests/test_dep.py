"""Complex permittivity, Clausius-Mossotti factor, crossover, and force law."""

import math

import numpy as np
import pytest

from ideptrap import (
    EPS0,
    DielectricProps,
    GeometryInvalid,
    Grid3,
    ParticleModel,
    VectorField3,
    ZeroFrequency,
    cm_factor,
    cm_spectrum,
    complex_permittivity,
    crossover_frequency,
    dep_force_field,
)

MEDIUM = DielectricProps(eps_r=78.0, sigma=1.76e-3)
LATEX_BEAD = DielectricProps(eps_r=2.5, sigma=0.01)

# Closed-form values, frozen independently of the implementation:
#   conductivity limit   (0.01 - 1.76e-3) / (0.01 + 2 * 1.76e-3)
#   permittivity limit   (2.5 - 78) / (2.5 + 2 * 78)
#   crossover            sqrt((sm-sp)(sp+2sm) / ((ep-em)(ep+2em))) / 2pi, eps absolute
K_LOW = 0.6094674556213018
K_HIGH = -0.47634069400630913
F_CROSS = 1734344.007593795


def test_eps0_value_pinned():
    assert EPS0 == 8.854187817e-12


def test_dielectric_props_validation():
    with pytest.raises(GeometryInvalid):
        DielectricProps(eps_r=0.0, sigma=1e-3)
    with pytest.raises(GeometryInvalid):
        DielectricProps(eps_r=78.0, sigma=-1e-3)
    with pytest.raises(GeometryInvalid):
        ParticleModel(radius=0.0, props=MEDIUM)


def test_complex_permittivity_components():
    omega = 2.0 * math.pi * 1e6
    eps = complex_permittivity(MEDIUM, omega)
    assert eps.real == pytest.approx(78.0 * EPS0, rel=1e-15)
    assert eps.imag == pytest.approx(-2.801126998417358e-10, rel=1e-12)
    lossless = complex_permittivity(DielectricProps(eps_r=78.0, sigma=0.0), omega)
    assert lossless.imag == 0.0


def test_complex_permittivity_rejects_zero_frequency():
    with pytest.raises(ZeroFrequency):
        complex_permittivity(MEDIUM, 0.0)
    with pytest.raises(ZeroFrequency):
        complex_permittivity(MEDIUM, -1.0)


def test_cm_factor_of_matched_materials_is_zero():
    k = cm_factor(MEDIUM, MEDIUM, 2.0 * math.pi * 1e6)
    assert k == 0.0


def test_cm_factor_low_frequency_limit():
    # At 1 Hz conduction dominates both materials by > 5 orders of magnitude.
    k = cm_factor(LATEX_BEAD, MEDIUM, 2.0 * math.pi * 1.0)
    assert k.real == pytest.approx(K_LOW, rel=1e-6)
    assert abs(k.real - K_LOW) < 1e-3


def test_cm_factor_high_frequency_limit():
    k = cm_factor(LATEX_BEAD, MEDIUM, 2.0 * math.pi * 1e12)
    assert k.real == pytest.approx(K_HIGH, rel=1e-6)
    assert abs(k.real - K_HIGH) < 1e-3


def test_cm_factor_bounds_on_random_physical_inputs():
    rng = np.random.default_rng(1234)
    n = 10_000
    sig_p = 10.0 ** rng.uniform(-6, 1, n)
    sig_m = 10.0 ** rng.uniform(-6, 1, n)
    eps_p = rng.uniform(1.0, 100.0, n)
    eps_m = rng.uniform(1.0, 100.0, n)
    omega = 2.0 * math.pi * 10.0 ** rng.uniform(0, 12, n)
    sig_p[:50] = 0.0  # include perfectly insulating particles
    for i in range(n):
        k = cm_factor(
            DielectricProps(eps_p[i], sig_p[i]),
            DielectricProps(eps_m[i], sig_m[i]),
            omega[i],
        )
        assert -0.5 <= k.real <= 1.0


def test_cm_spectrum_shape_and_monotone_dispersion():
    spectrum = cm_spectrum(LATEX_BEAD, MEDIUM, 1e3, 1e9, points_per_decade=10)
    assert len(spectrum.frequencies) == 61
    assert spectrum.frequencies[0] == 1e3
    assert spectrum.frequencies[-1] == 1e9
    assert all(a < b for a, b in zip(spectrum.frequencies, spectrum.frequencies[1:]))
    # Single dispersion from +K_LOW down to K_HIGH: strictly decreasing Re.
    assert all(a > b for a, b in zip(spectrum.re_k, spectrum.re_k[1:]))


def test_cm_spectrum_of_matched_materials_is_flat_zero():
    spectrum = cm_spectrum(MEDIUM, MEDIUM, 1e3, 1e9)
    assert all(v == 0.0 for v in spectrum.re_k)
    assert all(v == 0.0 for v in spectrum.im_k)


def test_crossover_frequency_matches_closed_form():
    f = crossover_frequency(LATEX_BEAD, MEDIUM)
    assert f is not None
    assert abs(f - F_CROSS) / F_CROSS < 0.01


def test_crossover_absent_when_sign_fixed():
    # Particle leads the medium in both sigma and eps: positive at all frequencies.
    particle = DielectricProps(eps_r=90.0, sigma=0.01)
    assert crossover_frequency(particle, MEDIUM) is None
    # Mirrored contrast: negative at all frequencies.
    assert crossover_frequency(DielectricProps(eps_r=10.0, sigma=1e-4), MEDIUM) is None


def uniform_gradient_field(value=(1e13, 0.0, 0.0)):
    g = Grid3.from_box((40e-6, 40e-6, 40e-6), 10e-6)
    comps = [np.full(g.shape, v) for v in value]
    return VectorField3(g, np.stack(comps), "grad_E2")


def test_dep_force_against_frozen_prefactor():
    # 2pi r^3 eps0 eps_m K |grad E^2| with r = 5 um, eps_m = 78, K = K_LOW,
    # |grad E^2| = 1e13: frozen product below.  At 1 Hz K is K_LOW to 1e-6.
    model = ParticleModel(radius=5e-6, props=LATEX_BEAD)
    F = dep_force_field(model, MEDIUM, 2.0 * math.pi * 1.0, uniform_gradient_field())
    assert F.values[0][0, 0, 0] == pytest.approx(3.30585449323537e-12, rel=1e-6)
    assert np.all(F.values[1] == 0.0) and np.all(F.values[2] == 0.0)


def test_dep_force_zero_where_gradient_zero():
    model = ParticleModel(radius=5e-6, props=LATEX_BEAD)
    F = dep_force_field(
        model, MEDIUM, 2.0 * math.pi * 1e6, uniform_gradient_field((0.0, 0.0, 0.0))
    )
    assert np.all(F.values == 0.0)


def test_dep_force_octuples_when_radius_doubles():
    g = uniform_gradient_field()
    omega = 2.0 * math.pi * 1e6
    small = dep_force_field(ParticleModel(5e-6, LATEX_BEAD), MEDIUM, omega, g)
    large = dep_force_field(ParticleModel(1e-5, LATEX_BEAD), MEDIUM, omega, g)
    assert np.array_equal(large.values, 8.0 * small.values)


def test_dep_force_linear_in_gradient():
    rng = np.random.default_rng(5)
    g = Grid3.from_box((40e-6, 40e-6, 40e-6), 10e-6)
    base = rng.normal(scale=1e13, size=(3,) + g.shape)
    model = ParticleModel(radius=5e-6, props=LATEX_BEAD)
    omega = 2.0 * math.pi * 1e6
    f1 = dep_force_field(model, MEDIUM, omega, VectorField3(g, base))
    f4 = dep_force_field(model, MEDIUM, omega, VectorField3(g, 4.0 * base))
    assert np.array_equal(f4.values, 4.0 * f1.values)


def test_dep_force_sign_follows_re_k():
    rng = np.random.default_rng(9)
    g = Grid3.from_box((40e-6, 40e-6, 40e-6), 10e-6)
    grad = VectorField3(g, rng.normal(scale=1e13, size=(3,) + g.shape))
    model = ParticleModel(radius=5e-6, props=LATEX_BEAD)
    # Below crossover Re[K] > 0: force along the gradient, pointwise.
    f_pos = dep_force_field(model, MEDIUM, 2.0 * math.pi * 1e3, grad)
    assert np.all(np.sum(f_pos.values * grad.values, axis=0) >= 0.0)
    # Above crossover Re[K] < 0: force against the gradient.
    f_neg = dep_force_field(model, MEDIUM, 2.0 * math.pi * 1e9, grad)
    assert np.all(np.sum(f_neg.values * grad.values, axis=0) <= 0.0)
