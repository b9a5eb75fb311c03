"""Dielectrophoresis physics: complex permittivities, the Clausius-Mossotti
factor, and the time-averaged force on a homogeneous spherical particle,

    F(x) = 2 pi r^3 eps0 eps_m Re[K*(omega)] grad(E^2)(x),

with E an RMS amplitude and K*(omega) = (ep* - em*) / (ep* + 2 em*).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateDenominator, GeometryInvalid, ZeroFrequency
from .fields import VectorField3

EPS0 = 8.854187817e-12  # vacuum permittivity, F/m


@dataclass(frozen=True)
class DielectricProps:
    """Relative permittivity and conductivity of one material."""

    eps_r: float
    sigma: float

    def __post_init__(self):
        if self.eps_r <= 0:
            raise GeometryInvalid(f"eps_r must be positive, got {self.eps_r}")
        if self.sigma < 0:
            raise GeometryInvalid(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class ParticleModel:
    """Homogeneous dielectric sphere."""

    radius: float
    props: DielectricProps

    def __post_init__(self):
        if self.radius <= 0:
            raise GeometryInvalid(f"radius must be positive, got {self.radius}")


def complex_permittivity(p: DielectricProps, omega: float) -> complex:
    """eps0 * eps_r - j * sigma / omega, in F/m."""
    if omega <= 0:
        raise ZeroFrequency(f"omega must be positive, got {omega}")
    return complex(EPS0 * p.eps_r, -p.sigma / omega)


def cm_factor(particle: DielectricProps, medium: DielectricProps, omega: float) -> complex:
    """Complex Clausius-Mossotti factor K*(omega)."""
    ep = complex_permittivity(particle, omega)
    em = complex_permittivity(medium, omega)
    denom = ep + 2.0 * em
    if abs(denom) == 0.0:
        raise DegenerateDenominator("particle and medium permittivities cancel")
    return (ep - em) / denom


@dataclass(frozen=True)
class CMSpectrum:
    """Re[K*] and Im[K*] tabulated over strictly increasing frequencies."""

    frequencies: tuple[float, ...]
    re_k: tuple[float, ...]
    im_k: tuple[float, ...]
    particle: DielectricProps
    medium: DielectricProps

    def __post_init__(self):
        if not len(self.frequencies) == len(self.re_k) == len(self.im_k):
            raise GeometryInvalid("spectrum columns differ in length")
        if any(b <= a for a, b in zip(self.frequencies, self.frequencies[1:])):
            raise GeometryInvalid("frequencies must be strictly increasing")
        if any(not -0.5 <= v <= 1.0 for v in self.re_k):
            raise GeometryInvalid("Re[K*] out of the physical range [-0.5, 1.0]")


def cm_spectrum(
    particle: DielectricProps,
    medium: DielectricProps,
    f_min: float,
    f_max: float,
    points_per_decade: int = 20,
) -> CMSpectrum:
    """Sample K* over [f_min, f_max] with log-uniform spacing."""
    if not 0.0 < f_min < f_max:
        raise GeometryInvalid(f"need 0 < f_min < f_max, got {f_min}, {f_max}")
    if points_per_decade < 1:
        raise GeometryInvalid("points_per_decade must be >= 1")
    decades = math.log10(f_max / f_min)
    n = max(2, int(round(decades * points_per_decade)) + 1)
    freqs = [f_min * (f_max / f_min) ** (i / (n - 1)) for i in range(n)]
    freqs[-1] = f_max
    ks = [cm_factor(particle, medium, 2.0 * math.pi * f) for f in freqs]
    return CMSpectrum(
        frequencies=tuple(freqs),
        re_k=tuple(k.real for k in ks),
        im_k=tuple(k.imag for k in ks),
        particle=particle,
        medium=medium,
    )


def crossover_frequency(
    particle: DielectricProps,
    medium: DielectricProps,
    f_lo: float = 1.0,
    f_hi: float = 1e12,
) -> float | None:
    """Frequency where Re[K*] changes sign, or None if it keeps its sign.

    Scans [f_lo, f_hi] per decade for a bracketing interval, then bisects to
    1e-4 relative width.  The single-dispersion K* of two homogeneous media
    crosses zero at most once, so the first bracket is the crossover.
    """
    re_at = lambda f: cm_factor(particle, medium, 2.0 * math.pi * f).real
    grid = [f_lo]
    while grid[-1] < f_hi:
        grid.append(min(grid[-1] * 10.0, f_hi))
    lo = None
    for a, b in zip(grid, grid[1:]):
        if re_at(a) == 0.0:
            return a
        if re_at(a) * re_at(b) < 0.0:
            lo, hi = a, b
            break
    else:
        return None if re_at(f_hi) != 0.0 else f_hi
    while (hi - lo) > 1e-4 * lo:
        mid = math.sqrt(lo * hi)
        if re_at(lo) * re_at(mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    return math.sqrt(lo * hi)


def dep_force_field(
    model: ParticleModel,
    medium: DielectricProps,
    omega: float,
    grad_e2: VectorField3,
) -> VectorField3:
    """Pointwise DEP force (N) on the grid of grad_e2.

    The prefactor uses the real relative permittivity of the medium; the
    frequency dependence enters only through Re[K*].
    """
    k = cm_factor(model.props, medium, omega).real
    # Cube by repeated multiplication: plain IEEE multiplies keep the
    # radius-doubling octupling exact, which libm pow does not guarantee.
    r3 = model.radius * model.radius * model.radius
    prefactor = 2.0 * math.pi * r3 * EPS0 * medium.eps_r * k
    return VectorField3(grad_e2.grid, prefactor * grad_e2.values, "F_dep")
