"""Simulator for insulator-based dielectrophoretic cell trapping in
open-top microchannels: conduction field solve around insulating tip
constrictions, DEP force evaluation, and overdamped particle tracking.
"""

__version__ = "0.1.0"

from .dep import (
    EPS0,
    CMSpectrum,
    DielectricProps,
    ParticleModel,
    cm_factor,
    cm_spectrum,
    complex_permittivity,
    crossover_frequency,
    dep_force_field,
)
from .errors import (
    DegenerateDenominator,
    GeometryInvalid,
    IoError,
    NotConverged,
    OutOfDomain,
    ParseError,
    ResolutionTooCoarse,
    SingularSystem,
    StepUnderflow,
    TrapSimError,
    ValidationError,
    ZeroFrequency,
)
from .export import (
    ensure_dir,
    export_ensemble,
    export_report,
    export_scalar_field,
    export_spectrum,
    export_trajectory,
    export_vector_field,
    import_scalar_field,
    import_vector_field,
)
from .dynamics import (
    EnsembleResult,
    FluidProps,
    OutcomeKind,
    ParticleState,
    StepControl,
    StopRules,
    TrajectoryResult,
    integrate,
    release_grid,
    velocity_at,
)
from .fields import (
    AxisLine,
    ScalarField3,
    VectorField3,
    e_squared,
    electric_field,
    grad_e_squared,
    line_profile,
    sample_scalar,
    sample_vector,
)
from .geometry import (
    DeviceSpec,
    ElectrodeMode,
    Grid3,
    Label,
    MaterialGrid,
    TipPairSpec,
    TrapZone,
    apex_distance,
    constriction_zones,
    insulator_contact_normals,
    penetrates_insulator,
    probe_material,
    rasterize,
)
from .metrics import (
    GapSweepReport,
    HeightDecayReport,
    UniformityReport,
    centerline,
    gap_sweep,
    height_decay,
    uniformity,
    with_gap,
)
from .solver import DeviceSolution, SolveConfig, cut_currents, solve_device, solve_potential
from .config import (
    RunConfig,
    bundled_config,
    load_config,
    m_to_um_token,
    parse_config,
    serialize_config,
    um_to_m,
)

__all__ = [
    "EPS0",
    "AxisLine",
    "CMSpectrum",
    "DegenerateDenominator",
    "DeviceSolution",
    "DeviceSpec",
    "DielectricProps",
    "ElectrodeMode",
    "EnsembleResult",
    "FluidProps",
    "GapSweepReport",
    "GeometryInvalid",
    "Grid3",
    "HeightDecayReport",
    "IoError",
    "Label",
    "MaterialGrid",
    "NotConverged",
    "OutOfDomain",
    "OutcomeKind",
    "ParseError",
    "ParticleModel",
    "ParticleState",
    "ResolutionTooCoarse",
    "RunConfig",
    "ScalarField3",
    "SingularSystem",
    "SolveConfig",
    "StepControl",
    "StepUnderflow",
    "StopRules",
    "TipPairSpec",
    "TrajectoryResult",
    "TrapSimError",
    "TrapZone",
    "UniformityReport",
    "ValidationError",
    "VectorField3",
    "ZeroFrequency",
    "apex_distance",
    "bundled_config",
    "centerline",
    "cm_factor",
    "cm_spectrum",
    "complex_permittivity",
    "constriction_zones",
    "crossover_frequency",
    "cut_currents",
    "dep_force_field",
    "e_squared",
    "electric_field",
    "ensure_dir",
    "export_ensemble",
    "export_report",
    "export_scalar_field",
    "export_spectrum",
    "export_trajectory",
    "export_vector_field",
    "gap_sweep",
    "grad_e_squared",
    "height_decay",
    "import_scalar_field",
    "import_vector_field",
    "insulator_contact_normals",
    "integrate",
    "line_profile",
    "load_config",
    "m_to_um_token",
    "parse_config",
    "penetrates_insulator",
    "probe_material",
    "rasterize",
    "release_grid",
    "sample_scalar",
    "sample_vector",
    "serialize_config",
    "solve_device",
    "solve_potential",
    "um_to_m",
    "uniformity",
    "velocity_at",
    "with_gap",
]
