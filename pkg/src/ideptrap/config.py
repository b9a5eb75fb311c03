"""Run configuration: INI-style text in fixed units, validated into SI values.

Units are set by the schema, never inferred: lengths in micrometers,
conductivities in S/m, frequencies in Hz, times in seconds.  Micrometer
values are converted by shifting the decimal exponent in string form before
the single float conversion, so parse(serialize(cfg)) reproduces every float
bit for bit.

Unknown sections and keys are rejected; every numeric field is range-checked.
"""

from __future__ import annotations

import configparser
import importlib.resources
import math
import re
from dataclasses import dataclass

from .dep import DielectricProps, ParticleModel
from .dynamics import StepControl, StopRules
from .errors import GeometryInvalid, IoError, ParseError, ValidationError
from .geometry import DeviceSpec, ElectrodeMode, TipPairSpec
from .solver import SolveConfig

_NUMBER = re.compile(r"^([+-]?)(\d+)(?:\.(\d*))?(?:[eE]([+-]?\d+))?$")


def _shift_exponent(token: str, shift: int) -> str:
    """Multiply a decimal literal by 10**shift exactly, in string form."""
    m = _NUMBER.match(token.strip())
    if m is None:
        raise ValueError(f"not a decimal literal: {token!r}")
    sign, whole, frac, exp = m.groups()
    mantissa = whole + ("." + frac if frac else "")
    exponent = int(exp) if exp else 0
    return f"{sign}{mantissa}e{exponent + shift}"


def um_to_m(token: str) -> float:
    """Parse a micrometer literal into meters with one correctly rounded step."""
    return float(_shift_exponent(token, -6))


def m_to_um_token(value: float) -> str:
    """Meter value as a micrometer literal; um_to_m inverts it exactly."""
    return _shift_exponent(repr(float(value)), 6)


@dataclass(frozen=True)
class OutputSettings:
    directory: str = "out"
    export_phi: bool = True
    export_e2: bool = True
    export_grad_e2: bool = True
    format: str = "csv"

    def __post_init__(self):
        if self.format not in ("csv", "vtk_structured"):
            raise ValidationError("outputs.format", f"unknown format {self.format!r}")


@dataclass(frozen=True)
class MetricsSettings:
    heights: tuple[float, ...] = (0.0, 30e-6, 60e-6)
    uniformity_heights: tuple[float, ...] = (30e-6, 160e-6)


@dataclass(frozen=True)
class SweepSettings:
    gaps: tuple[float, ...] = (40e-6, 60e-6, 80e-6, 100e-6)
    height: float = 0.0


@dataclass(frozen=True)
class SpectrumSettings:
    f_min: float = 1e3
    f_max: float = 1e9
    points_per_decade: int = 20

    def __post_init__(self):
        if not 0.0 < self.f_min < self.f_max:
            raise ValidationError("spectrum", "need 0 < f_min_hz < f_max_hz")
        if self.points_per_decade < 1:
            raise ValidationError("spectrum.points_per_decade", "must be >= 1")


@dataclass(frozen=True)
class TraceSettings:
    release: tuple[float, float, float] = (0.0, 0.0, 30e-6)
    t_max: float = 60.0
    dt_max: float = 1e-2
    dt_min: float = 1e-9
    speed_floor: float = 1e-7
    capture_radius: float | None = None

    def step_control(self) -> StepControl:
        return StepControl(dt_max=self.dt_max, dt_min=self.dt_min)

    def stop_rules(self, zones) -> StopRules:
        return StopRules(
            t_max=self.t_max,
            zones=zones,
            capture_radius=self.capture_radius,
            speed_floor=self.speed_floor,
        )


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs, in SI units, fully validated."""

    device: DeviceSpec
    sigma_medium: float
    eps_r_medium: float
    conductivity_ratio: float
    frequency: float
    particle: ParticleModel
    solver: SolveConfig
    resolution: float
    outputs: OutputSettings = OutputSettings()
    metrics: MetricsSettings = MetricsSettings()
    sweep: SweepSettings = SweepSettings()
    spectrum: SpectrumSettings = SpectrumSettings()
    trace: TraceSettings = TraceSettings()

    def medium_props(self) -> DielectricProps:
        return DielectricProps(eps_r=self.eps_r_medium, sigma=self.sigma_medium)

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.frequency


_REQUIRED_SECTIONS = ("device", "materials", "drive", "particle")
_KNOWN_KEYS = {
    "device": {
        "channel_length_um",
        "channel_width_um",
        "domain_height_um",
        "insulator_height_um",
        "gap_um",
        "tip_angle_deg",
        "center_x_um",
        "base_depth_um",
        "truncation_um",
    },
    "materials": {"sigma_s_per_m", "eps_r", "conductivity_ratio"},
    "drive": {"applied_field_v_per_m", "voltage_v", "frequency_hz"},
    "particle": {"radius_um", "eps_r", "sigma_s_per_m"},
    "solver": {
        "resolution_um",
        "rel_tolerance",
        "max_iterations",
        "preconditioner",
        "log_every",
    },
    "outputs": {"directory", "export_phi", "export_e2", "export_grad_e2", "format"},
    "metrics": {"heights_um", "uniformity_heights_um"},
    "sweep": {"gaps_um", "height_um"},
    "spectrum": {"f_min_hz", "f_max_hz", "points_per_decade"},
    "trace": {
        "release_x_um",
        "release_y_um",
        "release_z_um",
        "t_max_s",
        "dt_max_s",
        "dt_min_s",
        "speed_floor_m_per_s",
        "capture_radius_um",
    },
}


class _Section:
    """One parsed section with typed, range-checked accessors."""

    def __init__(self, name: str, items: dict):
        self.name = name
        self.items = items

    def _field(self, key: str) -> str:
        return f"{self.name}.{key}"

    def raw(self, key: str, default=None):
        return self.items.get(key, default)

    def has(self, key: str) -> bool:
        return key in self.items

    def length(self, key: str, default: float | None = None, positive=True) -> float:
        if key not in self.items:
            return default
        try:
            value = um_to_m(self.items[key])
        except ValueError:
            raise ValidationError(self._field(key), f"not a number: {self.items[key]!r}")
        if positive and value <= 0:
            raise ValidationError(self._field(key), "must be positive")
        if not positive and value < 0:
            raise ValidationError(self._field(key), "must be >= 0")
        return value

    def number(self, key: str, default: float | None = None, positive=False, nonneg=False) -> float:
        if key not in self.items:
            return default
        try:
            value = float(self.items[key])
        except ValueError:
            raise ValidationError(self._field(key), f"not a number: {self.items[key]!r}")
        if positive and value <= 0:
            raise ValidationError(self._field(key), "must be positive")
        if nonneg and value < 0:
            raise ValidationError(self._field(key), "must be >= 0")
        return value

    def integer(self, key: str, default: int | None = None, minimum: int | None = None) -> int:
        if key not in self.items:
            return default
        try:
            value = int(self.items[key])
        except ValueError:
            raise ValidationError(self._field(key), f"not an integer: {self.items[key]!r}")
        if minimum is not None and value < minimum:
            raise ValidationError(self._field(key), f"must be >= {minimum}")
        return value

    def boolean(self, key: str, default: bool) -> bool:
        if key not in self.items:
            return default
        token = self.items[key].strip().lower()
        if token in ("true", "yes", "on", "1"):
            return True
        if token in ("false", "no", "off", "0"):
            return False
        raise ValidationError(self._field(key), f"not a boolean: {self.items[key]!r}")

    def text(self, key: str, default: str | None = None) -> str:
        return self.items.get(key, default)

    def length_list(self, key: str, default: tuple) -> tuple:
        if key not in self.items:
            return default
        tokens = [t.strip() for t in self.items[key].split(",") if t.strip()]
        if not tokens:
            raise ValidationError(self._field(key), "empty list")
        try:
            return tuple(um_to_m(t) for t in tokens)
        except ValueError as exc:
            raise ValidationError(self._field(key), str(exc))


def _read_ini(text: str) -> dict[str, _Section]:
    parser = configparser.ConfigParser(
        delimiters=("=",),
        comment_prefixes=("#",),
        inline_comment_prefixes=("#",),
        interpolation=None,
        strict=True,
        empty_lines_in_values=False,
    )
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError(exc.lineno, "content before the first [section] header") from exc
    except configparser.DuplicateSectionError as exc:
        raise ParseError(exc.lineno, f"duplicate section [{exc.section}]") from exc
    except configparser.DuplicateOptionError as exc:
        raise ParseError(
            exc.lineno, f"duplicate key {exc.option!r} in [{exc.section}]"
        ) from exc
    except configparser.ParsingError as exc:
        line, content = exc.errors[0]
        raise ParseError(line, f"cannot parse {content}") from exc
    if parser.defaults():
        raise ParseError(None, "DEFAULT sections are not supported")

    sections = {}
    for name in parser.sections():
        if name not in _KNOWN_KEYS:
            raise ValidationError(name, "unknown section")
        items = dict(parser.items(name))
        unknown = set(items) - _KNOWN_KEYS[name]
        if unknown:
            raise ValidationError(
                f"{name}.{sorted(unknown)[0]}", "unknown key"
            )
        sections[name] = _Section(name, items)
    missing = [s for s in _REQUIRED_SECTIONS if s not in sections]
    if missing:
        raise ParseError(None, f"missing required sections: {', '.join(missing)}")
    for name in _KNOWN_KEYS:
        sections.setdefault(name, _Section(name, {}))
    return sections


def parse_config(text: str) -> RunConfig:
    """Validate config text into a RunConfig.

    Raises ParseError for structural problems (with a line number when one is
    known) and ValidationError for bad values, naming the offending field.
    """
    s = _read_ini(text)

    dev = s["device"]
    for key in ("channel_length_um", "channel_width_um", "domain_height_um", "gap_um", "tip_angle_deg"):
        if not dev.has(key):
            raise ValidationError(f"device.{key}", "required key missing")
    length = dev.length("channel_length_um")
    width = dev.length("channel_width_um")
    height = dev.length("domain_height_um")
    ins_height = dev.length("insulator_height_um", 60e-6)
    gap = dev.length("gap_um")
    angle = dev.number("tip_angle_deg", positive=True)
    center_x = dev.length("center_x_um", length / 2.0)
    base_depth = dev.length("base_depth_um", (width - gap) / 2.0)
    truncation = dev.length("truncation_um", 0.0, positive=False)

    mat = s["materials"]
    for key in ("sigma_s_per_m", "eps_r"):
        if not mat.has(key):
            raise ValidationError(f"materials.{key}", "required key missing")
    sigma_medium = mat.number("sigma_s_per_m", positive=True)
    eps_r_medium = mat.number("eps_r", positive=True)
    ratio = mat.number("conductivity_ratio", 1e-6, nonneg=True)
    if ratio >= 1.0:
        raise ValidationError("materials.conductivity_ratio", "must be < 1")

    drv = s["drive"]
    if not drv.has("frequency_hz"):
        raise ValidationError("drive.frequency_hz", "required key missing")
    frequency = drv.number("frequency_hz", positive=True)
    has_field = drv.has("applied_field_v_per_m")
    has_voltage = drv.has("voltage_v")
    if has_field == has_voltage:
        raise ValidationError(
            "drive", "exactly one of applied_field_v_per_m or voltage_v is required"
        )
    if has_field:
        mode = ElectrodeMode(applied_field=drv.number("applied_field_v_per_m", positive=True))
    else:
        mode = ElectrodeMode(voltage=drv.number("voltage_v", positive=True))

    par = s["particle"]
    for key in ("radius_um", "eps_r", "sigma_s_per_m"):
        if not par.has(key):
            raise ValidationError(f"particle.{key}", "required key missing")
    particle = ParticleModel(
        radius=par.length("radius_um"),
        props=DielectricProps(
            eps_r=par.number("eps_r", positive=True),
            sigma=par.number("sigma_s_per_m", nonneg=True),
        ),
    )

    sol = s["solver"]
    resolution = sol.length("resolution_um", 2e-6)
    try:
        solver = SolveConfig(
            rel_tolerance=sol.number("rel_tolerance", 1e-8, positive=True),
            max_iterations=sol.integer("max_iterations", 2000, minimum=1),
            conductivity_ratio=ratio,
            preconditioner=sol.text("preconditioner", "amg"),
            log_every=sol.integer("log_every", 50, minimum=1),
        )
    except GeometryInvalid as exc:
        raise ValidationError("solver", str(exc))

    out = s["outputs"]
    outputs = OutputSettings(
        directory=out.text("directory", "out"),
        export_phi=out.boolean("export_phi", True),
        export_e2=out.boolean("export_e2", True),
        export_grad_e2=out.boolean("export_grad_e2", True),
        format=out.text("format", "csv"),
    )

    met = s["metrics"]
    metrics = MetricsSettings(
        heights=met.length_list("heights_um", MetricsSettings().heights),
        uniformity_heights=met.length_list(
            "uniformity_heights_um", MetricsSettings().uniformity_heights
        ),
    )

    swp = s["sweep"]
    sweep = SweepSettings(
        gaps=swp.length_list("gaps_um", SweepSettings().gaps),
        height=swp.length("height_um", 0.0, positive=False),
    )
    if any(b <= a for a, b in zip(sweep.gaps, sweep.gaps[1:])):
        raise ValidationError("sweep.gaps_um", "must be strictly increasing")

    spc = s["spectrum"]
    spectrum = SpectrumSettings(
        f_min=spc.number("f_min_hz", SpectrumSettings().f_min, positive=True),
        f_max=spc.number("f_max_hz", SpectrumSettings().f_max, positive=True),
        points_per_decade=spc.integer(
            "points_per_decade", SpectrumSettings().points_per_decade, minimum=1
        ),
    )

    trc = s["trace"]
    release = (
        trc.length("release_x_um", max(center_x - 100e-6, resolution), positive=False),
        trc.length("release_y_um", width / 2.0, positive=False),
        trc.length("release_z_um", 30e-6, positive=False),
    )
    trace = TraceSettings(
        release=release,
        t_max=trc.number("t_max_s", 60.0, positive=True),
        dt_max=trc.number("dt_max_s", 1e-2, positive=True),
        dt_min=trc.number("dt_min_s", 1e-9, positive=True),
        speed_floor=trc.number("speed_floor_m_per_s", 1e-7, nonneg=True),
        capture_radius=trc.length("capture_radius_um", None),
    )

    try:
        device = DeviceSpec(
            channel_length=length,
            channel_width=width,
            domain_height=height,
            electrode_mode=mode,
            insulator_height=ins_height,
            tip_pairs=(
                TipPairSpec(
                    center_x=center_x,
                    gap=gap,
                    tip_angle=angle,
                    base_depth=base_depth,
                    truncation=truncation,
                ),
            ),
        )
    except GeometryInvalid as exc:
        raise ValidationError("device", str(exc))

    for name, h in (("metrics.heights_um", metrics.heights),
                    ("metrics.uniformity_heights_um", metrics.uniformity_heights)):
        for value in h:
            if not 0.0 <= value <= device.domain_height:
                raise ValidationError(name, f"height {value} outside the domain")

    return RunConfig(
        device=device,
        sigma_medium=sigma_medium,
        eps_r_medium=eps_r_medium,
        conductivity_ratio=ratio,
        frequency=frequency,
        particle=particle,
        solver=solver,
        resolution=resolution,
        outputs=outputs,
        metrics=metrics,
        sweep=sweep,
        spectrum=spectrum,
        trace=trace,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _num(value: float) -> str:
    return repr(float(value))


def serialize_config(cfg: RunConfig) -> str:
    """Render a RunConfig back to config text; parse_config inverts it exactly."""
    pair = cfg.device.tip_pairs[0]
    mode = cfg.device.electrode_mode
    lines = [
        "[device]",
        f"channel_length_um = {m_to_um_token(cfg.device.channel_length)}",
        f"channel_width_um = {m_to_um_token(cfg.device.channel_width)}",
        f"domain_height_um = {m_to_um_token(cfg.device.domain_height)}",
        f"insulator_height_um = {m_to_um_token(cfg.device.insulator_height)}",
        f"gap_um = {m_to_um_token(pair.gap)}",
        f"tip_angle_deg = {_num(pair.tip_angle)}",
        f"center_x_um = {m_to_um_token(pair.center_x)}",
        f"base_depth_um = {m_to_um_token(pair.base_depth)}",
        f"truncation_um = {m_to_um_token(pair.truncation)}",
        "",
        "[materials]",
        f"sigma_s_per_m = {_num(cfg.sigma_medium)}",
        f"eps_r = {_num(cfg.eps_r_medium)}",
        f"conductivity_ratio = {_num(cfg.conductivity_ratio)}",
        "",
        "[drive]",
    ]
    if mode.applied_field is not None:
        lines.append(f"applied_field_v_per_m = {_num(mode.applied_field)}")
    else:
        lines.append(f"voltage_v = {_num(mode.voltage)}")
    lines += [
        f"frequency_hz = {_num(cfg.frequency)}",
        "",
        "[particle]",
        f"radius_um = {m_to_um_token(cfg.particle.radius)}",
        f"eps_r = {_num(cfg.particle.props.eps_r)}",
        f"sigma_s_per_m = {_num(cfg.particle.props.sigma)}",
        "",
        "[solver]",
        f"resolution_um = {m_to_um_token(cfg.resolution)}",
        f"rel_tolerance = {_num(cfg.solver.rel_tolerance)}",
        f"max_iterations = {cfg.solver.max_iterations}",
        f"preconditioner = {cfg.solver.preconditioner}",
        f"log_every = {cfg.solver.log_every}",
        "",
        "[outputs]",
        f"directory = {cfg.outputs.directory}",
        f"export_phi = {str(cfg.outputs.export_phi).lower()}",
        f"export_e2 = {str(cfg.outputs.export_e2).lower()}",
        f"export_grad_e2 = {str(cfg.outputs.export_grad_e2).lower()}",
        f"format = {cfg.outputs.format}",
        "",
        "[metrics]",
        f"heights_um = {', '.join(m_to_um_token(h) for h in cfg.metrics.heights)}",
        "uniformity_heights_um = "
        + ", ".join(m_to_um_token(h) for h in cfg.metrics.uniformity_heights),
        "",
        "[sweep]",
        f"gaps_um = {', '.join(m_to_um_token(g) for g in cfg.sweep.gaps)}",
        f"height_um = {m_to_um_token(cfg.sweep.height)}",
        "",
        "[spectrum]",
        f"f_min_hz = {_num(cfg.spectrum.f_min)}",
        f"f_max_hz = {_num(cfg.spectrum.f_max)}",
        f"points_per_decade = {cfg.spectrum.points_per_decade}",
        "",
        "[trace]",
        f"release_x_um = {m_to_um_token(cfg.trace.release[0])}",
        f"release_y_um = {m_to_um_token(cfg.trace.release[1])}",
        f"release_z_um = {m_to_um_token(cfg.trace.release[2])}",
        f"t_max_s = {_num(cfg.trace.t_max)}",
        f"dt_max_s = {_num(cfg.trace.dt_max)}",
        f"dt_min_s = {_num(cfg.trace.dt_min)}",
        f"speed_floor_m_per_s = {_num(cfg.trace.speed_floor)}",
    ]
    if cfg.trace.capture_radius is not None:
        lines.append(f"capture_radius_um = {m_to_um_token(cfg.trace.capture_radius)}")
    return "\n".join(lines) + "\n"


def bundled_config(name: str) -> str:
    """Text of a packaged scenario config (name without the .cfg suffix)."""
    try:
        resource = importlib.resources.files("ideptrap") / "configs" / f"{name}.cfg"
        return resource.read_text(encoding="utf-8")
    except (FileNotFoundError, OSError) as exc:
        raise IoError(f"no bundled config named {name!r}") from exc
