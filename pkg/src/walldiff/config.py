"""Run configuration: INI sections, command-line overrides and the resolved echo.

Every key has a default; a config file and ``--section.key value`` flags
override them in that order.  Unknown sections or keys are input errors.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path

from .errors import SchemaError


@dataclass
class ProblemSection:
    length: float | None = None
    conductivity: float | None = None
    positions: str = ""
    inside: str = "left"
    T_ref: float | None = None
    T_min: float | None = None
    t_ref: float = 3600.0
    alpha: float | None = None


@dataclass
class SolverSection:
    n_nodes: int = 75
    dt: float = 30.0


@dataclass
class RomSection:
    order: int = 10
    particles: int = 50
    iterations: int = 100
    inertia: float = 0.7
    cognitive: float = 1.5
    social: float = 1.5
    bound_scale: float = 10.0
    floor: float = 0.1
    floor_scope: str = "global"
    polish: bool = True
    cases: str = ""
    artifact: str = "rom.txt"


@dataclass
class OedSection:
    window_days: float = 3.0
    stride_hours: float = 1.0
    sigma_m: float | None = None
    delta_x: float | None = None
    start_days: float | None = None
    initial: str = "fit"
    lengths: str = "1,2,3,5,7,10"


@dataclass
class EstimateSection:
    p_apr: float = 2.8e-7
    eta1: float = 1e-14
    eta2: float = 1e-14
    max_iter: int = 100
    lower: float = 1e-8
    upper: float = 1e-5
    model: str = "rom"
    baseline: bool = True
    validate_model: str = "rom"
    perturbation: float = 0.2


SECTIONS = {
    "problem": ProblemSection,
    "solver": SolverSection,
    "rom": RomSection,
    "oed": OedSection,
    "estimate": EstimateSection,
}


@dataclass
class RunConfig:
    problem: ProblemSection = field(default_factory=ProblemSection)
    solver: SolverSection = field(default_factory=SolverSection)
    rom: RomSection = field(default_factory=RomSection)
    oed: OedSection = field(default_factory=OedSection)
    estimate: EstimateSection = field(default_factory=EstimateSection)

    def set(self, section, key, raw):
        if section not in SECTIONS:
            raise SchemaError(f"unknown config section [{section}]")
        obj = getattr(self, section)
        types = {f.name: f.type for f in fields(obj)}
        if key not in types:
            raise SchemaError(f"unknown config key {section}.{key}")
        setattr(obj, key, _convert(raw, types[key], f"{section}.{key}"))

    def to_ini(self):
        lines = []
        for name in SECTIONS:
            lines.append(f"[{name}]")
            for k, v in asdict(getattr(self, name)).items():
                lines.append(f"{k} = {'' if v is None else _render(v)}")
            lines.append("")
        return "\n".join(lines)

    def write(self, path):
        Path(path).write_text(self.to_ini(), encoding="utf-8")

    def validate(self):
        """Reject values outside the ranges the numerical code accepts."""
        positive = [("problem.length", self.problem.length),
                    ("problem.conductivity", self.problem.conductivity),
                    ("problem.T_ref", self.problem.T_ref), ("problem.t_ref", self.problem.t_ref),
                    ("problem.alpha", self.problem.alpha), ("solver.dt", self.solver.dt),
                    ("oed.window_days", self.oed.window_days),
                    ("oed.stride_hours", self.oed.stride_hours), ("oed.sigma_m", self.oed.sigma_m),
                    ("estimate.p_apr", self.estimate.p_apr), ("estimate.eta1", self.estimate.eta1),
                    ("estimate.eta2", self.estimate.eta2), ("rom.floor", self.rom.floor)]
        for name, v in positive:
            if v is not None and not v > 0:
                raise SchemaError(f"config key {name} must be positive, got {v}")
        at_least_one = [("solver.n_nodes", self.solver.n_nodes), ("rom.order", self.rom.order),
                        ("rom.iterations", self.rom.iterations),
                        ("estimate.max_iter", self.estimate.max_iter)]
        for name, v in at_least_one:
            if v < 1:
                raise SchemaError(f"config key {name} must be at least 1, got {v}")
        if self.rom.particles < 2:
            raise SchemaError(f"config key rom.particles must be at least 2, got {self.rom.particles}")
        if self.oed.delta_x is not None and self.oed.delta_x < 0:
            raise SchemaError(f"config key oed.delta_x must be non-negative, got {self.oed.delta_x}")
        if not 0 < self.estimate.lower < self.estimate.upper:
            raise SchemaError("config keys estimate.lower/upper must form a positive interval")
        if not 0 < self.estimate.perturbation < 1:
            raise SchemaError("config key estimate.perturbation must lie in (0, 1)")
        choices = [("problem.inside", self.problem.inside, ("left", "right")),
                   ("rom.floor_scope", self.rom.floor_scope, ("global", "local")),
                   ("oed.initial", self.oed.initial, ("fit", "warm")),
                   ("estimate.model", self.estimate.model, ("rom", "lom", "both")),
                   ("estimate.validate_model", self.estimate.validate_model, ("rom", "lom"))]
        for name, v, allowed in choices:
            if v not in allowed:
                raise SchemaError(f"config key {name} must be one of {allowed}, got {v!r}")
        return self


def _render(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _convert(raw, typ, name):
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    optional = "None" in str(typ)
    if optional and text.lower() in ("", "none"):
        return None
    base = str(typ).replace(" | None", "")
    try:
        if base == "bool":
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if base == "int":
            return int(text)
        if base == "float":
            return float(text)
    except ValueError:
        raise SchemaError(f"config key {name}: cannot read {raw!r} as {base}") from None
    return text


def load_config(path=None, overrides=()):
    """Resolve defaults, an optional INI file, then ``(section, key, value)`` overrides."""
    cfg = RunConfig()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise SchemaError(f"config file not found: {p}")
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read(p, encoding="utf-8")
        except configparser.Error as exc:
            raise SchemaError(f"{p}: {exc}") from None
        for section in parser.sections():
            for key, value in parser.items(section):
                cfg.set(section, key, value)
    for section, key, value in overrides:
        cfg.set(section, key, value)
    return cfg.validate()


def split_overrides(argv):
    """Separate ``--section.key value`` / ``--section.key=value`` flags from ``argv``."""
    rest, found = [], []
    i = 0
    while i < len(argv):
        arg = argv[i]
        if arg.startswith("--") and "." in arg.split("=", 1)[0]:
            name, eq, value = arg[2:].partition("=")
            if not eq:
                if i + 1 >= len(argv):
                    raise SchemaError(f"flag --{name} needs a value")
                value = argv[i + 1]
                i += 1
            section, _, key = name.partition(".")
            found.append((section, key, value))
        else:
            rest.append(arg)
        i += 1
    return rest, found


def parse_list(text, cast=float):
    return [cast(v) for v in text.replace(";", ",").split(",") if v.strip()]
