"""Run configuration: a flat ``key = value`` format with three sections.

::

    [case]
    case = burgers_riemann_1d
    n = 256
    k = 5

    [stabilization]
    C_lin = 0.1

    [output]
    dump_every = 1000

Keys may also appear before any section header; every key has a home
section and is accepted there or at top level.  ``#`` and ``;`` start
comments.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .cases import (CASE_NAMES, INJECT, INTERPOLATE, REGULARIZATIONS, CaseDefinition,
                    StabConstants, builtin_case)
from .integrator import BDF_STARTUPS, RunOptions
from .stabilization import NORMALIZATIONS


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_ints(text: str) -> tuple[int, ...]:
    parts = text.replace(",", " ").split()
    if not parts:
        raise ValueError("expected one or more integers")
    return tuple(int(p) for p in parts)


def _parse_positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise ValueError(f"expected a positive number, got {text!r}")
    return v


def _parse_nonneg_float(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise ValueError(f"expected a non-negative number, got {text!r}")
    return v


def _choice(options):
    def parse(text):
        v = text.strip()
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {v!r}")
        return v
    return parse


def _fmt_float(v: float) -> str:
    return f"{v:.17g}"


# key -> (attribute, section, parser, formatter)
_KEYS = {
    "case": ("case", "case", _choice(CASE_NAMES), str),
    "n": ("n_elements", "case", _parse_ints, lambda v: ",".join(map(str, v))),
    "k": ("degree", "case", int, str),
    "dt": ("dt", "case", _parse_positive_float, _fmt_float),
    "t_final": ("t_final", "case", _parse_nonneg_float, _fmt_float),
    "ic": ("ic_policy", "case", _choice((INJECT, INTERPOLATE)), str),
    "regularization": ("regularization", "case", _choice(REGULARIZATIONS), str),
    "meshes": ("meshes", "case", _parse_ints, lambda v: ",".join(map(str, v))),
    "degrees": ("degrees", "case", _parse_ints, lambda v: ",".join(map(str, v))),
    "nonlinear": ("nonlinear", "stabilization", _parse_bool, lambda v: str(v).lower()),
    "linear": ("linear", "stabilization", _parse_bool, lambda v: str(v).lower()),
    "C_RB": ("c_rb", "stabilization", _parse_nonneg_float, _fmt_float),
    "C_max": ("c_max", "stabilization", _parse_nonneg_float, _fmt_float),
    "C_lin": ("c_lin", "stabilization", _parse_nonneg_float, _fmt_float),
    "P": ("prandtl", "stabilization", _parse_nonneg_float, _fmt_float),
    "normalization": ("normalization", "stabilization", _choice(NORMALIZATIONS), str),
    "bdf_startup": ("bdf_startup", "stabilization", _choice(BDF_STARTUPS), str),
    "dir": ("out_dir", "output", str, str),
    "dump_every": ("dump_every", "output", int, str),
    "resolution": ("resolution", "output", _parse_ints, lambda v: ",".join(map(str, v))),
}
_ALIASES = {"n_elements": "n", "degree": "k", "prandtl": "P", "c_rb": "C_RB",
            "c_max": "C_max", "c_lin": "C_lin", "out_dir": "dir", "ic_policy": "ic"}
SECTIONS = ("case", "stabilization", "output")
REQUIRED = ("case", "n", "k")


@dataclass(frozen=True)
class RunConfig:
    case: str
    n_elements: tuple[int, ...]
    degree: int
    dt: float | None = None
    t_final: float | None = None
    ic_policy: str | None = None
    regularization: str | None = None
    meshes: tuple[int, ...] | None = None
    degrees: tuple[int, ...] | None = None
    nonlinear: bool = True
    linear: bool = True
    c_rb: float | None = None
    c_max: float | None = None
    c_lin: float | None = None
    prandtl: float | None = None
    normalization: str = "global"
    bdf_startup: str = "wait"
    out_dir: str | None = None
    dump_every: int = 0
    resolution: tuple[int, ...] | None = None
    _lines: dict = field(default_factory=dict, compare=False, repr=False)

    # ---- derived objects -----------------------------------------------------
    def case_definition(self) -> CaseDefinition:
        case = builtin_case(self.case)
        if case.is_euler and self.regularization:
            case = case.with_regularization(self.regularization)
        base = case.constants
        consts = StabConstants(
            c_rb=base.c_rb if self.c_rb is None else self.c_rb,
            c_max=base.c_max if self.c_max is None else self.c_max,
            c_lin=base.c_lin if self.c_lin is None else self.c_lin,
            prandtl=base.prandtl if self.prandtl is None else self.prandtl)
        return replace(case, constants=consts)

    def run_options(self) -> RunOptions:
        case = self.case_definition()
        return RunOptions(nonlinear=self.nonlinear, linear=self.linear,
                          constants=case.constants, regularization=case.regularization,
                          ic_policy=self.ic_policy, normalization=self.normalization,
                          bdf_startup=self.bdf_startup)

    def mesh(self):
        return self.n_elements[0] if len(self.n_elements) == 1 else self.n_elements


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration text; errors carry line numbers."""
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno)
            section = line[1:-1].strip().lower()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        attr, home, parser, _ = _KEYS[key]
        if section is not None and section != home:
            raise ConfigError(f"key {key!r} belongs in [{home}], not [{section}]", lineno)
        if attr in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[attr]})", lineno)
        try:
            values[attr] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
        lines[attr] = lineno

    missing = [k for k in REQUIRED if _KEYS[k][0] not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    cfg = RunConfig(**values, _lines=lines)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    lines = cfg._lines
    case = builtin_case(cfg.case)

    def fail(msg, attr):
        raise ConfigError(msg, lines.get(attr))

    if len(cfg.n_elements) not in (1, case.dim):
        fail(f"n needs 1 or {case.dim} values for {cfg.case}", "n_elements")
    if min(cfg.n_elements) < 1:
        fail("element counts must be positive", "n_elements")
    if cfg.degree < 1:
        fail("degree must be at least 1", "degree")
    if (cfg.nonlinear or cfg.linear) and cfg.degree < 2:
        fail("stabilization needs k >= 2; set nonlinear = false and linear = false", "degree")
    if cfg.degrees and min(cfg.degrees) < (2 if (cfg.nonlinear or cfg.linear) else 1):
        fail("every degree in 'degrees' must support the selected stabilization", "degrees")
    if cfg.regularization and not case.is_euler:
        fail(f"regularization applies to Euler cases only, not {cfg.case}", "regularization")
    if cfg.prandtl is not None:
        reg = cfg.regularization or case.regularization
        if not case.is_euler or reg != "guermond_popov":
            fail("P is only used with the guermond_popov regularization", "prandtl")
    if not cfg.nonlinear and any(getattr(cfg, a) is not None for a in ("c_rb", "c_max")):
        attr = "c_rb" if cfg.c_rb is not None else "c_max"
        fail("C_RB/C_max given but nonlinear stabilization is off", attr)
    if not cfg.linear and cfg.c_lin is not None:
        fail("C_lin given but linear stabilization is off", "c_lin")
    if cfg.dump_every < 0:
        fail("dump_every must be non-negative", "dump_every")
    if cfg.resolution is not None:
        if len(cfg.resolution) not in (1, case.dim) or min(cfg.resolution) < 2:
            fail("resolution needs >= 2 samples per direction", "resolution")
    if cfg.meshes is not None and len(cfg.meshes) < 2:
        fail("a convergence study needs at least two meshes", "meshes")


def serialize_config(cfg: RunConfig) -> str:
    """Text that parses back to an equal configuration."""
    by_section: dict[str, list[str]] = {s: [] for s in SECTIONS}
    defaults = {f.name: f.default for f in fields(RunConfig)}
    for key, (attr, section, _, fmt) in _KEYS.items():
        value = getattr(cfg, attr)
        if value is None or (attr in defaults and value == defaults[attr]
                             and attr not in ("case", "n_elements", "degree")):
            continue
        by_section[section].append(f"{key} = {fmt(value)}")
    out = []
    for section in SECTIONS:
        if by_section[section]:
            out.append(f"[{section}]")
            out.extend(by_section[section])
            out.append("")
    return "\n".join(out)


def resolved_config(cfg: RunConfig) -> str:
    """Configuration text with every case default written out."""
    case = cfg.case_definition()
    full = replace(cfg, dt=cfg.dt if cfg.dt is not None else case.dt,
                   t_final=cfg.t_final if cfg.t_final is not None else case.t_final,
                   ic_policy=cfg.ic_policy or case.ic_policy,
                   regularization=case.regularization if case.is_euler else None,
                   c_rb=case.constants.c_rb if cfg.nonlinear else None,
                   c_max=case.constants.c_max if cfg.nonlinear else None,
                   c_lin=case.constants.c_lin if cfg.linear else None,
                   prandtl=case.constants.prandtl
                   if case.regularization == "guermond_popov" else None)
    return serialize_config(full)
