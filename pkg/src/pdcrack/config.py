"""Run configuration: INI-style sections, SI units, strict key checking.

Every section and key is known in advance; anything else is rejected so a
typo never silently falls back to a default. ``serialize_config`` and
``parse_config`` round-trip losslessly (floats are written with ``repr``).
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import MISSING, asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .constitutive import MaterialConstants
from .damage import DamageLaw
from .discretization import DomainConfig, PreNotch
from .dynamics import LoadSpec


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key path."""


@dataclass(frozen=True)
class DomainSection:
    length: float
    height: float
    spacing: float
    horizon: float


@dataclass(frozen=True)
class MaterialSection:
    youngs_modulus: float
    poisson_ratio: float
    density: float
    fracture_energy: float


@dataclass(frozen=True)
class ModelSection:
    r_break_factor: float = 3.0
    profile: str = "exponential"
    damage_form: int = 2
    degradation_width: float = 0.0


@dataclass(frozen=True)
class LoadSection:
    magnitude: float = 0.0
    divide_by_epsilon: bool = False


@dataclass(frozen=True)
class TimeSection:
    dt: float = 5e-7
    t_end: float = 9e-4
    snapshot_every: int = 100
    ledger_every: int = 10


@dataclass(frozen=True)
class NotchSection:
    x0: float = 0.0
    y0: float = 0.0
    x1: float = 0.0
    y1: float = 0.0
    enabled: bool = True


@dataclass(frozen=True)
class OutputSection:
    directory: str = "out"
    formats: tuple[str, ...] = ("csv", "png")
    phi_threshold: float = 0.35


@dataclass(frozen=True)
class RunConfig:
    domain: DomainSection
    material: MaterialSection
    model: ModelSection = field(default_factory=ModelSection)
    load: LoadSection = field(default_factory=LoadSection)
    time: TimeSection = field(default_factory=TimeSection)
    notch: NotchSection = field(default_factory=NotchSection)
    output: OutputSection = field(default_factory=OutputSection)

    def domain_config(self) -> DomainConfig:
        return DomainConfig(**asdict(self.domain))

    def material_constants(self) -> MaterialConstants:
        return MaterialConstants(**asdict(self.material))

    def prenotch(self) -> PreNotch | None:
        n = self.notch
        if not n.enabled:
            return None
        return PreNotch(n.x0, n.y0, n.x1, n.y1)

    def load_spec(self) -> LoadSpec:
        return LoadSpec(self.load.magnitude, self.load.divide_by_epsilon)

    def damage_law(self, r_plus: float) -> DamageLaw:
        return DamageLaw(r_plus=r_plus, form=self.model.damage_form, width=self.model.degradation_width)

    @property
    def n_steps(self) -> int:
        return int(round(self.time.t_end / self.time.dt))

    def with_overrides(self, **sections: dict[str, Any]) -> "RunConfig":
        """Return a copy with ``section={key: value}`` replacements, re-validated."""
        new = self
        for name, values in sections.items():
            new = replace(new, **{name: replace(getattr(new, name), **values)})
        validate(new)
        return new

    def digest(self) -> str:
        """SHA-256 of the serialized config, ignoring ``output.directory``.

        Where a run is written does not change its results, so two runs of
        the same physics produce byte-identical files.
        """
        anon = replace(self, output=replace(self.output, directory=""))
        return hashlib.sha256(serialize_config(anon).encode()).hexdigest()


_SECTIONS = {
    "domain": DomainSection,
    "material": MaterialSection,
    "model": ModelSection,
    "load": LoadSection,
    "time": TimeSection,
    "notch": NotchSection,
    "output": OutputSection,
}
_REQUIRED = ("domain", "material")


def _convert(path: str, raw: str, kind) -> Any:
    raw = raw.strip()
    try:
        if kind in (float, "float"):
            return float(raw)
        if kind in (int, "int"):
            return int(raw)
        if kind in (bool, "bool"):
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if kind in ("tuple[str, ...]",):
            return tuple(p.strip() for p in raw.split(",") if p.strip())
        return raw
    except ValueError:
        raise ConfigError(f"{path}: cannot parse {raw!r} as {kind}") from None


def _section_from(name: str, items: dict[str, str]):
    cls = _SECTIONS[name]
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(items) - set(known))
    if unknown:
        raise ConfigError(f"{name}.{unknown[0]}: unknown key (allowed: {', '.join(known)})")
    kwargs = {}
    for key, raw in items.items():
        kwargs[key] = _convert(f"{name}.{key}", raw, known[key].type)
    missing = [
        k for k, f in known.items() if k not in kwargs and f.default is MISSING and f.default_factory is MISSING
    ]
    if missing:
        raise ConfigError(f"{name}.{missing[0]}: required key missing (required: {', '.join(missing)})")
    return cls(**kwargs)


def validate(cfg: RunConfig) -> None:
    d = cfg.domain
    for key in ("length", "height", "spacing", "horizon"):
        val = getattr(d, key)
        if not (math.isfinite(val) and val > 0):
            raise ConfigError(f"domain.{key}: must be positive, got {val}")
    if d.horizon < 2.0 * d.spacing * (1 - 1e-9):
        raise ConfigError(f"domain.horizon: horizon under-resolved ({d.horizon} < 2 * spacing = {2 * d.spacing})")
    m = cfg.material
    for key in ("youngs_modulus", "density", "fracture_energy"):
        if not getattr(m, key) > 0:
            raise ConfigError(f"material.{key}: must be positive")
    if not 0.0 < m.poisson_ratio < 0.5:
        raise ConfigError("material.poisson_ratio: must lie in (0, 0.5)")
    if cfg.model.damage_form not in (1, 2):
        raise ConfigError(f"model.damage_form: must be 1 or 2, got {cfg.model.damage_form}")
    if cfg.model.profile != "exponential":
        raise ConfigError(f"model.profile: only 'exponential' is supported, got {cfg.model.profile!r}")
    if not cfg.model.r_break_factor >= 1.0:
        raise ConfigError("model.r_break_factor: must be >= 1 (break at or beyond r_c)")
    if cfg.model.degradation_width < 0:
        raise ConfigError("model.degradation_width: must be non-negative")
    t = cfg.time
    if not t.dt > 0:
        raise ConfigError("time.dt: must be positive")
    if not t.t_end >= 0:
        raise ConfigError("time.t_end: must be non-negative")
    if t.snapshot_every < 1:
        raise ConfigError("time.snapshot_every: must be >= 1")
    if t.ledger_every < 1:
        raise ConfigError("time.ledger_every: must be >= 1")
    bad = set(cfg.output.formats) - {"csv", "png"}
    if bad:
        raise ConfigError(f"output.formats: unknown format {sorted(bad)[0]!r} (allowed: csv, png)")
    if not 0.0 < cfg.output.phi_threshold <= 1.0:
        raise ConfigError("output.phi_threshold: must lie in (0, 1]")


def parse_config_string(text: str, source: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: malformed configuration: {exc}") from None
    unknown = [s for s in parser.sections() if s not in _SECTIONS]
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown section (allowed: {', '.join(_SECTIONS)})")
    missing = [s for s in _REQUIRED if s not in parser]
    if missing:
        required = [f"{s}.{f.name}" for s in _REQUIRED for f in fields(_SECTIONS[s])]
        raise ConfigError(f"{missing[0]}: required section missing (required keys: {', '.join(required)})")
    built = {name: _section_from(name, dict(parser[name])) for name in _SECTIONS if name in parser}
    cfg = RunConfig(**built)
    validate(cfg)
    return cfg


def parse_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: configuration file not found")
    return parse_config_string(path.read_text(), source=str(path))


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(value)
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for name in _SECTIONS:
        section = getattr(cfg, name)
        lines.append(f"[{name}]")
        for f in fields(section):
            lines.append(f"{f.name} = {_format(getattr(section, f.name))}")
        lines.append("")
    return "\n".join(lines)


RECIPE_DIR = Path(__file__).with_name("recipes")


def resolve_config_path(name: str | Path) -> Path:
    """Accept a path or the bare name of a bundled recipe (``straight.cfg``)."""
    p = Path(name)
    if p.is_file():
        return p
    bundled = RECIPE_DIR / p.name
    if bundled.is_file():
        return bundled
    return p
