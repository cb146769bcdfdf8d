"""Experiment configuration: sectioned key-value text (INI syntax)."""
from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace
from pathlib import Path
import re


class ConfigError(ValueError):
    pass


INITIAL_KINDS = ("tanh_profile", "random_perturbation", "from_file")
REFERENCE_KINDS = ("zero", "constant", "from_file")
FEEDBACK_KINDS = ("pointwise", "cell_average", "weighted", "nonlocal")


@dataclass(frozen=True)
class ExperimentConfig:
    # [discretization]
    dim: int = 2
    modes: int = 32
    grid: int | None = None
    # [model]
    nu: float = 0.01
    R: float | None = None
    tau: float = 1e-3
    t_end: float = 1.0
    # [feedback]
    feedback_kind: str = "pointwise"
    M: int = 0
    lam: float = 0.0
    omega_fraction: float = 1.0
    beta_file: str | None = None
    # [initial]
    initial: str = "tanh_profile"
    seed: int = 0
    amplitude: float = 0.0
    initial_base: str = "reference"
    initial_file: str | None = None
    # [reference]
    reference: str = "zero"
    reference_value: float = 0.0
    reference_file: str | None = None
    forcing: str = "reference"
    # [output]
    output_dir: str = "run"
    snapshot_times: tuple[float, ...] = ()
    linear_solver: str = "auto"

    def validate(self) -> "ExperimentConfig":
        checks = [
            (self.dim in (1, 2), "dim must be 1 or 2"),
            (self.modes >= 1, "modes must be >= 1"),
            (self.nu > 0, "nu must be positive"),
            (self.R is None or self.R >= 0, "R must be nonnegative"),
            (self.tau > 0, "tau must be positive"),
            (self.t_end > 0, "t_end must be positive"),
            (self.feedback_kind in FEEDBACK_KINDS, f"feedback kind must be one of {FEEDBACK_KINDS}"),
            (self.M >= 0, "M must be >= 0"),
            (self.lam >= 0, "lambda must be >= 0"),
            (0 < self.omega_fraction <= 1, "omega_fraction must lie in (0, 1]"),
            (self.initial in INITIAL_KINDS, f"initial kind must be one of {INITIAL_KINDS}"),
            (self.initial_base in ("reference", "tanh_profile"), "initial base must be reference or tanh_profile"),
            (self.initial != "from_file" or self.initial_file, "initial file is required"),
            (self.reference in REFERENCE_KINDS, f"reference kind must be one of {REFERENCE_KINDS}"),
            (self.reference != "from_file" or self.reference_file, "reference file is required"),
            (self.forcing in ("reference", "zero"), "forcing must be reference or zero"),
            (self.linear_solver in ("auto", "dense", "krylov"), "linear_solver must be auto, dense or krylov"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        return self


# (section, key, attribute, type)
SCHEMA = [
    ("discretization", "dim", "dim", int),
    ("discretization", "modes", "modes", int),
    ("discretization", "grid", "grid", int),
    ("model", "nu", "nu", float),
    ("model", "R", "R", float),
    ("model", "tau", "tau", float),
    ("model", "t_end", "t_end", float),
    ("feedback", "kind", "feedback_kind", str),
    ("feedback", "M", "M", int),
    ("feedback", "lambda", "lam", float),
    ("feedback", "omega_fraction", "omega_fraction", float),
    ("feedback", "beta_file", "beta_file", str),
    ("initial", "kind", "initial", str),
    ("initial", "seed", "seed", int),
    ("initial", "amplitude", "amplitude", float),
    ("initial", "base", "initial_base", str),
    ("initial", "file", "initial_file", str),
    ("reference", "kind", "reference", str),
    ("reference", "value", "reference_value", float),
    ("reference", "file", "reference_file", str),
    ("reference", "forcing", "forcing", str),
    ("output", "directory", "output_dir", str),
    ("output", "snapshot_times", "snapshot_times", tuple),
    ("output", "linear_solver", "linear_solver", str),
]
SECTIONS = list(dict.fromkeys(s for s, *_ in SCHEMA))


def _line_index(text: str) -> dict[tuple[str, str], int]:
    index, section = {}, None
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            section = m.group(1).strip()
            index[(section, None)] = lineno
        elif section and "=" in s and not s.startswith(("#", ";")):
            index[(section, s.split("=", 1)[0].strip())] = lineno
    return index


def _convert(raw: str, typ):
    if typ is tuple:
        return tuple(float(v) for v in raw.replace(" ", "").split(",") if v)
    return typ(raw)


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse config text; every error names the offending line."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    lines = _line_index(text)
    known = {(s, k): (attr, typ) for s, k, attr, typ in SCHEMA}
    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"{source}:{lines.get((section, None), '?')}: unknown section [{section}]")
        for key, raw in parser.items(section):
            where = f"{source}:{lines.get((section, key), '?')}"
            if (section, key) not in known:
                raise ConfigError(f"{where}: unknown key {key!r} in [{section}]")
            attr, typ = known[(section, key)]
            raw = raw.strip()
            if raw == "":
                continue
            try:
                values[attr] = _convert(raw, typ)
            except ValueError:
                raise ConfigError(f"{where}: cannot parse {key} = {raw!r}") from None
    try:
        return ExperimentConfig(**values).validate()
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path))


def _format(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_to_text(cfg: ExperimentConfig) -> str:
    """Normalized serialization: fixed section/key order, unset optional keys omitted."""
    out = []
    for section in SECTIONS:
        out.append(f"[{section}]")
        for s, key, attr, _ in SCHEMA:
            if s != section:
                continue
            value = getattr(cfg, attr)
            if value is None:
                continue
            out.append(f"{key} = {_format(value)}")
        out.append("")
    return "\n".join(out)


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    names = {f.name for f in fields(ExperimentConfig)}
    bad = set(kw) - names
    if bad:
        raise ConfigError(f"unknown config fields {sorted(bad)}")
    return replace(cfg, **kw).validate()
