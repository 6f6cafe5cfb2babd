"""Run configuration: a flat ``section.key = value`` text file.

Blank lines and ``#`` comments are ignored. Unknown keys are rejected, and the
effective configuration can be dumped back in the same format.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .encoder import EncoderError, EncoderSpec


class ConfigError(ValueError):
    pass


@dataclass
class MemoryConfig:
    n: int = 100
    gamma_w: float = 5.0
    gamma_r: float = 5.0
    seed: int = 0


@dataclass
class ShortTermConfig:
    max_epochs: int = 10
    acc_threshold: float = 0.98
    patience: int = 3


@dataclass
class OnlineConfig:
    timing: bool = False
    density_size: tuple[int, int] | None = None  # (W, H); defaults to the encoder resize


@dataclass
class EvalConfig:
    deltas: tuple[float, ...] = (1.0, 2.0, 3.0)
    category_threshold: int = 1
    stride: int = 1
    pessimistic: bool = False


@dataclass
class PathsConfig:
    input: str | None = None
    output: str | None = None
    memory_in: str | None = None
    memory_out: str | None = None
    labels: str | None = None
    density_out: str | None = None


@dataclass
class RunConfig:
    memory: MemoryConfig = field(default_factory=MemoryConfig)
    encoder: EncoderSpec = field(default_factory=EncoderSpec)
    short_term: ShortTermConfig = field(default_factory=ShortTermConfig)
    online: OnlineConfig = field(default_factory=OnlineConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    def validate(self) -> RunConfig:
        m = self.memory
        if m.n < 1:
            raise ConfigError("memory.n must be >= 1")
        if not (m.gamma_w > 0 and m.gamma_r > 0):
            raise ConfigError("memory.gamma_w and memory.gamma_r must be positive")
        st = self.short_term
        if st.max_epochs < 1 or st.patience < 1:
            raise ConfigError("short_term.max_epochs and short_term.patience must be >= 1")
        if not self.eval.deltas or min(self.eval.deltas) < 1:
            raise ConfigError("eval.deltas must be a nonempty list of values >= 1")
        if self.eval.stride < 1 or self.eval.category_threshold < 1:
            raise ConfigError("eval.stride and eval.category_threshold must be >= 1")
        try:
            self.encoder.validate()
        except EncoderError as exc:
            raise ConfigError(f"encoder: {exc}") from exc
        return self


def _parse_size(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise ValueError(f"expected WxH, got {text!r}")
    return int(parts[0]), int(parts[1])


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_value(annotation: str, text: str):
    text = text.strip()
    if annotation.startswith("str"):
        return None if text in ("", "none") else text
    if annotation.startswith("tuple[int, int]"):
        return None if text in ("", "none") else _parse_size(text)
    if annotation.startswith("tuple[float"):
        return tuple(float(v) for v in text.split(",") if v.strip())
    if annotation == "bool":
        return _parse_bool(text)
    if annotation == "int":
        return int(text)
    if annotation == "float":
        return float(text)
    raise ValueError(f"unsupported field type {annotation}")


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple) and len(value) == 2 and all(isinstance(v, int) for v in value):
        return f"{value[0]}x{value[1]}"
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _sections(cfg: RunConfig):
    for f in dataclasses.fields(cfg):
        yield f.name, getattr(cfg, f.name)


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    values: dict[str, dict[str, object]] = {}
    base = base or RunConfig()
    known = {name: {f.name: f for f in dataclasses.fields(section)} for name, section in _sections(base)}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        section, _, name = key.partition(".")
        if section not in known or name not in known[section]:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values.setdefault(section, {})[name] = _parse_value(str(known[section][name].type), value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {key}: {exc}") from exc
    updates = {name: dataclasses.replace(section, **values.get(name, {})) for name, section in _sections(base)}
    return RunConfig(**updates).validate()


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig().validate()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for name, section in _sections(cfg):
        for f in dataclasses.fields(section):
            lines.append(f"{name}.{f.name} = {_format_value(getattr(section, f.name))}")
    return "\n".join(lines) + "\n"
