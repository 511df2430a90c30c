"""Flat `key = value` run configuration.

Lines hold one assignment each; `#` starts a comment; blank lines are
skipped.  Unknown keys are hard errors so typos cannot silently change
a run.  Scenario-specific keys are namespaced (`shell.mass`,
`core.radius`, `kurth.k`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError

__all__ = ["RunConfig", "parse_config", "load_config", "format_config"]


def _parse_bool(text):
    lowered = text.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_float_list(text):
    text = text.strip()
    if not text:
        return ()
    return tuple(float(part) for part in text.split(","))


_SCHEMA = {
    "scenario": str,
    "seed": int,
    "t_end": float,
    "output_cadence": float,
    "dt_initial": float,
    "dt_safety": float,
    "reflection": _parse_bool,
    "r_grid": _parse_float_list,
    "q_list": _parse_float_list,
    "n_bins": int,
    "snapshot_times": _parse_float_list,
    "shell.mass": float,
    "shell.r_inner": float,
    "shell.r_outer": float,
    "shell.w_min": float,
    "shell.w_max": float,
    "shell.ell_min": float,
    "shell.ell_max": float,
    "shell.n": int,
    "core.mass": float,
    "core.radius": float,
    "core.n": int,
    "kurth.k": float,
}

_SCENARIOS = ("shell", "core", "shell_plus_core", "kurth")

_REQUIRED = {
    "shell": ("shell.mass", "shell.r_inner", "shell.r_outer", "shell.w_min",
              "shell.w_max", "shell.n"),
    "core": ("core.mass", "core.radius", "core.n"),
    "shell_plus_core": ("shell.mass", "shell.r_inner", "shell.r_outer",
                        "shell.w_min", "shell.w_max", "shell.n",
                        "core.mass", "core.radius", "core.n"),
    "kurth": ("kurth.k",),
}

_DEFAULTS = {
    "seed": 0,
    "output_cadence": 1.0,
    "dt_initial": 0.1,
    "dt_safety": 0.1,
    "reflection": True,
    "r_grid": (),
    "q_list": (5.0 / 3.0,),
    "n_bins": 0,
    "snapshot_times": (),
    "shell.ell_min": 0.0,
    "shell.ell_max": 0.0,
}


@dataclass
class RunConfig:
    """Validated run description; `values` keeps the raw key map."""

    scenario: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def replace(self, **overrides):
        merged = dict(self.values)
        for key, value in overrides.items():
            merged[key] = value
        return RunConfig(merged["scenario"], merged)


def parse_config(text):
    """Parse and validate configuration text into a RunConfig."""
    raw = {}
    lines = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("expected `key = value`", line=lineno)
        key, _, value = body.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}", line=lineno)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r}", line=lineno)
        try:
            raw[key] = _SCHEMA[key](value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", line=lineno)
        lines[key] = lineno

    if "scenario" not in raw:
        raise ConfigError("missing required key 'scenario'")
    scenario = raw["scenario"]
    if scenario not in _SCENARIOS:
        raise ConfigError(
            f"scenario must be one of {', '.join(_SCENARIOS)}",
            line=lines.get("scenario"),
        )
    if "t_end" not in raw:
        raise ConfigError("missing required key 't_end'")
    for key in _REQUIRED[scenario]:
        if key not in raw and key not in _DEFAULTS:
            raise ConfigError(f"scenario {scenario!r} requires key {key!r}")

    values = dict(_DEFAULTS)
    values.update(raw)
    values["scenario"] = scenario

    def bad(key, message):
        return ConfigError(f"{key}: {message}", line=lines.get(key))

    if values["t_end"] < 0.0:
        raise bad("t_end", "must be >= 0")
    if values["output_cadence"] <= 0.0:
        raise bad("output_cadence", "must be positive")
    if values["dt_initial"] <= 0.0:
        raise bad("dt_initial", "must be positive")
    if not 0.0 < values["dt_safety"] <= 1.0:
        raise bad("dt_safety", "must be in (0, 1]")
    if values["n_bins"] < 0:
        raise bad("n_bins", "must be >= 0 (0 selects ceil(sqrt(N)))")
    if any(q < 1.0 for q in values["q_list"]):
        raise bad("q_list", "exponents must be >= 1")
    if any(radius <= 0.0 for radius in values["r_grid"]):
        raise bad("r_grid", "ball radii must be positive")
    return RunConfig(scenario, values)


def load_config(path):
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read())


def format_config(config: RunConfig):
    """Canonical text form (used by manifests), sorted by key."""
    parts = []
    for key in sorted(config.values):
        value = config.values[key]
        if isinstance(value, tuple):
            rendered = ",".join(repr(float(x)) for x in value)
        elif isinstance(value, bool):
            rendered = "true" if value else "false"
        elif isinstance(value, float):
            rendered = repr(value)
        else:
            rendered = str(value)
        parts.append(f"{key} = {rendered}")
    return "\n".join(parts) + "\n"
