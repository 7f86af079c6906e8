"""Run configuration: a flat ``key = value`` format with ``[section]`` headers.

Sections are ``model`` (required: every normalized coefficient), ``physical``
(optional, all-or-nothing), ``integrate``, ``analysis`` and ``output``.
``#`` starts a comment. Unknown sections and keys are rejected with their
line number.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

from .errors import ConfigError, ParameterError
from .integrator import IntegrationConfig
from .model import DimlessParams, PhysicalParams

__all__ = ["RunConfig", "parse_config", "load_config", "format_config", "apply_override",
           "builtin_config_names"]

SECTIONS = ("model", "physical", "integrate", "analysis", "output")


def _bool(text):
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _pairs(text):
    out = []
    for item in text.split(","):
        if not item.strip():
            continue
        a, b = item.split(":")
        out.append((float(a), float(b)))
    return tuple(out)


def _opt_float(text):
    return float(text) if text.strip() else None


# key -> (parser, default)
ANALYSIS_KEYS = {
    "variable": (str.strip, "Y"),
    "tol": (float, 1e-2),
    "target": (str.strip, ""),
    "Rload": (float, 1.0),
    "sigma1_min": (_opt_float, None),
    "sigma1_max": (_opt_float, None),
    "n_points": (int, 0),  # 0 keeps the analysis default
    "param": (str.strip, "E"),
    "grid_min": (float, 0.0),
    "grid_max": (float, 5.0),
    "grid_n": (int, 400),
    "reseed": (_bool, False),
    "values": (_floats, ()),
    "sweep_analysis": (str.strip, "freq_internal"),
    "pairs": (_pairs, ((0.0, 0.0), (0.2, 0.15), (0.5, 0.375), (0.8, 0.6))),
    "audit_stencil": (int, 4),
    "workers": (int, 0),  # 0 defers to MAGLEV_THREADS
}

OUTPUT_KEYS = {
    "csv": (str.strip, ""),
    "figure": (str.strip, ""),
}

INTEGRATE_KEYS = {
    "steps_per_period": (int, 200),
    "transient_periods": (int, 400),
    "record_periods": (int, 100),
    "initial_state": (_floats, (0.0,) * 6),
}

MODEL_KEYS = DimlessParams.field_names()
PHYSICAL_KEYS = tuple(f.name for f in fields(PhysicalParams))


@dataclass(frozen=True)
class RunConfig:
    model: DimlessParams
    physical: PhysicalParams | None = None
    integrate: IntegrationConfig = field(default_factory=IntegrationConfig)
    analysis: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)


def _format_value(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            return ", ".join(f"{a!r}:{b!r}" for a, b in v)
        return ", ".join(_format_value(x) for x in v)
    return str(v)


def format_config(cfg: RunConfig) -> str:
    """Canonical text of a config with every default filled in.

    ``parse_config(format_config(c)) == c`` for every parsed config.
    """
    lines = ["[model]"]
    lines += [f"{k} = {getattr(cfg.model, k)!r}" for k in MODEL_KEYS]
    if cfg.physical is not None:
        lines += ["", "[physical]"]
        lines += [f"{k} = {float(getattr(cfg.physical, k))!r}" for k in PHYSICAL_KEYS]
    ic = cfg.integrate
    lines += ["", "[integrate]",
              f"steps_per_period = {ic.steps_per_period}",
              f"transient_periods = {ic.transient_periods}",
              f"record_periods = {ic.record_periods}",
              f"initial_state = {_format_value(ic.initial_state)}",
              "", "[analysis]"]
    lines += [f"{k} = {_format_value(cfg.analysis[k])}" for k in ANALYSIS_KEYS]
    lines += ["", "[output]"]
    lines += [f"{k} = {cfg.output[k]}" for k in OUTPUT_KEYS]
    return "\n".join(line.rstrip() for line in lines) + "\n"


def _tokenize(text):
    """Yield ``(section, key, value, line, value_column)`` entries."""
    section = None
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        indent = len(line) - len(line.lstrip())
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError("unterminated section header", lineno, indent + 1)
            section = stripped[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]; expected one of {SECTIONS}",
                                  lineno, indent + 2)
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno, indent + 1)
        if section is None:
            raise ConfigError("key outside of any [section]", lineno, indent + 1)
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError("empty key", lineno, indent + 1)
        if (section, key) in seen:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", lineno, indent + 1, key)
        seen.add((section, key))
        col = line.index("=") + 2 + (len(value) - len(value.lstrip()))
        yield section, key, value.strip(), lineno, col


def _convert(parser, key, value, lineno, col):
    try:
        return parser(value)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}", lineno, col, key) from None


def parse_config(text: str) -> RunConfig:
    raw = {s: {} for s in SECTIONS}
    where = {}
    for section, key, value, lineno, col in _tokenize(text):
        raw[section][key] = value
        where[(section, key)] = (lineno, col)

    def unknown(section, allowed):
        for key in raw[section]:
            if key not in allowed:
                line, col = where[(section, key)]
                raise ConfigError(f"unknown key {key!r} in [{section}]", line, 1, key)

    unknown("model", MODEL_KEYS)
    unknown("physical", PHYSICAL_KEYS)
    unknown("integrate", INTEGRATE_KEYS)
    unknown("analysis", ANALYSIS_KEYS)
    unknown("output", OUTPUT_KEYS)

    def section_values(section, spec):
        out = {}
        for key, (parser, default) in spec.items():
            if key in raw[section]:
                out[key] = _convert(parser, key, raw[section][key], *where[(section, key)])
            else:
                out[key] = default
        return out

    def build(cls, section, values):
        try:
            return cls(**values)
        except ParameterError as exc:
            # messages lead with the offending field; point at it when it was given
            name = str(exc).split(" ", 1)[0]
            line, col = where.get((section, name), (None, None))
            raise ConfigError(f"[{section}] {exc}", line, col, name if line else None) from None

    model_vals = section_values("model", {k: (float, None) for k in MODEL_KEYS})
    phys_vals = section_values("physical", {k: (float, None) for k in PHYSICAL_KEYS})
    integ = section_values("integrate", INTEGRATE_KEYS)
    analysis = section_values("analysis", ANALYSIS_KEYS)
    output = section_values("output", OUTPUT_KEYS)

    missing = [f"model.{k}" for k in MODEL_KEYS if k not in raw["model"]]
    if raw["physical"]:
        missing += [f"physical.{k}" for k in PHYSICAL_KEYS if k not in raw["physical"]]
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))

    model = build(DimlessParams, "model", model_vals)
    physical = build(PhysicalParams, "physical", phys_vals) if raw["physical"] else None
    if len(integ["initial_state"]) != 6:
        line = where.get(("integrate", "initial_state"), (None, None))
        raise ConfigError("initial_state needs 6 comma-separated values", *line, key="initial_state")
    integrate = build(IntegrationConfig, "integrate", integ)
    return RunConfig(model=model, physical=physical, integrate=integrate,
                     analysis=analysis, output=output)


def apply_override(text: str, assignment: str) -> str:
    """Return config text with ``section.key=value`` set (appended last, so it wins)."""
    if "=" not in assignment or "." not in assignment.split("=", 1)[0]:
        raise ConfigError(f"override must look like section.key=value, got {assignment!r}")
    target, value = assignment.split("=", 1)
    section, key = target.strip().split(".", 1)
    kept, current = [], None
    for raw in text.splitlines():
        s = raw.split("#", 1)[0].strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
        elif current == section and "=" in s and s.split("=", 1)[0].strip() == key:
            continue
        kept.append(raw)
    kept += [f"[{section}]", f"{key} = {value.strip()}"]
    return "\n".join(kept) + "\n"


def builtin_config_names() -> list[str]:
    root = resources.files("maglev") / "data"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def load_config(name_or_path) -> str:
    """Text of a config file, or of a shipped config given by bare name."""
    path = Path(name_or_path)
    if path.exists():
        return path.read_text(encoding="utf-8")
    if str(name_or_path) in builtin_config_names():
        return (resources.files("maglev") / "data" / f"{name_or_path}.cfg").read_text(
            encoding="utf-8")
    raise ConfigError(f"no config file {str(name_or_path)!r} "
                      f"(shipped: {', '.join(builtin_config_names())})")
