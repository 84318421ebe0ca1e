"""Strict ``[section] key = value`` run configuration.

Reading goes through :mod:`configparser` (no interpolation, duplicate keys
and sections rejected); on top of that every key must be known, every value
must parse to its declared type and the assembled objects must satisfy their
own invariants. Problems are reported as ``ConfigError`` with the line
number of the offending entry.

Recognized sections and keys (defaults in brackets)::

    [grid]          n_points [1024], x_max [10.0], fd_order [4]
    [trap]          barrier_height [0.0] (inf = hard wall), barrier_width [0.5]
    [condensate]    N [100], g [0.0]
    [solver]        tol_energy [1e-10], tol_residual [1e-08], max_iters [200000], dt_imag [0.001]
    [groundstate]   mode [single] (single | dual | both)
    [sweep]         b_min [0.0], b_max [20.0], b_step [0.5], hard_wall [true], warm_start [true]
    [crossover]     b_lo [10.0], b_hi [20.0], tol [0.01]
    [interference]  mode [dual], n_runs [200], M [500], t [auto], overlap_target [0.9], k [auto],
                    concentration_threshold [0.9], uniform_factor [1.5], alpha [0.05],
                    write_positions [false]
    [output]        dir [condfrag_out], seed [0]
"""

from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass

from .energy import CondensateConfig
from .grid import Grid
from .potential import PotentialSpec

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "SCHEMA"]

AUTO = None


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""

    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        self.line = line
        self.source = source
        loc = f"{source}:{line}" if line is not None else source
        super().__init__(f"{loc}: {message}")


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _int(s: str) -> int:
    s = s.strip()
    if not re.fullmatch(r"[+-]?\d+", s):
        raise ValueError(f"expected an integer, got {s!r}")
    return int(s)


def _float(s: str) -> float:
    v = float(s)
    if math.isnan(v):
        raise ValueError("nan is not allowed")
    return v


def _opt_float(s: str):
    return AUTO if s.strip().lower() == "auto" else _float(s)


def _choice(*options):
    def parse(s: str) -> str:
        v = s.strip()
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {v!r}")
        return v

    return parse


def _text(s: str) -> str:
    v = s.strip()
    if not v:
        raise ValueError("empty value")
    return v


def _seed(s: str) -> int:
    v = _int(s)
    if not 0 <= v < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return v


# section -> key -> (parser, default)
SCHEMA = {
    "grid": {"n_points": (_int, 1024), "x_max": (_float, 10.0), "fd_order": (_int, 4)},
    "trap": {"barrier_height": (_float, 0.0), "barrier_width": (_float, 0.5)},
    "condensate": {"N": (_int, 100), "g": (_float, 0.0)},
    "solver": {
        "tol_energy": (_float, 1e-10),
        "tol_residual": (_float, 1e-8),
        "max_iters": (_int, 200_000),
        "dt_imag": (_float, 1e-3),
    },
    "groundstate": {"mode": (_choice("single", "dual", "both"), "single")},
    "sweep": {
        "b_min": (_float, 0.0),
        "b_max": (_float, 20.0),
        "b_step": (_float, 0.5),
        "hard_wall": (_bool, True),
        "warm_start": (_bool, True),
    },
    "crossover": {"b_lo": (_float, 10.0), "b_hi": (_float, 20.0), "tol": (_float, 1e-2)},
    "interference": {
        "mode": (_choice("single", "dual"), "dual"),
        "n_runs": (_int, 200),
        "M": (_int, 500),
        "t": (_opt_float, AUTO),
        "overlap_target": (_float, 0.9),
        "k": (_opt_float, AUTO),
        "concentration_threshold": (_float, 0.9),
        "uniform_factor": (_float, 1.5),
        "alpha": (_float, 0.05),
        "write_positions": (_bool, False),
    },
    "output": {"dir": (_text, "condfrag_out"), "seed": (_seed, 0)},
}


def _emit_value(v) -> str:
    if v is AUTO:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration; ``values[section][key]`` holds typed values."""

    values: dict
    source: str = "<config>"

    def __getitem__(self, section):
        return self.values[section]

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.values == other.values

    def __hash__(self):
        return hash(self.emit())

    def emit(self) -> str:
        """Canonical text: every section and key in schema order."""
        out = []
        for section, keys in SCHEMA.items():
            out.append(f"[{section}]\n")
            for key in keys:
                out.append(f"{key} = {_emit_value(self.values[section][key])}\n")
            out.append("\n")
        return "".join(out)

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.emit().encode("utf-8")).hexdigest()

    def with_overrides(self, **changes) -> "RunConfig":
        """Copy with ``section__key=value`` replacements (used for CLI flags)."""
        vals = {s: dict(kv) for s, kv in self.values.items()}
        for name, v in changes.items():
            section, _, key = name.partition("__")
            if section not in SCHEMA or key not in SCHEMA[section]:
                raise ConfigError(f"unknown setting {section}.{key}", source=self.source)
            vals[section][key] = v
        cfg = RunConfig(vals, self.source)
        cfg.validate()
        return cfg

    # typed views

    def grid(self) -> Grid:
        g = self.values["grid"]
        return Grid.symmetric(g["x_max"], g["n_points"], g["fd_order"])

    def potential_spec(self) -> PotentialSpec:
        t = self.values["trap"]
        return PotentialSpec.for_barrier(t["barrier_height"], t["barrier_width"])

    def condensate(self) -> CondensateConfig:
        c, s = self.values["condensate"], self.values["solver"]
        return CondensateConfig(
            N=c["N"],
            g=c["g"],
            tol_energy=s["tol_energy"],
            tol_residual=s["tol_residual"],
            max_iters=s["max_iters"],
            dt_imag=s["dt_imag"],
        )

    def barrier_values(self) -> list:
        sw = self.values["sweep"]
        n = int(math.floor((sw["b_max"] - sw["b_min"]) / sw["b_step"] + 1e-9)) + 1
        vals = [sw["b_min"] + i * sw["b_step"] for i in range(n)]
        if sw["hard_wall"]:
            vals.append(math.inf)
        return vals

    def validate(self, lines: dict | None = None):
        """Check cross-field invariants by building the typed objects."""
        lines = lines or {}

        def fail(section, key, msg):
            raise ConfigError(f"[{section}] {key}: {msg}", lines.get((section, key)), self.source)

        c, so = self.values["condensate"], self.values["solver"]
        if not (c["g"] >= 0 and math.isfinite(c["g"])):
            fail("condensate", "g", "must be finite and >= 0")
        for key in ("tol_energy", "tol_residual", "dt_imag"):
            if not so[key] > 0:
                fail("solver", key, "must be > 0")
        if so["max_iters"] < 1:
            fail("solver", "max_iters", "must be >= 1")
        checks = [
            ("grid", "n_points", self.grid),
            ("trap", "barrier_height", self.potential_spec),
            ("condensate", "N", self.condensate),
        ]
        for section, key, build in checks:
            try:
                build()
            except ValueError as exc:
                fail(section, key, str(exc))
        sw = self.values["sweep"]
        if not (math.isfinite(sw["b_min"]) and math.isfinite(sw["b_max"])):
            fail("sweep", "b_max", "sweep range must be finite (use hard_wall = true for the infinite barrier)")
        if sw["b_min"] < 0 or sw["b_max"] < sw["b_min"]:
            fail("sweep", "b_max", "need 0 <= b_min <= b_max")
        if not sw["b_step"] > 0:
            fail("sweep", "b_step", "must be > 0")
        cr = self.values["crossover"]
        if not (0 <= cr["b_lo"] < cr["b_hi"] < math.inf):
            fail("crossover", "b_hi", "need finite 0 <= b_lo < b_hi")
        if not cr["tol"] > 0:
            fail("crossover", "tol", "must be > 0")
        it = self.values["interference"]
        if it["n_runs"] < 1:
            fail("interference", "n_runs", "must be >= 1")
        if it["M"] < 0:
            fail("interference", "M", "must be >= 0")
        if it["t"] is not AUTO and not it["t"] > 0:
            fail("interference", "t", "must be > 0 or auto")
        if it["k"] is not AUTO and not it["k"] > 0:
            fail("interference", "k", "must be > 0 or auto")
        if not 0 < it["overlap_target"] < 1:
            fail("interference", "overlap_target", "must be in (0, 1)")
        if not 0 < it["alpha"] < 1:
            fail("interference", "alpha", "must be in (0, 1)")
        if not 0 < it["concentration_threshold"] <= 1:
            fail("interference", "concentration_threshold", "must be in (0, 1]")
        if not it["uniform_factor"] > 0:
            fail("interference", "uniform_factor", "must be > 0")


def _line_index(text: str) -> dict:
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    index, section = {}, None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.fullmatch(r"\[([^\]]*)\]", line)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), lineno)
            continue
        key = re.split(r"[=:]", line, maxsplit=1)[0].strip()
        index.setdefault((section, key), lineno)
    return index


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse configuration text; missing keys take their defaults."""
    parser = configparser.ConfigParser(interpolation=None, strict=True, delimiters=("=",), comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno, source) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno, source) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any [section]", exc.lineno, source) from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"cannot parse {line.strip()!r} (expected 'key = value')", lineno, source) from None
    lines = _line_index(text)
    values = {s: {k: default for k, (_, default) in keys.items()} for s, keys in SCHEMA.items()}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", lines.get((section, None)), source)
        for key, raw in parser.items(section):
            where = lines.get((section, key))
            if key not in SCHEMA[section]:
                known = ", ".join(SCHEMA[section])
                raise ConfigError(f"unknown key {key!r} in [{section}] (known: {known})", where, source)
            parse = SCHEMA[section][key][0]
            try:
                values[section][key] = parse(raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}", where, source) from None
    cfg = RunConfig(values, source)
    cfg.validate(lines)
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=str(path)) from None
    return parse_config(text, source=str(path))
