"""Run configuration: a small INI-style dialect.

    # comment
    [section]
    key = 1.5            # float
    key = 3              # int
    key = "text"         # string
    key = [0.1, 0.01]    # list of numbers (or of strings)
    key = true           # bool

Unknown sections or keys, type mismatches and violated invariants are
reported with the offending line number.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any, Optional

from .fields import FnSpec, Grid, ProblemSpec


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        self.line, self.key = line, key
        where = f"line {line}: " if line is not None else ""
        what = f"key '{key}': " if key else ""
        super().__init__(f"{where}{what}{message}")


# section -> key -> (type, default); None default means "unset"
SCHEMA = {
    "problem": {
        "g": ("str", None), "k": ("int", 1), "c": ("floats", None), "omega": ("float", 1.0),
        "f": ("str", "zero"), "f_k": ("int", 1), "f_c": ("floats", None),
        "f_omega": ("float", 1.0), "T": ("float", 1.0), "d": ("int", 1),
    },
    "grid": {"lo": ("floats", [-4.0]), "hi": ("floats", [4.0]), "n": ("ints", [801])},
    "sweep": {
        "eps": ("floats", None), "eps_start": ("float", None), "eps_factor": ("float", 0.5),
        "eps_count": ("int", None), "x": ("floats", None), "t": ("float", 0.0),
        "backend": ("str", "auto"),
    },
    "mc": {
        "N": ("int", 10_000), "M": ("int", 200), "seed": ("int", 0),
        "drift": ("str", "optimal_feedback"), "delta": ("float", None), "eps": ("float", 0.05),
        "tau": ("float", None), "k_nn": ("int", 3),
    },
    "output": {"directory": ("str", "out"), "formats": ("strs", ["csv", "json"]),
               "plot": ("bool", False)},
}

_SECTION_RE = re.compile(r"^\[([A-Za-z_][A-Za-z0-9_]*)\]$")
_KEY_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.+)$")
_NUM_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$|^[+-]?inf$")
_INT_RE = re.compile(r"^[+-]?\d+$")


@dataclass
class RunConfig:
    problem: dict
    grid: dict
    sweep: dict
    mc: dict
    output: dict
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    def line_of(self, section: str, key: str) -> Optional[int]:
        return self.lines.get((section, key))

    def build_problem(self) -> ProblemSpec:
        p = self.problem
        g = _build_fn(p["g"], p["k"], p["c"], p["omega"], "g", self)
        f = _build_fn(p["f"], p["f_k"], p["f_c"], p["f_omega"], "f", self)
        try:
            return ProblemSpec(g, f, p["T"], p["d"])
        except ValueError as exc:
            msg = str(exc)
            key = "k" if "k <= d" in msg else ("T" if msg.startswith("T") else "d")
            raise ConfigError(msg, self.line_of("problem", key), key) from None

    def build_grid(self) -> Grid:
        d = self.problem["d"]
        vals = {}
        for key in ("lo", "hi", "n"):
            v = self.grid[key]
            if len(v) == 1:
                v = v * d
            if len(v) != d:
                raise ConfigError(f"needs 1 or d={d} entries", self.line_of("grid", key), key)
            vals[key] = v
        try:
            return Grid(tuple(vals["lo"]), tuple(vals["hi"]), tuple(vals["n"]))
        except ValueError as exc:
            raise ConfigError(str(exc), self.line_of("grid", "n"), "n") from None

    def eps_list(self) -> list:
        s = self.sweep
        if s["eps"] is not None:
            return list(s["eps"])
        if s["eps_start"] is not None:
            count = s["eps_count"] if s["eps_count"] is not None else 7
            return [s["eps_start"] * s["eps_factor"] ** i for i in range(count)]
        return [2.0**-m for m in range(7, 14)]

    def point(self) -> list:
        d = self.problem["d"]
        x = self.sweep["x"]
        if x is None:
            return [0.0] * d
        if len(x) != d:
            raise ConfigError(f"needs d={d} entries", self.line_of("sweep", "x"), "x")
        return list(x)


def _build_fn(tag, k, c, omega, which, cfg: RunConfig) -> FnSpec:
    line = cfg.line_of("problem", which)
    if tag == "zero":
        return FnSpec.zero()
    if tag == "constant":
        if not c:
            raise ConfigError("constant needs a coefficient", line, which)
        return FnSpec.constant(c[0])
    if tag == "linear":
        if not c:
            raise ConfigError("linear needs a coefficient list", line, which)
        return FnSpec.linear(c)
    if tag == "neg_proj_norm":
        if k < 1:
            raise ConfigError("neg_proj_norm needs k >= 1", cfg.line_of("problem", "k"), "k")
        return FnSpec.neg_proj_norm(k)
    if tag == "abs_norm":
        return FnSpec.abs_norm()
    if tag == "cosine":
        return FnSpec.cosine(omega)
    raise ConfigError(f"unknown function tag {tag!r}", line, which)


def _strip_comment(line: str) -> str:
    out, quoted = [], False
    for ch in line:
        if ch == '"':
            quoted = not quoted
        if ch == "#" and not quoted:
            break
        out.append(ch)
    return "".join(out).strip()


def _parse_scalar(text: str, lineno: int, key: str) -> Any:
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] == '"':
        return text[1:-1]
    if text in ("true", "false"):
        return text == "true"
    if _INT_RE.match(text):
        return int(text)
    if _NUM_RE.match(text):
        return float(text)
    raise ConfigError(f"cannot parse value {text!r}", lineno, key)


def _parse_value(text: str, lineno: int, key: str) -> Any:
    text = text.strip()
    if text.startswith("["):
        if not text.endswith("]"):
            raise ConfigError("unterminated list", lineno, key)
        body = text[1:-1].strip()
        if not body:
            return []
        return [_parse_scalar(p, lineno, key) for p in body.split(",")]
    return _parse_scalar(text, lineno, key)


def _coerce(value: Any, kind: str, lineno: int, key: str) -> Any:
    def bad():
        return ConfigError(f"expected {kind}, got {value!r}", lineno, key)

    def num(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise bad()
        return float(v)

    def integer(v):
        if isinstance(v, bool) or not isinstance(v, int):
            raise bad()
        return v

    if kind == "str":
        if not isinstance(value, str):
            raise bad()
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise bad()
        return value
    if kind == "int":
        return integer(value)
    if kind == "float":
        return num(value)
    items = value if isinstance(value, list) else [value]
    if kind == "floats":
        return [num(v) for v in items]
    if kind == "ints":
        return [integer(v) for v in items]
    if kind == "strs":
        if not all(isinstance(v, str) for v in items):
            raise bad()
        return list(items)
    raise AssertionError(kind)


def parse_config(text: str) -> RunConfig:
    values = {sec: {} for sec in SCHEMA}
    lines = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1)
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        m = _KEY_RE.match(line)
        if not m:
            raise ConfigError(f"cannot parse line {raw.strip()!r}", lineno)
        key, rhs = m.group(1), m.group(2)
        if section is None:
            raise ConfigError("key outside of any section", lineno, key)
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key in [{section}]", lineno, key)
        if key in values[section]:
            raise ConfigError("duplicate key", lineno, key)
        kind = SCHEMA[section][key][0]
        values[section][key] = _coerce(_parse_value(rhs, lineno, key), kind, lineno, key)
        lines[(section, key)] = lineno
    filled = {sec: {k: values[sec].get(k, default if not isinstance(default, list) else list(default))
                    for k, (_, default) in spec.items()}
              for sec, spec in SCHEMA.items()}
    cfg = RunConfig(**filled, lines=lines)
    validate(cfg)
    return cfg


def _positive(cfg, section, key, allow_none=True):
    v = getattr(cfg, section)[key]
    if v is None and allow_none:
        return
    if not (v > 0 and math.isfinite(v)):
        raise ConfigError(f"must be positive, got {v}", cfg.line_of(section, key), key)


def validate(cfg: RunConfig):
    if cfg.problem["g"] is None:
        raise ConfigError("missing required key", None, "g")
    _positive(cfg, "problem", "T", allow_none=False)
    if cfg.problem["d"] < 1:
        raise ConfigError("must be >= 1", cfg.line_of("problem", "d"), "d")
    cfg.build_problem()
    cfg.build_grid()
    T = cfg.problem["T"]
    for e in cfg.eps_list():
        if not 0 < e <= 1:
            raise ConfigError(f"every eps must lie in (0, 1], got {e}", cfg.line_of("sweep", "eps"), "eps")
    t = cfg.sweep["t"]
    if not 0 <= t < T:
        raise ConfigError(f"t must lie in [0, T), got {t}", cfg.line_of("sweep", "t"), "t")
    if cfg.sweep["backend"] not in ("auto", "grid", "radial"):
        raise ConfigError("backend must be auto, grid or radial", cfg.line_of("sweep", "backend"), "backend")
    cfg.point()
    mc = cfg.mc
    for key in ("N", "M"):
        if mc[key] < 1:
            raise ConfigError("must be >= 1", cfg.line_of("mc", key), key)
    if mc["seed"] < 0:
        raise ConfigError("must be >= 0", cfg.line_of("mc", "seed"), "seed")
    for key in ("eps", "delta", "tau"):
        _positive(cfg, "mc", key)
    if mc["eps"] > 1:
        raise ConfigError("must lie in (0, 1]", cfg.line_of("mc", "eps"), "eps")
    if mc["drift"] not in ("optimal_feedback", "half_sum", "zero"):
        raise ConfigError("unknown drift", cfg.line_of("mc", "drift"), "drift")
    if mc["tau"] is not None and mc["tau"] > T - t:
        raise ConfigError("tau must not exceed T - t", cfg.line_of("mc", "tau"), "tau")
    for fmt in cfg.output["formats"]:
        if fmt not in ("csv", "json", "svg"):
            raise ConfigError(f"unknown format {fmt!r}", cfg.line_of("output", "formats"), "formats")


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.17g}" if math.isfinite(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    raise TypeError(type(v))


def serialize_config(cfg: RunConfig) -> str:
    out = []
    for sec in SCHEMA:
        out.append(f"[{sec}]")
        for key, val in getattr(cfg, sec).items():
            if val is not None:
                out.append(f"{key} = {_fmt(val)}")
        out.append("")
    return "\n".join(out)
