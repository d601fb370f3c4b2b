"""INI-style run configuration.

Layout (one ``key = value`` per line; ``#`` and ``;`` start comments)::

    [initial]       kind = circle | ellipse | perturbed
                    r0 | a, b | r0, eps, m
    [velocity]      kind = constant | cosine
                    f0 | f0, amp, mode
    [solver]        n, cfl, d, t_end, k_max_limit, width_min,
                    record_every, dealias
    [output]        dir, snapshot_every
    [string]        m, vn, cfl, t_end, diameter_min, record_every

A file with a ``[string]`` section describes a string run; it may not have
``[velocity]`` or ``[solver]`` sections and its initial shape must be a
circle or an ellipse. Unknown sections and keys are rejected with the line
they appear on.
"""
from __future__ import annotations

import configparser
import hashlib
import json
import re
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import ContractViolation, InvalidConfig, TimelikeViolation
from .solver import FlowConfig
from .string_solver import StringConfig

SHAPE_KEYS = {
    "circle": ("r0",),
    "ellipse": ("a", "b"),
    "perturbed": ("r0", "eps", "m"),
}
VELOCITY_KEYS = {
    "constant": ("f0",),
    "cosine": ("f0", "amp", "mode"),
}
SOLVER_KEYS = {
    "n": int, "cfl": float, "d": float, "t_end": float,
    "k_max_limit": float, "width_min": float, "record_every": int,
    "dealias": "bool",
}
STRING_KEYS = {
    "m": int, "vn": float, "cfl": float, "t_end": float,
    "diameter_min": float, "record_every": int,
}
OUTPUT_KEYS = {"dir": str, "snapshot_every": int}
INT_PARAMS = {"m", "mode"}

DEFAULT_OUTPUT = {"dir": "out", "snapshot_every": 10}


@dataclass(frozen=True)
class RunSpec:
    """A parsed config: the solver config plus output settings."""

    kind: str                 # "flow" or "string"
    config: FlowConfig | StringConfig
    output: dict
    source: str = ""

    def resolved(self) -> dict:
        body = asdict(self.config)
        return {"kind": self.kind, "config": body}

    @property
    def digest(self) -> str:
        return config_digest(self.resolved())


def config_digest(resolved: dict) -> str:
    """sha256 of the canonical JSON of a resolved config.

    Floats are written by ``repr`` (shortest round-trip form), keys sorted,
    no whitespace, so the text is platform independent.
    """
    text = json.dumps(resolved, sort_keys=True, separators=(",", ":"),
                      allow_nan=False)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _line_index(text: str):
    """(section, key) -> line number, and section -> header line number."""
    keys, sections = {}, {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            sections.setdefault(section, lineno)
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", line)
        if m and section is not None:
            keys.setdefault((section, m.group(1).strip().lower()), lineno)
    return keys, sections


class _Reader:
    def __init__(self, text: str, path: str):
        self.path = path
        self.lines, self.headers = _line_index(text)
        self.cp = configparser.ConfigParser(
            interpolation=None, inline_comment_prefixes=("#", ";"))
        try:
            self.cp.read_string(text, source=path)
        except configparser.Error as exc:
            raise InvalidConfig(f"{path}: {exc}") from None

    def where(self, section, key=None):
        if key is None:
            line = self.headers.get(section)
        else:
            line = self.lines.get((section, key))
        return f"{self.path}:{line}" if line else self.path

    def check_keys(self, section, allowed):
        for key in self.cp[section]:
            if key not in allowed:
                raise InvalidConfig(
                    f"{self.where(section, key)}: unknown key {key!r} in "
                    f"[{section}] (allowed: {', '.join(sorted(allowed))})")

    def get(self, section, key, kind):
        raw = self.cp[section][key].strip()
        try:
            if kind == "bool":
                return self.cp[section].getboolean(key)
            if kind is int:
                return int(raw)
            if kind is float:
                return float(raw)
            return raw
        except ValueError:
            name = "boolean" if kind == "bool" else kind.__name__
            raise InvalidConfig(
                f"{self.where(section, key)}: {section}.{key} = {raw!r} is "
                f"not a valid {name}") from None

    def require(self, section, key):
        if key not in self.cp[section]:
            raise InvalidConfig(
                f"{self.where(section)}: [{section}] is missing {key!r}")


def _kind_params(rd: _Reader, section, table):
    if section not in rd.cp:
        return None, {}
    rd.require(section, "kind")
    kind = rd.cp[section]["kind"].strip()
    if kind not in table:
        raise InvalidConfig(
            f"{rd.where(section, 'kind')}: {section}.kind = {kind!r}; "
            f"expected one of {', '.join(table)}")
    rd.check_keys(section, ("kind",) + table[kind])
    params = {}
    for key in table[kind]:
        if key in rd.cp[section]:
            params[key] = rd.get(section, key,
                                 int if key in INT_PARAMS else float)
    return kind, params


def parse_text(text: str, path: str = "<config>") -> RunSpec:
    """Parse and fully validate config text (initial data included)."""
    rd = _Reader(text, path)
    known = {"initial", "velocity", "solver", "output", "string"}
    for section in rd.cp.sections():
        if section not in known:
            raise InvalidConfig(f"{rd.where(section)}: unknown section "
                                f"[{section}]")
    if "initial" not in rd.cp:
        raise InvalidConfig(f"{path}: missing [initial] section")
    shape, shape_params = _kind_params(rd, "initial", SHAPE_KEYS)
    for key in SHAPE_KEYS[shape]:
        rd.require("initial", key)

    output = dict(DEFAULT_OUTPUT)
    if "output" in rd.cp:
        rd.check_keys("output", OUTPUT_KEYS)
        for key, kind in OUTPUT_KEYS.items():
            if key in rd.cp["output"]:
                output[key] = rd.get("output", key, kind)
    if output["snapshot_every"] < 0:
        raise InvalidConfig(f"{rd.where('output', 'snapshot_every')}: "
                            "snapshot_every must be >= 0")

    try:
        if "string" in rd.cp:
            for section in ("velocity", "solver"):
                if section in rd.cp:
                    raise InvalidConfig(
                        f"{rd.where(section)}: [{section}] does not apply to "
                        "a string run")
            if shape not in ("circle", "ellipse"):
                raise InvalidConfig(f"{rd.where('initial', 'kind')}: string "
                                    f"runs need a circle or ellipse, got "
                                    f"{shape!r}")
            rd.check_keys("string", STRING_KEYS)
            kw = {k: rd.get("string", k, t) for k, t in STRING_KEYS.items()
                  if k in rd.cp["string"]}
            cfg = StringConfig(shape=shape, shape_params=shape_params, **kw)
            cfg.initial_state()
            return RunSpec("string", cfg, output, path)

        velocity, velocity_params = _kind_params(rd, "velocity", VELOCITY_KEYS)
        kw = {}
        if velocity is not None:
            kw.update(velocity=velocity, velocity_params=velocity_params)
        if "solver" in rd.cp:
            rd.check_keys("solver", SOLVER_KEYS)
            kw.update({k: rd.get("solver", k, t)
                       for k, t in SOLVER_KEYS.items()
                       if k in rd.cp["solver"]})
        cfg = FlowConfig(shape=shape, shape_params=shape_params, **kw)
        cfg.initial_state()
    except (ContractViolation, TimelikeViolation) as exc:
        raise InvalidConfig(f"{path}: {exc}") from None
    except InvalidConfig as exc:
        msg = str(exc)
        if not msg.startswith(path):
            msg = f"{path}: {msg}"
        raise InvalidConfig(msg) from None
    return RunSpec("flow", cfg, output, path)


def parse_config(path) -> RunSpec:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InvalidConfig(f"{p}: no such config file") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise InvalidConfig(f"{p}: cannot read config ({exc})") from None
    return parse_text(text, str(p))
