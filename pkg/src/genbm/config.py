"""Run configuration: a sectioned key-value file, strictly validated.

The format is INI-style (configparser syntax).  Unknown sections or keys
are rejected; every value is type-checked with the offending key path in
the message.  ``serialize_config`` emits a canonical form whose parse
round-trips to an equal configuration, and whose SHA-256 names the run in
every output file.  The full schema lives in configs/schema.md.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import math
from dataclasses import dataclass, field as dc_field

from .coeffs import (
    GeneratorCoeffsLine,
    GeneratorCoeffsTwoHalf,
    WalkParamsLine,
    WalkParamsTwoHalf,
    coeffs_from_walk_line,
    coeffs_from_walk_two_half,
)
from .errors import ConfigError, InvalidCoefficientsError
from .states import LINE, TWO_HALF

MODES = ("simulate", "pde", "resolvent", "compare", "validate", "exit-stats")

_REQ = object()


def _nonneg(v, key):
    if v < 0:
        raise ConfigError("must be >= 0", key)
    if not math.isfinite(v):
        raise ConfigError("must be finite", key)
    return v


def _pos(v, key):
    if v <= 0 or not math.isfinite(v):
        raise ConfigError("must be > 0", key)
    return v


def _posint(v, key):
    if v < 1:
        raise ConfigError("must be a positive integer", key)
    return v


_SCHEMA: dict[str, dict[str, tuple]] = {
    "run": {
        "mode": (str, _REQ, None),
        "topology": (str, _REQ, None),
        "workers": (int, 1, _posint),
    },
    "walk": {
        "a": (float, 0.0, _nonneg),
        "b_plus": (float, 0.0, _nonneg),
        "b_minus": (float, 0.0, _nonneg),
        "a_plus": (float, 0.0, _nonneg),
        "a_minus": (float, 0.0, _nonneg),
        "c_plus": (float, 0.0, _nonneg),
        "c_minus": (float, 0.0, _nonneg),
    },
    "coeffs": {
        "c1": (float, None, _nonneg),
        "c2p": (float, None, _nonneg),
        "c2m": (float, None, _nonneg),
        "c3": (float, None, _nonneg),
        "c1p": (float, None, _nonneg),
        "c1m": (float, None, _nonneg),
        "ap": (float, None, _nonneg),
        "am": (float, None, _nonneg),
        "c3p": (float, None, _nonneg),
        "c3m": (float, None, _nonneg),
    },
    "sim": {
        "n": (int, 100, _posint),
        "t": (float, 1.0, _pos),
        "u": (str, "0.5", None),
        "m": (int, 1000, _posint),
        "seed": (int, None, None),
        "l_radius": (float, None, _pos),
        "record_mode": (str, "endpoints_only", None),
    },
    "exit": {
        "x": (float, 1.0, None),
        "h1": (float, 0.1, _pos),
        "h2": (float, 0.3, _pos),
    },
    "numerics": {
        "h": (float, 0.01, _pos),
        "dt": (float, 0.01, _pos),
        "lambda": (float, 1.0, _pos),
        "quad_tol": (float, 1e-10, _pos),
        "probe_radius": (float, 2.0, _pos),
    },
    "pde": {
        "f0": (str, "gauss", None),
        "t": (float, 1.0, _pos),
    },
    "resolvent": {
        "g": (str, "gauss", None),
    },
    "output": {
        "dir": (str, "out", None),
    },
}

# Keys of [coeffs] that apply per topology (all must appear together).
_COEFF_KEYS = {
    LINE: ("c1", "c2p", "c2m", "c3"),
    TWO_HALF: ("c1p", "c1m", "ap", "am", "c2p", "c2m", "c3p", "c3m"),
}
_WALK_KEYS = {
    LINE: ("a", "b_plus", "b_minus"),
    TWO_HALF: ("a_plus", "a_minus", "b_plus", "b_minus", "c_plus", "c_minus"),
}
_STOCHASTIC_MODES = ("simulate", "compare", "validate", "exit-stats")


@dataclass(frozen=True)
class RunConfig:
    """Validated, fully resolved run configuration."""

    mode: str
    topology: str
    values: dict = dc_field(default_factory=dict)
    provided: frozenset = dc_field(default_factory=frozenset, compare=False)

    def get(self, section: str, key: str):
        return self.values[section][key]

    @property
    def seed(self) -> int | None:
        return self.values["sim"]["seed"]

    def walk_params(self):
        w = self.values["walk"]
        if self.topology == LINE:
            return WalkParamsLine(w["a"], w["b_plus"], w["b_minus"])
        return WalkParamsTwoHalf(w["a_plus"], w["a_minus"], w["b_plus"],
                                 w["b_minus"], w["c_plus"], w["c_minus"])

    def has_walk_section(self) -> bool:
        return any(f"walk.{k}" in self.provided for k in _WALK_KEYS[self.topology])

    def coeffs(self):
        """Explicit [coeffs] if given, else the diffusive limit of [walk]."""
        c = self.values["coeffs"]
        keys = _COEFF_KEYS[self.topology]
        given = [k for k in keys if c.get(k) is not None]
        if given:
            missing = [k for k in keys if c.get(k) is None]
            if missing:
                raise ConfigError(f"incomplete coefficient set, missing {missing}",
                                  "coeffs")
            try:
                if self.topology == LINE:
                    s = c["c1"] + c["c2m"] + c["c2p"] + c["c3"]
                    if s <= 0:
                        raise ConfigError("coefficients must not all vanish", "coeffs")
                    return GeneratorCoeffsLine(c["c1"] / s, c["c2m"] / s,
                                               c["c2p"] / s, c["c3"] / s)
                return GeneratorCoeffsTwoHalf(
                    c["c1p"], c["c1m"], c["ap"], c["am"],
                    c["c2p"], c["c2m"], c["c3p"], c["c3m"]).canonical()
            except InvalidCoefficientsError as e:
                raise ConfigError(str(e), "coeffs") from e
        if self.topology == LINE:
            return coeffs_from_walk_line(self.walk_params())
        return coeffs_from_walk_two_half(self.walk_params())

    def start(self):
        u = self.values["sim"]["u"]
        if u in ("0", "0+", "0-"):
            return u
        try:
            return float(u)
        except ValueError:
            raise ConfigError(f"bad start value {u!r}", "sim.u") from None

    def config_hash(self) -> str:
        return hashlib.sha256(serialize_config(self).encode()).hexdigest()[:16]


def _parse_value(raw: str, typ, key: str):
    raw = raw.strip()
    try:
        if typ is int:
            v = int(raw)
        elif typ is float:
            v = float(raw)
            if math.isnan(v):
                raise ValueError("nan")
        else:
            v = raw
    except ValueError:
        raise ConfigError(f"malformed {typ.__name__} value {raw!r}", key) from None
    return v


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration document."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"unparseable configuration: {e}") from e

    values: dict[str, dict] = {}
    provided = set()
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError("unknown key", f"{section}.{key}")
    for section, keys in _SCHEMA.items():
        values[section] = {}
        for key, (typ, default, check) in keys.items():
            path = f"{section}.{key}"
            if cp.has_option(section, key):
                v = _parse_value(cp.get(section, key), typ, path)
                provided.add(path)
            elif default is _REQ:
                raise ConfigError("mandatory key missing", path)
            else:
                v = default
            if v is not None and check is not None:
                check(v, path)
            values[section][key] = v

    mode = values["run"]["mode"]
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}", "run.mode")
    topology = values["run"]["topology"]
    if topology not in (LINE, TWO_HALF):
        raise ConfigError(f"topology must be '{LINE}' or '{TWO_HALF}'", "run.topology")
    rc = RunConfig(mode, topology, values, frozenset(provided))

    if mode in _STOCHASTIC_MODES and rc.seed is None:
        raise ConfigError("seed is mandatory for stochastic modes", "sim.seed")
    if mode in ("simulate", "compare") and not rc.has_walk_section():
        raise ConfigError(f"mode {mode} needs a [walk] section", "walk")
    if values["sim"]["record_mode"] not in ("full_path", "endpoints_only",
                                            "boundary_events_only"):
        raise ConfigError("bad record mode", "sim.record_mode")
    rc.start()
    rc.coeffs() if mode in ("pde", "resolvent", "compare", "validate") else None
    if topology == LINE and any(f"walk.{k}" in provided
                                for k in ("a_plus", "a_minus", "c_plus", "c_minus")):
        raise ConfigError("two-half walk keys given for line topology", "walk")
    if topology == TWO_HALF and "walk.a" in provided:
        raise ConfigError("line walk key 'a' given for two-half topology", "walk.a")
    return rc


def serialize_config(rc: RunConfig) -> str:
    """Canonical text form; parse(serialize(rc)) matches rc up to execution keys.

    ``run.workers`` is execution metadata, not part of the run's identity:
    leaving it out keeps data artifacts (and the config hash that stamps
    them) byte-identical across worker counts.
    """
    out = io.StringIO()
    for section in _SCHEMA:
        lines = []
        for key in _SCHEMA[section]:
            if (section, key) == ("run", "workers"):
                continue
            v = rc.values[section][key]
            default = _SCHEMA[section][key][1]
            if v is None:
                continue
            if default is not _REQ and v == default and f"{section}.{key}" not in rc.provided:
                continue
            value_str = v if isinstance(v, str) else repr(v)
            lines.append(f"{key} = {value_str}")
        if lines:
            out.write(f"[{section}]\n")
            for ln in lines:
                out.write(ln + "\n")
            out.write("\n")
    return out.getvalue()


def resolved_values(rc: RunConfig) -> dict:
    """Full defaults-filled key-value map, for echoing into run metadata."""
    return {s: dict(kv) for s, kv in rc.values.items()}
