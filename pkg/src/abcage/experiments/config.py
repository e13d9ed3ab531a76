"""Scenario schema and YAML loading with line-numbered diagnostics.

A scenario file looks like::

    preset: fig2b            # optional base; keys below override it
    name: my-run
    lattice:
      J: 15.707963           # rad/ms
      cutoff: 8
      translational_invariant: false
      links:
        u1: identity         # or a 2x2 array of [re, im] pairs
        u4: [[[0, 0], [1, 0]], [[1, 0], [0, 0]]]
    initial: {manifold: A, phonon: 0, spinor: [[-0.70710678, 0], [0.70710678, 0]]}
    times: {start: 0, stop: 0.5, num: 101}     # ms
    noise: default           # or null, or {gamma1, gamma2, detuning, initial_nbar}
    sweep:
      parameter: initial_phase                 # or coupling_phase
      values_pi: {start: 0, stop: 2, num: 17}  # angles in units of pi
      observable_time: 0.15
      phase_entries: {u2: [[0, 0]]}            # coupling_phase only

Angles under keys ending in ``_pi`` are in units of pi.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from ..dynamics import NoiseModel
from ..gauge import NAMED_LINKS, LinkError, Plaquette, UnitaryLink
from ..lattice import CUTOFF_DEFAULT, DETUNING_PLACEMENTS, J_DEFAULT, MANIFOLDS, LatticeConfig

KINDS = ("trajectory", "sweep", "wilson")
SWEEP_PARAMETERS = ("initial_phase", "coupling_phase")


class ConfigError(ValueError):
    """Invalid scenario configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None, source: Optional[str] = None):
        self.line = line
        self.source = source
        where = ""
        if source:
            where = f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


@dataclass(frozen=True)
class InitialState:
    manifold: str = "A"
    phonon: int = 0
    spinor: tuple = (1.0 + 0j, 0j)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.spinor, dtype=complex)


@dataclass(frozen=True)
class Sweep:
    parameter: str
    values: tuple
    observable_time: float
    phase_entries: dict = field(default_factory=dict)

    def plaquette_at(self, base: Plaquette, phi: float) -> Plaquette:
        mats = dict(zip(("u1", "u2", "u3", "u4"), (m.copy() for m in base.matrices())))
        for name, entries in self.phase_entries.items():
            for i, j in entries:
                mats[name][i, j] *= np.exp(1j * phi)
        return Plaquette(*(UnitaryLink(mats[k]) for k in ("u1", "u2", "u3", "u4")))


@dataclass(frozen=True)
class Scenario:
    name: str
    lattice: LatticeConfig
    initial: InitialState
    times: tuple
    noise: Optional[NoiseModel] = None
    sweep: Optional[Sweep] = None
    kind: str = "trajectory"
    description: str = ""

    @property
    def time_grid(self) -> np.ndarray:
        return np.array(self.times, dtype=float)

    def ideal(self) -> "Scenario":
        return Scenario(self.name, self.lattice, self.initial, self.times, None, self.sweep, self.kind, self.description)


# -- YAML with line tracking ----------------------------------------------------


def _scalar(node):
    return yaml.SafeLoader("").construct_object(node, deep=True)


def _construct(node, path: tuple, lines: dict):
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for knode, vnode in node.value:
            key = _scalar(knode)
            out[key] = _construct(vnode, path + (key,), lines)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_construct(v, path + (i,), lines) for i, v in enumerate(node.value)]
    return _scalar(node)


def parse_yaml(text: str, source: Optional[str] = None) -> tuple[dict, dict]:
    """Parse YAML into plain data plus a {key path: line number} map."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None, source) from exc
    if node is None:
        return {}, {}
    lines: dict = {}
    data = _construct(node, (), lines)
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", 1, source)
    return data, lines


class _Ctx:
    def __init__(self, lines: dict, source: Optional[str]):
        self.lines = lines
        self.source = source

    def line(self, path: tuple) -> Optional[int]:
        while path:
            if path in self.lines:
                return self.lines[path]
            path = path[:-1]
        return self.lines.get(())

    def error(self, path: tuple, message: str) -> ConfigError:
        dotted = ".".join(str(p) for p in path)
        return ConfigError(f"{dotted}: {message}" if dotted else message, self.line(path), self.source)


def _number(ctx, path, value, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ctx.error(path, f"expected a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ctx.error(path, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _complex(ctx, path, value) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list) and len(value) == 2:
        return complex(_number(ctx, path + (0,), value[0]), _number(ctx, path + (1,), value[1]))
    raise ctx.error(path, f"expected [re, im], got {value!r}")


def _link(ctx, path, value) -> UnitaryLink:
    if isinstance(value, str):
        if value not in NAMED_LINKS:
            raise ctx.error(path, f"unknown link name {value!r}; known: {sorted(NAMED_LINKS)}")
        return NAMED_LINKS[value]
    if not (isinstance(value, list) and len(value) == 2 and all(isinstance(r, list) and len(r) == 2 for r in value)):
        raise ctx.error(path, "link must be a name or a 2x2 array of [re, im] pairs")
    m = np.array([[_complex(ctx, path + (i, j), value[i][j]) for j in range(2)] for i in range(2)])
    try:
        return UnitaryLink(m)
    except LinkError as exc:
        raise ctx.error(path, str(exc)) from exc


def _grid(ctx, path, value, scale=1.0) -> tuple:
    if isinstance(value, dict):
        unknown = set(value) - {"start", "stop", "num"}
        if unknown:
            raise ctx.error(path, f"unknown keys {sorted(unknown)}")
        try:
            start = _number(ctx, path + ("start",), value["start"])
            stop = _number(ctx, path + ("stop",), value["stop"])
            num = _number(ctx, path + ("num",), value["num"], int)
        except KeyError as exc:
            raise ctx.error(path, f"missing key {exc.args[0]!r}") from exc
        if num < 1:
            raise ctx.error(path + ("num",), "num must be >= 1")
        vals = np.linspace(start, stop, num)
    elif isinstance(value, list) and value:
        vals = np.array([_number(ctx, path + (i,), v) for i, v in enumerate(value)])
    else:
        raise ctx.error(path, "expected {start, stop, num} or a non-empty list")
    return tuple(float(v) for v in vals * scale)


def _check_keys(ctx, path, mapping, allowed):
    if not isinstance(mapping, dict):
        raise ctx.error(path, f"expected a mapping, got {type(mapping).__name__}")
    unknown = set(mapping) - set(allowed)
    if unknown:
        bad = sorted(unknown, key=str)[0]
        raise ctx.error(path + (bad,), f"unknown key {bad!r}; allowed: {sorted(allowed)}")


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _lattice(ctx, d) -> LatticeConfig:
    path = ("lattice",)
    _check_keys(ctx, path, d, {"J", "J_kHz", "cutoff", "translational_invariant", "detuning",
                               "detuning_placement", "links"})
    J = J_DEFAULT
    if "J" in d:
        J = _number(ctx, path + ("J",), d["J"])
    if "J_kHz" in d:
        J = 2 * np.pi * _number(ctx, path + ("J_kHz",), d["J_kHz"])
    if J <= 0:
        raise ctx.error(path + ("J",), "J must be positive")
    cutoff = _number(ctx, path + ("cutoff",), d.get("cutoff", CUTOFF_DEFAULT), int)
    if cutoff < 1:
        raise ctx.error(path + ("cutoff",), "cutoff must be >= 1")
    ti = d.get("translational_invariant", False)
    if not isinstance(ti, bool):
        raise ctx.error(path + ("translational_invariant",), "expected true or false")
    placement = d.get("detuning_placement", "d_manifold")
    if placement not in DETUNING_PLACEMENTS:
        raise ctx.error(path + ("detuning_placement",), f"expected one of {DETUNING_PLACEMENTS}")
    links_d = d.get("links", {})
    _check_keys(ctx, path + ("links",), links_d, {"u1", "u2", "u3", "u4"})
    links = [_link(ctx, path + ("links", k), links_d.get(k, "identity")) for k in ("u1", "u2", "u3", "u4")]
    return LatticeConfig(
        plaquette=Plaquette(*links),
        J=J,
        cutoff=cutoff,
        translational_invariant=ti,
        detuning=_number(ctx, path + ("detuning",), d.get("detuning", 0.0)),
        detuning_placement=placement,
    )


def _initial(ctx, d, cutoff) -> InitialState:
    path = ("initial",)
    _check_keys(ctx, path, d, {"manifold", "phonon", "spinor", "phase_pi"})
    manifold = d.get("manifold", "A")
    if manifold not in MANIFOLDS:
        raise ctx.error(path + ("manifold",), f"expected one of {MANIFOLDS}")
    phonon = _number(ctx, path + ("phonon",), d.get("phonon", 0), int)
    if not 0 <= phonon <= cutoff:
        raise ctx.error(path + ("phonon",), f"phonon {phonon} outside 0..{cutoff}")
    if "spinor" in d and "phase_pi" in d:
        raise ctx.error(path, "give either spinor or phase_pi, not both")
    if "phase_pi" in d:
        phi = np.pi * _number(ctx, path + ("phase_pi",), d["phase_pi"])
        sp = np.array([np.exp(1j * phi), 1.0]) / np.sqrt(2)
    else:
        raw = d.get("spinor", [[1, 0], [0, 0]])
        if not (isinstance(raw, list) and len(raw) == 2):
            raise ctx.error(path + ("spinor",), "spinor must be two [re, im] entries")
        sp = np.array([_complex(ctx, path + ("spinor", i), raw[i]) for i in range(2)])
        nrm = np.linalg.norm(sp)
        if abs(nrm - 1) > 1e-6:
            raise ctx.error(path + ("spinor",), f"spinor norm {nrm:.8g} is not 1")
        sp = sp / nrm
    return InitialState(manifold, phonon, tuple(complex(z) for z in sp))


def _noise(ctx, value) -> Optional[NoiseModel]:
    path = ("noise",)
    if value is None or value is False:
        return None
    if value == "default" or value is True:
        return NoiseModel()
    _check_keys(ctx, path, value, {"gamma1", "gamma2", "detuning", "initial_nbar", "detuning_placement"})
    kw = {k: _number(ctx, path + (k,), v) for k, v in value.items() if k != "detuning_placement"}
    for k, v in kw.items():
        if k != "detuning" and v < 0:
            raise ctx.error(path + (k,), "must be >= 0")
    if "detuning_placement" in value:
        if value["detuning_placement"] not in DETUNING_PLACEMENTS:
            raise ctx.error(path + ("detuning_placement",), f"expected one of {DETUNING_PLACEMENTS}")
        kw["detuning_placement"] = value["detuning_placement"]
    return NoiseModel(**kw)


def _sweep(ctx, d, times) -> Sweep:
    path = ("sweep",)
    _check_keys(ctx, path, d, {"parameter", "values", "values_pi", "observable_time", "phase_entries"})
    param = d.get("parameter")
    if param not in SWEEP_PARAMETERS:
        raise ctx.error(path + ("parameter",), f"expected one of {SWEEP_PARAMETERS}")
    if ("values" in d) == ("values_pi" in d):
        raise ctx.error(path, "give exactly one of values (rad) or values_pi (units of pi)")
    if "values_pi" in d:
        values = _grid(ctx, path + ("values_pi",), d["values_pi"], np.pi)
    else:
        values = _grid(ctx, path + ("values",), d["values"])
    if "observable_time" not in d:
        raise ctx.error(path, "missing observable_time")
    t_obs = _number(ctx, path + ("observable_time",), d["observable_time"])
    if not times[0] <= t_obs <= times[-1]:
        raise ctx.error(path + ("observable_time",), f"{t_obs} outside the time grid [{times[0]}, {times[-1]}]")
    entries = {}
    raw = d.get("phase_entries", {})
    _check_keys(ctx, path + ("phase_entries",), raw, {"u1", "u2", "u3", "u4"})
    for k, lst in raw.items():
        p = path + ("phase_entries", k)
        if not isinstance(lst, list):
            raise ctx.error(p, "expected a list of [row, col] pairs")
        pairs = []
        for i, ij in enumerate(lst):
            if not (isinstance(ij, list) and len(ij) == 2 and all(v in (0, 1) for v in ij)):
                raise ctx.error(p + (i,), "entries must be [row, col] with row, col in {0, 1}")
            pairs.append((int(ij[0]), int(ij[1])))
        entries[k] = tuple(pairs)
    if param == "coupling_phase" and not entries:
        raise ctx.error(path, "coupling_phase sweeps need phase_entries")
    return Sweep(param, values, t_obs, entries)


TOP_KEYS = {"preset", "name", "kind", "description", "lattice", "initial", "times", "noise", "sweep"}


def scenario_from_dict(d: dict, lines: Optional[dict] = None, source: Optional[str] = None) -> Scenario:
    ctx = _Ctx(lines or {}, source)
    _check_keys(ctx, (), d, TOP_KEYS)
    lattice = _lattice(ctx, d.get("lattice", {}))
    initial = _initial(ctx, d.get("initial", {}), lattice.cutoff)
    times = _grid(ctx, ("times",), d.get("times", {"start": 0.0, "stop": 0.5, "num": 101}))
    if any(t < 0 for t in times) or any(b < a for a, b in zip(times, times[1:])):
        raise ctx.error(("times",), "times must be sorted and non-negative")
    noise = _noise(ctx, d.get("noise"))
    sweep = _sweep(ctx, d["sweep"], times) if d.get("sweep") is not None else None
    kind = d.get("kind", "sweep" if sweep else "trajectory")
    if kind not in KINDS:
        raise ctx.error(("kind",), f"expected one of {KINDS}")
    if kind == "sweep" and sweep is None:
        raise ctx.error(("kind",), "kind 'sweep' needs a sweep block")
    name = d.get("name", "scenario")
    if not isinstance(name, str):
        raise ctx.error(("name",), "name must be a string")
    return Scenario(name, lattice, initial, times, noise, sweep, kind, str(d.get("description", "")))


def load_scenario_text(text: str, source: Optional[str] = None) -> Scenario:
    from .presets import PRESETS

    data, lines = parse_yaml(text, source)
    if "preset" in data:
        base_name = data["preset"]
        if base_name not in PRESETS:
            raise ConfigError(f"unknown preset {base_name!r}", lines.get(("preset",)), source)
        merged = deep_merge(PRESETS[base_name], {k: v for k, v in data.items() if k != "preset"})
        if "name" not in data:
            merged["name"] = base_name
        # overriding keys keep their own line numbers; inherited keys fall back to the preset line
        return scenario_from_dict(merged, lines, source)
    return scenario_from_dict(data, lines, source)


def load_scenario(path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", None, str(path)) from exc
    return load_scenario_text(text, str(path))


def matrix_to_config(m) -> list:
    """2x2 complex matrix as nested [re, im] pairs."""
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def spinor_to_config(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]
