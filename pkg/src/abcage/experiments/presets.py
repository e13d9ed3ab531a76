"""Built-in scenarios: caging dynamics, phase sweeps and loop measurements.

Presets are plain config dictionaries (the same schema as YAML files) so a
user file can start from one with ``preset: <name>`` and override any key.
All presets carry the default noise model; ``--ideal`` drops it.
"""
from __future__ import annotations

import numpy as np

from .config import Scenario, scenario_from_dict

S = 1 / np.sqrt(2)
TIMES = {"start": 0.0, "stop": 0.5, "num": 101}
PHASES_PI = {"start": 0.0, "stop": 2.0, "num": 17}

ABELIAN_FIG2 = {"u1": "spin_flip", "u2": "phase_down", "u3": "phase_down", "u4": "spin_flip"}
NONABELIAN_FIG2 = {"u1": "identity", "u2": "identity", "u3": "identity", "u4": "spin_flip"}
SECOND_ORDER_FIG3 = {"u1": "phase_down", "u2": "identity", "u3": "phase_up", "u4": "spin_flip"}
# at phi = 0 the phase-carrying links reduce to the identity
ABELIAN_FIG4 = {"u1": "spin_flip", "u2": "identity", "u3": "identity", "u4": "spin_flip"}
NONABELIAN_FIG4 = {"u1": "identity", "u2": "identity", "u3": "identity", "u4": "spin_flip"}

PSI_OUT = [[-S, 0.0], [S, 0.0]]
PSI_IN = [[S, 0.0], [S, 0.0]]
DOWN = [[1.0, 0.0], [0.0, 0.0]]


def _preset(name, description, links, initial, sweep=None, kind=None):
    d = {
        "name": name,
        "description": description,
        "lattice": {"links": dict(links)},
        "initial": initial,
        "times": dict(TIMES),
        "noise": "default",
    }
    if sweep is not None:
        d["sweep"] = sweep
    if kind is not None:
        d["kind"] = kind
    return d


PRESETS: dict[str, dict] = {
    "fig2a": _preset("fig2a", "Abelian caging, out-of-phase spinor at A0",
                     ABELIAN_FIG2, {"manifold": "A", "phonon": 0, "spinor": PSI_OUT}),
    "fig2b": _preset("fig2b", "non-Abelian caging, out-of-phase spinor at A0",
                     NONABELIAN_FIG2, {"manifold": "A", "phonon": 0, "spinor": PSI_OUT}),
    "fig2c": _preset("fig2c", "Abelian caging, in-phase spinor at A0",
                     ABELIAN_FIG2, {"manifold": "A", "phonon": 0, "spinor": PSI_IN}),
    "fig2d": _preset("fig2d", "non-Abelian free walk, in-phase spinor at A0",
                     NONABELIAN_FIG2, {"manifold": "A", "phonon": 0, "spinor": PSI_IN}),
    "fig2f-abelian": _preset(
        "fig2f-abelian", "P0 vs initial relative phase, Abelian links, read at 0.15 ms",
        ABELIAN_FIG2, {"manifold": "A", "phonon": 0, "phase_pi": 1.0},
        {"parameter": "initial_phase", "values_pi": dict(PHASES_PI), "observable_time": 0.15}),
    "fig2f-nonabelian": _preset(
        "fig2f-nonabelian", "P0 vs initial relative phase, non-Abelian links, read at 0.15 ms",
        NONABELIAN_FIG2, {"manifold": "A", "phonon": 0, "phase_pi": 1.0},
        {"parameter": "initial_phase", "values_pi": dict(PHASES_PI), "observable_time": 0.15}),
    "fig3b": _preset("fig3b", "second-order caging, spin down at A0",
                     SECOND_ORDER_FIG3, {"manifold": "A", "phonon": 0, "spinor": DOWN}),
    "fig3d": _preset("fig3d", "asymmetric caging, (1,-1)/sqrt2 at A2",
                     SECOND_ORDER_FIG3, {"manifold": "A", "phonon": 2, "spinor": [[S, 0.0], [-S, 0.0]]}),
    "fig4-abelian": _preset(
        "fig4-abelian", "P0 vs coupling phase, Abelian links, read at 0.2 ms",
        ABELIAN_FIG4, {"manifold": "A", "phonon": 0, "spinor": DOWN},
        {"parameter": "coupling_phase", "values_pi": dict(PHASES_PI), "observable_time": 0.2,
         "phase_entries": {"u2": [[0, 0]], "u3": [[0, 0]]}}),
    "fig4-nonabelian": _preset(
        "fig4-nonabelian", "P0 vs coupling phase, non-Abelian links, read at 0.2 ms",
        NONABELIAN_FIG4, {"manifold": "A", "phonon": 0, "spinor": DOWN},
        {"parameter": "coupling_phase", "values_pi": dict(PHASES_PI), "observable_time": 0.2,
         "phase_entries": {"u1": [[0, 0]], "u3": [[1, 1]]}}),
    "figS2-abelian": _preset("figS2-abelian", "Wilson loop, algebraic and pi-pulse protocol, Abelian links",
                             ABELIAN_FIG2, {"manifold": "A", "phonon": 0, "spinor": DOWN}, kind="wilson"),
    "figS2-nonabelian": _preset("figS2-nonabelian", "Wilson loop, algebraic and pi-pulse protocol, non-Abelian links",
                                NONABELIAN_FIG2, {"manifold": "A", "phonon": 0, "spinor": DOWN}, kind="wilson"),
}

GROUPS: dict[str, tuple[str, ...]] = {
    "fig2": ("fig2a", "fig2b", "fig2c", "fig2d"),
    "fig2f": ("fig2f-abelian", "fig2f-nonabelian"),
    "fig3": ("fig3b", "fig3d"),
    "fig4": ("fig4-abelian", "fig4-nonabelian"),
    "figS2": ("figS2-abelian", "figS2-nonabelian"),
}


def preset(name: str) -> Scenario:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}")
    return scenario_from_dict(PRESETS[name], source=f"<preset {name}>")


def describe() -> list[tuple[str, str]]:
    rows = [(name, d["description"]) for name, d in PRESETS.items()]
    rows += [(name, "group: " + ", ".join(members)) for name, members in GROUPS.items()]
    return rows
