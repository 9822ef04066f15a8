"""Quantum graph spectra and spectrum-driven graph evolution.

Graphs and run configs are accepted as dicts, JSON strings or paths to JSON
files, in the formats read by the ``qgraph`` command-line tool.
"""

from __future__ import annotations

import json
import os
from typing import Any

from . import _core
from ._core import Error

__all__ = [
    "Error",
    "counting_function",
    "eigenvalues",
    "plot_dk",
    "prepare",
    "run",
    "score",
    "spectral_distance",
    "spectrum",
    "validate",
]


def _text(obj: Any) -> str:
    if isinstance(obj, dict):
        return json.dumps(obj)
    if isinstance(obj, os.PathLike) or (isinstance(obj, str) and not obj.lstrip().startswith("{")):
        with open(obj, encoding="utf-8") as f:
            return f.read()
    return obj


def validate(graph) -> list[tuple[str, str]]:
    return _core.validate(_text(graph))


def prepare(graph, bind: str = "", normalize: bool = True) -> dict:
    return json.loads(_core.prepare(_text(graph), bind, normalize))


def spectrum(graph, k_max: float, mode: str = "auto", bind: str = "", normalize: bool = True) -> dict:
    return _core.spectrum(_text(graph), k_max, mode, bind, normalize)


def eigenvalues(graph, count: int, bind: str = "", normalize: bool = True) -> list[float]:
    return _core.eigenvalues(_text(graph), count, bind, normalize)


def plot_dk(graph, k_range: str, bind: str = "", normalize: bool = True) -> str:
    return _core.plot_dk(_text(graph), k_range, bind, normalize)


def counting_function(graph, k: float) -> int:
    return _core.counting_function(_text(graph), k)


def spectral_distance(lambdas, goal) -> float:
    return _core.spectral_distance(list(lambdas), _text(goal))


def score(lambdas, goal) -> float:
    return _core.score(list(lambdas), _text(goal))


def run(config) -> dict:
    """Runs a config; returns the JSONL log, k trajectory CSV and final graph."""
    out = _core.run(_text(config))
    out["final_graph"] = json.loads(out["final_graph"])
    out["steps"] = [json.loads(line) for line in out["log"].splitlines()][1:]
    return out
