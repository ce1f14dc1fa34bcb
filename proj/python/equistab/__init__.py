"""Stability analysis of relative equilibria of symmetric Hamiltonian systems.

Thin wrapper around the native core: reports come back as parsed JSON.
"""

import json

from ._equistab import Error, Expression, Model, __version__, load_model, parse_model
from . import _equistab as _core

__all__ = ["Error", "Expression", "Model", "analyze", "load_model", "parse_model", "probe", "simulate", "verify"]


def analyze(path, point="", **flags):
    """Full analysis of one point; returns (exit_code, report dict)."""
    r = _core._analyze(str(path), point, **flags)
    return r.exit_code, json.loads(r.report)


def simulate(path, point="", **flags):
    """Integrate a field; returns (csv text, summary line)."""
    r = _core._simulate(str(path), point, **flags)
    return r.csv, r.text


def probe(path, point="", **flags):
    """Sampled escape test; returns (exit_code, report dict, witness csv)."""
    r = _core._probe(str(path), point, **flags)
    return r.exit_code, json.loads(r.report), r.csv


def verify(path, **flags):
    """Sampled checks of the model's symmetry claims; returns (ok, table text)."""
    r = _core._verify(str(path), **flags)
    return r.exit_code == 0, r.text
