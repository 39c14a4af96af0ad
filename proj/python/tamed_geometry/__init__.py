"""Tamed second fundamental form analysis of immersed submanifolds."""

import json

from ._core import (
    ConfigError,
    DomainError,
    LevelError,
    NotTamedError,
    ParseError,
    TamedError,
    c_kappa,
    catalog,
    choose_l,
    radial_eigenvalue,
    run,
    s_kappa,
)
from . import _core

__all__ = [
    "ConfigError",
    "DomainError",
    "LevelError",
    "NotTamedError",
    "ParseError",
    "TamedError",
    "c_kappa",
    "catalog",
    "choose_l",
    "radial_eigenvalue",
    "run",
    "s_kappa",
    "tamedness",
    "tone_bound",
    "vertices",
]


def _config(config):
    if isinstance(config, str):
        config = {"immersion": {"builtin": config}}
    return json.dumps(config)


def tamedness(config):
    """a_i sequence and a(M) estimate. `config` is a builtin name or a config dict."""
    return json.loads(_core.tamedness_json(_config(config)))


def vertices(config):
    """Per-vertex table: u, ambient point, rho_M, rho_N, alpha_sup, tamed ratio."""
    return _core.vertices(_config(config))


def tone_bound(m, c, mu, r0, l=None):
    """Theorem-2 fundamental tone upper bound report."""
    return json.loads(_core.tone_bound_json(m, c, mu, r0, l))
