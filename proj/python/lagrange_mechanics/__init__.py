"""Learning as mechanics: weights evolve under damped linear ODEs driven by
supervision impulses. Thin wrapper over the compiled ``_core`` module."""

import json as _json

from ._core import (
    Infeasible,
    InvalidArgument,
    NumericFailure,
    ParseError,
    betas_first,
    betas_fourth,
    characteristic_poly,
    closed_form_response,
    design_roots,
    impulse_response,
    normalize_config,
    partial_fractions,
    poly_roots,
    roots_to_params_second,
    routh_hurwitz,
)
from ._core import run_config as _run_config

__all__ = [
    "Infeasible",
    "InvalidArgument",
    "NumericFailure",
    "ParseError",
    "betas_first",
    "betas_fourth",
    "characteristic_poly",
    "closed_form_response",
    "design_roots",
    "impulse_response",
    "normalize_config",
    "partial_fractions",
    "poly_roots",
    "roots_to_params_second",
    "routh_hurwitz",
    "run",
]


def run(config):
    """Run an experiment. ``config`` is a dict or a JSON string."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _run_config(text)
