"""Variational solver for the timelike eikonal equation on globally hyperbolic slabs."""

import json as _json

from ._core import (
    CauchySurface,
    InitialDatum,
    LorentzEikonalError,
    SolveResult,
    Spacetime,
    comparison_bound_f_c,
    counterexample_value,
    lorentz_distance,
    make_cauchy_surface,
    relation,
    run_config,
    solve_at,
    solve_future_side,
    solve_grid,
)


def run(config, task="", out_dir=""):
    """Run a configuration given as a dict or JSON string; returns (exit_code, summary, report)."""
    text = config if isinstance(config, str) else _json.dumps(config)
    code, summary, report = run_config(text, task, out_dir)
    return code, summary, _json.loads(report)


__all__ = [
    "CauchySurface",
    "InitialDatum",
    "LorentzEikonalError",
    "SolveResult",
    "Spacetime",
    "comparison_bound_f_c",
    "counterexample_value",
    "lorentz_distance",
    "make_cauchy_surface",
    "relation",
    "run",
    "run_config",
    "solve_at",
    "solve_future_side",
    "solve_grid",
]
