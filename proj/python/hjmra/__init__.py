"""Multi-target reach-avoid synthesis on Hamilton-Jacobi value functions."""

from ._hjmra import (
    ball,
    box,
    Cascade,
    complement,
    ConfigError,
    difference,
    FormulaError,
    Fsa,
    fsa,
    GeometryError,
    Grid,
    GridField,
    ImplicitSet,
    intersect,
    load_cascade,
    load_config,
    run,
    Scenario,
    scenario,
    scenario_from_json,
    solve,
    solve_qp,
    SolverError,
    union,
)

__all__ = [
    "ball",
    "box",
    "Cascade",
    "complement",
    "ConfigError",
    "difference",
    "FormulaError",
    "Fsa",
    "fsa",
    "GeometryError",
    "Grid",
    "GridField",
    "ImplicitSet",
    "intersect",
    "load_cascade",
    "load_config",
    "run",
    "Scenario",
    "scenario",
    "scenario_from_json",
    "solve",
    "solve_qp",
    "SolverError",
    "union",
]
