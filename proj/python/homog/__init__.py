"""Finite element homogenization of nondivergence-form problems."""

from ._core import (
    ConfigError,
    Error,
    LookupError,
    SolverFailure,
    WrongOracle,
    cordes_delta,
    eoc,
    known_u0,
    oracle_a0,
    oracle_a0_at,
    run_study,
    solve_cell,
)

__all__ = [
    "ConfigError",
    "Error",
    "LookupError",
    "SolverFailure",
    "WrongOracle",
    "cordes_delta",
    "eoc",
    "known_u0",
    "oracle_a0",
    "oracle_a0_at",
    "run_study",
    "solve_cell",
]
