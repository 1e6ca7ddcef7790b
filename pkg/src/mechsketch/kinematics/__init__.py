"""Constraint-based planar kinematics: assembly, stepping, runs and scrubs."""

from .backend import compiled_available, kernel, kernel_name
from .solver import (RunResult, SimState, Status, Trace, advance_to_targets,
                     assemble, default_dt, initial_state, localize_limit,
                     reassemble, run, scrub, solve_step)
from .system import ConstraintSystem

__all__ = [
    "ConstraintSystem",
    "RunResult",
    "SimState",
    "Status",
    "Trace",
    "advance_to_targets",
    "assemble",
    "compiled_available",
    "default_dt",
    "initial_state",
    "kernel",
    "kernel_name",
    "localize_limit",
    "reassemble",
    "run",
    "scrub",
    "solve_step",
]
