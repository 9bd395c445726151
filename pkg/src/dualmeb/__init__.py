"""Minimum covering ball of a point set by dual pivoting with QR updates."""
from .geometry import Ball, PointSet, SupportSet
from .harness import InstanceSpec, generate, load_points, save_points
from .oracle import brute_force_mb, circumball
from .solver import (
    DegeneracyError,
    InvariantViolation,
    NonTerminationError,
    SolveReport,
    SolverConfig,
    SolverError,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "DegeneracyError",
    "InstanceSpec",
    "InvariantViolation",
    "NonTerminationError",
    "PointSet",
    "SolveReport",
    "SolverConfig",
    "SolverError",
    "SupportSet",
    "brute_force_mb",
    "circumball",
    "generate",
    "load_points",
    "save_points",
    "solve",
]
