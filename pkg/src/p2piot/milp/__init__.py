"""MILP formulation, LP text export and the exact branch-and-bound solver."""

from .branch_bound import SolveResult, extract_assignment, extract_flows, solve_exact
from .census import census
from .lpformat import LPParseError, dumps_lp, export_lp, parse_lp
from .model import Constraint, MilpModel, Variable, build, family_of
from .simplex import KERNEL, available_kernels, solve_lp

__all__ = [
    "Constraint",
    "KERNEL",
    "LPParseError",
    "MilpModel",
    "SolveResult",
    "Variable",
    "available_kernels",
    "build",
    "census",
    "dumps_lp",
    "export_lp",
    "extract_assignment",
    "extract_flows",
    "family_of",
    "parse_lp",
    "solve_exact",
    "solve_lp",
]
