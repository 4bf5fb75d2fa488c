"""Fully implicit thermal single-phase flow with block and CPR preconditioners."""
from ._backend import BACKEND
from .amg import AmgOptions, build_hierarchy
from .config import CaseError, CaseSpec, load_case, load_permeability_file
from .discretization import (
    BlockJacobian, DirichletBC, Problem, State, assemble_jacobian, assemble_residual, assemble_schur_approx,
)
from .mesh import Grid, build_grid
from .physics import FluidModel, RockModel, SourceTerm
from .precond import PreconditionerConfig
from .solver import NewtonConfig, TimeController, newton_step, run_simulation

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AmgOptions", "build_hierarchy", "CaseError", "CaseSpec", "load_case", "load_permeability_file",
    "BlockJacobian", "DirichletBC", "Problem", "State", "assemble_jacobian", "assemble_residual",
    "assemble_schur_approx", "Grid", "build_grid", "FluidModel", "RockModel", "SourceTerm",
    "PreconditionerConfig", "NewtonConfig", "TimeController", "newton_step", "run_simulation",
]
