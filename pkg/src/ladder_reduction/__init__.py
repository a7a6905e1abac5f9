"""Hilbert-space reduction with coupling renormalization for frustrated two-leg spin ladders."""

from .basis import Basis, Scheme, build_basis, build_so4_basis, build_su2_basis, order_by_diagonal, rung_transform
from .eigensolver import EigenSolution, SolverConfig, dense_lowest, lanczos_lowest
from .hamiltonian import CouplingSet, SplitHamiltonian, assemble, assemble_so4, assemble_su2, matvec, restrict
from .observables import deviation_p, entropy_per_site, relevant_amplitudes
from .reduction import (
    ReductionConfig,
    ReductionStep,
    ReductionTrace,
    detect_instability,
    feshbach_coefficients,
    run_reduction,
    solve_renormalization,
)

__version__ = "0.1.0"
