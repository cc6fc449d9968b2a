"""Rydberg atoms on the links of a periodic kagome lattice (ruby lattice)."""

from lakes.ruby.lattice import RubyLattice, build_lattice
from lakes.ruby.basis import BlockadedBasis, SymmetricBasis, enumerate_blockaded_basis, symmetry_reduce
from lakes.ruby.operators import RubyOperators, build_operators, rvb_state, gauss_projector_apply
from lakes.ruby.drive import (
    AlphaTable,
    DriveOperator,
    agp_terms,
    build_alpha_table,
    cached_system,
    cd_sweep,
    lambda_f_tune,
    optimize_alphas,
    sweep_library,
)
from lakes.ruby.pulses import (
    PulseSequence,
    apply_sequence,
    best_matching_sweep,
    effective_hamiltonian,
    heuristic_xy,
    optimize_pulse_sequence,
    pulse_cycle,
    pulse_run,
)
from lakes.ruby.metrics import lake_metrics

__all__ = [
    "RubyLattice",
    "build_lattice",
    "BlockadedBasis",
    "SymmetricBasis",
    "enumerate_blockaded_basis",
    "symmetry_reduce",
    "RubyOperators",
    "build_operators",
    "rvb_state",
    "gauss_projector_apply",
    "AlphaTable",
    "DriveOperator",
    "agp_terms",
    "build_alpha_table",
    "cached_system",
    "cd_sweep",
    "lambda_f_tune",
    "optimize_alphas",
    "sweep_library",
    "PulseSequence",
    "apply_sequence",
    "best_matching_sweep",
    "effective_hamiltonian",
    "heuristic_xy",
    "optimize_pulse_sequence",
    "pulse_cycle",
    "pulse_run",
    "lake_metrics",
]
