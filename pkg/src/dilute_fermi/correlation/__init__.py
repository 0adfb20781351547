"""Correlation-Hamiltonian blocks, the trial Bogoliubov rotation and their checks."""

from .blocks import (
    CONVENTIONS,
    HCORR_KINDS,
    HERMITIAN,
    BlockKind,
    BlockSpec,
    ClosureError,
    assemble_block,
    block_terms,
    correlation_hamiltonian,
)
from .bogoliubov import (
    BogoliubovResult,
    GeneratorError,
    bogoliubov_apply,
    dense_expm,
    extended_generator,
    generator,
    krylov_expm,
    spin_operator,
    trial_generator,
)
from .diagnostics import (
    NormConvergenceError,
    TrialEnergyReport,
    TrialSystem,
    approx_gs_check,
    build_trial_system,
    check_h0_commutator,
    derivative_check,
    number_diagnostics,
    operator_norm,
    reduce_one_pdm,
    scattering_cancellation_expectation,
    sector_trial_energy,
    trial_energy,
)
from .inputs import FunctionKernels, Kernels, ModeProfiles, RadialKernels, TableKernels
from .norms import b_norm, bipartite_norm, pair_norm, pair_space_norm
from .position import PositionOracle, oracle_block
from .sector import SectorError, sector_energy

__all__ = [
    "CONVENTIONS", "HCORR_KINDS", "HERMITIAN", "BlockKind", "BlockSpec", "BogoliubovResult",
    "ClosureError", "FunctionKernels", "GeneratorError", "Kernels", "ModeProfiles",
    "NormConvergenceError", "PositionOracle", "RadialKernels", "SectorError", "TableKernels",
    "TrialEnergyReport", "TrialSystem", "approx_gs_check", "assemble_block", "b_norm",
    "bipartite_norm", "block_terms", "bogoliubov_apply", "build_trial_system",
    "check_h0_commutator", "correlation_hamiltonian", "dense_expm", "derivative_check",
    "extended_generator", "generator", "krylov_expm", "number_diagnostics", "operator_norm",
    "oracle_block", "pair_norm", "pair_space_norm", "reduce_one_pdm",
    "scattering_cancellation_expectation", "sector_energy", "sector_trial_energy", "spin_operator",
    "trial_energy", "trial_generator",
]
