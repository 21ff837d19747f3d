//! Truncated bosonic Fock space over finitely many modes.
//!
//! Operators are sparse and act exactly on occupation vectors; anything that
//! can push probability past the cutoff reports the mass left on the top shell.

mod basis;
mod checks;
mod expm;
mod operator;
mod states;
mod toy;
mod unitary;

pub use basis::{fock_dimension, shell_size, FockBasis, MAX_DIM, MAX_MODES};
pub use checks::{
    bogoliubov_conjugation_residual, ccr_residual, check_coherent_state, check_tnt_inequality, check_weyl_relations,
    coherent_state_exact, mode_symplectic_residual, squeezed_distribution_mean, squeezed_vacuum_number,
    squeezed_vacuum_number_exact, tnt_constant_from_unitary, identity_suite, CoherentCheck, IdentityReport, TntReport,
    WeylCheck,
};
pub use expm::{dense_exp, expm_action, ShellEvolution, DENSE_EXP_LIMIT};
pub use operator::{
    bogoliubov_generator, hamiltonian, ladder, number_operator, weyl_generator, FockOperator, InteractionTensor,
    OperatorBuilder,
};
pub use states::{
    poisson_masses, poisson_tail, project_n, reduced_density, squeezed_masses, trace_distance_to_rank_one, FockVector,
    ReducedDensity, TraceDistance,
};
pub use toy::{
    correlation_matrix, fluctuation_dynamics, generator_cancellation_check, profile_kernel, toy_main_theorem,
    FluctuationOutput, GeneratorReport, ToyReport, ToyRow, ToyScenario,
};
pub use unitary::{
    bogoliubov, bogoliubov_apply, bogoliubov_budget, mode_hyperbolics, weyl, weyl_apply, weyl_budget, Unitary,
    LEAKAGE_TOLERANCE, MAX_KERNEL_NORM,
};
