//! Measurable forms of the a-priori estimates: energy balances, moment
//! tables, the cadlag modulus, the uniqueness weight and the Galerkin
//! refinement study.

mod convergence;
mod energy;
mod moments;
mod modulus;
mod uniqueness;

pub use convergence::{galerkin_convergence_study, ConvergenceRow, ConvergenceTable};
pub use energy::{
    energy_check_coupled, energy_check_director, energy_report, CoupledEnergyCheck, DirectorEnergyCheck,
    EnergyReport,
};
pub use moments::{
    moment_estimates, moment_table, path_functionals, refinement_comparison, MomentRow, MomentTable,
    PathFunctionals, RefinementRow, BAND_SIGMAS, MIN_PATHS,
};
pub use modulus::{cadlag_modulus, cadlag_modulus_of, modulus_of_samples, ModulusField};
pub use uniqueness::{
    beta_functional, f_difference_inequalities, perturbed_pair, uniqueness_experiment, uniqueness_with,
    FDifferenceReport, Kappas, UniquenessReport, WeightConstants,
};
