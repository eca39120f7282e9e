//! Complex-valued total-variation regularized least squares.

mod hyper;
mod normal;
mod operator;
mod phase;
mod prox;
mod solver;

pub use hyper::{default_gamma, PhaseReg, RegHyperparams};
pub use normal::{grad_gram_triplets, NormalSystem};
pub use operator::{DenseOperator, Gram, LinearMeasurement, LinearOperator};
pub use phase::{
    armijo_search, composite_gradient_step, curvature_estimate, phase_misfit, phase_misfit_gradient,
    phase_prox, phase_regularizer, ArmijoOutcome,
};
pub use prox::{joint_prox_update, joint_shrink, separate_ri_prox_update, shrink_weight, shrink_weights};
pub use solver::{
    alg1_solve, alg2_solve, alg3_solve, refine_data, tv_model_solve, write_iteration_log,
    IterationRecord, PolarState, RegState, Scheme, TvAuxState, TvSolver,
};
