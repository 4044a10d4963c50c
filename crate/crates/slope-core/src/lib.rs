//! Sorted-ℓ1 penalized estimation with predictor screening.
//!
//! The crate fits generalized linear models under the sorted-ℓ1 (ordered
//! weighted ℓ1) penalty along a decreasing path of penalty scales. Predictors
//! are screened before each fit with a strong-rule heuristic derived from the
//! penalty's subdifferential; a KKT safeguard catches anything the rule
//! discards wrongly and refits until the full optimality conditions hold.
//!
//! Module map:
//! - [`sorted_l1`]: the norm, its proximal operator, ordering/cluster
//!   bookkeeping, and the subdifferential membership test.
//! - [`objectives`]: least-squares, logistic, Poisson, and multinomial losses
//!   with standardization and deviance accounting.
//! - [`screening`]: support prediction from a sorted gradient surrogate, the
//!   strong rule, its lasso specialization, and violation detection.
//! - [`solver`]: FISTA on a working set with duality-gap convergence.
//! - [`path`]: weight sequences, the scale grid, and the safeguarded drivers.
//! - [`datagen`]: seeded synthetic designs and responses.
//! - [`io`]: CSV and sparse `label idx:val` readers, CSV writer.

pub mod datagen;
pub mod design;
pub mod error;
pub mod io;
pub mod objectives;
pub mod path;
pub mod screening;
pub mod solver;
pub mod sorted_l1;

pub use datagen::{gen_ar_chain, gen_equicorrelated, generate_dataset, BetaScheme, DesignKind, GenSpec, GeneratedData};
pub use design::{Design, DenseMatrix, DesignMatrix, SparseMatrix};
pub use error::{Result, SlopeError};
pub use io::{read_csv, read_libsvm, write_csv, TabularData};
pub use objectives::{
    deviance, deviance_ratio, loss_gradient, loss_value, null_deviance, standardize, Coefficients,
    Family, Response,
};
pub use path::{
    bh_lambda, fit_path, previous_set_drive, sigma_grid, sigma_max, strong_set_drive, DriverKind,
    PathConfig, PathResult, ScreeningMode, StepRecord, StepState, Termination,
};
pub use screening::{
    detect_violations, screen_support, screen_support_fast, strong_rule_lasso, strong_rule_slope,
    PairingRule, ScreenSet,
};
pub use solver::{
    duality_gap, duality_gap_restricted, fista_solve, ConvergenceMode, SolverConfig, SolverResult,
};
pub use sorted_l1::{
    cumsum, ordering_and_ranks, prox_sorted_l1, sorted_l1_norm, subdiff_feasible, Clustering,
    LambdaSeq, SubgradientVerdict,
};
