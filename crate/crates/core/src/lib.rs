//! Score matching estimation for exponential families, specialized to
//! Gaussian linear concentration models and coloured graphical models.
//!
//! The score matching estimator (SME) minimizes the Hyvärinen score. For an
//! exponential family it solves a linear system and never touches the
//! normalizing constant. For a Gaussian model whose concentration matrix
//! `K` lies in a linear space `L` of symmetric matrices with orthogonal
//! basis `{e^u}`, the equations are
//!
//! ```text
//! Σ_v θ_v tr(e^u W e^v) = tr(e^u)   for every u,
//! ```
//!
//! with `W` the `n`-divisor scatter matrix. The minimized score is
//! `−n tr(Ǩ)/2`, which makes penalized model screening cheap.
//!
//! ```
//! use sme_core::{sme_fit, ModelSpace, SymMatrix};
//!
//! let w = SymMatrix::from_rows(&[&[5.0, 1.0], &[1.0, 2.0]]).unwrap();
//! let fit = sme_fit(&ModelSpace::diagonal(2), &w, 2).unwrap();
//! assert!((fit.theta.0[0] - 0.2).abs() < 1e-12);
//! assert!((fit.j2 + 0.7).abs() < 1e-12);
//! ```

pub mod concentration;
pub mod data;
pub mod error;
pub mod estimability;
pub mod expfam;
pub mod linalg;
pub mod model_space;
pub mod rng;
pub mod search;
pub mod simulation;
pub mod sym;

pub use concentration::{
    jordan_fit, mle_fit, mle_fit_from, sme_fit, sme_then_mle, FitResult, Method, MleOptions,
    WarmStartFit,
};
pub use error::{Error, Result};
pub use estimability::{
    build_gram, check_estimability, dimension_bound, dimension_bound_check, is_n_estimable,
    EstimabilityReport, GramSystem,
};
pub use expfam::{
    minimal_score, sandwich_covariance, solve_generic_sme, ExponentialFamily,
    GaussianConcentrationFamily, PrecisionFamily1d, SandwichEstimate,
};
pub use model_space::{
    circular_ar_graph, four_cycle_graph, lattice_graph, mathmarks_graph, Coefficients,
    ColouredGraph, ModelSpace,
};
pub use search::{
    default_lambda, kruskal_tree_init, penalized_objective, search, Lambda, SearchConfig,
    SearchResult,
};
pub use sym::{jordan_product, spd_factorize, trace_inner, SpdFactorization, SymMatrix};

pub use nalgebra;
