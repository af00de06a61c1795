//! Likelihood-based order selection: exact Gaussian ARMA likelihood through
//! a state-space filter, maximum-likelihood fitting over a stationarity- and
//! invertibility-respecting parameterization, AIC/BIC, and full-grid and
//! stepwise searches.

pub mod acov;
pub mod fit;
pub mod kalman;
pub mod oracle;
pub mod simplex;
pub mod transform;

mod search;

pub use acov::{arma_autocovariances, arma_autocovariances_with_tail};
pub use fit::{fit_arma, hannan_rissanen_init, FitResult};
pub use kalman::kalman_loglik;
pub use oracle::dense_gaussian_loglik;
pub use search::{
    full_search, run_search, stepwise_search, Criterion, SearchConfig, SearchMode, SearchOutcome,
};
pub use transform::{stationary_from_unconstrained, unconstrained_from_stationary};
