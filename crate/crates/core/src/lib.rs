//! Conditional-volatility models with exogenous regressors in the mean and
//! variance equations.
//!
//! The crate covers the whole empirical pipeline for daily return panels:
//!
//! * [`ingest`]: CSV loading, returns, date alignment, calendar dummies
//! * [`series_stats`]: summary statistics, ACF with bands, KS normality
//! * [`model`]: GARCH / GJR / log-EGARCH recursions, likelihood, simulation
//! * [`estimation`]: Gaussian QMLE with Bollerslev-Wooldridge standard errors
//! * [`diagnostics`]: Ljung-Box, LM-ARCH and Engle-Ng sign/size bias tests

pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod estimation;
pub mod ingest;
pub mod model;
pub mod numdiff;
mod ols;
pub mod optim;
pub mod series_stats;

pub use error::{Error, Result};
pub use ingest::{Panel, ReturnMethod};
pub use model::{FamilyKind, ModelSpec, ParamVector, Term, VarianceFamily};
pub use series_stats::ReturnSeries;
