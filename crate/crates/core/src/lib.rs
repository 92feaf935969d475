//! Histogram bin-count selection for density estimation by penalized
//! maximum likelihood.
//!
//! The crate provides the frequencies-histogram estimator on regular
//! partitions, Kullback–Leibler risks and excess risks, a family of
//! penalized criteria (AIC, AICc, Birgé–Rozenholc and the over-penalized
//! `(1 + C ε⁺) D/n` penalty with fixed or data-driven `C`), selection by
//! argmin or by iterated pseudo-tests, a seeded Monte Carlo benchmark and a
//! set of numerical checks for the concentration inequalities that back the
//! over-penalized criterion.
//!
//! ```
//! use overpen::{criteria::Criterion, density, histogram::ModelCollection, selection};
//!
//! let target = density::lookup("beta22").unwrap();
//! let samples = density::draw_samples(&target, 7, 200);
//! let models = ModelCollection::regular(target.support(), 20).unwrap();
//! let aic1: Criterion = "aic1".parse().unwrap();
//! let result = selection::select_argmin(&models, &samples, &aic1).unwrap();
//! assert!(result.selected_dim < 20);
//! ```

pub mod criteria;
pub mod density;
pub mod error;
pub mod experiments;
pub mod histogram;
pub mod io;
pub mod par;
pub mod quadrature;
pub mod rng;
pub mod selection;
pub mod verify;

pub use error::{Error, Result};
