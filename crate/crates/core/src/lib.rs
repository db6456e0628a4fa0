//! Collapsibility analysis for three-variable models with a response `Y`, an
//! explanatory variable `X` and a background variable `W`.
//!
//! The crate checks whether the dependence of `Y` on `X` survives
//! marginalisation over `W` in the senses of homogeneity, collapsibility,
//! uniform collapsibility and average (A-) collapsibility, for both the
//! distribution dependence function and quantile regression coefficients.
//! Discrete tables are handled with exact rational arithmetic; continuous
//! models go through adaptive quadrature and finite differences.

pub mod collapse;
pub mod dependence;
pub mod error;
pub mod model;
pub mod numerics;
pub mod quantile;

pub use error::{Error, Result};
