//! Embedding network autoregression.
//!
//! Networked time series `y_{t+1} = α y_t + θ L y_t + U β + Z_t γ + ε_{t+1}`,
//! where `L` is the normalized adjacency of an observed undirected graph and
//! `U` holds the leading eigenvectors of the graph's latent connection
//! matrix. The crate covers
//!
//! - [`network`]: graphs, latent-variable generators, spectral embedding,
//!   Procrustes alignment and rank selection by edge cross-validation;
//! - [`process`]: parameters, stationary moments and exact-stationary
//!   simulation of panels;
//! - [`estimate`]: design matrices, least-squares fits with plug-in
//!   standard errors, forecasts and error metrics;
//! - [`lsm`]: constrained maximum likelihood for the additive and
//!   multiplicative latent space model;
//! - [`bench`]: reproducible Monte Carlo grids;
//! - [`io`]: CSV and JSON file formats.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod estimate;
pub mod io;
pub mod lsm;
pub mod network;
pub mod process;

pub use error::{Error, Result};
