//! Proximal classifiers built on generalized and ordinary eigenvalue
//! problems, with intuitionistic fuzzy sample weighting.
//!
//! Four model families are provided, each in a linear and a Gaussian kernel
//! form: GEPSVM, IGEPSVM, IF-GEPSVM and IF-IGEPSVM. The `evalstats` module
//! holds the grid search and the rank statistics used to compare them.

pub mod datakit;
pub mod ifscore;
pub mod kernels;
pub mod linalg;
pub mod models;
pub mod evalstats;
pub mod pipeline;
pub mod seeds;
