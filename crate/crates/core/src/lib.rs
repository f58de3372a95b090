//! Variable-hyperparameter Gaussian kernel realized by displaced squeezed
//! vacuum (DSV) states.
//!
//! The crate has two independent routes to the same kernel value:
//!
//! * [`fock`] simulates single-mode bosonic operators in a truncated Fock
//!   basis and reads the kernel off as a zero-photon detection probability;
//! * [`kernel`] evaluates the closed form `exp(-γ‖x − x'‖²)` with
//!   `γ = cosh 2r + cos 2θ · sinh 2r` derived from the squeezing parameters.
//!
//! On top of the kernel sit a dual soft-margin [`svm`] trained by sequential
//! minimal optimization and the [`data`] utilities (synthetic generators,
//! stratified splits, PCA, standardization) needed to run classification
//! experiments.
//!
//! The crate is `no_std` + `alloc`. The default `std` feature only adds
//! conveniences; `parallel` evaluates Gram matrices with rayon.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is how NaN gets rejected alongside non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod fock;
pub mod kernel;
pub mod linalg;
pub mod math;
pub mod rng;
pub mod svm;

pub use error::{Error, Result};
pub use num_complex::Complex64;
