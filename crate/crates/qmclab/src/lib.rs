//! qmclab: relaxations, rounding schemes, and spectral certificates for
//! Quantum Max-Cut style 2-local Hamiltonian problems on weighted graphs.
//!
//! The crate is organised around one pipeline:
//!
//! 1. build a weighted graph ([`graph`], [`instances`]),
//! 2. solve a vector-program relaxation over unit spheres ([`sdp`]),
//! 3. round the vector solution to a low-dimensional assignment ([`rounding`]),
//! 4. certify the result against exact diagonalization and product-state
//!    optimization ([`quantum`]),
//!
//! with the analytic machinery that predicts rounding quality living in
//! [`special`] (the exact rounding curve and approximation constants),
//! [`spherical`] (Gegenbauer / kernel eigenvalue checks), and [`fourier`]
//! (Boolean function analysis for hypercube and dictatorship-test instances).
//!
//! All randomized routines take explicit `u64` seeds and are deterministic
//! functions of their inputs; Monte Carlo loops are chunked with per-chunk
//! derived streams so results do not depend on thread count (see [`exec`]).

pub mod error;
pub mod exec;
pub mod fourier;
pub mod graph;
pub mod instances;
pub mod quantum;
pub mod rounding;
pub mod sdp;
pub mod special;
pub mod spherical;

pub use error::{Error, Result};
