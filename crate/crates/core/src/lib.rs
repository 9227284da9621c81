//! Layerwise 2:4 structured-sparsity pruning.
//!
//! The main entry point is [`pruner::prune_prox`], a proximal-gradient
//! pruner built on an exact prox of the 2:4 regularizer
//! `r(w) = Σ_{|S|=3} Π_{j∈S} |w_j|` on every aligned cell of four weights
//! ([`prox`]). Reference pruners live in [`baselines`]; instance generators,
//! file I/O and the benchmark runner in [`harness`].

pub mod baselines;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod prox;
pub mod pruner;

pub use error::{Error, Result};
pub use linalg::{Hessian, Matrix, PrecondState};
