//! Exact stabilizer Rényi entropy of quantum circuits, labelled circuit
//! datasets, graph encodings, and a from-scratch dual-branch graph neural
//! network for estimating nonstabilizerness.

pub mod circuit;
pub mod dataset;
pub mod encode;
pub mod harness;
pub mod error;
pub mod jsonl;
pub mod nn;
pub mod par;
pub mod sre;
pub mod statevector;

pub use error::{Error, Result};
