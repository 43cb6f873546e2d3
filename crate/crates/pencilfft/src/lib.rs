//! Distributed-memory FFT solver for the Poisson and Biot-Savart equations
//! on uniform 3D grids, supporting any per-direction combination of periodic,
//! even, odd and (semi-)unbounded boundary conditions on cell- and
//! node-centered layouts.
//!
//! Data is pencil-decomposed over simulated ranks; topology switches run one
//! of three exchange strategies (all-to-all, non-blocking batched,
//! non-blocking with strided sends) over a pluggable transport.

pub mod decomp;
pub mod error;
pub mod exchange;
pub mod fft1d;
pub mod field;
pub mod greens;
pub mod grid;
pub mod solver;
pub mod validation;
mod specfn;
mod util;

pub use error::{Error, Result};
