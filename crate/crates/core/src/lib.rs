//! Survey-sinking ("double-square-root") seismic imaging in two dimensions.
//!
//! The crate implements the full downward-continuation imaging chain for the
//! 2D constant-density acoustic wave equation: split-step Fourier one-way
//! extrapolation, Born forward modeling, adjoint migration, amplitude-true
//! reconstruction, angle-domain common-image gathers and data-domain
//! annihilators for velocity analysis, together with a Hamiltonian ray tracer
//! that serves as an independent kinematic reference for all of it.
//!
//! Everything operates on regularly sampled grids ([`Grid2D`], [`DataCube`],
//! [`SpectrumCube`]) that round-trip bit-exactly through the `WEGRID01`
//! container format. All operators are plain finite-dimensional linear maps;
//! forward/adjoint pairs are discrete conjugate-transposes of each other and
//! are verified as such by dot tests.

pub mod angle;
pub mod annihilator;
pub mod container;
pub mod dsr;
pub mod error;
pub mod fft;
pub mod grid;
pub mod model;
pub mod ray;
pub mod recon;
pub mod scene;
pub mod ssr;
pub mod taper;
pub mod transform;

pub use container::{read_container, write_container, Container};
pub use error::{Error, Result};
pub use grid::{Axis, AxisLabel, DataCube, Grid2D, GridValues, SpectrumCube};

/// Complex sample type used throughout.
pub type C64 = num_complex::Complex<f64>;
