//! Numerical classification invariants of parabolic germs and saddle-node
//! foliations: formal invariants, Fatou and Koenigs charts, transition
//! functions between them, and their limits under perturbation.

pub mod error;
pub mod exec;
pub mod fatou;
pub mod formal;
pub mod geometry;
pub mod harness;
pub mod holonomy;
pub mod koenigs;
pub mod maps;
pub mod ode;
pub mod precision;
pub mod roots;
pub mod series;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// `2πi`, the normalizing coefficient of the parabolic term.
pub const TWO_PI_I: Complex64 = Complex64::new(0.0, std::f64::consts::TAU);
