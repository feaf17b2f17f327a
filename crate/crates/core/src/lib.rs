//! Fundamental systems of solutions of `y' = (lambda rho B + A + C(x, lambda)) y` on the
//! half-line with summable `A` and a Laurent-form `C`, constructed by successive
//! approximations and verified numerically.
//!
//! Everything is generic over the real scalar (`f32` or `f64`); the aliases below fix `f64`.

pub mod catalog;
pub mod coeffs;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod linalg;
pub mod ode;
pub mod picard;
pub mod propagator;
pub mod quad;
pub mod scalar;
pub mod scenario;
pub mod sectors;
pub mod solutions;
pub mod sturm;
mod sweep;
pub mod system;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub type Coefficient = coeffs::CoefficientFunction<f64>;
pub type Weight = coeffs::WeightFunction<f64>;
pub type System = system::SystemSpec<f64>;
pub type Propagator = propagator::Propagator<f64>;
pub type Context = kernels::KernelContext<f64>;
pub type Solutions = solutions::SolutionSystem<f64>;
pub type Pencil = sturm::PencilSpec<f64>;
pub type PencilSolution = sturm::PencilSolution<f64>;
