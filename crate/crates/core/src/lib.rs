//! Iterated kernels and resolvents of Volterra-type integral operators,
//! L^p Gronwall bounds, and Picard iteration with certified error bounds.

pub mod cli;
pub mod domain;
mod engine;
pub mod error;
pub mod extreal;
pub mod fixpoint;
pub mod fractional;
pub mod function;
pub mod gronwall;
pub mod kernels;
pub mod quadrature;
pub mod resolvent;
pub mod selftest;
pub mod specfun;

pub use domain::{DomainSpec, MeasureSpace, MeasureSpec};
pub use error::{Error, Result};
pub use extreal::ExtReal;
pub use function::ScalarFn;
pub use gronwall::{gronwall_bound, GronwallInput};
pub use kernels::KernelSpec;
pub use specfun::{mittag_leffler, MLParams, SeriesValue};
