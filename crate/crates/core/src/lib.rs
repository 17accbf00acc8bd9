//! p-adic multiple L-values at positive integers, computed two ways: as
//! Riemann sums of the defining p-adic integral, and as series of cyclotomic
//! multiple harmonic values.

pub mod combinatorics;
pub mod cyclotomic;
pub mod error;
pub mod exec;
pub mod fpoly;
pub mod harmonic;
pub mod lvalue;
pub mod padic;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Strategy;
