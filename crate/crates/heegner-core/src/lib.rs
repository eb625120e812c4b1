//! Heegner point traces on rank-one elliptic curves, Heegner-subgroup
//! indices, and real components of Atkin-Lehner quotient curves.

pub mod curve_store;
pub mod ec_arith;
pub mod error;
pub mod heegner;
pub mod modparam;
pub mod quadforms;
pub mod survey;

pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;
