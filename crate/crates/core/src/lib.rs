//! Adaptive two-sided assortment optimization under per-agent MNL choice.
//!
//! Customers are shown assortments of suppliers and pick at most one; each
//! supplier then sees the customers who picked it and chooses among them. The
//! crate provides the LP relaxations of this problem, an ellipsoid solver with
//! an approximate separation oracle, the randomized static and same-order greedy
//! policies, and exact oracles for small instances.

pub mod cost;
pub mod ellipsoid;
pub mod error;
pub mod evaluate;
pub mod instance;
pub mod lp;
pub mod mnl;
pub mod policies;
pub mod rounding;
pub mod simplex;
pub mod subset;

pub use error::{Error, Result};
pub use instance::{generate, GeneratorKind, Instance, SameOrderCertificate};
pub use subset::Subset;
