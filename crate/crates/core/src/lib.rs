//! Liability-side valuation of bilateral stock derivatives.
//!
//! Each side of a trade is discounted at the debt rate of the party that
//! owes it. The crate provides the term structures, a Crank–Nicolson solver
//! for the resulting sign-switching PDE, an independent binomial oracle, and
//! the valuation-adjustment layer that splits the fair price into
//! `V = V* − CVA + DVA − CFA + DFA`.

pub mod curves;
pub mod error;
pub mod instruments;
pub mod lattice;
pub mod pde;
pub mod quadrature;
pub mod xva;

pub use error::{Error, Result};
