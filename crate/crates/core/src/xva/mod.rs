//! Valuation adjustments.
//!
//! The ladder in [`decompose`] is the general method: five solves with
//! successive curve substitutions, differenced into CVA, DVA, CFA and DFA.
//! The quadrature formulas cover single-signed trades, where the discount
//! regime is known along every path, and serve as cross-checks.

mod adjustments;
mod exposure;
mod ladder;

pub use adjustments::{cra_integral, cva_closed_form, zero_recovery_adjustments, Closeout, CvaModel};
pub use exposure::{exposure_profile, tfc, DeltaSource, ExposureProfile};
pub use ladder::{decompose, XvaReport, LADDER_LABELS};
