//! Verification workbench for mean curvature integrals of outer parallel
//! bodies of projected constant-width bodies.
//!
//! * [`exact`] and [`symbolic`]: exact π-graded rationals and polynomials.
//! * [`formulas`]: every identity as a polynomial builder.
//! * [`geometry`] and [`grassmann`]: independent numeric oracles.
//! * [`verify`]: named checks binding the two sides together.
//! * [`report`]: check reports and their serializations.
//! * [`cli`]: the `cwbench` command line.

pub mod cli;
pub mod exact;
pub mod formulas;
pub mod geometry;
pub mod grassmann;
pub mod report;
pub mod symbolic;
pub mod verify;
