//! Symbolic variational calculus on finite-order jet bundles.
//!
//! The crate is layered bottom-up: [`expr`] is the exact expression kernel,
//! [`jet`] the fibered chart and its contact calculus, [`lift`] projectable
//! vector fields and their prolongations, [`varcalc`] and [`secondvar`] the
//! first and second variational operators, [`riemann`] the metric helpers
//! used by the geodesic example, and [`oracle`] the numeric ground truth.

pub mod expr;
pub mod jet;
pub mod lift;
pub mod oracle;
pub mod varcalc;
pub mod secondvar;
pub mod riemann;
