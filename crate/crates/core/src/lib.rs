//! Numerics for the divergence equation `div u = f` with zero boundary
//! values on domains with an external cusp.
//!
//! The crate is `no_std` (it needs `alloc`). It covers three cusp families
//! (`|y| < x^m` in 2D, `|x'| < x_1^m` in N dimensions, and the logarithmic
//! cusp `|y| < x(-ln x)^{-r}`), and provides
//!
//! * closed-form exponent thresholds that split right-hand sides `f ~ x^alpha`
//!   into "not in L^p", "certified non-existence" and "no conclusion"
//!   ([`analytic`]),
//! * concrete domain geometry with a Monte Carlo measure oracle ([`geometry`]),
//! * the zero-mean right-hand-side families ([`rhs`]),
//! * the weighted lower bound `LB(eps)` on `||grad u||_p^p` that every
//!   solution must satisfy, and its blow-up analysis ([`certificate`]),
//! * a MAC-grid minimal-norm solver at `p = 2` on truncated domains
//!   ([`oracle`]),
//! * numerical checks of the supporting identities on synthetic fields
//!   ([`lemma`]).
#![no_std]
// `!(a > b)` is how NaN inputs are rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analytic;
pub mod certificate;
mod error;
pub mod fit;
pub mod geometry;
pub mod lemma;
pub mod oracle;
pub mod quad;
pub mod rhs;
pub mod special;

pub use analytic::{Classification, Divergence, ExponentReport, Family, FamilyParams, Thresholds};
pub use certificate::{CertificateCurve, CurveModel, Verdict};
pub use error::{Error, Result};
pub use geometry::{DomainSpec, MeasureRegion, McEstimate};
pub use oracle::{DiscreteSolveResult, HRule, MacGrid, SolverConfig};
pub use rhs::{LpNorm, RhsSpec};
