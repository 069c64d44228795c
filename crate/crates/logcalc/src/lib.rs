//! Exact logarithmic formal calculus and a vertex-algebra identity
//! workbench.
//!
//! The crate provides, at desk scale and with exact Gaussian-rational
//! arithmetic:
//!
//! - [`scalar`]: exact scalars, with an approximate complex mode;
//! - [`polyscalar`]: polynomials in the branch symbols Λ (log z) and Π (2πi);
//! - [`comb`]: generalized binomials, the log-Taylor combinatorial identity,
//!   Pascal matrices;
//! - [`series`]: lazy multi-variable formal series with complex exponents
//!   and log variables — delta functions, derivatives, substitutions,
//!   residues, windowed identity checking;
//! - [`module`]: finite-dimensional doubly graded modules with Jordan
//!   structure, `x^{±L(0)}` operators, contragredients and opposite actions;
//! - [`algebra`]: concrete vertex algebra instances and windowed axiom
//!   checking, plus the affinization machinery (generic vertex operators,
//!   the o-involution, expansion/translation maps);
//! - [`liop`]: logarithmic intertwining operator data, axiom checks and the
//!   Ω/A/B transforms, coefficient recovery, fusion-rule computation;
//! - [`pzqz`]: P(z)- and Q(z)-intertwining maps, dual-space actions with
//!   their laws, compatibility and local-grading checks, and the tensor
//!   product construction for the commutative test bed;
//! - [`report`], [`instance`], [`suite`]: the verification runner surface.

pub mod error;
pub mod scalar;
pub mod polyscalar;
pub mod comb;
pub mod matrix;
pub mod series;
pub mod logpoly;
pub mod module;
pub mod algebra;
pub mod affine;
pub mod liop;
pub mod pzqz;
pub mod report;
pub mod instance;
pub mod suite;

pub use error::CalcError;
pub use scalar::{ApproxScalar, Scalar};
