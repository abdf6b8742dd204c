//! Exact-arithmetic engine for conformally equivariant quantization on
//! flat ℝ^{p,q} and the higher symmetries of powers of the Laplacian.
//!
//! Layers, bottom to top:
//! - [`ring`]: rationals, signatures, sparse phase-space polynomials.
//! - [`linalg`]: exact rational row reduction, kernels, spans.
//! - [`opalg`]: normal-ordered operators, differential operators,
//!   normal ordering, right division by Laplacian powers.
//! - [`conformal`]: the algebra o(p+1,q+1) and its three actions.
//! - [`invariants`]: trace decompositions and invariant-operator
//!   classification.
//! - [`quantization`]: the equivariant quantization maps.
//! - [`symmetries`]: conformal Killing tensors and symmetry pairs.
//! - [`enveloping`]: S(𝔤)/U(𝔤) truncations, moment maps, ideals.
//! - [`starproduct`]: the induced graded star product and its checks.
//!
//! All arithmetic is exact; nothing here uses floating point.

pub mod conformal;
pub mod error;
pub mod invariants;
pub mod json;
pub mod enveloping;
pub mod quantization;
pub mod starproduct;
pub mod symmetries;
pub mod linalg;
pub mod opalg;
pub mod ring;

pub use error::{Error, Result};
pub use ring::{PhasePoly, Rat, Signature};
