//! Exact pairwise functionals on discretized metric measure spaces.
//!
//! A [`MetricMeasureSpace`] is a finite weighted point set with a metric
//! oracle. On top of it the crate computes, without approximation on the
//! discretization:
//!
//! * the weak-type supremum `sup_λ λ^p (μ⊗μ){|f(x)-f(y)| > λ ρ(x,y) V(x,y)^{1/p}}`
//!   with `V(x,y) = μ(B(x, ρ(x,y)))` ([`weaknorm`], [`functionals`]),
//! * Sobolev and Gagliardo seminorms and pointwise Lipschitz estimates
//!   ([`fields`], [`functionals`]),
//! * `(q,p)`-Poincaré constants over ball families ([`poincare`]),
//! * weak-type fractional Sobolev and Gagliardo–Nirenberg checks
//!   ([`inequalities`]),
//! * Muckenhoupt `A_p` constants over dyadic cube families ([`weights`]).
//!
//! The [`harness`] module drives experiments, refinement sweeps and the
//! brute-force oracle mode used by the `mmlab` binary.
//!
//! Parallelism is provided by rayon behind the default `parallel` feature;
//! every reduction is exact or order-independent, so results are
//! bit-identical across thread counts and with the feature disabled.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fields;
pub mod functionals;
pub mod harness;
pub mod inequalities;
pub mod mmspace;
pub mod par;
pub mod poincare;
pub mod sum;
pub mod weaknorm;
pub mod weights;

pub use error::{Error, Result};
pub use fields::{GalleryKind, GalleryParams, LipEstimator, LipField, ScalarField};
pub use mmspace::{DistanceIndex, Metric, MetricMeasureSpace};
pub use weaknorm::{KernelConfig, QuotientSpectrum, WeakNormResult};
