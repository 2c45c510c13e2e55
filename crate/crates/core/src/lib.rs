//! Discriminant-analysis toolkit: scatter-matrix criteria, a differentiable
//! two-class discriminant loss with analytic gradients, a small trainable
//! network, baseline losses, and binary segmentation metrics.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`, which is the precision
//! every documented tolerance refers to.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0)` also rejects NaN

pub mod discriminant;
pub mod error;
pub mod loss;
pub mod net;
pub mod numerics;
pub mod scalar;
pub mod segmetrics;
pub mod synthdata;

pub use discriminant::{
    class_stats, fisher_criterion, fit_lda, fukunaga_criterion, projected_class_stats,
    scatter_matrices, trace_criterion, Convention, ScatterPair,
};
pub use error::{DdaError, Result};
pub use loss::{bce, dda_binary, dda_multiclass, dice, BinaryVariant, LossEval, Objective};
pub use numerics::{solve_spd, sym_eig, trace};
pub use scalar::Scalar;

pub type Mat = numerics::Matrix<f64>;
pub type RVec = numerics::Vector<f64>;
pub type EigPairs = numerics::EigenPairs<f64>;
pub type SampleSet = discriminant::SampleSet<f64>;
pub type ClassStats = discriminant::ClassStats<f64>;
pub type ScatterSet = discriminant::ScatterSet<f64>;
pub type LinearDiscriminant = discriminant::LinearDiscriminant<f64>;
