//! Training objectives with analytic per-sample gradients.
//!
//! Every loss returns a [`LossEval`]: the scalar value, the derivative of
//! that value with respect to each input score (same layout as the input),
//! and a flag for batches that carry no usable signal.

use crate::error::{DdaError, Result};
use crate::numerics::{solve_spd, Matrix};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct LossEval<T> {
    pub value: T,
    /// `d value / d score`, laid out like the scores (row-major for
    /// multi-dimensional scores).
    pub grads: Vec<T>,
    /// Set when the batch was degenerate; value and grads are then zero.
    pub skipped: bool,
}

impl<T: Scalar> LossEval<T> {
    fn skipped(len: usize) -> Self {
        Self {
            value: T::zero(),
            grads: vec![T::zero(); len],
            skipped: true,
        }
    }

    fn zero(len: usize) -> Self {
        Self {
            value: T::zero(),
            grads: vec![T::zero(); len],
            skipped: false,
        }
    }
}

/// Scaling of the closed-form binary loss.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BinaryVariant {
    /// `-(n1 n2 / n) (m1 - m2)^2 / (SS_1 + SS_2 + eps)`, where `SS_k` is the
    /// sum of squared deviations of class `k`. Equals minus the single
    /// generalized eigenvalue of the 1-D biased scatter pair and does not
    /// grow with batch size.
    #[default]
    EigenNormalized,
    /// `-n1 n2 (m1 - m2)^2 / (n1 s1^2 + n2 s2^2 + eps)` with unbiased class
    /// variances `s_k^2 = SS_k / (n_k - 1)`. A class with a single sample
    /// contributes zero variance.
    CountWeighted,
}

impl BinaryVariant {
    pub fn name(self) -> &'static str {
        match self {
            BinaryVariant::EigenNormalized => "eig",
            BinaryVariant::CountWeighted => "count",
        }
    }
}

fn check_binary_labels<T>(scores: &[T], labels: &[usize]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(DdaError::DimensionMismatch(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(DdaError::InvalidInput(format!(
            "binary label expected, got {bad}"
        )));
    }
    Ok(())
}

/// Closed-form two-class discriminant loss on scalar scores.
///
/// Labels are 0 (background) and 1 (foreground). A batch containing a single
/// class, or with zero pooled scatter and `eps == 0` while the means differ,
/// is reported as skipped. The loss is `<= 0` and is zero exactly when the
/// two class means coincide.
pub fn dda_binary<T: Scalar>(
    scores: &[T],
    labels: &[usize],
    variant: BinaryVariant,
    eps: T,
) -> Result<LossEval<T>> {
    check_binary_labels(scores, labels)?;
    if !(eps >= T::zero()) {
        return Err(DdaError::InvalidInput(format!(
            "eps must be non-negative, got {eps}"
        )));
    }
    let n = scores.len();
    let mut count = [0usize; 2];
    let mut sum = [T::zero(); 2];
    for (&y, &l) in scores.iter().zip(labels) {
        count[l] += 1;
        sum[l] += y;
    }
    if count[0] == 0 || count[1] == 0 {
        return Ok(LossEval::skipped(n));
    }
    let mean = [
        sum[0] / T::from_count(count[0]),
        sum[1] / T::from_count(count[1]),
    ];
    let mut ss = [T::zero(); 2];
    for (&y, &l) in scores.iter().zip(labels) {
        let d = y - mean[l];
        ss[l] += d * d;
    }

    let (n0, n1) = (T::from_count(count[0]), T::from_count(count[1]));
    let (coef, weight) = match variant {
        BinaryVariant::EigenNormalized => (n0 * n1 / T::from_count(n), [T::one(), T::one()]),
        BinaryVariant::CountWeighted => {
            let w = |c: usize| {
                if c > 1 {
                    T::from_count(c) / T::from_count(c - 1)
                } else {
                    T::zero()
                }
            };
            (n0 * n1, [w(count[0]), w(count[1])])
        }
    };

    let gap = mean[1] - mean[0];
    if gap == T::zero() {
        return Ok(LossEval::zero(n));
    }
    let den = weight[0] * ss[0] + weight[1] * ss[1] + eps;
    if !(den > T::zero()) {
        return Ok(LossEval::skipped(n));
    }

    let value = -coef * gap * gap / den;
    let two = T::two();
    let dgap = [-T::one() / n0, T::one() / n1];
    let grads = scores
        .iter()
        .zip(labels)
        .map(|(&y, &l)| {
            let dnum = two * gap * dgap[l];
            let dden = two * weight[l] * (y - mean[l]);
            -coef * (dnum * den - gap * gap * dden) / (den * den)
        })
        .collect();
    Ok(LossEval {
        value,
        grads,
        skipped: false,
    })
}

/// General discriminant loss `-tr{(S_W + ridge I)^-1 S_B}` on
/// multi-dimensional scores (one row per sample), biased scatters pooled
/// over the whole batch.
///
/// Classes absent from the batch are ignored; fewer than two present
/// classes marks the batch as skipped. With one-dimensional scores and two
/// classes this matches [`dda_binary`] with `EigenNormalized` when
/// `ridge = eps / n`.
pub fn dda_multiclass<T: Scalar>(
    scores: &Matrix<T>,
    labels: &[usize],
    ridge: T,
) -> Result<LossEval<T>> {
    let (n, p) = scores.shape();
    if labels.len() != n {
        return Err(DdaError::DimensionMismatch(format!(
            "{n} score rows but {} labels",
            labels.len()
        )));
    }
    if p == 0 {
        return Err(DdaError::InvalidInput(
            "scores must have at least one column".into(),
        ));
    }
    if !(ridge >= T::zero()) {
        return Err(DdaError::InvalidInput(format!(
            "ridge must be non-negative, got {ridge}"
        )));
    }
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut count = vec![0usize; classes];
    let mut means = Matrix::zeros(classes, p);
    for (i, &l) in labels.iter().enumerate() {
        count[l] += 1;
        for (m, &y) in means.row_mut(l).iter_mut().zip(scores.row(i)) {
            *m += y;
        }
    }
    if count.iter().filter(|&&c| c > 0).count() < 2 {
        return Ok(LossEval::skipped(n * p));
    }
    let nt = T::from_count(n);
    let mut mixture = vec![T::zero(); p];
    for (k, &c) in count.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let inv = T::one() / T::from_count(c);
        for (j, m) in means.row_mut(k).iter_mut().enumerate() {
            *m *= inv;
            mixture[j] += *m * T::from_count(c) / nt;
        }
    }

    // Class-mean offsets d_k = m_k - m_0 and within-class deviations e_i.
    let mut offsets = Matrix::zeros(classes, p);
    let mut s_b = Matrix::zeros(p, p);
    for (k, &c) in count.iter().enumerate() {
        if c == 0 {
            continue;
        }
        for j in 0..p {
            offsets[(k, j)] = means[(k, j)] - mixture[j];
        }
        s_b.axpy(
            T::from_count(c) / nt,
            &Matrix::outer(offsets.row(k), offsets.row(k)),
        );
    }
    let mut dev = Matrix::zeros(n, p);
    let mut s_w = Matrix::zeros(p, p);
    for (i, &l) in labels.iter().enumerate() {
        for j in 0..p {
            dev[(i, j)] = scores[(i, j)] - means[(l, j)];
        }
        s_w.axpy(T::one() / nt, &Matrix::outer(dev.row(i), dev.row(i)));
    }

    let a_inv = solve_spd(&s_w.add_ridge(ridge), &Matrix::identity(p))?;
    let x = a_inv.matmul(&s_b)?;
    let value = -x.diag().into_iter().sum::<T>();
    let mut pmat = x.matmul(&a_inv)?;
    for i in 0..p {
        for j in (i + 1)..p {
            let avg = (pmat[(i, j)] + pmat[(j, i)]) * T::half();
            pmat[(i, j)] = avg;
            pmat[(j, i)] = avg;
        }
    }
    // d tr/d y_i = (2/n) [A^-1 d_k - P e_i]
    let pulls = a_inv.matmul(&offsets.transpose())?.transpose();
    let scale = T::two() / nt;
    let mut grads = Vec::with_capacity(n * p);
    for (i, &l) in labels.iter().enumerate() {
        let tighten = pmat.mul_vec(dev.row(i))?;
        for j in 0..p {
            grads.push(-scale * (pulls[(l, j)] - tighten[j]));
        }
    }
    Ok(LossEval {
        value: if value == T::zero() { T::zero() } else { value },
        grads,
        skipped: false,
    })
}

#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

const BCE_CLAMP: f64 = 1e-7;
const DICE_SMOOTHING: f64 = 1.0;

/// Mean binary cross-entropy on raw scores passed through a sigmoid.
///
/// Probabilities are clamped to `[1e-7, 1 - 1e-7]` for the value only; the
/// gradient is the usual `(p - t) / n`.
pub fn bce<T: Scalar>(scores: &[T], labels: &[usize]) -> Result<LossEval<T>> {
    check_binary_labels(scores, labels)?;
    let n = scores.len();
    if n == 0 {
        return Ok(LossEval::zero(0));
    }
    let nt = T::from_count(n);
    let lo = T::lit(BCE_CLAMP);
    let hi = T::one() - lo;
    let mut total = T::zero();
    let mut grads = Vec::with_capacity(n);
    for (&s, &l) in scores.iter().zip(labels) {
        let p = sigmoid(s);
        let pc = p.max(lo).min(hi);
        let t = T::from_count(l);
        total -= t * pc.ln() + (T::one() - t) * (T::one() - pc).ln();
        grads.push((p - t) / nt);
    }
    Ok(LossEval {
        value: total / nt,
        grads,
        skipped: false,
    })
}

/// Soft Dice loss `1 - (2 sum(p t) + 1) / (sum p + sum t + 1)` on
/// sigmoid probabilities.
pub fn dice<T: Scalar>(scores: &[T], labels: &[usize]) -> Result<LossEval<T>> {
    check_binary_labels(scores, labels)?;
    let smooth = T::lit(DICE_SMOOTHING);
    let probs: Vec<T> = scores.iter().map(|&s| sigmoid(s)).collect();
    let mut inter = T::zero();
    let mut psum = T::zero();
    let mut tsum = T::zero();
    for (&p, &l) in probs.iter().zip(labels) {
        let t = T::from_count(l);
        inter += p * t;
        psum += p;
        tsum += t;
    }
    let num = T::two() * inter + smooth;
    let den = psum + tsum + smooth;
    let value = T::one() - num / den;
    let grads = probs
        .iter()
        .zip(labels)
        .map(|(&p, &l)| {
            let t = T::from_count(l);
            let dp = -(T::two() * t * den - num) / (den * den);
            dp * p * (T::one() - p)
        })
        .collect();
    Ok(LossEval {
        value,
        grads,
        skipped: false,
    })
}

/// Training objective selector used by the network trainer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Objective<T> {
    Dda { variant: BinaryVariant, eps: T },
    DdaMulticlass { ridge: T },
    Bce,
    Dice,
}

impl<T: Scalar> Objective<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::Dda { .. } => "dda",
            Objective::DdaMulticlass { .. } => "dda-multiclass",
            Objective::Bce => "bce",
            Objective::Dice => "dice",
        }
    }

    /// Number of score columns the objective expects, given the class count.
    pub fn output_dim(&self, classes: usize) -> usize {
        match self {
            Objective::DdaMulticlass { .. } => classes.saturating_sub(1).max(1),
            _ => 1,
        }
    }

    pub fn evaluate(&self, scores: &Matrix<T>, labels: &[usize]) -> Result<LossEval<T>> {
        let single = || -> Result<&[T]> {
            if scores.cols() != 1 {
                return Err(DdaError::DimensionMismatch(format!(
                    "{} expects one score per sample, got {}",
                    self.name(),
                    scores.cols()
                )));
            }
            Ok(scores.as_slice())
        };
        match *self {
            Objective::Dda { variant, eps } => dda_binary(single()?, labels, variant, eps),
            Objective::DdaMulticlass { ridge } => dda_multiclass(scores, labels, ridge),
            Objective::Bce => bce(single()?, labels),
            Objective::Dice => dice(single()?, labels),
        }
    }
}
