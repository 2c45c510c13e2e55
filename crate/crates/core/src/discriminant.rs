//! Classical discriminant analysis: class statistics, affine projections,
//! the Fisher and Fukunaga two-class criteria, multi-class scatter matrices
//! and the trace separability criterion, plus closed-form two-class LDA.

use crate::error::{DdaError, Result};
use crate::numerics::{cholesky, forward_substitute, solve_spd, sym_eig, trace, Matrix, Vector};
use crate::scalar::Scalar;

/// Labeled feature vectors partitioned into `class_count` classes.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet<T> {
    features: Vec<Vector<T>>,
    labels: Vec<usize>,
    class_count: usize,
    counts: Vec<usize>,
}

impl<T: Scalar> SampleSet<T> {
    pub fn new(features: Vec<Vector<T>>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(DdaError::DimensionMismatch(format!(
                "{} feature vectors but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if features.len() < 2 {
            return Err(DdaError::InvalidInput(format!(
                "a sample set needs at least 2 samples, got {}",
                features.len()
            )));
        }
        let dim = features[0].len();
        if let Some(bad) = features.iter().position(|f| f.len() != dim) {
            return Err(DdaError::DimensionMismatch(format!(
                "sample {bad} has dimension {}, expected {dim}",
                features[bad].len()
            )));
        }
        if features.iter().any(|f| f.iter().any(|x| !x.is_finite())) {
            return Err(DdaError::InvalidInput("non-finite feature value".into()));
        }
        let mut counts = vec![0; class_count];
        for &l in &labels {
            if l >= class_count {
                return Err(DdaError::InvalidInput(format!(
                    "label {l} out of range for {class_count} classes"
                )));
            }
            counts[l] += 1;
        }
        Ok(Self {
            features,
            labels,
            class_count,
            counts,
        })
    }

    pub fn features(&self) -> &[Vector<T>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    /// Applies `f` to every feature vector, keeping labels.
    pub fn map_features(&self, f: impl Fn(&Vector<T>) -> Vector<T>) -> Result<Self> {
        Self::new(
            self.features.iter().map(f).collect(),
            self.labels.clone(),
            self.class_count,
        )
    }

    /// Features stacked as an `n x d` matrix.
    pub fn feature_matrix(&self) -> Matrix<T> {
        Matrix::from_rows(&self.features)
    }
}

/// Divisor used for per-class and mixture scatters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Convention {
    /// Divide by `n_k` (and `n` for the mixture). `S_M = S_W + S_B` holds exactly.
    #[default]
    Biased,
    /// Divide by `n_k - 1` (and `n - 1`). The mixture decomposition no longer holds.
    Unbiased,
}

impl Convention {
    fn divisor(self, count: usize) -> usize {
        match self {
            Convention::Biased => count,
            Convention::Unbiased => count - 1,
        }
    }

    fn check(self, class: usize, count: usize) -> Result<()> {
        let min = match self {
            Convention::Biased => 1,
            Convention::Unbiased => 2,
        };
        if count < min {
            Err(DdaError::DegenerateClass { class, count })
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassStats<T> {
    pub means: Vec<Vector<T>>,
    pub covariances: Vec<Matrix<T>>,
    pub counts: Vec<usize>,
    pub convention: Convention,
}

fn class_mean_and_scatter<T: Scalar>(s: &SampleSet<T>, class: usize) -> (Vector<T>, Matrix<T>) {
    let d = s.dim();
    let mut mean = vec![T::zero(); d];
    let mut n = 0usize;
    for (x, _) in s
        .features
        .iter()
        .zip(&s.labels)
        .filter(|(_, &l)| l == class)
    {
        for (m, &v) in mean.iter_mut().zip(x.iter()) {
            *m += v;
        }
        n += 1;
    }
    let inv = T::one() / T::from_count(n.max(1));
    mean.iter_mut().for_each(|m| *m *= inv);
    let mut scatter = Matrix::zeros(d, d);
    let mut dev = vec![T::zero(); d];
    for (x, _) in s
        .features
        .iter()
        .zip(&s.labels)
        .filter(|(_, &l)| l == class)
    {
        for ((dv, &v), &m) in dev.iter_mut().zip(x.iter()).zip(&mean) {
            *dv = v - m;
        }
        accumulate_outer(&mut scatter, &dev, T::one());
    }
    (mean.into(), scatter)
}

fn accumulate_outer<T: Scalar>(m: &mut Matrix<T>, v: &[T], weight: T) {
    for (i, &a) in v.iter().enumerate() {
        let wa = weight * a;
        for (j, &b) in v.iter().enumerate() {
            m[(i, j)] += wa * b;
        }
    }
}

/// Per-class means and covariances.
pub fn class_stats<T: Scalar>(s: &SampleSet<T>, convention: Convention) -> Result<ClassStats<T>> {
    let mut means = Vec::with_capacity(s.class_count);
    let mut covariances = Vec::with_capacity(s.class_count);
    for class in 0..s.class_count {
        let count = s.counts[class];
        convention.check(class, count)?;
        let (mean, scatter) = class_mean_and_scatter(s, class);
        means.push(mean);
        covariances.push(scatter.scale(T::one() / T::from_count(convention.divisor(count))));
    }
    Ok(ClassStats {
        means,
        covariances,
        counts: s.counts.clone(),
        convention,
    })
}

/// Affine projection `y = w^T x + w0` with `|w| = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearDiscriminant<T> {
    w: Vector<T>,
    w0: T,
}

impl<T: Scalar> LinearDiscriminant<T> {
    /// Normalizes `w` to unit length. Fails on a zero direction.
    pub fn new(w: impl Into<Vector<T>>, w0: T) -> Result<Self> {
        let mut w = w.into();
        let norm = w.norm();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(DdaError::InvalidInput(
                "projection direction must be non-zero".into(),
            ));
        }
        w.iter_mut().for_each(|x| *x /= norm);
        Ok(Self { w, w0 })
    }

    pub fn direction(&self) -> &Vector<T> {
        &self.w
    }

    pub fn bias(&self) -> T {
        self.w0
    }

    pub fn with_bias(&self, w0: T) -> Self {
        Self {
            w: self.w.clone(),
            w0,
        }
    }

    pub fn project(&self, x: &[T]) -> Result<T> {
        if x.len() != self.w.len() {
            return Err(DdaError::DimensionMismatch(format!(
                "input has dimension {}, direction has {}",
                x.len(),
                self.w.len()
            )));
        }
        Ok(self.w.dot(x) + self.w0)
    }

    /// Class 1 when the projection is positive, class 0 otherwise.
    pub fn classify(&self, x: &[T]) -> Result<usize> {
        Ok(usize::from(self.project(x)? > T::zero()))
    }

    /// Fraction of samples classified correctly by the sign of the projection.
    pub fn accuracy(&self, s: &SampleSet<T>) -> Result<f64> {
        let mut hits = 0usize;
        for (x, &l) in s.features.iter().zip(&s.labels) {
            hits += usize::from(self.classify(x)? == l);
        }
        Ok(hits as f64 / s.len() as f64)
    }

    pub fn project_all(&self, s: &SampleSet<T>) -> Result<Vec<T>> {
        s.features.iter().map(|x| self.project(x)).collect()
    }
}

/// Projected mean `m_k` and variance `s_k^2` of one class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectedClass<T> {
    pub mean: T,
    pub variance: T,
}

pub fn projected_class_stats<T: Scalar>(
    d: &LinearDiscriminant<T>,
    stats: &ClassStats<T>,
) -> Result<Vec<ProjectedClass<T>>> {
    stats
        .means
        .iter()
        .zip(&stats.covariances)
        .map(|(mu, sigma)| {
            Ok(ProjectedClass {
                mean: d.project(mu)?,
                variance: sigma.quad_form(&d.w)?,
            })
        })
        .collect()
}

const SCATTER_FLOOR: f64 = 1e-12;

/// `(m1 - m2)^2 / (s1^2 + s2^2)`.
pub fn fisher_criterion<T: Scalar>(m1: T, m2: T, var1: T, var2: T) -> Result<T> {
    let within = var1 + var2;
    if !(within > T::lit(SCATTER_FLOOR)) {
        return Err(DdaError::ZeroWithinScatter(within.to_f64_lossy()));
    }
    let gap = m1 - m2;
    Ok(gap * gap / within)
}

/// Prior-weighted criterion `(p1 m1^2 + p2 m2^2) / (p1 s1^2 + p2 s2^2)`.
///
/// Scatter is measured around zero, so unlike [`fisher_criterion`] this
/// depends on the projection bias.
pub fn fukunaga_criterion<T: Scalar>(p1: T, p2: T, m1: T, m2: T, var1: T, var2: T) -> Result<T> {
    if p1 < T::zero() || p2 < T::zero() || !(p1 + p2 > T::zero()) {
        return Err(DdaError::InvalidInput(format!(
            "class priors must be non-negative with a positive sum, got {p1} and {p2}"
        )));
    }
    let within = p1 * var1 + p2 * var2;
    if !(within > T::lit(SCATTER_FLOOR)) {
        return Err(DdaError::ZeroWithinScatter(within.to_f64_lossy()));
    }
    Ok((p1 * m1 * m1 + p2 * m2 * m2) / within)
}

/// Class means, mixture mean, and the between / within / mixture scatters.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatterSet<T> {
    pub class_means: Vec<Vector<T>>,
    pub mixture_mean: Vector<T>,
    pub s_b: Matrix<T>,
    pub s_w: Matrix<T>,
    pub s_m: Matrix<T>,
    pub counts: Vec<usize>,
    pub convention: Convention,
}

impl<T: Scalar> ScatterSet<T> {
    pub fn dim(&self) -> usize {
        self.s_w.rows()
    }

    pub fn pair(&self, pair: ScatterPair) -> (&Matrix<T>, &Matrix<T>) {
        match pair {
            ScatterPair::BetweenWithin => (&self.s_b, &self.s_w),
            ScatterPair::WithinMixture => (&self.s_w, &self.s_m),
            ScatterPair::BetweenMixture => (&self.s_b, &self.s_m),
        }
    }
}

/// Between-class, within-class and mixture scatter matrices.
///
/// Class scatters are weighted by their priors `n_k / n`. Under
/// [`Convention::Biased`] the mixture scatter equals `S_W + S_B` up to
/// rounding.
pub fn scatter_matrices<T: Scalar>(
    s: &SampleSet<T>,
    convention: Convention,
) -> Result<ScatterSet<T>> {
    let n = s.len();
    let d = s.dim();
    let nt = T::from_count(n);
    let mut class_means = Vec::with_capacity(s.class_count);
    let mut s_w = Matrix::zeros(d, d);
    for class in 0..s.class_count {
        let count = s.counts[class];
        convention.check(class, count)?;
        let (mean, scatter) = class_mean_and_scatter(s, class);
        let prior = T::from_count(count) / nt;
        s_w.axpy(prior / T::from_count(convention.divisor(count)), &scatter);
        class_means.push(mean);
    }

    let mut mixture = vec![T::zero(); d];
    for (mean, &count) in class_means.iter().zip(&s.counts) {
        let prior = T::from_count(count) / nt;
        for (m, &v) in mixture.iter_mut().zip(mean.iter()) {
            *m += prior * v;
        }
    }

    let mut s_b = Matrix::zeros(d, d);
    let mut dev = vec![T::zero(); d];
    for (mean, &count) in class_means.iter().zip(&s.counts) {
        for ((dv, &v), &m0) in dev.iter_mut().zip(mean.iter()).zip(&mixture) {
            *dv = v - m0;
        }
        accumulate_outer(&mut s_b, &dev, T::from_count(count) / nt);
    }

    let mut s_m = Matrix::zeros(d, d);
    for x in &s.features {
        for ((dv, &v), &m0) in dev.iter_mut().zip(x.iter()).zip(&mixture) {
            *dv = v - m0;
        }
        accumulate_outer(&mut s_m, &dev, T::one());
    }
    let s_m = s_m.scale(T::one() / T::from_count(convention.divisor(n)));

    Ok(ScatterSet {
        class_means,
        mixture_mean: mixture.into(),
        s_b,
        s_w,
        s_m,
        counts: s.counts.clone(),
        convention,
    })
}

/// Which `(S1, S2)` pair enters `tr{S2^-1 S1}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ScatterPair {
    #[default]
    BetweenWithin,
    WithinMixture,
    BetweenMixture,
}

/// Value of `tr{(S2 + ridge I)^-1 S1}` and the eigenvalues of that product.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceCriterion<T> {
    pub value: T,
    /// Descending.
    pub eigenvalues: Vec<T>,
}

/// Trace separability criterion.
///
/// The value comes from an SPD solve followed by a trace; the eigenvalues
/// come from the symmetric matrix `L^-1 S1 L^-T` where `L L^T = S2 + ridge I`,
/// which is similar to `S2^-1 S1`. The two routes agree to rounding.
pub fn trace_criterion<T: Scalar>(
    ss: &ScatterSet<T>,
    pair: ScatterPair,
    ridge: T,
) -> Result<TraceCriterion<T>> {
    let (s1, s2) = ss.pair(pair);
    trace_criterion_of(s1, s2, ridge)
}

pub(crate) fn trace_criterion_of<T: Scalar>(
    s1: &Matrix<T>,
    s2: &Matrix<T>,
    ridge: T,
) -> Result<TraceCriterion<T>> {
    if !(ridge >= T::zero()) {
        return Err(DdaError::InvalidInput(format!(
            "ridge must be non-negative, got {ridge}"
        )));
    }
    let s2r = s2.add_ridge(ridge);
    let value = trace(&solve_spd(&s2r, s1)?)?;

    let l = cholesky(&s2r)?;
    let mut y = s1.clone();
    forward_substitute(&l, &mut y);
    let mut c = y.transpose();
    forward_substitute(&l, &mut c);
    let n = c.rows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (c[(i, j)] + c[(j, i)]) * T::half();
            c[(i, j)] = avg;
            c[(j, i)] = avg;
        }
    }
    let eigenvalues = sym_eig(&c)?.values;
    Ok(TraceCriterion { value, eigenvalues })
}

/// `1e-8 * tr(S_W) / dim`, a scale-aware ridge for near-singular batches.
pub fn default_ridge<T: Scalar>(s_w: &Matrix<T>) -> T {
    let dim = s_w.rows().max(1);
    let tr: T = s_w.diag().into_iter().sum();
    T::lit(1e-8) * tr / T::from_count(dim)
}

/// Closed-form two-class Fisher discriminant.
///
/// The direction is `(S_W + ridge I)^-1 (mu_1 - mu_0)` normalized so that it
/// points from class 0 toward class 1; the bias puts the decision threshold
/// (zero) halfway between the projected class means.
pub fn fit_lda<T: Scalar>(s: &SampleSet<T>, ridge: T) -> Result<LinearDiscriminant<T>> {
    if s.class_count != 2 {
        return Err(DdaError::NotTwoClass(s.class_count));
    }
    let ss = scatter_matrices(s, Convention::Biased)?;
    let diff: Vec<T> = ss.class_means[1]
        .iter()
        .zip(ss.class_means[0].iter())
        .map(|(&a, &b)| a - b)
        .collect();
    let w = solve_spd(&ss.s_w.add_ridge(ridge), &Matrix::column(&diff))?.into_vec();
    let mut w = Vector::new(w);
    if w.dot(&diff) < T::zero() {
        w.iter_mut().for_each(|x| *x = -*x);
    }
    let d = LinearDiscriminant::new(w, T::zero())?;
    let mid = (d.w.dot(&ss.class_means[0]) + d.w.dot(&ss.class_means[1])) * T::half();
    Ok(d.with_bias(-mid))
}

/// [`fit_lda`] with [`default_ridge`].
pub fn fit_lda_default<T: Scalar>(s: &SampleSet<T>) -> Result<LinearDiscriminant<T>> {
    let ss = scatter_matrices(s, Convention::Biased)?;
    fit_lda(s, default_ridge(&ss.s_w))
}

/// One-dimensional threshold rule on scalar scores.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdRule<T> {
    pub threshold: T,
    /// When true, scores above the threshold are class 1.
    pub class1_high: bool,
}

impl<T: Scalar> ThresholdRule<T> {
    /// Threshold halfway between the two class means, oriented so class 1
    /// lies on the side of its mean.
    pub fn midpoint(scores: &[T], labels: &[usize]) -> Result<Self> {
        let (mut s0, mut s1, mut n0, mut n1) = (T::zero(), T::zero(), 0usize, 0usize);
        for (&y, &l) in scores.iter().zip(labels) {
            match l {
                0 => {
                    s0 += y;
                    n0 += 1;
                }
                1 => {
                    s1 += y;
                    n1 += 1;
                }
                other => return Err(DdaError::NotTwoClass(other + 1)),
            }
        }
        if n0 == 0 || n1 == 0 {
            return Err(DdaError::OneClassOnly);
        }
        let m0 = s0 / T::from_count(n0);
        let m1 = s1 / T::from_count(n1);
        Ok(Self {
            threshold: (m0 + m1) * T::half(),
            class1_high: m1 >= m0,
        })
    }

    pub fn classify(&self, score: T) -> usize {
        usize::from((score > self.threshold) == self.class1_high)
    }

    pub fn accuracy(&self, scores: &[T], labels: &[usize]) -> f64 {
        let hits = scores
            .iter()
            .zip(labels)
            .filter(|(&y, &l)| self.classify(y) == l)
            .count();
        hits as f64 / scores.len().max(1) as f64
    }
}

/// Best two-class accuracy attainable by any threshold on `scores`, in
/// either orientation.
pub fn best_threshold_accuracy<T: Scalar>(scores: &[T], labels: &[usize]) -> f64 {
    let n = scores.len();
    if n == 0 {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores[a]
            .partial_cmp(&scores[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let total1 = labels.iter().filter(|&&l| l == 1).count();
    // Cut between position i-1 and i; everything before is predicted class 0.
    let mut below1 = 0usize;
    let mut best = total1.max(n - total1);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && scores[order[j]] == scores[order[i]] {
            below1 += usize::from(labels[order[j]] == 1);
            j += 1;
        }
        let below0 = j - below1;
        let above1 = total1 - below1;
        let correct = below0 + above1;
        best = best.max(correct).max(n - correct);
        i = j;
    }
    best as f64 / n as f64
}
