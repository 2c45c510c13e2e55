//! Binary segmentation metrics: region IoU / F1 / F-beta, ROC AUC, boundary
//! masks from iterated 3x3 erosion, threshold sweeps and class-conditional
//! score histograms.

use std::cmp::Ordering;
use std::io::Write;

use crate::error::{DdaError, Result};
use crate::loss::sigmoid;
use crate::scalar::Scalar;

/// `beta^2` of the precision-weighted F-measure.
pub const DEFAULT_BETA_SQ: f64 = 0.3;
pub const DEFAULT_GRID: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskImage {
    height: usize,
    width: usize,
    pixels: Vec<bool>,
}

impl MaskImage {
    pub fn new(height: usize, width: usize, pixels: Vec<bool>) -> Result<Self> {
        if pixels.len() != height * width {
            return Err(DdaError::DimensionMismatch(format!(
                "{} pixels for a {height}x{width} mask",
                pixels.len()
            )));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            pixels: vec![false; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut pixels = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self {
            height,
            width,
            pixels,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixels(&self) -> &[bool] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.pixels[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    pub fn foreground_fraction(&self) -> f64 {
        self.count() as f64 / self.pixels.len().max(1) as f64
    }

    /// Labels 1 for foreground, 0 for background.
    pub fn labels(&self) -> Vec<usize> {
        self.pixels.iter().map(|&p| usize::from(p)).collect()
    }

    pub fn and_not(&self, other: &Self) -> Result<Self> {
        check_shape(self.shape(), other.shape())?;
        let pixels = self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(&a, &b)| a && !b)
            .collect();
        Ok(Self {
            height: self.height,
            width: self.width,
            pixels,
        })
    }

    /// Stacks masks of equal width vertically.
    pub fn stack(masks: &[MaskImage]) -> Result<Self> {
        let width = masks.first().map_or(0, |m| m.width);
        let mut pixels = Vec::new();
        let mut height = 0;
        for m in masks {
            if m.width != width {
                return Err(DdaError::ShapeMismatch(m.height, m.width, m.height, width));
            }
            pixels.extend_from_slice(&m.pixels);
            height += m.height;
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }
}

fn check_shape(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(DdaError::ShapeMismatch(a.0, a.1, b.0, b.1))
    }
}

/// Real-valued per-pixel predictions.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMap<T> {
    height: usize,
    width: usize,
    scores: Vec<T>,
}

impl<T: Scalar> ScoreMap<T> {
    pub fn new(height: usize, width: usize, scores: Vec<T>) -> Result<Self> {
        if scores.len() != height * width {
            return Err(DdaError::DimensionMismatch(format!(
                "{} scores for a {height}x{width} map",
                scores.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(DdaError::InvalidInput(
                "score map contains non-finite values".into(),
            ));
        }
        Ok(Self {
            height,
            width,
            scores,
        })
    }

    pub fn from_mask(mask: &MaskImage) -> Self {
        let scores = mask
            .pixels
            .iter()
            .map(|&p| if p { T::one() } else { T::zero() })
            .collect();
        Self {
            height: mask.height,
            width: mask.width,
            scores,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn scores(&self) -> &[T] {
        &self.scores
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.scores[row * self.width + col]
    }

    /// Foreground wherever the normalized score is at least `theta`.
    pub fn threshold(&self, theta: f64, normalization: Normalization) -> MaskImage {
        let (norm, _) = normalize(&self.scores, normalization);
        MaskImage {
            height: self.height,
            width: self.width,
            pixels: norm.iter().map(|&s| s >= theta).collect(),
        }
    }

    pub fn stack(maps: &[ScoreMap<T>]) -> Result<Self> {
        let width = maps.first().map_or(0, |m| m.width);
        let mut scores = Vec::new();
        let mut height = 0;
        for m in maps {
            if m.width != width {
                return Err(DdaError::ShapeMismatch(m.height, m.width, m.height, width));
            }
            scores.extend_from_slice(&m.scores);
            height += m.height;
        }
        Ok(Self {
            height,
            width,
            scores,
        })
    }
}

/// How scores are mapped onto `[0, 1]` before thresholding or binning.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Normalization {
    /// `(s - min) / (max - min)` per map; a constant map becomes all zeros.
    #[default]
    MinMax,
    Sigmoid,
}

impl Normalization {
    pub fn name(self) -> &'static str {
        match self {
            Normalization::MinMax => "minmax",
            Normalization::Sigmoid => "sigmoid",
        }
    }
}

/// Normalized scores and whether the input was constant.
pub fn normalize<T: Scalar>(scores: &[T], normalization: Normalization) -> (Vec<f64>, bool) {
    let raw: Vec<f64> = scores.iter().map(|s| s.to_f64_lossy()).collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let constant = !(hi > lo);
    let out = match normalization {
        Normalization::MinMax if constant => vec![0.0; raw.len()],
        Normalization::MinMax => {
            let span = hi - lo;
            raw.iter()
                .map(|&s| ((s - lo) / span).clamp(0.0, 1.0))
                .collect()
        }
        Normalization::Sigmoid => raw.iter().map(|&s| sigmoid(s)).collect(),
    };
    (out, constant)
}

/// Erosion iterations `round(0.02 * sqrt(H^2 + W^2))`, half rounded up,
/// never below 1.
pub fn boundary_iterations(height: usize, width: usize) -> usize {
    let diag = ((height * height + width * width) as f64).sqrt();
    ((0.02 * diag + 0.5).floor() as usize).max(1)
}

/// Erodes `mask` with a full 3x3 structuring element `iterations` times.
/// Pixels outside the image count as background.
pub fn erode(mask: &MaskImage, iterations: usize) -> MaskImage {
    let (h, w) = mask.shape();
    let mut cur = mask.pixels.clone();
    let mut tmp = vec![false; cur.len()];
    for _ in 0..iterations {
        if !cur.iter().any(|&p| p) {
            break;
        }
        // the 3x3 square is the composition of a horizontal and a vertical 3-tap element
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                tmp[i] = cur[i] && c > 0 && cur[i - 1] && c + 1 < w && cur[i + 1];
            }
        }
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                cur[i] = tmp[i] && r > 0 && tmp[i - w] && r + 1 < h && tmp[i + w];
            }
        }
    }
    MaskImage {
        height: h,
        width: w,
        pixels: cur,
    }
}

/// `M AND NOT erode(M, d)` with `d` from [`boundary_iterations`].
pub fn boundary_mask(mask: &MaskImage) -> MaskImage {
    boundary_mask_with(mask, boundary_iterations(mask.height, mask.width))
}

pub fn boundary_mask_with(mask: &MaskImage, iterations: usize) -> MaskImage {
    let eroded = erode(mask, iterations);
    mask.and_not(&eroded).expect("erosion preserves shape")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PixelCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl PixelCounts {
    pub fn of(pred: &MaskImage, gt: &MaskImage) -> Result<Self> {
        check_shape(pred.shape(), gt.shape())?;
        let mut c = Self::default();
        for (&p, &g) in pred.pixels.iter().zip(&gt.pixels) {
            match (p, g) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn metrics(&self, beta_sq: f64) -> RegionMetrics {
        let (tp, fp, fn_) = (self.tp as f64, self.fp as f64, self.fn_ as f64);
        let union = self.tp + self.fp + self.fn_;
        if union == 0 {
            return RegionMetrics {
                iou: 1.0,
                f1: 1.0,
                f_beta: 1.0,
                precision: 1.0,
                recall: 1.0,
            };
        }
        let iou = tp / union as f64;
        let precision = if self.tp + self.fp > 0 {
            tp / (tp + fp)
        } else {
            0.0
        };
        let recall = if self.tp + self.fn_ > 0 {
            tp / (tp + fn_)
        } else {
            0.0
        };
        let f1 = f_measure(precision, recall, 1.0);
        let f_beta = f_measure(precision, recall, beta_sq);
        RegionMetrics {
            iou,
            f1,
            f_beta,
            precision,
            recall,
        }
    }
}

/// `(1 + b2) P R / (b2 P + R)`, zero when both are zero.
pub fn f_measure(precision: f64, recall: f64, beta_sq: f64) -> f64 {
    let den = beta_sq * precision + recall;
    if den > 0.0 {
        (1.0 + beta_sq) * precision * recall / den
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionMetrics {
    pub iou: f64,
    pub f1: f64,
    pub f_beta: f64,
    pub precision: f64,
    pub recall: f64,
}

/// IoU, F1 and F-beta from pixel counts.
///
/// Two empty masks score 1 on every metric; exactly one empty mask scores 0.
pub fn region_metrics(pred: &MaskImage, gt: &MaskImage, beta_sq: f64) -> Result<RegionMetrics> {
    if !(beta_sq > 0.0) {
        return Err(DdaError::InvalidInput(format!(
            "beta^2 must be positive, got {beta_sq}"
        )));
    }
    Ok(PixelCounts::of(pred, gt)?.metrics(beta_sq))
}

/// Area under the ROC curve as the Mann-Whitney rank statistic: the chance
/// that a random foreground pixel outscores a random background pixel, ties
/// counting one half.
pub fn auc<T: Scalar>(scores: &ScoreMap<T>, gt: &MaskImage) -> Result<f64> {
    check_shape(scores.shape(), gt.shape())?;
    let n = scores.scores.len();
    let n_pos = gt.count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(DdaError::OneClassOnly);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores.scores[a]
            .partial_cmp(&scores.scores[b])
            .unwrap_or(Ordering::Equal)
    });
    // Sum of (1-based, tie-averaged) ranks of the positives, kept doubled to stay integral.
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        let mut pos_in_group = 0u128;
        while j < n && scores.scores[order[j]] == scores.scores[order[i]] {
            pos_in_group += u128::from(gt.pixels[order[j]]);
            j += 1;
        }
        // average rank of positions i+1..=j is (i + 1 + j) / 2
        twice_rank_sum += pos_in_group * (i + 1 + j) as u128;
        i = j;
    }
    let p = n_pos as u128;
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SweepObjective {
    IoU,
    F1,
    #[default]
    FBeta,
}

impl SweepObjective {
    pub const ALL: [SweepObjective; 3] = [
        SweepObjective::IoU,
        SweepObjective::F1,
        SweepObjective::FBeta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepObjective::IoU => "iou",
            SweepObjective::F1 => "f1",
            SweepObjective::FBeta => "fbeta",
        }
    }

    pub fn pick(self, m: &RegionMetrics) -> f64 {
        match self {
            SweepObjective::IoU => m.iou,
            SweepObjective::F1 => m.f1,
            SweepObjective::FBeta => m.f_beta,
        }
    }
}

/// Region metrics at one threshold of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdPoint {
    pub theta: f64,
    pub metrics: RegionMetrics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub objective: SweepObjective,
    pub theta_star: f64,
    pub best_value: f64,
    /// `(theta, objective value)` over the grid.
    pub curve: Vec<(f64, f64)>,
    /// Scores were constant; `theta_star` is fixed at 0.5.
    pub constant_scores: bool,
}

/// Region metrics at every point of a uniform grid `theta_j = j / (grid - 1)`
/// on normalized scores. Also returns whether the scores were constant.
pub fn sweep_curves<T: Scalar>(
    scores: &ScoreMap<T>,
    gt: &MaskImage,
    grid: usize,
    normalization: Normalization,
    beta_sq: f64,
) -> Result<(Vec<ThresholdPoint>, bool)> {
    check_shape(scores.shape(), gt.shape())?;
    if grid < 2 {
        return Err(DdaError::InvalidInput(format!(
            "threshold grid needs at least 2 points, got {grid}"
        )));
    }
    let (norm, constant) = normalize(&scores.scores, normalization);
    let mut fg = Vec::new();
    let mut bg = Vec::new();
    for (&s, &g) in norm.iter().zip(&gt.pixels) {
        if g {
            fg.push(s);
        } else {
            bg.push(s);
        }
    }
    fg.sort_by(|a, b| a.total_cmp(b));
    bg.sort_by(|a, b| a.total_cmp(b));
    let at_least = |v: &[f64], t: f64| v.len() - v.partition_point(|&x| x < t);
    let points = (0..grid)
        .map(|j| {
            let theta = j as f64 / (grid - 1) as f64;
            let tp = at_least(&fg, theta);
            let fp = at_least(&bg, theta);
            let counts = PixelCounts {
                tp,
                fp,
                fn_: fg.len() - tp,
                tn: bg.len() - fp,
            };
            ThresholdPoint {
                theta,
                metrics: counts.metrics(beta_sq),
            }
        })
        .collect();
    Ok((points, constant))
}

/// Optimal threshold for `objective`: the lowest grid point attaining the
/// maximum, on min-max normalized scores.
pub fn threshold_sweep<T: Scalar>(
    scores: &ScoreMap<T>,
    gt: &MaskImage,
    objective: SweepObjective,
    grid: usize,
) -> Result<SweepResult> {
    threshold_sweep_with(
        scores,
        gt,
        objective,
        grid,
        Normalization::MinMax,
        DEFAULT_BETA_SQ,
    )
}

pub fn threshold_sweep_with<T: Scalar>(
    scores: &ScoreMap<T>,
    gt: &MaskImage,
    objective: SweepObjective,
    grid: usize,
    normalization: Normalization,
    beta_sq: f64,
) -> Result<SweepResult> {
    let (points, constant) = sweep_curves(scores, gt, grid, normalization, beta_sq)?;
    Ok(pick_threshold(&points, objective, constant))
}

/// Selects the optimal threshold from precomputed sweep points.
pub fn pick_threshold(
    points: &[ThresholdPoint],
    objective: SweepObjective,
    constant: bool,
) -> SweepResult {
    let curve: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.theta, objective.pick(&p.metrics)))
        .collect();
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for &(theta, v) in &curve {
        if v > best.1 {
            best = (theta, v);
        }
    }
    let theta_star = if constant { 0.5 } else { best.0 };
    SweepResult {
        objective,
        theta_star,
        best_value: best.1,
        curve,
        constant_scores: constant,
    }
}

/// Foreground / background histograms of normalized scores, with per-class
/// moments and the histogram overlap coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreHistogram {
    pub bins: usize,
    pub fg_counts: Vec<usize>,
    pub bg_counts: Vec<usize>,
    pub fg_mean: f64,
    pub fg_var: f64,
    pub bg_mean: f64,
    pub bg_var: f64,
    /// `sum_b min(fg_density_b, bg_density_b)`; 0 for disjoint supports, 1
    /// for identical histograms.
    pub overlap: f64,
}

impl ScoreHistogram {
    pub fn n_fg(&self) -> usize {
        self.fg_counts.iter().sum()
    }

    pub fn n_bg(&self) -> usize {
        self.bg_counts.iter().sum()
    }

    pub fn fg_density(&self) -> Vec<f64> {
        density(&self.fg_counts)
    }

    pub fn bg_density(&self) -> Vec<f64> {
        density(&self.bg_counts)
    }

    /// `[lo, hi)` edges of bin `b` (the last bin is closed).
    pub fn bin_edges(&self, b: usize) -> (f64, f64) {
        (
            b as f64 / self.bins as f64,
            (b + 1) as f64 / self.bins as f64,
        )
    }

    /// `(n1 n2 / n) (mean gap)^2 / (n1 var1 + n2 var2)`, the generalized
    /// eigenvalue of the two-class scatter pair on these scores. Zero when a
    /// class is empty or the pooled variance vanishes.
    pub fn separability(&self) -> f64 {
        let (n1, n0) = (self.n_fg() as f64, self.n_bg() as f64);
        let pooled = n1 * self.fg_var + n0 * self.bg_var;
        if n1 == 0.0 || n0 == 0.0 || !(pooled > 0.0) {
            return 0.0;
        }
        let gap = self.fg_mean - self.bg_mean;
        n1 * n0 / (n1 + n0) * gap * gap / pooled
    }
}

fn density(counts: &[usize]) -> Vec<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

pub fn score_histogram<T: Scalar>(
    scores: &ScoreMap<T>,
    gt: &MaskImage,
    bins: usize,
) -> Result<ScoreHistogram> {
    score_histogram_with(scores, gt, bins, Normalization::MinMax)
}

pub fn score_histogram_with<T: Scalar>(
    scores: &ScoreMap<T>,
    gt: &MaskImage,
    bins: usize,
    normalization: Normalization,
) -> Result<ScoreHistogram> {
    check_shape(scores.shape(), gt.shape())?;
    if bins < 2 {
        return Err(DdaError::InvalidInput(format!(
            "histogram needs at least 2 bins, got {bins}"
        )));
    }
    let (norm, _) = normalize(&scores.scores, normalization);
    let mut fg_counts = vec![0usize; bins];
    let mut bg_counts = vec![0usize; bins];
    let mut fg = Vec::new();
    let mut bg = Vec::new();
    for (&s, &g) in norm.iter().zip(&gt.pixels) {
        let b = ((s * bins as f64).floor() as usize).min(bins - 1);
        if g {
            fg_counts[b] += 1;
            fg.push(s);
        } else {
            bg_counts[b] += 1;
            bg.push(s);
        }
    }
    let (fg_mean, fg_var) = mean_var(&fg);
    let (bg_mean, bg_var) = mean_var(&bg);
    let overlap = density(&fg_counts)
        .iter()
        .zip(density(&bg_counts))
        .map(|(&a, b)| a.min(b))
        .sum();
    Ok(ScoreHistogram {
        bins,
        fg_counts,
        bg_counts,
        fg_mean,
        fg_var,
        bg_mean,
        bg_var,
        overlap,
    })
}

/// Per-image evaluation: region and boundary metrics at a fixed threshold,
/// plus AUC on the raw scores.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub name: String,
    pub iou: f64,
    pub f1: f64,
    pub f_beta: f64,
    pub auc: f64,
    pub b_iou: f64,
    pub b_f1: f64,
    pub b_f_beta: f64,
    pub threshold_used: f64,
    pub boundary_iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalOptions {
    pub threshold: f64,
    pub normalization: Normalization,
    pub beta_sq: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            normalization: Normalization::MinMax,
            beta_sq: DEFAULT_BETA_SQ,
        }
    }
}

pub fn evaluate<T: Scalar>(
    name: &str,
    scores: &ScoreMap<T>,
    gt: &MaskImage,
    opts: &EvalOptions,
) -> Result<MetricReport> {
    check_shape(scores.shape(), gt.shape())?;
    let pred = scores.threshold(opts.threshold, opts.normalization);
    let region = region_metrics(&pred, gt, opts.beta_sq)?;
    let d = boundary_iterations(gt.height, gt.width);
    let boundary = region_metrics(
        &boundary_mask_with(&pred, d),
        &boundary_mask_with(gt, d),
        opts.beta_sq,
    )?;
    Ok(MetricReport {
        name: name.to_string(),
        iou: region.iou,
        f1: region.f1,
        f_beta: region.f_beta,
        auc: auc(scores, gt)?,
        b_iou: boundary.iou,
        b_f1: boundary.f1,
        b_f_beta: boundary.f_beta,
        threshold_used: opts.threshold,
        boundary_iterations: d,
    })
}

pub const REPORT_HEADER: &str = "name,iou,f1,fbeta,auc,biou,bf1,bfbeta,theta,d";

/// Writes one row per report followed by a `MEAN` row (column means in
/// report order).
pub fn write_report_csv<W: Write>(mut out: W, reports: &[MetricReport]) -> Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.name,
            r.iou,
            r.f1,
            r.f_beta,
            r.auc,
            r.b_iou,
            r.b_f1,
            r.b_f_beta,
            r.threshold_used,
            r.boundary_iterations
        )?;
    }
    let n = reports.len().max(1) as f64;
    let mean = |f: fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    writeln!(
        out,
        "MEAN,{},{},{},{},{},{},{},{},{}",
        mean(|r| r.iou),
        mean(|r| r.f1),
        mean(|r| r.f_beta),
        mean(|r| r.auc),
        mean(|r| r.b_iou),
        mean(|r| r.b_f1),
        mean(|r| r.b_f_beta),
        mean(|r| r.threshold_used),
        mean(|r| r.boundary_iterations as f64),
    )?;
    Ok(())
}
