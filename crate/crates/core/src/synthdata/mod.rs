//! Deterministic synthetic data.
//!
//! Every generator is a pure function of its parameters and a `u64` seed. The
//! random source is ChaCha with 8 rounds (`rand_chacha::ChaCha8Rng`), seeded
//! through `seed_from_u64`; per-image generators select ChaCha stream
//! `index` of the same key, so images can be produced independently and in
//! any order. Gaussian draws use `rand_distr::StandardNormal`.

mod csv;
pub mod pgm;

pub use self::csv::{read_samples_csv, write_samples_csv};
pub use pgm::{
    decode_pgm, encode_pgm, read_mask_pgm, read_pgm, read_scores_pgm, write_mask_pgm, write_pgm,
    write_scores_pgm, GrayImage,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::discriminant::SampleSet;
use crate::error::{DdaError, Result};
use crate::numerics::{cholesky_semidefinite, Matrix, Vector};
use crate::scalar::Scalar;
use crate::segmetrics::{MaskImage, ScoreMap};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for item `index` of a seeded collection.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlobClass<T> {
    pub mean: Vector<T>,
    /// Symmetric positive semidefinite.
    pub covariance: Matrix<T>,
    pub count: usize,
}

/// Gaussian classes drawn as `mean + L z` with `L L^T = covariance`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlobSpec<T> {
    pub classes: Vec<BlobClass<T>>,
    pub seed: u64,
}

impl<T: Scalar> BlobSpec<T> {
    /// Two elongated, strongly correlated classes side by side. Projection
    /// onto the mean difference overlaps heavily; the Fisher direction
    /// separates them cleanly.
    pub fn elongated_pair(count: usize, seed: u64) -> Self {
        let cov = Matrix::from_rows(&[[T::lit(0.5), T::lit(0.45)], [T::lit(0.45), T::lit(0.5)]]);
        let class = |x: f64| BlobClass {
            mean: Vector::from([T::lit(x), T::zero()]),
            covariance: cov.clone(),
            count,
        };
        Self {
            classes: vec![class(0.0), class(2.0)],
            seed,
        }
    }
}

pub fn gaussian_blobs<T: Scalar>(spec: &BlobSpec<T>) -> Result<SampleSet<T>> {
    let dim = spec.classes.first().map_or(0, |c| c.mean.len());
    let mut r = rng(spec.seed);
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (label, class) in spec.classes.iter().enumerate() {
        if class.mean.len() != dim || class.covariance.shape() != (dim, dim) {
            return Err(DdaError::DimensionMismatch(format!(
                "class {label} does not match dimension {dim}"
            )));
        }
        if class.count == 0 {
            return Err(DdaError::DegenerateClass {
                class: label,
                count: 0,
            });
        }
        let factor = cholesky_semidefinite(&class.covariance)?;
        for _ in 0..class.count {
            let z: Vec<T> = (0..dim)
                .map(|_| T::lit(r.sample::<f64, _>(StandardNormal)))
                .collect();
            let offset = factor.mul_vec(&z)?;
            features.push(
                class
                    .mean
                    .iter()
                    .zip(offset.iter())
                    .map(|(&m, &o)| m + o)
                    .collect::<Vec<_>>()
                    .into(),
            );
            labels.push(label);
        }
    }
    SampleSet::new(features, labels, spec.classes.len())
}

pub const DISK_RADIUS: f64 = 1.0;
pub const RING_RADII: (f64, f64) = (1.0, 1.1);

/// Class 0 fills the unit disk, class 1 a thin annulus hugging it (both
/// uniform by area). The annulus is thin enough that any half-plane cuts
/// off only a small cap of it, which caps linear accuracy near 0.59.
pub fn inseparable_rings<T: Scalar>(seed: u64, per_class: usize) -> Result<SampleSet<T>> {
    if per_class < 2 {
        return Err(DdaError::InvalidInput(format!(
            "need at least 2 samples per class, got {per_class}"
        )));
    }
    let mut r = rng(seed);
    let mut features = Vec::with_capacity(2 * per_class);
    let mut labels = Vec::with_capacity(2 * per_class);
    let (r0, r1) = RING_RADII;
    for (label, (inner, outer)) in [(0.0, DISK_RADIUS), (r0, r1)].into_iter().enumerate() {
        for _ in 0..per_class {
            let u: f64 = r.random();
            let radius = (inner * inner + u * (outer * outer - inner * inner)).sqrt();
            let angle = r.random::<f64>() * std::f64::consts::TAU;
            features.push(Vector::from([
                T::lit(radius * angle.cos()),
                T::lit(radius * angle.sin()),
            ]));
            labels.push(label);
        }
    }
    SampleSet::new(features, labels, 2)
}

/// Parameters of the synthetic segmentation images.
#[derive(Clone, Debug, PartialEq)]
pub struct SegSpec {
    pub size: usize,
    /// Background intensity level.
    pub base: f64,
    /// Foreground intensity added on top of `base`.
    pub offset: f64,
    /// Amplitude of the smooth sinusoidal texture; keep below `offset / 2`.
    pub texture: f64,
    /// Standard deviation of additive Gaussian noise.
    pub noise: f64,
    pub min_fraction: f64,
    pub max_fraction: f64,
}

impl SegSpec {
    pub fn new(size: usize) -> Self {
        Self {
            size,
            base: 0.25,
            offset: 0.4,
            texture: 0.08,
            noise: 0.25,
            min_fraction: 0.05,
            max_fraction: 0.6,
        }
    }

    /// Intensity halfway between background and foreground levels.
    pub fn midpoint(&self) -> f64 {
        self.base + self.offset / 2.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthImage<T> {
    pub image: ScoreMap<T>,
    pub mask: MaskImage,
    pub index: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug)]
enum Shape {
    Ellipse {
        cy: f64,
        cx: f64,
        a: f64,
        b: f64,
        cos: f64,
        sin: f64,
    },
    Rect {
        cy: f64,
        cx: f64,
        hy: f64,
        hx: f64,
    },
}

impl Shape {
    fn random(r: &mut ChaCha8Rng, size: f64) -> Self {
        let cy = size * r.random_range(0.15..0.85);
        let cx = size * r.random_range(0.15..0.85);
        if r.random_bool(0.5) {
            let angle = r.random::<f64>() * std::f64::consts::PI;
            Shape::Ellipse {
                cy,
                cx,
                a: size * r.random_range(0.08..0.3),
                b: size * r.random_range(0.08..0.3),
                cos: angle.cos(),
                sin: angle.sin(),
            }
        } else {
            Shape::Rect {
                cy,
                cx,
                hy: size * r.random_range(0.08..0.25),
                hx: size * r.random_range(0.08..0.25),
            }
        }
    }

    fn contains(&self, y: f64, x: f64) -> bool {
        match *self {
            Shape::Ellipse {
                cy,
                cx,
                a,
                b,
                cos,
                sin,
            } => {
                let (dy, dx) = (y - cy, x - cx);
                let u = dx * cos + dy * sin;
                let v = -dx * sin + dy * cos;
                (u / a).powi(2) + (v / b).powi(2) <= 1.0
            }
            Shape::Rect { cy, cx, hy, hx } => (y - cy).abs() <= hy && (x - cx).abs() <= hx,
        }
    }
}

const MAX_SHAPE_ATTEMPTS: usize = 1000;

fn synth_image<T: Scalar>(spec: &SegSpec, seed: u64, index: usize) -> Result<SynthImage<T>> {
    let mut r = stream_rng(seed, index as u64);
    let size = spec.size;
    let sz = size as f64;
    let mut mask = None;
    for _ in 0..MAX_SHAPE_ATTEMPTS {
        let shapes: Vec<Shape> = (0..r.random_range(1..=3))
            .map(|_| Shape::random(&mut r, sz))
            .collect();
        let m = MaskImage::from_fn(size, size, |row, col| {
            let (y, x) = (row as f64 + 0.5, col as f64 + 0.5);
            shapes.iter().any(|s| s.contains(y, x))
        });
        let f = m.foreground_fraction();
        if f >= spec.min_fraction && f <= spec.max_fraction {
            mask = Some(m);
            break;
        }
    }
    let mask = mask.ok_or_else(|| {
        DdaError::InvalidInput(format!(
            "could not place shapes covering the requested fraction in image {index}"
        ))
    })?;

    let fy = r.random_range(1.0..3.0);
    let fx = r.random_range(1.0..3.0);
    let py = r.random::<f64>();
    let px = r.random::<f64>();
    let tau = std::f64::consts::TAU;
    let mut scores = Vec::with_capacity(size * size);
    for row in 0..size {
        for col in 0..size {
            let texture = spec.texture
                * (tau * (fx * col as f64 / sz + px)).sin()
                * (tau * (fy * row as f64 / sz + py)).cos();
            let noise = spec.noise * r.sample::<f64, _>(StandardNormal);
            let fg = if mask.get(row, col) { spec.offset } else { 0.0 };
            scores.push(T::lit((spec.base + fg + texture + noise).clamp(0.0, 1.0)));
        }
    }
    Ok(SynthImage {
        image: ScoreMap::new(size, size, scores)?,
        mask,
        index,
        seed,
    })
}

/// `count` images of 1-3 ellipses / rectangles over a textured, noisy
/// background, with default [`SegSpec`] parameters.
pub fn synth_segmentation_set<T: Scalar>(
    seed: u64,
    count: usize,
    size: usize,
) -> Result<Vec<SynthImage<T>>> {
    synth_segmentation_set_with(seed, count, &SegSpec::new(size))
}

pub fn synth_segmentation_set_with<T: Scalar>(
    seed: u64,
    count: usize,
    spec: &SegSpec,
) -> Result<Vec<SynthImage<T>>> {
    if spec.size < 16 {
        return Err(DdaError::InvalidInput(format!(
            "image size must be at least 16, got {}",
            spec.size
        )));
    }
    (0..count).map(|i| synth_image(spec, seed, i)).collect()
}

/// Number of per-pixel features produced by [`pixel_features`].
pub const PIXEL_FEATURES: usize = 11;

/// One row per pixel: normalized row, normalized column, intensity, and the
/// eight neighbour intensities (edges replicated).
pub fn pixel_features<T: Scalar>(image: &ScoreMap<T>) -> Matrix<T> {
    let (h, w) = image.shape();
    let mut out = Matrix::zeros(h * w, PIXEL_FEATURES);
    let norm = |i: usize, n: usize| {
        if n > 1 {
            T::from_count(i) / T::from_count(n - 1)
        } else {
            T::zero()
        }
    };
    for r in 0..h {
        for c in 0..w {
            let row = out.row_mut(r * w + c);
            row[0] = norm(r, h);
            row[1] = norm(c, w);
            row[2] = image.get(r, c);
            let mut k = 3;
            for dr in [-1isize, 0, 1] {
                for dc in [-1isize, 0, 1] {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let rr = (r as isize + dr).clamp(0, h as isize - 1) as usize;
                    let cc = (c as isize + dc).clamp(0, w as isize - 1) as usize;
                    row[k] = image.get(rr, cc);
                    k += 1;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discriminant::{class_stats, Convention};

    #[test]
    fn zero_covariance_collapses_to_mean() {
        let spec = BlobSpec {
            classes: vec![
                BlobClass {
                    mean: Vector::from([1.0, -2.0]),
                    covariance: Matrix::zeros(2, 2),
                    count: 5,
                },
                BlobClass {
                    mean: Vector::from([0.0, 0.0]),
                    covariance: Matrix::identity(2),
                    count: 3,
                },
            ],
            seed: 3,
        };
        let s = gaussian_blobs(&spec).unwrap();
        for x in &s.features()[..5] {
            assert_eq!(x.as_slice(), &[1.0, -2.0]);
        }
        assert_eq!(s.class_counts(), &[5, 3]);
    }

    #[test]
    fn blobs_are_deterministic() {
        let a = gaussian_blobs(&BlobSpec::<f64>::elongated_pair(50, 11)).unwrap();
        let b = gaussian_blobs(&BlobSpec::<f64>::elongated_pair(50, 11)).unwrap();
        let c = gaussian_blobs(&BlobSpec::<f64>::elongated_pair(50, 12)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn identity_covariance_sample_estimate() {
        let spec = BlobSpec {
            classes: vec![BlobClass {
                mean: Vector::from([0.0, 0.0]),
                covariance: Matrix::identity(2),
                count: 10_000,
            }],
            seed: 5,
        };
        let st = class_stats(&gaussian_blobs::<f64>(&spec).unwrap(), Convention::Unbiased).unwrap();
        let cov = &st.covariances[0];
        assert!(cov.sub(&Matrix::identity(2)).unwrap().max_abs() < 0.1);
    }

    #[test]
    fn blob_spec_validation() {
        let spec = BlobSpec {
            classes: vec![BlobClass {
                mean: Vector::from([0.0]),
                covariance: Matrix::identity(2),
                count: 3,
            }],
            seed: 0,
        };
        assert!(gaussian_blobs::<f64>(&spec).is_err());
    }

    #[test]
    fn rings_geometry_and_determinism() {
        let s = inseparable_rings::<f64>(7, 200).unwrap();
        assert_eq!(s.class_counts(), &[200, 200]);
        for (x, &l) in s.features().iter().zip(s.labels()) {
            let r = x.norm();
            if l == 0 {
                assert!(r <= DISK_RADIUS);
            } else {
                assert!(r >= RING_RADII.0 && r <= RING_RADII.1);
            }
        }
        assert_eq!(s, inseparable_rings::<f64>(7, 200).unwrap());
        assert!(inseparable_rings::<f64>(7, 1).is_err());
    }

    #[test]
    fn noiseless_images_threshold_to_mask() {
        let spec = SegSpec {
            noise: 0.0,
            ..SegSpec::new(32)
        };
        for img in synth_segmentation_set_with::<f64>(9, 8, &spec).unwrap() {
            let mid = spec.midpoint();
            let m = MaskImage::from_fn(32, 32, |r, c| img.image.get(r, c) > mid);
            assert_eq!(m, img.mask);
        }
    }

    #[test]
    fn foreground_fraction_in_range_and_deterministic() {
        let set = synth_segmentation_set::<f64>(4, 20, 24).unwrap();
        for img in &set {
            let f = img.mask.foreground_fraction();
            assert!((0.05..=0.6).contains(&f), "fraction {f}");
            assert!(img.image.scores().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        assert_eq!(set, synth_segmentation_set::<f64>(4, 20, 24).unwrap());
        // images are independent of how many are requested
        assert_eq!(
            set[..5],
            synth_segmentation_set::<f64>(4, 5, 24).unwrap()[..]
        );
        assert!(synth_segmentation_set::<f64>(4, 1, 8).is_err());
    }

    #[test]
    fn features_layout() {
        let img = ScoreMap::new(2, 3, vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let f = pixel_features(&img);
        assert_eq!(f.shape(), (6, PIXEL_FEATURES));
        // pixel (0, 1): row 0, col 0.5, value 0.1, neighbours with replicated edges
        assert_eq!(
            f.row(1),
            &[0.0, 0.5, 0.1, 0.0, 0.1, 0.2, 0.0, 0.2, 0.3, 0.4, 0.5]
        );
    }
}
