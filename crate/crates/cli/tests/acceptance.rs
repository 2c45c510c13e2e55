//! Acceptance suite. Each test checks one criterion at its stated tolerance
//! and prints a single `[PASS]` / `[FAIL]` line; run with `--nocapture` to
//! see them.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ddakit::discriminant::{
    fit_lda, fit_lda_default, scatter_matrices, trace_criterion, Convention, SampleSet,
    ScatterPair, ThresholdRule,
};
use ddakit::loss::{bce, dda_binary, dda_multiclass, dice, BinaryVariant, LossEval, Objective};
use ddakit::net::{flatten_grads, train, Activation, AdamW, NetState, TrainConfig, TrainData};
use ddakit::numerics::{Matrix, Vector};
use ddakit::segmetrics::{
    auc, boundary_iterations, boundary_mask, boundary_mask_with, erode, f_measure, region_metrics,
    score_histogram, threshold_sweep, MaskImage, ScoreMap, SweepObjective,
};
use ddakit::synthdata::{
    gaussian_blobs, inseparable_rings, pixel_features, synth_segmentation_set_with, BlobSpec,
    SegSpec, PIXEL_FEATURES,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

fn report(id: u32, title: &str, pass: bool, detail: String) {
    println!(
        "[{}] criterion {id:>2} {title}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} ({title}) failed: {detail}");
}

fn normal(r: &mut StdRng) -> f64 {
    r.sample(StandardNormal)
}

/// Random labelled point set with `classes` shifted, anisotropic clusters.
/// Every class gets at least two points.
fn random_set(r: &mut StdRng) -> SampleSet<f64> {
    let classes = r.random_range(2..=5);
    let dim = r.random_range(1..=8);
    let n = r.random_range((2 * classes + dim + classes).max(12)..=500);
    let shifts: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..dim).map(|_| 3.0 * normal(r)).collect())
        .collect();
    let scales: Vec<f64> = (0..dim)
        .map(|_| 10f64.powf(r.random_range(-1.0..2.0)))
        .collect();
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let l = if i < 2 * classes {
            i % classes
        } else {
            r.random_range(0..classes)
        };
        let x: Vec<f64> = (0..dim)
            .map(|k| scales[k] * (shifts[l][k] + normal(r)))
            .collect();
        features.push(Vector::new(x));
        labels.push(l);
    }
    SampleSet::new(features, labels, classes).unwrap()
}

fn random_sets(count: usize) -> Vec<SampleSet<f64>> {
    let mut r = StdRng::seed_from_u64(20_240_601);
    (0..count).map(|_| random_set(&mut r)).collect()
}

#[test]
fn criterion_01_scatter_decomposition() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for s in random_sets(200) {
        let sc = scatter_matrices(&s, Convention::Biased).unwrap();
        let gap = sc
            .s_m
            .sub(&sc.s_w.add(&sc.s_b).unwrap())
            .unwrap()
            .norm_inf();
        worst = worst.max(gap / (1.0 + sc.s_m.norm_inf()));
    }
    let elapsed = start.elapsed();
    report(
        1,
        "S_M = S_W + S_B",
        worst <= 1e-10 && elapsed < Duration::from_secs(5),
        format!(
            "worst scaled gap {worst:.2e} (<= 1e-10), {:.2}s (< 5s)",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_02_trace_equals_eigenvalue_sum() {
    let mut worst = 0.0f64;
    let mut rank_ok = true;
    for s in random_sets(200) {
        let sc = scatter_matrices(&s, Convention::Biased).unwrap();
        let t = trace_criterion(&sc, ScatterPair::BetweenWithin, 0.0).unwrap();
        let sum: f64 = t.eigenvalues.iter().sum();
        worst = worst.max((t.value - sum).abs() / t.value.abs());
        let top = t.eigenvalues.iter().copied().fold(0.0f64, f64::max);
        let significant = t.eigenvalues.iter().filter(|&&l| l > 1e-9 * top).count();
        rank_ok &= significant < s.class_count();
    }
    report(
        2,
        "tr{S_W^-1 S_B} = sum of eigenvalues, rank <= L-1",
        worst <= 1e-9 && rank_ok,
        format!("worst relative gap {worst:.2e} (<= 1e-9), rank bound held: {rank_ok}"),
    );
}

#[test]
fn criterion_03_binary_loss_is_negative_top_eigenvalue() {
    let mut r = StdRng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = r.random_range(4..200);
        let gap = r.random_range(-3.0..3.0);
        let labels: Vec<usize> = (0..n)
            .map(|i| if i < 2 { i } else { r.random_range(0..2) })
            .collect();
        let scores: Vec<f64> = labels
            .iter()
            .map(|&l| normal(&mut r) + gap * l as f64)
            .collect();
        let loss = dda_binary(&scores, &labels, BinaryVariant::EigenNormalized, 0.0)
            .unwrap()
            .value;
        let set = SampleSet::new(
            scores.iter().map(|&y| Vector::from([y])).collect(),
            labels,
            2,
        )
        .unwrap();
        let sc = scatter_matrices(&set, Convention::Biased).unwrap();
        let lambda1 = trace_criterion(&sc, ScatterPair::BetweenWithin, 0.0)
            .unwrap()
            .eigenvalues[0];
        worst = worst.max((loss + lambda1).abs() / lambda1.abs().max(f64::MIN_POSITIVE));
    }
    let labels = [0, 0, 1, 1];
    let y = [0.0f64, 2.0, 4.0, 6.0];
    let eig = dda_binary(&y, &labels, BinaryVariant::EigenNormalized, 0.0)
        .unwrap()
        .value;
    let count = dda_binary(&y, &labels, BinaryVariant::CountWeighted, 0.0)
        .unwrap()
        .value;
    report(
        3,
        "binary DDA loss = -lambda_1",
        worst <= 1e-8 && (eig + 4.0).abs() < 1e-12 && (count + 8.0).abs() < 1e-12,
        format!("worst relative gap {worst:.2e} (<= 1e-8); worked example {eig} (-4) and count-weighted {count} (-8)"),
    );
}

const FD_H: f64 = 1e-5;

/// Largest relative error between analytic and central-difference
/// gradients. Components far below the gradient's overall scale are
/// compared against that scale.
fn fd_error(analytic: &[f64], x: &[f64], f: impl Fn(&[f64]) -> f64) -> f64 {
    let mut xp = x.to_vec();
    let numeric: Vec<f64> = (0..x.len())
        .map(|i| {
            xp[i] = x[i] + FD_H;
            let up = f(&xp);
            xp[i] = x[i] - FD_H;
            let down = f(&xp);
            xp[i] = x[i];
            (up - down) / (2.0 * FD_H)
        })
        .collect();
    let scale = numeric.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-3 * scale).max(1e-300))
        .fold(0.0, f64::max)
}

fn random_batch(r: &mut StdRng, classes: usize, cols: usize) -> (Vec<f64>, Vec<usize>) {
    let n = r.random_range(2 * classes + 4..64);
    let labels: Vec<usize> = (0..n)
        .map(|i| {
            if i < classes {
                i
            } else {
                r.random_range(0..classes)
            }
        })
        .collect();
    let scores = labels
        .iter()
        .flat_map(|&l| {
            (0..cols)
                .map(|c| normal(r) + if c + 1 == l { 1.5 } else { 0.0 })
                .collect::<Vec<_>>()
        })
        .collect();
    (scores, labels)
}

#[test]
fn criterion_04_gradients_match_finite_differences() {
    let start = Instant::now();
    let mut r = StdRng::seed_from_u64(4);
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut note = |name: &'static str, e: f64| {
        let w = worst.entry(name).or_insert(0.0);
        *w = w.max(e);
    };
    for _ in 0..50 {
        let (y, l) = random_batch(&mut r, 2, 1);
        for (name, variant) in [
            ("dda_binary/eig", BinaryVariant::EigenNormalized),
            ("dda_binary/count", BinaryVariant::CountWeighted),
        ] {
            let g = dda_binary(&y, &l, variant, 1e-3).unwrap().grads;
            note(
                name,
                fd_error(&g, &y, |v| dda_binary(v, &l, variant, 1e-3).unwrap().value),
            );
        }
        note(
            "bce",
            fd_error(&bce(&y, &l).unwrap().grads, &y, |v| {
                bce(v, &l).unwrap().value
            }),
        );
        note(
            "dice",
            fd_error(&dice(&y, &l).unwrap().grads, &y, |v| {
                dice(v, &l).unwrap().value
            }),
        );

        let classes = r.random_range(3..=4);
        let (y, l) = random_batch(&mut r, classes, classes - 1);
        let rows = l.len();
        let eval = |v: &[f64]| -> LossEval<f64> {
            dda_multiclass(
                &Matrix::from_vec(rows, classes - 1, v.to_vec()).unwrap(),
                &l,
                1e-6,
            )
            .unwrap()
        };
        note(
            "dda_multiclass",
            fd_error(&eval(&y).grads, &y, |v| eval(v).value),
        );
    }
    let loss_ok = worst.values().all(|&e| e <= 1e-5);

    let mut net_worst = 0.0f64;
    let objectives = [
        (
            Objective::Dda {
                variant: BinaryVariant::EigenNormalized,
                eps: 1e-8,
            },
            2,
        ),
        (
            Objective::Dda {
                variant: BinaryVariant::CountWeighted,
                eps: 1e-8,
            },
            2,
        ),
        (Objective::DdaMulticlass { ridge: 1e-6 }, 3),
        (Objective::Bce, 2),
        (Objective::Dice, 2),
    ];
    for (seed, (obj, classes)) in objectives.into_iter().enumerate() {
        let labels: Vec<usize> = (0..64).map(|i| i % classes).collect();
        let x = Matrix::from_vec(64, 5, (0..64 * 5).map(|_| normal(&mut r)).collect()).unwrap();
        let mut net = NetState::init(
            &[5, 8, obj.output_dim(classes)],
            Activation::Tanh,
            seed as u64,
        )
        .unwrap();
        let (scores, cache) = net.forward(&x).unwrap();
        let e = obj.evaluate(&scores, &labels).unwrap();
        let upstream = Matrix::from_vec(scores.rows(), scores.cols(), e.grads).unwrap();
        let analytic = flatten_grads(&net.backward(&cache, &upstream).unwrap());
        let theta = net.parameters();
        net_worst = net_worst.max(fd_error(&analytic, &theta, |p| {
            let mut probe = net.clone();
            probe.set_parameters(p).unwrap();
            obj.evaluate(&probe.predict(&x).unwrap(), &labels)
                .unwrap()
                .value
        }));
        net.set_parameters(&theta).unwrap();
    }
    let elapsed = start.elapsed();
    let losses: Vec<String> = worst.iter().map(|(k, v)| format!("{k} {v:.1e}")).collect();
    report(
        4,
        "analytic gradients",
        loss_ok && net_worst <= 1e-4 && elapsed < Duration::from_secs(60),
        format!(
            "losses [{}] (<= 1e-5), network {net_worst:.1e} (<= 1e-4), {:.1}s (< 60s)",
            losses.join(", "),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_05_affine_invariance() {
    let mut r = StdRng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (y, l) = random_batch(&mut r, 2, 1);
        let base = dda_binary(&y, &l, BinaryVariant::EigenNormalized, 0.0)
            .unwrap()
            .value;
        for a in [0.5, 3.0, -2.0] {
            for b in [-1.0, 0.0, 2.0] {
                let moved: Vec<f64> = y.iter().map(|v| a * v + b).collect();
                let v = dda_binary(&moved, &l, BinaryVariant::EigenNormalized, 0.0)
                    .unwrap()
                    .value;
                worst = worst.max((v - base).abs());
            }
        }
    }
    report(
        5,
        "DDA loss invariant under y -> a*y + b",
        worst <= 1e-10,
        format!("worst |change| {worst:.2e} (<= 1e-10)"),
    );
}

/// Closed-form two-class direction `S_W^{-1} (mu_1 - mu_0)` for 2-D data,
/// computed directly from the points.
fn oracle_direction(s: &SampleSet<f64>) -> [f64; 2] {
    let n = s.len() as f64;
    let mut mu = [[0.0; 2]; 2];
    let mut cnt = [0.0; 2];
    for (x, &l) in s.features().iter().zip(s.labels()) {
        mu[l][0] += x[0];
        mu[l][1] += x[1];
        cnt[l] += 1.0;
    }
    for l in 0..2 {
        mu[l][0] /= cnt[l];
        mu[l][1] /= cnt[l];
    }
    let mut sw = [[0.0; 2]; 2];
    for (x, &l) in s.features().iter().zip(s.labels()) {
        let d = [x[0] - mu[l][0], x[1] - mu[l][1]];
        for i in 0..2 {
            for j in 0..2 {
                sw[i][j] += d[i] * d[j] / n;
            }
        }
    }
    let diff = [mu[1][0] - mu[0][0], mu[1][1] - mu[0][1]];
    let det = sw[0][0] * sw[1][1] - sw[0][1] * sw[1][0];
    [
        (sw[1][1] * diff[0] - sw[0][1] * diff[1]) / det,
        (sw[0][0] * diff[1] - sw[1][0] * diff[0]) / det,
    ]
}

fn angle(a: &[f64], b: &[f64]) -> f64 {
    let cross = a[0] * b[1] - a[1] * b[0];
    let dot = a[0] * b[0] + a[1] * b[1];
    cross.abs().atan2(dot)
}

#[test]
fn criterion_06_lda_demo() {
    let start = Instant::now();
    let separable = gaussian_blobs(&BlobSpec::<f64>::elongated_pair(500, 6)).unwrap();
    let lda = fit_lda(&separable, 0.0).unwrap();
    let sep_acc = lda.accuracy(&separable).unwrap();
    let theta = angle(lda.direction(), &oracle_direction(&separable));

    let rings = inseparable_rings::<f64>(6, 2000).unwrap();
    let ring_lda = fit_lda_default(&rings).unwrap().accuracy(&rings).unwrap();
    let data = TrainData::from_samples(&rings).unwrap();
    let cfg = TrainConfig {
        optimizer: AdamW {
            lr: 1e-2,
            ..AdamW::default()
        },
        epochs: 200,
        batch_size: 128,
        seed: 6,
        patience: 50,
        objective: Objective::Dda {
            variant: BinaryVariant::EigenNormalized,
            eps: 1e-8,
        },
    };
    let out = train(
        NetState::init(&[2, 32, 1], Activation::ReLU, 6).unwrap(),
        &data,
        None,
        &cfg,
    )
    .unwrap();
    let scores = out.net.predict(data.features()).unwrap().into_vec();
    let net_acc = ThresholdRule::midpoint(&scores, rings.labels())
        .unwrap()
        .accuracy(&scores, rings.labels());
    let elapsed = start.elapsed();
    report(
        6,
        "LDA demo",
        sep_acc >= 0.99 && theta <= 1e-8 && ring_lda <= 0.6 && net_acc >= 0.9 && elapsed < Duration::from_secs(120),
        format!(
            "separable accuracy {sep_acc:.4} (>= 0.99), angle to oracle {theta:.1e} rad (<= 1e-8), \
             rings LDA {ring_lda:.4} (<= 0.6), rings DDA net {net_acc:.4} (>= 0.9), {:.1}s (< 120s)",
            elapsed.as_secs_f64()
        ),
    );
}

struct SegRun {
    overlap: f64,
    theta_gap: f64,
    improvement: f64,
}

fn seg_set(seed: u64, count: usize) -> Vec<ddakit::synthdata::SynthImage<f64>> {
    synth_segmentation_set_with(seed, count, &SegSpec::new(32)).unwrap()
}

fn seg_data(images: &[ddakit::synthdata::SynthImage<f64>]) -> TrainData<f64> {
    TrainData::new(
        images
            .iter()
            .map(|im| (pixel_features(&im.image), im.mask.labels()))
            .collect(),
    )
    .unwrap()
}

fn seg_run(seed: u64, objective: Objective<f64>) -> SegRun {
    let train_set = seg_data(&seg_set(1000 + seed, 64));
    let val_set = seg_data(&seg_set(2000 + seed, 16));
    let test = seg_set(3000 + seed, 16);
    let cfg = TrainConfig {
        epochs: 100,
        batch_size: 8,
        seed,
        patience: 20,
        objective,
        ..TrainConfig::default()
    };
    let net = NetState::init(&[PIXEL_FEATURES, 16, 16, 1], Activation::ReLU, seed).unwrap();
    let out = train(net, &train_set, Some(&val_set), &cfg).unwrap();
    let mut scores = Vec::new();
    for im in &test {
        scores.extend(
            out.net
                .predict(&pixel_features(&im.image))
                .unwrap()
                .into_vec(),
        );
    }
    let gt = MaskImage::stack(&test.iter().map(|im| im.mask.clone()).collect::<Vec<_>>()).unwrap();
    let map = ScoreMap::new(gt.height(), gt.width(), scores).unwrap();
    SegRun {
        overlap: score_histogram(&map, &gt, 64).unwrap().overlap,
        theta_gap: (threshold_sweep(&map, &gt, SweepObjective::IoU, 256)
            .unwrap()
            .theta_star
            - 0.5)
            .abs(),
        improvement: out.best().train_loss / out.trace[0].train_loss,
    }
}

#[test]
fn criterion_07_class_separation_behaviour() {
    let start = Instant::now();
    let dda = Objective::Dda {
        variant: BinaryVariant::EigenNormalized,
        eps: 1e-8,
    };
    let mut wins = 0;
    let mut all_improve = true;
    let mut rows = Vec::new();
    for seed in 0..5 {
        let d = seg_run(seed, dda);
        let b = seg_run(seed, Objective::Bce);
        let win = d.overlap < b.overlap && d.theta_gap <= b.theta_gap;
        wins += usize::from(win);
        all_improve &= d.improvement >= 10.0;
        rows.push(format!(
            "seed {seed}: overlap {:.4}/{:.4}, |theta*-0.5| {:.3}/{:.3}, dda gain {:.1}x{}",
            d.overlap,
            b.overlap,
            d.theta_gap,
            b.theta_gap,
            d.improvement,
            if win { " (dda better)" } else { "" }
        ));
    }
    let elapsed = start.elapsed();
    for r in &rows {
        println!("    {r}");
    }
    report(
        7,
        "DDA vs BCE score separation",
        wins >= 3 && all_improve && elapsed < Duration::from_secs(600),
        format!(
            "DDA better on {wins}/5 seeds (>= 3), DDA gain >= 10x on every seed: {all_improve}, {:.0}s (< 600s)",
            elapsed.as_secs_f64()
        ),
    );
}

fn random_mask(r: &mut StdRng, h: usize, w: usize, p: f64) -> MaskImage {
    MaskImage::new(h, w, (0..h * w).map(|_| r.random_bool(p)).collect()).unwrap()
}

#[test]
fn criterion_08_metric_oracles() {
    let mut r = StdRng::seed_from_u64(8);
    let mut region_worst = 0.0f64;
    for _ in 0..100 {
        let p = r.random_range(0.05..0.95);
        let (pred, gt) = (
            random_mask(&mut r, 16, 16, p),
            random_mask(&mut r, 16, 16, p),
        );
        if pred.count() + gt.count() == 0 {
            continue;
        }
        let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
        for i in 0..16 {
            for j in 0..16 {
                match (pred.get(i, j), gt.get(i, j)) {
                    (true, true) => tp += 1.0,
                    (true, false) => fp += 1.0,
                    (false, true) => fn_ += 1.0,
                    _ => {}
                }
            }
        }
        let m = region_metrics(&pred, &gt, 0.3).unwrap();
        // empty denominators count as zero; both masks are never empty here
        let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
        let (prec, rec) = (ratio(tp, tp + fp), ratio(tp, tp + fn_));
        let oracle = [
            tp / (tp + fp + fn_),
            prec,
            rec,
            ratio(2.0 * prec * rec, prec + rec),
            ratio(1.3 * prec * rec, 0.3 * prec + rec),
        ];
        let got = [m.iou, m.precision, m.recall, m.f1, m.f_beta];
        for (g, o) in got.iter().zip(oracle) {
            let gap = (g - o).abs();
            region_worst = if gap.is_nan() {
                f64::INFINITY
            } else {
                region_worst.max(gap)
            };
        }
    }

    let mut auc_worst = 0.0f64;
    for _ in 0..100 {
        let gt = random_mask(&mut r, 10, 10, 0.4);
        if gt.count() == 0 || gt.count() == 100 {
            continue;
        }
        let scores: Vec<f64> = (0..100)
            .map(|_| (r.random_range(0.0..1.0) * 20.0f64).floor())
            .collect();
        let mut wins = 0.0;
        let (mut pos, mut neg) = (0.0, 0.0);
        for (i, &a) in scores.iter().enumerate() {
            if !gt.pixels()[i] {
                continue;
            }
            pos += 1.0;
            for (j, &b) in scores.iter().enumerate() {
                if !gt.pixels()[j] {
                    wins += if a > b {
                        1.0
                    } else if a == b {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        neg += (100 - gt.count()) as f64;
        let got = auc(&ScoreMap::new(10, 10, scores).unwrap(), &gt).unwrap();
        auc_worst = auc_worst.max((got - wins / (pos * neg)).abs());
    }

    let fb = f_measure(0.5, 1.0, 0.3);
    let d1024 = boundary_iterations(1024, 1024);
    let d224 = boundary_iterations(224, 224);
    report(
        8,
        "metric oracles",
        region_worst == 0.0 && auc_worst <= 1e-12 && (fb - 0.56522).abs() <= 1e-5 && d1024 == 29 && d224 == 6,
        format!(
            "region metric gap {region_worst:.1e} (exact), AUC gap {auc_worst:.1e} (<= 1e-12), F_beta {fb:.5} (0.56522), \
             d(1024) = {d1024} (29), d(224) = {d224} (6)"
        ),
    );
}

#[test]
fn criterion_09_boundary_partition() {
    let mut r = StdRng::seed_from_u64(9);
    let mut partition = true;
    for _ in 0..100 {
        let (h, w) = (r.random_range(1..40), r.random_range(1..40));
        let p = r.random_range(0.3..0.95);
        let m = random_mask(&mut r, h, w, p);
        let d = boundary_iterations(h, w);
        let (b, e) = (boundary_mask(&m), erode(&m, d));
        partition &= (0..h * w).all(|i| {
            let (bi, ei, mi) = (b.pixels()[i], e.pixels()[i], m.pixels()[i]);
            !(bi && ei) && (bi || ei) == mi
        });
    }
    let ring = boundary_mask_with(&MaskImage::from_fn(3, 3, |_, _| true), 1);
    let ring_ok = ring.count() == 8 && !ring.get(1, 1);
    report(
        9,
        "boundary band and erosion partition the mask",
        partition && ring_ok,
        format!("partition exact on 100 masks: {partition}, 3x3 ring has 8 pixels: {ring_ok}"),
    );
}

fn run_cli(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_ddakit"))
        .args(args)
        .env_remove("DDAKIT_SEED")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "csv") {
            files.insert(
                path.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&path).unwrap(),
            );
        }
    }
    files
}

#[test]
fn criterion_10_cli_reproducibility() {
    let root = tempfile::tempdir().unwrap();
    let run = |tag: &str| -> BTreeMap<String, BTreeMap<String, Vec<u8>>> {
        let dir = |name: &str| {
            root.path()
                .join(tag)
                .join(name)
                .to_string_lossy()
                .into_owned()
        };
        run_cli(&[
            "lda-demo",
            "--out_dir",
            &dir("lda"),
            "--seed",
            "3",
            "--net_epochs",
            "30",
        ]);
        run_cli(&[
            "train",
            "--out_dir",
            &dir("train"),
            "--seed",
            "3",
            "--epochs",
            "4",
            "--images",
            "8",
            "--val_images",
            "4",
        ]);
        let ck = format!("{}/checkpoint.txt", dir("train"));
        run_cli(&[
            "eval",
            "--out_dir",
            &dir("eval"),
            "--checkpoint",
            &ck,
            "--images",
            "4",
        ]);
        run_cli(&[
            "hist",
            "--out_dir",
            &dir("hist"),
            "--checkpoint",
            &ck,
            "--images",
            "4",
        ]);
        ["lda", "train", "eval", "hist"]
            .iter()
            .map(|c| (c.to_string(), csv_files(Path::new(&dir(c)))))
            .collect()
    };
    let (a, b) = (run("a"), run("b"));
    let mut differing = Vec::new();
    let mut compared = 0;
    for (cmd, files) in &a {
        for (name, bytes) in files {
            compared += 1;
            if b[cmd].get(name) != Some(bytes) {
                differing.push(format!("{cmd}/{name}"));
            }
        }
        if files.len() != b[cmd].len() {
            differing.push(format!("{cmd}: file sets differ"));
        }
    }
    report(
        10,
        "CLI reruns are bit-identical",
        differing.is_empty() && compared >= 10,
        format!("{compared} CSV files compared, differing: {differing:?}"),
    );
}
