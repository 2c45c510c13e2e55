use std::fmt::Write as _;

use anyhow::{Context, Result};
use ddakit::discriminant::{
    best_threshold_accuracy, class_stats, fisher_criterion, fit_lda_default, projected_class_stats,
    Convention, SampleSet, ThresholdRule,
};
use ddakit::loss::{dda_binary, BinaryVariant, Objective};
use ddakit::net::{train, Activation, AdamW, NetState, TrainConfig, TrainData};
use ddakit::segmetrics::{
    evaluate, pick_threshold, score_histogram_with, sweep_curves, write_report_csv, EvalOptions,
    MaskImage, Normalization, ScoreHistogram, ScoreMap, SweepObjective,
};
use ddakit::synthdata::{
    gaussian_blobs, inseparable_rings, pixel_features, write_mask_pgm, write_samples_csv,
    write_scores_pgm, BlobSpec, PIXEL_FEATURES,
};

use crate::config::{key, required, usage, Key, RunConfig};
use crate::data::{load_images, Sample, Scorer};
use crate::report::{histogram_csv, histogram_svg, Manifest};

const IMAGE_KEYS: [Key; 3] = [key("size", "32"), key("noise", "0.25"), key("data_dir", "")];

pub fn lda_demo_keys() -> Vec<Key> {
    vec![
        required("out_dir"),
        key("seed", "0"),
        key("samples", "500"),
        key("ring_samples", "2000"),
        key("bins", "32"),
        key("net_epochs", "200"),
        key("net_hidden", "32"),
        key("net_lr", "0.01"),
        key("svg", "false"),
    ]
}

pub fn train_keys() -> Vec<Key> {
    let mut keys = vec![
        required("out_dir"),
        key("seed", "0"),
        key("loss", "dda"),
        key("dda_variant", "eig"),
        key("dda_eps", "1e-8"),
        key("lr", "0.001"),
        key("beta1", "0.9"),
        key("beta2", "0.999"),
        key("weight_decay", "0.01"),
        key("adam_eps", "1e-8"),
        key("epochs", "100"),
        key("batch_size", "8"),
        key("patience", "20"),
        key("hidden", "16,16"),
        key("activation", "relu"),
        key("images", "64"),
        key("val_images", "16"),
        key("data_seed", "1"),
        key("val_seed", "2"),
        key("val_dir", ""),
    ];
    keys.extend(IMAGE_KEYS);
    keys
}

pub fn eval_keys() -> Vec<Key> {
    let mut keys = vec![
        required("out_dir"),
        required("checkpoint"),
        key("images", "16"),
        key("data_seed", "3"),
        key("threshold", "0.5"),
        key("normalization", "minmax"),
        key("beta_sq", "0.3"),
        key("write_masks", "false"),
    ];
    keys.extend(IMAGE_KEYS);
    keys
}

pub fn hist_keys() -> Vec<Key> {
    let mut keys = vec![
        required("out_dir"),
        required("checkpoint"),
        key("images", "16"),
        key("data_seed", "3"),
        key("bins", "64"),
        key("grid", "256"),
        key("normalization", "minmax"),
        key("beta_sq", "0.3"),
        key("dda_variant", "eig"),
        key("dda_eps", "0"),
        key("svg", "false"),
    ];
    keys.extend(IMAGE_KEYS);
    keys
}

fn parse_variant(cfg: &RunConfig) -> Result<BinaryVariant> {
    match cfg.str("dda_variant") {
        "eig" => Ok(BinaryVariant::EigenNormalized),
        "count" => Ok(BinaryVariant::CountWeighted),
        other => usage(format!(
            "unknown dda_variant `{other}` (expected eig or count)"
        )),
    }
}

fn parse_normalization(cfg: &RunConfig) -> Result<Normalization> {
    match cfg.str("normalization") {
        "minmax" => Ok(Normalization::MinMax),
        "sigmoid" => Ok(Normalization::Sigmoid),
        other => usage(format!(
            "unknown normalization `{other}` (expected minmax or sigmoid)"
        )),
    }
}

fn objective_label(obj: &Objective<f64>) -> String {
    match obj {
        Objective::Dda { variant, .. } => format!("dda-{}", variant.name()),
        other => other.name().to_string(),
    }
}

fn at_least(cfg: &RunConfig, name: &str, min: usize) -> Result<usize> {
    let v: usize = cfg.get(name)?;
    if v < min {
        return usage(format!("`{name}` must be at least {min}, got {v}"));
    }
    Ok(v)
}

/// 1-row score map and mask, so sample projections reuse the image
/// histogram code.
fn projection_histogram(scores: &[f64], labels: &[usize], bins: usize) -> Result<ScoreHistogram> {
    let map = ScoreMap::new(1, scores.len(), scores.to_vec())?;
    let mask = MaskImage::new(1, labels.len(), labels.iter().map(|&l| l == 1).collect())?;
    Ok(score_histogram_with(
        &map,
        &mask,
        bins,
        Normalization::MinMax,
    )?)
}

fn score_fisher(scores: &[f64], labels: &[usize]) -> Result<f64> {
    let mut sums = [(0.0, 0.0, 0usize); 2];
    for (&s, &l) in scores.iter().zip(labels) {
        sums[l].0 += s;
        sums[l].1 += s * s;
        sums[l].2 += 1;
    }
    let stat = |(s, ss, n): (f64, f64, usize)| {
        let m = s / n as f64;
        (m, ss / n as f64 - m * m)
    };
    let ((m0, v0), (m1, v1)) = (stat(sums[0]), stat(sums[1]));
    Ok(fisher_criterion(m0, m1, v0.max(0.0), v1.max(0.0))?)
}

struct DemoRow {
    model: &'static str,
    fisher: f64,
    accuracy: f64,
    best_threshold_accuracy: f64,
    hist: ScoreHistogram,
}

fn lda_row(
    model: &'static str,
    s: &SampleSet<f64>,
    bins: usize,
    fits: &mut String,
) -> Result<DemoRow> {
    let lda = fit_lda_default(s)?;
    let proj = lda.project_all(s)?;
    let p = projected_class_stats(&lda, &class_stats(s, Convention::Biased)?)?;
    let w = lda.direction();
    let _ = writeln!(fits, "{model},{},{},{}", w[0], w[1], lda.bias());
    Ok(DemoRow {
        model,
        fisher: fisher_criterion(p[0].mean, p[1].mean, p[0].variance, p[1].variance)?,
        accuracy: lda.accuracy(s)?,
        best_threshold_accuracy: best_threshold_accuracy(&proj, s.labels()),
        hist: projection_histogram(&proj, s.labels(), bins)?,
    })
}

pub fn lda_demo(cfg: &RunConfig) -> Result<()> {
    let seed: u64 = cfg.get("seed")?;
    let samples = at_least(cfg, "samples", 2)?;
    let ring_samples = at_least(cfg, "ring_samples", 2)?;
    let bins = at_least(cfg, "bins", 2)?;
    let net_epochs: usize = cfg.get("net_epochs")?;
    let hidden: Vec<usize> = cfg.list("net_hidden")?;
    let net_lr: f64 = cfg.get("net_lr")?;
    let svg = cfg.flag("svg")?;
    let out = cfg.out_dir()?;
    let mut m = Manifest::new(cfg, &out);

    let separable = gaussian_blobs(&BlobSpec::elongated_pair(samples, seed))?;
    let rings = inseparable_rings::<f64>(seed, ring_samples)?;
    for (name, s) in [
        ("separable_samples.csv", &separable),
        ("rings_samples.csv", &rings),
    ] {
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, s)?;
        m.write(name, buf)?;
    }

    let mut fits = String::from("model,w_x0,w_x1,w0\n");
    let mut rows = vec![
        lda_row("separable_lda", &separable, bins, &mut fits)?,
        lda_row("rings_lda", &rings, bins, &mut fits)?,
    ];

    if net_epochs > 0 {
        let sizes: Vec<usize> = std::iter::once(2)
            .chain(hidden)
            .chain(std::iter::once(1))
            .collect();
        let net = NetState::init(&sizes, Activation::ReLU, seed)?;
        let tcfg = TrainConfig {
            optimizer: AdamW {
                lr: net_lr,
                ..AdamW::default()
            },
            epochs: net_epochs,
            batch_size: 128,
            seed,
            patience: 50,
            objective: Objective::Dda {
                variant: BinaryVariant::EigenNormalized,
                eps: 1e-8,
            },
        };
        if let Err(e) = tcfg.optimizer.validate() {
            return usage(e.to_string());
        }
        let data = TrainData::from_samples(&rings)?;
        let trained = train(net, &data, None, &tcfg)?;
        let scores = trained.net.predict(data.features())?.into_vec();
        let rule = ThresholdRule::midpoint(&scores, rings.labels())?;
        rows.push(DemoRow {
            model: "rings_dda_net",
            fisher: score_fisher(&scores, rings.labels())?,
            accuracy: rule.accuracy(&scores, rings.labels()),
            best_threshold_accuracy: best_threshold_accuracy(&scores, rings.labels()),
            hist: projection_histogram(&scores, rings.labels(), bins)?,
        });
        m.write("rings_dda_net.ckpt", trained.net.to_checkpoint())?;
        m.note("rings_dda_net.objective", "dda-eig");
        m.note("rings_dda_net.best_epoch", trained.best_epoch);
    }
    m.write("lda_fit.csv", fits)?;

    let mut summary = String::from("model,fisher,accuracy,best_threshold_accuracy,overlap\n");
    for r in &rows {
        let _ = writeln!(
            summary,
            "{},{},{},{},{}",
            r.model, r.fisher, r.accuracy, r.best_threshold_accuracy, r.hist.overlap
        );
        m.write(
            &format!("{}_hist.csv", r.model),
            histogram_csv(&r.hist, ("class1", "class0")),
        )?;
        if svg {
            m.write(
                &format!("{}_hist.svg", r.model),
                histogram_svg(&r.hist, r.model, ("class 1", "class 0")),
            )?;
        }
    }
    m.write("summary.csv", &summary)?;
    m.finish()?;
    print!("{summary}");
    Ok(())
}

fn train_data(samples: &[Sample]) -> Result<TrainData<f64>> {
    Ok(TrainData::new(
        samples
            .iter()
            .map(|s| (pixel_features(&s.image), s.mask.labels()))
            .collect(),
    )?)
}

pub fn train_cmd(cfg: &RunConfig) -> Result<()> {
    let objective = match cfg.str("loss") {
        "dda" => Objective::Dda {
            variant: parse_variant(cfg)?,
            eps: cfg.get("dda_eps")?,
        },
        "bce" => Objective::Bce,
        "dice" => Objective::Dice,
        other => {
            return usage(format!(
                "unknown loss `{other}` (expected dda, bce or dice)"
            ))
        }
    };
    let activation = Activation::parse(cfg.str("activation")).map_or_else(
        || usage(format!("unknown activation `{}`", cfg.str("activation"))),
        Ok,
    )?;
    let optimizer = AdamW {
        lr: cfg.get("lr")?,
        beta1: cfg.get("beta1")?,
        beta2: cfg.get("beta2")?,
        weight_decay: cfg.get("weight_decay")?,
        eps: cfg.get("adam_eps")?,
    };
    if let Err(e) = optimizer.validate() {
        return usage(e.to_string());
    }
    let tcfg = TrainConfig {
        optimizer,
        epochs: cfg.get("epochs")?,
        batch_size: at_least(cfg, "batch_size", 1)?,
        seed: cfg.get("seed")?,
        patience: at_least(cfg, "patience", 1)?,
        objective,
    };
    let hidden: Vec<usize> = cfg.list("hidden")?;
    if hidden.contains(&0) {
        return usage("hidden layer widths must be positive");
    }
    let train_set = load_images(cfg, "data_dir", "images", "data_seed")?;
    if train_set.is_empty() {
        return usage("no training images (images = 0)");
    }
    let val_set = match cfg.path("val_dir") {
        Some(dir) => crate::data::read_image_dir(&dir)?,
        None if cfg.get::<usize>("val_images")? > 0 => {
            if cfg.path("data_dir").is_some() {
                Vec::new()
            } else {
                load_images(cfg, "val_dir", "val_images", "val_seed")?
            }
        }
        None => Vec::new(),
    };
    let out = cfg.out_dir()?;
    let mut m = Manifest::new(cfg, &out);

    let data = train_data(&train_set)?;
    let val = if val_set.is_empty() {
        None
    } else {
        Some(train_data(&val_set)?)
    };
    let sizes: Vec<usize> = std::iter::once(PIXEL_FEATURES)
        .chain(hidden)
        .chain(std::iter::once(1))
        .collect();
    let net = NetState::init(&sizes, activation, tcfg.seed)?;
    let outcome = train(net, &data, val.as_ref(), &tcfg).context("training failed")?;

    let label = objective_label(&tcfg.objective);
    let mut csv = String::from("epoch,objective,train_loss,val_loss,skipped_batches\n");
    for r in &outcome.trace {
        let val = r.val_loss.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{label},{},{val},{}",
            r.epoch, r.train_loss, r.skipped_batches
        );
    }
    m.write("loss.csv", csv)?;
    m.write("checkpoint.txt", outcome.net.to_checkpoint())?;
    m.note("objective", &label);
    m.note(
        "layer_sizes",
        sizes
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(","),
    );
    m.note("train_images", train_set.len());
    m.note("val_images", val_set.len());
    m.note("epochs_run", outcome.trace.len() - 1);
    m.note("best_epoch", outcome.best_epoch);
    m.note("stopped_early", outcome.stopped_early);
    m.note("initial_train_loss", outcome.trace[0].train_loss);
    m.note("best_train_loss", outcome.best().train_loss);
    m.finish()?;
    println!(
        "{label}: {} epochs, best epoch {}, train loss {} -> {}",
        outcome.trace.len() - 1,
        outcome.best_epoch,
        outcome.trace[0].train_loss,
        outcome.best().train_loss
    );
    Ok(())
}

pub fn eval_cmd(cfg: &RunConfig) -> Result<()> {
    let opts = EvalOptions {
        threshold: cfg.get("threshold")?,
        normalization: parse_normalization(cfg)?,
        beta_sq: cfg.get("beta_sq")?,
    };
    if !(0.0..=1.0).contains(&opts.threshold) || !(opts.beta_sq > 0.0) {
        return usage("threshold must lie in [0, 1] and beta_sq must be positive");
    }
    let write_masks = cfg.flag("write_masks")?;
    let scorer = Scorer::from_config(cfg)?;
    let samples = load_images(cfg, "data_dir", "images", "data_seed")?;
    let out = cfg.out_dir()?;
    let mut m = Manifest::new(cfg, &out);
    if write_masks {
        std::fs::create_dir_all(m.path("masks"))?;
    }
    let mut reports = Vec::with_capacity(samples.len());
    for s in &samples {
        let scores = scorer.score(s)?;
        reports.push(
            evaluate(&s.name, &scores, &s.mask, &opts)
                .with_context(|| format!("evaluating {}", s.name))?,
        );
        if write_masks {
            let stem = format!("masks/{}", s.name);
            write_mask_pgm(
                m.path(&format!("{stem}_pred.pgm")),
                &scores.threshold(opts.threshold, opts.normalization),
            )?;
            write_scores_pgm(m.path(&format!("{stem}_image.pgm")), &s.image)?;
            write_mask_pgm(m.path(&format!("{stem}_mask.pgm")), &s.mask)?;
            for suffix in ["pred", "image", "mask"] {
                m.record(&format!("{stem}_{suffix}.pgm"));
            }
        }
    }
    let mut buf = Vec::new();
    write_report_csv(&mut buf, &reports)?;
    m.write("metrics.csv", &buf)?;
    m.note("scorer", scorer.name());
    m.note("images", samples.len());
    m.finish()?;
    if let Some(mean) = String::from_utf8_lossy(&buf).lines().last() {
        println!("{mean}");
    }
    Ok(())
}

pub fn hist_cmd(cfg: &RunConfig) -> Result<()> {
    let bins = at_least(cfg, "bins", 2)?;
    let grid = at_least(cfg, "grid", 2)?;
    let normalization = parse_normalization(cfg)?;
    let beta_sq: f64 = cfg.get("beta_sq")?;
    let variant = parse_variant(cfg)?;
    let dda_eps: f64 = cfg.get("dda_eps")?;
    let svg = cfg.flag("svg")?;
    let scorer = Scorer::from_config(cfg)?;
    let samples = load_images(cfg, "data_dir", "images", "data_seed")?;
    if samples.is_empty() {
        return usage("no images to evaluate");
    }
    let out = cfg.out_dir()?;
    let mut m = Manifest::new(cfg, &out);

    let maps = samples
        .iter()
        .map(|s| scorer.score(s))
        .collect::<Result<Vec<_>>>()?;
    let scores = ScoreMap::stack(&maps)?;
    let gt = MaskImage::stack(&samples.iter().map(|s| s.mask.clone()).collect::<Vec<_>>())?;
    let h = score_histogram_with(&scores, &gt, bins, normalization)?;
    m.write("histogram.csv", histogram_csv(&h, ("fg", "bg")))?;
    if svg {
        m.write(
            "histogram.svg",
            histogram_svg(&h, scorer.name(), ("foreground", "background")),
        )?;
    }

    let (points, constant) = sweep_curves(&scores, &gt, grid, normalization, beta_sq)?;
    let mut sweep = String::from("theta,iou,f1,fbeta\n");
    for p in &points {
        let _ = writeln!(
            sweep,
            "{},{},{},{}",
            p.theta, p.metrics.iou, p.metrics.f1, p.metrics.f_beta
        );
    }
    m.write("sweep.csv", sweep)?;
    let mut thresholds = String::from("objective,theta_star,best_value,constant_scores\n");
    for obj in SweepObjective::ALL {
        let r = pick_threshold(&points, obj, constant);
        let _ = writeln!(
            thresholds,
            "{},{},{},{}",
            obj.name(),
            r.theta_star,
            r.best_value,
            r.constant_scores
        );
    }
    m.write("thresholds.csv", &thresholds)?;

    let loss = dda_binary(scores.scores(), &gt.labels(), variant, dda_eps)?;
    let dda = if loss.skipped {
        String::new()
    } else {
        loss.value.to_string()
    };
    let mut summary = String::from("key,value\n");
    for (k, v) in [
        ("scorer", scorer.name().to_string()),
        ("pixels", gt.pixels().len().to_string()),
        ("foreground", gt.count().to_string()),
        ("overlap", h.overlap.to_string()),
        ("fg_mean", h.fg_mean.to_string()),
        ("fg_var", h.fg_var.to_string()),
        ("bg_mean", h.bg_mean.to_string()),
        ("bg_var", h.bg_var.to_string()),
        ("separability", h.separability().to_string()),
        ("dda_variant", variant.name().to_string()),
        ("dda_loss", dda),
    ] {
        let _ = writeln!(summary, "{k},{v}");
    }
    m.write("summary.csv", &summary)?;
    m.finish()?;
    print!("{thresholds}");
    println!("overlap,{}", h.overlap);
    Ok(())
}
