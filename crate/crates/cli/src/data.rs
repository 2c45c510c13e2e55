use std::path::Path;

use anyhow::{bail, Context, Result};
use ddakit::net::NetState;
use ddakit::segmetrics::{MaskImage, ScoreMap};
use ddakit::synthdata::{
    pixel_features, read_mask_pgm, read_scores_pgm, synth_segmentation_set_with, SegSpec,
};

use crate::config::{usage, RunConfig};

pub struct Sample {
    pub name: String,
    pub image: ScoreMap<f64>,
    pub mask: MaskImage,
}

/// Pairs `<name>_image.pgm` / `<name>_mask.pgm` from a directory, sorted by
/// name.
pub fn read_image_dir(dir: &Path) -> Result<Vec<Sample>> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| crate::config::UsageError(format!("cannot read {}: {e}", dir.display())))?;
    let mut names = Vec::new();
    for entry in entries {
        let file = entry?.file_name();
        if let Some(stem) = file.to_str().and_then(|f| f.strip_suffix("_image.pgm")) {
            names.push(stem.to_string());
        }
    }
    names.sort();
    if names.is_empty() {
        return usage(format!("no `*_image.pgm` files in {}", dir.display()));
    }
    names
        .into_iter()
        .map(|name| {
            let image = read_scores_pgm(dir.join(format!("{name}_image.pgm")))
                .with_context(|| format!("reading image `{name}`"))?;
            let mask = read_mask_pgm(dir.join(format!("{name}_mask.pgm")))
                .with_context(|| format!("reading mask `{name}`"))?;
            if image.shape() != mask.shape() {
                bail!(
                    "image `{name}` is {:?} but its mask is {:?}",
                    image.shape(),
                    mask.shape()
                );
            }
            Ok(Sample { name, image, mask })
        })
        .collect()
}

/// Images from `data_dir` when set, otherwise a synthetic set drawn from
/// `seed_key` with `count_key` images.
pub fn load_images(
    cfg: &RunConfig,
    dir_key: &str,
    count_key: &str,
    seed_key: &str,
) -> Result<Vec<Sample>> {
    if let Some(dir) = cfg.path(dir_key) {
        return read_image_dir(&dir);
    }
    let spec = SegSpec {
        noise: cfg.get("noise")?,
        ..SegSpec::new(cfg.get("size")?)
    };
    if spec.size < 16 {
        return usage(format!("size must be at least 16, got {}", spec.size));
    }
    if !(spec.noise >= 0.0) {
        return usage(format!("noise must be non-negative, got {}", spec.noise));
    }
    let count: usize = cfg.get(count_key)?;
    let set = synth_segmentation_set_with::<f64>(cfg.get(seed_key)?, count, &spec)?;
    Ok(set
        .into_iter()
        .map(|s| Sample {
            name: format!("img{:03}", s.index),
            image: s.image,
            mask: s.mask,
        })
        .collect())
}

/// Produces a score map for an image: a trained network, or the ground
/// truth itself.
pub enum Scorer {
    Net(Box<NetState<f64>>),
    Oracle,
}

impl Scorer {
    /// `checkpoint=oracle` selects the ground-truth scorer.
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let path = cfg.str("checkpoint");
        if path == "oracle" {
            return Ok(Scorer::Oracle);
        }
        if !Path::new(path).is_file() {
            return usage(format!("checkpoint `{path}` does not exist"));
        }
        let net = NetState::load(path).with_context(|| format!("loading checkpoint {path}"))?;
        Ok(Scorer::Net(Box::new(net)))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scorer::Net(_) => "net",
            Scorer::Oracle => "oracle",
        }
    }

    pub fn score(&self, s: &Sample) -> Result<ScoreMap<f64>> {
        match self {
            Scorer::Oracle => Ok(ScoreMap::from_mask(&s.mask)),
            Scorer::Net(net) => {
                let out = net.predict(&pixel_features(&s.image))?;
                if out.cols() != 1 {
                    bail!(
                        "checkpoint emits {} scores per pixel; segmentation needs 1",
                        out.cols()
                    );
                }
                let (h, w) = s.image.shape();
                Ok(ScoreMap::new(h, w, out.into_vec())?)
            }
        }
    }
}
