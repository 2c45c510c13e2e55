use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ddakit::segmetrics::ScoreHistogram;

use crate::config::RunConfig;

/// Records the resolved configuration and every file a command writes.
/// Contains no timestamps or host details, so reruns produce the same bytes.
pub struct Manifest {
    dir: PathBuf,
    lines: Vec<String>,
    outputs: Vec<String>,
}

impl Manifest {
    pub fn new(cfg: &RunConfig, dir: &Path) -> Self {
        let mut lines = vec![
            format!("tool=ddakit {}", env!("CARGO_PKG_VERSION")),
            format!("command={}", cfg.command()),
        ];
        lines.extend(cfg.entries().map(|(k, v)| format!("config.{k}={v}")));
        Self {
            dir: dir.to_path_buf(),
            lines,
            outputs: Vec::new(),
        }
    }

    pub fn note(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push(format!("{key}={value}"));
    }

    /// Writes `name` under the output directory and records it.
    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// Records a file written by other means.
    pub fn record(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn finish(self) -> Result<()> {
        let mut text = self.lines.join("\n");
        text.push('\n');
        for o in &self.outputs {
            let _ = writeln!(text, "output={o}");
        }
        let path = self.dir.join("manifest.txt");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

pub fn histogram_csv(h: &ScoreHistogram, labels: (&str, &str)) -> String {
    let mut s = format!(
        "bin,lo,hi,{0}_count,{1}_count,{0}_density,{1}_density\n",
        labels.0, labels.1
    );
    let (fd, bd) = (h.fg_density(), h.bg_density());
    for b in 0..h.bins {
        let (lo, hi) = h.bin_edges(b);
        let _ = writeln!(
            s,
            "{b},{lo},{hi},{},{},{},{}",
            h.fg_counts[b], h.bg_counts[b], fd[b], bd[b]
        );
    }
    s
}

/// Two overlaid density outlines on the normalized score axis.
pub fn histogram_svg(h: &ScoreHistogram, title: &str, labels: (&str, &str)) -> String {
    const W: f64 = 480.0;
    const H: f64 = 240.0;
    const PAD: f64 = 30.0;
    let (fd, bd) = (h.fg_density(), h.bg_density());
    let top = fd
        .iter()
        .chain(&bd)
        .copied()
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let x = |v: f64| PAD + v * (W - 2.0 * PAD);
    let y = |d: f64| H - PAD - d / top * (H - 2.0 * PAD);
    let outline = |dens: &[f64]| {
        let mut p = format!("M{:.2},{:.2}", x(0.0), y(0.0));
        for (b, &d) in dens.iter().enumerate() {
            let (lo, hi) = h.bin_edges(b);
            let _ = write!(p, " L{:.2},{:.2} L{:.2},{:.2}", x(lo), y(d), x(hi), y(d));
        }
        let _ = write!(p, " L{:.2},{:.2}", x(1.0), y(0.0));
        p
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="18" font-family="sans-serif" font-size="12">{title} (overlap {:.4})</text>"#,
        h.overlap
    );
    let _ = writeln!(
        s,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        x(0.0),
        y(0.0),
        x(1.0),
        y(0.0)
    );
    let _ = writeln!(
        s,
        r#"<path d="{}" fill="none" stroke="crimson"/>"#,
        outline(&fd)
    );
    let _ = writeln!(
        s,
        r#"<path d="{}" fill="none" stroke="steelblue"/>"#,
        outline(&bd)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" font-family="sans-serif" font-size="11" fill="crimson">{}</text>"#,
        W - 150.0,
        labels.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" font-family="sans-serif" font-size="11" fill="steelblue">{}</text>"#,
        W - 80.0,
        labels.1
    );
    s.push_str("</svg>\n");
    s
}
