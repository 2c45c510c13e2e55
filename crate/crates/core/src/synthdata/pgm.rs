//! Binary PGM (`P5`, 8-bit) reading and writing.
//!
//! Masks are stored as 0 / 255. Score maps in `[0, 1]` are scaled by 255 and
//! rounded, so they survive a round trip to within half a quantization step.

use std::fs;
use std::path::Path;

use crate::error::{DdaError, Result};
use crate::scalar::Scalar;
use crate::segmetrics::{MaskImage, ScoreMap};

/// Raw 8-bit grayscale raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u8,
    pub data: Vec<u8>,
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, img.maxval).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(DdaError::MalformedHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| DdaError::MalformedHeader(format!("bad {what}")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(DdaError::MalformedHeader("magic number is not P5".into()));
    }
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(DdaError::MalformedHeader(format!(
            "unsupported maxval {maxval}"
        )));
    }
    match bytes.get(h.pos) {
        Some(b) if b.is_ascii_whitespace() => h.pos += 1,
        _ => {
            return Err(DdaError::MalformedHeader(
                "no whitespace after maxval".into(),
            ))
        }
    }
    let expected = width * height;
    let payload = &bytes[h.pos..];
    if payload.len() < expected {
        return Err(DdaError::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    Ok(GrayImage {
        width,
        height,
        maxval: maxval as u8,
        data: payload[..expected].to_vec(),
    })
}

pub fn write_pgm(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    fs::write(path, encode_pgm(img))?;
    Ok(())
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode_pgm(&fs::read(path)?)
}

pub fn mask_to_gray(mask: &MaskImage) -> GrayImage {
    GrayImage {
        width: mask.width(),
        height: mask.height(),
        maxval: 255,
        data: mask
            .pixels()
            .iter()
            .map(|&p| if p { 255 } else { 0 })
            .collect(),
    }
}

/// Any non-zero pixel is foreground.
pub fn gray_to_mask(img: &GrayImage) -> MaskImage {
    MaskImage::new(
        img.height,
        img.width,
        img.data.iter().map(|&v| v != 0).collect(),
    )
    .expect("payload length checked on decode")
}

pub fn scores_to_gray<T: Scalar>(scores: &ScoreMap<T>) -> Result<GrayImage> {
    let data = scores
        .scores()
        .iter()
        .map(|&s| {
            let v = s.to_f64_lossy();
            if (0.0..=1.0).contains(&v) {
                Ok((v * 255.0).round() as u8)
            } else {
                Err(DdaError::OutOfRange(v))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GrayImage {
        width: scores.width(),
        height: scores.height(),
        maxval: 255,
        data,
    })
}

/// Intensities scaled back to `[0, 1]` by the header's maxval.
pub fn gray_to_scores<T: Scalar>(img: &GrayImage) -> ScoreMap<T> {
    let scale = f64::from(img.maxval);
    let scores = img
        .data
        .iter()
        .map(|&v| T::lit(f64::from(v) / scale))
        .collect();
    ScoreMap::new(img.height, img.width, scores).expect("payload length checked on decode")
}

pub fn write_mask_pgm(path: impl AsRef<Path>, mask: &MaskImage) -> Result<()> {
    write_pgm(path, &mask_to_gray(mask))
}

pub fn read_mask_pgm(path: impl AsRef<Path>) -> Result<MaskImage> {
    Ok(gray_to_mask(&read_pgm(path)?))
}

pub fn write_scores_pgm<T: Scalar>(path: impl AsRef<Path>, scores: &ScoreMap<T>) -> Result<()> {
    write_pgm(path, &scores_to_gray(scores)?)
}

pub fn read_scores_pgm<T: Scalar>(path: impl AsRef<Path>) -> Result<ScoreMap<T>> {
    Ok(gray_to_scores(&read_pgm(path)?))
}
