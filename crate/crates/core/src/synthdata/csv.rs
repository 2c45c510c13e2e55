//! Sample sets as CSV: header `x0,...,x{d-1},label`, one row per sample,
//! features printed with 17 significant digits.

use std::io::{BufRead, Write};

use crate::discriminant::SampleSet;
use crate::error::{DdaError, Result};
use crate::numerics::Vector;
use crate::scalar::Scalar;

pub fn write_samples_csv<T: Scalar, W: Write>(mut out: W, s: &SampleSet<T>) -> Result<()> {
    let header: Vec<String> = (0..s.dim()).map(|i| format!("x{i}")).collect();
    writeln!(out, "{},label", header.join(","))?;
    for (x, l) in s.features().iter().zip(s.labels()) {
        for v in x.iter() {
            write!(out, "{:.16e},", v.to_f64_lossy())?;
        }
        writeln!(out, "{l}")?;
    }
    Ok(())
}

/// The class count is one more than the largest label seen.
pub fn read_samples_csv<T: Scalar, R: BufRead>(input: R) -> Result<SampleSet<T>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| DdaError::Csv("empty input".into()))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.last() != Some(&"label") {
        return Err(DdaError::Csv(format!(
            "last column must be `label`, header was `{header}`"
        )));
    }
    let dim = cols.len() - 1;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != dim + 1 {
            return Err(DdaError::Csv(format!(
                "row {} has {} fields, expected {}",
                i + 1,
                fields.len(),
                dim + 1
            )));
        }
        let x = fields[..dim]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map(T::lit)
                    .map_err(|e| DdaError::Csv(format!("row {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<T>>>()?;
        let l = fields[dim]
            .parse::<usize>()
            .map_err(|e| DdaError::Csv(format!("row {}: {e}", i + 1)))?;
        features.push(Vector::new(x));
        labels.push(l);
    }
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    SampleSet::new(features, labels, classes)
}
