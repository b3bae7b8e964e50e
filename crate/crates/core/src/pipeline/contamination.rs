//! Near-duplicate detection by cosine similarity over precomputed vectors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PipelineError;

pub const DEFAULT_THRESHOLD: f64 = 0.95;
/// Histogram bins of width 0.1 over [-1, 1].
const BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowResult {
    pub row: usize,
    /// Highest similarity against any benchmark row; absent on row error.
    pub max_sim: Option<f64>,
    pub best_match: Option<usize>,
    pub flagged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationReport {
    pub threshold: f64,
    pub rows: Vec<RowResult>,
    pub flagged: Vec<usize>,
    /// Counts of `max_sim` per bin; bin `i` covers `[-1 + 0.1 i, -0.9 + 0.1 i)`,
    /// the last bin also holding 1.0.
    pub histogram: Vec<usize>,
    /// Benchmark rows skipped for having zero norm.
    pub skipped_bench_rows: Vec<usize>,
}

/// Parse a vector file: a header `n dim`, then `n` rows of `dim` decimals.
pub fn parse_vectors(text: &str) -> Result<Vec<Vec<f64>>, PipelineError> {
    let bad = |m: String| PipelineError::Config(m);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty vector file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad(format!("bad header `{header}`"))))
        .collect::<Result<_, _>>()?;
    let [n, dim] = dims[..] else {
        return Err(bad(format!("header must be `n dim`, got `{header}`")));
    };
    let mut rows = Vec::with_capacity(n);
    for (i, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(format!("row {}: bad number `{t}`", i + 1))))
            .collect::<Result<_, _>>()?;
        if row.len() != dim {
            return Err(bad(format!("row {}: expected {dim} values, got {}", i + 1, row.len())));
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(bad(format!("expected {n} rows, got {}", rows.len())));
    }
    Ok(rows)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `a.b / sqrt(|a|^2 |b|^2)`.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let den = (dot(a, a) * dot(b, b)).sqrt();
    (den > 0.0 && den.is_finite()).then(|| dot(a, b) / den)
}

pub fn contamination_scan(
    train: &[Vec<f64>],
    bench: &[Vec<f64>],
    threshold: f64,
) -> Result<ContaminationReport, PipelineError> {
    let dim = train.first().or(bench.first()).map_or(0, Vec::len);
    if let Some(r) = train.iter().chain(bench).find(|r| r.len() != dim) {
        return Err(PipelineError::Config(format!(
            "dimension mismatch: {} vs {dim}",
            r.len()
        )));
    }
    let zero = |r: &Vec<f64>| dot(r, r) == 0.0;
    let skipped_bench_rows: Vec<usize> = (0..bench.len()).filter(|&j| zero(&bench[j])).collect();
    let rows: Vec<RowResult> = train
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            if zero(a) {
                return RowResult {
                    row: i,
                    max_sim: None,
                    best_match: None,
                    flagged: false,
                    error: Some("zero vector".into()),
                };
            }
            let mut best: Option<(usize, f64)> = None;
            for (j, b) in bench.iter().enumerate() {
                if let Some(s) = cosine(a, b) {
                    if best.is_none_or(|(_, m)| s > m) {
                        best = Some((j, s));
                    }
                }
            }
            RowResult {
                row: i,
                max_sim: best.map(|b| b.1),
                best_match: best.map(|b| b.0),
                flagged: best.is_some_and(|b| b.1 > threshold),
                error: None,
            }
        })
        .collect();
    let mut histogram = vec![0; BINS];
    for s in rows.iter().filter_map(|r| r.max_sim) {
        let bin = (((s + 1.0) * 10.0).floor() as isize).clamp(0, BINS as isize - 1);
        histogram[bin as usize] += 1;
    }
    Ok(ContaminationReport {
        threshold,
        flagged: rows.iter().filter(|r| r.flagged).map(|r| r.row).collect(),
        rows,
        histogram,
        skipped_bench_rows,
    })
}
