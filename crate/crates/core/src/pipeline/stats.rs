//! Corpus-level aggregates: difficulty histogram, complexity summaries,
//! type tags and curriculum level shares.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DatasetInstance, PipelineError, Provenance};
use crate::interp::EntryCall;
use crate::syntax::{measure_complexity, parse, ComplexityReport};

/// An instance plus the difficulty filter's pass count, when known.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsRecord {
    #[serde(flatten)]
    pub instance: DatasetInstance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass_count: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexitySummary {
    pub loc: Summary,
    pub ast_depth: Summary,
    pub branch_count: Summary,
    pub loop_count: Summary,
    pub cf_nesting_depth: Summary,
}

/// Published corpus figures, echoed for comparison only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFigures {
    pub loc_mean: f64,
    pub loc_median: f64,
    pub ast_depth_mean: f64,
    pub cf_nesting_mean: f64,
    pub level_shares_percent: [f64; 3],
    pub questions_per_program: f64,
    pub cf_questions_per_program: f64,
    pub df_questions_per_program: f64,
}

impl Default for ReferenceFigures {
    fn default() -> Self {
        ReferenceFigures {
            loc_mean: 9.93,
            loc_median: 9.0,
            ast_depth_mean: 9.74,
            cf_nesting_mean: 2.86,
            level_shares_percent: [20.9, 14.2, 64.9],
            questions_per_program: 7.8,
            cf_questions_per_program: 3.2,
            df_questions_per_program: 4.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub instances: usize,
    /// Instances whose program failed to parse; excluded from complexity.
    pub parse_failures: usize,
    /// Bin `k` counts instances with pass count `k`, for k in 0..=10; larger
    /// counts land in the last bin.
    pub difficulty_histogram: [usize; 11],
    pub complexity: Option<ComplexitySummary>,
    /// Instances per argument type of the entry call.
    pub type_tags: BTreeMap<String, usize>,
    /// Share of instances per level (`"unlabeled"` when absent).
    pub level_shares: BTreeMap<String, f64>,
    pub provenance: BTreeMap<String, usize>,
    pub reference: ReferenceFigures,
}

fn summarize(mut xs: Vec<usize>) -> Summary {
    xs.sort_unstable();
    let n = xs.len();
    let mean = xs.iter().sum::<usize>() as f64 / n as f64;
    let median = if n % 2 == 1 {
        xs[n / 2] as f64
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) as f64 / 2.0
    };
    Summary { mean, median }
}

pub fn corpus_stats(records: &[StatsRecord]) -> Result<CorpusStats, PipelineError> {
    if records.is_empty() {
        return Err(PipelineError::Config("empty corpus".into()));
    }
    let mut histogram = [0usize; 11];
    let mut reports: Vec<ComplexityReport> = Vec::new();
    let mut parse_failures = 0;
    let mut type_tags: BTreeMap<String, usize> = BTreeMap::new();
    let mut levels: BTreeMap<String, usize> = BTreeMap::new();
    let mut provenance: BTreeMap<String, usize> = BTreeMap::new();
    for r in records {
        if let Some(p) = r.pass_count {
            histogram[(p as usize).min(10)] += 1;
        }
        match parse(&r.instance.code) {
            Ok(tree) => reports.push(measure_complexity(&tree)),
            Err(_) => parse_failures += 1,
        }
        if let Ok(call) = EntryCall::parse(&r.instance.call) {
            let mut tags: Vec<&str> = call
                .args
                .iter()
                .chain(call.kwargs.iter().map(|(_, v)| v))
                .map(|v| v.type_name())
                .collect();
            tags.sort_unstable();
            tags.dedup();
            for t in tags {
                *type_tags.entry(t.to_string()).or_default() += 1;
            }
        }
        let level = r.instance.level.map_or("unlabeled".to_string(), |l| l.to_string());
        *levels.entry(level).or_default() += 1;
        let prov = match r.instance.provenance {
            Provenance::Raw => "raw",
            Provenance::Mutated => "mutated",
        };
        *provenance.entry(prov.to_string()).or_default() += 1;
    }
    let complexity = (!reports.is_empty()).then(|| {
        let field = |f: fn(&ComplexityReport) -> usize| summarize(reports.iter().map(f).collect());
        ComplexitySummary {
            loc: field(|r| r.loc),
            ast_depth: field(|r| r.ast_depth),
            branch_count: field(|r| r.branch_count),
            loop_count: field(|r| r.loop_count),
            cf_nesting_depth: field(|r| r.cf_nesting_depth),
        }
    });
    let n = records.len() as f64;
    Ok(CorpusStats {
        instances: records.len(),
        parse_failures,
        difficulty_histogram: histogram,
        complexity,
        type_tags,
        level_shares: levels.into_iter().map(|(k, c)| (k, c as f64 / n)).collect(),
        provenance,
        reference: ReferenceFigures::default(),
    })
}
