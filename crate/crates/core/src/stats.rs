//! Run statistics: counts, pose-diversity histogram, and per-stage timings,
//! emitted as comma-delimited tables.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("kept ({kept}) + filtered ({filtered}) must equal generated ({generated})")]
    CountMismatch {
        generated: u64,
        kept: u64,
        filtered: u64,
    },
    #[error("stats parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub const SCHEMA: &str = "stats v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBucket {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub generated: u64,
    pub kept: u64,
    pub filtered: u64,
    pub min_pairwise_distance: Option<f64>,
    pub histogram: Vec<HistogramBucket>,
    pub timings: Vec<StageTiming>,
}

impl RunStats {
    pub fn new(
        generated: u64,
        kept: u64,
        filtered: u64,
        min_pairwise_distance: Option<f64>,
        histogram: Vec<HistogramBucket>,
        timings: Vec<StageTiming>,
    ) -> Result<Self, StatsError> {
        if kept + filtered != generated {
            return Err(StatsError::CountMismatch {
                generated,
                kept,
                filtered,
            });
        }
        Ok(Self {
            generated,
            kept,
            filtered,
            min_pairwise_distance,
            histogram,
            timings,
        })
    }

    /// Histogram over `[0, 2]` from raw pairwise-distance bucket counts.
    pub fn buckets_from_counts(counts: &[usize]) -> Vec<HistogramBucket> {
        let n = counts.len().max(1) as f64;
        counts
            .iter()
            .enumerate()
            .map(|(i, &count)| HistogramBucket {
                lo: 2.0 * i as f64 / n,
                hi: 2.0 * (i + 1) as f64 / n,
                count: count as u64,
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        out.push_str(SCHEMA);
        out.push('\n');
        out.push_str("section,counts\nmetric,value\n");
        let _ = writeln!(out, "generated,{}", self.generated);
        let _ = writeln!(out, "kept,{}", self.kept);
        let _ = writeln!(out, "filtered,{}", self.filtered);
        if let Some(min) = self.min_pairwise_distance {
            let _ = writeln!(out, "min_pairwise_distance,{min}");
        }
        out.push_str("section,histogram\nlo,hi,count\n");
        for bucket in &self.histogram {
            let _ = writeln!(out, "{},{},{}", bucket.lo, bucket.hi, bucket.count);
        }
        out.push_str("section,timings\nstage,seconds\n");
        for timing in &self.timings {
            let _ = writeln!(out, "{},{}", timing.stage, timing.seconds);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, StatsError> {
        let parse = |line: usize, token: &str| -> Result<f64, StatsError> {
            token.parse::<f64>().map_err(|e| StatsError::Parse {
                line,
                message: e.to_string(),
            })
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, first)) if first.trim() == SCHEMA => {}
            other => {
                return Err(StatsError::Parse {
                    line: 1,
                    message: format!("expected schema line, found {other:?}"),
                })
            }
        }
        let mut section = String::new();
        let mut generated = 0u64;
        let mut kept = 0u64;
        let mut filtered = 0u64;
        let mut min_pairwise = None;
        let mut histogram = Vec::new();
        let mut timings = Vec::new();
        for (index, raw) in lines {
            let line_no = index + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields[0] == "section" {
                section = fields.get(1).unwrap_or(&"").to_string();
                continue;
            }
            match section.as_str() {
                "counts" => {
                    if fields[0] == "metric" {
                        continue;
                    }
                    let value = fields.get(1).copied().unwrap_or("");
                    match fields[0] {
                        "generated" => generated = parse(line_no, value)? as u64,
                        "kept" => kept = parse(line_no, value)? as u64,
                        "filtered" => filtered = parse(line_no, value)? as u64,
                        "min_pairwise_distance" => min_pairwise = Some(parse(line_no, value)?),
                        other => {
                            return Err(StatsError::Parse {
                                line: line_no,
                                message: format!("unknown count metric {other:?}"),
                            })
                        }
                    }
                }
                "histogram" => {
                    if fields[0] == "lo" {
                        continue;
                    }
                    if fields.len() != 3 {
                        return Err(StatsError::Parse {
                            line: line_no,
                            message: "histogram rows need lo,hi,count".to_string(),
                        });
                    }
                    histogram.push(HistogramBucket {
                        lo: parse(line_no, fields[0])?,
                        hi: parse(line_no, fields[1])?,
                        count: parse(line_no, fields[2])? as u64,
                    });
                }
                "timings" => {
                    if fields[0] == "stage" {
                        continue;
                    }
                    if fields.len() != 2 {
                        return Err(StatsError::Parse {
                            line: line_no,
                            message: "timing rows need stage,seconds".to_string(),
                        });
                    }
                    timings.push(StageTiming {
                        stage: fields[0].to_string(),
                        seconds: parse(line_no, fields[1])?,
                    });
                }
                other => {
                    return Err(StatsError::Parse {
                        line: line_no,
                        message: format!("row outside a known section ({other:?})"),
                    })
                }
            }
        }
        RunStats::new(generated, kept, filtered, min_pairwise, histogram, timings)
    }
}
