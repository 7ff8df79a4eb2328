//! Aggregation of per-session metrics into the summary table and the
//! object-count curves.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phy::Scheme;

/// Everything the report needs from one session. This is also the summary
/// record written to the event log, so reports can be rebuilt from a log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub session: u64,
    pub scene_index: usize,
    pub scheme: Scheme,
    pub snr_db: f64,
    pub user_id: u32,
    /// Objects in the original scene.
    pub object_count: usize,
    pub uplink_bits: usize,
    pub downlink_bits: usize,
    pub control_bits: usize,
    pub downlink_bit_errors: usize,
    pub psnr_db: f64,
    /// Object-level metrics against the original scene; absent for scheme A,
    /// whose receiver only sees pixels.
    pub similarity: Option<f64>,
    pub recovery_ratio: Option<f64>,
    pub quantity_discrepancy: Option<usize>,
    pub semantic_failure: bool,
    pub feedback_score: f64,
}

/// Object-count bin; `hi = None` is open-ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectBin {
    pub lo: usize,
    pub hi: Option<usize>,
}

impl ObjectBin {
    pub fn contains(&self, n: usize) -> bool {
        n >= self.lo && self.hi.is_none_or(|hi| n <= hi)
    }

    pub fn label(&self) -> String {
        match self.hi {
            Some(hi) if hi == self.lo => format!("{}", self.lo),
            Some(hi) => format!("{}-{}", self.lo, hi),
            None => format!("{}+", self.lo),
        }
    }

    /// 1-2, 3-4, 5-6, 7+.
    pub fn default_bins() -> Vec<ObjectBin> {
        vec![
            ObjectBin { lo: 1, hi: Some(2) },
            ObjectBin { lo: 3, hi: Some(4) },
            ObjectBin { lo: 5, hi: Some(6) },
            ObjectBin { lo: 7, hi: None },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    fn of(values: impl IntoIterator<Item = f64>) -> Option<Stat> {
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            n += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        (n > 0).then(|| Stat {
            mean: sum / n as f64,
            min,
            max,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub sessions: usize,
    pub downlink_bits: Stat,
    pub uplink_bits: Stat,
    pub control_bits: Stat,
    pub psnr_db: Stat,
    pub similarity: Option<Stat>,
    pub recovery_ratio: Option<Stat>,
    pub quantity_discrepancy: Option<Stat>,
    pub semantic_failure_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinPoint {
    pub bin: ObjectBin,
    pub sessions: usize,
    pub psnr_db: Option<f64>,
    pub similarity: Option<f64>,
    pub recovery_ratio: Option<f64>,
    pub quantity_discrepancy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedCurve {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub points: Vec<BinPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// One row per (scheme, SNR), schemes in A, B, C order.
    pub summaries: Vec<SchemeSummary>,
    pub curves: Vec<BinnedCurve>,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    Stat::of(values).map(|s| s.mean)
}

/// Groups sessions by (scheme, SNR) and computes exact means plus curves
/// over `bins` of original object count.
pub fn aggregate(results: &[SessionMetrics], bins: &[ObjectBin]) -> Result<MetricsReport> {
    if results.is_empty() {
        return Err(Error::EmptyResults);
    }
    let mut keys: Vec<(Scheme, f64)> = Vec::new();
    for r in results {
        if !keys
            .iter()
            .any(|&(s, snr)| s == r.scheme && snr.to_bits() == r.snr_db.to_bits())
        {
            keys.push((r.scheme, r.snr_db));
        }
    }
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut summaries = Vec::with_capacity(keys.len());
    let mut curves = Vec::with_capacity(keys.len());
    for (scheme, snr_db) in keys {
        let group: Vec<&SessionMetrics> = results
            .iter()
            .filter(|r| r.scheme == scheme && r.snr_db.to_bits() == snr_db.to_bits())
            .collect();
        let failures = group.iter().filter(|r| r.semantic_failure).count();
        summaries.push(SchemeSummary {
            scheme,
            snr_db,
            sessions: group.len(),
            downlink_bits: Stat::of(group.iter().map(|r| r.downlink_bits as f64)).unwrap(),
            uplink_bits: Stat::of(group.iter().map(|r| r.uplink_bits as f64)).unwrap(),
            control_bits: Stat::of(group.iter().map(|r| r.control_bits as f64)).unwrap(),
            psnr_db: Stat::of(group.iter().map(|r| r.psnr_db)).unwrap(),
            similarity: Stat::of(group.iter().filter_map(|r| r.similarity)),
            recovery_ratio: Stat::of(group.iter().filter_map(|r| r.recovery_ratio)),
            quantity_discrepancy: Stat::of(
                group
                    .iter()
                    .filter_map(|r| r.quantity_discrepancy.map(|q| q as f64)),
            ),
            semantic_failure_rate: failures as f64 / group.len() as f64,
        });
        let points = bins
            .iter()
            .map(|bin| {
                let members: Vec<&&SessionMetrics> = group
                    .iter()
                    .filter(|r| bin.contains(r.object_count))
                    .collect();
                BinPoint {
                    bin: *bin,
                    sessions: members.len(),
                    psnr_db: mean(members.iter().map(|r| r.psnr_db)),
                    similarity: mean(members.iter().filter_map(|r| r.similarity)),
                    recovery_ratio: mean(members.iter().filter_map(|r| r.recovery_ratio)),
                    quantity_discrepancy: mean(
                        members
                            .iter()
                            .filter_map(|r| r.quantity_discrepancy.map(|q| q as f64)),
                    ),
                }
            })
            .collect();
        curves.push(BinnedCurve {
            scheme,
            snr_db,
            points,
        });
    }
    Ok(MetricsReport { summaries, curves })
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

fn stat_cells(s: Option<Stat>) -> [String; 3] {
    match s {
        Some(s) => [fmt(s.mean), fmt(s.min), fmt(s.max)],
        None => Default::default(),
    }
}

impl MetricsReport {
    pub fn summary(&self, scheme: Scheme, snr_db: f64) -> Option<&SchemeSummary> {
        self.summaries
            .iter()
            .find(|s| s.scheme == scheme && s.snr_db.to_bits() == snr_db.to_bits())
    }

    pub fn curve(&self, scheme: Scheme, snr_db: f64) -> Option<&BinnedCurve> {
        self.curves
            .iter()
            .find(|c| c.scheme == scheme && c.snr_db.to_bits() == snr_db.to_bits())
    }

    /// Summary table, one row per (scheme, SNR).
    pub fn write_table<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["scheme".to_string(), "snr_db".into(), "sessions".into()];
        for metric in [
            "downlink_bits",
            "uplink_bits",
            "control_bits",
            "psnr_db",
            "similarity",
            "recovery_ratio",
            "quantity_discrepancy",
        ] {
            for stat in ["mean", "min", "max"] {
                header.push(format!("{metric}_{stat}"));
            }
        }
        header.push("semantic_failure_rate".into());
        w.write_record(&header)?;
        for s in &self.summaries {
            let mut row = vec![
                s.scheme.label().to_string(),
                fmt(s.snr_db),
                s.sessions.to_string(),
            ];
            for stat in [
                Some(s.downlink_bits),
                Some(s.uplink_bits),
                Some(s.control_bits),
                Some(s.psnr_db),
                s.similarity,
                s.recovery_ratio,
                s.quantity_discrepancy,
            ] {
                row.extend(stat_cells(stat));
            }
            row.push(fmt(s.semantic_failure_rate));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<table>", e))?;
        Ok(())
    }

    /// Binned curves, one row per (scheme, SNR, bin).
    pub fn write_curves<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "scheme",
            "snr_db",
            "bin",
            "sessions",
            "psnr_db",
            "similarity",
            "recovery_ratio",
            "quantity_discrepancy",
        ])?;
        for c in &self.curves {
            for p in &c.points {
                w.write_record([
                    c.scheme.label().to_string(),
                    fmt(c.snr_db),
                    p.bin.label(),
                    p.sessions.to_string(),
                    fmt_opt(p.psnr_db),
                    fmt_opt(p.similarity),
                    fmt_opt(p.recovery_ratio),
                    fmt_opt(p.quantity_discrepancy),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<curves>", e))?;
        Ok(())
    }

    /// Structured records: the whole report as pretty JSON.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}
