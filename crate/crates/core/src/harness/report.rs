use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::plan::CheckpointUnit;
use crate::harness::stats::{FisherBand, Summary};
use crate::io::format_f64;

/// Summary of one tracked scalar for one estimator, sample size and checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub estimator: String,
    pub n: usize,
    pub unit: CheckpointUnit,
    pub checkpoint: u64,
    pub metric: String,
    /// `None` when every replication failed.
    pub summary: Option<Summary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<FisherBand>,
    /// Per-replication values in replication order (`None` = failed), when
    /// the plan asks to keep them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Option<f64>>>,
}

impl ReportRow {
    /// The successful per-replication values, if kept.
    pub fn successful_values(&self) -> Option<Vec<f64>> {
        self.values.as_ref().map(|v| v.iter().flatten().copied().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationFailure {
    pub estimator: String,
    pub n: usize,
    pub replication: u64,
    pub message: String,
}

/// Replication-aggregated output of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub master_seed: u64,
    pub replications: usize,
    pub rows: Vec<ReportRow>,
    pub failures: Vec<ReplicationFailure>,
}

impl ExperimentReport {
    pub fn row(&self, estimator: &str, n: usize, checkpoint: u64, metric: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.n == n && r.checkpoint == checkpoint && r.metric == metric)
    }

    /// All checkpoints of one series, in order.
    pub fn series(&self, estimator: &str, n: usize, metric: &str) -> Vec<&ReportRow> {
        self.rows
            .iter()
            .filter(|r| r.estimator == estimator && r.n == n && r.metric == metric)
            .collect()
    }

    /// Long-format CSV: `estimator,N,checkpoint,metric,quantile,value`, where
    /// `quantile` is one of `q05 q25 q50 q75 q95 mean sd count` or
    /// `band_lower`/`band_upper` for the Fisher band.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["estimator", "N", "checkpoint", "metric", "quantile", "value"])?;
        for row in &self.rows {
            let n = row.n.to_string();
            let c = row.checkpoint.to_string();
            let mut emit =
                |q: &str, v: f64| w.write_record([row.estimator.as_str(), &n, &c, &row.metric, q, &format_f64(v)]);
            if let Some(s) = &row.summary {
                for (q, v) in s.entries() {
                    emit(q, v)?;
                }
            }
            if let Some(b) = &row.band {
                emit("band_lower", b.lower)?;
                emit("band_upper", b.upper)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
