use std::io::Write;

use serde::{Deserialize, Serialize};

use super::records::{csv_error, RealizationRecord};
use super::Quantity;
use crate::error::Result;

/// Disorder statistics of one quantity at one `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub n: usize,
    pub quantity: Quantity,
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    pub samples: usize,
    /// Realizations left out: failed ones, plus degenerate ones for ratio quantities.
    pub degenerate: usize,
    /// For the advantage only: `mean τ^∥ / mean τ^♯`.
    pub ratio_of_means: Option<f64>,
    pub ratio_of_means_stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleAggregate {
    pub realizations: usize,
    pub rows: Vec<AggregateRow>,
}

/// `(mean, standard error)` in the given order; the error is `0` for one sample.
pub fn mean_stderr(values: &[f64]) -> Option<(f64, f64)> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Some((mean, 0.0));
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Some((mean, (ss / (n - 1) as f64 / n as f64).sqrt()))
}

fn value_of(r: &RealizationRecord, q: Quantity) -> Option<f64> {
    match q {
        Quantity::Variance => r.variance,
        Quantity::Gap => r.gap,
        Quantity::Advantage => r.advantage,
        Quantity::ConnectionCount => r.connection_count.map(|c| c as f64),
        Quantity::Lambda2 => r.lambda2,
        Quantity::SandwichFraction => r.sandwich_fraction,
    }
}

impl EnsembleAggregate {
    /// Aggregates `records`, which must be ordered by `(n, realization)`.
    pub fn from_records(records: &[RealizationRecord], n_values: &[usize], realizations: usize, quantities: &[Quantity]) -> Self {
        let mut rows = Vec::new();
        for &n in n_values {
            let at_n: Vec<&RealizationRecord> = records.iter().filter(|r| r.n == n).collect();
            for &q in quantities {
                let usable: Vec<&RealizationRecord> = at_n
                    .iter()
                    .copied()
                    .filter(|r| !r.failed() && !(q.is_ratio() && r.degenerate))
                    .collect();
                let values: Vec<f64> = usable.iter().filter_map(|r| value_of(r, q)).collect();
                let stats = mean_stderr(&values);
                let (ratio_of_means, ratio_of_means_stderr) = if q == Quantity::Advantage {
                    ratio_of_means(&usable)
                } else {
                    (None, None)
                };
                rows.push(AggregateRow {
                    n,
                    quantity: q,
                    mean: stats.map(|s| s.0),
                    stderr: stats.map(|s| s.1),
                    samples: values.len(),
                    degenerate: realizations.saturating_sub(values.len()),
                    ratio_of_means,
                    ratio_of_means_stderr,
                });
            }
        }
        Self { realizations, rows }
    }

    pub fn row(&self, n: usize, quantity: Quantity) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.n == n && r.quantity == quantity)
    }

    /// `(N, mean, stderr)` triples for a power-law fit; rows without samples are skipped.
    pub fn points(&self, quantity: Quantity) -> Vec<(f64, f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.quantity == quantity)
            .filter_map(|r| Some((r.n as f64, r.mean?, r.stderr?)))
            .collect()
    }

    /// The advantage under the ratio-of-means convention.
    pub fn ratio_of_means_points(&self) -> Vec<(f64, f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.quantity == Quantity::Advantage)
            .filter_map(|r| Some((r.n as f64, r.ratio_of_means?, r.ratio_of_means_stderr?)))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn ratio_of_means(usable: &[&RealizationRecord]) -> (Option<f64>, Option<f64>) {
    let pairs: Vec<(f64, f64)> = usable.iter().filter_map(|r| Some((r.tau_parallel?, r.tau?))).collect();
    let par: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let sharp: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    match (mean_stderr(&par), mean_stderr(&sharp)) {
        (Some((mp, sp)), Some((ms, ss))) if ms > 0.0 && mp > 0.0 => {
            let ratio = mp / ms;
            // first-order propagation, the two means treated as independent
            let rel = ((sp / mp).powi(2) + (ss / ms).powi(2)).sqrt();
            (Some(ratio), Some(ratio * rel))
        }
        _ => (None, None),
    }
}
