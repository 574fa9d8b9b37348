//! Side-by-side metric tables with relative change against a baseline.

use std::fmt::Write as _;

use crate::bundle::{BundleSummary, MetricSet};

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    /// First entry is the baseline.
    pub labels: Vec<String>,
    pub rows: Vec<MetricSet>,
}

/// `(a - b) / b`; `None` when the baseline is zero.
pub fn relative_change(a: f64, b: f64) -> Option<f64> {
    (b != 0.0).then(|| (a - b) / b)
}

impl Comparison {
    pub fn new(entries: Vec<(String, MetricSet)>) -> Self {
        let (labels, rows) = entries.into_iter().unzip();
        Self { labels, rows }
    }

    pub fn of_bundles(bundles: &[(String, BundleSummary)]) -> Self {
        Self::new(bundles.iter().map(|(l, b)| (l.clone(), b.metrics.clone())).collect())
    }

    /// Change of entry `i` relative to the baseline, per metric.
    pub fn improvements(&self, i: usize) -> Vec<Option<f64>> {
        let base = self.rows[0].values();
        self.rows[i].values().iter().zip(base).map(|(&a, b)| relative_change(a, b)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,metric,value,change_vs_baseline\n");
        for (i, (label, row)) in self.labels.iter().zip(&self.rows).enumerate() {
            let changes = self.improvements(i);
            for ((name, value), change) in MetricSet::NAMES.iter().zip(row.values()).zip(changes) {
                let change = change.map_or_else(String::new, |c| c.to_string());
                writeln!(out, "{label},{name},{value},{change}").expect("string write");
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let width = self.labels.iter().map(String::len).max().unwrap_or(0).max(18);
        let mut out = format!("{:<20}", "metric");
        for label in &self.labels {
            write!(out, "{label:>width$}").expect("string write");
        }
        out.push('\n');
        let changes: Vec<Vec<Option<f64>>> = (0..self.rows.len()).map(|i| self.improvements(i)).collect();
        for (m, name) in MetricSet::NAMES.iter().enumerate() {
            write!(out, "{name:<20}").expect("string write");
            for (i, row) in self.rows.iter().enumerate() {
                let value = row.values()[m];
                let cell = if i == 0 {
                    format!("{value:.4}")
                } else {
                    match changes[i][m] {
                        Some(c) => format!("{value:.4} ({:+.2}%)", 100.0 * c),
                        None => format!("{value:.4} (n/a)"),
                    }
                };
                write!(out, "{cell:>width$}").expect("string write");
            }
            out.push('\n');
        }
        out
    }
}
