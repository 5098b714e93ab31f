//! Run reports and statistical verification.
//!
//! A report is rendered as ordered `key = value` lines, so a fixed
//! (instance, seed, flags) triple produces byte-identical output on one
//! build. Wall time goes to stderr, never into the rendered report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::Result;
use local_gibbs::gibbs::{FullConfig, Instance};
use local_gibbs::oracle;

#[derive(Debug, Default)]
pub struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut r = Report::default();
        r.push("command", command);
        r
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn push_f64(&mut self, key: &str, value: f64) {
        // Fixed formatting keeps reports byte-stable.
        self.lines.push((key.to_string(), format!("{value:.12e}")));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }

    /// Writes the report to `--out` or stdout.
    pub fn deliver(&self, out: Option<&std::path::Path>) -> Result<()> {
        match out {
            Some(path) => std::fs::write(path, self.render())?,
            None => print!("{}", self.render()),
        }
        Ok(())
    }
}

/// Outcome of comparing empirical samples against the exact target
/// distribution.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub samples: usize,
    pub support: usize,
    pub empirical_tv: f64,
    /// Confidence radius ~ sqrt(|support| / (2 N)).
    pub confidence_radius: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares sample frequencies with the exact target distribution of the
/// instance. The tolerance defaults to the confidence radius when not
/// given. Zero samples is an explicit failure.
pub fn verify_distribution(
    samples: &[FullConfig],
    inst: &Instance,
    oracle_budget: u64,
    tolerance: Option<f64>,
) -> Result<VerifyReport> {
    anyhow::ensure!(!samples.is_empty(), "no successful samples to verify");
    let target = oracle::joint_distribution(inst, oracle_budget)?;
    let n = samples.len() as f64;
    let mut freq: BTreeMap<FullConfig, f64> = BTreeMap::new();
    for s in samples {
        *freq.entry(s.clone()).or_insert(0.0) += 1.0 / n;
    }
    let empirical_tv = oracle::joint_tv(&freq, &target);
    let confidence_radius = (target.len() as f64 / (2.0 * n)).sqrt();
    let tolerance = tolerance.unwrap_or(confidence_radius);
    Ok(VerifyReport {
        samples: samples.len(),
        support: target.len(),
        empirical_tv,
        confidence_radius,
        tolerance,
        pass: empirical_tv <= tolerance,
    })
}

impl VerifyReport {
    pub fn write_into(&self, report: &mut Report) {
        report.push("verify.samples", self.samples);
        report.push("verify.support", self.support);
        report.push_f64("verify.empirical_tv", self.empirical_tv);
        report.push_f64("verify.confidence_radius", self.confidence_radius);
        report.push_f64("verify.tolerance", self.tolerance);
        report.push("verify.pass", self.pass);
    }
}
