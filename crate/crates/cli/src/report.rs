//! JSON report documents and their aligned-text companions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nbknn_core::{EfficiencyTable, MinorityRole, TrialReport};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct SimulationReport {
    pub schema: u32,
    pub command: &'static str,
    pub design: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minority_role: Option<MinorityRole>,
    pub alpha: f64,
    pub trials: usize,
    pub seed: u64,
    pub k_max: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub methods: Vec<TrialReport>,
}

#[derive(Debug, Serialize)]
pub struct ClassSummary {
    pub name: String,
    pub count: usize,
}

#[derive(Debug, Serialize)]
pub struct BenchmarkReport {
    pub schema: u32,
    pub command: &'static str,
    pub label_column: String,
    pub classes: Vec<ClassSummary>,
    pub features: usize,
    pub trials: usize,
    pub seed: u64,
    pub k_max: usize,
    pub minority_test_fraction: f64,
    pub test_per_class: usize,
    pub methods: Vec<TrialReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<EfficiencyTable>,
}

pub fn to_json<T: Serialize>(doc: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(doc)?;
    s.push('\n');
    Ok(s)
}

/// Percent with 2 decimals, standard error in parentheses with 3.
fn cell(mean: f64, se: f64) -> String {
    format!("{:.2} ({:.3})", 100.0 * mean, 100.0 * se)
}

pub fn metrics_table(reports: &[TrialReport]) -> String {
    let width = reports.iter().map(|r| r.method.len()).max().unwrap_or(6).max(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>16}  {:>16}  {:>16}", "method", "precision", "recall", "f1");
    for r in reports {
        let _ = writeln!(
            out,
            "{:<width$}  {:>16}  {:>16}  {:>16}",
            r.method,
            cell(r.precision.mean, r.precision.se),
            cell(r.recall.mean, r.recall.se),
            cell(r.f1.mean, r.f1.se),
        );
    }
    out
}

pub fn efficiency_table(order: &[TrialReport], eff: &EfficiencyTable) -> String {
    let width = order.iter().map(|r| r.method.len()).max().unwrap_or(6).max(6);
    let get = |m: &BTreeMap<String, f64>, k: &str| m.get(k).copied().unwrap_or(f64::NAN);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>9}  {:>9}  {:>9}", "efficiency", "precision", "recall", "f1");
    for r in order {
        let k = r.method.as_str();
        let _ = writeln!(
            out,
            "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}",
            k,
            get(&eff.precision, k),
            get(&eff.recall, k),
            get(&eff.f1, k),
        );
    }
    out
}
