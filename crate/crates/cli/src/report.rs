//! Machine-readable run reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Settings a run was made with, echoed into its report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub step: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub grid: Option<[usize; 2]>,
    pub tol_analytic: f64,
    pub tol_fd: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub periodic: Option<[bool; 2]>,
}

/// One named check. Values that are not finite are stored as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub values: BTreeMap<String, Option<f64>>,
    pub tolerance: Option<f64>,
    pub pass: bool,
    pub reference: String,
}

impl Check {
    pub fn new(name: &str, reference: &str) -> Self {
        Self { name: name.into(), values: BTreeMap::new(), tolerance: None, pass: true, reference: reference.into() }
    }

    pub fn value(mut self, key: &str, x: f64) -> Self {
        self.values.insert(key.into(), x.is_finite().then_some(x));
        self
    }

    /// Passes when `x ≤ tol`; `x` is recorded under `key`.
    pub fn at_most(self, key: &str, x: f64, tol: f64) -> Self {
        self.value(key, x).judged(tol, x <= tol)
    }

    /// Passes when `x ≥ bound`.
    pub fn at_least(self, key: &str, x: f64, bound: f64) -> Self {
        self.value(key, x).judged(bound, x >= bound)
    }

    /// Passes when every listed value lies within `tol` of `target`.
    pub fn near(self, target: f64, tol: f64, xs: &[(&str, f64)]) -> Self {
        let ok = xs.iter().all(|(_, x)| (x - target).abs() <= tol);
        xs.iter().fold(self.value("target", target), |c, (k, x)| c.value(k, *x)).judged(tol, ok)
    }

    pub fn judged(mut self, tol: f64, pass: bool) -> Self {
        self.tolerance = Some(tol);
        self.pass = pass;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub config: Config,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub pass: bool,
}

impl Report {
    pub fn new(command: &str, config: Config) -> Self {
        Self { command: command.into(), config, checks: Vec::new(), notes: Vec::new(), pass: true }
    }

    pub fn push(&mut self, c: Check) {
        self.pass &= c.pass;
        self.checks.push(c);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One line per check, then notes and the overall verdict.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "nks {}", self.command);
        let width = self.checks.iter().map(|c| c.name.chars().count()).max().unwrap_or(0);
        for c in &self.checks {
            let verdict = match (c.pass, c.tolerance) {
                (_, None) => "info",
                (true, _) => "PASS",
                (false, _) => "FAIL",
            };
            let vals: Vec<String> = c
                .values
                .iter()
                .map(|(k, v)| match v {
                    Some(x) => format!("{k}={x:.6e}"),
                    None => format!("{k}=nan"),
                })
                .collect();
            let tol = c.tolerance.map(|t| format!("  (tol {t:.1e})")).unwrap_or_default();
            let _ = writeln!(out, "  {verdict}  {:width$}  {}{tol}", c.name, vals.join(" "));
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        let _ = writeln!(out, "{}", if self.pass { "all checks passed" } else { "some checks FAILED" });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_pass_tracks_checks_and_json_roundtrips() {
        let mut r = Report::new("verify", Config { step: 1e-4, tol_analytic: 1e-12, tol_fd: 1e-3, ..Default::default() });
        r.push(Check::new("a", "ref a").at_most("max", 1e-13, 1e-12));
        assert!(r.pass);
        r.push(Check::new("b", "ref b").near(2.0 / 3.0, 1e-4, &[("min", 0.666), ("max", 0.66667)]));
        assert!(!r.pass);
        r.push(Check::new("c", "ref c").value("x", f64::NAN));
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.summary().contains("FAIL"));
    }
}
