use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Localization errors of one run or suite.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    /// Per-fix errors in metres, in fix order.
    pub errors: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    /// Exact empirical CDF: `(error, fraction <= error)` at every distinct
    /// error value.
    pub cdf: Vec<(f64, f64)>,
    pub max: f64,
    pub fix_rate: f64,
    /// Δt windows the fixes were drawn from.
    pub windows: usize,
    /// No fix was produced.
    pub flagged: bool,
}

pub fn empirical_cdf(errors: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, e) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *e => last.1 = frac,
            _ => out.push((*e, frac)),
        }
    }
    out
}

impl ErrorReport {
    pub fn from_errors(errors: Vec<f64>, windows: usize) -> Self {
        let n = errors.len();
        let fix_rate = if windows == 0 { 0.0 } else { n as f64 / windows as f64 };
        if n == 0 {
            return Self {
                errors,
                mean: f64::NAN,
                std: f64::NAN,
                cdf: Vec::new(),
                max: f64::NAN,
                fix_rate,
                windows,
                flagged: true,
            };
        }
        let mean = errors.iter().sum::<f64>() / n as f64;
        let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n as f64;
        let max = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            cdf: empirical_cdf(&errors),
            errors,
            mean,
            std: var.sqrt(),
            max,
            fix_rate,
            windows,
            flagged: false,
        }
    }

    /// Pool several reports, keeping fix order within each.
    pub fn merge<'a>(reports: impl IntoIterator<Item = &'a ErrorReport>) -> Self {
        let mut errors = Vec::new();
        let mut windows = 0;
        for r in reports {
            errors.extend_from_slice(&r.errors);
            windows += r.windows;
        }
        Self::from_errors(errors, windows)
    }

    /// `mean ± std` with one decimal, as in result tables.
    pub fn summary(&self) -> String {
        if self.flagged {
            "no fix".into()
        } else {
            format!("{:.1} ± {:.1}", self.mean, self.std)
        }
    }

    /// Fraction of fixes with error at or below `x`.
    pub fn cdf_at(&self, x: f64) -> f64 {
        let idx = self.cdf.partition_point(|(e, _)| *e <= x);
        if idx == 0 {
            0.0
        } else {
            self.cdf[idx - 1].1
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub mean: f64,
    pub std: f64,
    pub max: f64,
    pub fixes: usize,
    pub fix_rate: f64,
    pub summary: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub cdfs: BTreeMap<String, Vec<(f64, f64)>>,
}

/// Side-by-side table and CDF dataset of labelled reports.
pub fn compare(reports: &BTreeMap<String, ErrorReport>) -> Result<Comparison> {
    if reports.len() < 2 {
        return Err(Error::Config(format!("compare needs at least 2 reports, got {}", reports.len())));
    }
    let rows = reports
        .iter()
        .map(|(label, r)| ComparisonRow {
            label: label.clone(),
            mean: r.mean,
            std: r.std,
            max: r.max,
            fixes: r.errors.len(),
            fix_rate: r.fix_rate,
            summary: r.summary(),
        })
        .collect();
    let cdfs = reports.iter().map(|(l, r)| (l.clone(), r.cdf.clone())).collect();
    Ok(Comparison { rows, cdfs })
}

impl Comparison {
    pub fn table_csv(&self) -> String {
        let mut out = String::from("label,mean_m,std_m,max_m,fixes,fix_rate,summary\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{},{:.6},{}",
                r.label, r.mean, r.std, r.max, r.fixes, r.fix_rate, r.summary
            );
        }
        out
    }

    /// Two-column text table: label and `mean ± std` in metres.
    pub fn table_text(&self) -> String {
        let w = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(5);
        let mut out = format!("{:<w$}  error (m)\n", "case");
        for r in &self.rows {
            let _ = writeln!(out, "{:<w$}  {}", r.label, r.summary);
        }
        out
    }

    /// Wide CSV: an `error` and a `cdf` column per label, padded with empty
    /// cells.
    pub fn cdf_csv(&self) -> String {
        let labels: Vec<&String> = self.cdfs.keys().collect();
        let mut out = labels
            .iter()
            .map(|l| format!("{l}_error_m,{l}_cdf"))
            .collect::<Vec<_>>()
            .join(",");
        out.push('\n');
        let rows = self.cdfs.values().map(Vec::len).max().unwrap_or(0);
        for i in 0..rows {
            let cells: Vec<String> = labels
                .iter()
                .map(|l| match self.cdfs[*l].get(i) {
                    Some((e, f)) => format!("{e:.6},{f:.6}"),
                    None => ",".into(),
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_means() {
        let mut m = BTreeMap::new();
        m.insert("a".to_string(), ErrorReport::from_errors(vec![1.0, 2.0, 3.0], 3));
        m.insert("b".to_string(), ErrorReport::from_errors(vec![2.0, 3.0, 4.0], 4));
        let c = compare(&m).unwrap();
        assert_eq!(c.rows[0].mean, 2.0);
        assert_eq!(c.rows[1].mean, 3.0);
        assert_eq!(c.rows[1].fix_rate, 0.75);
        assert!(c.table_text().contains("2.0 ± 0.8"));
    }

    #[test]
    fn cdf_is_exact() {
        let r = ErrorReport::from_errors(vec![2.0, 1.0, 2.0, 4.0], 4);
        assert_eq!(r.cdf, vec![(1.0, 0.25), (2.0, 0.75), (4.0, 1.0)]);
        assert_eq!(r.cdf_at(3.0), 0.75);
        assert_eq!(r.cdf_at(0.5), 0.0);
    }

    #[test]
    fn zero_fixes_are_flagged() {
        let r = ErrorReport::from_errors(vec![], 10);
        assert!(r.flagged);
        assert_eq!(r.fix_rate, 0.0);
        assert!(r.cdf.is_empty());
    }

    #[test]
    fn single_report_is_not_a_comparison() {
        let mut m = BTreeMap::new();
        m.insert("a".to_string(), ErrorReport::from_errors(vec![1.0], 1));
        assert!(compare(&m).is_err());
    }
}
