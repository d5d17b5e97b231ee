//! Odds of ever going `gone` for high- versus low-contribution core developers.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest allowed relative gap between the contingency odds ratio and
/// the exponentiated logistic-regression coefficient.
pub const LOGISTIC_AGREEMENT_TOLERANCE: f64 = 1e-6;

const Z_975: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContributionRecord {
    pub project: String,
    pub developer: String,
    /// Fraction of the project's commits authored by the developer.
    pub share: f64,
    pub ever_gone: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ContingencyTable {
    pub low_gone: u64,
    pub low_not_gone: u64,
    pub high_gone: u64,
    pub high_not_gone: u64,
}

impl ContingencyTable {
    pub fn n(&self) -> u64 {
        self.low_gone + self.low_not_gone + self.high_gone + self.high_not_gone
    }

    fn has_zero_cell(&self) -> bool {
        [
            self.low_gone,
            self.low_not_gone,
            self.high_gone,
            self.high_not_gone,
        ]
        .contains(&0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OddsRatioResult {
    pub n: u64,
    pub table: ContingencyTable,
    /// Odds of gone for the high bin over the low bin.
    pub or_value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// 0.5 was added to every cell because one of them was empty.
    pub corrected: bool,
    /// Odds ratio recovered by the logistic regression fit, when it converges.
    pub logistic_or: Option<f64>,
}

impl OddsRatioResult {
    pub fn significant(&self) -> bool {
        !(self.ci_low <= 1.0 && 1.0 <= self.ci_high)
    }
}

/// Closed-form odds ratio with a 95% Wald interval on the log scale.
/// Tables with an empty cell get the Haldane-Anscombe correction.
pub fn odds_ratio(table: ContingencyTable) -> OddsRatioResult {
    let corrected = table.has_zero_cell();
    let adj = if corrected { 0.5 } else { 0.0 };
    let a = table.high_gone as f64 + adj;
    let b = table.high_not_gone as f64 + adj;
    let c = table.low_gone as f64 + adj;
    let d = table.low_not_gone as f64 + adj;
    let or_value = (a * d) / (b * c);
    let se = (1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d).sqrt();
    let log_or = or_value.ln();
    OddsRatioResult {
        n: table.n(),
        table,
        or_value,
        ci_low: (log_or - Z_975 * se).exp(),
        ci_high: (log_or + Z_975 * se).exp(),
        corrected,
        logistic_or: None,
    }
}

/// Splits each project's developers into two equally sized bins by
/// contribution share (lower half low, upper half high; an odd middle
/// developer goes high) and tallies the outcome.
pub fn bin_by_project(records: &[ContributionRecord]) -> Vec<(bool, bool)> {
    let mut by_project: BTreeMap<&str, Vec<&ContributionRecord>> = BTreeMap::new();
    for r in records {
        by_project.entry(r.project.as_str()).or_default().push(r);
    }
    let mut out = Vec::with_capacity(records.len());
    for (_, mut devs) in by_project {
        devs.sort_by(|a, b| {
            a.share
                .total_cmp(&b.share)
                .then_with(|| a.developer.cmp(&b.developer))
        });
        let n_low = devs.len() / 2;
        for (i, r) in devs.iter().enumerate() {
            out.push((i >= n_low, r.ever_gone));
        }
    }
    out
}

/// Maximum-likelihood fit of `logit P(y) = b0 + b1·x` by Newton-Raphson.
/// Returns `(b0, b1)`, or `None` when the fit does not converge
/// (separation, constant predictor).
pub fn fit_logistic_binary(x: &[bool], y: &[bool]) -> Option<(f64, f64)> {
    assert_eq!(x.len(), y.len());
    let mut beta = [0.0f64, 0.0f64];
    for _ in 0..100 {
        let mut g = [0.0f64; 2];
        let mut h = [[0.0f64; 2]; 2];
        for (&xi, &yi) in x.iter().zip(y) {
            let xv = if xi { 1.0 } else { 0.0 };
            let eta = beta[0] + beta[1] * xv;
            let p = 1.0 / (1.0 + (-eta).exp());
            let r = if yi { 1.0 } else { 0.0 } - p;
            let w = p * (1.0 - p);
            g[0] += r;
            g[1] += r * xv;
            h[0][0] += w;
            h[0][1] += w * xv;
            h[1][1] += w * xv * xv;
        }
        h[1][0] = h[0][1];
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if !det.is_finite() || det.abs() < 1e-300 {
            return None;
        }
        let step = [
            (h[1][1] * g[0] - h[0][1] * g[1]) / det,
            (h[0][0] * g[1] - h[1][0] * g[0]) / det,
        ];
        beta[0] += step[0];
        beta[1] += step[1];
        if !beta.iter().all(|b| b.is_finite()) || beta.iter().any(|b| b.abs() > 50.0) {
            return None;
        }
        if step[0].abs().max(step[1].abs()) < 1e-12 {
            return Some((beta[0], beta[1]));
        }
    }
    None
}

/// Odds ratio of ever going gone, high versus low contributors.
///
/// Both the closed-form contingency estimate and a logistic regression fit
/// are computed; when no correction was needed they must agree within
/// [`LOGISTIC_AGREEMENT_TOLERANCE`], otherwise this is a consistency error.
pub fn gone_odds_ratio(records: &[ContributionRecord]) -> Result<OddsRatioResult> {
    let binned = bin_by_project(records);
    let mut table = ContingencyTable::default();
    for &(high, gone) in &binned {
        match (high, gone) {
            (true, true) => table.high_gone += 1,
            (true, false) => table.high_not_gone += 1,
            (false, true) => table.low_gone += 1,
            (false, false) => table.low_not_gone += 1,
        }
    }
    if table.high_gone + table.high_not_gone == 0 || table.low_gone + table.low_not_gone == 0 {
        return Err(Error::Config(
            "odds ratio needs at least one developer in each contribution bin".into(),
        ));
    }
    let mut result = odds_ratio(table);
    if !result.corrected {
        let x: Vec<bool> = binned.iter().map(|b| b.0).collect();
        let y: Vec<bool> = binned.iter().map(|b| b.1).collect();
        let (_, b1) = fit_logistic_binary(&x, &y)
            .ok_or_else(|| Error::Consistency("logistic regression did not converge".into()))?;
        let lor = b1.exp();
        if ((lor - result.or_value) / result.or_value).abs() > LOGISTIC_AGREEMENT_TOLERANCE {
            return Err(Error::Consistency(format!(
                "logistic odds ratio {lor} disagrees with contingency odds ratio {}",
                result.or_value
            )));
        }
        result.logistic_or = Some(lor);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(lg: u64, ln: u64, hg: u64, hn: u64) -> ContingencyTable {
        ContingencyTable {
            low_gone: lg,
            low_not_gone: ln,
            high_gone: hg,
            high_not_gone: hn,
        }
    }

    #[test]
    fn closed_form_example() {
        let r = odds_ratio(table(100, 100, 50, 150));
        assert!((r.or_value - 1.0 / 3.0).abs() < 1e-15);
        assert!(r.ci_low < r.or_value && r.or_value < r.ci_high);
        assert!(r.significant());
        assert!(!r.corrected);
        assert_eq!(r.n, 400);
    }

    #[test]
    fn identical_bins() {
        let r = odds_ratio(table(30, 70, 30, 70));
        assert_eq!(r.or_value, 1.0);
        assert!(!r.significant());
    }

    #[test]
    fn zero_cell_corrected() {
        let r = odds_ratio(table(10, 10, 0, 20));
        assert!(r.corrected);
        let want = (0.5 * 10.5) / (20.5 * 10.5);
        assert!((r.or_value - want).abs() < 1e-15);
        assert!(r.or_value < 1.0);
    }

    fn records(project: &str, spec: &[(f64, bool)]) -> Vec<ContributionRecord> {
        spec.iter()
            .enumerate()
            .map(|(i, (share, gone))| ContributionRecord {
                project: project.into(),
                developer: format!("d{i}"),
                share: *share,
                ever_gone: *gone,
            })
            .collect()
    }

    #[test]
    fn binning_equal_halves() {
        let r = records("p", &[(0.4, false), (0.1, true), (0.3, false), (0.2, true)]);
        let bins = bin_by_project(&r);
        let high: Vec<bool> = bins.iter().filter(|b| b.0).map(|b| b.1).collect();
        assert_eq!(high, vec![false, false]);
        assert_eq!(bins.iter().filter(|b| !b.0).count(), 2);
        let odd = bin_by_project(&records("p", &[(0.5, false), (0.3, false), (0.2, true)]));
        assert_eq!(odd.iter().filter(|b| b.0).count(), 2);
    }

    #[test]
    fn logistic_matches_contingency() {
        let mut r = records("p", &[]);
        let mut i = 0;
        let mut add = |share: f64, gone: bool, n: usize| {
            for _ in 0..n {
                r.push(ContributionRecord {
                    project: "p".into(),
                    developer: format!("d{i:04}"),
                    share,
                    ever_gone: gone,
                });
                i += 1;
            }
        };
        add(0.01, true, 30);
        add(0.01, false, 20);
        add(0.5, true, 10);
        add(0.5, false, 40);
        let res = gone_odds_ratio(&r).unwrap();
        assert!((res.or_value - (10.0 * 20.0) / (40.0 * 30.0)).abs() < 1e-12);
        let lor = res.logistic_or.unwrap();
        assert!(((lor - res.or_value) / res.or_value).abs() < 1e-9);
    }

    #[test]
    fn separation_is_reported_by_fit() {
        assert!(
            fit_logistic_binary(&[true, true, false, false], &[true, true, false, false]).is_none()
        );
    }

    #[test]
    fn gone_free_high_bin_is_corrected() {
        let r = records(
            "p",
            &[(0.1, true), (0.2, false), (0.3, false), (0.4, false)],
        );
        let res = gone_odds_ratio(&r).unwrap();
        assert!(res.corrected);
        assert!(res.or_value < 1.0);
        assert!(res.logistic_or.is_none());
    }

    #[test]
    fn empty_bin_is_an_error() {
        assert!(gone_odds_ratio(&records("p", &[(0.3, true)])).is_err());
    }
}
