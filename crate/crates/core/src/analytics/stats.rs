//! Paired nonparametric comparison of non-coding and inactive break lengths.
//!
//! Per organization: Wilcoxon signed-rank test on per-developer median
//! lengths (W⁺ reported), Holm step-down adjustment across organizations,
//! and Cliff's δ between the two samples.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::frequency::{completed_lengths, median};
use crate::lifecycle::{LifecycleTrace, State};

/// Largest number of non-zero differences tested with the exact null distribution.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WilcoxonResult {
    /// Pairs with non-zero difference.
    pub n: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_two_sided: f64,
    /// `P(W⁺ ≤ observed)` under the null.
    pub p_less: f64,
    /// `P(W⁺ ≥ observed)` under the null.
    pub p_greater: f64,
    pub method: PValueMethod,
}

/// Average ranks (1-based) of `values`, ties sharing the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Wilcoxon signed-rank test of `x - y`. Zero differences are dropped;
/// returns `None` when nothing is left.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Option<WilcoxonResult> {
    assert_eq!(x.len(), y.len(), "paired samples differ in length");
    let diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return None;
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;

    let (p_less, p_greater, p_two_sided, method) = if n <= EXACT_MAX_N {
        let (le, ge) = exact_tails(&ranks, w_plus);
        (le, ge, (2.0 * le.min(ge)).min(1.0), PValueMethod::Exact)
    } else {
        let mean = total / 2.0;
        let mut tie_term = 0.0;
        let mut sorted = abs.clone();
        sorted.sort_by(f64::total_cmp);
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_term += t * t * t - t;
            i = j + 1;
        }
        let nf = n as f64;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        let sd = var.sqrt();
        let norm = Normal::new(0.0, 1.0).expect("standard normal");
        let le = norm.cdf((w_plus - mean + 0.5) / sd);
        let ge = 1.0 - norm.cdf((w_plus - mean - 0.5) / sd);
        let z = ((w_plus - mean).abs() - 0.5).max(0.0) / sd;
        let two = (2.0 * (1.0 - norm.cdf(z))).min(1.0);
        (le, ge, two, PValueMethod::NormalApprox)
    };

    Some(WilcoxonResult {
        n,
        w_plus,
        w_minus,
        p_two_sided,
        p_less,
        p_greater,
        method,
    })
}

/// Exact `P(W⁺ ≤ w)` and `P(W⁺ ≥ w)` over all sign assignments of the
/// given ranks. Ranks are integers or halves, so sums are counted on
/// doubled ranks.
fn exact_tails(ranks: &[f64], w_plus: f64) -> (f64, f64) {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut ways = vec![0.0f64; max + 1];
    ways[0] = 1.0;
    for &r in &doubled {
        for s in (r..=max).rev() {
            ways[s] += ways[s - r];
        }
    }
    let target = (w_plus * 2.0).round() as usize;
    let all = 2f64.powi(ranks.len() as i32);
    let le: f64 = ways[..=target].iter().sum();
    let ge: f64 = ways[target..].iter().sum();
    (le / all, ge / all)
}

/// `(#(x > y) − #(x < y)) / (|x|·|y|)` over all cross pairs.
pub fn cliffs_delta(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.is_empty() || y.is_empty() {
        return None;
    }
    let mut ys = y.to_vec();
    ys.sort_by(f64::total_cmp);
    let mut dominance: i64 = 0;
    for &a in x {
        let below = ys.partition_point(|&b| b < a) as i64;
        let not_above = ys.partition_point(|&b| b <= a) as i64;
        let above = ys.len() as i64 - not_above;
        dominance += below - above;
    }
    Some(dominance as f64 / (x.len() * y.len()) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectMagnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl EffectMagnitude {
    pub fn of(delta: f64) -> Self {
        let d = delta.abs();
        if d < 0.147 {
            EffectMagnitude::Negligible
        } else if d < 0.33 {
            EffectMagnitude::Small
        } else if d < 0.474 {
            EffectMagnitude::Medium
        } else {
            EffectMagnitude::Large
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EffectMagnitude::Negligible => "negligible",
            EffectMagnitude::Small => "small",
            EffectMagnitude::Medium => "medium",
            EffectMagnitude::Large => "large",
        }
    }
}

/// Holm step-down adjusted p-values, returned in input order.
pub fn holm_adjust(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (k, &i) in order.iter().enumerate() {
        let adj = ((m - k) as f64 * p[i]).min(1.0);
        running = running.max(adj);
        out[i] = running;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedTestResult {
    pub org: String,
    /// Developers contributing a pair.
    pub n_pairs: usize,
    /// `None` marks a test that could not be run (no non-zero difference).
    pub wilcoxon: Option<WilcoxonResult>,
    pub p_adjusted: Option<f64>,
    pub cliffs_delta: Option<f64>,
    pub magnitude: Option<EffectMagnitude>,
}

impl PairedTestResult {
    pub fn applicable(&self) -> bool {
        self.wilcoxon.is_some()
    }

    pub fn w_statistic(&self) -> Option<f64> {
        self.wilcoxon.as_ref().map(|w| w.w_plus)
    }

    pub fn p_raw(&self) -> Option<f64> {
        self.wilcoxon.as_ref().map(|w| w.p_two_sided)
    }
}

/// Runs the paired test per organization. Input pairs are
/// `(non-coding median, inactive median)` per developer.
pub fn wilcoxon_holm_cliffs(groups: &[(String, Vec<(f64, f64)>)]) -> Vec<PairedTestResult> {
    let mut results: Vec<PairedTestResult> = groups
        .iter()
        .map(|(org, pairs)| {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let wilcoxon = wilcoxon_signed_rank(&x, &y);
            let delta = wilcoxon.as_ref().and_then(|_| cliffs_delta(&x, &y));
            PairedTestResult {
                org: org.clone(),
                n_pairs: pairs.len(),
                wilcoxon,
                p_adjusted: None,
                cliffs_delta: delta,
                magnitude: delta.map(EffectMagnitude::of),
            }
        })
        .collect();

    let applicable: Vec<usize> = (0..results.len())
        .filter(|&i| results[i].applicable())
        .collect();
    let raw: Vec<f64> = applicable
        .iter()
        .map(|&i| results[i].p_raw().unwrap())
        .collect();
    for (i, adj) in applicable.into_iter().zip(holm_adjust(&raw)) {
        results[i].p_adjusted = Some(adj);
    }
    results
}

/// Per organization, `(median non-coding length, median inactive length)`
/// of every developer with at least one completed segment of each kind.
pub fn paired_medians(traces: &[LifecycleTrace]) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut by_org: BTreeMap<&str, Vec<(&str, f64, f64)>> = BTreeMap::new();
    for t in traces {
        let mut nc: Vec<f64> = completed_lengths(t, State::ActiveNonCoding).collect();
        let mut ia: Vec<f64> = completed_lengths(t, State::Inactive).collect();
        let entry = by_org.entry(t.org_id.as_str()).or_default();
        if !nc.is_empty() && !ia.is_empty() {
            entry.push((t.developer_key.as_str(), median(&mut nc), median(&mut ia)));
        }
    }
    by_org
        .into_iter()
        .map(|(org, mut v)| {
            v.sort_by(|a, b| a.0.cmp(b.0));
            (
                org.to_string(),
                v.into_iter().map(|(_, a, b)| (a, b)).collect(),
            )
        })
        .collect()
}
