use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lifecycle::{LifecycleTrace, State};

/// How self-transitions are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfLoopMode {
    /// Every pause between commit days that is not a break adds one
    /// `active_coding -> active_coding` count.
    #[default]
    Pauses,
    /// Only state changes are counted.
    Boundaries,
}

impl SelfLoopMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SelfLoopMode::Pauses => "pauses",
            SelfLoopMode::Boundaries => "boundaries",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TransitionCounts(pub [[u64; 4]; 4]);

impl TransitionCounts {
    pub fn of_trace(trace: &LifecycleTrace, mode: SelfLoopMode) -> Self {
        let mut c = Self::default();
        for t in &trace.transitions {
            c.0[t.from.index()][t.to.index()] += 1;
        }
        if mode == SelfLoopMode::Pauses {
            let a = State::ActiveCoding.index();
            c.0[a][a] += trace.non_break_pauses as u64;
        }
        c
    }

    pub fn merge(mut self, other: Self) -> Self {
        for r in 0..4 {
            for col in 0..4 {
                self.0[r][col] += other.0[r][col];
            }
        }
        self
    }

    pub fn get(&self, from: State, to: State) -> u64 {
        self.0[from.index()][to.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub scope: String,
    pub counts: TransitionCounts,
    pub probs: [[f64; 4]; 4],
    /// Rows with no outgoing transitions; their probabilities are all zero.
    pub empty_rows: [bool; 4],
}

impl TransitionMatrix {
    pub fn from_counts(scope: &str, counts: TransitionCounts) -> Self {
        let mut probs = [[0.0; 4]; 4];
        let mut empty_rows = [false; 4];
        for r in 0..4 {
            let total: u64 = counts.0[r].iter().sum();
            if total == 0 {
                empty_rows[r] = true;
                continue;
            }
            for (p, n) in probs[r].iter_mut().zip(counts.0[r]) {
                *p = n as f64 / total as f64;
            }
        }
        Self {
            scope: scope.to_string(),
            counts,
            probs,
            empty_rows,
        }
    }

    pub fn prob(&self, from: State, to: State) -> f64 {
        self.probs[from.index()][to.index()]
    }

    /// `(from, to, probability)` for every non-zero cell, row-major.
    pub fn edges(&self) -> Vec<(State, State, f64)> {
        let mut out = Vec::new();
        for from in State::ALL {
            for to in State::ALL {
                let p = self.prob(from, to);
                if p > 0.0 {
                    out.push((from, to, p));
                }
            }
        }
        out
    }
}

/// Pools transition counts over the traces in `scope`: an organization id,
/// or `"aggregate"` for every trace.
pub fn transition_matrix(
    traces: &[LifecycleTrace],
    scope: &str,
    mode: SelfLoopMode,
) -> TransitionMatrix {
    let counts = traces
        .par_iter()
        .filter(|t| scope == "aggregate" || t.org_id == scope)
        .map(|t| TransitionCounts::of_trace(t, mode))
        .reduce(TransitionCounts::default, TransitionCounts::merge);
    TransitionMatrix::from_counts(scope, counts)
}
