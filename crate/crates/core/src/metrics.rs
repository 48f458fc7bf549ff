//! Regret, subsidy accounting, perpetual-underestimation detection and
//! cross-run aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{PolicyError, SimError};
use crate::model::{Candidate, StageMode};
use crate::policies::{argmax, select_finalists_by, FinalistMode};
use crate::scalar::Scalar;

/// `max_i q_i − q_chosen`.
pub fn regret_step<T: Scalar>(candidates: &[Candidate<T>], chosen: usize) -> T {
    let best = candidates.iter().map(|c| c.q_true).fold(T::neg_infinity(), T::max);
    best - candidates[chosen].q_true
}

fn two_stage_regret<T: Scalar>(candidates: &[Candidate<T>], chosen: usize, benchmark: &[usize]) -> T {
    let best = benchmark
        .iter()
        .map(|&i| candidates[i].q_true + candidates[i].eta)
        .fold(T::neg_infinity(), T::max);
    best - (candidates[chosen].q_true + candidates[chosen].eta)
}

fn true_finalists<T: Scalar>(
    candidates: &[Candidate<T>],
    n_groups: usize,
    mode: FinalistMode,
    k: usize,
) -> Result<Vec<usize>, PolicyError> {
    let q: Vec<T> = candidates.iter().map(|c| c.q_true).collect();
    let groups: Vec<usize> = candidates.iter().map(|c| c.group).collect();
    select_finalists_by(&q, &groups, n_groups, mode, k)
}

/// Unconstrained two-stage regret increment against the top-`k` true-skill
/// shortlist. May be negative.
pub fn u2s_step<T: Scalar>(candidates: &[Candidate<T>], chosen: usize, k: usize) -> Result<T, PolicyError> {
    let bench = true_finalists(candidates, 1, FinalistMode::Greedy, k)?;
    Ok(two_stage_regret(candidates, chosen, &bench))
}

/// Constrained two-stage regret increment against the best true-skill
/// shortlist with a finalist from every group. May be negative.
pub fn c2s_step<T: Scalar>(
    candidates: &[Candidate<T>],
    chosen: usize,
    k: usize,
    n_groups: usize,
) -> Result<T, PolicyError> {
    let bench = true_finalists(candidates, n_groups, FinalistMode::Rooney, k)?;
    Ok(two_stage_regret(candidates, chosen, &bench))
}

/// The first-best hire of the unconstrained benchmark.
pub fn first_best_two_stage<T: Scalar>(candidates: &[Candidate<T>], k: usize) -> Result<usize, PolicyError> {
    let bench = true_finalists(candidates, 1, FinalistMode::Greedy, k)?;
    Ok(bench[argmax(bench.iter().map(|&i| candidates[i].q_true + candidates[i].eta))])
}

/// One replication, main phase only (rounds `N⁽⁰⁾+1..=N`), stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace<T> {
    pub run_index: u64,
    pub initial_rounds: usize,
    pub stage: StageMode,
    pub regret_inc: Vec<T>,
    /// Empty in the one-stage model.
    pub u2s_inc: Vec<T>,
    /// Empty in the one-stage model.
    pub c2s_inc: Vec<T>,
    /// What the active subsidy rule paid the hire.
    pub subsidy_paid: Vec<T>,
    /// Pivot payment `index − q̂` of the hire under the policy's own index.
    pub index_payment: Vec<T>,
    /// Cost-saving payment `max q̂ − q̂` for the same hire.
    pub cost_saving_payment: Vec<T>,
    pub chosen: Vec<u32>,
    pub chosen_group: Vec<u32>,
    /// `[group][round]`.
    pub min_eigenvalue: Vec<Vec<T>>,
    /// `[group][round]`: confidence width at the group's mean characteristics.
    pub width_at_mean: Vec<Vec<T>>,
    /// `[group][round]`: cumulative main-phase hires through the round.
    pub hire_counts: Vec<Vec<u32>>,
    pub initial_hires: Vec<u32>,
    /// Per group: the confidence bound held at every update.
    pub coverage_held: Vec<bool>,
    /// Rounds whose payments failed to implement the decision.
    pub implement_violations: u32,
    /// Price of the uniform warm start under cost-saving payments (warm-start policies only).
    pub warmup_cost: T,
}

impl<T: Scalar> RunTrace<T> {
    pub fn len(&self) -> usize {
        self.regret_inc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regret_inc.is_empty()
    }

    pub fn n_groups(&self) -> usize {
        self.hire_counts.len()
    }

    /// Global round number of main-phase position `i`.
    pub fn round_at(&self, i: usize) -> usize {
        self.initial_rounds + 1 + i
    }

    pub fn series(&self, kind: SeriesKind) -> &[T] {
        match kind {
            SeriesKind::Regret => &self.regret_inc,
            SeriesKind::U2sRegret => &self.u2s_inc,
            SeriesKind::C2sRegret => &self.c2s_inc,
            SeriesKind::Subsidy => &self.subsidy_paid,
        }
    }

    pub fn main_phase_hires(&self, group: usize) -> u32 {
        self.hire_counts[group].last().copied().unwrap_or(0)
    }
}

pub fn cumulative<T: Scalar>(inc: &[T]) -> Vec<T> {
    let mut acc = T::zero();
    inc.iter()
        .map(|&v| {
            acc += v;
            acc
        })
        .collect()
}

/// Group never hired after the initial sampling phase.
pub fn detect_pu<T: Scalar>(trace: &RunTrace<T>, group: usize) -> bool {
    trace.chosen_group.iter().all(|&g| g as usize != group)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Regret,
    U2sRegret,
    C2sRegret,
    Subsidy,
}

impl SeriesKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Regret => "regret",
            Self::U2sRegret => "u2s_regret",
            Self::C2sRegret => "c2s_regret",
            Self::Subsidy => "subsidy",
        }
    }
}

/// Pointwise summary of a cumulative series across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub mean: Vec<f64>,
    pub p5: Vec<f64>,
    pub p95: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// `2 · sd / √R` of the final cumulative value.
    pub final_ci_halfwidth: f64,
}

impl Band {
    pub fn final_mean(&self) -> f64 {
        *self.mean.last().unwrap_or(&0.0)
    }

    /// Mean accrued over main-phase positions `from..to` (half-open).
    pub fn accrued(&self, from: usize, to: usize) -> f64 {
        let at = |i: usize| if i == 0 { 0.0 } else { self.mean[i - 1] };
        at(to) - at(from)
    }
}

/// An event frequency with its two-sigma binomial interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub count: usize,
    pub runs: usize,
    pub freq: f64,
    pub ci_halfwidth: f64,
}

impl Frequency {
    pub fn new(count: usize, runs: usize) -> Self {
        let freq = count as f64 / runs as f64;
        Self { count, runs, freq, ci_halfwidth: binomial_halfwidth(freq, runs) }
    }

    pub fn lower(&self) -> f64 {
        self.freq - self.ci_halfwidth
    }

    pub fn upper(&self) -> f64 {
        self.freq + self.ci_halfwidth
    }
}

/// `2 √(p(1−p)/R)`.
pub fn binomial_halfwidth(p: f64, runs: usize) -> f64 {
    2.0 * (p * (1.0 - p) / runs as f64).sqrt()
}

/// Mean and two-sigma half-width of a per-run scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub ci_halfwidth: f64,
}

impl MeanCi {
    pub fn of(values: &[f64]) -> Self {
        let r = values.len() as f64;
        let mean = values.iter().sum::<f64>() / r;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0)
        } else {
            0.0
        };
        Self { mean, ci_halfwidth: 2.0 * (var / r).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub runs: usize,
    /// Global round index of each main-phase position.
    pub rounds: Vec<usize>,
    pub series: BTreeMap<SeriesKind, Band>,
    /// Perpetual underestimation of each group.
    pub pu: Vec<Frequency>,
    /// Runs in which the confidence bound held for all rounds and groups.
    pub coverage: Frequency,
    pub implement_violations: u64,
    /// Rounds where the cost-saving payment exceeded the index payment.
    pub dominance_violations: u64,
    pub warmup_cost: MeanCi,
    /// Warm-start cost plus main-phase subsidy, per run.
    pub total_cost: MeanCi,
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn band(columns: &[Vec<f64>]) -> Band {
    let runs = columns.len();
    let len = columns[0].len();
    let mut mean = Vec::with_capacity(len);
    let mut p5 = Vec::with_capacity(len);
    let mut p95 = Vec::with_capacity(len);
    let mut min = Vec::with_capacity(len);
    let mut max = Vec::with_capacity(len);
    let mut buf = vec![0.0; runs];
    for i in 0..len {
        for (b, col) in buf.iter_mut().zip(columns) {
            *b = col[i];
        }
        mean.push(buf.iter().sum::<f64>() / runs as f64);
        buf.sort_by(|a, b| a.partial_cmp(b).expect("finite series"));
        p5.push(quantile(&buf, 0.05));
        p95.push(quantile(&buf, 0.95));
        min.push(buf[0]);
        max.push(buf[runs - 1]);
    }
    let finals: Vec<f64> = columns.iter().map(|c| c.last().copied().unwrap_or(0.0)).collect();
    Band { mean, p5, p95, min, max, final_ci_halfwidth: MeanCi::of(&finals).ci_halfwidth }
}

pub fn aggregate<T: Scalar>(traces: &[RunTrace<T>]) -> Result<AggregateStats, SimError> {
    let first = traces.first().ok_or(SimError::Empty)?;
    let len = first.len();
    for t in traces {
        if t.len() != len || t.n_groups() != first.n_groups() {
            return Err(SimError::LengthMismatch { expected: len, found: t.len() });
        }
    }
    let runs = traces.len();
    let mut series = BTreeMap::new();
    for kind in [SeriesKind::Regret, SeriesKind::U2sRegret, SeriesKind::C2sRegret, SeriesKind::Subsidy] {
        if first.series(kind).len() != len {
            continue;
        }
        let cols: Vec<Vec<f64>> = traces
            .iter()
            .map(|t| cumulative(t.series(kind)).into_iter().map(Scalar::to_f64_lossy).collect())
            .collect();
        series.insert(kind, band(&cols));
    }
    let pu = (0..first.n_groups())
        .map(|g| Frequency::new(traces.iter().filter(|t| detect_pu(t, g)).count(), runs))
        .collect();
    let covered = traces.iter().filter(|t| t.coverage_held.iter().all(|&h| h)).count();
    let dominance_violations = traces
        .iter()
        .map(|t| {
            t.cost_saving_payment
                .iter()
                .zip(&t.index_payment)
                .filter(|(c, i)| c > i)
                .count() as u64
        })
        .sum();
    let warm: Vec<f64> = traces.iter().map(|t| t.warmup_cost.to_f64_lossy()).collect();
    let total: Vec<f64> = traces
        .iter()
        .map(|t| (t.warmup_cost + t.subsidy_paid.iter().copied().sum::<T>()).to_f64_lossy())
        .collect();
    Ok(AggregateStats {
        runs,
        rounds: (0..len).map(|i| first.round_at(i)).collect(),
        series,
        pu,
        coverage: Frequency::new(covered, runs),
        implement_violations: traces.iter().map(|t| u64::from(t.implement_violations)).sum(),
        dominance_violations,
        warmup_cost: MeanCi::of(&warm),
        total_cost: MeanCi::of(&total),
    })
}
