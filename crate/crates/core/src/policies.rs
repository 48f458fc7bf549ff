//! Decision rules: who a firm hires (one-stage) or interviews and then hires
//! (two-stage), given the round's candidates and the group posteriors.
//!
//! Every argmax breaks ties toward the lowest candidate index.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::PolicyError;
use crate::estimator::{GroupPosterior, RadiusParams};
use crate::model::{Candidate, StageMode};
use crate::scalar::{norm, Scalar};

/// Which decision rule is in force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    /// Laissez-faire: greedy on estimated skill.
    Lf,
    Ucb,
    /// Hybrid index rule; `None` takes `a` from the market config.
    Hybrid(Option<f64>),
    /// Two-stage laissez-faire.
    Lf2s,
    /// Two-stage with at least one finalist per group.
    Rooney,
    /// Rooney Rule for rounds `1..=switch_round`, two-stage laissez-faire after.
    RooneyThenLf(usize),
    /// Laissez-faire after a proportional uniform warm start of this many rounds.
    WarmStartLf(usize),
}

impl PolicyKind {
    pub fn stage_mode(&self) -> StageMode {
        match self {
            Self::Lf2s | Self::Rooney | Self::RooneyThenLf(_) => StageMode::TwoStage,
            _ => StageMode::OneStage,
        }
    }

    /// Short name used in CSV `policy` columns.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Lf => f.write_str("lf"),
            Self::Ucb => f.write_str("ucb"),
            Self::Hybrid(None) => f.write_str("hybrid"),
            Self::Hybrid(Some(a)) => write!(f, "hybrid:{a}"),
            Self::Lf2s => f.write_str("lf2s"),
            Self::Rooney => f.write_str("rooney"),
            Self::RooneyThenLf(n) => write!(f, "rooney_then_lf:{n}"),
            Self::WarmStartLf(n) => write!(f, "warm_start_lf:{n}"),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PolicyError::UnknownPolicy(s.to_string());
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let uint = |a: Option<&str>| -> Result<usize, PolicyError> {
            a.ok_or_else(bad)?.parse().map_err(|_| bad())
        };
        Ok(match (name, arg) {
            ("lf", None) => Self::Lf,
            ("ucb", None) => Self::Ucb,
            ("hybrid", None) => Self::Hybrid(None),
            ("hybrid", Some(a)) => {
                let a: f64 = a.parse().map_err(|_| bad())?;
                if !(a >= 0.0) || !a.is_finite() {
                    return Err(bad());
                }
                Self::Hybrid(Some(a))
            }
            ("lf2s", None) => Self::Lf2s,
            ("rooney", None) => Self::Rooney,
            ("rooney_then_lf", _) => {
                let n = uint(arg)?;
                if n == 0 {
                    return Err(bad());
                }
                Self::RooneyThenLf(n)
            }
            ("warm_start_lf", _) => Self::WarmStartLf(uint(arg)?),
            _ => return Err(bad()),
        })
    }
}

impl Serialize for PolicyKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PolicyKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which rule produced a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleTag {
    Lf,
    Ucb,
    Hybrid,
    Lf2s,
    Rooney,
}

/// Per-candidate quantities at decision time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score<T> {
    pub q_hat: T,
    /// `q̃ − q̂`: confidence radius times `||x||_{V̄⁻¹}`.
    pub ucb_width: T,
    /// Hybrid threshold `a σ_x ||θ̂_g||`.
    pub threshold: T,
    /// The index the firing rule maximized.
    pub index: T,
}

impl<T: Scalar> Score<T> {
    pub fn ucb(&self) -> T {
        self.q_hat + self.ucb_width
    }

    /// Whether the hybrid index takes its optimistic branch.
    pub fn hybrid_optimistic(&self) -> bool {
        self.ucb_width > self.threshold
    }

    pub fn hybrid(&self) -> T {
        if self.hybrid_optimistic() {
            self.ucb()
        } else {
            self.q_hat
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision<T> {
    pub chosen: usize,
    pub per_candidate: Vec<Score<T>>,
    /// Interview shortlist in ascending candidate order (two-stage only).
    pub finalists: Option<Vec<usize>>,
    pub rule: RuleTag,
}

/// Shared inputs of the decision rules.
#[derive(Debug, Clone)]
pub struct PolicyContext<T> {
    pub radius: RadiusParams<T>,
    pub a_hybrid: T,
    /// Characteristic scale of each group.
    pub sigma_x: Vec<T>,
    pub k_finalists: usize,
}

impl<T: Scalar> PolicyContext<T> {
    pub fn from_config(c: &crate::model::MarketConfig, kind: &PolicyKind) -> Self {
        let a = match kind {
            PolicyKind::Hybrid(Some(a)) => *a,
            _ => c.a_hybrid,
        };
        Self {
            radius: RadiusParams::from_config(c),
            a_hybrid: T::of(a),
            sigma_x: c.groups.iter().map(|g| T::of(g.sigma_x)).collect(),
            k_finalists: c.k_finalists,
        }
    }
}

/// Index of the first maximum.
pub fn argmax<T: Scalar>(values: impl IntoIterator<Item = T>) -> usize {
    let mut best = 0;
    let mut best_val: Option<T> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best_val {
            Some(b) if !(v > b) => {}
            _ => {
                best = i;
                best_val = Some(v);
            }
        }
    }
    best
}

/// Estimated skill, confidence width and hybrid threshold of every candidate.
/// Each group's radius is evaluated once.
pub fn score_candidates<T: Scalar>(
    candidates: &[Candidate<T>],
    posteriors: &[GroupPosterior<T>],
    ctx: &PolicyContext<T>,
) -> Vec<Score<T>> {
    let radii: Vec<T> = posteriors.iter().map(|p| p.conf_radius(&ctx.radius)).collect();
    let thresholds: Vec<T> = posteriors
        .iter()
        .zip(&ctx.sigma_x)
        .map(|(p, &s)| ctx.a_hybrid * s * norm(p.theta_hat()))
        .collect();
    candidates
        .iter()
        .map(|c| {
            let p = &posteriors[c.group];
            let q_hat = p.predict(&c.x);
            Score { q_hat, ucb_width: p.width(&c.x, radii[c.group]), threshold: thresholds[c.group], index: q_hat }
        })
        .collect()
}

fn decide<T: Scalar>(mut scores: Vec<Score<T>>, rule: RuleTag, index: impl Fn(&Score<T>) -> T) -> Decision<T> {
    for s in &mut scores {
        s.index = index(s);
    }
    let chosen = argmax(scores.iter().map(|s| s.index));
    Decision { chosen, per_candidate: scores, finalists: None, rule }
}

pub fn choose_lf_scored<T: Scalar>(scores: Vec<Score<T>>) -> Decision<T> {
    decide(scores, RuleTag::Lf, |s| s.q_hat)
}

pub fn choose_ucb_scored<T: Scalar>(scores: Vec<Score<T>>) -> Decision<T> {
    decide(scores, RuleTag::Ucb, Score::ucb)
}

pub fn choose_hybrid_scored<T: Scalar>(scores: Vec<Score<T>>) -> Decision<T> {
    decide(scores, RuleTag::Hybrid, Score::hybrid)
}

/// Hire the greatest estimated skill.
pub fn choose_lf<T: Scalar>(candidates: &[Candidate<T>], posteriors: &[GroupPosterior<T>]) -> Decision<T> {
    let scores = candidates
        .iter()
        .map(|c| {
            let q_hat = posteriors[c.group].predict(&c.x);
            Score { q_hat, ucb_width: T::zero(), threshold: T::zero(), index: q_hat }
        })
        .collect();
    choose_lf_scored(scores)
}

/// Hire the greatest UCB index.
pub fn choose_ucb<T: Scalar>(
    candidates: &[Candidate<T>],
    posteriors: &[GroupPosterior<T>],
    ctx: &PolicyContext<T>,
) -> Decision<T> {
    choose_ucb_scored(score_candidates(candidates, posteriors, ctx))
}

/// Hire the greatest hybrid index.
pub fn choose_hybrid<T: Scalar>(
    candidates: &[Candidate<T>],
    posteriors: &[GroupPosterior<T>],
    ctx: &PolicyContext<T>,
) -> Decision<T> {
    choose_hybrid_scored(score_candidates(candidates, posteriors, ctx))
}

/// Hybrid index of one candidate and whether its optimistic branch fired:
/// the UCB index when the width strictly exceeds `a σ_x ||θ̂_g||`, else the
/// estimated skill.
pub fn hybrid_index<T: Scalar>(
    candidate: &Candidate<T>,
    posterior: &GroupPosterior<T>,
    radius: &RadiusParams<T>,
    a: T,
    sigma_x: T,
) -> (T, bool) {
    let q_hat = posterior.predict(&candidate.x);
    let width = posterior.width(&candidate.x, posterior.conf_radius(radius));
    let s = Score { q_hat, ucb_width: width, threshold: a * sigma_x * norm(posterior.theta_hat()), index: q_hat };
    (s.hybrid(), s.hybrid_optimistic())
}

/// How the interview shortlist is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinalistMode {
    /// Top `k` by value.
    Greedy,
    /// Best `k` subject to at least one finalist from every group.
    Rooney,
}

fn ranked(values: &[impl Scalar], members: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut idx: Vec<usize> = members.collect();
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    idx
}

/// Picks `k` finalists maximizing the total of `values`.
///
/// Rooney mode enumerates every per-group quota vector with all quotas at
/// least one; within a group the best `quota` members are taken. Output is
/// in ascending candidate order.
pub fn select_finalists_by<T: Scalar>(
    values: &[T],
    groups: &[usize],
    n_groups: usize,
    mode: FinalistMode,
    k: usize,
) -> Result<Vec<usize>, PolicyError> {
    let available = values.len();
    if k > available {
        return Err(PolicyError::TooManyFinalists { k, available });
    }
    let mut out = match mode {
        FinalistMode::Greedy => {
            let mut top = ranked(values, 0..available);
            top.truncate(k);
            top
        }
        FinalistMode::Rooney => {
            if k < n_groups {
                return Err(PolicyError::TooFewFinalists { k, groups: n_groups });
            }
            let members: Vec<Vec<usize>> = (0..n_groups)
                .map(|g| ranked(values, (0..available).filter(|&i| groups[i] == g)))
                .collect();
            if let Some(g) = members.iter().position(Vec::is_empty) {
                return Err(PolicyError::MissingGroup(g));
            }
            let prefix: Vec<Vec<T>> = members
                .iter()
                .map(|m| {
                    let mut acc = T::zero();
                    std::iter::once(T::zero())
                        .chain(m.iter().map(|&i| {
                            acc += values[i];
                            acc
                        }))
                        .collect()
                })
                .collect();
            let mut quota = vec![1usize; n_groups];
            let mut best: Option<(T, Vec<usize>)> = None;
            enumerate_quotas(&members, &prefix, 0, k - n_groups, &mut quota, &mut best);
            let (_, quota) = best.expect("a feasible quota exists");
            members.iter().zip(&quota).flat_map(|(m, &q)| m[..q].iter().copied()).collect()
        }
    };
    out.sort_unstable();
    Ok(out)
}

fn enumerate_quotas<T: Scalar>(
    members: &[Vec<usize>],
    prefix: &[Vec<T>],
    g: usize,
    spare: usize,
    quota: &mut Vec<usize>,
    best: &mut Option<(T, Vec<usize>)>,
) {
    if g + 1 == members.len() {
        let q = 1 + spare;
        if q > members[g].len() {
            return;
        }
        quota[g] = q;
        let total: T = quota.iter().zip(prefix).map(|(&q, p)| p[q]).sum();
        if best.as_ref().map_or(true, |(b, _)| total > *b) {
            *best = Some((total, quota.clone()));
        }
        return;
    }
    for extra in 0..=spare {
        if 1 + extra > members[g].len() {
            break;
        }
        quota[g] = 1 + extra;
        enumerate_quotas(members, prefix, g + 1, spare - extra, quota, best);
    }
}

/// Shortlist by estimated skill.
pub fn select_finalists<T: Scalar>(
    candidates: &[Candidate<T>],
    posteriors: &[GroupPosterior<T>],
    mode: FinalistMode,
    k: usize,
) -> Result<Vec<usize>, PolicyError> {
    let q_hat: Vec<T> = candidates.iter().map(|c| posteriors[c.group].predict(&c.x)).collect();
    let groups: Vec<usize> = candidates.iter().map(|c| c.group).collect();
    select_finalists_by(&q_hat, &groups, posteriors.len(), mode, k)
}

/// Hire the finalist with the greatest `q̂ + η`.
pub fn hire_from_finalists<T: Scalar>(finalists: &[usize], q_hat: &[T], candidates: &[Candidate<T>]) -> usize {
    assert!(!finalists.is_empty(), "no finalists");
    finalists[argmax(finalists.iter().map(|&i| q_hat[i] + candidates[i].eta))]
}

fn two_stage<T: Scalar>(
    scores: Vec<Score<T>>,
    candidates: &[Candidate<T>],
    n_groups: usize,
    mode: FinalistMode,
    k: usize,
) -> Result<Decision<T>, PolicyError> {
    let q_hat: Vec<T> = scores.iter().map(|s| s.q_hat).collect();
    let groups: Vec<usize> = candidates.iter().map(|c| c.group).collect();
    let finalists = select_finalists_by(&q_hat, &groups, n_groups, mode, k)?;
    let chosen = hire_from_finalists(&finalists, &q_hat, candidates);
    let rule = match mode {
        FinalistMode::Greedy => RuleTag::Lf2s,
        FinalistMode::Rooney => RuleTag::Rooney,
    };
    Ok(Decision { chosen, per_candidate: scores, finalists: Some(finalists), rule })
}

/// Applies `kind` in round `round` (1-based, counting initial sampling rounds).
pub fn policy_step<T: Scalar>(
    kind: &PolicyKind,
    round: usize,
    candidates: &[Candidate<T>],
    posteriors: &[GroupPosterior<T>],
    ctx: &PolicyContext<T>,
) -> Result<Decision<T>, PolicyError> {
    let scores = score_candidates(candidates, posteriors, ctx);
    policy_step_scored(kind, round, scores, candidates, posteriors.len(), ctx.k_finalists)
}

pub fn policy_step_scored<T: Scalar>(
    kind: &PolicyKind,
    round: usize,
    scores: Vec<Score<T>>,
    candidates: &[Candidate<T>],
    n_groups: usize,
    k_finalists: usize,
) -> Result<Decision<T>, PolicyError> {
    Ok(match kind {
        PolicyKind::Lf | PolicyKind::WarmStartLf(_) => choose_lf_scored(scores),
        PolicyKind::Ucb => choose_ucb_scored(scores),
        PolicyKind::Hybrid(_) => choose_hybrid_scored(scores),
        PolicyKind::Lf2s => two_stage(scores, candidates, n_groups, FinalistMode::Greedy, k_finalists)?,
        PolicyKind::Rooney => two_stage(scores, candidates, n_groups, FinalistMode::Rooney, k_finalists)?,
        PolicyKind::RooneyThenLf(switch) => {
            let mode = if round <= *switch { FinalistMode::Rooney } else { FinalistMode::Greedy };
            two_stage(scores, candidates, n_groups, mode, k_finalists)?
        }
    })
}
