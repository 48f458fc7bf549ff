//! Subsidy rules that make a myopic firm follow a target decision rule.
//!
//! A firm hiring candidate `i` receives `q̂_i + s_i`; a rule implements a
//! decision when the decision's choice maximizes that payoff.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::PolicyError;
use crate::policies::{PolicyKind, Score};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubsidyRule {
    /// No payments (laissez-faire and the two-stage rules).
    None,
    /// `q̃_i − q̂_i` for every candidate.
    UcbIndex,
    /// `q̃_i − q̂_i` while the width exceeds the hybrid threshold, else 0.
    HybridIndex,
    /// Only the target is paid, exactly the gap to the best estimate.
    CostSaving,
}

impl SubsidyRule {
    /// Whether this rule implements `policy`.
    pub fn pairs_with(&self, policy: &PolicyKind) -> bool {
        use PolicyKind as P;
        match self {
            Self::None => matches!(policy, P::Lf | P::WarmStartLf(_) | P::Lf2s | P::Rooney | P::RooneyThenLf(_)),
            Self::UcbIndex => matches!(policy, P::Ucb),
            Self::HybridIndex => matches!(policy, P::Hybrid(_)),
            Self::CostSaving => matches!(policy, P::Ucb | P::Hybrid(_) | P::Lf | P::WarmStartLf(_)),
        }
    }

    /// The rule a policy is normally run with.
    pub fn default_for(policy: &PolicyKind) -> Self {
        match policy {
            PolicyKind::Ucb => Self::UcbIndex,
            PolicyKind::Hybrid(_) => Self::HybridIndex,
            _ => Self::None,
        }
    }
}

impl fmt::Display for SubsidyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::UcbIndex => "ucb_index",
            Self::HybridIndex => "hybrid_index",
            Self::CostSaving => "cost_saving",
        })
    }
}

impl FromStr for SubsidyRule {
    type Err = PolicyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "none" => Self::None,
            "ucb_index" => Self::UcbIndex,
            "hybrid_index" => Self::HybridIndex,
            "cost_saving" => Self::CostSaving,
            _ => return Err(PolicyError::UnknownSubsidy(s.to_string())),
        })
    }
}

impl Serialize for SubsidyRule {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SubsidyRule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsidyOutcome<T> {
    pub per_candidate: Vec<T>,
    /// Payment to the hired candidate.
    pub paid: T,
    pub rule: SubsidyRule,
}

impl<T: Scalar> SubsidyOutcome<T> {
    fn new(per_candidate: Vec<T>, chosen: usize, rule: SubsidyRule) -> Self {
        let paid = per_candidate.get(chosen).copied().unwrap_or_else(T::zero);
        Self { per_candidate, paid, rule }
    }
}

/// `q̃ − q̂`, evaluated as a difference of the two indices.
fn pivot<T: Scalar>(q_hat: T, q_tilde: T) -> T {
    (q_tilde - q_hat).max(T::zero())
}

pub fn ucb_index_subsidy<T: Scalar>(q_hat: &[T], q_tilde: &[T], chosen: usize) -> SubsidyOutcome<T> {
    debug_assert_eq!(q_hat.len(), q_tilde.len());
    let pay = q_hat.iter().zip(q_tilde).map(|(&h, &t)| pivot(h, t)).collect();
    SubsidyOutcome::new(pay, chosen, SubsidyRule::UcbIndex)
}

pub fn hybrid_index_subsidy<T: Scalar>(q_hat: &[T], widths: &[T], thresholds: &[T], chosen: usize) -> SubsidyOutcome<T> {
    let pay = q_hat
        .iter()
        .zip(widths)
        .zip(thresholds)
        .map(|((&h, &w), &thr)| if w > thr { pivot(h, h + w) } else { T::zero() })
        .collect();
    SubsidyOutcome::new(pay, chosen, SubsidyRule::HybridIndex)
}

pub fn cost_saving_subsidy<T: Scalar>(target: usize, q_hat: &[T]) -> SubsidyOutcome<T> {
    let best = q_hat.iter().copied().fold(T::neg_infinity(), T::max);
    let mut pay = vec![T::zero(); q_hat.len()];
    pay[target] = (best - q_hat[target]).max(T::zero());
    SubsidyOutcome::new(pay, target, SubsidyRule::CostSaving)
}

pub fn no_subsidy<T: Scalar>(n: usize, chosen: usize) -> SubsidyOutcome<T> {
    SubsidyOutcome::new(vec![T::zero(); n], chosen, SubsidyRule::None)
}

/// Payments of `rule` for a one-stage decision over `scores`.
pub fn apply_rule<T: Scalar>(rule: SubsidyRule, scores: &[Score<T>], chosen: usize) -> SubsidyOutcome<T> {
    let q_hat: Vec<T> = scores.iter().map(|s| s.q_hat).collect();
    match rule {
        SubsidyRule::None => no_subsidy(scores.len(), chosen),
        SubsidyRule::UcbIndex => {
            let q_tilde: Vec<T> = scores.iter().map(Score::ucb).collect();
            ucb_index_subsidy(&q_hat, &q_tilde, chosen)
        }
        SubsidyRule::HybridIndex => {
            let widths: Vec<T> = scores.iter().map(|s| s.ucb_width).collect();
            let thresholds: Vec<T> = scores.iter().map(|s| s.threshold).collect();
            hybrid_index_subsidy(&q_hat, &widths, &thresholds, chosen)
        }
        SubsidyRule::CostSaving => cost_saving_subsidy(chosen, &q_hat),
    }
}

/// Whether `chosen` maximizes the firm's payoff `q̂ + s`.
///
/// Payoffs within a few ulps of the maximum count as ties, and ties resolve
/// toward the chosen (subsidized) candidate.
pub fn verify_implements<T: Scalar>(chosen: usize, payments: &[T], q_hat: &[T]) -> bool {
    if payments.len() != q_hat.len() || chosen >= q_hat.len() {
        return false;
    }
    if payments.iter().any(|&s| s < T::zero()) {
        return false;
    }
    let payoff: Vec<T> = q_hat.iter().zip(payments).map(|(&q, &s)| q + s).collect();
    let scale = payoff.iter().fold(T::one(), |m, v| m.max(v.abs()));
    let tol = T::epsilon() * T::of(8.0) * scale;
    payoff.iter().all(|&p| payoff[chosen] >= p - tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ucb_index_payments() {
        let out = ucb_index_subsidy(&[0.3, 0.1], &[0.3, 0.1], 0);
        assert_eq!(out.per_candidate, vec![0.0, 0.0]);
        let out = ucb_index_subsidy(&[0.0, 0.0], &[1.0, 3.0], 1);
        assert_eq!(out.per_candidate, vec![1.0, 3.0]);
        assert_eq!(out.paid, 3.0);
        assert!(verify_implements(1, &out.per_candidate, &[0.0, 0.0]));
    }

    #[test]
    fn hybrid_index_payments() {
        let out = hybrid_index_subsidy(&[1.0, 0.5], &[0.2, 0.3], &[1.0, 1.0], 0);
        assert_eq!(out.per_candidate, vec![0.0, 0.0]);
        let out = hybrid_index_subsidy(&[1.0, 0.5], &[0.2, 1.5], &[1.0, 1.0], 1);
        assert_eq!(out.per_candidate, vec![0.0, 1.5]);
        assert_eq!(out.paid, 1.5);
    }

    #[test]
    fn cost_saving_payments() {
        let out = cost_saving_subsidy(1, &[1.0, 0.4]);
        assert_eq!(out.per_candidate, vec![0.0, 0.6]);
        assert!(verify_implements(1, &out.per_candidate, &[1.0, 0.4]));
        let out = cost_saving_subsidy(0, &[1.0, 0.4]);
        assert_eq!(out.per_candidate, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_subsidy_off_argmax_fails() {
        assert!(!verify_implements(1, &[0.0, 0.0], &[1.0, 0.4]));
        assert!(verify_implements(0, &[0.0, 0.0], &[1.0, 0.4]));
        assert!(!verify_implements(0, &[-0.1, 0.0], &[1.0, 0.4]));
    }

    #[test]
    fn pairing_table() {
        assert!(SubsidyRule::UcbIndex.pairs_with(&PolicyKind::Ucb));
        assert!(!SubsidyRule::UcbIndex.pairs_with(&PolicyKind::Hybrid(None)));
        assert!(SubsidyRule::CostSaving.pairs_with(&PolicyKind::Hybrid(None)));
        assert!(!SubsidyRule::CostSaving.pairs_with(&PolicyKind::Rooney));
        assert!(!SubsidyRule::None.pairs_with(&PolicyKind::Ucb));
        for r in ["none", "ucb_index", "hybrid_index", "cost_saving"] {
            assert_eq!(r.parse::<SubsidyRule>().unwrap().to_string(), r);
        }
    }
}
