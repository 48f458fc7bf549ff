//! The synthetic hiring market: configuration, candidate draws and realized
//! skills.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::estimator::RadiusVariant;
use crate::rng::{group_key, Purpose, StreamKey};
use crate::scalar::{dot, Scalar};

/// One worker population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub label: String,
    /// Candidates of this group arriving every round.
    pub count: usize,
    pub mu_x: Vec<f64>,
    pub sigma_x: f64,
    pub theta: Vec<f64>,
    /// Rounds of the initial sampling phase reserved for this group.
    pub n0: usize,
}

impl GroupSpec {
    pub fn theta_norm(&self) -> f64 {
        self.theta.iter().map(|t| t * t).sum::<f64>().sqrt()
    }
}

/// Full market parameterization. Defaults reproduce the reference setup:
/// d = 1, mu_x = 3, sigma_x = 2, sigma_eps = 2, lambda = 1, N = 1000,
/// (K_1, K_2) = (10, 2), initial samples (10, 2), delta = 0.1, a = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketConfig {
    pub d: usize,
    pub groups: Vec<GroupSpec>,
    pub sigma_eps: f64,
    /// Interview signal scale; 0 in the one-stage model.
    pub sigma_eta: f64,
    /// Horizon N, counting the initial sampling rounds.
    pub horizon: usize,
    pub lambda_reg: f64,
    pub delta: f64,
    /// Known bound S on every `||theta_g||`.
    pub s_bound: f64,
    pub a_hybrid: f64,
    pub k_finalists: usize,
    pub seed: u64,
    pub radius_variant: RadiusVariant,
}

impl Default for MarketConfig {
    fn default() -> Self {
        let groups = default_groups(1);
        let s_bound = max_theta_norm(&groups);
        Self {
            d: 1,
            groups,
            sigma_eps: 2.0,
            sigma_eta: 0.0,
            horizon: 1000,
            lambda_reg: 1.0,
            delta: 0.1,
            s_bound,
            a_hybrid: 1.0,
            k_finalists: 2,
            seed: 1,
            radius_variant: RadiusVariant::DetBased,
        }
    }
}

/// Majority/minority pair with (K, n0) = (10, 10) and (2, 2). For d > 1 the
/// characteristic mean is 3 in every coordinate and theta is the unit
/// diagonal direction.
pub fn default_groups(d: usize) -> Vec<GroupSpec> {
    let theta = vec![1.0 / (d as f64).sqrt(); d];
    let make = |label: &str, count| GroupSpec {
        label: label.to_string(),
        count,
        mu_x: vec![3.0; d],
        sigma_x: 2.0,
        theta: theta.clone(),
        n0: count,
    };
    vec![make("majority", 10), make("minority", 2)]
}

pub fn max_theta_norm(groups: &[GroupSpec]) -> f64 {
    groups.iter().map(GroupSpec::theta_norm).fold(0.0, f64::max)
}

impl MarketConfig {
    pub fn total_candidates(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }

    pub fn initial_rounds(&self) -> usize {
        self.groups.iter().map(|g| g.n0).sum()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.d == 0 {
            return Err(ConfigError::invalid("d", "dimension must be at least 1"));
        }
        if self.groups.is_empty() {
            return Err(ConfigError::invalid("groups", "at least one group is required"));
        }
        for (i, g) in self.groups.iter().enumerate() {
            let at = |f: &str| format!("groups[{i}].{f}");
            if self.groups[..i].iter().any(|h| h.label == g.label) {
                return Err(ConfigError::invalid(at("label"), format!("duplicate label `{}`", g.label)));
            }
            if g.count == 0 {
                return Err(ConfigError::invalid(at("count"), "every group must send at least one candidate per round"));
            }
            if g.mu_x.len() != self.d {
                return Err(ConfigError::invalid(at("mu_x"), format!("length {} does not match d = {}", g.mu_x.len(), self.d)));
            }
            if g.theta.len() != self.d {
                return Err(ConfigError::invalid(at("theta"), format!("length {} does not match d = {}", g.theta.len(), self.d)));
            }
            if !(g.sigma_x >= 0.0) || !g.sigma_x.is_finite() {
                return Err(ConfigError::invalid(at("sigma_x"), "sigma_x must be finite and nonnegative"));
            }
            if g.mu_x.iter().chain(&g.theta).any(|v| !v.is_finite()) {
                return Err(ConfigError::invalid(at("mu_x"), "mu_x and theta must be finite"));
            }
            if g.theta_norm() > self.s_bound {
                return Err(ConfigError::invalid(at("theta"), format!("||theta|| = {} exceeds s_bound = {}", g.theta_norm(), self.s_bound)));
            }
        }
        if !(self.sigma_eps >= 0.0) || !self.sigma_eps.is_finite() {
            return Err(ConfigError::invalid("sigma_eps", "sigma_eps must be finite and nonnegative"));
        }
        if !(self.sigma_eta >= 0.0) || !self.sigma_eta.is_finite() {
            return Err(ConfigError::invalid("sigma_eta", "sigma_eta must be finite and nonnegative"));
        }
        if !(self.lambda_reg > 0.0) || !self.lambda_reg.is_finite() {
            return Err(ConfigError::invalid("lambda_reg", "lambda_reg must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ConfigError::invalid("delta", "delta must lie in (0,1)"));
        }
        if !(self.a_hybrid >= 0.0) || !self.a_hybrid.is_finite() {
            return Err(ConfigError::invalid("a_hybrid", "a_hybrid must be nonnegative"));
        }
        if !(self.s_bound >= 0.0) || !self.s_bound.is_finite() {
            return Err(ConfigError::invalid("s_bound", "s_bound must be finite and nonnegative"));
        }
        if self.horizon <= self.initial_rounds() {
            return Err(ConfigError::invalid(
                "horizon",
                format!("horizon {} must exceed the {} initial sampling rounds", self.horizon, self.initial_rounds()),
            ));
        }
        if self.k_finalists == 0 || self.k_finalists > self.total_candidates() {
            return Err(ConfigError::invalid(
                "k_finalists",
                format!("k_finalists must lie in 1..={}", self.total_candidates()),
            ));
        }
        Ok(())
    }

    /// Split `total` initial samples across groups in proportion to their
    /// per-round counts (largest remainder).
    pub fn with_proportional_initial_samples(mut self, total: usize) -> Self {
        let k: usize = self.total_candidates();
        let quotas: Vec<f64> = self.groups.iter().map(|g| total as f64 * g.count as f64 / k as f64).collect();
        let mut seats: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let mut left = total - seats.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..quotas.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = quotas[a] - quotas[a].floor();
            let rb = quotas[b] - quotas[b].floor();
            rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
        });
        for &g in order.iter().cycle() {
            if left == 0 {
                break;
            }
            seats[g] += 1;
            left -= 1;
        }
        for (g, s) in self.groups.iter_mut().zip(seats) {
            g.n0 = s;
        }
        self
    }
}

/// Whether interview signals enter the realized skill.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageMode {
    OneStage,
    TwoStage,
}

/// One arriving worker.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<T> {
    /// Index into `MarketConfig::groups`.
    pub group: usize,
    pub x: Vec<T>,
    /// True predicted skill `x' theta_g`.
    pub q_true: T,
    pub eps: T,
    pub eta: T,
}

pub fn realized_skill<T: Scalar>(c: &Candidate<T>, mode: StageMode) -> T {
    match mode {
        StageMode::OneStage => c.q_true + c.eps,
        StageMode::TwoStage => c.q_true + c.eta + c.eps,
    }
}

/// Config converted to the working scalar, ready for drawing candidates.
#[derive(Debug, Clone)]
pub struct Market<T> {
    seed: u64,
    sigma_eps: f64,
    sigma_eta: f64,
    groups: Vec<PreparedGroup<T>>,
}

#[derive(Debug, Clone)]
struct PreparedGroup<T> {
    key: u64,
    count: usize,
    mu_x: Vec<f64>,
    sigma_x: f64,
    theta: Vec<T>,
}

impl<T: Scalar> Market<T> {
    pub fn new(config: &MarketConfig) -> Self {
        Self {
            seed: config.seed,
            sigma_eps: config.sigma_eps,
            sigma_eta: config.sigma_eta,
            groups: config
                .groups
                .iter()
                .map(|g| PreparedGroup {
                    key: group_key(&g.label),
                    count: g.count,
                    mu_x: g.mu_x.clone(),
                    sigma_x: g.sigma_x,
                    theta: g.theta.iter().map(|&t| T::of(t)).collect(),
                })
                .collect(),
        }
    }

    pub fn theta(&self, group: usize) -> &[T] {
        &self.groups[group].theta
    }

    /// All candidates of a round: groups in declaration order, then slot.
    pub fn draw_round(&self, run: u64, round: u64) -> Vec<Candidate<T>> {
        self.draw_pool(run, round, Purpose::Market)
    }

    pub(crate) fn draw_pool(&self, run: u64, round: u64, purpose: Purpose) -> Vec<Candidate<T>> {
        let total = self.groups.iter().map(|g| g.count).sum();
        let mut out = Vec::with_capacity(total);
        for gi in 0..self.groups.len() {
            let mut rng = self.stream(run, round, gi, purpose);
            for _ in 0..self.groups[gi].count {
                out.push(self.draw_slot(gi, &mut rng));
            }
        }
        out
    }

    /// The `ordinal`-th (1-based) forced hire of `group` during initial
    /// sampling. Keyed by the group's own count rather than the round, so the
    /// data a group receives does not depend on how the schedule interleaves.
    pub fn draw_initial_hire(&self, run: u64, ordinal: u64, group: usize) -> Candidate<T> {
        let mut rng = self.stream(run, ordinal, group, Purpose::InitialHire);
        self.draw_slot(group, &mut rng)
    }

    fn stream(&self, run: u64, round: u64, group: usize, purpose: Purpose) -> rand_chacha::ChaCha8Rng {
        StreamKey { seed: self.seed, run, round, group: self.groups[group].key, purpose }.rng()
    }

    fn draw_slot<R: rand::Rng>(&self, gi: usize, rng: &mut R) -> Candidate<T> {
        let g = &self.groups[gi];
        let x: Vec<T> = g
            .mu_x
            .iter()
            .map(|&mu| {
                let z: f64 = StandardNormal.sample(rng);
                T::of(mu + g.sigma_x * z)
            })
            .collect();
        let z_eps: f64 = StandardNormal.sample(rng);
        let z_eta: f64 = StandardNormal.sample(rng);
        let q_true = dot(&x, &g.theta);
        Candidate {
            group: gi,
            x,
            q_true,
            eps: T::of(self.sigma_eps * z_eps),
            eta: T::of(self.sigma_eta * z_eta),
        }
    }
}

/// Convenience wrapper over [`Market::draw_round`].
pub fn draw_round<T: Scalar>(config: &MarketConfig, run: u64, round: u64) -> Vec<Candidate<T>> {
    Market::new(config).draw_round(run, round)
}

/// Order in which the initial sampling phase visits groups.
///
/// Each step hands the next round to the group with the highest quotient
/// `n0_g / (assigned_g + 1)` among groups that still have rounds left, ties
/// going to the lower group index. With n0 = (4, 2) this yields
/// `[0, 0, 1, 0, 0, 1]`.
pub fn initial_sampling_plan(config: &MarketConfig) -> Vec<usize> {
    let n0: Vec<usize> = config.groups.iter().map(|g| g.n0).collect();
    let total: usize = n0.iter().sum();
    let mut assigned = vec![0usize; n0.len()];
    let mut plan = Vec::with_capacity(total);
    for _ in 0..total {
        let mut best: Option<usize> = None;
        for g in 0..n0.len() {
            if assigned[g] >= n0[g] {
                continue;
            }
            best = match best {
                None => Some(g),
                // n0[g]/(a[g]+1) > n0[b]/(a[b]+1), compared exactly in integers
                Some(b) if n0[g] * (assigned[b] + 1) > n0[b] * (assigned[g] + 1) => Some(g),
                keep => keep,
            };
        }
        let g = best.expect("a group with remaining quota exists");
        assigned[g] += 1;
        plan.push(g);
    }
    plan
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_n0(n0: &[usize]) -> MarketConfig {
        let mut c = MarketConfig::default();
        for (g, &n) in c.groups.iter_mut().zip(n0) {
            g.n0 = n;
        }
        c
    }

    #[test]
    fn default_config_is_valid() {
        MarketConfig::default().validate().unwrap();
        assert_eq!(MarketConfig::default().s_bound, 1.0);
    }

    #[test]
    fn degenerate_variance_pins_characteristics() {
        let mut c = MarketConfig::default();
        for g in &mut c.groups {
            g.sigma_x = 0.0;
        }
        let round: Vec<Candidate<f64>> = draw_round(&c, 0, 5);
        for cand in &round {
            assert_eq!(cand.x, c.groups[cand.group].mu_x);
        }
    }

    #[test]
    fn draws_are_replayable() {
        let c = MarketConfig::default();
        let a: Vec<Candidate<f64>> = draw_round(&c, 3, 17);
        let b: Vec<Candidate<f64>> = draw_round(&c, 3, 17);
        assert_eq!(a, b);
        let other: Vec<Candidate<f64>> = draw_round(&c, 3, 18);
        assert_ne!(a, other);
    }

    #[test]
    fn round_layout_follows_declaration_order() {
        let c = MarketConfig::default();
        let round: Vec<Candidate<f64>> = draw_round(&c, 0, 1);
        assert_eq!(round.len(), 12);
        assert!(round[..10].iter().all(|c| c.group == 0));
        assert!(round[10..].iter().all(|c| c.group == 1));
        for cand in &round {
            assert_eq!(cand.q_true, cand.x[0] * 1.0);
        }
    }

    #[test]
    fn realized_skill_modes() {
        let c = Candidate { group: 0, x: vec![1.0], q_true: 1.0, eps: 0.0, eta: 0.0 };
        assert_eq!(realized_skill(&c, StageMode::OneStage), 1.0);
        assert_eq!(realized_skill(&c, StageMode::TwoStage), 1.0);
        let c = Candidate { eps: 0.5, eta: 2.0, ..c };
        assert_eq!(realized_skill(&c, StageMode::OneStage), 1.5);
        assert_eq!(realized_skill(&c, StageMode::TwoStage), 3.5);
    }

    #[test]
    fn sampling_plan_counts_and_interleave() {
        let plan = initial_sampling_plan(&with_n0(&[10, 2]));
        assert_eq!(plan.iter().filter(|&&g| g == 0).count(), 10);
        assert_eq!(plan.iter().filter(|&&g| g == 1).count(), 2);
        assert!(initial_sampling_plan(&with_n0(&[0, 0])).is_empty());
        assert_eq!(initial_sampling_plan(&with_n0(&[4, 2])), vec![0, 0, 1, 0, 0, 1]);
        assert_eq!(initial_sampling_plan(&with_n0(&[0, 3])), vec![1, 1, 1]);
    }

    #[test]
    fn proportional_initial_samples() {
        let c = MarketConfig::default();
        let n0 = |c: MarketConfig| c.groups.iter().map(|g| g.n0).collect::<Vec<_>>();
        assert_eq!(n0(c.clone().with_proportional_initial_samples(12)), vec![10, 2]);
        assert_eq!(n0(c.clone().with_proportional_initial_samples(20)), vec![17, 3]);
        assert_eq!(n0(c.clone().with_proportional_initial_samples(50)), vec![42, 8]);
        assert_eq!(n0(c.with_proportional_initial_samples(0)), vec![0, 0]);
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let mut c = MarketConfig::default();
        c.delta = 1.5;
        assert_eq!(c.validate().unwrap_err().to_string(), "delta: delta must lie in (0,1)");
        let mut c = MarketConfig::default();
        c.lambda_reg = 0.0;
        assert!(c.validate().is_err());
        let mut c = MarketConfig::default();
        c.horizon = 12;
        assert!(c.validate().is_err());
        let mut c = MarketConfig::default();
        c.groups[1].theta = vec![2.0];
        assert!(c.validate().is_err());
        let mut c = MarketConfig::default();
        c.groups[1].count = 0;
        assert!(c.validate().is_err());
        let mut c = MarketConfig::default();
        c.k_finalists = 13;
        assert!(c.validate().is_err());
    }
}
