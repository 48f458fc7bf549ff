//! The single-run loop and the parallel batch runner.

use rayon::prelude::*;

use crate::error::{ConfigError, SimError};
use crate::estimator::GroupPosterior;
use crate::metrics::{aggregate, c2s_step, regret_step, u2s_step, AggregateStats, RunTrace};
use crate::model::{initial_sampling_plan, realized_skill, Market, MarketConfig, StageMode};
use crate::policies::{policy_step_scored, score_candidates, PolicyContext, PolicyKind};
use crate::rng::Purpose;
use crate::scalar::Scalar;
use crate::subsidy::{apply_rule, verify_implements, SubsidyRule};

/// Environment variable overriding the default worker count.
pub const WORKERS_ENV: &str = "HIRING_SIM_WORKERS";

pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&w: &usize| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// The config a policy actually runs under: warm-start policies replace the
/// initial sampling sizes with a proportional split of their own total.
pub fn effective_config(config: &MarketConfig, policy: &PolicyKind) -> MarketConfig {
    match policy {
        PolicyKind::WarmStartLf(total) => config.clone().with_proportional_initial_samples(*total),
        _ => config.clone(),
    }
}

/// Checks the config and that `subsidy` implements `policy` on it.
pub fn validate_experiment(config: &MarketConfig, policy: &PolicyKind, subsidy: SubsidyRule) -> Result<(), ConfigError> {
    let cfg = effective_config(config, policy);
    cfg.validate()?;
    if !subsidy.pairs_with(policy) {
        return Err(ConfigError::invalid(
            "subsidy",
            format!("subsidy rule `{subsidy}` does not implement policy `{policy}`"),
        ));
    }
    if policy.stage_mode() == StageMode::TwoStage && cfg.k_finalists < 1 {
        return Err(ConfigError::invalid("k_finalists", "two-stage policies need at least one finalist"));
    }
    if matches!(policy, PolicyKind::Rooney | PolicyKind::RooneyThenLf(_)) && cfg.k_finalists < cfg.groups.len() {
        return Err(ConfigError::invalid(
            "k_finalists",
            format!("the Rooney Rule needs k_finalists >= {} (one per group)", cfg.groups.len()),
        ));
    }
    Ok(())
}

/// One replication, fully determined by `(config.seed, run_index)`.
///
/// Initial sampling rounds update the posteriors without recording metrics;
/// rounds `N⁽⁰⁾+1..=N` then draw candidates, decide, pay, observe the hire
/// and update its group's posterior.
pub fn run_single<T: Scalar>(
    config: &MarketConfig,
    policy: &PolicyKind,
    subsidy: SubsidyRule,
    run_index: u64,
) -> Result<RunTrace<T>, SimError> {
    validate_experiment(config, policy, subsidy)?;
    let cfg = effective_config(config, policy);
    let market = Market::<T>::new(&cfg);
    let ctx = PolicyContext::<T>::from_config(&cfg, policy);
    let stage = policy.stage_mode();
    let n_groups = cfg.groups.len();
    let lambda = T::of(cfg.lambda_reg);
    let mut posts: Vec<GroupPosterior<T>> =
        (0..n_groups).map(|_| GroupPosterior::new(cfg.d, lambda)).collect::<Result<_, _>>()?;
    let mu: Vec<Vec<T>> = cfg.groups.iter().map(|g| g.mu_x.iter().map(|&m| T::of(m)).collect()).collect();

    let covered = |p: &GroupPosterior<T>, g: usize| p.self_normalized_error(market.theta(g)) <= p.conf_radius(&ctx.radius);
    let mut coverage_held: Vec<bool> = posts.iter().enumerate().map(|(g, p)| covered(p, g)).collect();

    let plan = initial_sampling_plan(&cfg);
    let price_warm_start = matches!(policy, PolicyKind::WarmStartLf(_));
    let mut warmup_cost = T::zero();
    let mut initial_hires = vec![0u32; n_groups];
    for (i, &g) in plan.iter().enumerate() {
        let round = (i + 1) as u64;
        let hire = if price_warm_start {
            // Full pool; the scheduled group's first slot is the forced hire and
            // the firm is paid the gap to its own greedy choice.
            let pool = market.draw_pool(run_index, round, Purpose::InitialPool);
            let q_hat: Vec<T> = pool.iter().map(|c| posts[c.group].predict(&c.x)).collect();
            let pick = pool.iter().position(|c| c.group == g).expect("every group has candidates");
            let best = q_hat.iter().copied().fold(T::neg_infinity(), T::max);
            warmup_cost += (best - q_hat[pick]).max(T::zero());
            pool.into_iter().nth(pick).unwrap()
        } else {
            market.draw_initial_hire(run_index, u64::from(initial_hires[g]) + 1, g)
        };
        let y = realized_skill(&hire, stage);
        posts[g].update(&hire.x, y);
        initial_hires[g] += 1;
        coverage_held[g] &= covered(&posts[g], g);
    }

    let n0 = plan.len();
    let main = cfg.horizon - n0;
    let two_stage = stage == StageMode::TwoStage;
    let mut trace = RunTrace {
        run_index,
        initial_rounds: n0,
        stage,
        regret_inc: Vec::with_capacity(main),
        u2s_inc: Vec::with_capacity(if two_stage { main } else { 0 }),
        c2s_inc: Vec::with_capacity(if two_stage { main } else { 0 }),
        subsidy_paid: Vec::with_capacity(main),
        index_payment: Vec::with_capacity(main),
        cost_saving_payment: Vec::with_capacity(main),
        chosen: Vec::with_capacity(main),
        chosen_group: Vec::with_capacity(main),
        min_eigenvalue: vec![Vec::with_capacity(main); n_groups],
        width_at_mean: vec![Vec::with_capacity(main); n_groups],
        hire_counts: vec![Vec::with_capacity(main); n_groups],
        initial_hires,
        coverage_held: Vec::new(),
        implement_violations: 0,
        warmup_cost,
    };
    let mut hires = vec![0u32; n_groups];

    for round in (n0 + 1)..=cfg.horizon {
        let cands = market.draw_round(run_index, round as u64);
        let scores = score_candidates(&cands, &posts, &ctx);
        let decision = policy_step_scored(policy, round, scores, &cands, n_groups, cfg.k_finalists)?;
        let chosen = decision.chosen;
        let scores = &decision.per_candidate;

        if two_stage {
            trace.subsidy_paid.push(T::zero());
            trace.index_payment.push(T::zero());
            trace.cost_saving_payment.push(T::zero());
            trace.u2s_inc.push(u2s_step(&cands, chosen, cfg.k_finalists)?);
            trace.c2s_inc.push(c2s_step(&cands, chosen, cfg.k_finalists, n_groups)?);
        } else {
            let outcome = apply_rule(subsidy, scores, chosen);
            let q_hat: Vec<T> = scores.iter().map(|s| s.q_hat).collect();
            if !verify_implements(chosen, &outcome.per_candidate, &q_hat) {
                trace.implement_violations += 1;
            }
            let best = q_hat.iter().copied().fold(T::neg_infinity(), T::max);
            let own = scores[chosen];
            trace.subsidy_paid.push(outcome.paid);
            trace.index_payment.push((own.index - own.q_hat).max(T::zero()));
            trace.cost_saving_payment.push((best - own.q_hat).max(T::zero()));
        }
        trace.regret_inc.push(regret_step(&cands, chosen));

        let hire = &cands[chosen];
        let g = hire.group;
        posts[g].update(&hire.x, realized_skill(hire, stage));
        coverage_held[g] &= covered(&posts[g], g);
        hires[g] += 1;

        trace.chosen.push(chosen as u32);
        trace.chosen_group.push(g as u32);
        for (gi, p) in posts.iter().enumerate() {
            trace.min_eigenvalue[gi].push(p.min_eigenvalue());
            trace.width_at_mean[gi].push(p.width(&mu[gi], p.conf_radius(&ctx.radius)));
            trace.hire_counts[gi].push(hires[gi]);
        }
    }
    trace.coverage_held = coverage_held;
    Ok(trace)
}

/// Runs `0..runs` on a pool of `workers` threads; output order is by run index.
pub fn run_batch_traces<T: Scalar>(
    config: &MarketConfig,
    policy: &PolicyKind,
    subsidy: SubsidyRule,
    runs: usize,
    workers: usize,
) -> Result<Vec<RunTrace<T>>, SimError> {
    validate_experiment(config, policy, subsidy)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        (0..runs as u64)
            .into_par_iter()
            .map(|r| run_single(config, policy, subsidy, r))
            .collect()
    })
}

pub fn run_batch<T: Scalar>(
    config: &MarketConfig,
    policy: &PolicyKind,
    subsidy: SubsidyRule,
    runs: usize,
    workers: usize,
) -> Result<AggregateStats, SimError> {
    if runs == 0 {
        return Err(SimError::Empty);
    }
    aggregate(&run_batch_traces::<T>(config, policy, subsidy, runs, workers)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replays_bit_identically() {
        let c = MarketConfig { horizon: 200, ..Default::default() };
        let a = run_single::<f64>(&c, &PolicyKind::Ucb, SubsidyRule::UcbIndex, 4).unwrap();
        let b = run_single::<f64>(&c, &PolicyKind::Ucb, SubsidyRule::UcbIndex, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 188);
    }

    #[test]
    fn degenerate_market_has_no_regret() {
        let mut c = MarketConfig { horizon: 100, sigma_eps: 0.0, ..Default::default() };
        for g in &mut c.groups {
            g.sigma_x = 0.0;
        }
        let t = run_single::<f64>(&c, &PolicyKind::Lf, SubsidyRule::None, 0).unwrap();
        assert!(t.regret_inc.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn rejects_mismatched_subsidy() {
        let c = MarketConfig::default();
        assert!(run_single::<f64>(&c, &PolicyKind::Ucb, SubsidyRule::None, 0).is_err());
        assert!(run_single::<f64>(&c, &PolicyKind::Rooney, SubsidyRule::CostSaving, 0).is_err());
        let mut c1 = c.clone();
        c1.k_finalists = 1;
        assert!(run_single::<f64>(&c1, &PolicyKind::Rooney, SubsidyRule::None, 0).is_err());
    }

    #[test]
    fn posterior_counts_match_history() {
        let c = MarketConfig { horizon: 300, ..Default::default() };
        let t = run_single::<f64>(&c, &PolicyKind::Hybrid(None), SubsidyRule::HybridIndex, 2).unwrap();
        let total: u32 = (0..2).map(|g| t.initial_hires[g] + t.main_phase_hires(g)).sum();
        assert_eq!(total as usize, c.horizon);
        assert_eq!(t.implement_violations, 0);
    }

    #[test]
    fn single_precision_runs() {
        let c = MarketConfig { horizon: 100, ..Default::default() };
        let t = run_single::<f32>(&c, &PolicyKind::Ucb, SubsidyRule::UcbIndex, 0).unwrap();
        assert_eq!(t.len(), 88);
        assert!(t.regret_inc.iter().all(|r| r.is_finite() && *r >= 0.0));
    }
}
