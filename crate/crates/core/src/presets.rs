//! Named experiment configurations.

use crate::engine::{effective_config, run_batch, validate_experiment};
use crate::error::SimError;
use crate::metrics::{AggregateStats, SeriesKind};
use crate::model::MarketConfig;
use crate::policies::PolicyKind;
use crate::subsidy::SubsidyRule;

pub const PRESET_NAMES: [&str; 10] = [
    "fig1_pu_vs_k1",
    "fig2_lf_vs_ucb",
    "fig3_ucb_vs_hybrid_regret",
    "fig4_index_subsidies",
    "fig5_costsaving_subsidies",
    "fig6_costsaving_long",
    "fig7_rooney_pu",
    "fig8_rooney_regret",
    "appB_warmstart_pu",
    "appB_warmstart_subsidy",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Majority group size; its initial sample size follows it.
    MajorityCount,
    /// Interview-noise variance `σ_η²`.
    SigmaEta2,
    /// Total warm-start rounds of every `warm_start_lf` arm.
    WarmStartRounds,
}

impl SweepParam {
    /// Column name in output tables.
    pub fn column(&self) -> &'static str {
        match self {
            Self::MajorityCount => "k1",
            Self::SigmaEta2 => "sigma_eta2",
            Self::WarmStartRounds => "n0",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub policy: PolicyKind,
    pub subsidy: SubsidyRule,
}

impl Arm {
    fn new(policy: PolicyKind, subsidy: SubsidyRule) -> Self {
        Self { policy, subsidy }
    }

    /// `policy` or `policy+subsidy` when the subsidy is not the default one.
    pub fn label(&self) -> String {
        if self.subsidy == SubsidyRule::default_for(&self.policy) {
            self.policy.to_string()
        } else {
            format!("{}+{}", self.policy, self.subsidy)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    /// Perpetual-underestimation frequency of the minority (last) group.
    PuFrequency,
    /// Per-round band of a cumulative series.
    Series(SeriesKind),
    /// Final cumulative values and total costs.
    Totals,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: String,
    pub base: MarketConfig,
    pub sweep: Option<Sweep>,
    pub arms: Vec<Arm>,
    pub runs: usize,
    pub outputs: Vec<Output>,
}

/// One `(sweep point, arm)` cell of a preset run.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub sweep_value: Option<f64>,
    pub arm: Arm,
    pub stats: AggregateStats,
}

pub fn preset(name: &str) -> Result<ExperimentPreset, SimError> {
    use PolicyKind as P;
    use SubsidyRule as S;
    let base = MarketConfig::default();
    let two_stage = |sigma_eta2: f64| MarketConfig { sigma_eta: sigma_eta2.sqrt(), ..MarketConfig::default() };
    let cost_saving_arms = vec![
        Arm::new(P::Ucb, S::CostSaving),
        Arm::new(P::Hybrid(None), S::CostSaving),
        Arm::new(P::Ucb, S::UcbIndex),
        Arm::new(P::Hybrid(None), S::HybridIndex),
    ];
    let warm_start_arms = vec![
        Arm::new(P::WarmStartLf(0), S::None),
        Arm::new(P::Hybrid(None), S::CostSaving),
    ];
    let warm_start_sweep = Some(Sweep { param: SweepParam::WarmStartRounds, values: vec![0.0, 12.0, 20.0, 50.0, 100.0] });
    let (base, sweep, arms, runs, outputs) = match name {
        "fig1_pu_vs_k1" => (
            base,
            Some(Sweep { param: SweepParam::MajorityCount, values: vec![2.0, 10.0, 30.0, 100.0] }),
            vec![Arm::new(P::Lf, S::None)],
            4000,
            vec![Output::PuFrequency],
        ),
        "fig2_lf_vs_ucb" => (
            base,
            None,
            vec![Arm::new(P::Lf, S::None), Arm::new(P::Ucb, S::UcbIndex)],
            4000,
            vec![Output::Series(SeriesKind::Regret), Output::PuFrequency, Output::Totals],
        ),
        "fig3_ucb_vs_hybrid_regret" => (
            base,
            None,
            vec![Arm::new(P::Ucb, S::UcbIndex), Arm::new(P::Hybrid(None), S::HybridIndex)],
            4000,
            vec![Output::Series(SeriesKind::Regret), Output::Totals],
        ),
        "fig4_index_subsidies" => (
            base,
            None,
            vec![Arm::new(P::Ucb, S::UcbIndex), Arm::new(P::Hybrid(None), S::HybridIndex)],
            4000,
            vec![Output::Series(SeriesKind::Subsidy), Output::Totals],
        ),
        "fig5_costsaving_subsidies" => {
            (base, None, cost_saving_arms, 4000, vec![Output::Series(SeriesKind::Subsidy), Output::Totals])
        }
        "fig6_costsaving_long" => (
            MarketConfig { horizon: 10_000, ..base },
            None,
            cost_saving_arms,
            50,
            vec![Output::Series(SeriesKind::Subsidy), Output::Totals],
        ),
        "fig7_rooney_pu" => (
            two_stage(1.0),
            Some(Sweep { param: SweepParam::SigmaEta2, values: vec![0.25, 1.0, 4.0, 16.0] }),
            vec![Arm::new(P::Lf2s, S::None), Arm::new(P::Rooney, S::None)],
            4000,
            vec![Output::PuFrequency],
        ),
        "fig8_rooney_regret" => (
            two_stage(16.0),
            None,
            vec![Arm::new(P::Lf2s, S::None), Arm::new(P::Rooney, S::None), Arm::new(P::RooneyThenLf(100), S::None)],
            4000,
            vec![
                Output::Series(SeriesKind::U2sRegret),
                Output::Series(SeriesKind::C2sRegret),
                Output::PuFrequency,
                Output::Totals,
            ],
        ),
        "appB_warmstart_pu" => (base, warm_start_sweep, warm_start_arms, 4000, vec![Output::PuFrequency]),
        "appB_warmstart_subsidy" => (base, warm_start_sweep, warm_start_arms, 4000, vec![Output::Totals]),
        _ => return Err(SimError::UnknownPreset(name.to_string())),
    };
    Ok(ExperimentPreset { name: name.to_string(), base, sweep, arms, runs, outputs })
}

impl ExperimentPreset {
    /// Multiplies the run count (at least one run is kept).
    pub fn scaled(mut self, scale: f64) -> Self {
        if scale > 0.0 {
            self.runs = ((self.runs as f64 * scale).round() as usize).max(1);
        }
        self
    }

    /// Every `(sweep value, config, arm)` triple this preset runs, in output order.
    pub fn cells(&self) -> Vec<(Option<f64>, MarketConfig, Arm)> {
        let mut out = Vec::new();
        let Some(sweep) = &self.sweep else {
            return self.arms.iter().map(|a| (None, self.base.clone(), a.clone())).collect();
        };
        for arm in &self.arms {
            if sweep.param == SweepParam::WarmStartRounds && !matches!(arm.policy, PolicyKind::WarmStartLf(_)) {
                // Not affected by the sweep: run once at the base initial sampling size.
                out.push((Some(self.base.initial_rounds() as f64), self.base.clone(), arm.clone()));
                continue;
            }
            for &v in &sweep.values {
                let mut cfg = self.base.clone();
                let mut arm = arm.clone();
                match sweep.param {
                    SweepParam::MajorityCount => {
                        cfg.groups[0].count = v as usize;
                        cfg.groups[0].n0 = v as usize;
                    }
                    SweepParam::SigmaEta2 => cfg.sigma_eta = v.sqrt(),
                    SweepParam::WarmStartRounds => arm.policy = PolicyKind::WarmStartLf(v as usize),
                }
                out.push((Some(v), cfg, arm));
            }
        }
        out
    }

    /// Validates every cell before any simulation starts.
    pub fn validate(&self) -> Result<(), SimError> {
        for (_, cfg, arm) in self.cells() {
            validate_experiment(&cfg, &arm.policy, arm.subsidy)?;
            let eff = effective_config(&cfg, &arm.policy);
            if eff.initial_rounds() >= eff.horizon {
                return Err(crate::error::ConfigError::invalid("horizon", "must exceed the initial sampling rounds").into());
            }
        }
        Ok(())
    }

    pub fn run(&self, runs: usize, workers: usize) -> Result<Vec<Cell>, SimError> {
        self.validate()?;
        self.cells()
            .into_iter()
            .map(|(sweep_value, cfg, arm)| {
                let stats = run_batch::<f64>(&cfg, &arm.policy, arm.subsidy, runs, workers)?;
                Ok(Cell { sweep_value, arm, stats })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_resolve_and_validate() {
        for name in PRESET_NAMES {
            let p = preset(name).unwrap();
            p.validate().unwrap();
            assert!(!p.cells().is_empty());
        }
        assert!(matches!(preset("fig9"), Err(SimError::UnknownPreset(_))));
    }

    #[test]
    fn sweeps_expand() {
        let p = preset("fig1_pu_vs_k1").unwrap();
        let cells = p.cells();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[3].1.groups[0].count, 100);
        assert_eq!(cells[3].1.groups[0].n0, 100);
        let p = preset("appB_warmstart_pu").unwrap();
        let cells = p.cells();
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[4].2.policy, PolicyKind::WarmStartLf(100));
        assert_eq!(cells[5].2.label(), "hybrid+cost_saving");
    }

    #[test]
    fn scaling_shrinks_runs() {
        assert_eq!(preset("fig2_lf_vs_ucb").unwrap().scaled(0.25).runs, 1000);
        assert_eq!(preset("fig6_costsaving_long").unwrap().scaled(0.001).runs, 1);
    }
}
