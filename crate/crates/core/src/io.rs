//! JSON configuration, result tables and the on-disk bundle.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::engine::{run_batch, validate_experiment};
use crate::error::{ConfigError, SimError};
use crate::metrics::{AggregateStats, SeriesKind};
use crate::model::{default_groups, max_theta_norm, MarketConfig};
use crate::policies::PolicyKind;
use crate::presets::{Arm, Cell, ExperimentPreset, Output};
use crate::subsidy::SubsidyRule;

/// A market plus an optional policy and subsidy selection.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub market: MarketConfig,
    pub policy: Option<PolicyKind>,
    pub subsidy: Option<SubsidyRule>,
}

impl ExperimentConfig {
    /// The selected arm; the subsidy defaults to the policy's usual one.
    pub fn arm(&self) -> Option<Arm> {
        let policy = self.policy?;
        let subsidy = self.subsidy.unwrap_or_else(|| SubsidyRule::default_for(&policy));
        Some(Arm { policy, subsidy })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.market.validate()?;
        if self.subsidy.is_some() && self.policy.is_none() {
            return Err(ConfigError::invalid("subsidy", "a subsidy rule needs a policy"));
        }
        if let Some(arm) = self.arm() {
            validate_experiment(&self.market, &arm.policy, arm.subsidy)?;
        }
        Ok(())
    }

    pub fn to_value(&self) -> Value {
        let mut v = serde_json::to_value(&self.market).expect("config serializes");
        let obj = v.as_object_mut().expect("config is an object");
        if let Some(p) = &self.policy {
            obj.insert("policy".into(), Value::String(p.to_string()));
        }
        if let Some(s) = &self.subsidy {
            obj.insert("subsidy".into(), Value::String(s.to_string()));
        }
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("config serializes")
    }
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Schema { path: path.into(), message: message.into() }
}

fn take_string<T: std::str::FromStr>(obj: &mut Map<String, Value>, key: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    match obj.remove(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => s.parse().map(Some).map_err(|e: T::Err| schema(key, e.to_string())),
        Some(other) => Err(schema(key, format!("expected a string, found {other}"))),
    }
}

/// Parses and validates a JSON config. Omitted fields take their defaults;
/// an empty body is the default config. When `groups` is omitted it follows
/// `d`, and when `s_bound` is omitted it is the largest `||theta||`.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let text = if text.trim().is_empty() { "{}" } else { text };
    let mut de = serde_json::Deserializer::from_str(text);
    let value: Value = serde_path_to_error::deserialize(&mut de).map_err(|e| schema(e.path().to_string(), e.inner().to_string()))?;
    let Value::Object(mut obj) = value else {
        return Err(schema(".", "config must be a JSON object"));
    };
    let policy = take_string::<PolicyKind>(&mut obj, "policy")?;
    let subsidy = take_string::<SubsidyRule>(&mut obj, "subsidy")?;
    let has_groups = obj.contains_key("groups");
    let has_bound = obj.contains_key("s_bound");
    let mut market: MarketConfig =
        serde_path_to_error::deserialize(Value::Object(obj)).map_err(|e| schema(e.path().to_string(), e.inner().to_string()))?;
    if !has_groups {
        market.groups = default_groups(market.d);
    }
    if !has_bound {
        market.s_bound = max_theta_norm(&market.groups);
    }
    let cfg = ExperimentConfig { market, policy, subsidy };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    parse_config_str(&text)
}

/// Git-style blob hash (`sha256("blob <len>\0" ++ body)`) of compact JSON with sorted keys.
pub fn content_hash(value: &Value) -> String {
    let body = serde_json::to_string(value).expect("json serializes");
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", body.len()).as_bytes());
    h.update(body.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub config: Value,
    pub config_hash: String,
    pub seed: u64,
    pub runs: usize,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.to_string(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsBundle {
    pub manifest: Manifest,
    pub tables: Vec<Table>,
}

/// 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn unix_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

/// Builds the output tables for preset cells.
pub fn tables(cells: &[Cell], sweep_column: Option<&str>, outputs: &[Output]) -> Vec<Table> {
    let multi_arm = {
        let mut labels: Vec<String> = cells.iter().map(|c| c.arm.label()).collect();
        labels.dedup();
        labels.len() > 1
    };
    let prefix = |c: &Cell| -> Vec<String> {
        match (sweep_column, c.sweep_value) {
            (Some(_), Some(v)) => vec![v.to_string()],
            _ => vec![],
        }
    };
    let mut out = Vec::new();
    for output in outputs {
        match output {
            Output::PuFrequency => {
                let mut cols: Vec<&str> = sweep_column.into_iter().collect();
                if sweep_column.is_some() {
                    if multi_arm {
                        cols.push("policy");
                    }
                } else {
                    cols.extend(["policy", "group"]);
                }
                cols.extend(["freq", "ci_halfwidth", "runs"]);
                let mut t = Table::new("pu_frequency", &cols);
                for c in cells {
                    let groups: Vec<usize> = if sweep_column.is_some() {
                        vec![c.stats.pu.len() - 1]
                    } else {
                        (0..c.stats.pu.len()).collect()
                    };
                    for g in groups {
                        let mut row = prefix(c);
                        if sweep_column.is_none() || multi_arm {
                            row.push(c.arm.label());
                        }
                        if sweep_column.is_none() {
                            row.push(g.to_string());
                        }
                        let f = c.stats.pu[g];
                        row.extend([fmt_float(f.freq), fmt_float(f.ci_halfwidth), f.runs.to_string()]);
                        t.rows.push(row);
                    }
                }
                out.push(t);
            }
            Output::Series(kind) => {
                let mut cols: Vec<&str> = sweep_column.into_iter().collect();
                cols.extend(["round", "policy", "mean", "p5", "p95"]);
                let mut t = Table::new(kind.name(), &cols);
                for c in cells {
                    let Some(band) = c.stats.series.get(kind) else { continue };
                    for (i, &round) in c.stats.rounds.iter().enumerate() {
                        let mut row = prefix(c);
                        row.extend([
                            round.to_string(),
                            c.arm.label(),
                            fmt_float(band.mean[i]),
                            fmt_float(band.p5[i]),
                            fmt_float(band.p95[i]),
                        ]);
                        t.rows.push(row);
                    }
                }
                out.push(t);
            }
            Output::Totals => {
                let mut cols: Vec<&str> = sweep_column.into_iter().collect();
                cols.extend(["policy", "metric", "mean", "ci_halfwidth", "runs"]);
                let mut t = Table::new("final", &cols);
                for c in cells {
                    let s = &c.stats;
                    let mut push = |metric: &str, mean: f64, hw: f64| {
                        let mut row = prefix(c);
                        row.extend([c.arm.label(), metric.to_string(), fmt_float(mean), fmt_float(hw), s.runs.to_string()]);
                        t.rows.push(row);
                    };
                    for (kind, band) in &s.series {
                        push(kind.name(), band.final_mean(), band.final_ci_halfwidth);
                    }
                    push("warmup_cost", s.warmup_cost.mean, s.warmup_cost.ci_halfwidth);
                    push("total_cost", s.total_cost.mean, s.total_cost.ci_halfwidth);
                    let pu = s.pu[s.pu.len() - 1];
                    push("pu_minority", pu.freq, pu.ci_halfwidth);
                    push("coverage", s.coverage.freq, s.coverage.ci_halfwidth);
                }
                out.push(t);
            }
        }
    }
    out
}

fn preset_echo(p: &ExperimentPreset, runs: usize) -> Value {
    let mut m = Map::new();
    m.insert("preset".into(), Value::String(p.name.clone()));
    m.insert("market".into(), serde_json::to_value(&p.base).expect("config serializes"));
    if let Some(s) = &p.sweep {
        m.insert("sweep".into(), serde_json::json!({ "param": s.param.column(), "values": s.values }));
    }
    let arms: Vec<Value> = p
        .arms
        .iter()
        .map(|a| serde_json::json!({ "policy": a.policy.to_string(), "subsidy": a.subsidy.to_string() }))
        .collect();
    m.insert("arms".into(), Value::Array(arms));
    m.insert("runs".into(), runs.into());
    Value::Object(m)
}

fn bundle(experiment: String, config: Value, seed: u64, runs: usize, started: u128, tables: Vec<Table>) -> ResultsBundle {
    let manifest = Manifest {
        experiment,
        config_hash: content_hash(&config),
        config,
        seed,
        runs,
        started_unix_ms: started,
        finished_unix_ms: unix_ms(),
        files: tables.iter().map(Table::file_name).collect(),
    };
    ResultsBundle { manifest, tables }
}

/// Runs every cell of a preset and tabulates its outputs.
pub fn run_preset(p: &ExperimentPreset, runs: usize, workers: usize) -> Result<ResultsBundle, SimError> {
    let started = unix_ms();
    let cells = p.run(runs, workers)?;
    let sweep_col = p.sweep.as_ref().map(|s| s.param.column());
    let tables = tables(&cells, sweep_col, &p.outputs);
    Ok(bundle(p.name.clone(), preset_echo(p, runs), p.base.seed, runs, started, tables))
}

/// Runs one configured policy; needs `config.policy`.
pub fn run_experiment(config: &ExperimentConfig, runs: usize, workers: usize) -> Result<ResultsBundle, SimError> {
    config.validate()?;
    let arm = config.arm().ok_or_else(|| ConfigError::invalid("policy", "no policy selected"))?;
    let started = unix_ms();
    let stats: AggregateStats = run_batch::<f64>(&config.market, &arm.policy, arm.subsidy, runs, workers)?;
    let mut outputs = vec![Output::Series(SeriesKind::Regret)];
    if arm.policy.stage_mode() == crate::model::StageMode::TwoStage {
        outputs.extend([Output::Series(SeriesKind::U2sRegret), Output::Series(SeriesKind::C2sRegret)]);
    }
    outputs.extend([Output::Series(SeriesKind::Subsidy), Output::PuFrequency, Output::Totals]);
    let cells = [Cell { sweep_value: None, arm, stats }];
    let tables = tables(&cells, None, &outputs);
    let mut echo = config.to_value();
    echo.as_object_mut().unwrap().insert("runs".into(), runs.into());
    Ok(bundle("simulate".into(), echo, config.market.seed, runs, started, tables))
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<(), SimError> {
    fs::write(&path, bytes).map_err(|source| SimError::Write { path, source })
}

/// Writes `manifest.json` and one CSV per table, overwriting existing files.
pub fn emit_results(bundle: &ResultsBundle, out_dir: &Path) -> Result<Vec<PathBuf>, SimError> {
    fs::create_dir_all(out_dir).map_err(|source| SimError::Write { path: out_dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    for t in &bundle.tables {
        let path = out_dir.join(t.file_name());
        let mut w = csv::Writer::from_writer(Vec::new());
        let io_err = |e: csv::Error| SimError::Write { path: path.clone(), source: e.into() };
        w.write_record(&t.header).map_err(io_err)?;
        for row in &t.rows {
            w.write_record(row).map_err(io_err)?;
        }
        let bytes = w.into_inner().map_err(|e| SimError::Write { path: path.clone(), source: e.into_error() })?;
        write(path.clone(), &bytes)?;
        written.push(path);
    }
    let path = out_dir.join("manifest.json");
    let mut json = serde_json::to_string_pretty(&bundle.manifest).expect("manifest serializes");
    json.push('\n');
    write(path.clone(), json.as_bytes())?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_body_is_default() {
        let c = parse_config_str("").unwrap();
        assert_eq!(c.market, MarketConfig::default());
        assert_eq!(c.policy, None);
        assert_eq!(parse_config_str("  {}\n").unwrap(), c);
    }

    #[test]
    fn range_errors_name_the_field() {
        let err = parse_config_str(r#"{"delta": 1.5}"#).unwrap_err();
        assert!(err.to_string().contains("delta must lie in (0,1)"), "{err}");
        let err = parse_config_str(r#"{"groups": [{"label": "a", "count": 1}]}"#).unwrap_err();
        assert!(err.to_string().starts_with("groups[0]"), "{err}");
        let err = parse_config_str(r#"{"horizn": 10}"#).unwrap_err();
        assert!(err.to_string().contains("horizn"), "{err}");
        let err = parse_config_str(r#"{"policy": "greedy"}"#).unwrap_err();
        assert!(err.to_string().starts_with("policy"), "{err}");
    }

    #[test]
    fn round_trip() {
        let text = r#"{"d": 2, "sigma_eta": 1.5, "policy": "hybrid:0.5", "subsidy": "cost_saving", "k_finalists": 3}"#;
        let c = parse_config_str(text).unwrap();
        assert_eq!(c.market.groups[0].mu_x, vec![3.0, 3.0]);
        assert!((c.market.s_bound - 1.0).abs() < 1e-15);
        assert_eq!(parse_config_str(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn bad_pairings_rejected() {
        assert!(parse_config_str(r#"{"policy": "ucb", "subsidy": "none"}"#).is_err());
        assert!(parse_config_str(r#"{"policy": "rooney", "k_finalists": 1}"#).is_err());
        assert!(parse_config_str(r#"{"subsidy": "none"}"#).is_err());
    }

    #[test]
    fn hash_is_stable_and_key_order_free() {
        let a: Value = serde_json::from_str(r#"{"x": 1, "y": [1, 2]}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"y": [1, 2], "x": 1}"#).unwrap();
        assert_eq!(content_hash(&a), content_hash(&b));
        assert_eq!(content_hash(&a).len(), 64);
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.0_f64.sqrt() * 1e10, -5e-300] {
            assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
        }
    }
}
