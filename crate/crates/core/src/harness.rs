//! Seeded Monte-Carlo experiments over random hosts and random trees.
//!
//! Trial `t` of an experiment with seed `s` draws its host from stream
//! `(s, 2t)` and its tree and pipeline seeds from stream `(s, 2t + 1)`, so a
//! trial can be replayed on its own and parallel execution never changes the
//! result.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cut::ExactEpsilon;
use crate::embed::{verify_embedding, EmbedBudget};
use crate::error::{Error, Result};
use crate::generators::{gnp, random_regular};
use crate::graph::Graph;
use crate::pipeline::{embed_nearly_spanning, theorem1_edge_density, Outcome, PipelineRun};
use crate::rng::{RngStream, RNG_ALGORITHM};
use crate::tree::{make_special_tree, random_bounded_degree_tree, RootedTree, TreeKind};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HostModel {
    /// `G(n, c/n)`.
    Gnp { n: usize, c: f64 },
    RandomRegular {
        n: usize,
        #[serde(rename = "D")]
        degree: usize,
    },
}

impl HostModel {
    pub fn n(&self) -> usize {
        match *self {
            HostModel::Gnp { n, .. } | HostModel::RandomRegular { n, .. } => n,
        }
    }

    pub fn generate(&self, stream: RngStream) -> Result<Graph> {
        match *self {
            HostModel::Gnp { n, c } => gnp(n, c / n as f64, stream),
            HostModel::RandomRegular { n, degree } => random_regular(n, degree, stream),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TreeSpec {
    /// Random labelled tree with maximum degree `d`.
    #[default]
    Random,
    Special { kind: TreeKind },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: HostModel,
    pub d: usize,
    pub epsilon: f64,
    #[serde(default)]
    pub tree: TreeSpec,
    /// Defaults to `⌊(1-ε)n⌋`.
    #[serde(default)]
    pub tree_size: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub budget: EmbedBudget,
    #[serde(default)]
    pub output: Option<String>,
}

impl ExperimentConfig {
    pub fn new(model: HostModel, d: usize, epsilon: f64, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            model,
            d,
            epsilon,
            tree: TreeSpec::Random,
            tree_size: None,
            trials,
            seed,
            budget: EmbedBudget::default(),
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return bad(format!("epsilon must lie in (0, 1/2), got {}", self.epsilon));
        }
        if self.d < 2 {
            return bad(format!("d must be at least 2, got {}", self.d));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        match self.model {
            HostModel::Gnp { n, c } if n == 0 || !(c >= 0.0 && c <= n as f64) => {
                return bad(format!("G(n, c/n) needs n >= 1 and 0 <= c <= n, got n={n}, c={c}"))
            }
            HostModel::RandomRegular { n: 0, .. } => return bad("n must be at least 1".into()),
            _ => {}
        }
        let k = self.resolved_tree_size()?;
        if k == 0 {
            return bad("tree size must be at least 1".into());
        }
        Ok(())
    }

    /// The tree order used by every trial.
    pub fn resolved_tree_size(&self) -> Result<usize> {
        match self.tree_size {
            Some(k) => Ok(k),
            None => {
                let e = ExactEpsilon::from_f64(self.epsilon)?;
                Ok((self.model.n() as u128 * (e.den - e.num) as u128 / e.den as u128) as usize)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub n: usize,
    pub m: usize,
    pub min_degree: usize,
    pub max_degree: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSummary {
    pub k: usize,
    pub max_degree: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub graph_stream: RngStream,
    pub pipeline_seed: u64,
    pub graph: GraphSummary,
    pub tree: TreeSummary,
    pub success: bool,
    /// 1-based piece at which the search failed.
    pub failed_step: Option<usize>,
    pub pieces: usize,
    pub backtracks: u64,
    /// `verify_embedding` on the returned map (false when nothing was returned).
    pub verified: bool,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Wilson 95% interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub schema_version: u32,
    pub rng: String,
    pub config: ExperimentConfig,
    pub trials: Vec<TrialRecord>,
    pub aggregate: Aggregate,
}

impl TrialReport {
    /// The report with wall-clock fields zeroed, for determinism checks.
    pub fn without_timings(&self) -> TrialReport {
        let mut r = self.clone();
        for t in &mut r.trials {
            t.wall_time_ms = 0.0;
        }
        r
    }
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

struct TrialInputs {
    graph_stream: RngStream,
    tree_seed: u64,
    pipeline_seed: u64,
}

fn trial_inputs(cfg: &ExperimentConfig, trial: usize) -> TrialInputs {
    let mut r = RngStream::new(cfg.seed, 2 * trial as u64 + 1).rng();
    TrialInputs {
        graph_stream: RngStream::new(cfg.seed, 2 * trial as u64),
        tree_seed: r.gen(),
        pipeline_seed: r.gen(),
    }
}

fn make_tree(cfg: &ExperimentConfig, seed: u64) -> Result<RootedTree> {
    let k = cfg.resolved_tree_size()?;
    match cfg.tree {
        TreeSpec::Random => random_bounded_degree_tree(k, cfg.d, seed),
        TreeSpec::Special { kind } => make_special_tree(kind, k, cfg.d),
    }
}

/// Regenerate trial `trial` and rerun it.
pub fn replay_trial(cfg: &ExperimentConfig, trial: usize) -> Result<(Graph, RootedTree, PipelineRun)> {
    cfg.validate()?;
    let inputs = trial_inputs(cfg, trial);
    let g = cfg.model.generate(inputs.graph_stream)?;
    let t = make_tree(cfg, inputs.tree_seed)?;
    let run = embed_nearly_spanning(&g, &t, cfg.epsilon, inputs.pipeline_seed, &cfg.budget)?;
    Ok((g, t, run))
}

fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<TrialRecord> {
    let start = Instant::now();
    let inputs = trial_inputs(cfg, trial);
    let g = cfg.model.generate(inputs.graph_stream)?;
    let t = make_tree(cfg, inputs.tree_seed)?;
    let run = embed_nearly_spanning(&g, &t, cfg.epsilon, inputs.pipeline_seed, &cfg.budget)?;
    let (min_degree, max_degree) = g.degree_extrema()?;
    let verified = run
        .embedding
        .as_ref()
        .is_some_and(|e| verify_embedding(&g, &t, e).valid);
    let failed_step = match &run.trace.outcome {
        Outcome::Embedded => None,
        Outcome::Failed { step, .. } => Some(*step),
    };
    Ok(TrialRecord {
        trial,
        graph_stream: inputs.graph_stream,
        pipeline_seed: inputs.pipeline_seed,
        graph: GraphSummary {
            n: g.vertex_count(),
            m: g.edge_count(),
            min_degree,
            max_degree,
        },
        tree: TreeSummary {
            k: t.vertex_count(),
            max_degree: t.max_degree(),
            seed: inputs.tree_seed,
        },
        success: run.succeeded(),
        failed_step,
        pieces: run.trace.s,
        backtracks: run.trace.total_backtracks,
        verified,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Run every trial of `cfg` (in parallel) and aggregate.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<TrialReport> {
    cfg.validate()?;
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect::<Result<Vec<_>>>()?;
    let successes = trials.iter().filter(|t| t.success).count();
    let (ci_low, ci_high) = wilson_interval(successes, cfg.trials);
    Ok(TrialReport {
        schema_version: SCHEMA_VERSION,
        rng: RNG_ALGORITHM.to_string(),
        config: cfg.clone(),
        aggregate: Aggregate {
            trials: cfg.trials,
            successes,
            success_rate: successes as f64 / cfg.trials as f64,
            ci_low,
            ci_high,
        },
        trials,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Edge density `c` of `G(n, c/n)`.
    C,
    /// Degree of the random regular host.
    D,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Success rate dropped below that of a smaller grid value.
    pub non_monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub parameter: SweepParameter,
    /// The advisory density bound for `(d, ε)`, for plotting alongside.
    pub theorem1_density: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
        w.write_record(["value", "trials", "successes", "success_rate", "ci_low", "ci_high", "non_monotone", "theorem1_density"])
            .map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.value.to_string(),
                r.trials.to_string(),
                r.successes.to_string(),
                r.success_rate.to_string(),
                r.ci_low.to_string(),
                r.ci_high.to_string(),
                r.non_monotone.to_string(),
                self.theorem1_density.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidInput(format!("csv: {e}")))
    }
}

/// Run `base` once per grid value, substituting `c` (for a `G(n, c/n)` host)
/// or `D` (for a regular host).
pub fn sweep(base: &ExperimentConfig, parameter: SweepParameter, grid: &[f64]) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("sweep grid is empty".into()));
    }
    base.validate()?;
    let mut rows: Vec<SweepRow> = Vec::with_capacity(grid.len());
    let mut best = f64::NEG_INFINITY;
    for &value in grid {
        let mut cfg = base.clone();
        cfg.model = match (parameter, base.model) {
            (SweepParameter::C, HostModel::Gnp { n, .. }) => HostModel::Gnp { n, c: value },
            (SweepParameter::D, HostModel::RandomRegular { n, .. }) if value >= 0.0 && value.fract() == 0.0 => {
                HostModel::RandomRegular { n, degree: value as usize }
            }
            _ => {
                return Err(Error::InvalidInput(format!(
                    "cannot sweep {parameter:?} = {value} over host model {:?}",
                    base.model
                )))
            }
        };
        let report = run_experiment(&cfg)?;
        let a = report.aggregate;
        rows.push(SweepRow {
            value,
            trials: a.trials,
            successes: a.successes,
            success_rate: a.success_rate,
            ci_low: a.ci_low,
            ci_high: a.ci_high,
            non_monotone: a.success_rate < best,
        });
        best = best.max(a.success_rate);
    }
    Ok(SweepTable {
        parameter,
        theorem1_density: theorem1_edge_density(base.d, base.epsilon)?,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig::new(HostModel::Gnp { n: 200, c: 25.0 }, 3, 0.4, 6, 11)
    }

    #[test]
    fn wilson_values() {
        let (lo, hi) = wilson_interval(18, 20);
        assert!((lo - 0.6990).abs() < 1e-3 && (hi - 0.9721).abs() < 1e-3, "{lo} {hi}");
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.27 && hi < 0.28);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = small();
        c.trials = 0;
        assert!(run_experiment(&c).is_err());
        let mut c = small();
        c.epsilon = 0.5;
        assert!(c.validate().is_err());
        let mut c = small();
        c.d = 1;
        assert!(c.validate().is_err());
        let mut c = small();
        c.schema_version = 99;
        assert!(c.validate().is_err());
    }

    #[test]
    fn deterministic_and_replayable() {
        let cfg = small();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.without_timings(), b.without_timings());
        assert_eq!(
            serde_json::to_string(&a.without_timings()).unwrap(),
            serde_json::to_string(&b.without_timings()).unwrap()
        );
        for rec in a.trials.iter().filter(|r| r.success) {
            assert!(rec.verified);
            let (g, t, run) = replay_trial(&cfg, rec.trial).unwrap();
            assert!(verify_embedding(&g, &t, run.embedding.as_ref().unwrap()).valid);
        }
        assert_eq!(a.trials[0].tree.k, 120);
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = small();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        let minimal = r#"{"schema_version":1,"model":{"kind":"random_regular","n":50,"D":6},"d":3,"epsilon":0.3,"trials":2,"seed":0}"#;
        let parsed: ExperimentConfig = serde_json::from_str(minimal).unwrap();
        assert_eq!(parsed.budget, EmbedBudget::default());
        assert_eq!(parsed.resolved_tree_size().unwrap(), 35);
    }

    #[test]
    fn sweep_single_point_matches_experiment() {
        let cfg = small();
        let table = sweep(&cfg, SweepParameter::C, &[25.0]).unwrap();
        let rep = run_experiment(&cfg).unwrap();
        assert_eq!(table.rows[0].successes, rep.aggregate.successes);
        assert!(sweep(&cfg, SweepParameter::C, &[]).is_err());
        assert!(sweep(&cfg, SweepParameter::D, &[4.0]).is_err());
        let csv = table.to_csv().unwrap();
        assert!(csv.starts_with("value,trials,successes"));
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn sweep_flags_drops() {
        let mut cfg = small();
        cfg.trials = 4;
        let table = sweep(&cfg, SweepParameter::C, &[30.0, 2.0]).unwrap();
        let [hi, lo] = [&table.rows[0], &table.rows[1]];
        assert_eq!(lo.non_monotone, lo.success_rate < hi.success_rate);
        assert!(!hi.non_monotone);
    }
}
