//! Monte Carlo experiments, trajectory CSV and JSON reports.
//!
//! Trial `i` of an experiment always draws from
//! [`StreamRng::for_trial(seed, i)`](StreamRng::for_trial). Trials are grouped
//! into fixed blocks of [`BLOCK_SIZE`]; blocks may run on any thread but their
//! partial statistics are folded in block order, so a summary is bit-identical
//! for every parallelism level.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::stats::{wilson_ci, MeanVar};
use crate::analytics::ExactDistribution;
use crate::birth_death::{coupled_fixation, coupled_trajectory};
use crate::chain::{
    record_trajectory, run_to_fixation, EventKind, FixationResult, InitMode, Jump, Params, PopulationState,
    Trajectory,
};
use crate::error::{Error, Result};
use crate::graph::{complete_graph, record_graph_trajectory, run_graph_to_fixation, Graph};
use crate::rng::StreamRng;

/// Trials per scheduling block.
pub const BLOCK_SIZE: u64 = 256;

/// 97.5% standard normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Population chain.
    Chain,
    /// Per-edge Gillespie simulation.
    Graph,
    /// Death/birth process coupling.
    Coupling,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::Chain, Engine::Graph, Engine::Coupling];

    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Chain => "chain",
            Engine::Graph => "graph",
            Engine::Coupling => "coupling",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Engine::Chain),
            "graph" => Ok(Engine::Graph),
            "coupling" => Ok(Engine::Coupling),
            other => Err(Error::InvalidInput(format!("unknown engine `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Fraction of trials with `W = 0`.
    ExtinctionProb,
    /// Mean of `W`.
    ExpectedW,
    /// Mean of `C / ln n`.
    ConversionOverLogN,
    /// Mean of `tau / ln n`, with `tau` on the engine's clock.
    TauOverLogN,
    /// Mean of `W` plus the full histogram of `W`.
    FullWHistogram,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::ExtinctionProb => "extinction-prob",
            Estimator::ExpectedW => "expected-w",
            Estimator::ConversionOverLogN => "conversion-over-log-n",
            Estimator::TauOverLogN => "tau-over-log-n",
            Estimator::FullWHistogram => "full-w-histogram",
        }
    }

    fn needs_log_n(self) -> bool {
        matches!(self, Estimator::ConversionOverLogN | Estimator::TauOverLogN)
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "extinction-prob" => Ok(Estimator::ExtinctionProb),
            "expected-w" => Ok(Estimator::ExpectedW),
            "conversion-over-log-n" => Ok(Estimator::ConversionOverLogN),
            "tau-over-log-n" => Ok(Estimator::TauOverLogN),
            "full-w-histogram" => Ok(Estimator::FullWHistogram),
            other => Err(Error::InvalidInput(format!("unknown estimator `{other}`"))),
        }
    }
}

/// A validated experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub params: Params<f64>,
    pub trials: u64,
    pub seed: u64,
    pub estimator: Estimator,
    pub engine: Engine,
    pub parallelism: usize,
    /// Graph for the graph engine; `None` means the complete graph.
    pub graph: Option<Arc<Graph>>,
}

impl ExperimentConfig {
    pub fn new(params: Params<f64>, trials: u64, seed: u64, estimator: Estimator, engine: Engine) -> Result<Self> {
        let config = Self { params, trials, seed, estimator, engine, parallelism: 1, graph: None };
        config.validate()?;
        Ok(config)
    }

    pub fn with_parallelism(mut self, parallelism: usize) -> Result<Self> {
        self.parallelism = parallelism;
        self.validate()?;
        Ok(self)
    }

    pub fn with_graph(mut self, graph: Graph) -> Result<Self> {
        self.graph = Some(Arc::new(graph));
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        if self.parallelism == 0 {
            return Err(Error::InvalidInput("parallelism must be at least 1".into()));
        }
        if self.estimator.needs_log_n() && self.params.n() < 2 {
            return Err(Error::InvalidInput("log n estimators need n >= 2".into()));
        }
        if self.engine == Engine::Coupling && self.params.init_mode() != InitMode::Standard {
            return Err(Error::InvalidInput("the coupling engine supports the standard initial condition only".into()));
        }
        if let Some(graph) = &self.graph {
            if self.engine != Engine::Graph {
                return Err(Error::InvalidInput("a graph file requires the graph engine".into()));
            }
            if graph.vertex_count() as u64 != self.params.total_vertices() {
                return Err(Error::InvalidInput(format!(
                    "graph has {} vertices, parameters need {}",
                    graph.vertex_count(),
                    self.params.total_vertices()
                )));
            }
        }
        Ok(())
    }

    fn resolved_graph(&self) -> Result<Option<Arc<Graph>>> {
        match (self.engine, &self.graph) {
            (Engine::Graph, Some(g)) => Ok(Some(Arc::clone(g))),
            (Engine::Graph, None) => Ok(Some(Arc::new(complete_graph(self.params.total_vertices() as usize)?))),
            _ => Ok(None),
        }
    }
}

/// One realization with the given engine.
pub fn run_engine(
    engine: Engine,
    params: &Params<f64>,
    graph: Option<&Graph>,
    rng: &mut StreamRng,
) -> Result<FixationResult<f64>> {
    match engine {
        Engine::Chain => run_to_fixation(params, rng),
        Engine::Graph => match graph {
            Some(g) => run_graph_to_fixation(g, params, rng),
            None => run_graph_to_fixation(&complete_graph(params.total_vertices() as usize)?, params, rng),
        },
        Engine::Coupling => {
            if params.init_mode() != InitMode::Standard {
                return Err(Error::InvalidInput("the coupling engine supports the standard initial condition only".into()));
            }
            coupled_fixation(params.n(), *params.lambda(), *params.alpha(), rng)
        }
    }
}

/// One recorded realization with the given engine.
pub fn record_engine(
    engine: Engine,
    params: &Params<f64>,
    graph: Option<&Graph>,
    rng: &mut StreamRng,
) -> Result<Trajectory<f64>> {
    match engine {
        Engine::Chain => record_trajectory(params, rng),
        Engine::Graph => match graph {
            Some(g) => record_graph_trajectory(g, params, rng),
            None => record_graph_trajectory(&complete_graph(params.total_vertices() as usize)?, params, rng),
        },
        Engine::Coupling => {
            if params.init_mode() != InitMode::Standard {
                return Err(Error::InvalidInput("the coupling engine supports the standard initial condition only".into()));
            }
            coupled_trajectory(params.n(), *params.lambda(), *params.alpha(), rng)
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Partial {
    values: MeanVar,
    extinctions: u64,
    histogram: Vec<u64>,
}

impl Partial {
    fn merge(&mut self, other: &Partial) {
        self.values.merge(&other.values);
        self.extinctions += other.extinctions;
        for (a, b) in self.histogram.iter_mut().zip(&other.histogram) {
            *a += b;
        }
    }
}

fn run_block(config: &ExperimentConfig, graph: Option<&Graph>, block: u64) -> Result<Partial> {
    let start = block * BLOCK_SIZE;
    let end = (start + BLOCK_SIZE).min(config.trials);
    let log_n = (config.params.n() as f64).ln();
    let mut partial = Partial { histogram: vec![0; config.params.n() as usize + 1], ..Partial::default() };
    for trial in start..end {
        let mut rng = StreamRng::for_trial(config.seed, trial);
        let res = run_engine(config.engine, &config.params, graph, &mut rng)?;
        if res.white_survivors == 0 {
            partial.extinctions += 1;
        }
        partial.histogram[res.white_survivors as usize] += 1;
        let value = match config.estimator {
            Estimator::ExtinctionProb => (res.white_survivors == 0) as u8 as f64,
            Estimator::ExpectedW | Estimator::FullWHistogram => res.white_survivors as f64,
            Estimator::ConversionOverLogN => res.conversions as f64 / log_n,
            Estimator::TauOverLogN => res.fixation_time / log_n,
        };
        partial.values.push(value);
    }
    Ok(partial)
}

/// Runs every trial and returns the per-trial results in trial order.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<FixationResult<f64>>> {
    config.validate()?;
    let graph = config.resolved_graph()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = StreamRng::for_trial(config.seed, trial);
                run_engine(config.engine, &config.params, graph.as_deref(), &mut rng)
            })
            .collect()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsEcho {
    pub n: u64,
    pub lambda: f64,
    pub alpha: f64,
    pub init_mode: InitMode,
}

impl From<&Params<f64>> for ParamsEcho {
    fn from(p: &Params<f64>) -> Self {
        Self { n: p.n(), lambda: *p.lambda(), alpha: *p.alpha(), init_mode: p.init_mode() }
    }
}

impl ParamsEcho {
    pub fn to_params(&self) -> Result<Params<f64>> {
        Params::new(self.n, self.lambda, self.alpha, self.init_mode)
    }
}

/// Monte Carlo estimate with its uncertainty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: Estimator,
    pub engine: Engine,
    pub estimate: f64,
    pub std_error: f64,
    /// Wilson interval for the extinction probability, normal interval
    /// otherwise.
    pub ci95: (f64, f64),
    pub trials: u64,
    pub seed: u64,
    pub params: ParamsEcho,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<Vec<u64>>,
}

impl EstimatorSummary {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Runs the experiment and summarises it.
pub fn estimate(config: &ExperimentConfig) -> Result<EstimatorSummary> {
    config.validate()?;
    let graph = config.resolved_graph()?;
    let blocks = config.trials.div_ceil(BLOCK_SIZE);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let partials: Vec<Partial> = pool.install(|| {
        (0..blocks)
            .into_par_iter()
            .map(|block| run_block(config, graph.as_deref(), block))
            .collect::<Result<_>>()
    })?;
    let mut total = Partial { histogram: vec![0; config.params.n() as usize + 1], ..Partial::default() };
    for p in &partials {
        total.merge(p);
    }

    let (estimate, std_error, ci95) = match config.estimator {
        Estimator::ExtinctionProb => {
            let p = total.extinctions as f64 / config.trials as f64;
            (p, (p * (1.0 - p) / config.trials as f64).sqrt(), wilson_ci(total.extinctions, config.trials, 0.95)?)
        }
        _ => {
            let (m, se) = (total.values.mean(), total.values.std_error());
            (m, se, (m - Z95 * se, m + Z95 * se))
        }
    };
    Ok(EstimatorSummary {
        estimator: config.estimator,
        engine: config.engine,
        estimate,
        std_error,
        ci95,
        trials: config.trials,
        seed: config.seed,
        params: ParamsEcho::from(&config.params),
        histogram: (config.estimator == Estimator::FullWHistogram).then_some(total.histogram),
    })
}

/// Raw configuration file. Every field is optional so the file can be
/// layered over command-line values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub params: Option<ParamsFile>,
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub estimator: Option<Estimator>,
    #[serde(default)]
    pub engine: Option<Engine>,
    #[serde(default)]
    pub parallelism: Option<usize>,
    #[serde(default)]
    pub graph_file: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    #[serde(default)]
    pub n: Option<u64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub init_mode: Option<InitMode>,
}

impl ConfigFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Output of the exact oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactReport {
    pub params: ParamsEcho,
    pub distribution: Vec<f64>,
    pub expected_w: f64,
    pub expected_c: f64,
    pub extinction_probability: f64,
}

impl ExactReport {
    pub fn new(params: &Params<f64>, dist: ExactDistribution<f64>) -> Self {
        Self {
            params: ParamsEcho::from(params),
            distribution: dist.probabilities,
            expected_w: dist.expected_w,
            expected_c: dist.expected_c,
            extinction_probability: dist.extinction_probability,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub const TRAJECTORY_HEADER: &str = "jump_index,time,r,b,w,event";

/// Writes one row per jump, holding the state right after the jump. Times
/// use Rust's shortest round-trip float formatting.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory<f64>, mut out: W) -> Result<()> {
    let mut buf = String::with_capacity(32 * (traj.jumps.len() + 1));
    buf.push_str(TRAJECTORY_HEADER);
    buf.push('\n');
    for (i, j) in traj.jumps.iter().enumerate() {
        let _ = writeln!(
            buf,
            "{},{},{},{},{},{}",
            i + 1,
            j.time,
            j.state.r,
            j.state.b,
            j.state.w,
            j.event.as_str()
        );
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

/// Parses a trajectory CSV. The initial state is recovered by undoing the
/// first jump.
pub fn parse_trajectory_csv(text: &str) -> Result<Trajectory<f64>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(TRAJECTORY_HEADER) {
        return Err(Error::InvalidInput(format!("expected header `{TRAJECTORY_HEADER}`")));
    }
    let mut jumps = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::InvalidInput(format!("row {}: {what}", k + 1));
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(bad("expected 6 fields"));
        }
        let index: usize = fields[0].parse().map_err(|_| bad("jump_index"))?;
        if index != jumps.len() + 1 {
            return Err(bad("jump_index out of sequence"));
        }
        let time: f64 = fields[1].parse().map_err(|_| bad("time"))?;
        let num = |s: &str, name: &str| s.parse::<u64>().map_err(|_| bad(name));
        let state = PopulationState::new(num(fields[2], "r")?, num(fields[3], "b")?, num(fields[4], "w")?);
        let event: EventKind = fields[5].parse()?;
        jumps.push(Jump { time, state, event });
    }
    let first = jumps.first().ok_or_else(|| Error::InvalidInput("trajectory has no jumps".into()))?;
    let s = first.state;
    let initial = match first.event {
        EventKind::Grow if s.r >= 1 => PopulationState::new(s.r - 1, s.b, s.w + 1),
        EventKind::Chase | EventKind::Convert if s.b >= 1 => PopulationState::new(s.r + 1, s.b - 1, s.w),
        _ => return Err(Error::InvalidInput("first row is not reachable by one jump".into())),
    };
    Ok(Trajectory { initial, jumps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(engine: Engine, estimator: Estimator, trials: u64) -> ExperimentConfig {
        let params = Params::standard(20, 1.0, 2.0).unwrap();
        ExperimentConfig::new(params, trials, 1234, estimator, engine).unwrap()
    }

    #[test]
    fn parallelism_does_not_change_summary() {
        for engine in Engine::ALL {
            let c = config(engine, Estimator::FullWHistogram, 1000);
            let one = estimate(&c).unwrap();
            let eight = estimate(&c.clone().with_parallelism(8).unwrap()).unwrap();
            assert_eq!(one.to_json().unwrap(), eight.to_json().unwrap());
            assert_eq!(one.histogram.as_ref().unwrap().iter().sum::<u64>(), 1000);
        }
    }

    #[test]
    fn trials_are_replayable_in_isolation() {
        let c = config(Engine::Chain, Estimator::ExpectedW, 600);
        let all = run_trials(&c).unwrap();
        let mut rng = StreamRng::for_trial(c.seed, 517);
        assert_eq!(all[517], run_engine(Engine::Chain, &c.params, None, &mut rng).unwrap());
    }

    #[test]
    fn summary_json_round_trips() {
        let s = estimate(&config(Engine::Coupling, Estimator::ConversionOverLogN, 300)).unwrap();
        let text = s.to_json().unwrap();
        let back = EstimatorSummary::from_json(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_json().unwrap(), text);
        assert!(s.ci95.0 <= s.estimate && s.estimate <= s.ci95.1);
    }

    #[test]
    fn extinction_interval_is_wilson() {
        let s = estimate(&config(Engine::Chain, Estimator::ExtinctionProb, 500)).unwrap();
        let k = (s.estimate * 500.0).round() as u64;
        assert_eq!(s.ci95, wilson_ci(k, 500, 0.95).unwrap());
    }

    #[test]
    fn config_validation() {
        let p = Params::standard(1, 1.0, 1.0).unwrap();
        assert!(ExperimentConfig::new(p.clone(), 10, 0, Estimator::TauOverLogN, Engine::Chain).is_err());
        assert!(ExperimentConfig::new(p.clone(), 0, 0, Estimator::ExpectedW, Engine::Chain).is_err());
        let c = ExperimentConfig::new(p, 10, 0, Estimator::ExpectedW, Engine::Chain).unwrap();
        assert!(c.with_parallelism(0).is_err());
        let k = Params::kortchemski(5, 1.0, 0.0).unwrap();
        assert!(ExperimentConfig::new(k, 10, 0, Estimator::ExpectedW, Engine::Coupling).is_err());
    }

    #[test]
    fn csv_round_trip_preserves_trajectory() {
        let params = Params::standard(100, 1.0, 4.0).unwrap();
        for engine in Engine::ALL {
            let traj = record_engine(engine, &params, None, &mut StreamRng::new(9)).unwrap();
            let mut buf = Vec::new();
            write_trajectory_csv(&traj, &mut buf).unwrap();
            let parsed = parse_trajectory_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
            assert_eq!(parsed, traj);
            parsed.validate().unwrap();
        }
    }

    #[test]
    fn csv_parser_rejects_garbage() {
        assert!(parse_trajectory_csv("nope\n").is_err());
        assert!(parse_trajectory_csv(&format!("{TRAJECTORY_HEADER}\n")).is_err());
        assert!(parse_trajectory_csv(&format!("{TRAJECTORY_HEADER}\n2,0.1,2,0,3,grow\n")).is_err());
        assert!(parse_trajectory_csv(&format!("{TRAJECTORY_HEADER}\n1,0.1,2,0,3,jump\n")).is_err());
    }

    #[test]
    fn config_file_parses() {
        let text = r#"{"params": {"n": 30, "lambda": 1.0, "alpha": 2.0, "init_mode": "standard"},
                      "trials": 100, "seed": 7, "estimator": "expected-w", "engine": "coupling"}"#;
        let cfg: ConfigFile = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.params.unwrap().n, Some(30));
        assert_eq!(cfg.estimator, Some(Estimator::ExpectedW));
        assert!(serde_json::from_str::<ConfigFile>(r#"{"bogus": 1}"#).is_err());
    }
}
