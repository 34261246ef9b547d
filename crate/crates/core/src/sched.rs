// SPDX-License-Identifier: Apache-2.0

//! Runtime prediction and thread allocation across the three engines.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::{mpsc, Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bdd::{bdd_check, BddLimits};
use crate::check::{verify_witness, Budget, CheckResult, UnknownReason};
use crate::es::{es_check, MAX_ES_PIS};
use crate::features::{
    cost_estimates, extract_features, FeatureVector, FEATURE_NAMES, NUM_FEATURES,
};
use crate::sat::dnc::{dnc_solve, DncConfig};
use crate::sat::{sat_check, SolveLimits};
use crate::sweep::{Obligation, ObligationSolver, SubMiter};
use crate::xag::Xag;

pub const ES_ALPHA: f64 = 0.0003;
pub const ES_BETA: f64 = 23.0;
/// Upper bound of every learned prediction, in seconds.
pub const PREDICTION_CAP: f64 = 1200.0;
/// Feasibility margin for ES against the cutoff.
pub const GAMMA: f64 = 1.5;
/// BDD runs only when predicted faster than this fraction of SAT.
pub const PHI: f64 = 0.8;
/// Per-thread ES time below which only ES runs.
pub const EASY_ES_SECONDS: f64 = 0.1;

/// `alpha * gates * 2^(pis - beta)` seconds.
pub fn analytic_es_time(num_gates: usize, num_pis: usize, alpha: f64, beta: f64) -> f64 {
    alpha * num_gates as f64 * (num_pis as f64 - beta).exp2()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model JSON: {0}")]
    Json(String),
    #[error("unsupported model version {0}")]
    Version(u32),
    #[error("feature names do not match the extractor")]
    FeatureNames,
    #[error("tree {tree} node {node}: feature index {index} out of range")]
    FeatureOutOfRange {
        tree: usize,
        node: usize,
        index: usize,
    },
    #[error("tree {tree} node {node}: child {child} out of range")]
    ChildOutOfRange {
        tree: usize,
        node: usize,
        child: usize,
    },
    #[error("tree {tree} is cyclic")]
    Cyclic { tree: usize },
    #[error("tree {tree} has no nodes")]
    EmptyTree { tree: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split {
        f: usize,
        t: f64,
        l: usize,
        r: usize,
    },
    Leaf {
        v: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

/// Regression tree ensemble: `base_score` plus one leaf per tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub version: u32,
    pub feature_names: Vec<String>,
    pub base_score: f64,
    pub trees: Vec<Tree>,
}

impl TreeEnsemble {
    /// An ensemble over the extractor's feature order.
    pub fn new(base_score: f64, trees: Vec<Tree>) -> TreeEnsemble {
        TreeEnsemble {
            version: 1,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            base_score,
            trees,
        }
    }

    pub fn from_json(text: &str) -> Result<TreeEnsemble, ModelError> {
        let m: TreeEnsemble =
            serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ensemble serializes")
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.version != 1 {
            return Err(ModelError::Version(self.version));
        }
        if self.feature_names.len() != NUM_FEATURES
            || self
                .feature_names
                .iter()
                .zip(FEATURE_NAMES)
                .any(|(a, b)| a != b)
        {
            return Err(ModelError::FeatureNames);
        }
        for (ti, tree) in self.trees.iter().enumerate() {
            if tree.nodes.is_empty() {
                return Err(ModelError::EmptyTree { tree: ti });
            }
            for (ni, n) in tree.nodes.iter().enumerate() {
                if let TreeNode::Split { f, l, r, .. } = *n {
                    if f >= NUM_FEATURES {
                        return Err(ModelError::FeatureOutOfRange {
                            tree: ti,
                            node: ni,
                            index: f,
                        });
                    }
                    for child in [l, r] {
                        if child >= tree.nodes.len() {
                            return Err(ModelError::ChildOutOfRange {
                                tree: ti,
                                node: ni,
                                child,
                            });
                        }
                    }
                }
            }
            // every node reachable from the root at most once
            let mut seen = vec![false; tree.nodes.len()];
            let mut stack = vec![0usize];
            while let Some(i) = stack.pop() {
                if seen[i] {
                    return Err(ModelError::Cyclic { tree: ti });
                }
                seen[i] = true;
                if let TreeNode::Split { l, r, .. } = tree.nodes[i] {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        Ok(())
    }

    /// Raw sum over trees; go left iff `feature < threshold`.
    pub fn raw_predict(&self, f: &FeatureVector) -> f64 {
        let mut sum = self.base_score;
        for tree in &self.trees {
            let mut i = 0;
            loop {
                match tree.nodes[i] {
                    TreeNode::Leaf { v } => {
                        sum += v;
                        break;
                    }
                    TreeNode::Split { f: fi, t, l, r } => {
                        i = if f.0[fi] < t { l } else { r };
                    }
                }
            }
        }
        sum
    }

    /// Prediction clamped to `[0, 1200]` seconds.
    pub fn predict(&self, f: &FeatureVector) -> f64 {
        let p = self.raw_predict(f);
        if p.is_nan() {
            return PREDICTION_CAP;
        }
        p.clamp(0.0, PREDICTION_CAP)
    }
}

/// Learned models; either may be absent.
#[derive(Clone, Debug, Default)]
pub struct Models {
    pub sat: Option<TreeEnsemble>,
    pub bdd: Option<TreeEnsemble>,
}

/// One-core runtime estimates in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Predictions {
    pub t_sat: f64,
    pub t_bdd: f64,
    pub t_es: f64,
}

/// Estimates for `xag`. Without a SAT model, `t_sat` is the analytic ES
/// formula with `cost_SAT` in place of `2^PIs`; without a BDD model BDD is
/// never predicted to win. `t_es` is infinite above the ES input ceiling.
pub fn predict_times(xag: &Xag, models: &Models, features: Option<&FeatureVector>) -> Predictions {
    let (cost_sat, _) = cost_estimates(xag);
    let t_es = if xag.num_pis() > MAX_ES_PIS {
        f64::INFINITY
    } else {
        analytic_es_time(xag.num_gates(), xag.num_pis(), ES_ALPHA, ES_BETA)
    };
    let t_sat = match (&models.sat, features) {
        (Some(m), Some(f)) => m.predict(f),
        _ => (ES_ALPHA * xag.num_gates() as f64 * cost_sat as f64 * (-ES_BETA).exp2())
            .min(PREDICTION_CAP),
    };
    let t_bdd = match (&models.bdd, features) {
        (Some(m), Some(f)) => m.predict(f),
        _ => f64::INFINITY,
    };
    Predictions { t_sat, t_bdd, t_es }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SingleEngine {
    Sat,
    Es,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EnginePlan {
    pub sat_threads: usize,
    pub es_threads: usize,
    pub bdd_threads: usize,
    /// Reserved for an accelerator-backed ES; always false.
    pub es_on_device: bool,
    pub selected_single: Option<SingleEngine>,
}

impl EnginePlan {
    fn new(sat: usize, es: usize, bdd: usize) -> EnginePlan {
        EnginePlan {
            sat_threads: sat,
            es_threads: es,
            bdd_threads: bdd,
            es_on_device: false,
            selected_single: None,
        }
    }

    fn single(engine: SingleEngine, threads: usize) -> EnginePlan {
        let mut p = match engine {
            SingleEngine::Sat => EnginePlan::new(threads, 0, 0),
            SingleEngine::Es => EnginePlan::new(0, threads, 0),
        };
        p.selected_single = Some(engine);
        p
    }

    pub fn total(&self) -> usize {
        self.sat_threads + self.es_threads + self.bdd_threads
    }
}

/// `cost_SAT / cost_ES`.
pub fn score_xor(cost_sat: u64, cost_es: u64) -> f64 {
    cost_sat as f64 / cost_es.max(1) as f64
}

/// Distributes `n` threads over the engines.
///
/// `score_xor` only matters for `n = 1`; SAT is chosen iff it is at most 1.
pub fn plan_allocation(n: usize, p: &Predictions, cutoff: f64, score_xor: f64) -> EnginePlan {
    assert!(n >= 1);
    let nf = n as f64;
    if p.t_es / nf <= EASY_ES_SECONDS {
        return if n == 1 {
            EnginePlan::single(SingleEngine::Es, 1)
        } else {
            EnginePlan::new(0, n, 0)
        };
    }
    if n == 1 {
        let sat = score_xor <= 1.0 || !p.t_es.is_finite();
        return EnginePlan::single(
            if sat {
                SingleEngine::Sat
            } else {
                SingleEngine::Es
            },
            1,
        );
    }
    let es_on = p.t_es / nf <= GAMMA * cutoff;
    let bdd_on = p.t_bdd < PHI * p.t_sat;
    let rho = p.t_sat / (nf * p.t_es);
    let (mut sat, mut es, mut bdd);
    if rho < 0.5 {
        es = usize::from(es_on);
        bdd = usize::from(bdd_on && n - es >= 2);
        sat = n - es - bdd;
    } else if rho <= 2.0 {
        sat = n.div_ceil(2);
        es = n / 2;
        if !es_on {
            sat += es;
            es = 0;
        }
        bdd = 0;
        if bdd_on && sat >= 2 {
            sat -= 1;
            bdd = 1;
        }
    } else {
        sat = 1;
        bdd = usize::from(bdd_on && n >= 3);
        es = n - sat - bdd;
        if !es_on {
            sat += es;
            es = 0;
        }
    }
    EnginePlan::new(sat, es, bdd)
}

/// Even SAT/ES split with one SAT thread moved to BDD.
pub fn plan_portfolio_even(n: usize) -> EnginePlan {
    if n == 1 {
        return EnginePlan::single(SingleEngine::Sat, 1);
    }
    let mut sat = n.div_ceil(2);
    let es = n / 2;
    let mut bdd = 0;
    if sat >= 2 {
        sat -= 1;
        bdd = 1;
    }
    EnginePlan::new(sat, es, bdd)
}

/// All threads to the engine favoured by `score_xor`.
pub fn plan_select_only(n: usize, score_xor: f64, num_pis: usize) -> EnginePlan {
    if score_xor <= 1.0 || num_pis > MAX_ES_PIS {
        EnginePlan::single(SingleEngine::Sat, n)
    } else {
        EnginePlan::single(SingleEngine::Es, n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Sat,
    Es,
    Bdd,
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineKind::Sat => "sat",
            EngineKind::Es => "es",
            EngineKind::Bdd => "bdd",
        })
    }
}

impl FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sat" => Ok(EngineKind::Sat),
            "es" => Ok(EngineKind::Es),
            "bdd" => Ok(EngineKind::Bdd),
            _ => Err(format!("unknown engine '{s}'")),
        }
    }
}

/// How obligations are assigned to engines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Auto,
    Only(EngineKind),
    PortfolioEven,
    SelectOnly,
}

#[derive(Clone)]
pub struct EngineSettings {
    pub bdd_limits: BddLimits,
    /// Conflict limit for candidate pairs (not for the final obligation).
    pub pair_conflicts: Option<u64>,
    pub dnc_split_interval: Duration,
    pub sat_log: Option<Arc<Mutex<dyn Write + Send>>>,
}

impl Default for EngineSettings {
    fn default() -> Self {
        EngineSettings {
            bdd_limits: BddLimits::default(),
            pair_conflicts: Some(20_000),
            dnc_split_interval: Duration::from_secs(1),
            sat_log: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EngineOutcome {
    pub engine: EngineKind,
    pub threads: usize,
    pub result: CheckResult,
    pub wall: Duration,
}

#[derive(Clone, Debug)]
pub struct DispatchResult {
    pub result: CheckResult,
    pub winner: Option<EngineKind>,
    pub outcomes: Vec<EngineOutcome>,
}

fn run_engine(
    kind: EngineKind,
    threads: usize,
    xag: &Xag,
    obligation: Obligation,
    settings: &EngineSettings,
    budget: &Budget,
) -> CheckResult {
    match kind {
        EngineKind::Es => es_check(xag, threads, budget),
        EngineKind::Bdd => bdd_check(xag, settings.bdd_limits, budget),
        EngineKind::Sat => {
            if obligation == Obligation::Final && threads >= 2 {
                let cfg = DncConfig {
                    threads,
                    split_interval: settings.dnc_split_interval,
                    log: settings.sat_log.clone(),
                    ..DncConfig::default()
                };
                dnc_solve(xag, &cfg, budget).verdict
            } else {
                let limits = SolveLimits {
                    budget: budget.clone(),
                    max_conflicts: match obligation {
                        Obligation::Pair => settings.pair_conflicts,
                        Obligation::Final => None,
                    },
                };
                sat_check(xag, &limits).0
            }
        }
    }
}

/// Runs the engines enabled in `plan` concurrently. The first definitive
/// verdict (a counterexample only after it evaluates to 1) cancels the rest.
pub fn dispatch(
    xag: &Xag,
    plan: &EnginePlan,
    obligation: Obligation,
    settings: &EngineSettings,
    budget: &Budget,
) -> DispatchResult {
    let engines: Vec<(EngineKind, usize)> = [
        (EngineKind::Sat, plan.sat_threads),
        (EngineKind::Es, plan.es_threads),
        (EngineKind::Bdd, plan.bdd_threads),
    ]
    .into_iter()
    .filter(|&(_, t)| t > 0)
    .collect();
    let race = budget.child();
    let mut outcomes = Vec::new();
    let mut winner: Option<(EngineKind, CheckResult)> = None;
    if engines.len() == 1 {
        let (kind, threads) = engines[0];
        let start = Instant::now();
        let r = run_engine(kind, threads, xag, obligation, settings, &race);
        outcomes.push(EngineOutcome {
            engine: kind,
            threads,
            result: r.clone(),
            wall: start.elapsed(),
        });
        if r.is_definitive() {
            winner = Some((kind, r));
        }
    } else {
        std::thread::scope(|scope| {
            let (tx, rx) = mpsc::channel();
            for &(kind, threads) in &engines {
                let tx = tx.clone();
                let b = race.child();
                scope.spawn(move || {
                    let start = Instant::now();
                    let r = run_engine(kind, threads, xag, obligation, settings, &b);
                    let _ = tx.send(EngineOutcome {
                        engine: kind,
                        threads,
                        result: r,
                        wall: start.elapsed(),
                    });
                });
            }
            drop(tx);
            for o in rx {
                let ok = match &o.result {
                    CheckResult::Equivalent => true,
                    CheckResult::Counterexample(w) => verify_witness(xag, w),
                    CheckResult::Unknown(_) => false,
                };
                if ok && winner.is_none() {
                    winner = Some((o.engine, o.result.clone()));
                    race.cancel.cancel();
                }
                outcomes.push(o);
            }
        });
    }
    match winner {
        Some((kind, result)) => DispatchResult {
            result,
            winner: Some(kind),
            outcomes,
        },
        None => {
            let why = budget
                .stop_reason()
                .or_else(|| {
                    outcomes.iter().find_map(|o| match o.result {
                        CheckResult::Unknown(w) if w != UnknownReason::Cancelled => Some(w),
                        _ => None,
                    })
                })
                .unwrap_or(UnknownReason::Cancelled);
            DispatchResult {
                result: CheckResult::Unknown(why),
                winner: None,
                outcomes,
            }
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EngineUsage {
    pub calls: usize,
    pub wins: usize,
    pub seconds: f64,
    pub thread_sum: usize,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct DispatchStats {
    pub obligations: usize,
    pub unknown: usize,
    pub easy_case: usize,
    pub sat: EngineUsage,
    pub es: EngineUsage,
    pub bdd: EngineUsage,
}

impl DispatchStats {
    fn usage(&mut self, e: EngineKind) -> &mut EngineUsage {
        match e {
            EngineKind::Sat => &mut self.sat,
            EngineKind::Es => &mut self.es,
            EngineKind::Bdd => &mut self.bdd,
        }
    }
}

#[derive(Clone)]
pub struct SchedulerConfig {
    pub threads: usize,
    pub mode: Mode,
    /// Global cutoff in seconds, used by the ES feasibility rule.
    pub cutoff: f64,
    pub models: Models,
    pub seed: u64,
    pub engines: EngineSettings,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            threads: 1,
            mode: Mode::Auto,
            cutoff: 3600.0,
            models: Models::default(),
            seed: 1,
            engines: EngineSettings::default(),
        }
    }
}

/// The engine layer driven by the sweep.
pub struct Scheduler {
    pub config: SchedulerConfig,
    pub stats: DispatchStats,
}

impl Scheduler {
    pub fn new(config: SchedulerConfig) -> Scheduler {
        Scheduler {
            config,
            stats: DispatchStats::default(),
        }
    }

    /// The plan this scheduler would use for `xag`.
    pub fn plan_for(&self, xag: &Xag, id: usize) -> EnginePlan {
        let n = self.config.threads.max(1);
        let (cost_sat, cost_es) = cost_estimates(xag);
        let sx = score_xor(cost_sat, cost_es);
        match self.config.mode {
            Mode::Only(EngineKind::Sat) => EnginePlan::single(SingleEngine::Sat, n),
            Mode::Only(EngineKind::Es) => EnginePlan::single(SingleEngine::Es, n),
            Mode::Only(EngineKind::Bdd) => EnginePlan::new(0, 0, 1),
            Mode::PortfolioEven => plan_portfolio_even(n),
            Mode::SelectOnly => plan_select_only(n, sx, xag.num_pis()),
            Mode::Auto => {
                let m = &self.config.models;
                let features = (m.sat.is_some() || m.bdd.is_some())
                    .then(|| extract_features(xag, feature_seed(self.config.seed, id)));
                let p = predict_times(xag, m, features.as_ref());
                plan_allocation(n, &p, self.config.cutoff, sx)
            }
        }
    }
}

/// Simulation seed for the features of sub-miter `id`.
pub fn feature_seed(seed: u64, id: usize) -> u64 {
    seed ^ (id as u64)
        .wrapping_add(1)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

impl ObligationSolver for Scheduler {
    fn check(&mut self, sm: &SubMiter, obligation: Obligation, budget: &Budget) -> CheckResult {
        let plan = self.plan_for(&sm.circuit, sm.id);
        if plan.es_threads == self.config.threads.max(1) && self.config.mode == Mode::Auto {
            self.stats.easy_case += 1;
        }
        let r = dispatch(&sm.circuit, &plan, obligation, &self.config.engines, budget);
        self.stats.obligations += 1;
        if !r.result.is_definitive() {
            self.stats.unknown += 1;
        }
        for o in &r.outcomes {
            let u = self.stats.usage(o.engine);
            u.calls += 1;
            u.seconds += o.wall.as_secs_f64();
            u.thread_sum += o.threads;
        }
        if let Some(w) = r.winner {
            self.stats.usage(w).wins += 1;
        }
        r.result
    }
}
