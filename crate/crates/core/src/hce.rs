//! Per-target parent search: a per-lag forward inclusion pass followed by a
//! backward pass that drops candidates the remaining set screens off.
//!
//! Targets are independent, so the network is assembled from `n` separate
//! searches that may run in parallel. Each target derives its estimator seed
//! from `(config.seed, target)`, so scheduling never affects the result.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{self, mix64, EstimatorConfig};
use crate::error::{Error, Result};
use crate::graph::Ucn;
use crate::timeseries::{standardize, LaggedVar, TimeSeriesPanel};

pub const DEFAULT_TAU_MAX: usize = 5;
pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_BETA: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HceConfig {
    pub tau_max: usize,
    /// Forward inclusion threshold, nats.
    pub alpha: f64,
    /// Backward removal threshold, nats.
    pub beta: f64,
    /// Estimator settings. The `seed` field is replaced per target.
    pub estimator: EstimatorConfig,
    pub parallel: bool,
    pub seed: u64,
}

impl Default for HceConfig {
    fn default() -> Self {
        HceConfig {
            tau_max: DEFAULT_TAU_MAX,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            estimator: EstimatorConfig::default(),
            parallel: true,
            seed: 0,
        }
    }
}

impl HceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau_max == 0 {
            return Err(Error::Config("tau_max must be at least 1".into()));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be a finite number >= 0, got {v}")));
            }
        }
        self.estimator.validate()
    }

    /// Estimator seed for one target's search.
    pub fn target_seed(&self, target: usize) -> u64 {
        mix64(self.seed ^ mix64(target as u64 ^ 0x5eed_0000_0000_0000))
    }
}

/// Lagged parents of one target with their causal entropy values (nats).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentSet {
    pub target: usize,
    pub parents: Vec<(LaggedVar, f64)>,
}

impl ParentSet {
    pub fn empty(target: usize) -> Self {
        ParentSet {
            target,
            parents: Vec::new(),
        }
    }

    pub fn vars(&self) -> Vec<LaggedVar> {
        self.parents.iter().map(|(v, _)| *v).collect()
    }

    pub fn contains(&self, v: LaggedVar) -> bool {
        self.parents.iter().any(|(p, _)| *p == v)
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }
}

/// Anything that can price `T(candidate → target | given)`.
pub trait EntropySource: Sync {
    fn n_vars(&self) -> usize;

    fn causal_entropy(&self, target: usize, candidate: LaggedVar, given: &[LaggedVar]) -> Result<f64>;
}

/// Nearest-neighbor estimates over one panel and a fixed alignment window.
#[derive(Debug, Clone)]
pub struct KsgSource<'a> {
    panel: &'a TimeSeriesPanel,
    tau_max: usize,
    config: HceConfig,
}

impl<'a> KsgSource<'a> {
    pub fn new(panel: &'a TimeSeriesPanel, config: &HceConfig) -> Result<Self> {
        config.validate()?;
        let rows = panel.n_steps().saturating_sub(config.tau_max);
        if rows <= config.estimator.k {
            return Err(Error::InsufficientData(format!(
                "T={} with tau_max={} leaves {rows} aligned rows; need more than k={}",
                panel.n_steps(),
                config.tau_max,
                config.estimator.k
            )));
        }
        Ok(KsgSource {
            panel,
            tau_max: config.tau_max,
            config: *config,
        })
    }
}

impl EntropySource for KsgSource<'_> {
    fn n_vars(&self) -> usize {
        self.panel.n_vars()
    }

    fn causal_entropy(&self, target: usize, candidate: LaggedVar, given: &[LaggedVar]) -> Result<f64> {
        let x = self.panel.target_column(target, self.tau_max)?;
        let y = self.panel.lagged_column(candidate, self.tau_max)?;
        let z = given
            .iter()
            .map(|&v| self.panel.lagged_column(v, self.tau_max))
            .collect::<Result<Vec<_>>>()?;
        let est = self.config.estimator.with_seed(self.config.target_seed(target));
        entropy::causal_entropy(x, y, &z, &est)
    }
}

/// One target's search state. Estimates are memoized on
/// (sorted conditioning set, candidate).
struct TargetSearch<'s, S: EntropySource + ?Sized> {
    source: &'s S,
    target: usize,
    cache: HashMap<(Vec<LaggedVar>, LaggedVar), f64>,
}

impl<'s, S: EntropySource + ?Sized> TargetSearch<'s, S> {
    fn new(source: &'s S, target: usize) -> Self {
        TargetSearch {
            source,
            target,
            cache: HashMap::new(),
        }
    }

    fn estimate(&mut self, candidate: LaggedVar, given: &[LaggedVar]) -> Result<f64> {
        let mut key = given.to_vec();
        key.sort_unstable();
        if let Some(&v) = self.cache.get(&(key.clone(), candidate)) {
            return Ok(v);
        }
        let v = self.source.causal_entropy(self.target, candidate, &key)?;
        self.cache.insert((key, candidate), v);
        Ok(v)
    }

    fn forward(&mut self, config: &HceConfig) -> Result<ParentSet> {
        let n = self.source.n_vars();
        let mut out = ParentSet::empty(self.target);
        for lag in 1..=config.tau_max {
            let mut z: Vec<LaggedVar> = (0..n).map(|j| LaggedVar::new(j, lag)).collect();
            for j in 0..n {
                let cand = LaggedVar::new(j, lag);
                let rest: Vec<LaggedVar> = z.iter().copied().filter(|&v| v != cand).collect();
                let value = self.estimate(cand, &rest)?;
                if value > config.alpha {
                    out.parents.push((cand, value));
                } else {
                    z.retain(|&v| v != cand);
                }
            }
        }
        Ok(out)
    }

    fn backward(&mut self, candidates: &ParentSet, config: &HceConfig) -> Result<ParentSet> {
        let mut order = candidates.vars();
        order.sort_by_key(LaggedVar::removal_key);
        order.dedup();
        let mut current = order.clone();
        let mut kept = Vec::with_capacity(order.len());
        for y in order {
            let rest: Vec<LaggedVar> = current.iter().copied().filter(|&v| v != y).collect();
            let value = self.estimate(y, &rest)?;
            if value < config.beta {
                current.retain(|&v| v != y);
            } else {
                kept.push((y, value));
            }
        }
        Ok(ParentSet {
            target: self.target,
            parents: kept,
        })
    }
}

fn check_target(source: &(impl EntropySource + ?Sized), target: usize) -> Result<()> {
    if target >= source.n_vars() {
        return Err(Error::Config(format!(
            "target {target} out of range for {} variables",
            source.n_vars()
        )));
    }
    Ok(())
}

/// Forward phase against an arbitrary estimate source.
pub fn forward_phase_with<S: EntropySource + ?Sized>(source: &S, target: usize, config: &HceConfig) -> Result<ParentSet> {
    config.validate()?;
    check_target(source, target)?;
    TargetSearch::new(source, target).forward(config)
}

/// Backward phase against an arbitrary estimate source.
pub fn backward_phase_with<S: EntropySource + ?Sized>(
    source: &S,
    target: usize,
    candidates: &ParentSet,
    config: &HceConfig,
) -> Result<ParentSet> {
    config.validate()?;
    check_target(source, target)?;
    if let Some((v, _)) = candidates.parents.iter().find(|(v, _)| v.lag == 0 || v.lag > config.tau_max) {
        return Err(Error::Config(format!("candidate {v} outside lags 1..={}", config.tau_max)));
    }
    TargetSearch::new(source, target).backward(candidates, config)
}

/// Candidate parents of `target`. For each lag independently the
/// conditioning set starts as every variable at that lag; a variable whose
/// causal entropy given the rest exceeds `alpha` becomes a candidate, any
/// other is dropped from the conditioning set before the next variable.
pub fn forward_phase(panel: &TimeSeriesPanel, target: usize, config: &HceConfig) -> Result<ParentSet> {
    forward_phase_with(&KsgSource::new(panel, config)?, target, config)
}

/// Visits candidates from the largest lag down (variables ascending within a
/// lag) and removes each one whose causal entropy given the current
/// remaining candidates is below `beta`. Survivors carry that value as their
/// weight. Going far-to-near matters when a driver is (nearly) deterministic,
/// e.g. a trend: all of its lags are then interchangeable, and the near-first
/// order would discard the true lag and keep the farthest.
pub fn backward_phase(
    panel: &TimeSeriesPanel,
    target: usize,
    candidates: &ParentSet,
    config: &HceConfig,
) -> Result<ParentSet> {
    backward_phase_with(&KsgSource::new(panel, config)?, target, candidates, config)
}

/// Both phases for one target, sharing one estimate cache.
pub fn search_target<S: EntropySource + ?Sized>(source: &S, target: usize, config: &HceConfig) -> Result<ParentSet> {
    config.validate()?;
    check_target(source, target)?;
    let mut search = TargetSearch::new(source, target);
    let candidates = search.forward(config)?;
    search.backward(&candidates, config)
}

/// Runs every target's search and stacks the parent sets into a network.
pub fn discover_with<S: EntropySource + ?Sized>(source: &S, names: Vec<String>, config: &HceConfig) -> Result<Ucn> {
    config.validate()?;
    let n = source.n_vars();
    let run = |target: usize| {
        search_target(source, target, config).map_err(|e| Error::Target {
            target,
            source: Box::new(e),
        })
    };
    let sets: Vec<ParentSet> = if config.parallel {
        (0..n).into_par_iter().map(run).collect::<Result<_>>()?
    } else {
        (0..n).map(run).collect::<Result<_>>()?
    };
    assemble(n, names, config.tau_max, &sets)
}

/// Builds the weight tensor from per-target parent sets.
pub fn assemble(n: usize, names: Vec<String>, tau_max: usize, sets: &[ParentSet]) -> Result<Ucn> {
    let mut ucn = Ucn::empty(n, tau_max, names)?;
    for set in sets {
        for &(v, w) in &set.parents {
            assert!(v.lag >= 1, "lag-0 edge produced for target {}", set.target);
            ucn.set_weight(v.var, set.target, v.lag, w.max(0.0))?;
        }
    }
    Ok(ucn)
}

/// Standardizes `panel` and recovers its lagged causal network.
pub fn discover(panel: &TimeSeriesPanel, config: &HceConfig) -> Result<Ucn> {
    let panel = standardize(panel)?;
    let source = KsgSource::new(&panel, config)?;
    discover_with(&source, panel.names().to_vec(), config)
}
