//! Synthetic lagged structural systems with an optional deterministic
//! environment ramp that makes every downstream variable nonstationary.

use std::collections::HashSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Ucn;
use crate::timeseries::TimeSeriesPanel;

/// Trajectories leaving `[-1e6, 1e6]` are rejected.
pub const DIVERGENCE_LIMIT: f64 = 1e6;
/// Coefficient magnitudes allowed in a spec.
pub const COEFF_BAND: (f64, f64) = (0.1, 0.5);
/// Maximum lag drawn by [`random_spec`].
pub const RANDOM_MAX_LAG: usize = 3;
/// Sample length used to screen random specs for stability.
pub const SCREEN_STEPS: usize = 2000;
const RANDOM_RETRIES: usize = 200;

/// Environment ramp endpoints used by the example system.
pub const EXAMPLE_ENV: EnvDriver = EnvDriver { start: 1.3, end: 8.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    /// `f(x) = x`
    Identity,
    /// `f(x) = x + 5x²·exp(−x²/20)`
    Bump,
}

impl Coupling {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Coupling::Identity => x,
            Coupling::Bump => x + 5.0 * x * x * (-x * x / 20.0).exp(),
        }
    }
}

/// A linear ramp from `start` to `end` across the generated length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvDriver {
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecEdge {
    pub src: usize,
    pub dst: usize,
    pub lag: usize,
    pub coeff: f64,
    pub func: Coupling,
}

/// Innovation standard deviation: one value for all variables or one each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseStd {
    Shared(f64),
    PerVariable(Vec<f64>),
}

impl Default for NoiseStd {
    fn default() -> Self {
        NoiseStd::Shared(1.0)
    }
}

impl NoiseStd {
    fn get(&self, var: usize) -> f64 {
        match self {
            NoiseStd::Shared(s) => *s,
            NoiseStd::PerVariable(v) => v[var],
        }
    }
}

/// Generative definition of a system of `n` observed variables.
///
/// Variables are indexed `0..n`; when an environment driver is present it
/// has index `n`, may appear only as an edge source, and is appended as the
/// last panel column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralSpec {
    pub n: usize,
    pub env: Option<EnvDriver>,
    #[serde(default)]
    pub noise_std: NoiseStd,
    pub edges: Vec<SpecEdge>,
    #[serde(default)]
    pub seed: u64,
}

impl StructuralSpec {
    pub fn total_vars(&self) -> usize {
        self.n + usize::from(self.env.is_some())
    }

    pub fn max_lag(&self) -> usize {
        self.edges.iter().map(|e| e.lag).max().unwrap_or(1)
    }

    pub fn names(&self) -> Vec<String> {
        let mut names = TimeSeriesPanel::default_names(self.n);
        if self.env.is_some() {
            names.push("env".into());
        }
        names
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if let Some(env) = &self.env {
            if !env.start.is_finite() || !env.end.is_finite() {
                return bad("environment endpoints must be finite".into());
            }
        }
        match &self.noise_std {
            NoiseStd::Shared(s) if !(*s >= 0.0) || !s.is_finite() => {
                return bad(format!("noise_std must be finite and >= 0, got {s}"))
            }
            NoiseStd::PerVariable(v) if v.len() != self.n => {
                return bad(format!("noise_std has {} entries for {} variables", v.len(), self.n))
            }
            NoiseStd::PerVariable(v) if v.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) => {
                return bad("noise_std entries must be finite and >= 0".into())
            }
            _ => {}
        }
        let mut seen = HashSet::new();
        for e in &self.edges {
            if e.lag == 0 {
                return bad(format!("edge {} -> {} has lag 0", e.src, e.dst));
            }
            if e.src >= self.total_vars() {
                return bad(format!("edge source {} out of range", e.src));
            }
            if e.dst >= self.n {
                return bad(format!(
                    "edge destination {} is not an observed variable (n={})",
                    e.dst, self.n
                ));
            }
            let mag = e.coeff.abs();
            if !(COEFF_BAND.0..=COEFF_BAND.1).contains(&mag) {
                return bad(format!(
                    "edge {} -> {} (lag {}) coefficient {} outside |c| in [{}, {}]",
                    e.src, e.dst, e.lag, e.coeff, COEFF_BAND.0, COEFF_BAND.1
                ));
            }
            if !seen.insert((e.src, e.dst, e.lag)) {
                return bad(format!("duplicate edge {} -> {} (lag {})", e.src, e.dst, e.lag));
            }
        }
        Ok(())
    }

    /// Ground-truth network over all panel columns (env included), with
    /// weight `|coeff|` per edge and depth equal to the largest lag.
    pub fn truth(&self) -> Result<Ucn> {
        let mut ucn = Ucn::empty(self.total_vars(), self.max_lag(), self.names())?;
        for e in &self.edges {
            ucn.set_weight(e.src, e.dst, e.lag, e.coeff.abs())?;
        }
        Ok(ucn)
    }

    /// Adds an environment ramp feeding each of `targets` at lag 1.
    pub fn with_env_driver(mut self, env: EnvDriver, targets: &[usize], coeff: f64) -> Self {
        let env_idx = self.n;
        self.env = Some(env);
        for &dst in targets {
            self.edges.push(SpecEdge {
                src: env_idx,
                dst,
                lag: 1,
                coeff,
                func: Coupling::Identity,
            });
        }
        self
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("spec serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: StructuralSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }
}

/// Simulates `t` steps of `spec` and returns the panel (env column last,
/// when present) with its ground-truth network.
pub fn generate(spec: &StructuralSpec, t: usize, seed: u64) -> Result<(TimeSeriesPanel, Ucn)> {
    generate_with(spec, t, seed, true)
}

/// As [`generate`]; with `observe_env = false` the env column and its
/// edges are left out of the returned panel and network.
pub fn generate_with(spec: &StructuralSpec, t: usize, seed: u64, observe_env: bool) -> Result<(TimeSeriesPanel, Ucn)> {
    spec.validate()?;
    let max_lag = spec.max_lag();
    if t <= max_lag {
        return Err(Error::InsufficientData(format!(
            "T={t} must exceed the largest lag {max_lag}"
        )));
    }
    let columns = simulate(spec, t, seed)?;
    let truth = spec.truth()?;
    if spec.env.is_some() && !observe_env {
        let names = spec.names()[..spec.n].to_vec();
        let panel = TimeSeriesPanel::from_columns(columns[..spec.n].to_vec(), names.clone())?;
        let mut hidden = Ucn::empty(spec.n, truth.tau_max(), names)?;
        for e in truth.edges().into_iter().filter(|e| e.src < spec.n) {
            hidden.set_weight(e.src, e.dst, e.lag, e.weight)?;
        }
        return Ok((panel, hidden));
    }
    let panel = TimeSeriesPanel::from_columns(columns, spec.names())?;
    Ok((panel, truth))
}

fn simulate(spec: &StructuralSpec, t: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let n = spec.n;
    let total = spec.total_vars();
    let max_lag = spec.max_lag();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = vec![vec![0.0; t]; total];

    if let Some(env) = spec.env {
        let span = (t - 1).max(1) as f64;
        for (s, v) in cols[n].iter_mut().enumerate() {
            *v = env.start + (env.end - env.start) * s as f64 / span;
        }
    }
    for s in 0..max_lag {
        for col in cols.iter_mut().take(n) {
            col[s] = StandardNormal.sample(&mut rng);
        }
    }
    let mut incoming: Vec<Vec<&SpecEdge>> = vec![Vec::new(); n];
    for e in &spec.edges {
        incoming[e.dst].push(e);
    }
    for s in max_lag..t {
        for i in 0..n {
            let drive: f64 = incoming[i]
                .iter()
                .map(|e| e.coeff * e.func.apply(cols[e.src][s - e.lag]))
                .sum();
            let noise: f64 = StandardNormal.sample(&mut rng);
            let v = drive + spec.noise_std.get(i) * noise;
            if !(v.abs() <= DIVERGENCE_LIMIT) {
                return Err(Error::Unstable {
                    limit: DIVERGENCE_LIMIT,
                    step: s,
                    var: i,
                    spec: serde_json::to_string(spec).unwrap_or_default(),
                });
            }
            cols[i][s] = v;
        }
    }
    Ok(cols)
}

/// The five-column example system: observed `X1..X4` plus an environment
/// ramp from 1.3 to 8.0 that drives `X1` and `X4`.
///
/// | edge        | lag | coeff | coupling |
/// |-------------|-----|-------|----------|
/// | env → X1    | 1   | 0.3   | identity |
/// | X1 → X1     | 1   | 0.2   | bump     |
/// | env → X4    | 1   | 0.3   | identity |
/// | X1 → X2     | 1   | 0.4   | bump     |
/// | X2 → X2     | 2   | 0.3   | identity |
/// | X2 → X3     | 1   | 0.4   | bump     |
/// | X3 → X3     | 1   | 0.3   | identity |
/// | X3 → X4     | 2   | 0.4   | bump     |
/// | X4 → X4     | 1   | 0.4   | identity |
pub fn example_network() -> StructuralSpec {
    const ENV: usize = 4;
    let edge = |src, dst, lag, coeff, func| SpecEdge { src, dst, lag, coeff, func };
    use Coupling::{Bump, Identity};
    StructuralSpec {
        n: 4,
        env: Some(EXAMPLE_ENV),
        noise_std: NoiseStd::Shared(1.0),
        edges: vec![
            edge(ENV, 0, 1, 0.3, Identity),
            edge(0, 0, 1, 0.2, Bump),
            edge(ENV, 3, 1, 0.3, Identity),
            edge(0, 1, 1, 0.4, Bump),
            edge(1, 1, 2, 0.3, Identity),
            edge(1, 2, 1, 0.4, Bump),
            edge(2, 2, 1, 0.3, Identity),
            edge(2, 3, 2, 0.4, Bump),
            edge(3, 3, 1, 0.4, Identity),
        ],
        seed: 0,
    }
}

/// Random system over `n` variables with `2n + extra` distinct edges,
/// `extra ∈ [0, n]`, lags in `[1, 3]`, coefficient magnitudes uniform in the
/// stability band with random sign, and couplings split evenly between
/// identity and bump. Candidates are screened by simulating
/// [`SCREEN_STEPS`] steps and redrawn when they diverge.
pub fn random_spec(n: usize, seed: u64) -> Result<StructuralSpec> {
    if n < 2 {
        return Err(Error::InvalidSpec(format!("random specs need n >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_err = String::new();
    for _ in 0..RANDOM_RETRIES {
        let n_edges = 2 * n + rng.random_range(0..=n);
        let mut cells = HashSet::new();
        let mut edges = Vec::with_capacity(n_edges);
        while edges.len() < n_edges {
            let src = rng.random_range(0..n);
            let dst = rng.random_range(0..n);
            let lag = rng.random_range(1..=RANDOM_MAX_LAG);
            if !cells.insert((src, dst, lag)) {
                continue;
            }
            let mag = rng.random_range(COEFF_BAND.0..=COEFF_BAND.1);
            let coeff = if rng.random_bool(0.5) { mag } else { -mag };
            let func = if rng.random_bool(0.5) {
                Coupling::Identity
            } else {
                Coupling::Bump
            };
            edges.push(SpecEdge { src, dst, lag, coeff, func });
        }
        edges.sort_by_key(|e| (e.dst, e.lag, e.src));
        let spec = StructuralSpec {
            n,
            env: None,
            noise_std: NoiseStd::Shared(1.0),
            edges,
            seed,
        };
        match simulate(&spec, SCREEN_STEPS, seed) {
            Ok(_) => return Ok(spec),
            Err(e) => last_err = e.to_string(),
        }
    }
    Err(Error::GenerationFailed {
        attempts: RANDOM_RETRIES,
        reason: last_err,
    })
}

/// Difference between the means of the first and second halves of
/// `column`, in units of the pooled standard error. An odd middle value is
/// left out. Values above 3 are taken as evidence of a shifted mean.
pub fn half_mean_shift(column: &[f64]) -> f64 {
    let h = column.len() / 2;
    if h < 2 {
        return 0.0;
    }
    let (a, b) = (&column[..h], &column[column.len() - h..]);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let ss = |v: &[f64], m: f64| v.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    let pooled = (ss(a, ma) + ss(b, mb)) / (2 * h - 2) as f64;
    let se = (pooled * 2.0 / h as f64).sqrt();
    if se == 0.0 {
        return if ma == mb { 0.0 } else { f64::INFINITY };
    }
    (ma - mb).abs() / se
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_function_values() {
        assert_eq!(Coupling::Bump.apply(0.0), 0.0);
        let x: f64 = 2.0;
        assert!((Coupling::Bump.apply(x) - (2.0 + 20.0 * (-0.2f64).exp())).abs() < 1e-12);
        assert_eq!(Coupling::Identity.apply(-3.5), -3.5);
    }

    #[test]
    fn example_contains_documented_edges() {
        let spec = example_network();
        spec.validate().unwrap();
        let has = |src, dst, lag, coeff, func| {
            spec.edges
                .iter()
                .any(|e| e.src == src && e.dst == dst && e.lag == lag && e.coeff == coeff && e.func == func)
        };
        assert!(has(4, 0, 1, 0.3, Coupling::Identity));
        assert!(has(0, 0, 1, 0.2, Coupling::Bump));
        assert!(spec.edges.iter().any(|e| e.src == 4 && e.dst == 3 && e.lag == 1));
        // env is never a destination
        assert!(spec.edges.iter().all(|e| e.dst < 4));
        assert_eq!(spec.names(), vec!["X1", "X2", "X3", "X4", "env"]);
    }

    #[test]
    fn env_column_is_linear_ramp() {
        let (panel, truth) = generate(&example_network(), 2000, 7).unwrap();
        assert_eq!((panel.n_steps(), panel.n_vars()), (2000, 5));
        let env = panel.column(4);
        assert!((env[0] - 1.3).abs() < 1e-12);
        assert!((env[1999] - 8.0).abs() < 1e-12);
        let step = (8.0 - 1.3) / 1999.0;
        assert!(env.windows(2).all(|w| ((w[1] - w[0]) - step).abs() < 1e-12));
        assert_eq!(truth.weight(4, 0, 1), 0.3);
        assert_eq!(truth.n(), 5);
        for j in 0..4 {
            let col = panel.column(j);
            assert!(col.iter().all(|v| v.abs() < 100.0), "X{} out of range", j + 1);
        }
    }

    #[test]
    fn hidden_env_drops_column_and_edges() {
        let (panel, truth) = generate_with(&example_network(), 500, 1, false).unwrap();
        assert_eq!(panel.n_vars(), 4);
        assert_eq!(truth.n(), 4);
        assert_eq!(truth.edge_count(), example_network().edges.len() - 2);
    }

    #[test]
    fn pure_noise_variable() {
        let spec = StructuralSpec {
            n: 1,
            env: None,
            noise_std: NoiseStd::Shared(2.0),
            edges: vec![],
            seed: 0,
        };
        let (panel, truth) = generate(&spec, 4000, 3).unwrap();
        assert_eq!(truth.edge_count(), 0);
        let x = panel.column(0);
        let mean = x.iter().sum::<f64>() / 4000.0;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3999.0;
        assert!(mean.abs() < 0.1, "{mean}");
        assert!((var - 4.0).abs() < 0.3, "{var}");
        // lag-1 autocorrelation near zero
        let ac: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / (3999.0 * var);
        assert!(ac.abs() < 0.05, "{ac}");
    }

    #[test]
    fn seeds_control_output() {
        let spec = example_network();
        let (a, _) = generate(&spec, 300, 11).unwrap();
        let (b, _) = generate(&spec, 300, 11).unwrap();
        let (c, _) = generate(&spec, 300, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn random_spec_edge_counts() {
        for seed in 0..20 {
            let spec = random_spec(5, seed).unwrap();
            assert!((10..=15).contains(&spec.edges.len()), "{}", spec.edges.len());
            assert!(spec.edges.iter().all(|e| (1..=3).contains(&e.lag)));
            spec.validate().unwrap();
            let (panel, _) = generate(&spec, 2000, seed).unwrap();
            assert!(panel.columns().iter().flatten().all(|v| v.abs() <= DIVERGENCE_LIMIT));
        }
        assert_eq!(random_spec(2, 9).unwrap(), random_spec(2, 9).unwrap());
        assert!(random_spec(1, 0).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let edge = |src, dst| SpecEdge { src, dst, lag: 1, coeff: 0.5, func: Coupling::Identity };
        // Each variable sums four 0.5-weighted lag-1 inputs: spectral radius 2.
        let spec = StructuralSpec {
            n: 4,
            env: None,
            noise_std: NoiseStd::Shared(1.0),
            edges: (0..4).flat_map(|d| (0..4).map(move |s| edge(s, d))).collect(),
            seed: 0,
        };
        match generate(&spec, 2000, 0).unwrap_err() {
            Error::Unstable { spec, .. } => assert!(spec.contains("\"edges\"")),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn invalid_specs() {
        let mut spec = example_network();
        spec.edges[0].lag = 0;
        assert!(spec.validate().is_err());
        let mut spec = example_network();
        spec.edges[0].coeff = 0.9;
        assert!(spec.validate().is_err());
        let mut spec = example_network();
        spec.edges[0].dst = 4;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn spec_json_format() {
        let text = r#"{"n": 2, "env": {"start": 0.0, "end": 1.0}, "noise_std": 0.5,
            "edges": [{"src": 2, "dst": 0, "lag": 1, "coeff": 0.3, "func": "identity"},
                      {"src": 0, "dst": 1, "lag": 2, "coeff": -0.2, "func": "bump"}]}"#;
        let spec = StructuralSpec::from_json_str(text).unwrap();
        assert_eq!(spec.total_vars(), 3);
        assert_eq!(spec.edges[1].func, Coupling::Bump);
        let back = StructuralSpec::from_json_str(&spec.to_json_string()).unwrap();
        assert_eq!(back, spec);
        let no_env = r#"{"n": 1, "env": null, "noise_std": 1.0, "edges": []}"#;
        assert!(StructuralSpec::from_json_str(no_env).unwrap().env.is_none());
    }
}
