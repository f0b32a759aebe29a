//! Nearest-neighbor estimates of differential entropy and conditional mutual
//! information, all under the max-norm.
//!
//! [`causal_entropy`] is the count-based conditional estimator: a single
//! k-th neighbor radius is found in the joint `(X, Y, Z)` space and the
//! neighbors strictly inside that radius are counted in the `(X, Z)`, `(Y, Z)`
//! and `Z` projections,
//!
//! ```text
//! I(X;Y|Z) = ψ(k) − ⟨ψ(n_xz + 1) + ψ(n_yz + 1) − ψ(n_z + 1)⟩
//! ```
//!
//! With an empty `Z` this is the usual k-NN mutual information estimate.
//!
//! Ties under the max-norm are broken by adding `jitter_scale · u` to every
//! coordinate, where `u ∈ [-½, ½)` is a hash of `(seed, value)`. Because the
//! perturbation depends on the value and not on its position, estimates are
//! invariant under row permutations and under swapping `X` and `Y`.

mod kdtree;
mod scan;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use kdtree::KdTree;
use scan::Projection;

pub use kdtree::BRUTE_FORCE_BELOW as BRUTE_FORCE_THRESHOLD;

/// Default neighbor count.
pub const DEFAULT_K: usize = 4;
/// Default tie-breaking amplitude, relative to unit-variance data.
pub const DEFAULT_JITTER: f64 = 1e-10;

const TREE_MAX_DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub k: usize,
    pub jitter_scale: f64,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            k: DEFAULT_K,
            jitter_scale: DEFAULT_JITTER,
            seed: 0,
        }
    }
}

impl EstimatorConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        EstimatorConfig { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("neighbor count k must be at least 1".into()));
        }
        if !(self.jitter_scale >= 0.0) || !self.jitter_scale.is_finite() {
            return Err(Error::Config(format!(
                "jitter_scale must be a finite nonnegative number, got {}",
                self.jitter_scale
            )));
        }
        Ok(())
    }

    fn check_samples(&self, m: usize) -> Result<()> {
        self.validate()?;
        if m <= self.k {
            return Err(Error::InsufficientSamples { k: self.k, m });
        }
        Ok(())
    }
}

/// 64-bit finalizer from SplitMix64.
#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic perturbation of a single value.
#[inline]
fn jittered(v: f64, config: &EstimatorConfig) -> f64 {
    if config.jitter_scale == 0.0 {
        return v;
    }
    let h = mix64(config.seed ^ mix64(v.to_bits()));
    let u = (h >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
    v + config.jitter_scale * u
}

/// Interleaves `columns` into a row-major, jittered matrix.
fn stack(columns: &[&[f64]], config: &EstimatorConfig) -> Vec<f64> {
    let m = columns.first().map_or(0, |c| c.len());
    let d = columns.len();
    let mut rows = vec![0.0; m * d];
    for (j, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            rows[i * d + j] = jittered(v, config);
        }
    }
    rows
}

/// `ψ(n)` for `n = 0..=max` (index 0 unused), via `ψ(n + 1) = ψ(n) + 1/n`.
fn digamma_table(max: usize) -> Vec<f64> {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut t = Vec::with_capacity(max + 1);
    t.push(f64::NAN);
    if max >= 1 {
        t.push(-EULER_GAMMA);
    }
    for n in 1..max {
        t.push(t[n] + 1.0 / n as f64);
    }
    t
}

/// Digamma at a positive integer.
pub fn digamma_int(n: usize) -> f64 {
    assert!(n >= 1, "digamma is undefined at 0");
    digamma_table(n)[n]
}

/// Order-independent sum: the terms are sorted before accumulation.
fn stable_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

fn check_columns(columns: &[&[f64]]) -> Result<usize> {
    let m = columns.first().map_or(0, |c| c.len());
    if let Some(c) = columns.iter().find(|c| c.len() != m) {
        return Err(Error::Shape(format!(
            "columns have mismatched lengths {} and {m}",
            c.len()
        )));
    }
    Ok(m)
}

/// Kozachenko–Leonenko entropy estimate in nats for the `m × d` sample given
/// as `d` columns of length `m`.
pub fn kl_entropy(columns: &[&[f64]], config: &EstimatorConfig) -> Result<f64> {
    let d = columns.len();
    if d == 0 {
        return Err(Error::Shape("entropy needs at least one dimension".into()));
    }
    let m = check_columns(columns)?;
    config.check_samples(m)?;
    let rows = stack(columns, config);
    let mut logs = Vec::with_capacity(m);
    for (i, eps) in kth_distances(&rows, d, config.k).into_iter().enumerate() {
        if !(eps > 0.0) {
            return Err(Error::ZeroDistance { index: i });
        }
        logs.push(eps.ln());
    }
    let psi = digamma_table(m);
    let mean_log = stable_sum(logs) / m as f64;
    Ok(psi[m] - psi[config.k] + d as f64 * std::f64::consts::LN_2 + d as f64 * mean_log)
}

/// Conditional mutual information `I(X;Y|Z)` in nats, the causal entropy of
/// `Y` on `X` given `Z`. `z` may be empty. The raw estimate is returned and
/// can be slightly negative.
pub fn causal_entropy(x: &[f64], y: &[f64], z: &[&[f64]], config: &EstimatorConfig) -> Result<f64> {
    let mut cols: Vec<&[f64]> = Vec::with_capacity(2 + z.len());
    cols.push(x);
    cols.push(y);
    cols.extend_from_slice(z);
    let m = check_columns(&cols)?;
    config.check_samples(m)?;

    let dim = cols.len();
    let dz = z.len();
    let joint = stack(&cols, config);
    let eps = kth_distances(&joint, dim, config.k);

    let psi = digamma_table(m);
    let mut terms = Vec::with_capacity(m);
    if dz == 0 {
        let by_x = Projection::new(&joint, dim, 0);
        let by_y = Projection::new(&joint, dim, 1);
        for (i, &e) in eps.iter().enumerate() {
            let n_x = by_x.count_on_axis(i, e);
            let n_y = by_y.count_on_axis(i, e);
            terms.push(psi[n_x + 1] + psi[n_y + 1] - psi[m]);
        }
    } else {
        // Every marginal count needs the Z distance below eps, so one scan
        // over the slab of the first Z coordinate serves all three.
        let by_z = Projection::new(&joint, dim, 2);
        for (i, &e) in eps.iter().enumerate() {
            let (q, rows) = by_z.slab(i, e);
            let (mut n_xz, mut n_yz, mut n_z) = (0, 0, 0);
            for row in rows {
                let in_z = scan::chebyshev(&row[3..], &q[3..]) < e;
                n_z += usize::from(in_z);
                n_xz += usize::from(in_z & ((row[0] - q[0]).abs() < e));
                n_yz += usize::from(in_z & ((row[1] - q[1]).abs() < e));
            }
            terms.push(psi[n_xz + 1] + psi[n_yz + 1] - psi[n_z + 1]);
        }
    }
    Ok(psi[config.k] - stable_sum(terms) / m as f64)
}

/// Max-norm distance from every sample to its `k`-th nearest other sample.
/// A k-d tree (a plain scan below [`BRUTE_FORCE_THRESHOLD`] samples) is
/// used in one or two dimensions; beyond that its pruning degrades and a
/// slab scan along one sorted coordinate is several times faster.
fn kth_distances(rows: &[f64], dim: usize, k: usize) -> Vec<f64> {
    let m = rows.len() / dim;
    if dim <= TREE_MAX_DIM || m < BRUTE_FORCE_THRESHOLD {
        let tree = KdTree::new(rows, dim);
        rows.chunks_exact(dim)
            .enumerate()
            .map(|(i, q)| tree.kth_distance(q, i, k))
            .collect()
    } else {
        let proj = Projection::new(rows, dim, 0);
        let mut best = Vec::with_capacity(k);
        (0..m).map(|i| proj.kth_distance(i, k, &mut best)).collect()
    }
}

/// `I(X;Y|Z)` as `H(X,Z) + H(Y,Z) − H(Z) − H(X,Y,Z)` from four independent
/// entropy estimates. Used to cross-check [`causal_entropy`].
pub fn causal_entropy_by_decomposition(
    x: &[f64],
    y: &[f64],
    z: &[&[f64]],
    config: &EstimatorConfig,
) -> Result<f64> {
    let mut xz = vec![x];
    xz.extend_from_slice(z);
    let mut yz = vec![y];
    yz.extend_from_slice(z);
    let mut xyz = vec![x, y];
    xyz.extend_from_slice(z);
    let h_xz = kl_entropy(&xz, config)?;
    let h_yz = kl_entropy(&yz, config)?;
    let h_xyz = kl_entropy(&xyz, config)?;
    let h_z = if z.is_empty() { 0.0 } else { kl_entropy(z, config)? };
    Ok(h_xz + h_yz - h_z - h_xyz)
}
