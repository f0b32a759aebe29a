//! Linear Granger-causality baseline: log residual-variance ratio between a
//! vector-autoregressive fit and the same fit with one lagged regressor left out.

use nalgebra::{DMatrix, DVector};

use super::ScoreTensor;
use crate::error::{Error, Result};
use crate::timeseries::TimeSeriesPanel;

/// Ridge penalty applied when the normal equations are singular or
/// numerically rank deficient.
pub const GRANGER_RIDGE: f64 = 1e-8;

/// Reciprocal condition bound (on the Cholesky diagonal) below which the
/// ridge fallback is used.
const RCOND_FLOOR: f64 = 1e-12;

/// `score[j][i][s] = max(0, ln(RSS_restricted / RSS_full))` where the full
/// model regresses `x_i(t)` on an intercept and every variable at lags
/// `1..=tau_max`, and the restricted model drops `x_j(t − s)`.
pub fn granger_scores(panel: &TimeSeriesPanel, tau_max: usize) -> Result<ScoreTensor> {
    let n = panel.n_vars();
    if tau_max == 0 {
        return Err(Error::Config("tau_max must be at least 1".into()));
    }
    let rows = panel.n_steps().saturating_sub(tau_max);
    let p = n * tau_max + 1;
    if rows <= p {
        return Err(Error::InsufficientData(format!(
            "least squares needs more than {p} aligned rows, have {rows}"
        )));
    }

    // Regressors are centered and scaled so the ridge penalty is unit-free.
    let mut x = DMatrix::<f64>::zeros(rows, p);
    x.column_mut(0).fill(1.0);
    for j in 0..n {
        for lag in 1..=tau_max {
            let c = 1 + j * tau_max + (lag - 1);
            let col = &panel.column(j)[tau_max - lag..panel.n_steps() - lag];
            let mean = col.iter().sum::<f64>() / rows as f64;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / rows as f64).sqrt();
            let sd = if sd > 0.0 { sd } else { 1.0 };
            for (r, v) in col.iter().enumerate() {
                x[(r, c)] = (v - mean) / sd;
            }
        }
    }
    let gram = x.transpose() * &x;

    let mut scores = vec![0.0; n * n * tau_max];
    let mut ridged = 0usize;
    for i in 0..n {
        let y = DVector::from_column_slice(&panel.column(i)[tau_max..]);
        let xty = x.transpose() * &y;
        let floor = 1e-12 * y.dot(&y).max(f64::MIN_POSITIVE);
        let all: Vec<usize> = (0..p).collect();
        let rss_full = rss(&x, &y, &gram, &xty, &all, &mut ridged)?.max(floor);
        for j in 0..n {
            for lag in 1..=tau_max {
                let drop = 1 + j * tau_max + (lag - 1);
                let keep: Vec<usize> = (0..p).filter(|&c| c != drop).collect();
                let rss_r = rss(&x, &y, &gram, &xty, &keep, &mut ridged)?.max(floor);
                scores[(j * n + i) * tau_max + lag - 1] = (rss_r / rss_full).ln().max(0.0);
            }
        }
    }
    if ridged > 0 {
        log::warn!(
            "{ridged} of {} least-squares fits had a rank-deficient lag design; used ridge penalty {GRANGER_RIDGE:e}",
            n * (n * tau_max + 1)
        );
    }
    ScoreTensor::new(n, tau_max, scores)
}

/// Residual sum of squares of the least-squares fit on columns `keep`.
fn rss(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    gram: &DMatrix<f64>,
    xty: &DVector<f64>,
    keep: &[usize],
    ridged: &mut usize,
) -> Result<f64> {
    let k = keep.len();
    let g = DMatrix::from_fn(k, k, |a, b| gram[(keep[a], keep[b])]);
    let rhs = DVector::from_fn(k, |a, _| xty[keep[a]]);
    let beta = match well_conditioned_solve(&g, &rhs) {
        Some(b) => b,
        None => {
            *ridged += 1;
            // Standardized columns give Gram diagonals of about `rows`.
            let mut ridged = g.clone();
            for d in 1..k {
                ridged[(d, d)] += GRANGER_RIDGE * x.nrows() as f64;
            }
            ridged
                .clone()
                .cholesky()
                .map(|c| c.solve(&rhs))
                .or_else(|| ridged.clone().lu().solve(&rhs))
                .ok_or_else(|| Error::InsufficientData("least-squares system is singular".into()))?
        }
    };
    let mut resid = y.clone();
    for (a, &c) in keep.iter().enumerate() {
        resid.axpy(-beta[a], &x.column(c), 1.0);
    }
    Ok(resid.dot(&resid))
}

fn well_conditioned_solve(g: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let chol = g.clone().cholesky()?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d.abs()), hi.max(d.abs())));
    if !(lo > 0.0) || (lo / hi).powi(2) < RCOND_FLOOR {
        return None;
    }
    Some(chol.solve(rhs))
}
