//! Scoring predicted networks against ground truth.

mod granger;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Ucn;

pub use granger::{granger_scores, GRANGER_RIDGE};

/// Outcome counts over the `n × n × tau_max` decision cells (or `n × n`
/// when lags are collapsed).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// `tp / (tp + fn)`, 0 when there are no positives.
    pub fn tpr(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `fp / (fp + tn)`, 0 when there are no negatives.
    pub fn fpr(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }

    fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn check_same_shape(predicted: &Ucn, truth: &Ucn) -> Result<()> {
    if predicted.n() != truth.n() || predicted.tau_max() != truth.tau_max() {
        return Err(Error::Comparison(format!(
            "predicted network is {}x{}x{}, truth is {}x{}x{}",
            predicted.n(),
            predicted.n(),
            predicted.tau_max(),
            truth.n(),
            truth.n(),
            truth.tau_max()
        )));
    }
    if predicted.names() != truth.names() {
        return Err(Error::Comparison(format!(
            "variable order differs: {:?} vs {:?}",
            predicted.names(),
            truth.names()
        )));
    }
    Ok(())
}

/// Counts lag-resolved cells: `(src, dst, lag)` is positive iff its weight > 0.
pub fn confusion(predicted: &Ucn, truth: &Ucn) -> Result<Confusion> {
    check_same_shape(predicted, truth)?;
    let mut c = Confusion::default();
    for (p, t) in predicted.weights().iter().zip(truth.weights()) {
        c.add(*p > 0.0, *t > 0.0);
    }
    Ok(c)
}

/// Counts `(src, dst)` adjacencies, positive if any lag is.
pub fn confusion_collapsed(predicted: &Ucn, truth: &Ucn) -> Result<Confusion> {
    check_same_shape(predicted, truth)?;
    let n = truth.n();
    let mut c = Confusion::default();
    for src in 0..n {
        for dst in 0..n {
            let any = |u: &Ucn| (1..=u.tau_max()).any(|lag| u.has_edge(src, dst, lag));
            c.add(any(predicted), any(truth));
        }
    }
    Ok(c)
}

/// Pads two networks over the same variables to a common depth.
pub fn align_depths(a: &Ucn, b: &Ucn) -> Result<(Ucn, Ucn)> {
    let depth = a.tau_max().max(b.tau_max());
    Ok((a.with_tau_max(depth)?, b.with_tau_max(depth)?))
}

/// Per-cell edge scores, `[src][dst][lag - 1]` row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTensor {
    pub n: usize,
    pub tau_max: usize,
    pub scores: Vec<f64>,
}

impl ScoreTensor {
    pub fn new(n: usize, tau_max: usize, scores: Vec<f64>) -> Result<Self> {
        let t = ScoreTensor { n, tau_max, scores };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scores.len() != self.n * self.n * self.tau_max {
            return Err(Error::Shape(format!(
                "score tensor has {} entries, expected {}",
                self.scores.len(),
                self.n * self.n * self.tau_max
            )));
        }
        if let Some(s) = self.scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::Shape(format!("score tensor contains non-finite value {s}")));
        }
        Ok(())
    }

    pub fn from_ucn(ucn: &Ucn) -> Self {
        ScoreTensor {
            n: ucn.n(),
            tau_max: ucn.tau_max(),
            scores: ucn.weights().to_vec(),
        }
    }

    pub fn get(&self, src: usize, dst: usize, lag: usize) -> f64 {
        self.scores[(src * self.n + dst) * self.tau_max + lag - 1]
    }

    /// Zero-padded to a deeper tensor.
    pub fn with_tau_max(&self, tau_max: usize) -> Result<Self> {
        if tau_max < self.tau_max {
            return Err(Error::Shape(format!(
                "cannot shrink score tensor from tau_max={} to {tau_max}",
                self.tau_max
            )));
        }
        let mut scores = vec![0.0; self.n * self.n * tau_max];
        for src in 0..self.n {
            for dst in 0..self.n {
                for lag in 1..=self.tau_max {
                    scores[(src * self.n + dst) * tau_max + lag - 1] = self.get(src, dst, lag);
                }
            }
        }
        Ok(ScoreTensor {
            n: self.n,
            tau_max,
            scores,
        })
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string(self).expect("scores serialize");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let t: ScoreTensor = serde_json::from_str(text)?;
        t.validate()?;
        Ok(t)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// Sorted by `(fpr, tpr)`, from `(0, 0)` to `(1, 1)`.
    pub points: Vec<RocPoint>,
    pub auc: f64,
    /// Set when every score was equal after scaling; the curve is the diagonal.
    pub degenerate: bool,
}

/// ROC curve of `scores` against the edges of `truth`.
///
/// Negative scores are clamped to 0 and the tensor is min-max scaled to
/// `[0, 1]`. A cell is predicted positive when its scaled score is at or
/// above the cutoff; cutoffs are `thresholds` evenly spaced values in
/// `[0, 1]`, every distinct scaled score, and one value above 1. The area is
/// the trapezoid sum over the sorted points.
pub fn roc(scores: &ScoreTensor, truth: &Ucn, thresholds: usize) -> Result<RocCurve> {
    scores.validate()?;
    if scores.n != truth.n() || scores.tau_max != truth.tau_max() {
        return Err(Error::Comparison(format!(
            "score tensor is {}x{}x{}, truth is {}x{}x{}",
            scores.n,
            scores.n,
            scores.tau_max,
            truth.n(),
            truth.n(),
            truth.tau_max()
        )));
    }
    let labels: Vec<bool> = truth.weights().iter().map(|w| *w > 0.0).collect();
    let positives = labels.iter().filter(|l| **l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Comparison(
            "ROC needs at least one positive and one negative cell in the truth".into(),
        ));
    }

    let clamped: Vec<f64> = scores.scores.iter().map(|s| s.max(0.0)).collect();
    let lo = clamped.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = clamped.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let degenerate = !(hi > lo);
    if degenerate {
        log::warn!("all scores are equal; ROC is the diagonal");
    }
    let scaled: Vec<f64> = if degenerate {
        vec![0.0; clamped.len()]
    } else {
        clamped.iter().map(|s| (s - lo) / (hi - lo)).collect()
    };

    let mut cutoffs: Vec<f64> = scaled.clone();
    if thresholds > 1 {
        cutoffs.extend((0..thresholds).map(|i| i as f64 / (thresholds - 1) as f64));
    } else if thresholds == 1 {
        cutoffs.push(0.5);
    }
    cutoffs.push(f64::INFINITY);
    cutoffs.sort_by(f64::total_cmp);
    cutoffs.dedup();

    // Counts at each cutoff via one descending sweep over the scored cells.
    let mut cells: Vec<(f64, bool)> = scaled.iter().copied().zip(labels.iter().copied()).collect();
    cells.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut counts: Vec<(usize, usize)> = Vec::with_capacity(cutoffs.len());
    let (mut tp, mut fp, mut next) = (0usize, 0usize, 0usize);
    for &c in cutoffs.iter().rev() {
        while next < cells.len() && cells[next].0 >= c {
            if cells[next].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            next += 1;
        }
        counts.push((fp, tp));
    }
    counts.sort_unstable();
    counts.dedup();
    let points: Vec<RocPoint> = counts
        .iter()
        .map(|&(fp, tp)| RocPoint {
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
        })
        .collect();
    let auc = points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum::<f64>();
    Ok(RocCurve {
        points,
        auc,
        degenerate,
    })
}

/// Summary written by the evaluate command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tpr: f64,
    pub fpr: f64,
    pub auc: Option<f64>,
    pub seeds: usize,
}

/// Median of a nonempty sample (mean of the two middle values for even sizes).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}
