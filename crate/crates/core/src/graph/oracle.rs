use super::dsep::{d_separated, unroll, Node, UnrolledDag};
use super::Ucn;
use crate::error::{Error, Result};
use crate::hce::EntropySource;
use crate::timeseries::LaggedVar;

/// Ground-truth stand-in for the causal entropy estimate: `0` when
/// `candidate` and `target` are d-separated by `z`, `1` otherwise.
pub fn oracle_causal_entropy(dag: &UnrolledDag, target: Node, candidate: Node, z: &[Node]) -> Result<f64> {
    if candidate.time >= target.time {
        return Err(Error::TemporalOrder(format!(
            "candidate ({}, t={}) does not precede target ({}, t={})",
            candidate.var, candidate.time, target.var, target.time
        )));
    }
    Ok(if d_separated(dag, candidate, target, z)? { 0.0 } else { 1.0 })
}

/// An [`EntropySource`] that answers from the d-separation structure of a
/// known network instead of from data.
///
/// The target is placed at the last step of the unrolled window, so a lagged
/// variable `(var, lag)` is the node `(var, horizon - 1 - lag)`.
#[derive(Debug, Clone)]
pub struct DSeparationOracle {
    dag: UnrolledDag,
}

impl DSeparationOracle {
    /// Unrolls `truth` over `2 · tau_max + 1` steps.
    pub fn new(truth: &Ucn) -> Result<Self> {
        Self::with_horizon(truth, 2 * truth.tau_max() + 1)
    }

    pub fn with_horizon(truth: &Ucn, horizon: usize) -> Result<Self> {
        Ok(DSeparationOracle {
            dag: unroll(truth, horizon)?,
        })
    }

    pub fn dag(&self) -> &UnrolledDag {
        &self.dag
    }

    fn now(&self) -> usize {
        self.dag.horizon() - 1
    }

    fn node_of(&self, v: LaggedVar) -> Result<Node> {
        if v.lag == 0 || v.lag > self.now() {
            return Err(Error::WindowTooSmall {
                horizon: self.dag.horizon(),
                tau_max: v.lag,
            });
        }
        Ok(Node::new(v.var, self.now() - v.lag))
    }
}

impl EntropySource for DSeparationOracle {
    fn n_vars(&self) -> usize {
        self.dag.n_vars()
    }

    fn causal_entropy(&self, target: usize, candidate: LaggedVar, given: &[LaggedVar]) -> Result<f64> {
        let z = given.iter().map(|&v| self.node_of(v)).collect::<Result<Vec<_>>>()?;
        oracle_causal_entropy(&self.dag, Node::new(target, self.now()), self.node_of(candidate)?, &z)
    }
}
