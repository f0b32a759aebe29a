//! The lag-resolved network model and its unrolled, time-indexed DAG.

mod dsep;
mod oracle;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{LaggedVar, TimeSeriesPanel};

pub use dsep::{d_separated, unroll, Node, UnrolledDag};
pub use oracle::{oracle_causal_entropy, DSeparationOracle};

/// One directed, lagged edge `src(t - lag) → dst(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub lag: usize,
    pub weight: f64,
}

/// Weight tensor of a lagged causal network.
///
/// `weight(src, dst, lag)` is stored at `[src][dst][lag - 1]`; there is no
/// lag-0 plane. Zero means no edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Ucn {
    n: usize,
    tau_max: usize,
    names: Vec<String>,
    weights: Vec<f64>,
}

impl Ucn {
    pub fn empty(n: usize, tau_max: usize, names: Vec<String>) -> Result<Self> {
        if n == 0 || tau_max == 0 {
            return Err(Error::Shape(format!(
                "network needs n >= 1 and tau_max >= 1, got n={n}, tau_max={tau_max}"
            )));
        }
        if names.len() != n {
            return Err(Error::Shape(format!("{} names for {n} variables", names.len())));
        }
        Ok(Ucn {
            n,
            tau_max,
            names,
            weights: vec![0.0; n * n * tau_max],
        })
    }

    pub fn from_edges(n: usize, tau_max: usize, names: Vec<String>, edges: &[Edge]) -> Result<Self> {
        let mut ucn = Ucn::empty(n, tau_max, names)?;
        for e in edges {
            ucn.set_weight(e.src, e.dst, e.lag, e.weight)?;
        }
        Ok(ucn)
    }

    /// Builds a network from a dense `[src][dst][lag - 1]` tensor.
    pub fn from_tensor(n: usize, tau_max: usize, names: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        let mut ucn = Ucn::empty(n, tau_max, names)?;
        if weights.len() != ucn.weights.len() {
            return Err(Error::Shape(format!(
                "tensor has {} entries, expected {}",
                weights.len(),
                ucn.weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::Shape(format!("weights must be finite and >= 0, found {w}")));
        }
        ucn.weights = weights;
        Ok(ucn)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tau_max(&self) -> usize {
        self.tau_max
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// The dense tensor in `[src][dst][lag - 1]` row-major order.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn cell(&self, src: usize, dst: usize, lag: usize) -> usize {
        (src * self.n + dst) * self.tau_max + (lag - 1)
    }

    fn check_cell(&self, src: usize, dst: usize, lag: usize) -> Result<()> {
        if src >= self.n || dst >= self.n || lag == 0 || lag > self.tau_max {
            return Err(Error::Shape(format!(
                "edge ({src} -> {dst}, lag {lag}) outside n={}, tau_max={}",
                self.n, self.tau_max
            )));
        }
        Ok(())
    }

    pub fn weight(&self, src: usize, dst: usize, lag: usize) -> f64 {
        self.weights[self.cell(src, dst, lag)]
    }

    pub fn set_weight(&mut self, src: usize, dst: usize, lag: usize, weight: f64) -> Result<()> {
        self.check_cell(src, dst, lag)?;
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::Shape(format!(
                "edge ({src} -> {dst}, lag {lag}) has invalid weight {weight}"
            )));
        }
        let c = self.cell(src, dst, lag);
        self.weights[c] = weight;
        Ok(())
    }

    pub fn has_edge(&self, src: usize, dst: usize, lag: usize) -> bool {
        self.weight(src, dst, lag) > 0.0
    }

    /// Edges in canonical order: ascending `(dst, lag, src)`.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for dst in 0..self.n {
            for lag in 1..=self.tau_max {
                for src in 0..self.n {
                    let weight = self.weight(src, dst, lag);
                    if weight > 0.0 {
                        out.push(Edge { src, dst, lag, weight });
                    }
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }

    /// Lagged parents of `dst`, ascending `(lag, var)`.
    pub fn parents(&self, dst: usize) -> Vec<LaggedVar> {
        let mut out = Vec::new();
        for lag in 1..=self.tau_max {
            for src in 0..self.n {
                if self.has_edge(src, dst, lag) {
                    out.push(LaggedVar::new(src, lag));
                }
            }
        }
        out
    }

    /// Same network in a tensor of a different depth. Fails if an edge would
    /// be cut off.
    pub fn with_tau_max(&self, tau_max: usize) -> Result<Self> {
        let mut out = Ucn::empty(self.n, tau_max, self.names.clone())?;
        for e in self.edges() {
            if e.lag > tau_max {
                return Err(Error::Shape(format!(
                    "edge ({} -> {}, lag {}) does not fit tau_max={tau_max}",
                    e.src, e.dst, e.lag
                )));
            }
            out.set_weight(e.src, e.dst, e.lag, e.weight)?;
        }
        Ok(out)
    }

    /// Names from a panel, for networks discovered on it.
    pub fn names_from(panel: &TimeSeriesPanel) -> Vec<String> {
        panel.names().to_vec()
    }

    pub fn to_json(&self) -> NetworkJson {
        NetworkJson {
            n: self.n,
            tau_max: self.tau_max,
            names: self.names.clone(),
            edges: self.edges(),
        }
    }

    /// Canonical JSON text; byte-identical for equal networks.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("network serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: NetworkJson = serde_json::from_str(text)?;
        doc.try_into()
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

    /// One line per edge, for logs and CLI summaries.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        for e in self.edges() {
            let _ = writeln!(
                s,
                "{} -> {} (lag {}): {:.4}",
                self.names[e.src], self.names[e.dst], e.lag, e.weight
            );
        }
        s
    }
}

/// Serialized network: `{"n", "tau_max", "names", "edges": [{src, dst, lag, weight}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkJson {
    pub n: usize,
    pub tau_max: usize,
    pub names: Vec<String>,
    pub edges: Vec<Edge>,
}

impl TryFrom<NetworkJson> for Ucn {
    type Error = Error;

    fn try_from(doc: NetworkJson) -> Result<Self> {
        let mut ucn = Ucn::empty(doc.n, doc.tau_max, doc.names)?;
        for e in &doc.edges {
            if ucn.check_cell(e.src, e.dst, e.lag).is_ok() && ucn.has_edge(e.src, e.dst, e.lag) {
                return Err(Error::Shape(format!(
                    "duplicate edge ({} -> {}, lag {})",
                    e.src, e.dst, e.lag
                )));
            }
            ucn.set_weight(e.src, e.dst, e.lag, e.weight)?;
        }
        Ok(ucn)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        TimeSeriesPanel::default_names(n)
    }

    #[test]
    fn canonical_edge_order() {
        let edges = [
            Edge { src: 2, dst: 0, lag: 1, weight: 0.5 },
            Edge { src: 0, dst: 1, lag: 2, weight: 0.1 },
            Edge { src: 1, dst: 0, lag: 1, weight: 0.3 },
            Edge { src: 0, dst: 0, lag: 2, weight: 0.2 },
        ];
        let ucn = Ucn::from_edges(3, 2, names(3), &edges).unwrap();
        let order: Vec<_> = ucn.edges().iter().map(|e| (e.dst, e.lag, e.src)).collect();
        assert_eq!(order, vec![(0, 1, 1), (0, 1, 2), (0, 2, 0), (1, 2, 0)]);
        assert_eq!(ucn.parents(0), vec![LaggedVar::new(1, 1), LaggedVar::new(2, 1), LaggedVar::new(0, 2)]);
    }

    #[test]
    fn json_roundtrip_is_bit_exact() {
        let w = 0.1 + 0.2;
        let ucn = Ucn::from_edges(
            2,
            3,
            names(2),
            &[Edge { src: 0, dst: 1, lag: 3, weight: w }, Edge { src: 1, dst: 1, lag: 1, weight: 1e-300 }],
        )
        .unwrap();
        let text = ucn.to_json_string();
        let back = Ucn::from_json_str(&text).unwrap();
        assert_eq!(back.weight(0, 1, 3).to_bits(), w.to_bits());
        assert_eq!(back, ucn);
        assert_eq!(back.to_json_string(), text);
    }

    #[test]
    fn rejects_out_of_range_and_negative() {
        let mut ucn = Ucn::empty(2, 2, names(2)).unwrap();
        assert!(ucn.set_weight(0, 1, 0, 1.0).is_err());
        assert!(ucn.set_weight(0, 1, 3, 1.0).is_err());
        assert!(ucn.set_weight(2, 1, 1, 1.0).is_err());
        assert!(ucn.set_weight(0, 1, 1, -0.5).is_err());
        let dup = r#"{"n":1,"tau_max":1,"names":["a"],"edges":[
            {"src":0,"dst":0,"lag":1,"weight":1.0},{"src":0,"dst":0,"lag":1,"weight":2.0}]}"#;
        assert!(Ucn::from_json_str(dup).is_err());
    }

    #[test]
    fn resize_depth() {
        let ucn = Ucn::from_edges(2, 2, names(2), &[Edge { src: 0, dst: 1, lag: 2, weight: 1.0 }]).unwrap();
        let deep = ucn.with_tau_max(5).unwrap();
        assert_eq!(deep.edges(), ucn.edges());
        assert!(ucn.with_tau_max(1).is_err());
    }
}
