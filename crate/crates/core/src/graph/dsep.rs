use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::Ucn;
use crate::error::{Error, Result};

/// A variable at an absolute time step of the unrolled window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Node {
    pub var: usize,
    pub time: usize,
}

impl Node {
    pub fn new(var: usize, time: usize) -> Self {
        Node { var, time }
    }
}

/// The network repeated at every step of a finite window `[0, horizon)`.
#[derive(Debug, Clone)]
pub struct UnrolledDag {
    n: usize,
    horizon: usize,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

/// Materializes arcs `(src, t - lag) → (dst, t)` for every edge and every
/// `t` with `t - lag >= 0`.
pub fn unroll(ucn: &Ucn, horizon: usize) -> Result<UnrolledDag> {
    let tau_max = ucn.tau_max();
    if horizon <= tau_max {
        return Err(Error::WindowTooSmall { horizon, tau_max });
    }
    let n = ucn.n();
    let size = n * horizon;
    let mut parents = vec![Vec::new(); size];
    let mut children = vec![Vec::new(); size];
    let edges = ucn.edges();
    for t in 0..horizon {
        for e in edges.iter().filter(|e| e.lag <= t) {
            let from = (t - e.lag) * n + e.src;
            let to = t * n + e.dst;
            parents[to].push(from);
            children[from].push(to);
        }
    }
    Ok(UnrolledDag {
        n,
        horizon,
        parents,
        children,
    })
}

impl UnrolledDag {
    /// Builds a DAG directly from arcs over `n × horizon` nodes. Every arc must
    /// point strictly forward in time.
    pub fn from_arcs(n: usize, horizon: usize, arcs: &[(Node, Node)]) -> Result<Self> {
        let size = n * horizon;
        let mut dag = UnrolledDag {
            n,
            horizon,
            parents: vec![Vec::new(); size],
            children: vec![Vec::new(); size],
        };
        for &(a, b) in arcs {
            let (ia, ib) = (dag.id(a)?, dag.id(b)?);
            if a.time >= b.time {
                return Err(Error::TemporalOrder(format!(
                    "arc ({},{}) -> ({},{}) does not go forward in time",
                    a.var, a.time, b.var, b.time
                )));
            }
            dag.parents[ib].push(ia);
            dag.children[ia].push(ib);
        }
        Ok(dag)
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn id(&self, node: Node) -> Result<usize> {
        if node.var >= self.n || node.time >= self.horizon {
            return Err(Error::UnknownNode {
                var: node.var,
                time: node.time,
            });
        }
        Ok(node.time * self.n + node.var)
    }

    pub fn node(&self, id: usize) -> Node {
        Node::new(id % self.n, id / self.n)
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.len()).map(|id| self.node(id))
    }

    pub fn parents_of(&self, node: Node) -> Result<Vec<Node>> {
        let id = self.id(node)?;
        let mut out: Vec<Node> = self.parents[id].iter().map(|&p| self.node(p)).collect();
        out.sort();
        Ok(out)
    }

    pub fn children_of(&self, node: Node) -> Result<Vec<Node>> {
        let id = self.id(node)?;
        let mut out: Vec<Node> = self.children[id].iter().map(|&c| self.node(c)).collect();
        out.sort();
        Ok(out)
    }

    pub fn arcs(&self) -> Vec<(Node, Node)> {
        let mut out: Vec<_> = (0..self.len())
            .flat_map(|to| self.parents[to].iter().map(move |&from| (from, to)))
            .map(|(a, b)| (self.node(a), self.node(b)))
            .collect();
        out.sort();
        out
    }

    /// Kahn's algorithm; `None` if a cycle exists.
    pub fn topological_order(&self) -> Option<Vec<Node>> {
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..self.len()).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(v) = queue.pop_front() {
            order.push(self.node(v));
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        (order.len() == self.len()).then_some(order)
    }

    /// Ids of `seeds` and all their ancestors.
    fn ancestors(&self, seeds: &[usize]) -> Vec<bool> {
        let mut mark = vec![false; self.len()];
        let mut stack: Vec<usize> = seeds.to_vec();
        while let Some(v) = stack.pop() {
            if !mark[v] {
                mark[v] = true;
                stack.extend(&self.parents[v]);
            }
        }
        mark
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Dir {
    /// Arrived from a child, moving against arc direction.
    Up,
    /// Arrived from a parent, moving along arc direction.
    Down,
}

/// Whether every path between `x` and `y` is blocked by `z`.
///
/// Reachability over (node, direction) states: a chain or fork node passes
/// the trail unless it is in `z`; a collider passes it only if the node or
/// one of its descendants is in `z`.
pub fn d_separated(dag: &UnrolledDag, x: Node, y: Node, z: &[Node]) -> Result<bool> {
    let xi = dag.id(x)?;
    let yi = dag.id(y)?;
    let zi = z.iter().map(|&n| dag.id(n)).collect::<Result<Vec<_>>>()?;
    if xi == yi {
        return Err(Error::Config("d-separation query needs two distinct nodes".into()));
    }
    if zi.contains(&xi) || zi.contains(&yi) {
        return Err(Error::Config("query nodes must not be in the conditioning set".into()));
    }
    let mut in_z = vec![false; dag.len()];
    for &v in &zi {
        in_z[v] = true;
    }
    let opens_collider = dag.ancestors(&zi);

    let mut seen_up = vec![false; dag.len()];
    let mut seen_down = vec![false; dag.len()];
    let mut queue = VecDeque::from([(xi, Dir::Up)]);
    while let Some((v, dir)) = queue.pop_front() {
        let seen = match dir {
            Dir::Up => &mut seen_up,
            Dir::Down => &mut seen_down,
        };
        if seen[v] {
            continue;
        }
        seen[v] = true;
        if v == yi {
            return Ok(false);
        }
        match dir {
            Dir::Up if !in_z[v] => {
                queue.extend(dag.parents[v].iter().map(|&p| (p, Dir::Up)));
                queue.extend(dag.children[v].iter().map(|&c| (c, Dir::Down)));
            }
            Dir::Up => {}
            Dir::Down => {
                if !in_z[v] {
                    queue.extend(dag.children[v].iter().map(|&c| (c, Dir::Down)));
                }
                if opens_collider[v] {
                    queue.extend(dag.parents[v].iter().map(|&p| (p, Dir::Up)));
                }
            }
        }
    }
    Ok(true)
}
