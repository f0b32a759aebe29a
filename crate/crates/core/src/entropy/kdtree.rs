//! Max-norm k-d tree for k-th neighbor distances and strict-radius counts.

/// Below this many points the tree is a single leaf, i.e. a linear scan.
pub const BRUTE_FORCE_BELOW: usize = 64;
const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone, Copy)]
struct Node {
    start: usize,
    end: usize,
    /// Child node ids; `usize::MAX` marks a leaf.
    left: usize,
    right: usize,
}

#[derive(Debug)]
pub(crate) struct KdTree {
    dim: usize,
    /// Row-major coordinates, reordered so every node covers a contiguous range.
    points: Vec<f64>,
    /// Original sample index of each stored row.
    index: Vec<usize>,
    nodes: Vec<Node>,
    /// Per node: `dim` lower bounds followed by `dim` upper bounds.
    bounds: Vec<f64>,
}

impl KdTree {
    /// `rows` is row-major with `dim` coordinates per sample.
    pub(crate) fn new(rows: &[f64], dim: usize) -> Self {
        assert!(dim > 0 && rows.len() % dim == 0);
        let m = rows.len() / dim;
        let mut order: Vec<usize> = (0..m).collect();
        let mut tree = KdTree {
            dim,
            points: Vec::new(),
            index: Vec::new(),
            nodes: Vec::with_capacity(2 * m / LEAF_SIZE + 1),
            bounds: Vec::new(),
        };
        let leaf = if m < BRUTE_FORCE_BELOW { m.max(1) } else { LEAF_SIZE };
        tree.build(rows, &mut order, 0, m, leaf);
        tree.points = order
            .iter()
            .flat_map(|&i| rows[i * dim..(i + 1) * dim].iter().copied())
            .collect();
        tree.index = order;
        tree
    }

    fn build(&mut self, rows: &[f64], order: &mut [usize], start: usize, end: usize, leaf: usize) -> usize {
        let dim = self.dim;
        let id = self.nodes.len();
        self.nodes.push(Node {
            start,
            end,
            left: usize::MAX,
            right: usize::MAX,
        });
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in &order[start..end] {
            for (d, &v) in rows[i * dim..(i + 1) * dim].iter().enumerate() {
                lo[d] = lo[d].min(v);
                hi[d] = hi[d].max(v);
            }
        }
        let split_dim = (0..dim)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        let spread = hi[split_dim] - lo[split_dim];
        self.bounds.extend_from_slice(&lo);
        self.bounds.extend_from_slice(&hi);

        if end - start <= leaf || !(spread > 0.0) {
            return id;
        }
        let mid = start + (end - start) / 2;
        order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            rows[a * dim + split_dim].total_cmp(&rows[b * dim + split_dim])
        });
        let left = self.build(rows, order, start, mid, leaf);
        let right = self.build(rows, order, mid, end, leaf);
        self.nodes[id].left = left;
        self.nodes[id].right = right;
        id
    }

    fn node_bounds(&self, id: usize) -> (&[f64], &[f64]) {
        let b = &self.bounds[id * 2 * self.dim..(id + 1) * 2 * self.dim];
        b.split_at(self.dim)
    }

    /// Smallest max-norm distance from `q` to the node's bounding box.
    fn min_dist(&self, id: usize, q: &[f64]) -> f64 {
        let (lo, hi) = self.node_bounds(id);
        let mut d = 0.0f64;
        for ((&l, &h), &v) in lo.iter().zip(hi).zip(q) {
            d = d.max(l - v).max(v - h);
        }
        d
    }

    #[cfg(test)]
    /// Largest max-norm distance from `q` to any point of the node's box.
    fn max_dist(&self, id: usize, q: &[f64]) -> f64 {
        let (lo, hi) = self.node_bounds(id);
        let mut d = 0.0f64;
        for ((&l, &h), &v) in lo.iter().zip(hi).zip(q) {
            d = d.max(v - l).max(h - v);
        }
        d
    }

    fn row(&self, pos: usize) -> &[f64] {
        &self.points[pos * self.dim..(pos + 1) * self.dim]
    }

    /// Max-norm distance from `q` to the `k`-th nearest stored point other than
    /// the one with original index `exclude`.
    pub(crate) fn kth_distance(&self, q: &[f64], exclude: usize, k: usize) -> f64 {
        debug_assert!(k >= 1);
        let mut best = vec![f64::INFINITY; k];
        self.knn_node(0, q, exclude, &mut best);
        best[k - 1]
    }

    fn knn_node(&self, id: usize, q: &[f64], exclude: usize, best: &mut [f64]) {
        let node = self.nodes[id];
        if node.left == usize::MAX {
            for pos in node.start..node.end {
                if self.index[pos] == exclude {
                    continue;
                }
                let bound = best[best.len() - 1];
                if let Some(d) = dist_below(self.row(pos), q, bound) {
                    insert_sorted(best, d);
                }
            }
            return;
        }
        let dl = self.min_dist(node.left, q);
        let dr = self.min_dist(node.right, q);
        let (first, d1, second, d2) = if dl <= dr {
            (node.left, dl, node.right, dr)
        } else {
            (node.right, dr, node.left, dl)
        };
        if d1 < best[best.len() - 1] {
            self.knn_node(first, q, exclude, best);
        }
        if d2 < best[best.len() - 1] {
            self.knn_node(second, q, exclude, best);
        }
    }

    #[cfg(test)]
    /// Number of stored points at max-norm distance strictly below `r` from `q`.
    pub(crate) fn count_within(&self, q: &[f64], r: f64) -> usize {
        if !(r > 0.0) {
            return 0;
        }
        self.count_node(0, q, r)
    }

    #[cfg(test)]
    fn count_node(&self, id: usize, q: &[f64], r: f64) -> usize {
        if self.min_dist(id, q) >= r {
            return 0;
        }
        let node = self.nodes[id];
        if self.max_dist(id, q) < r {
            return node.end - node.start;
        }
        if node.left == usize::MAX {
            return (node.start..node.end)
                .filter(|&pos| dist_below(self.row(pos), q, r).is_some())
                .count();
        }
        self.count_node(node.left, q, r) + self.count_node(node.right, q, r)
    }
}

/// Max-norm distance if it is strictly below `bound`.
#[inline]
fn dist_below(a: &[f64], b: &[f64], bound: f64) -> Option<f64> {
    let mut d = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        d = d.max((x - y).abs());
        if d >= bound {
            return None;
        }
    }
    Some(d)
}

#[inline]
fn insert_sorted(best: &mut [f64], d: f64) {
    let mut i = best.len() - 1;
    best[i] = d;
    while i > 0 && best[i - 1] > best[i] {
        best.swap(i - 1, i);
        i -= 1;
    }
}
