//! Sorted-projection neighbor scans.
//!
//! Under the max-norm a point can only be within `r` of `q` if its first
//! coordinate is, so scanning outward from `q` along a sorted projection
//! and stopping once the projected gap reaches `r` is exact. The window is
//! usually a small fraction of the sample, and unlike a k-d tree the cost
//! does not grow with dimension beyond the per-pair early exit.

/// Row-major samples stored in ascending order of one coordinate.
pub(crate) struct Projection {
    dim: usize,
    /// Rows reordered by the axis coordinate, contiguous for sequential scans.
    sorted: Vec<f64>,
    /// Axis coordinate of each sorted row.
    keys: Vec<f64>,
    /// Position of each original sample in the sorted order.
    rank: Vec<usize>,
}

impl Projection {
    pub(crate) fn new(rows: &[f64], dim: usize, axis: usize) -> Self {
        let m = rows.len() / dim;
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| rows[a * dim + axis].total_cmp(&rows[b * dim + axis]));
        let keys = order.iter().map(|&i| rows[i * dim + axis]).collect();
        let sorted = order
            .iter()
            .flat_map(|&i| rows[i * dim..(i + 1) * dim].iter().copied())
            .collect();
        let mut rank = vec![0; m];
        for (p, &i) in order.iter().enumerate() {
            rank[i] = p;
        }
        Projection {
            dim,
            sorted,
            keys,
            rank,
        }
    }

    #[inline]
    fn row(&self, p: usize) -> &[f64] {
        &self.sorted[p * self.dim..(p + 1) * self.dim]
    }

    /// Max-norm distance from sample `i` to its `k`-th nearest other sample.
    pub(crate) fn kth_distance(&self, i: usize, k: usize, best: &mut Vec<f64>) -> f64 {
        best.clear();
        best.resize(k, f64::INFINITY);
        let p = self.rank[i];
        let q = self.row(p);
        let key = self.keys[p];
        let m = self.keys.len();
        let (mut lo, mut hi) = (p, p + 1);
        let (mut down, mut up) = (p > 0, hi < m);
        while down || up {
            if up {
                if self.keys[hi] - key >= best[k - 1] {
                    up = false;
                } else {
                    consider(best, self.row(hi), q);
                    hi += 1;
                    up = hi < m;
                }
            }
            if down {
                if key - self.keys[lo - 1] >= best[k - 1] {
                    down = false;
                } else {
                    lo -= 1;
                    consider(best, self.row(lo), q);
                    down = lo > 0;
                }
            }
        }
        best[k - 1]
    }

    /// Row of sample `i` and the rows of every other sample whose axis
    /// coordinate lies strictly within `r` of it.
    #[inline]
    pub(crate) fn slab(&self, i: usize, r: f64) -> (&[f64], impl Iterator<Item = &[f64]>) {
        let p = self.rank[i];
        let key = self.keys[p];
        let hi = p + 1 + self.keys[p + 1..].partition_point(|&v| v - key < r);
        let lo = self.keys[..p].partition_point(|&v| key - v >= r);
        let dim = self.dim;
        let above = self.sorted[(p + 1) * dim..hi * dim].chunks_exact(dim);
        let below = self.sorted[lo * dim..p * dim].chunks_exact(dim);
        (self.row(p), above.chain(below))
    }

    /// Number of other samples whose axis coordinate is strictly within `r`.
    pub(crate) fn count_on_axis(&self, i: usize, r: f64) -> usize {
        if !(r > 0.0) {
            return 0;
        }
        let key = self.keys[self.rank[i]];
        // Same differences as a direct |a − b| < r test, so no rounding drift.
        let lo = self.keys.partition_point(|&v| key - v >= r);
        let hi = self.keys.partition_point(|&v| v - key < r);
        hi - lo - 1
    }
}

#[inline]
fn consider(best: &mut [f64], row: &[f64], q: &[f64]) {
    let k = best.len();
    // Full branch-free distance: cheaper than an early exit that mispredicts.
    let d = chebyshev(row, q);
    if d >= best[k - 1] {
        return;
    }
    let mut i = k - 1;
    best[i] = d;
    while i > 0 && best[i - 1] > best[i] {
        best.swap(i - 1, i);
        i -= 1;
    }
}

#[inline]
pub(crate) fn chebyshev(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, |d, v| if v > d { v } else { d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matches_brute_force(
            dim in 1usize..7,
            m in 2usize..150,
            k in 1usize..5,
            vals in proptest::collection::vec(-3i32..3, 900),
            r in prop_oneof![Just(0.0), Just(0.5), Just(1.0), Just(2.5)],
        ) {
            prop_assume!(k < m);
            // Coarse grid: many exact ties and duplicate rows.
            let rows: Vec<f64> = (0..m * dim).map(|i| vals[i % vals.len()] as f64 * 0.5).collect();
            let mut best = Vec::new();
            for axis in 0..dim {
                let p = Projection::new(&rows, dim, axis);
                for i in 0..m {
                    let q = &rows[i * dim..(i + 1) * dim];
                    let mut d: Vec<f64> = (0..m)
                        .filter(|&j| j != i)
                        .map(|j| chebyshev(q, &rows[j * dim..(j + 1) * dim]))
                        .collect();
                    d.sort_by(f64::total_cmp);
                    prop_assert_eq!(p.kth_distance(i, k, &mut best), d[k - 1]);

                    let (own, slab) = p.slab(i, r);
                    prop_assert_eq!(own, q);
                    let mut got: Vec<&[f64]> = slab.collect();
                    let mut want: Vec<&[f64]> = (0..m)
                        .filter(|&j| j != i && (rows[j * dim + axis] - q[axis]).abs() < r)
                        .map(|j| &rows[j * dim..(j + 1) * dim])
                        .collect();
                    got.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    want.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    prop_assert_eq!(got, want);
                    prop_assert_eq!(p.count_on_axis(i, r), if r > 0.0 {
                        (0..m).filter(|&j| j != i && (rows[j * dim + axis] - q[axis]).abs() < r).count()
                    } else { 0 });
                }
            }
        }
    }
}
