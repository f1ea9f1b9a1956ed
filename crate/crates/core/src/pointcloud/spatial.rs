//! Static 3-D kd-tree for exact radius and k-nearest-neighbor queries.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

pub struct KdTree {
    pts: Vec<[f64; 3]>,
    // Implicit balanced tree: the median of every range is its root.
    order: Vec<usize>,
}

#[derive(PartialEq)]
struct Candidate(f64, usize);

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let (dx, dy, dz) = (a[0] - b[0], a[1] - b[1], a[2] - b[2]);
    dx * dx + dy * dy + dz * dz
}

impl KdTree {
    pub fn new(pts: Vec<[f64; 3]>) -> Self {
        let mut order: Vec<usize> = (0..pts.len()).collect();
        build(&pts, &mut order, 0);
        Self { pts, order }
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    pub fn point(&self, i: usize) -> [f64; 3] {
        self.pts[i]
    }

    /// Indices within `radius` of `q` (inclusive), sorted ascending.
    pub fn within(&self, q: &[f64; 3], radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.within_rec(0, self.order.len(), 0, q, radius * radius, radius, &mut out);
        out.sort_unstable();
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn within_rec(&self, lo: usize, hi: usize, depth: usize, q: &[f64; 3], r2: f64, r: f64, out: &mut Vec<usize>) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let idx = self.order[mid];
        let p = &self.pts[idx];
        if dist2(p, q) <= r2 {
            out.push(idx);
        }
        let axis = depth % 3;
        let diff = q[axis] - p[axis];
        if diff - r <= 0.0 {
            self.within_rec(lo, mid, depth + 1, q, r2, r, out);
        }
        if diff + r >= 0.0 {
            self.within_rec(mid + 1, hi, depth + 1, q, r2, r, out);
        }
    }

    /// The `k` nearest points to `q` as `(squared distance, index)`, nearest
    /// first, optionally skipping one index (the query point itself).
    pub fn nearest(&self, q: &[f64; 3], k: usize, skip: Option<usize>) -> Vec<(f64, usize)> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.nearest_rec(0, self.order.len(), 0, q, k, skip, &mut heap);
        let mut out: Vec<(f64, usize)> = heap.into_iter().map(|c| (c.0, c.1)).collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn nearest_rec(
        &self,
        lo: usize,
        hi: usize,
        depth: usize,
        q: &[f64; 3],
        k: usize,
        skip: Option<usize>,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let idx = self.order[mid];
        let p = &self.pts[idx];
        if skip != Some(idx) {
            let d = dist2(p, q);
            if heap.len() < k {
                heap.push(Candidate(d, idx));
            } else if heap.peek().is_some_and(|worst| Candidate(d, idx) < *worst) {
                heap.pop();
                heap.push(Candidate(d, idx));
            }
        }
        let axis = depth % 3;
        let diff = q[axis] - p[axis];
        let (first, second) = if diff <= 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.nearest_rec(first.0, first.1, depth + 1, q, k, skip, heap);
        let worst = heap.peek().map_or(f64::INFINITY, |c| c.0);
        if heap.len() < k || diff * diff <= worst {
            self.nearest_rec(second.0, second.1, depth + 1, q, k, skip, heap);
        }
    }
}

fn build(pts: &[[f64; 3]], order: &mut [usize], depth: usize) {
    if order.len() <= 1 {
        return;
    }
    let axis = depth % 3;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| pts[a][axis].total_cmp(&pts[b][axis]).then(a.cmp(&b)));
    let (left, right) = order.split_at_mut(mid);
    build(pts, left, depth + 1);
    build(pts, &mut right[1..], depth + 1);
}
