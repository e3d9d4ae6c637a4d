use crate::geometry::dist2;
use crate::mesh::Point3;

/// Exact nearest-neighbour index over a fixed point set.
///
/// The tree is implicit: each range `[lo, hi)` of `order` is split at its
/// median along the axis of widest spread, stored in `axes[mid]`.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Point3>,
    order: Vec<usize>,
    axes: Vec<u8>,
}

impl KdTree {
    pub fn new(points: &[Point3]) -> KdTree {
        let mut tree =
            KdTree { points: points.to_vec(), order: (0..points.len()).collect(), axes: vec![0; points.len()] };
        let n = points.len();
        tree.build(0, n);
        // store points in tree order so searches walk contiguous memory
        tree.points = tree.order.iter().map(|&i| points[i]).collect();
        tree
    }

    fn build(&mut self, lo: usize, hi: usize) {
        if hi - lo <= 1 {
            return;
        }
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for &i in &self.order[lo..hi] {
            for a in 0..3 {
                min[a] = min[a].min(self.points[i][a]);
                max[a] = max[a].max(self.points[i][a]);
            }
        }
        let axis = (0..3).max_by(|&a, &b| (max[a] - min[a]).total_cmp(&(max[b] - min[b]))).unwrap_or(0);
        let mid = (lo + hi) / 2;
        let points = &self.points;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
        self.axes[mid] = axis as u8;
        self.build(lo, mid);
        self.build(mid + 1, hi);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Whether some point lies within squared distance `r2` (inclusive) of `q`.
    pub fn any_within(&self, q: Point3, r2: f64) -> bool {
        self.within(0, self.points.len(), q, r2)
    }

    fn within(&self, lo: usize, hi: usize, q: Point3, r2: f64) -> bool {
        if lo >= hi {
            return false;
        }
        let mid = (lo + hi) / 2;
        let p = self.points[mid];
        if dist2(p, q) <= r2 {
            return true;
        }
        let axis = self.axes[mid] as usize;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.within(near.0, near.1, q, r2) || (diff * diff <= r2 && self.within(far.0, far.1, q, r2))
    }

    /// Index and squared distance of the closest point.
    pub fn nearest(&self, q: Point3) -> Option<(usize, f64)> {
        let mut best = None;
        self.search(0, self.points.len(), q, &mut best);
        best
    }

    fn search(&self, lo: usize, hi: usize, q: Point3, best: &mut Option<(usize, f64)>) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let idx = self.order[mid];
        let p = self.points[mid];
        let d = dist2(p, q);
        if best.is_none_or(|(bi, bd)| d < bd || (d == bd && idx < bi)) {
            *best = Some((idx, d));
        }
        let axis = self.axes[mid] as usize;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.search(near.0, near.1, q, best);
        if best.is_none_or(|(_, bd)| diff * diff <= bd) {
            self.search(far.0, far.1, q, best);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point3> = (0..500).map(|_| [0; 3].map(|_| rng.random_range(-1.0..1.0))).collect();
        let tree = KdTree::new(&pts);
        for _ in 0..300 {
            let q = [0; 3].map(|_| rng.random_range(-1.5..1.5));
            let brute = pts.iter().map(|&p| dist2(p, q)).fold(f64::INFINITY, f64::min);
            assert_eq!(tree.nearest(q).unwrap().1, brute);
        }
    }

    #[test]
    fn duplicates_and_empty() {
        assert!(KdTree::new(&[]).nearest([0.0; 3]).is_none());
        let tree = KdTree::new(&[[1.0, 0.0, 0.0]; 5]);
        assert_eq!(tree.nearest([0.0; 3]), Some((0, 1.0)));
    }
}
