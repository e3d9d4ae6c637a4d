use crate::geometry::{dot, sample_surface, GeometryError, KdTree};
use crate::mesh::{Mesh, Point3};

/// Distance from each point of `from` to its nearest neighbour in `to`.
fn directed<'a>(from: &'a [Point3], to: &'a KdTree) -> impl Iterator<Item = f64> + 'a {
    from.iter().map(move |&p| to.nearest(p).map_or(f64::INFINITY, |(_, d2)| d2.sqrt()))
}

fn check(a: &[Point3], b: &[Point3]) -> Result<(), GeometryError> {
    if a.is_empty() || b.is_empty() {
        Err(GeometryError::EmptySet)
    } else {
        Ok(())
    }
}

/// Largest nearest-neighbour distance from `from` into `to`. A point is skipped
/// as soon as any neighbour lies within the running maximum; the result is exact.
fn directed_max(from: &[Point3], to: &KdTree, mut cmax: f64) -> f64 {
    for &p in from {
        if to.any_within(p, cmax * cmax) {
            continue;
        }
        let d = to.nearest(p).map_or(f64::INFINITY, |(_, d2)| d2.sqrt());
        cmax = cmax.max(d);
    }
    cmax
}

pub fn hausdorff_distance(a: &[Point3], b: &[Point3]) -> Result<f64, GeometryError> {
    check(a, b)?;
    let ab = directed_max(a, &KdTree::new(b), 0.0);
    Ok(directed_max(b, &KdTree::new(a), ab))
}

/// Mean nearest-neighbour distance `a → b` plus mean `b → a`.
pub fn chamfer_distance(a: &[Point3], b: &[Point3]) -> Result<f64, GeometryError> {
    check(a, b)?;
    let ab: f64 = directed(a, &KdTree::new(b)).sum::<f64>() / a.len() as f64;
    let ba: f64 = directed(b, &KdTree::new(a)).sum::<f64>() / b.len() as f64;
    Ok(ab + ba)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision/recall of points lying strictly closer than `threshold` to the other set.
pub fn f1_score(pred: &[Point3], gt: &[Point3], threshold: f64) -> Result<F1Score, GeometryError> {
    check(pred, gt)?;
    let precision = directed(pred, &KdTree::new(gt)).filter(|&d| d < threshold).count() as f64 / pred.len() as f64;
    let recall = directed(gt, &KdTree::new(pred)).filter(|&d| d < threshold).count() as f64 / gt.len() as f64;
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    Ok(F1Score { precision, recall, f1 })
}

/// Mean `|n_pred · n_gt|` over nearest-neighbour correspondences, averaged
/// over both directions. Winding-agnostic.
pub fn normal_consistency(pred: &Mesh, gt: &Mesh, count: usize, seed: u64) -> Result<f64, GeometryError> {
    let p = sample_surface(pred, count, seed)?;
    let g = sample_surface(gt, count, seed.wrapping_add(1))?;
    let one_way = |from: &crate::geometry::SurfaceSample, to: &crate::geometry::SurfaceSample| {
        let tree = KdTree::new(&to.points);
        let total: f64 = from
            .points
            .iter()
            .zip(&from.normals)
            .map(|(&x, &n)| {
                let (j, _) = tree.nearest(x).expect("non-empty sample");
                dot(n, to.normals[j]).abs()
            })
            .sum();
        total / from.points.len().max(1) as f64
    };
    Ok(0.5 * (one_way(&p, &g) + one_way(&g, &p)))
}
