//! Corpus-level evaluation: broken-mesh detection, broken ratio and quad ratio.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{orthogonal_ray_grid, Aabb, TriangulatedView};
use crate::mesh::Mesh;
use crate::rewards::count_hits;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum MetricsError {
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("corpus is empty")]
    EmptyCorpus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrokenCheckConfig {
    pub theta_angle: f64,
    /// A mesh is broken when its error score exceeds this.
    pub theta_succ: f64,
    /// Direction perturbation of the randomized rays.
    pub sigma_rand: f64,
    pub per_axis: usize,
    pub seed: u64,
}

impl Default for BrokenCheckConfig {
    fn default() -> Self {
        BrokenCheckConfig { theta_angle: 0.0, theta_succ: 0.01, sigma_rand: 0.05, per_axis: 64, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrokenScore {
    /// Fraction of first hits that land on a back face.
    pub score: f64,
    pub is_broken: bool,
    pub hits: usize,
    pub errors: usize,
}

impl BrokenScore {
    /// Reclassify at another threshold without recasting.
    pub fn at_threshold(&self, theta_succ: f64) -> bool {
        self.score > theta_succ
    }
}

/// Scale into the unit box centered at the origin, cast the six-direction
/// aligned and perturbed ray grids and score the back-face hit ratio.
pub fn broken_check(mesh: &Mesh, cfg: &BrokenCheckConfig) -> Result<BrokenScore, MetricsError> {
    if mesh.is_empty() {
        return Err(MetricsError::EmptyMesh);
    }
    let unit = to_unit_box(mesh);
    let view = TriangulatedView::new(&unit);
    let bounds = if view.bounds().is_empty() { Aabb { min: [-0.5; 3], max: [0.5; 3] } } else { view.bounds() };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rays = orthogonal_ray_grid(&bounds, cfg.per_axis, cfg.sigma_rand, &mut rng);
    let (hits, errors) = count_hits(&view, &rays, cfg.theta_angle);
    if hits == 0 {
        return Ok(BrokenScore { score: 0.0, is_broken: false, hits, errors });
    }
    let score = errors as f64 / hits as f64;
    Ok(BrokenScore { score, is_broken: score > cfg.theta_succ, hits, errors })
}

/// Uniform scale so the longest axis spans `[-0.5, 0.5]`.
fn to_unit_box(mesh: &Mesh) -> Mesh {
    let Some((lo, hi)) = mesh.bounds() else { return mesh.clone() };
    let extent = (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
    if extent <= 0.0 {
        return mesh.clone();
    }
    let center = [0, 1, 2].map(|a| (lo[a] + hi[a]) / 2.0);
    mesh.transformed(|v| [0, 1, 2].map(|a| (v[a] - center[a]) / extent))
}

/// Seed for mesh `index` of a corpus.
pub fn corpus_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Fraction of `meshes` classified broken.
pub fn broken_ratio(meshes: &[Mesh], cfg: &BrokenCheckConfig) -> Result<f64, MetricsError> {
    if meshes.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let mut broken = 0;
    for (i, mesh) in meshes.iter().enumerate() {
        let c = BrokenCheckConfig { seed: corpus_seed(cfg.seed, i), ..*cfg };
        if broken_check(mesh, &c)?.is_broken {
            broken += 1;
        }
    }
    Ok(broken as f64 / meshes.len() as f64)
}

/// Broken ratio of precomputed scores at threshold `theta_succ`.
pub fn broken_ratio_of(scores: &[BrokenScore], theta_succ: f64) -> Result<f64, MetricsError> {
    if scores.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    Ok(scores.iter().filter(|s| s.at_threshold(theta_succ)).count() as f64 / scores.len() as f64)
}

/// Quads over all faces, by count.
pub fn quad_ratio(mesh: &Mesh) -> Result<f64, MetricsError> {
    if mesh.is_empty() {
        return Err(MetricsError::EmptyMesh);
    }
    Ok(mesh.quad_count() as f64 / mesh.faces().len() as f64)
}
