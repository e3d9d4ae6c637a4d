//! Gated mesh reward: ray-cast integrity, quad-flow topology and a Hausdorff gate.

mod integrity;
mod topology;

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::geometry::{hausdorff_distance, sample_surface_points, TriangulatedView};
use crate::mesh::{Mesh, Point3};

pub use integrity::{global_integrity_precheck, identify_bad_faces, locate_bad_vertices, viewpoints, Precheck};
pub use topology::{quad_flow_analysis, quad_flow_faces, QuadFlow};

pub(crate) use integrity::count_hits;

#[derive(Debug, Clone, PartialEq)]
pub struct RewardConfig {
    /// Weight of each quad ring.
    pub w_qr: f64,
    /// The mesh is gated out once this many bad faces are found.
    pub theta_ray: f64,
    /// The mesh is gated out once the Hausdorff distance reaches this.
    pub theta_hd: f64,
    /// Hits with `n · (−d)` below this are back-face hits.
    pub theta_angle: f64,
    /// Back-face ratio up to which the coarse check passes outright.
    pub theta_ratio: f64,
    pub probe_count: usize,
    /// Probe ball radius as a fraction of the bounding-box diagonal.
    pub probe_radius: f64,
    pub grid_per_axis: usize,
    /// Direction perturbation of the second ray at each grid origin.
    pub grid_jitter: f64,
    /// Surface samples drawn from the mesh for the Hausdorff distance.
    pub hd_samples: usize,
    /// `None` selects six axis viewpoints around the mesh.
    pub viewpoints: Option<Vec<Point3>>,
    pub seed: u64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            w_qr: 0.1,
            theta_ray: 1.0,
            theta_hd: 0.1,
            theta_angle: 0.0,
            theta_ratio: 0.0005,
            probe_count: 16,
            probe_radius: 0.01,
            grid_per_axis: 32,
            grid_jitter: 0.02,
            hd_samples: 16_384,
            viewpoints: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardReport {
    pub n_bad_faces: usize,
    pub hausdorff: f64,
    pub n_quad_rings: usize,
    pub n_quad_lines: usize,
    pub gated: bool,
    pub total: f64,
}

impl RewardReport {
    fn new(n_bad_faces: usize, hausdorff: f64, flow: (usize, usize), nonempty: bool, cfg: &RewardConfig) -> Self {
        let (rings, lines) = flow;
        let gated = nonempty && (n_bad_faces as f64) < cfg.theta_ray && hausdorff < cfg.theta_hd;
        let total = if gated { cfg.w_qr * rings as f64 + (lines * lines) as f64 } else { 0.0 };
        RewardReport { n_bad_faces, hausdorff, n_quad_rings: rings, n_quad_lines: lines, gated, total }
    }
}

/// Whole-mesh quantities that windows of the same mesh share.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshAnalysis {
    pub precheck: Precheck,
    pub bad_vertices: BTreeSet<usize>,
    pub bad_faces: BTreeSet<usize>,
    /// Infinite when either side has nothing to compare.
    pub hausdorff: f64,
}

/// Bad faces (skipped when the coarse check passes) and the Hausdorff
/// distance between `condition_points` and points sampled from `mesh`.
pub fn analyze_mesh(mesh: &Mesh, condition_points: &[Point3], cfg: &RewardConfig) -> MeshAnalysis {
    let view = TriangulatedView::new(mesh);
    let precheck = global_integrity_precheck(&view, cfg);
    let (bad_vertices, bad_faces) = if precheck.passed {
        (BTreeSet::new(), BTreeSet::new())
    } else {
        let bv = locate_bad_vertices(&view, cfg);
        let bf = identify_bad_faces(mesh, &bv);
        (bv, bf)
    };
    let hausdorff = sample_surface_points(mesh, cfg.hd_samples.max(1), cfg.seed.wrapping_add(2))
        .ok()
        .and_then(|pts| hausdorff_distance(condition_points, &pts).ok())
        .unwrap_or(f64::INFINITY);
    MeshAnalysis { precheck, bad_vertices, bad_faces, hausdorff }
}

/// Report for the faces in `window`, reusing a whole-mesh analysis: bad faces
/// are counted inside the window only and quad flow is computed on the
/// window's faces alone. An empty window is never gated in.
pub fn report_window(mesh: &Mesh, analysis: &MeshAnalysis, window: Range<usize>, cfg: &RewardConfig) -> RewardReport {
    let end = window.end.min(mesh.faces().len());
    let start = window.start.min(end);
    let n_bf = analysis.bad_faces.range(start..end).count();
    let flow = quad_flow_faces(&mesh.faces()[start..end]);
    RewardReport::new(n_bf, analysis.hausdorff, (flow.rings, flow.lines), start < end, cfg)
}

pub fn compute_reward(mesh: &Mesh, condition_points: &[Point3], cfg: &RewardConfig) -> RewardReport {
    let analysis = analyze_mesh(mesh, condition_points, cfg);
    report_window(mesh, &analysis, 0..mesh.faces().len(), cfg)
}

pub fn truncated_reward(
    mesh: &Mesh,
    window: Range<usize>,
    condition_points: &[Point3],
    cfg: &RewardConfig,
) -> RewardReport {
    let analysis = analyze_mesh(mesh, condition_points, cfg);
    report_window(mesh, &analysis, window, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::procedural::{cube, grid, open_cube, torus};

    fn cloud(mesh: &Mesh) -> Vec<Point3> {
        sample_surface_points(mesh, 16_384, 99).unwrap()
    }

    #[test]
    fn torus_passes_both_gates() {
        let t = torus(8, 6, 0.6, 0.3);
        let r = compute_reward(&t, &cloud(&t), &RewardConfig::default());
        assert_eq!(r.n_bad_faces, 0);
        assert!(r.hausdorff < 0.1, "{}", r.hausdorff);
        assert!(r.gated);
        assert_eq!((r.n_quad_rings, r.n_quad_lines), (14, 0));
        assert!((r.total - 1.4).abs() < 1e-12);
    }

    #[test]
    fn hole_gates_out() {
        let m = open_cube();
        let r = compute_reward(&m, &cloud(&cube()), &RewardConfig::default());
        assert!(r.n_bad_faces >= 1);
        assert!(!r.gated);
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn far_cloud_gates_out() {
        let m = cube();
        let shifted: Vec<Point3> = cloud(&m).iter().map(|p| [p[0] + 0.2, p[1], p[2]]).collect();
        let r = compute_reward(&m, &shifted, &RewardConfig::default());
        assert!((r.hausdorff - 0.2).abs() < 0.02, "{}", r.hausdorff);
        assert!(!r.gated && r.total == 0.0);
    }

    #[test]
    fn empty_mesh_and_window() {
        let r = compute_reward(&Mesh::default(), &[[0.0; 3]], &RewardConfig::default());
        assert!(!r.gated && r.total == 0.0);
        let m = cube();
        let r = truncated_reward(&m, 2..2, &cloud(&m), &RewardConfig::default());
        assert!(!r.gated && r.total == 0.0);
    }

    #[test]
    fn full_window_matches_whole_mesh() {
        let m = grid(3, 3, 0.9);
        let c = cloud(&m);
        let cfg = RewardConfig::default();
        assert_eq!(truncated_reward(&m, 0..m.faces().len(), &c, &cfg), compute_reward(&m, &c, &cfg));
    }

    #[test]
    fn window_counts_only_its_bad_faces() {
        let m = open_cube();
        let cfg = RewardConfig::default();
        let a = analyze_mesh(&m, &cloud(&cube()), &cfg);
        // face 0 (-X) is the only face away from the hole
        assert!(!a.bad_faces.contains(&0));
        assert_eq!(report_window(&m, &a, 0..1, &cfg).n_bad_faces, 0);
        assert_eq!(report_window(&m, &a, 0..m.faces().len(), &cfg).n_bad_faces, a.bad_faces.len());
    }

    #[test]
    fn single_quad_window_in_grid() {
        let m = grid(4, 4, 0.9);
        let a = analyze_mesh(&m, &cloud(&m), &RewardConfig::default());
        let r = report_window(&m, &a, 5..6, &RewardConfig::default());
        assert_eq!((r.n_quad_rings, r.n_quad_lines), (0, 2));
    }

    #[test]
    fn report_is_reproducible() {
        let m = open_cube();
        let c = cloud(&cube());
        let cfg = RewardConfig::default();
        let a = compute_reward(&m, &c, &cfg);
        let b = compute_reward(&m, &c, &cfg);
        assert_eq!(a.hausdorff.to_bits(), b.hausdorff.to_bits());
        assert_eq!(a, b);
    }
}
