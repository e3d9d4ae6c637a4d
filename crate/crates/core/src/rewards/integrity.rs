use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adjacency::build_edge_adjacency;
use crate::geometry::{add, dist2, orthogonal_ray_grid, raycast_first_hit, scale, unit_ball, Ray, TriangulatedView};
use crate::mesh::{Mesh, Point3};
use crate::rewards::RewardConfig;

/// Outcome of the coarse ray-grid test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Precheck {
    pub hits: usize,
    pub invalid_hits: usize,
    pub invalid_ratio: f64,
    pub passed: bool,
}

/// Count back-face hits (`n · (−d) < θ_angle`) over the six-direction ray grid.
/// A mesh no ray reaches passes with ratio 0.
pub fn global_integrity_precheck(view: &TriangulatedView, cfg: &RewardConfig) -> Precheck {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if view.is_empty() {
        return Precheck { hits: 0, invalid_hits: 0, invalid_ratio: 0.0, passed: true };
    }
    let rays = orthogonal_ray_grid(&view.bounds(), cfg.grid_per_axis, cfg.grid_jitter, &mut rng);
    let (hits, invalid_hits) = count_hits(view, &rays, cfg.theta_angle);
    let invalid_ratio = if hits == 0 { 0.0 } else { invalid_hits as f64 / hits as f64 };
    Precheck { hits, invalid_hits, invalid_ratio, passed: invalid_ratio <= cfg.theta_ratio }
}

/// `(hits, back-face hits)` for a batch of rays.
pub(crate) fn count_hits(view: &TriangulatedView, rays: &[Ray], theta_angle: f64) -> (usize, usize) {
    let mut hits = 0;
    let mut invalid = 0;
    for ray in rays {
        if let Some(hit) = raycast_first_hit(view, ray) {
            hits += 1;
            if hit.facing(ray) < theta_angle {
                invalid += 1;
            }
        }
    }
    (hits, invalid)
}

/// Configured viewpoints, or six points at `±axis` twice the bounding radius
/// away from the bounding-box center.
pub fn viewpoints(view: &TriangulatedView, cfg: &RewardConfig) -> Vec<Point3> {
    if let Some(v) = &cfg.viewpoints {
        return v.clone();
    }
    let b = view.bounds();
    if b.is_empty() {
        return Vec::new();
    }
    let center = b.center();
    let dist = b.diagonal().max(1e-9);
    let mut out = Vec::with_capacity(6);
    for axis in 0..3 {
        for sign in [1.0, -1.0] {
            let mut d = [0.0; 3];
            d[axis] = sign * dist;
            out.push(add(center, d));
        }
    }
    out
}

/// Nothing is hit on the way from `eye` before coming within `radius` of `v`.
fn is_visible(view: &TriangulatedView, eye: Point3, v: Point3, radius: f64) -> bool {
    let Some(ray) = Ray::towards(eye, v) else { return true };
    let reach = dist2(eye, v).sqrt();
    match raycast_first_hit(view, &ray) {
        None => true,
        Some(hit) => hit.t >= reach - radius || dist2(ray.at(hit.t), v) <= radius * radius,
    }
}

/// Vertices near which a probe ray from some viewpoint hits a back face.
///
/// Each vertex used by a face is tested from every viewpoint it is visible
/// from: `probe_count` rays are cast from the viewpoint through random points
/// in a ball of radius `probe_radius · diagonal` around the vertex.
pub fn locate_bad_vertices(view: &TriangulatedView, cfg: &RewardConfig) -> BTreeSet<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let radius = cfg.probe_radius * view.bounds().diagonal();
    let eyes = viewpoints(view, cfg);
    let used: BTreeSet<usize> = view.triangles().iter().flatten().copied().collect();
    let mut bad = BTreeSet::new();
    for vi in used {
        let v = view.vertices()[vi];
        'eyes: for &eye in &eyes {
            if !is_visible(view, eye, v, radius) {
                continue;
            }
            for _ in 0..cfg.probe_count {
                let target = add(v, scale(unit_ball(&mut rng), radius));
                let Some(ray) = Ray::towards(eye, target) else { continue };
                if let Some(hit) = raycast_first_hit(view, &ray) {
                    if hit.facing(&ray) < cfg.theta_angle {
                        bad.insert(vi);
                        break 'eyes;
                    }
                }
            }
        }
    }
    bad
}

/// Faces touching a bad vertex that also have an open (single-face) edge.
pub fn identify_bad_faces(mesh: &Mesh, bad_vertices: &BTreeSet<usize>) -> BTreeSet<usize> {
    if bad_vertices.is_empty() {
        return BTreeSet::new();
    }
    let boundary = build_edge_adjacency(mesh).boundary_faces();
    boundary.into_iter().filter(|&f| mesh.faces()[f].indices().iter().any(|v| bad_vertices.contains(v))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::procedural::{cube, icosphere, open_cube, CUBE_POS_X_FACE};

    fn cfg() -> RewardConfig {
        RewardConfig::default()
    }

    #[test]
    fn closed_cube_passes() {
        let p = global_integrity_precheck(&TriangulatedView::new(&cube()), &cfg());
        assert!(p.hits > 0);
        assert_eq!(p.invalid_hits, 0);
        assert!(p.passed);
    }

    #[test]
    fn flipped_face_fails() {
        let faces: Vec<_> = cube()
            .faces()
            .iter()
            .enumerate()
            .map(|(i, f)| if i == CUBE_POS_X_FACE { f.reversed() } else { *f })
            .collect();
        let mesh = Mesh::new(cube().vertices().to_vec(), faces).unwrap();
        let p = global_integrity_precheck(&TriangulatedView::new(&mesh), &cfg());
        assert!(p.invalid_ratio > 1.0 / 13.0, "{}", p.invalid_ratio);
        assert!(!p.passed);
    }

    #[test]
    fn unreachable_mesh_passes() {
        // zero-area faces are never hit
        let sliver =
            Mesh::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], vec![crate::mesh::Face::Tri([0, 1, 2])])
                .unwrap();
        let p = global_integrity_precheck(&TriangulatedView::new(&sliver), &cfg());
        assert_eq!((p.hits, p.invalid_ratio, p.passed), (0, 0.0, true));
        assert!(global_integrity_precheck(&TriangulatedView::new(&Mesh::default()), &cfg()).passed);
    }

    #[test]
    fn sphere_has_no_bad_vertices() {
        let view = TriangulatedView::new(&icosphere(2, 0.9));
        assert!(locate_bad_vertices(&view, &cfg()).is_empty());
    }

    #[test]
    fn hole_rim_is_found() {
        let mesh = open_cube();
        let bad = locate_bad_vertices(&TriangulatedView::new(&mesh), &cfg());
        // the +X face used vertices 4..8; the far corners are exposed through the hole too
        assert!(bad.is_superset(&BTreeSet::from([4, 5, 6, 7])), "{bad:?}");
        let faces = identify_bad_faces(&mesh, &bad);
        // every remaining face except -X touches the rim
        assert_eq!(faces.len(), 4);
    }

    #[test]
    fn hidden_vertex_is_never_flagged() {
        // a single viewpoint that sees the hole only from behind the closed -X side
        let mut c = cfg();
        c.viewpoints = Some(vec![[-5.0, 0.0, 0.0]]);
        let bad = locate_bad_vertices(&TriangulatedView::new(&open_cube()), &c);
        assert!(bad.is_empty(), "{bad:?}");
    }

    #[test]
    fn bad_face_identification() {
        let mesh = cube();
        assert!(identify_bad_faces(&mesh, &BTreeSet::new()).is_empty());
        assert!(identify_bad_faces(&mesh, &BTreeSet::from([0, 7])).is_empty());
        let open = open_cube();
        assert_eq!(identify_bad_faces(&open, &BTreeSet::from([4])).len(), 2);
    }
}
