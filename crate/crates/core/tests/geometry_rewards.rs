use proptest::prelude::*;
use quadrl_core::geometry::{
    chamfer_distance, hausdorff_distance, raycast_exhaustive, raycast_first_hit, sample_surface_points, KdTree, Ray,
    TriangulatedView,
};
use quadrl_core::procedural::{band, cube, grid, icosphere, open_cube, torus, triangle_grid};
use quadrl_core::rewards::{compute_reward, quad_flow_analysis, truncated_reward, RewardConfig};
use quadrl_core::{Face, Mesh, Point3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute_directed(a: &[Point3], b: &[Point3]) -> f64 {
    a.iter()
        .map(|p| {
            b.iter().map(|q| (0..3).map(|i| (p[i] - q[i]).powi(2)).sum::<f64>()).fold(f64::INFINITY, f64::min).sqrt()
        })
        .fold(0.0, f64::max)
}

fn points(rng: &mut impl Rng, n: usize) -> Vec<Point3> {
    (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-0.2..0.2)]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hausdorff_matches_brute_force(seed in any::<u64>(), n in 1usize..300, m in 1usize..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (points(&mut rng, n), points(&mut rng, m));
        let expected = brute_directed(&a, &b).max(brute_directed(&b, &a));
        prop_assert!((hausdorff_distance(&a, &b).unwrap() - expected).abs() < 1e-12);
        prop_assert!(chamfer_distance(&a, &b).unwrap() <= 2.0 * expected + 1e-12);
    }

    #[test]
    fn kdtree_nearest_matches_scan(seed in any::<u64>(), n in 1usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = points(&mut rng, n);
        let tree = KdTree::new(&pts);
        for q in points(&mut rng, 20) {
            let (_, d2) = tree.nearest(q).unwrap();
            let best = pts.iter().map(|p| (0..3).map(|i| (p[i] - q[i]).powi(2)).sum::<f64>()).fold(f64::INFINITY, f64::min);
            prop_assert!((d2 - best).abs() < 1e-15);
            prop_assert!(tree.any_within(q, best));
            prop_assert!(!tree.any_within(q, best * 0.999_999) || best == 0.0);
        }
    }

    #[test]
    fn bvh_matches_exhaustive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = torus(rng.random_range(3..12), rng.random_range(3..8), 1.0, 0.35);
        let view = TriangulatedView::new(&mesh);
        for _ in 0..32 {
            let origin = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let target = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-0.3..0.3)];
            let Some(ray) = Ray::towards(origin, target) else { continue };
            let (fast, slow) = (raycast_first_hit(&view, &ray), raycast_exhaustive(&view, &ray));
            prop_assert_eq!(fast.map(|h| h.face), slow.map(|h| h.face));
            if let (Some(f), Some(s)) = (fast, slow) {
                prop_assert!((f.t - s.t).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn gated_reward_is_zero_or_formula(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = band(rng.random_range(3..10), 0.8, rng.random_range(0.1..0.6));
        let cfg = RewardConfig { grid_per_axis: 12, hd_samples: 2000, seed, ..RewardConfig::default() };
        let cloud = sample_surface_points(&mesh, 2000, seed ^ 1).unwrap();
        let r = compute_reward(&mesh, &cloud, &cfg);
        if r.gated {
            let expected = cfg.w_qr * r.n_quad_rings as f64 + (r.n_quad_lines * r.n_quad_lines) as f64;
            prop_assert_eq!(r.total, expected);
        } else {
            prop_assert_eq!(r.total, 0.0);
        }
    }
}

fn cloud(mesh: &Mesh) -> Vec<Point3> {
    sample_surface_points(mesh, 16_384, 99).unwrap()
}

#[test]
fn watertight_torus_passes_both_gates() {
    let mesh = torus(16, 8, 0.6, 0.25);
    let r = compute_reward(&mesh, &cloud(&mesh), &RewardConfig::default());
    assert_eq!(r.n_bad_faces, 0);
    assert!(r.hausdorff < 0.1, "{}", r.hausdorff);
    assert!(r.gated);
    assert_eq!((r.n_quad_rings, r.n_quad_lines), (24, 0));
}

#[test]
fn hole_gates_out() {
    let mesh = open_cube();
    let r = compute_reward(&mesh, &cloud(&mesh), &RewardConfig::default());
    assert!(r.n_bad_faces >= 1);
    assert_eq!(r.total, 0.0);
}

#[test]
fn shifted_cloud_gates_out() {
    let mesh = cube();
    let shifted = mesh.transformed(|p| [p[0] + 0.2, p[1], p[2]]);
    let r = compute_reward(&mesh, &cloud(&shifted), &RewardConfig::default());
    assert!((r.hausdorff - 0.2).abs() < 0.02, "{}", r.hausdorff);
    assert!(!r.gated);
    assert_eq!(r.total, 0.0);
}

#[test]
fn quad_flow_fixtures() {
    let single =
        Mesh::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]], vec![Face::Quad([0, 1, 2, 3])])
            .unwrap();
    assert_eq!(quad_flow_analysis(&single), (0, 2));
    assert_eq!(quad_flow_analysis(&band(4, 1.0, 0.5)), (1, 4));
    assert_eq!(quad_flow_analysis(&triangle_grid(3, 3, 1.0)), (0, 0));
    assert_eq!(quad_flow_analysis(&icosphere(1, 1.0)), (0, 0));
    assert_eq!(quad_flow_analysis(&cube()), (3, 0));
    assert_eq!(quad_flow_analysis(&grid(3, 2, 1.0)), (0, 5));
}

#[test]
fn window_reward_only_counts_window_faces() {
    let mesh = torus(8, 4, 0.6, 0.25);
    let c = cloud(&mesh);
    let cfg = RewardConfig::default();
    let full = compute_reward(&mesh, &c, &cfg);
    let part = truncated_reward(&mesh, 0..4, &c, &cfg);
    assert!(full.gated && part.gated);
    assert_eq!(part.hausdorff, full.hausdorff);
    assert!(part.n_quad_rings <= full.n_quad_rings);
    assert!(!truncated_reward(&mesh, 3..3, &c, &cfg).gated);
}
