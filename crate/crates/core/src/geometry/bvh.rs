use crate::geometry::{cross, dot, normalized, sub, Aabb, Ray, RayHit};
use crate::mesh::{Mesh, Point3};

/// Slack on barycentric coordinates so rays through shared edges are not lost.
const BARY_EPS: f64 = 1e-9;
const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, len: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Triangles of a mesh (quads split along their 0–2 diagonal) under a BVH.
#[derive(Debug, Clone)]
pub struct TriangulatedView {
    vertices: Vec<Point3>,
    triangles: Vec<[usize; 3]>,
    triangle_face: Vec<usize>,
    normals: Vec<Point3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
    bounds: Aabb,
}

impl TriangulatedView {
    pub fn new(mesh: &Mesh) -> TriangulatedView {
        let mut triangles = Vec::new();
        let mut triangle_face = Vec::new();
        for (fi, face) in mesh.faces().iter().enumerate() {
            for tri in face.triangles() {
                triangles.push(tri);
                triangle_face.push(fi);
            }
        }
        let vertices = mesh.vertices().to_vec();
        let normals = triangles
            .iter()
            .map(|&[a, b, c]| {
                let n = cross(sub(vertices[b], vertices[a]), sub(vertices[c], vertices[a]));
                normalized(n).unwrap_or([0.0; 3])
            })
            .collect();
        let bounds = Aabb::from_points(triangles.iter().flatten().map(|&i| &vertices[i]));
        let mut view = TriangulatedView {
            vertices,
            order: (0..triangles.len()).collect(),
            triangles,
            triangle_face,
            normals,
            nodes: Vec::new(),
            bounds,
        };
        if !view.triangles.is_empty() {
            let pad = 1e-9 * (1.0 + view.bounds.diagonal());
            let boxes: Vec<Aabb> = view
                .triangles
                .iter()
                .map(|t| Aabb::from_points(t.iter().map(|&i| &view.vertices[i])).padded(pad))
                .collect();
            let centroids: Vec<Point3> = boxes.iter().map(Aabb::center).collect();
            let mut order = std::mem::take(&mut view.order);
            let n = order.len();
            view.build(&mut order, 0, n, &boxes, &centroids);
            view.order = order;
        }
        view
    }

    fn build(&mut self, order: &mut [usize], start: usize, end: usize, boxes: &[Aabb], centroids: &[Point3]) -> usize {
        let bounds = order[start..end].iter().fold(Aabb::empty(), |b, &t| b.merge(&boxes[t]));
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { bounds, start, len: end - start });
            return id;
        }
        let spread = Aabb::from_points(order[start..end].iter().map(|&t| &centroids[t])).extent();
        let axis = (0..3).max_by(|&a, &b| spread[a].total_cmp(&spread[b])).unwrap_or(0);
        let mid = (start + end) / 2;
        order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
        });
        self.nodes.push(Node::Leaf { bounds, start, len: 0 });
        let left = self.build(order, start, mid, boxes, centroids);
        let right = self.build(order, mid, end, boxes, centroids);
        self.nodes[id] = Node::Inner { bounds, left, right };
        id
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Source face of each triangle.
    pub fn triangle_faces(&self) -> &[usize] {
        &self.triangle_face
    }

    pub fn triangle_normal(&self, tri: usize) -> Point3 {
        self.normals[tri]
    }

    /// Bounds of all triangle vertices; empty for a face-less mesh.
    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Möller–Trumbore, double-sided. Returns `t ≥ 0`.
    pub fn intersect_triangle(&self, tri: usize, ray: &Ray) -> Option<f64> {
        let [a, b, c] = self.triangles[tri];
        let (p0, p1, p2) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let e1 = sub(p1, p0);
        let e2 = sub(p2, p0);
        let pvec = cross(ray.direction, e2);
        let det = dot(e1, pvec);
        let scale = dot(e1, e1).max(dot(e2, e2));
        if det.abs() <= 1e-14 * scale || scale == 0.0 {
            return None;
        }
        let inv = 1.0 / det;
        let tvec = sub(ray.origin, p0);
        let u = dot(tvec, pvec) * inv;
        if !(-BARY_EPS..=1.0 + BARY_EPS).contains(&u) {
            return None;
        }
        let qvec = cross(tvec, e1);
        let v = dot(ray.direction, qvec) * inv;
        if v < -BARY_EPS || u + v > 1.0 + BARY_EPS {
            return None;
        }
        let t = dot(e2, qvec) * inv;
        (t >= 0.0 && t.is_finite()).then_some(t)
    }

    fn hit(&self, tri: usize, t: f64) -> RayHit {
        RayHit { face: self.triangle_face[tri], triangle: tri, t, normal: self.normals[tri] }
    }
}

fn better(t: f64, tri: usize, best: Option<(f64, usize)>) -> bool {
    match best {
        None => true,
        Some((bt, btri)) => t < bt || (t == bt && tri < btri),
    }
}

/// Nearest intersection; ties in `t` go to the lower triangle index.
pub fn raycast_first_hit(view: &TriangulatedView, ray: &Ray) -> Option<RayHit> {
    if view.nodes.is_empty() {
        return None;
    }
    let mut best: Option<(f64, usize)> = None;
    let mut stack = vec![0usize];
    while let Some(id) = stack.pop() {
        let node = &view.nodes[id];
        let Some(entry) = node.bounds().ray_entry(ray) else { continue };
        if best.is_some_and(|(bt, _)| entry > bt) {
            continue;
        }
        match *node {
            Node::Leaf { start, len, .. } => {
                for &tri in &view.order[start..start + len] {
                    if let Some(t) = view.intersect_triangle(tri, ray) {
                        if better(t, tri, best) {
                            best = Some((t, tri));
                        }
                    }
                }
            }
            Node::Inner { left, right, .. } => {
                stack.push(right);
                stack.push(left);
            }
        }
    }
    best.map(|(t, tri)| view.hit(tri, t))
}

/// Same contract as [`raycast_first_hit`], testing every triangle.
pub fn raycast_exhaustive(view: &TriangulatedView, ray: &Ray) -> Option<RayHit> {
    let mut best: Option<(f64, usize)> = None;
    for tri in 0..view.triangles.len() {
        if let Some(t) = view.intersect_triangle(tri, ray) {
            if better(t, tri, best) {
                best = Some((t, tri));
            }
        }
    }
    best.map(|(t, tri)| view.hit(tri, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::procedural::{cube, icosphere, open_cube, CUBE_POS_X_FACE};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quads_split_in_two() {
        let view = TriangulatedView::new(&cube());
        assert_eq!(view.triangles().len(), 12);
        assert_eq!(view.triangle_faces()[10], 5);
    }

    #[test]
    fn front_face_hit() {
        let view = TriangulatedView::new(&cube());
        let ray = Ray::new([5.0, 0.1, 0.2], [-1.0, 0.0, 0.0]).unwrap();
        let hit = raycast_first_hit(&view, &ray).unwrap();
        assert_eq!(hit.face, CUBE_POS_X_FACE);
        assert!((hit.t - (5.0 - 0.95)).abs() < 1e-12);
        assert!((hit.facing(&ray) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn miss_outside_bounds() {
        let view = TriangulatedView::new(&cube());
        let ray = Ray::new([5.0, 3.0, 0.0], [-1.0, 0.0, 0.0]).unwrap();
        assert!(raycast_first_hit(&view, &ray).is_none());
    }

    #[test]
    fn open_cube_shows_back_face() {
        let view = TriangulatedView::new(&open_cube());
        let ray = Ray::new([5.0, 0.1, 0.2], [-1.0, 0.0, 0.0]).unwrap();
        let hit = raycast_first_hit(&view, &ray).unwrap();
        // the -X face, seen from inside
        assert_eq!(hit.face, 0);
        assert!((hit.facing(&ray) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_exhaustive_search() {
        let view = TriangulatedView::new(&icosphere(2, 0.8));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let origin = [0; 3].map(|_| rng.random_range(-2.0..2.0));
            let target = [0; 3].map(|_| rng.random_range(-0.8..0.8));
            let ray = Ray::towards(origin, target).unwrap();
            let a = raycast_first_hit(&view, &ray);
            let b = raycast_exhaustive(&view, &ray);
            assert_eq!(a.map(|h| (h.face, h.triangle)), b.map(|h| (h.face, h.triangle)));
            if let (Some(a), Some(b)) = (a, b) {
                assert!((a.t - b.t).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn empty_mesh_never_hits() {
        let view = TriangulatedView::new(&Mesh::default());
        let ray = Ray::new([0.0; 3], [1.0, 0.0, 0.0]).unwrap();
        assert!(raycast_first_hit(&view, &ray).is_none());
        assert!(view.is_empty());
    }
}
