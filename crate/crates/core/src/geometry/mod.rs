//! Ray casting, surface sampling and point-set distances.

mod bvh;
mod distance;
mod kdtree;
mod sampling;

use thiserror::Error;

use crate::mesh::Point3;

pub use bvh::{raycast_exhaustive, raycast_first_hit, TriangulatedView};
pub use distance::{chamfer_distance, f1_score, hausdorff_distance, normal_consistency, F1Score};
pub use kdtree::KdTree;
pub use sampling::{sample_surface, sample_surface_points, SurfaceSample};

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum GeometryError {
    #[error("mesh has no face with positive area")]
    NoArea,
    #[error("point set is empty")]
    EmptySet,
}

pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn add(a: Point3, b: Point3) -> Point3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn scale(a: Point3, s: f64) -> Point3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Point3, b: Point3) -> Point3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist2(a: Point3, b: Point3) -> f64 {
    let d = sub(a, b);
    dot(d, d)
}

/// `a / |a|`, or `None` for the zero vector.
pub(crate) fn normalized(a: Point3) -> Option<Point3> {
    let n = norm(a);
    (n > 0.0 && n.is_finite()).then(|| scale(a, 1.0 / n))
}

/// Half-line `origin + t · direction`, `t ≥ 0`, with a unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Point3,
    pub direction: Point3,
}

impl Ray {
    /// Normalizes `direction`; `None` if it is zero or not finite.
    pub fn new(origin: Point3, direction: Point3) -> Option<Ray> {
        normalized(direction).map(|direction| Ray { origin, direction })
    }

    /// Ray from `from` aimed at `to`.
    pub fn towards(from: Point3, to: Point3) -> Option<Ray> {
        Ray::new(from, sub(to, from))
    }

    pub fn at(&self, t: f64) -> Point3 {
        add(self.origin, scale(self.direction, t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    /// Source face in the mesh.
    pub face: usize,
    /// Triangle of the [`TriangulatedView`] that was hit.
    pub triangle: usize,
    pub t: f64,
    /// Unit normal of the hit triangle, oriented by its counterclockwise winding.
    pub normal: Point3,
}

impl RayHit {
    /// `n · (−d)`: positive for a front-face hit, negative for a back face.
    pub fn facing(&self, ray: &Ray) -> f64 {
        -dot(self.normal, ray.direction)
    }
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn empty() -> Aabb {
        Aabb { min: [f64::INFINITY; 3], max: [f64::NEG_INFINITY; 3] }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3>) -> Aabb {
        let mut b = Aabb::empty();
        for p in points {
            b.grow(*p);
        }
        b
    }

    pub fn grow(&mut self, p: Point3) {
        for (a, &c) in p.iter().enumerate() {
            self.min[a] = self.min[a].min(c);
            self.max[a] = self.max[a].max(c);
        }
    }

    pub fn merge(&self, other: &Aabb) -> Aabb {
        let mut b = *self;
        b.grow(other.min);
        b.grow(other.max);
        b
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|a| self.min[a] > self.max[a])
    }

    pub fn center(&self) -> Point3 {
        [0, 1, 2].map(|a| (self.min[a] + self.max[a]) / 2.0)
    }

    pub fn extent(&self) -> Point3 {
        sub(self.max, self.min)
    }

    pub fn diagonal(&self) -> f64 {
        norm(self.extent())
    }

    pub fn padded(&self, pad: f64) -> Aabb {
        Aabb { min: self.min.map(|c| c - pad), max: self.max.map(|c| c + pad) }
    }

    /// Entry parameter of the ray into the box, if it enters at `t ≥ 0`.
    pub fn ray_entry(&self, ray: &Ray) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = f64::INFINITY;
        for a in 0..3 {
            let (o, d) = (ray.origin[a], ray.direction[a]);
            if d == 0.0 {
                if o < self.min[a] || o > self.max[a] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / d;
            let (mut near, mut far) = ((self.min[a] - o) * inv, (self.max[a] - o) * inv);
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

/// Six-direction ray grid around `bounds`.
///
/// For each of ±X, ±Y, ±Z a `per_axis × per_axis` grid of origins is placed on
/// a plane outside the box, at cell centers of the box's cross-section. Every
/// origin casts the axis-aligned ray and one perturbed ray with direction
/// `normalize(axis + jitter · g)`, `g` uniform in the unit ball, so the
/// perturbed ray deviates from the axis by at most `asin(jitter)`.
pub fn orthogonal_ray_grid(bounds: &Aabb, per_axis: usize, jitter: f64, rng: &mut impl rand::Rng) -> Vec<Ray> {
    let per_axis = per_axis.max(1);
    let margin = 0.1 * bounds.diagonal().max(1e-6);
    let mut rays = Vec::with_capacity(12 * per_axis * per_axis);
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for sign in [1.0, -1.0] {
            let mut dir = [0.0; 3];
            dir[axis] = sign;
            let start = if sign > 0.0 { bounds.min[axis] - margin } else { bounds.max[axis] + margin };
            for i in 0..per_axis {
                for j in 0..per_axis {
                    let fu = (i as f64 + 0.5) / per_axis as f64;
                    let fv = (j as f64 + 0.5) / per_axis as f64;
                    let mut origin = [0.0; 3];
                    origin[axis] = start;
                    origin[u] = bounds.min[u] + fu * (bounds.max[u] - bounds.min[u]);
                    origin[v] = bounds.min[v] + fv * (bounds.max[v] - bounds.min[v]);
                    rays.push(Ray { origin, direction: dir });
                    let g = unit_ball(rng);
                    let perturbed =
                        Ray::new(origin, add(dir, scale(g, jitter))).unwrap_or(Ray { origin, direction: dir });
                    rays.push(perturbed);
                }
            }
        }
    }
    rays
}

/// Uniform point in the unit ball (rejection sampling).
pub(crate) fn unit_ball(rng: &mut impl rand::Rng) -> Point3 {
    loop {
        let p: Point3 = [0; 3].map(|_| rng.random_range(-1.0..=1.0));
        if dot(p, p) <= 1.0 {
            return p;
        }
    }
}
