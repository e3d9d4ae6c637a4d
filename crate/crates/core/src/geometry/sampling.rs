use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{add, cross, norm, normalized, scale, sub, GeometryError};
use crate::mesh::{Mesh, Point3};

/// Area-uniform surface samples with the normal and source face of each.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSample {
    pub points: Vec<Point3>,
    pub normals: Vec<Point3>,
    pub faces: Vec<usize>,
}

/// Quads are split along their 0–2 diagonal; deterministic for a given seed.
pub fn sample_surface(mesh: &Mesh, count: usize, seed: u64) -> Result<SurfaceSample, GeometryError> {
    let v = mesh.vertices();
    let mut tris = Vec::new();
    let mut cumulative = Vec::new();
    let mut total = 0.0;
    for (fi, face) in mesh.faces().iter().enumerate() {
        for [a, b, c] in face.triangles() {
            let n = cross(sub(v[b], v[a]), sub(v[c], v[a]));
            let area = 0.5 * norm(n);
            if area > 0.0 && area.is_finite() {
                total += area;
                cumulative.push(total);
                tris.push(([v[a], v[b], v[c]], normalized(n).unwrap_or([0.0; 3]), fi));
            }
        }
    }
    if tris.is_empty() {
        return Err(GeometryError::NoArea);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SurfaceSample {
        points: Vec::with_capacity(count),
        normals: Vec::with_capacity(count),
        faces: Vec::with_capacity(count),
    };
    for _ in 0..count {
        let r = rng.random::<f64>() * total;
        let k = cumulative.partition_point(|&c| c <= r).min(tris.len() - 1);
        let ([a, b, c], n, fi) = tris[k];
        let s = rng.random::<f64>().sqrt();
        let t = rng.random::<f64>();
        let p = add(add(scale(a, 1.0 - s), scale(b, s * (1.0 - t))), scale(c, s * t));
        out.points.push(p);
        out.normals.push(n);
        out.faces.push(fi);
    }
    Ok(out)
}

pub fn sample_surface_points(mesh: &Mesh, count: usize, seed: u64) -> Result<Vec<Point3>, GeometryError> {
    sample_surface(mesh, count, seed).map(|s| s.points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Face;

    fn unit_square() -> Mesh {
        Mesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
            vec![Face::Quad([0, 1, 2, 3])],
        )
        .unwrap()
    }

    #[test]
    fn samples_inside_square() {
        let pts = sample_surface_points(&unit_square(), 4, 1).unwrap();
        assert_eq!(pts.len(), 4);
        for p in pts {
            assert!((0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1]) && p[2] == 0.0);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = sample_surface(&unit_square(), 50, 9).unwrap();
        assert_eq!(a, sample_surface(&unit_square(), 50, 9).unwrap());
        assert_ne!(a.points, sample_surface_points(&unit_square(), 50, 10).unwrap());
    }

    #[test]
    fn area_weighting() {
        // triangle areas 1 and 3
        let mesh = Mesh::new(
            vec![
                [0.0, 0.0, 0.0],
                [2.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [10.0, 0.0, 0.0],
                [16.0, 0.0, 0.0],
                [10.0, 1.0, 0.0],
            ],
            vec![Face::Tri([0, 1, 2]), Face::Tri([3, 4, 5])],
        )
        .unwrap();
        let n = 10_000;
        let s = sample_surface(&mesh, n, 4).unwrap();
        let first = s.faces.iter().filter(|&&f| f == 0).count() as f64;
        let sd = (n as f64 * 0.25 * 0.75).sqrt();
        assert!((first - 0.25 * n as f64).abs() < 4.0 * sd, "{first}");
    }

    #[test]
    fn no_area_is_an_error() {
        let flat = Mesh::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], vec![Face::Tri([0, 1, 2])]).unwrap();
        assert_eq!(sample_surface_points(&flat, 3, 0), Err(GeometryError::NoArea));
        assert_eq!(sample_surface_points(&Mesh::default(), 3, 0), Err(GeometryError::NoArea));
    }
}
