//! Small procedural meshes used as fixtures and as toy-task conditions.
//!
//! Every closed shape here is wound counterclockwise when seen from outside.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::mesh::{Face, Mesh, Point3, NORMALIZED_HALF_EXTENT};

/// Axis-aligned box as six quads. Vertex `i` has corner bits `(x, y, z) = (i>>2, i>>1, i) & 1`.
pub fn cuboid(lo: Point3, hi: Point3) -> Mesh {
    let mut vertices = Vec::with_capacity(8);
    for i in 0..8usize {
        let pick = |axis: usize, bit: usize| if i >> bit & 1 == 1 { hi[axis] } else { lo[axis] };
        vertices.push([pick(0, 2), pick(1, 1), pick(2, 0)]);
    }
    let faces = vec![
        Face::Quad([0, 1, 3, 2]), // -X
        Face::Quad([4, 6, 7, 5]), // +X
        Face::Quad([0, 4, 5, 1]), // -Y
        Face::Quad([2, 3, 7, 6]), // +Y
        Face::Quad([0, 2, 6, 4]), // -Z
        Face::Quad([1, 5, 7, 3]), // +Z
    ];
    Mesh::new(vertices, faces).expect("static cuboid topology")
}

/// The normalization cube `[-0.95, 0.95]^3`.
pub fn cube() -> Mesh {
    let h = NORMALIZED_HALF_EXTENT;
    cuboid([-h; 3], [h; 3])
}

/// Index of the +X face in [`cuboid`] / [`cube`].
pub const CUBE_POS_X_FACE: usize = 1;

/// [`cube`] without its +X face.
pub fn open_cube() -> Mesh {
    cube().without_faces(&[CUBE_POS_X_FACE])
}

/// Quad torus with `major` segments around the axis and `minor` around the tube.
pub fn torus(major: usize, minor: usize, radius: f64, tube: f64) -> Mesh {
    let mut vertices = Vec::with_capacity(major * minor);
    for i in 0..major {
        let theta = 2.0 * PI * i as f64 / major as f64;
        for j in 0..minor {
            let phi = 2.0 * PI * j as f64 / minor as f64;
            let ring = radius + tube * phi.cos();
            vertices.push([ring * theta.cos(), ring * theta.sin(), tube * phi.sin()]);
        }
    }
    let id = |i: usize, j: usize| (i % major) * minor + (j % minor);
    let mut faces = Vec::with_capacity(major * minor);
    for i in 0..major {
        for j in 0..minor {
            faces.push(Face::Quad([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]));
        }
    }
    Mesh::new(vertices, faces).expect("static torus topology")
}

/// Open tube of `segments` quads around the z axis (no caps).
pub fn band(segments: usize, radius: f64, half_height: f64) -> Mesh {
    let mut vertices = Vec::with_capacity(2 * segments);
    for z in [-half_height, half_height] {
        for i in 0..segments {
            let t = 2.0 * PI * i as f64 / segments as f64;
            vertices.push([radius * t.cos(), radius * t.sin(), z]);
        }
    }
    let faces = (0..segments)
        .map(|i| {
            let n = (i + 1) % segments;
            Face::Quad([i, n, segments + n, segments + i])
        })
        .collect();
    Mesh::new(vertices, faces).expect("static band topology")
}

/// Flat `nx × ny` quad grid on `z = 0` spanning `[-size, size]^2`, facing +Z.
pub fn grid(nx: usize, ny: usize, size: f64) -> Mesh {
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = -size + 2.0 * size * i as f64 / nx as f64;
            let y = -size + 2.0 * size * j as f64 / ny as f64;
            vertices.push([x, y, 0.0]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push(Face::Quad([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]));
        }
    }
    Mesh::new(vertices, faces).expect("static grid topology")
}

/// Triangulated version of [`grid`] (every quad split along its 0–2 diagonal).
pub fn triangle_grid(nx: usize, ny: usize, size: f64) -> Mesh {
    let quads = grid(nx, ny, size);
    let faces = quads.faces().iter().flat_map(|f| f.triangles().map(Face::Tri)).collect();
    Mesh::new(quads.vertices().to_vec(), faces).expect("triangulated grid topology")
}

/// Closed triangular prism: two triangle caps and three quad sides.
pub fn prism(lo: Point3, hi: Point3) -> Mesh {
    let vertices = vec![
        [lo[0], lo[1], lo[2]],
        [hi[0], lo[1], lo[2]],
        [lo[0], hi[1], lo[2]],
        [lo[0], lo[1], hi[2]],
        [hi[0], lo[1], hi[2]],
        [lo[0], hi[1], hi[2]],
    ];
    let faces = vec![
        Face::Tri([0, 2, 1]),     // bottom, -Z
        Face::Tri([3, 4, 5]),     // top, +Z
        Face::Quad([0, 1, 4, 3]), // -Y
        Face::Quad([1, 2, 5, 4]), // slanted
        Face::Quad([2, 0, 3, 5]), // -X
    ];
    Mesh::new(vertices, faces).expect("static prism topology")
}

/// Subdivided icosahedron projected to a sphere of `radius`.
/// `subdivisions = 2` gives 320 triangles.
pub fn icosphere(subdivisions: usize, radius: f64) -> Mesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Point3>| {
            *midpoints.entry(crate::mesh::undirected(a, b)).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push([0, 1, 2].map(|k| (p[k] + q[k]) / 2.0));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for [a, b, c] in tris {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    for v in &mut vertices {
        let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        *v = v.map(|c| c / len * radius);
    }
    Mesh::new(vertices, tris.into_iter().map(Face::Tri).collect()).expect("icosphere topology")
}
