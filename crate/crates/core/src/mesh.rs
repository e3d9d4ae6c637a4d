//! Mixed triangle/quad meshes, normalization, n-bit quantization and the
//! canonical vertex/face ordering that tokenization relies on.

use std::cmp::Ordering;

use thiserror::Error;

/// A 3D position in model coordinates.
pub type Point3 = [f64; 3];

/// Half-extent of the normalization cube.
pub const NORMALIZED_HALF_EXTENT: f64 = 0.95;

/// Default quantization bit count.
pub const DEFAULT_BITS: u32 = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeshError {
    #[error("mesh has no vertices")]
    EmptyMesh,
    #[error("all vertices coincide; bounding box has zero extent")]
    DegenerateBounds,
    #[error("face {face} references vertex {index} but the mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: usize, count: usize },
    #[error("face {face} repeats a vertex index")]
    RepeatedIndex { face: usize },
    #[error("face {face} has arity {arity}; only triangles and quads are supported")]
    BadArity { face: usize, arity: usize },
    #[error("vertex {vertex} has a coordinate outside [0, {max}]")]
    CoordinateOutOfRange { vertex: usize, max: u32 },
    #[error("unsupported quantization bit count {0} (expected 2..=14)")]
    InvalidBits(u32),
}

/// A triangle or quad given as an ordered cycle of vertex indices.
///
/// Quads carry their diagonal implicitly: it always joins positions 0 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    Tri([usize; 3]),
    Quad([usize; 4]),
}

impl Face {
    pub fn from_slice(indices: &[usize]) -> Option<Face> {
        match *indices {
            [a, b, c] => Some(Face::Tri([a, b, c])),
            [a, b, c, d] => Some(Face::Quad([a, b, c, d])),
            _ => None,
        }
    }

    pub fn indices(&self) -> &[usize] {
        match self {
            Face::Tri(t) => t,
            Face::Quad(q) => q,
        }
    }

    pub fn arity(&self) -> usize {
        self.indices().len()
    }

    pub fn is_quad(&self) -> bool {
        matches!(self, Face::Quad(_))
    }

    pub fn min_index(&self) -> usize {
        *self.indices().iter().min().expect("faces are never empty")
    }

    pub fn has_repeated_index(&self) -> bool {
        let idx = self.indices();
        (0..idx.len()).any(|i| idx[i + 1..].contains(&idx[i]))
    }

    pub fn map(&self, mut f: impl FnMut(usize) -> usize) -> Face {
        match *self {
            Face::Tri([a, b, c]) => Face::Tri([f(a), f(b), f(c)]),
            Face::Quad([a, b, c, d]) => Face::Quad([f(a), f(b), f(c), f(d)]),
        }
    }

    /// Cyclic rotation by `k` positions to the left (orientation preserved).
    pub fn rotated(&self, k: usize) -> Face {
        match *self {
            Face::Tri(t) => Face::Tri([t[k % 3], t[(k + 1) % 3], t[(k + 2) % 3]]),
            Face::Quad(q) => Face::Quad([q[k % 4], q[(k + 1) % 4], q[(k + 2) % 4], q[(k + 3) % 4]]),
        }
    }

    /// Rotation that puts the smallest index first.
    pub fn min_first(&self) -> Face {
        let idx = self.indices();
        let pos = (0..idx.len()).min_by_key(|&i| idx[i]).unwrap_or(0);
        self.rotated(pos)
    }

    /// Same cycle, opposite winding.
    pub fn reversed(&self) -> Face {
        match *self {
            Face::Tri([a, b, c]) => Face::Tri([a, c, b]),
            Face::Quad([a, b, c, d]) => Face::Quad([a, d, c, b]),
        }
    }

    /// Undirected edges `(lo, hi)` in cyclic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let idx = self.indices();
        let n = idx.len();
        (0..n).map(move |i| undirected(idx[i], idx[(i + 1) % n]))
    }

    /// True when `other` lists the same cycle, possibly rotated.
    pub fn same_cycle(&self, other: &Face) -> bool {
        let a = self.indices();
        let b = other.indices();
        a.len() == b.len() && (0..a.len()).any(|k| (0..a.len()).all(|i| a[(i + k) % a.len()] == b[i]))
    }

    /// Split along the stored 0–2 diagonal.
    pub fn triangles(&self) -> impl Iterator<Item = [usize; 3]> {
        let (first, second) = match *self {
            Face::Tri(t) => (t, None),
            Face::Quad([a, b, c, d]) => ([a, b, c], Some([a, c, d])),
        };
        std::iter::once(first).chain(second)
    }
}

pub(crate) fn undirected(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn cmp_faces(a: &Face, b: &Face) -> Ordering {
    a.indices().cmp(b.indices())
}

fn validate_faces(faces: &[Face], vertex_count: usize) -> Result<(), MeshError> {
    for (fi, face) in faces.iter().enumerate() {
        if let Some(&index) = face.indices().iter().find(|&&i| i >= vertex_count) {
            return Err(MeshError::IndexOutOfRange { face: fi, index, count: vertex_count });
        }
        if face.has_repeated_index() {
            return Err(MeshError::RepeatedIndex { face: fi });
        }
    }
    Ok(())
}

/// Vertex positions plus mixed triangle/quad faces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    vertices: Vec<Point3>,
    faces: Vec<Face>,
}

impl Mesh {
    pub fn new(vertices: Vec<Point3>, faces: Vec<Face>) -> Result<Mesh, MeshError> {
        validate_faces(&faces, vertices.len())?;
        Ok(Mesh { vertices, faces })
    }

    /// Builds a mesh from raw index lists, rejecting arities other than 3 and 4.
    pub fn from_polygons(vertices: Vec<Point3>, polygons: &[Vec<usize>]) -> Result<Mesh, MeshError> {
        let faces = polygons
            .iter()
            .enumerate()
            .map(|(fi, p)| Face::from_slice(p).ok_or(MeshError::BadArity { face: fi, arity: p.len() }))
            .collect::<Result<Vec<_>, _>>()?;
        Mesh::new(vertices, faces)
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn into_parts(self) -> (Vec<Point3>, Vec<Face>) {
        (self.vertices, self.faces)
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn quad_count(&self) -> usize {
        self.faces.iter().filter(|f| f.is_quad()).count()
    }

    /// Per-axis `(min, max)`; `None` for a vertex-less mesh.
    pub fn bounds(&self) -> Option<(Point3, Point3)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(mut lo, mut hi), v| {
            for a in 0..3 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
            (lo, hi)
        }))
    }

    /// The sub-mesh made of `faces[range]`, keeping the full vertex list.
    pub fn face_subset(&self, range: std::ops::Range<usize>) -> Mesh {
        Mesh { vertices: self.vertices.clone(), faces: self.faces[range].to_vec() }
    }

    /// Every face with its winding reversed.
    pub fn flipped(&self) -> Mesh {
        Mesh { vertices: self.vertices.clone(), faces: self.faces.iter().map(Face::reversed).collect() }
    }

    pub fn transformed(&self, f: impl Fn(Point3) -> Point3) -> Mesh {
        Mesh { vertices: self.vertices.iter().map(|&v| f(v)).collect(), faces: self.faces.clone() }
    }

    /// Drops the faces at the given positions.
    pub fn without_faces(&self, drop: &[usize]) -> Mesh {
        let faces = self.faces.iter().enumerate().filter(|(i, _)| !drop.contains(i)).map(|(_, f)| *f).collect();
        Mesh { vertices: self.vertices.clone(), faces }
    }
}

/// Integer vertex lattice produced by [`quantize_vertices`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedMesh {
    vertices: Vec<[u32; 3]>,
    faces: Vec<Face>,
    bits: u32,
}

impl QuantizedMesh {
    pub fn new(vertices: Vec<[u32; 3]>, faces: Vec<Face>, bits: u32) -> Result<QuantizedMesh, MeshError> {
        check_bits(bits)?;
        let max = (1u32 << bits) - 1;
        if let Some(vertex) = vertices.iter().position(|v| v.iter().any(|&c| c > max)) {
            return Err(MeshError::CoordinateOutOfRange { vertex, max });
        }
        validate_faces(&faces, vertices.len())?;
        Ok(QuantizedMesh { vertices, faces, bits })
    }

    pub fn vertices(&self) -> &[[u32; 3]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Sorted unique vertices, min-first faces in ascending tuple order.
    pub fn is_canonical(&self) -> bool {
        self.vertices.windows(2).all(|w| w[0] < w[1])
            && self.faces.iter().all(|f| f.indices()[0] == f.min_index())
            && self.faces.windows(2).all(|w| cmp_faces(&w[0], &w[1]) != Ordering::Greater)
    }

    /// Map back to real coordinates inside `bounds`.
    pub fn dequantize(&self, bounds: &QuantBounds) -> Mesh {
        Mesh {
            vertices: self.vertices.iter().map(|q| bounds.dequantize_point(*q, self.bits)).collect(),
            faces: self.faces.clone(),
        }
    }
}

pub(crate) fn check_bits(bits: u32) -> Result<(), MeshError> {
    if (2..=14).contains(&bits) {
        Ok(())
    } else {
        Err(MeshError::InvalidBits(bits))
    }
}

/// Per-axis `[v_min, v_max]` used by quantization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantBounds {
    pub min: Point3,
    pub max: Point3,
}

impl QuantBounds {
    /// The same interval on every axis.
    pub fn cube(lo: f64, hi: f64) -> QuantBounds {
        QuantBounds { min: [lo; 3], max: [hi; 3] }
    }

    /// The normalization cube `[-0.95, 0.95]^3`.
    pub fn normalized() -> QuantBounds {
        QuantBounds::cube(-NORMALIZED_HALF_EXTENT, NORMALIZED_HALF_EXTENT)
    }

    /// `round((v - v_min) / (v_max - v_min) * 2^n)` clamped to `[0, 2^n - 1]`.
    /// Rounding is half-away-from-zero. A zero-extent axis maps to 0.
    pub fn quantize_coord(&self, axis: usize, v: f64, bits: u32) -> u32 {
        let extent = self.max[axis] - self.min[axis];
        if extent <= 0.0 {
            return 0;
        }
        let levels = (1u64 << bits) as f64;
        let raw = ((v - self.min[axis]) / extent * levels).round();
        raw.clamp(0.0, levels - 1.0) as u32
    }

    pub fn dequantize_coord(&self, axis: usize, q: u32, bits: u32) -> f64 {
        let extent = self.max[axis] - self.min[axis];
        self.min[axis] + q as f64 / (1u64 << bits) as f64 * extent
    }

    pub fn dequantize_point(&self, q: [u32; 3], bits: u32) -> Point3 {
        [0, 1, 2].map(|a| self.dequantize_coord(a, q[a], bits))
    }

    /// Quantization step on `axis`.
    pub fn step(&self, axis: usize, bits: u32) -> f64 {
        (self.max[axis] - self.min[axis]) / (1u64 << bits) as f64
    }
}

/// Result of [`quantize_vertices`]: the lattice mesh plus what is needed to invert it.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantization {
    pub mesh: QuantizedMesh,
    pub bounds: QuantBounds,
    /// Axes whose extent was zero; every vertex maps to 0 there.
    pub degenerate_axes: Vec<usize>,
}

/// Center the bounding box at the origin and scale uniformly so the longest
/// axis spans exactly `[-0.95, 0.95]`.
pub fn normalize_mesh(mesh: &Mesh) -> Result<Mesh, MeshError> {
    let (lo, hi) = mesh.bounds().ok_or(MeshError::EmptyMesh)?;
    let extent = (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
    if extent <= 0.0 {
        return Err(MeshError::DegenerateBounds);
    }
    let center = [0, 1, 2].map(|a| (lo[a] + hi[a]) / 2.0);
    let scale = 2.0 * NORMALIZED_HALF_EXTENT / extent;
    Ok(mesh.transformed(|v| [0, 1, 2].map(|a| (v[a] - center[a]) * scale)))
}

/// n-bit quantization against the mesh's own per-axis bounding box.
pub fn quantize_vertices(mesh: &Mesh, bits: u32) -> Result<Quantization, MeshError> {
    check_bits(bits)?;
    let (min, max) = mesh.bounds().ok_or(MeshError::EmptyMesh)?;
    let bounds = QuantBounds { min, max };
    Ok(quantize_with_bounds(mesh, bits, bounds))
}

/// Quantization against caller-supplied bounds (e.g. the fixed normalization cube).
pub fn quantize_with_bounds(mesh: &Mesh, bits: u32, bounds: QuantBounds) -> Quantization {
    let degenerate_axes = (0..3).filter(|&a| bounds.max[a] - bounds.min[a] <= 0.0).collect();
    let vertices = mesh.vertices().iter().map(|v| [0, 1, 2].map(|a| bounds.quantize_coord(a, v[a], bits))).collect();
    let mesh = QuantizedMesh { vertices, faces: mesh.faces().to_vec(), bits };
    Quantization { mesh, bounds, degenerate_axes }
}

/// What [`canonicalize`] had to change.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CanonicalReport {
    pub merged_vertices: usize,
    pub dropped_faces: usize,
}

/// Merge duplicate lattice points, drop faces that collapse, sort vertices by
/// `(x, y, z)`, rotate each face min-index-first and sort faces by index tuple.
pub fn canonicalize(qmesh: &QuantizedMesh) -> (QuantizedMesh, CanonicalReport) {
    let mut sorted = qmesh.vertices.clone();
    sorted.sort_unstable();
    sorted.dedup();
    let remap: Vec<usize> = qmesh
        .vertices
        .iter()
        .map(|v| sorted.binary_search(v).expect("vertex present in its own sorted copy"))
        .collect();

    let mut faces = Vec::with_capacity(qmesh.faces.len());
    let mut dropped = 0;
    for face in &qmesh.faces {
        let mapped = face.map(|i| remap[i]);
        if mapped.has_repeated_index() {
            dropped += 1;
        } else {
            faces.push(mapped.min_first());
        }
    }
    faces.sort_by(cmp_faces);

    let report = CanonicalReport { merged_vertices: qmesh.vertices.len() - sorted.len(), dropped_faces: dropped };
    (QuantizedMesh { vertices: sorted, faces, bits: qmesh.bits }, report)
}
