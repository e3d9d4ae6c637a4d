//! Undirected edge → incident-face maps.

use std::collections::{BTreeMap, BTreeSet};

use crate::mesh::Face;

/// An undirected edge, stored with the smaller vertex index first.
pub type Edge = (usize, usize);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeAdjacency {
    edges: BTreeMap<Edge, Vec<usize>>,
    face_edges: Vec<Vec<Edge>>,
}

impl EdgeAdjacency {
    pub fn from_faces(faces: &[Face]) -> EdgeAdjacency {
        let mut edges: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
        let mut face_edges = Vec::with_capacity(faces.len());
        for (fi, face) in faces.iter().enumerate() {
            let fe: Vec<Edge> = face.edges().collect();
            for &e in &fe {
                edges.entry(e).or_default().push(fi);
            }
            face_edges.push(fe);
        }
        EdgeAdjacency { edges, face_edges }
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in ascending `(lo, hi)` order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.keys().copied()
    }

    pub fn incident_faces(&self, edge: Edge) -> &[usize] {
        self.edges.get(&edge).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn face_edges(&self, face: usize) -> &[Edge] {
        &self.face_edges[face]
    }

    pub fn is_boundary(&self, edge: Edge) -> bool {
        self.incident_faces(edge).len() == 1
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().filter(|(_, f)| f.len() == 1).map(|(e, _)| *e)
    }

    /// Edges shared by more than two faces.
    pub fn non_manifold_edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().filter(|(_, f)| f.len() > 2).map(|(e, _)| *e)
    }

    /// Faces with at least one boundary edge.
    pub fn boundary_faces(&self) -> BTreeSet<usize> {
        self.edges.values().filter(|f| f.len() == 1).map(|f| f[0]).collect()
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_edges().next().is_none()
    }
}

/// Edge adjacency of any mesh's face list.
pub fn build_edge_adjacency(mesh: &crate::mesh::Mesh) -> EdgeAdjacency {
    EdgeAdjacency::from_faces(mesh.faces())
}
