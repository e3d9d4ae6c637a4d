use std::collections::BTreeSet;

use crate::adjacency::{Edge, EdgeAdjacency};
use crate::mesh::{undirected, Face, Mesh};

/// Quad rings and quad lines found by opposite-edge walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QuadFlow {
    pub rings: usize,
    pub lines: usize,
    /// Edges visited by some walk.
    pub walked_edges: usize,
    /// Edges with no incident quad; no walk starts there.
    pub triangle_only_edges: usize,
}

fn opposite_edge(face: &Face, edge: Edge) -> Option<Edge> {
    let Face::Quad(q) = *face else { return None };
    (0..4).find(|&k| undirected(q[k], q[(k + 1) % 4]) == edge).map(|k| undirected(q[(k + 2) % 4], q[(k + 3) % 4]))
}

/// Walks every edge once in ascending `(lo, hi)` order. From the current edge
/// the walk enters an incident quad not yet used by this walk (lowest face id;
/// at the start edge, a quad whose opposite edge is still unprocessed is
/// preferred) and moves to its opposite edge. The walk ends at an edge with no
/// such quad, an edge shared by more than two faces, an edge already processed
/// by an earlier walk, or an edge already on its own path. It is a ring if it
/// came back to its start edge, a line otherwise.
pub fn quad_flow_faces(faces: &[Face]) -> QuadFlow {
    let adj = EdgeAdjacency::from_faces(faces);
    let mut processed: BTreeSet<Edge> = BTreeSet::new();
    let mut flow = QuadFlow::default();
    for start in adj.edges() {
        if processed.contains(&start) {
            continue;
        }
        let quads = |e: Edge| adj.incident_faces(e).iter().copied().filter(|&f| faces[f].is_quad());
        if quads(start).next().is_none() {
            flow.triangle_only_edges += 1;
            continue;
        }
        let mut path = vec![start];
        let mut on_path: BTreeSet<Edge> = BTreeSet::from([start]);
        let mut used: Vec<usize> = Vec::new();
        let mut current = start;
        let mut ring = false;
        loop {
            if adj.incident_faces(current).len() > 2 {
                break;
            }
            let mut candidates: Vec<usize> = quads(current).filter(|f| !used.contains(f)).collect();
            if current == start && path.len() == 1 {
                candidates.sort_by_key(|&f| {
                    let opp = opposite_edge(&faces[f], current).expect("quad contains its edge");
                    (processed.contains(&opp), f)
                });
            }
            let Some(&face) = candidates.first() else { break };
            used.push(face);
            let next = opposite_edge(&faces[face], current).expect("quad contains its edge");
            if next == start {
                ring = true;
                break;
            }
            if on_path.contains(&next) || processed.contains(&next) {
                break;
            }
            path.push(next);
            on_path.insert(next);
            current = next;
        }
        flow.walked_edges += path.len();
        processed.extend(path);
        if ring {
            flow.rings += 1;
        } else {
            flow.lines += 1;
        }
    }
    flow
}

/// `(N_qr, N_ql)` of a mesh.
pub fn quad_flow_analysis(mesh: &Mesh) -> (usize, usize) {
    let flow = quad_flow_faces(mesh.faces());
    (flow.rings, flow.lines)
}
