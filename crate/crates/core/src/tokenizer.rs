//! Diagonal-aware serialization of mixed triangle/quad meshes.
//!
//! Every face becomes a 12-token block. A triangle writes its three vertices
//! (9 coordinate tokens) followed by three padding tokens `3S`, where
//! `S = 2^bits`. A quad writes three vertices, then the fourth vertex with each
//! coordinate offset by `flag · S`. The flag (0, 1 or 2) records how the quad
//! was reordered so the decoder can restore its original cycle, and with it the
//! 0–2 diagonal.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::mesh::{check_bits, Face, MeshError, QuantizedMesh};

pub const BLOCK_LEN: usize = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TokenError {
    #[error("triangle {face} does not start with its minimum vertex index")]
    NonCanonicalFace { face: usize },
    #[error("face {face} references a vertex outside the vertex list")]
    MissingVertex { face: usize },
    #[error("vertex coordinate {value} does not fit in {bits} bits")]
    CoordinateOutOfRange { value: u32, bits: u32 },
    #[error("sequence length {len} is not a multiple of 12")]
    LengthNotMultipleOf12 { len: usize },
    #[error("block {block}: padding tokens only partially present")]
    MixedPadding { block: usize },
    #[error("block {block}: fourth-vertex components disagree on the diagonal flag")]
    InconsistentFlag { block: usize },
    #[error("block {block}: token {token} at position {position} is out of range")]
    TokenOutOfRange { block: usize, position: usize, token: u32 },
    #[error("block {block}: face repeats a vertex")]
    DegenerateFace { block: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Which diagonal of a quad was used during serialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DiagonalFlag(u8);

impl DiagonalFlag {
    pub fn new(value: u8) -> Option<DiagonalFlag> {
        (value <= 2).then_some(DiagonalFlag(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

/// Flat token stream, 12 tokens per face.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    tokens: Vec<u32>,
    bits: u32,
}

impl TokenSequence {
    pub fn new(tokens: Vec<u32>, bits: u32) -> Result<TokenSequence, TokenError> {
        check_bits(bits)?;
        Ok(TokenSequence { tokens, bits })
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<u32> {
        self.tokens
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// `S = 2^bits`.
    pub fn special(&self) -> u32 {
        special(self.bits)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn blocks(&self) -> std::slice::ChunksExact<'_, u32> {
        self.tokens.chunks_exact(BLOCK_LEN)
    }
}

/// `S = 2^bits`.
pub fn special(bits: u32) -> u32 {
    1 << bits
}

/// `3S + 1`: coordinates, two flagged copies of the coordinate range, and padding.
pub fn vocab_size(bits: u32) -> usize {
    3 * special(bits) as usize + 1
}

/// The 12 tokens of one face.
pub fn serialize_face(face: &Face, vertices: &[[u32; 3]], bits: u32) -> Result<[u32; BLOCK_LEN], TokenError> {
    serialize_face_at(0, face, vertices, bits)
}

fn serialize_face_at(fi: usize, face: &Face, vertices: &[[u32; 3]], bits: u32) -> Result<[u32; BLOCK_LEN], TokenError> {
    let s = special(bits);
    let vertex = |i: usize| -> Result<[u32; 3], TokenError> {
        let v = *vertices.get(i).ok_or(TokenError::MissingVertex { face: fi })?;
        match v.iter().find(|&&c| c >= s) {
            Some(&value) => Err(TokenError::CoordinateOutOfRange { value, bits }),
            None => Ok(v),
        }
    };
    let (order, flag, tail_pad) = match *face {
        Face::Tri(t) => {
            if t[0] != face.min_index() {
                return Err(TokenError::NonCanonicalFace { face: fi });
            }
            ([t[0], t[1], t[2], 0], 0, true)
        }
        Face::Quad(q) => {
            let (order, flag) = quad_order(q);
            (order, flag.value() as u32, false)
        }
    };
    let mut out = [0u32; BLOCK_LEN];
    for (slot, &vi) in order[..3].iter().enumerate() {
        out[slot * 3..slot * 3 + 3].copy_from_slice(&vertex(vi)?);
    }
    if tail_pad {
        out[9..].fill(3 * s);
    } else {
        let v4 = vertex(order[3])?;
        for k in 0..3 {
            out[9 + k] = v4[k] + flag * s;
        }
    }
    Ok(out)
}

/// Reorder a quad so its minimum vertex leads and the smaller of the two
/// triangles on the 0–2 diagonal comes first.
fn quad_order(f: [usize; 4]) -> ([usize; 4], DiagonalFlag) {
    // A minimum at position 2 is the position-0 case after a half turn; the
    // half turn keeps the 0–2 diagonal.
    let f = if argmin(&f) == 2 { [f[2], f[3], f[0], f[1]] } else { f };
    match argmin(&f) {
        0 if f[1] < f[3] => ([f[0], f[1], f[2], f[3]], DiagonalFlag(0)),
        0 => ([f[0], f[2], f[3], f[1]], DiagonalFlag(1)),
        1 => ([f[1], f[2], f[0], f[3]], DiagonalFlag(2)),
        _ => ([f[3], f[0], f[2], f[1]], DiagonalFlag(2)),
    }
}

fn argmin(f: &[usize; 4]) -> usize {
    (0..4).min_by_key(|&i| f[i]).unwrap_or(0)
}

/// Concatenated face blocks in face order.
pub fn tokenize(qmesh: &QuantizedMesh) -> Result<TokenSequence, TokenError> {
    let mut tokens = Vec::with_capacity(qmesh.faces().len() * BLOCK_LEN);
    for (fi, face) in qmesh.faces().iter().enumerate() {
        tokens.extend_from_slice(&serialize_face_at(fi, face, qmesh.vertices(), qmesh.bits())?);
    }
    Ok(TokenSequence { tokens, bits: qmesh.bits() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    /// Any malformed block is an error.
    Strict,
    /// Malformed blocks are skipped and counted; a trailing partial block is ignored.
    Permissive,
}

/// Output of [`detokenize`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Detokenized {
    pub mesh: QuantizedMesh,
    /// Blocks that were skipped (permissive mode only).
    pub dropped_faces: usize,
    /// For each full block, the face it produced.
    pub block_faces: Vec<Option<usize>>,
}

impl Detokenized {
    /// Faces produced by blocks `first_block..first_block + count`.
    pub fn faces_in_blocks(&self, first_block: usize, count: usize) -> std::ops::Range<usize> {
        let end_block = (first_block + count).min(self.block_faces.len());
        let start_block = first_block.min(end_block);
        let window = &self.block_faces[start_block..end_block];
        let first = window.iter().flatten().next().copied();
        let last = window.iter().rev().flatten().next().copied();
        match (first, last) {
            (Some(a), Some(b)) => a..b + 1,
            _ => {
                // empty: anchor at the next produced face to keep ranges ordered
                let anchor = self.block_faces[end_block..].iter().flatten().next().copied();
                let at = anchor.unwrap_or(self.mesh.faces().len());
                at..at
            }
        }
    }
}

enum BlockFace {
    Tri([[u32; 3]; 3]),
    Quad([[u32; 3]; 4]),
}

fn decode_block(block_idx: usize, block: &[u32], bits: u32, strictness: Strictness) -> Result<BlockFace, TokenError> {
    let s = special(bits);
    let pad = 3 * s;
    if let Some((position, &token)) = block.iter().enumerate().find(|(_, &t)| t > pad) {
        return Err(TokenError::TokenOutOfRange { block: block_idx, position, token });
    }
    let pads = block[9..].iter().filter(|&&t| t == pad).count();
    if pads != 0 && pads != 3 {
        return Err(TokenError::MixedPadding { block: block_idx });
    }
    if let Some((position, &token)) = block[..9].iter().enumerate().find(|(_, &t)| t >= s) {
        return Err(TokenError::TokenOutOfRange { block: block_idx, position, token });
    }
    let v = |i: usize| [block[3 * i], block[3 * i + 1], block[3 * i + 2]];
    let face = if pads == 3 {
        let tri = [v(0), v(1), v(2)];
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            return Err(TokenError::DegenerateFace { block: block_idx });
        }
        BlockFace::Tri(tri)
    } else {
        let mut v3 = [0u32; 3];
        let mut flags = [0u32; 3];
        for k in 0..3 {
            flags[k] = block[9 + k] / s;
            v3[k] = block[9 + k] - flags[k] * s;
        }
        if (flags[0] != flags[1] || flags[1] != flags[2]) && strictness == Strictness::Strict {
            return Err(TokenError::InconsistentFlag { block: block_idx });
        }
        // last component wins when they disagree
        let (v0, v1, v2) = (v(0), v(1), v(2));
        let quad = match flags[2] {
            0 => [v0, v1, v2, v3],
            1 => [v0, v3, v1, v2],
            _ => [v2, v0, v1, v3],
        };
        if (0..4).any(|i| quad[i + 1..].contains(&quad[i])) {
            return Err(TokenError::DegenerateFace { block: block_idx });
        }
        BlockFace::Quad(quad)
    };
    Ok(face)
}

/// Inverse of [`tokenize`]. Vertices are deduplicated and listed in
/// lexicographic order.
pub fn detokenize(seq: &TokenSequence, strictness: Strictness) -> Result<Detokenized, TokenError> {
    let bits = seq.bits();
    if strictness == Strictness::Strict && !seq.len().is_multiple_of(BLOCK_LEN) {
        return Err(TokenError::LengthNotMultipleOf12 { len: seq.len() });
    }
    let mut decoded = Vec::with_capacity(seq.len() / BLOCK_LEN);
    let mut block_faces = Vec::with_capacity(seq.len() / BLOCK_LEN);
    let mut dropped = 0;
    for (bi, block) in seq.blocks().enumerate() {
        match decode_block(bi, block, bits, strictness) {
            Ok(face) => {
                block_faces.push(Some(decoded.len()));
                decoded.push(face);
            }
            Err(e) if strictness == Strictness::Strict => return Err(e),
            Err(_) => {
                block_faces.push(None);
                dropped += 1;
            }
        }
    }

    let mut index: BTreeMap<[u32; 3], usize> = BTreeMap::new();
    for face in &decoded {
        let pts: &[[u32; 3]] = match face {
            BlockFace::Tri(t) => t,
            BlockFace::Quad(q) => q,
        };
        for p in pts {
            index.insert(*p, 0);
        }
    }
    for (i, slot) in index.values_mut().enumerate() {
        *slot = i;
    }
    let vertices: Vec<[u32; 3]> = index.keys().copied().collect();
    let faces = decoded
        .iter()
        .map(|face| match face {
            BlockFace::Tri(t) => Face::Tri(t.map(|p| index[&p])),
            BlockFace::Quad(q) => Face::Quad(q.map(|p| index[&p])),
        })
        .collect();
    let mesh = QuantizedMesh::new(vertices, faces, bits)?;
    Ok(Detokenized { mesh, dropped_faces: dropped, block_faces })
}

/// One violated sequence invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenIssue {
    LengthNotMultipleOf12 {
        len: usize,
    },
    TokenOutOfRange {
        block: usize,
        position: usize,
    },
    MixedPadding {
        block: usize,
    },
    /// A quad block has a flagged or padding token among its first nine.
    FlaggedCoordinate {
        block: usize,
        position: usize,
    },
    InconsistentFlag {
        block: usize,
    },
}

/// Every invariant violation in `seq`; empty for a well-formed sequence.
pub fn validate_tokens(seq: &TokenSequence) -> Vec<TokenIssue> {
    let s = seq.special();
    let pad = 3 * s;
    let mut issues = Vec::new();
    if !seq.len().is_multiple_of(BLOCK_LEN) {
        issues.push(TokenIssue::LengthNotMultipleOf12 { len: seq.len() });
    }
    for (block, tokens) in seq.blocks().enumerate() {
        for (position, &t) in tokens.iter().enumerate() {
            if t > pad {
                issues.push(TokenIssue::TokenOutOfRange { block, position });
            }
        }
        let pads = tokens[9..].iter().filter(|&&t| t == pad).count();
        if pads != 0 && pads != 3 {
            issues.push(TokenIssue::MixedPadding { block });
        }
        for (position, &t) in tokens[..9].iter().enumerate() {
            if t >= s && t <= pad {
                issues.push(TokenIssue::FlaggedCoordinate { block, position });
            }
        }
        if pads == 0 {
            let flags: Vec<u32> = tokens[9..].iter().filter(|&&t| t < pad).map(|t| t / s).collect();
            if flags.windows(2).any(|w| w[0] != w[1]) {
                issues.push(TokenIssue::InconsistentFlag { block });
            }
        }
    }
    issues
}
