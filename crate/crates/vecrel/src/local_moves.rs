//! Local transformations of configurations and of edge weights.
//!
//! Urban renewal replaces an internal quadrilateral face `w_1 b_1 w_2 b_2`
//! (read clockwise) by a face with the colours swapped: new white vertices
//! `u_1, u_2` attached to `b_1, b_2`, new black vertices `s_1, s_2` attached to
//! `w_1, w_2`, and the inner square `u_1 s_2 u_2 s_1`. With
//! `R_1 = ã v_1 + d̃ v_2 + …` and `R_2 = b̃ v_1 + c̃ v_2 + …` the new vectors are
//! `u_1 = ã v_1 + d̃ v_2`, `u_2 = b̃ v_1 + c̃ v_2`, the new relations are
//! `S_1 = v_1 + c̃′ u_1 + d̃′ u_2` and `S_2 = v_2 + b̃′ u_1 + ã′ u_2` with
//! `ã′ = −ã/D`, `b̃′ = b̃/D`, `c̃′ = −c̃/D`, `d̃′ = d̃/D`, `D = ãc̃ − b̃d̃`, and the
//! old relations get coefficient one on their new neighbour.
//!
//! Degree-two vertex addition splits a vertex along two cyclically
//! consecutive blocks of its edges; removal is its inverse.
//!
//! Identifiers are deterministic: moves that create vertices or edges append
//! them after the existing ones, urban renewal reuses the four face edge ids
//! for the four spokes, and removal deletes ids and renumbers the rest in
//! order.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config_core::{ConfigError, Configuration, Mode};
use crate::exact_linalg::{is_zero_vec, lin_comb, Scalar, Vector};
use crate::surface_graph::{
    Color, Dart, EdgeId, FaceKind, GraphError, GraphParts, Surface, SurfaceGraph, VertexId, VertexSpec,
};

/// Errors raised by local moves.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MoveError {
    /// The face is not internal.
    #[error("face {face} is not internal")]
    NotInternal { face: usize },
    /// The face is not a quadrilateral with four distinct vertices.
    #[error("face {face} is not a quadrilateral with distinct vertices")]
    NotQuadrilateral { face: usize },
    /// The face coefficient matrix is singular.
    #[error("coefficient matrix at face {face} is singular")]
    Singular { face: usize },
    /// `ac + bd = 0` in the weight transformation.
    #[error("ac + bd vanishes")]
    VanishingDenominator,
    /// `1 + Y_F = 0` in the face-weight mutation.
    #[error("1 + Y vanishes at face {face}")]
    DegenerateMutation { face: usize },
    /// A split is not a valid pair of nonempty cyclic blocks.
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    /// The new white vector of a degree-two white addition is zero.
    #[error("new white vector vanishes")]
    ZeroNewVector,
    /// The vertex does not have degree two with two distinct neighbours.
    #[error("vertex {vertex} is not a removable degree-two vertex")]
    NotDegreeTwo { vertex: VertexId },
    /// Both neighbours of a degree-two vertex are boundary vertices.
    #[error("cannot merge two boundary vertices at {vertex}")]
    BoundaryMerge { vertex: VertexId },
    /// A vertex label or face index in a move script is unknown.
    #[error("unknown reference {0}")]
    Unknown(String),
    /// Configuration failure.
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Graph failure.
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Vertex and edge ids involved in an urban renewal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UrbanRenewalMap {
    /// The face of the old graph.
    pub face: usize,
    /// Old white vertices `w_1, w_2`.
    pub whites: [VertexId; 2],
    /// Old black vertices `b_1, b_2`.
    pub blacks: [VertexId; 2],
    /// New white vertices `u_1, u_2`.
    pub new_whites: [VertexId; 2],
    /// New black vertices `s_1, s_2`.
    pub new_blacks: [VertexId; 2],
    /// Old face edges `b_1w_1, b_2w_1, b_2w_2, b_1w_2`, carrying `ã, b̃, c̃, d̃`.
    /// In the new graph the same ids are the spokes `b_1u_1, w_1s_1, b_2u_2, w_2s_2`.
    pub face_edges: [EdgeId; 4],
    /// New inner edges carrying `ã′, b̃′, c̃′, d̃′`: `s_2u_2, s_2u_1, s_1u_1, s_1u_2`.
    pub inner_edges: [EdgeId; 4],
}

fn fresh_label(parts: &GraphParts, base: &str) -> String {
    let mut label = format!("{base}#{}", parts.vertices.len());
    while parts.vertices.iter().any(|v| v.label == label) {
        label.push('\'');
    }
    label
}

fn remove_from_ring(ring: &mut Vec<EdgeId>, e: EdgeId) {
    if let Some(i) = ring.iter().position(|&x| x == e) {
        ring.remove(i);
    }
}

/// Graph surgery of urban renewal at an internal quadrilateral face.
pub fn urban_renewal_graph(g: &SurfaceGraph, f: usize) -> Result<(SurfaceGraph, UrbanRenewalMap), MoveError> {
    let face = g.faces().get(f).ok_or_else(|| MoveError::Unknown(format!("face {f}")))?;
    if !face.is_internal() {
        return Err(MoveError::NotInternal { face: f });
    }
    if face.len() != 4 {
        return Err(MoveError::NotQuadrilateral { face: f });
    }
    let cyc = g.face_cycle(f);
    let (w1, w2) = (cyc.whites[0], cyc.whites[1]);
    let (b1, b2) = (cyc.blacks[0], cyc.blacks[1]);
    let (ea, ed) = (cyc.numer_edges[0], cyc.denom_edges[0]);
    let (ec, eb) = (cyc.numer_edges[1], cyc.denom_edges[1]);
    if w1 == w2 || b1 == b2 {
        return Err(MoveError::NotQuadrilateral { face: f });
    }
    let mut parts = g.to_parts();
    let u1 = parts.vertices.len();
    parts.vertices.push(VertexSpec { label: fresh_label(&parts, "u"), color: Color::White });
    let u2 = parts.vertices.len();
    parts.vertices.push(VertexSpec { label: fresh_label(&parts, "u"), color: Color::White });
    let s1 = parts.vertices.len();
    parts.vertices.push(VertexSpec { label: fresh_label(&parts, "s"), color: Color::Black });
    let s2 = parts.vertices.len();
    parts.vertices.push(VertexSpec { label: fresh_label(&parts, "s"), color: Color::Black });
    parts.edges[ea] = [b1, u1];
    parts.edges[ec] = [b2, u2];
    parts.edges[eb] = [s1, w1];
    parts.edges[ed] = [s2, w2];
    let base = parts.edges.len();
    let (s2u2, s2u1, s1u1, s1u2) = (base, base + 1, base + 2, base + 3);
    parts.edges.push([s2, u2]);
    parts.edges.push([s2, u1]);
    parts.edges.push([s1, u1]);
    parts.edges.push([s1, u2]);
    remove_from_ring(&mut parts.rotation[b1], ed);
    remove_from_ring(&mut parts.rotation[b2], eb);
    remove_from_ring(&mut parts.rotation[w1], ea);
    remove_from_ring(&mut parts.rotation[w2], ec);
    parts.rotation.push(vec![ea, s1u1, s2u1]);
    parts.rotation.push(vec![s2u2, s1u2, ec]);
    parts.rotation.push(vec![s1u1, eb, s1u2]);
    parts.rotation.push(vec![s2u1, s2u2, ed]);
    let new_g = SurfaceGraph::from_parts(parts)?;
    Ok((
        new_g,
        UrbanRenewalMap {
            face: f,
            whites: [w1, w2],
            blacks: [b1, b2],
            new_whites: [u1, u2],
            new_blacks: [s1, s2],
            face_edges: [ea, eb, ec, ed],
            inner_edges: [s2u2, s2u1, s1u1, s1u2],
        },
    ))
}

/// Urban renewal of a configuration at an internal quadrilateral face.
pub fn urban_renewal(c: &Configuration, f: usize) -> Result<Configuration, MoveError> {
    urban_renewal_with_map(c, f).map(|(c, _)| c)
}

/// [`urban_renewal`] together with the id map of the move.
pub fn urban_renewal_with_map(c: &Configuration, f: usize) -> Result<(Configuration, UrbanRenewalMap), MoveError> {
    let g = c.graph();
    let (new_g, map) = urban_renewal_graph(g, f)?;
    let [ea, eb, ec, ed] = map.face_edges;
    let (at, bt, ct, dt) = (c.coeff(ea).clone(), c.coeff(eb).clone(), c.coeff(ec).clone(), c.coeff(ed).clone());
    let det = &at * &ct - &bt * &dt;
    if det.is_zero() {
        return Err(MoveError::Singular { face: f });
    }
    let [w1, w2] = map.whites;
    let (v1, v2) = (c.vector(w1), c.vector(w2));
    let k = c.k();
    let u1 = lin_comb(k, [(&at, v1), (&dt, v2)]);
    let u2 = lin_comb(k, [(&bt, v1), (&ct, v2)]);
    let mut vectors: Vec<Option<Vector>> = c.vectors().to_vec();
    vectors.push(Some(u1));
    vectors.push(Some(u2));
    vectors.push(None);
    vectors.push(None);
    let mut coeffs: Vec<Scalar> = c.coeffs().to_vec();
    for e in [ea, eb, ec, ed] {
        coeffs[e] = Scalar::one();
    }
    let ap = -&at / &det;
    let bp = &bt / &det;
    let cp = -&ct / &det;
    let dp = &dt / &det;
    coeffs.extend([ap, bp, cp, dp]);
    let out = Configuration::new(new_g, k, vectors, coeffs, c.mode())?;
    Ok((out, map))
}

/// The classical weight transformation `(a,b,c,d) ↦ (a,b,c,d)/(ac + bd)`.
pub fn urban_renewal_weights(a: &Scalar, b: &Scalar, c: &Scalar, d: &Scalar) -> Result<[Scalar; 4], MoveError> {
    let den = a * c + b * d;
    if den.is_zero() {
        return Err(MoveError::VanishingDenominator);
    }
    Ok([a / &den, b / &den, c / &den, d / &den])
}

/// Urban renewal on edge weights: with `a, b, c, d` the weights of the face
/// edges `b_1w_1, b_2w_1, b_2w_2, b_1w_2`, the new inner edges
/// `s_2u_2, s_2u_1, s_1u_1, s_1u_2` carry `a′, b′, c′, d′`, the four spokes
/// carry weight one, and all other weights are unchanged.
pub fn urban_renewal_edge_weights(
    g: &SurfaceGraph,
    weights: &[Scalar],
    f: usize,
) -> Result<(SurfaceGraph, Vec<Scalar>, UrbanRenewalMap), MoveError> {
    let (new_g, map) = urban_renewal_graph(g, f)?;
    let [ea, eb, ec, ed] = map.face_edges;
    let new = urban_renewal_weights(&weights[ea], &weights[eb], &weights[ec], &weights[ed])?;
    let mut out = weights.to_vec();
    for e in [ea, eb, ec, ed] {
        out[e] = Scalar::one();
    }
    out.extend(new);
    Ok((new_g, out, map))
}

/// Alternating product `Π wt(b_i w_i) / Π wt(b_i w_{i+1})` around an internal
/// face, the monodromy of an edge-weight function.
pub fn face_monodromy(g: &SurfaceGraph, weights: &[Scalar], f: usize) -> Result<Scalar, MoveError> {
    let cyc = g.face_cycle(f);
    let mut value = Scalar::one();
    for i in 0..cyc.whites.len() {
        let den = &weights[cyc.denom_edges[i]];
        if den.is_zero() {
            return Err(MoveError::Config(ConfigError::ZeroDenominator { face: f, edge: cyc.denom_edges[i] }));
        }
        value = value * &weights[cyc.numer_edges[i]] / den;
    }
    Ok(value)
}

/// Face of the new graph corresponding to each face of the old graph after
/// urban renewal at `map.face`. The renewed face maps to the inner square.
pub fn face_correspondence(old: &SurfaceGraph, new: &SurfaceGraph, map: &UrbanRenewalMap) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for (i, face) in old.faces().iter().enumerate() {
        if i == map.face {
            let d = Dart { edge: map.inner_edges[1], from_black: false };
            out.insert(i, new.face_of_dart(d));
            continue;
        }
        if let Some(d) = face.darts().first() {
            out.insert(i, new.face_of_dart(*d));
        }
    }
    out
}

/// Face-weight mutation at a quadrilateral face `F`: `Y_F ↦ Y_F^{−1}`, and
/// every internal face `G` across an edge of `F` picks up `(1 + Y_F)` when `F`
/// runs along that edge from black to white, or `(1 + Y_F^{−1})^{−1}` when it
/// runs from white to black (one factor per shared edge). Faces missing
/// from `weights` (external faces) are ignored.
pub fn y_mutation(
    g: &SurfaceGraph,
    weights: &BTreeMap<usize, Scalar>,
    f: usize,
) -> Result<BTreeMap<usize, Scalar>, MoveError> {
    let face = g.faces().get(f).ok_or_else(|| MoveError::Unknown(format!("face {f}")))?;
    if face.len() != 4 || !face.is_internal() {
        return Err(MoveError::NotQuadrilateral { face: f });
    }
    let y = weights.get(&f).ok_or_else(|| MoveError::Unknown(format!("weight of face {f}")))?;
    let one = Scalar::one();
    let plus = &one + y;
    if plus.is_zero() || y.is_zero() {
        return Err(MoveError::DegenerateMutation { face: f });
    }
    let minus_factor = y / &plus;
    let mut out = weights.clone();
    for d in face.darts() {
        let other = g.face_of_dart(d.reverse());
        if other == f {
            continue;
        }
        if let Some(val) = out.get_mut(&other) {
            *val = if d.from_black { &*val * &plus } else { &*val * &minus_factor };
        }
    }
    out.insert(f, y.recip());
    Ok(out)
}

/// A split of a vertex's counterclockwise rotation into the cyclic block of
/// `len` edges starting at position `start` and the complementary block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    /// Starting position in the rotation.
    pub start: usize,
    /// Size of the first block.
    pub len: usize,
}

fn blocks(ring: &[EdgeId], split: Split) -> Result<(Vec<EdgeId>, Vec<EdgeId>), MoveError> {
    let d = ring.len();
    if split.start >= d || split.len == 0 || split.len >= d {
        return Err(MoveError::InvalidPartition(format!(
            "start {} and length {} for degree {d}",
            split.start, split.len
        )));
    }
    let rotated: Vec<EdgeId> = (0..d).map(|i| ring[(split.start + i) % d]).collect();
    Ok((rotated[..split.len].to_vec(), rotated[split.len..].to_vec()))
}

/// Degree-two black vertex addition at a white vertex `w`: `w` keeps the
/// first block, a new white vertex takes the second, both carry `v_w`, and
/// the new black vertex between them has relation `1·v_w − 1·v_new`.
pub fn add_degree2_black(c: &Configuration, w: VertexId, split: Split) -> Result<Configuration, MoveError> {
    let g = c.graph();
    if g.color(w) != Color::White {
        return Err(MoveError::Graph(GraphError::WrongColor { vertex: w }));
    }
    if g.is_boundary(w) {
        return Err(MoveError::InvalidPartition("cannot split a boundary vertex".into()));
    }
    let (b1, b2) = blocks(g.rotation(w), split)?;
    let mut parts = g.to_parts();
    let wn = parts.vertices.len();
    parts.vertices.push(VertexSpec { label: fresh_label(&parts, "w"), color: Color::White });
    let t = parts.vertices.len();
    parts.vertices.push(VertexSpec { label: fresh_label(&parts, "t"), color: Color::Black });
    for &e in &b2 {
        for end in parts.edges[e].iter_mut() {
            if *end == w {
                *end = wn;
            }
        }
    }
    let ea = parts.edges.len();
    parts.edges.push([t, w]);
    let eb = parts.edges.len();
    parts.edges.push([t, wn]);
    let mut ring_w = b1;
    ring_w.push(ea);
    let mut ring_n = b2;
    ring_n.push(eb);
    parts.rotation[w] = ring_w;
    parts.rotation.push(ring_n);
    parts.rotation.push(vec![ea, eb]);
    let new_g = SurfaceGraph::from_parts(parts)?;
    let mut vectors = c.vectors().to_vec();
    vectors.push(Some(c.vector(w).clone()));
    vectors.push(None);
    let mut coeffs = c.coeffs().to_vec();
    coeffs.push(Scalar::one());
    coeffs.push(-Scalar::one());
    Ok(Configuration::new(new_g, c.k(), vectors, coeffs, c.mode())?)
}

/// Degree-two white vertex addition at a black vertex `b`: `b` keeps the
/// first block (relation `S`), a new black vertex takes the second (relation
/// `T`), and the new white vertex between them carries `R|_{first block}`,
/// entering `S` with coefficient `−1` and `T` with coefficient `1`.
pub fn add_degree2_white(c: &Configuration, b: VertexId, split: Split) -> Result<Configuration, MoveError> {
    let g = c.graph();
    if g.color(b) != Color::Black {
        return Err(MoveError::Graph(GraphError::WrongColor { vertex: b }));
    }
    let (b1, b2) = blocks(g.rotation(b), split)?;
    let x = lin_comb(c.k(), b1.iter().map(|&e| (c.coeff(e), c.vector(g.edge(e).white))));
    if is_zero_vec(&x) {
        return Err(MoveError::ZeroNewVector);
    }
    let mut parts = g.to_parts();
    let bn = parts.vertices.len();
    parts.vertices.push(VertexSpec { label: fresh_label(&parts, "b"), color: Color::Black });
    let xw = parts.vertices.len();
    parts.vertices.push(VertexSpec { label: fresh_label(&parts, "x"), color: Color::White });
    for &e in &b2 {
        for end in parts.edges[e].iter_mut() {
            if *end == b {
                *end = bn;
            }
        }
    }
    let es = parts.edges.len();
    parts.edges.push([b, xw]);
    let et = parts.edges.len();
    parts.edges.push([bn, xw]);
    let mut ring_b = b1;
    ring_b.push(es);
    let mut ring_n = b2;
    ring_n.push(et);
    parts.rotation[b] = ring_b;
    parts.rotation.push(ring_n);
    parts.rotation.push(vec![es, et]);
    let new_g = SurfaceGraph::from_parts(parts)?;
    let mut vectors = c.vectors().to_vec();
    vectors.push(None);
    vectors.push(Some(x));
    let mut coeffs = c.coeffs().to_vec();
    coeffs.push(-Scalar::one());
    coeffs.push(Scalar::one());
    Ok(Configuration::new(new_g, c.k(), vectors, coeffs, c.mode())?)
}

/// Deletes vertices and edges from graph parts, renumbering the survivors in
/// order. Returns the new parts and the old-to-new vertex and edge maps.
fn delete(
    parts: GraphParts,
    dead_v: &[VertexId],
    dead_e: &[EdgeId],
) -> (GraphParts, Vec<Option<VertexId>>, Vec<Option<EdgeId>>) {
    let mut vmap = vec![None; parts.vertices.len()];
    let mut next = 0;
    for (v, slot) in vmap.iter_mut().enumerate() {
        if !dead_v.contains(&v) {
            *slot = Some(next);
            next += 1;
        }
    }
    let mut emap = vec![None; parts.edges.len()];
    let mut next = 0;
    for (e, slot) in emap.iter_mut().enumerate() {
        if !dead_e.contains(&e) {
            *slot = Some(next);
            next += 1;
        }
    }
    let vertices = parts.vertices.into_iter().enumerate().filter(|(v, _)| vmap[*v].is_some()).map(|(_, x)| x).collect();
    let edges = parts
        .edges
        .into_iter()
        .enumerate()
        .filter(|(e, _)| emap[*e].is_some())
        .map(|(_, [a, b])| [vmap[a].expect("live endpoint"), vmap[b].expect("live endpoint")])
        .collect();
    let rotation = parts
        .rotation
        .into_iter()
        .enumerate()
        .filter(|(v, _)| vmap[*v].is_some())
        .map(|(_, ring)| ring.into_iter().filter_map(|e| emap[e]).collect())
        .collect();
    let boundary = parts.boundary.iter().map(|&v| vmap[v].expect("boundary survives")).collect();
    let outer_dart = parts.outer_dart.and_then(|d| emap[d.edge].map(|edge| Dart { edge, from_black: d.from_black }));
    (GraphParts { surface: parts.surface, vertices, edges, rotation, boundary, outer_dart }, vmap, emap)
}

/// Removes a degree-two vertex, merging its two neighbours. A black vertex
/// is first gauged so that its relation reads `1·v − 1·w` (gauging the
/// neighbour that disappears, or the internal one); a white vertex is
/// gauged to coefficient `−1` at the neighbour with the smaller id and `1` at
/// the other, and the merged relation is their sum. The surviving neighbour
/// is the one with the smaller id (a boundary neighbour always survives).
/// The merged rotation lists the survivor's remaining edges
/// counterclockwise after the removed edge, followed by the other
/// neighbour's edges counterclockwise after its removed edge.
pub fn remove_degree2(c: &Configuration, v: VertexId) -> Result<Configuration, MoveError> {
    remove_degree2_with_map(c, v).map(|(c, _)| c)
}

/// [`remove_degree2`] together with the old-to-new edge id map (`None` for
/// the two deleted edges).
pub fn remove_degree2_with_map(c: &Configuration, v: VertexId) -> Result<(Configuration, Vec<Option<EdgeId>>), MoveError> {
    let g = c.graph();
    let ring = g.rotation(v);
    if ring.len() != 2 {
        return Err(MoveError::NotDegreeTwo { vertex: v });
    }
    let (e1, e2) = (ring[0], ring[1]);
    let (n1, n2) = (g.other_end(e1, v), g.other_end(e2, v));
    if n1 == n2 {
        return Err(MoveError::NotDegreeTwo { vertex: v });
    }
    let plabic = c.mode() == Mode::Plabic;
    let (keep, e_keep, gone, e_gone) = match (g.is_boundary(n1), g.is_boundary(n2)) {
        (true, true) => return Err(MoveError::BoundaryMerge { vertex: v }),
        (true, false) => (n1, e1, n2, e2),
        (false, true) => (n2, e2, n1, e1),
        _ if n1 < n2 => (n1, e1, n2, e2),
        _ => (n2, e2, n1, e1),
    };
    let mut work = c.clone();
    match g.color(v) {
        Color::Black => {
            // α v_keep + β v_gone = 0; gauge `gone` so that v_gone = v_keep.
            let lambda = -(work.coeff(e_keep) / work.coeff(e_gone));
            if plabic && g.is_boundary(gone) {
                return Err(MoveError::BoundaryMerge { vertex: v });
            }
            work.gauge_in_place(gone, &lambda);
        }
        Color::White => {
            let lk = -Scalar::one() / work.coeff(e_keep);
            work.gauge_in_place(keep, &lk);
            let lg = Scalar::one() / work.coeff(e_gone);
            work.gauge_in_place(gone, &lg);
        }
    }
    let mut parts = g.to_parts();
    let after = |ring: &[EdgeId], e: EdgeId| -> Vec<EdgeId> {
        let i = ring.iter().position(|&x| x == e).expect("incident edge");
        (1..ring.len()).map(|j| ring[(i + j) % ring.len()]).collect()
    };
    let mut merged = after(g.rotation(keep), e_keep);
    let moved = after(g.rotation(gone), e_gone);
    for &e in &moved {
        for end in parts.edges[e].iter_mut() {
            if *end == gone {
                *end = keep;
            }
        }
    }
    merged.extend(moved);
    parts.rotation[keep] = merged;
    if g.surface() == Surface::Disk && g.n_boundary() == 0 {
        parts.outer_dart = g
            .faces()
            .iter()
            .find(|f| f.kind == FaceKind::Infinite)
            .and_then(|f| f.darts().into_iter().find(|d| d.edge != e_keep && d.edge != e_gone));
    }
    let (parts, vmap, emap) = delete(parts, &[v, gone], &[e_keep, e_gone]);
    let new_g = SurfaceGraph::from_parts(parts)?;
    let mut vectors = vec![None; new_g.n_vertices()];
    for (old, slot) in vmap.iter().enumerate() {
        if let Some(nv) = slot {
            vectors[*nv] = work.vectors()[old].clone();
        }
    }
    let mut coeffs = vec![Scalar::zero(); new_g.n_edges()];
    for (old, slot) in emap.iter().enumerate() {
        if let Some(ne) = slot {
            coeffs[*ne] = work.coeff(old).clone();
        }
    }
    Ok((Configuration::new(new_g, c.k(), vectors, coeffs, c.mode())?, emap))
}

/// Face of the new graph corresponding to each face of the old graph after a
/// move that deletes edges and renumbers the rest by `emap`. Faces whose
/// every edge was deleted have no image.
pub fn face_correspondence_by_edges(
    old: &SurfaceGraph,
    new: &SurfaceGraph,
    emap: &[Option<EdgeId>],
) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for (i, face) in old.faces().iter().enumerate() {
        let image = face
            .darts()
            .into_iter()
            .find_map(|d| emap[d.edge].map(|edge| Dart { edge, from_black: d.from_black }));
        if let Some(d) = image {
            out.insert(i, new.face_of_dart(d));
        }
    }
    out
}

/// One step of a replayable move script. Vertices are referenced by label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Move {
    /// Urban renewal at a face index.
    UrbanRenewal {
        /// Face index in the canonical face order.
        face: usize,
    },
    /// Degree-two black vertex addition at a white vertex.
    AddBlack {
        /// White vertex label.
        vertex: String,
        /// The split.
        split: Split,
    },
    /// Degree-two white vertex addition at a black vertex.
    AddWhite {
        /// Black vertex label.
        vertex: String,
        /// The split.
        split: Split,
    },
    /// Removal of a degree-two vertex.
    Remove {
        /// Vertex label.
        vertex: String,
    },
}

/// Applies a move script in order.
pub fn apply_moves(c: &Configuration, moves: &[Move]) -> Result<Configuration, MoveError> {
    let mut cur = c.clone();
    for m in moves {
        let find = |label: &str, cur: &Configuration| {
            cur.graph().find_label(label).ok_or_else(|| MoveError::Unknown(label.to_string()))
        };
        cur = match m {
            Move::UrbanRenewal { face } => urban_renewal(&cur, *face)?,
            Move::AddBlack { vertex, split } => add_degree2_black(&cur, find(vertex, &cur)?, *split)?,
            Move::AddWhite { vertex, split } => add_degree2_white(&cur, find(vertex, &cur)?, *split)?,
            Move::Remove { vertex } => remove_degree2(&cur, find(vertex, &cur)?)?,
        };
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_core::{configuration_from_coeffs, find_system, gauge_equal};
    use crate::exact_linalg::{q, qf, qv, random_nonzero};
    use crate::fixtures;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_config(g: &SurfaceGraph, seed: u64) -> Configuration {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let coeffs: Vec<Scalar> = (0..g.n_edges()).map(|_| random_nonzero(&mut rng)).collect();
            if let Ok(c) = configuration_from_coeffs(g, coeffs, None) {
                if c.is_circuit_configuration() {
                    return c;
                }
            }
        }
    }

    #[test]
    fn weight_examples() {
        assert_eq!(urban_renewal_weights(&q(1), &q(1), &q(1), &q(1)).unwrap(), [qf(1, 2), qf(1, 2), qf(1, 2), qf(1, 2)]);
        assert_eq!(
            urban_renewal_weights(&q(1), &q(2), &q(3), &q(4)).unwrap(),
            [qf(1, 11), qf(2, 11), qf(3, 11), qf(4, 11)]
        );
        assert_eq!(urban_renewal_weights(&q(1), &q(1), &q(-1), &q(1)), Err(MoveError::VanishingDenominator));
    }

    #[test]
    fn new_vectors_are_face_vectors() {
        let fx = fixtures::gr36();
        let c = random_config(&fx.graph, 1);
        let f = fx.graph.internal_faces()[0];
        let (d, map) = urban_renewal_with_map(&c, f).unwrap();
        assert_eq!(d.vector(map.new_whites[0]), &c.face_vector(f, 0));
        assert_eq!(d.vector(map.new_whites[1]), &c.face_vector(f, 1));
    }

    #[test]
    fn symmetric_instance() {
        // Face coefficients ã = 1, d̃ = 1, b̃ = 1, c̃ = 2 give u_1 = v_1 + v_2 and
        // u_2 = v_1 + 2 v_2.
        let fx = fixtures::gr36();
        let c = random_config(&fx.graph, 2);
        let f = fx.graph.internal_faces()[0];
        let cyc = fx.graph.face_cycle(f);
        let mut c2 = c.clone();
        let targets = [
            (cyc.numer_edges[0], q(1)),
            (cyc.denom_edges[0], q(1)),
            (cyc.denom_edges[1], q(1)),
            (cyc.numer_edges[1], q(2)),
        ];
        // Rebuild a configuration with these face coefficients from K.
        let mut coeffs = c2.coeffs().to_vec();
        for (e, x) in targets {
            coeffs[e] = x;
        }
        c2 = configuration_from_coeffs(&fx.graph, coeffs, None).unwrap();
        let (d, map) = urban_renewal_with_map(&c2, f).unwrap();
        let v1 = c2.vector(cyc.whites[0]);
        let v2 = c2.vector(cyc.whites[1]);
        let expect1 = lin_comb(c2.k(), [(&q(1), v1), (&q(1), v2)]);
        let expect2 = lin_comb(c2.k(), [(&q(1), v1), (&q(2), v2)]);
        assert_eq!(d.vector(map.new_whites[0]), &expect1);
        assert_eq!(d.vector(map.new_whites[1]), &expect2);
    }

    #[test]
    fn double_renewal_is_gauge_trivial() {
        let fx = fixtures::gr36();
        let c = random_config(&fx.graph, 3);
        let f = fx.graph.internal_faces()[1];
        let (d, map) = urban_renewal_with_map(&c, f).unwrap();
        let center = face_correspondence(c.graph(), d.graph(), &map)[&f];
        let e = urban_renewal(&d, center).unwrap();
        // Two renewals leave degree-two vertices at the four corners;
        // removing them returns to the original graph.
        let mut cur = e;
        while let Some(v) = (0..cur.graph().n_vertices())
            .find(|&v| cur.graph().degree(v) == 2 && !cur.graph().is_boundary(v) && cur.graph().vertex(v).label.contains('#'))
        {
            cur = remove_degree2(&cur, v).unwrap();
        }
        assert_eq!(cur.graph().n_vertices(), c.graph().n_vertices());
        assert_eq!(cur.graph().n_edges(), c.graph().n_edges());
        assert_eq!(cur.boundary_matrix(), c.boundary_matrix());
    }

    #[test]
    fn face_weights_follow_mutation() {
        let fx = fixtures::gr36();
        for seed in 0..5 {
            let c = random_config(&fx.graph, 10 + seed);
            for f in fx.graph.internal_faces() {
                let before = c.face_weights().unwrap();
                let (d, map) = urban_renewal_with_map(&c, f).unwrap();
                let expected = y_mutation(c.graph(), &before, f).unwrap();
                let corr = face_correspondence(c.graph(), d.graph(), &map);
                for (old, val) in expected {
                    assert_eq!(&d.face_weight(corr[&old]).unwrap(), &val, "face {old}");
                }
            }
        }
    }

    #[test]
    fn mutation_is_involutive() {
        let fx = fixtures::gr36();
        let c = random_config(&fx.graph, 4);
        let f = fx.graph.internal_faces()[0];
        let w = c.face_weights().unwrap();
        let (d, map) = urban_renewal_with_map(&c, f).unwrap();
        let corr = face_correspondence(c.graph(), d.graph(), &map);
        let once = y_mutation(c.graph(), &w, f).unwrap();
        let relabelled: BTreeMap<usize, Scalar> = once.iter().map(|(k, v)| (corr[k], v.clone())).collect();
        let twice = y_mutation(d.graph(), &relabelled, corr[&f]).unwrap();
        for (k, v) in &w {
            assert_eq!(&twice[&corr[k]], v);
        }
    }

    #[test]
    fn degree_two_black_round_trip() {
        let fx = fixtures::gr36();
        let c = random_config(&fx.graph, 5);
        let u = fx.graph.find_label("u").unwrap();
        for start in 0..4 {
            for len in 1..4 {
                let d = add_degree2_black(&c, u, Split { start, len }).unwrap();
                let before = c.face_weights().unwrap();
                for (f, y) in &before {
                    let dart = c.graph().faces()[*f].darts()[0];
                    let nf = d.graph().face_of_dart(dart);
                    assert_eq!(&d.face_weight(nf).unwrap(), y);
                }
                let t = d.graph().n_vertices() - 1;
                assert_eq!(remove_degree2(&d, t).unwrap(), c);
            }
        }
    }

    #[test]
    fn degree_two_white_round_trip() {
        let fx = fixtures::gr36();
        let c = random_config(&fx.graph, 6);
        let b = fx.graph.find_label("b4").unwrap();
        let d = add_degree2_white(&c, b, Split { start: 1, len: 2 }).unwrap();
        let x = d.graph().n_vertices() - 1;
        assert_eq!(remove_degree2(&d, x).unwrap(), c);
    }

    #[test]
    fn degree_two_white_example() {
        // Relation v1 + v2 + v3 = 0 split {v1, v2} | {v3}.
        let mut b = crate::surface_graph::PlanarBuilder::new();
        let w1 = b.vertex("w1", Color::White, 0, 10);
        let w2 = b.vertex("w2", Color::White, -10, -10);
        let w3 = b.vertex("w3", Color::White, 10, -10);
        let bb = b.vertex("b", Color::Black, 0, 0);
        b.edge(bb, w1);
        b.edge(bb, w2);
        b.edge(bb, w3);
        let g = b.build().unwrap();
        let vectors = vec![Some(qv(&[1, 0])), Some(qv(&[0, 1])), Some(qv(&[-1, -1])), None];
        let c = Configuration::new(g.clone(), 2, vectors, vec![q(1), q(1), q(1)], Mode::General).unwrap();
        let ring = g.rotation(bb).to_vec();
        let start = ring.iter().position(|&e| g.edge(e).white == w1).unwrap();
        let next = ring[(start + 1) % 3];
        let split = if g.edge(next).white == w2 { Split { start, len: 2 } } else { Split { start: (start + 2) % 3, len: 2 } };
        let d = add_degree2_white(&c, bb, split).unwrap();
        let x = d.graph().n_vertices() - 1;
        assert_eq!(d.vector(x), &qv(&[1, 1]));
    }

    #[test]
    fn removal_then_addition_is_gauge_trivial() {
        let fx = fixtures::gr36();
        let c = random_config(&fx.graph, 8);
        let cb = fx.legs[0].black;
        assert!(matches!(remove_degree2(&c, cb), Err(MoveError::Graph(_)) | Err(MoveError::BoundaryMerge { .. })));
        let u = fx.graph.find_label("u").unwrap();
        let d = add_degree2_black(&c, u, Split { start: 0, len: 2 }).unwrap();
        let d2 = crate::config_core::random_gauge(&d, &mut ChaCha8Rng::seed_from_u64(1));
        let t = d.graph().n_vertices() - 1;
        let back = remove_degree2(&d2, t).unwrap();
        let again = add_degree2_black(&back, u, Split { start: 0, len: 2 }).unwrap();
        let s = find_system(&d).unwrap();
        assert!(gauge_equal(&again, &d, &s).unwrap());
    }
}
