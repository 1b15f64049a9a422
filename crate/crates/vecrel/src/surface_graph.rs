//! Bipartite multigraphs embedded in a disk or a torus.
//!
//! A [`SurfaceGraph`] is a combinatorial map: every vertex lists its incident
//! edges in counterclockwise order (its rotation). Each edge joins a black and
//! a white vertex; parallel edges are allowed. Disk graphs carry an ordered
//! list of boundary vertices numbered `1..=n` clockwise; each is white and has
//! degree at most one. Faces are traced clockwise (the face lies to the right
//! of every dart on its boundary walk). For disk graphs the boundary circle is
//! added as arcs `j → j+1` so that external faces are recognised, and the
//! infinite face is the one containing the arc from `n` to `1`.
//!
//! Zigzag paths turn maximally left at white vertices and maximally right at
//! black vertices. For disk graphs zigzag `j` starts at boundary vertex `j`;
//! the trip permutation sends `j` to the label where that zigzag ends.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a vertex in a graph.
pub type VertexId = usize;
/// Index of an edge in a graph.
pub type EdgeId = usize;

/// Vertex colour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    /// Black vertices carry relations.
    Black,
    /// White vertices carry vectors.
    White,
}

impl Color {
    /// The other colour.
    pub fn flip(self) -> Color {
        match self {
            Color::Black => Color::White,
            Color::White => Color::Black,
        }
    }
}

/// Surface the graph is embedded in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Surface {
    /// A closed disk; boundary vertices sit on its boundary circle.
    Disk,
    /// A torus, given as a finite quotient with an explicit rotation system.
    Torus,
}

/// A vertex: a stable label, a colour and (for boundary vertices) its
/// clockwise boundary number starting at 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Vertex {
    /// Stable human-readable identifier.
    pub label: String,
    /// Colour.
    pub color: Color,
    /// Boundary number `j ∈ 1..=n`, if the vertex lies on the boundary.
    pub boundary: Option<usize>,
}

/// An edge joining a black and a white vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    /// Black endpoint.
    pub black: VertexId,
    /// White endpoint.
    pub white: VertexId,
}

/// A directed edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Dart {
    /// Underlying edge.
    pub edge: EdgeId,
    /// True when the dart runs from the black endpoint to the white one.
    pub from_black: bool,
}

impl Dart {
    /// The same edge traversed the other way.
    pub fn reverse(self) -> Dart {
        Dart { edge: self.edge, from_black: !self.from_black }
    }
}

/// One step of a face boundary walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Step {
    /// A dart of the graph.
    Edge(Dart),
    /// The boundary arc from boundary vertex `j` to `j + 1` (cyclically).
    Arc(usize),
}

/// Classification of faces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceKind {
    /// Bounded by a closed walk of the graph.
    Internal,
    /// Touches the boundary of the disk, other than the infinite face.
    External,
    /// The external face containing the boundary arc from `n` to `1`.
    Infinite,
}

/// A face with its clockwise boundary walk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Face {
    /// Boundary walk, clockwise.
    pub steps: Vec<Step>,
    /// Classification.
    pub kind: FaceKind,
}

impl Face {
    /// The graph darts of the boundary walk, in clockwise order.
    pub fn darts(&self) -> Vec<Dart> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Step::Edge(d) => Some(*d),
                Step::Arc(_) => None,
            })
            .collect()
    }

    /// Number of graph edges on the boundary walk.
    pub fn len(&self) -> usize {
        self.darts().len()
    }

    /// True when the walk contains no graph edge.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True for internal faces.
    pub fn is_internal(&self) -> bool {
        self.kind == FaceKind::Internal
    }

    /// Maximal runs of graph darts between boundary arcs, including empty
    /// runs between consecutive arcs. Internal faces give a single walk.
    pub fn walks(&self) -> Vec<Vec<Dart>> {
        let Some(first_arc) = self.steps.iter().position(|s| matches!(s, Step::Arc(_))) else {
            return vec![self.darts()];
        };
        let n = self.steps.len();
        let mut out = Vec::new();
        let mut current = Vec::new();
        for i in 1..=n {
            match self.steps[(first_arc + i) % n] {
                Step::Arc(_) => out.push(std::mem::take(&mut current)),
                Step::Edge(d) => current.push(d),
            }
        }
        out
    }

    /// Boundary arcs `j → j+1` on the walk, by their starting label `j`.
    pub fn arcs(&self) -> Vec<usize> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Step::Arc(j) => Some(*j),
                Step::Edge(_) => None,
            })
            .collect()
    }
}

/// Errors raised when building or analysing graphs.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    /// An edge refers to a missing vertex.
    #[error("edge {edge} refers to missing vertex {vertex}")]
    MissingVertex { edge: EdgeId, vertex: VertexId },
    /// An edge joins two vertices of the same colour.
    #[error("edge {edge} joins two vertices of the same colour")]
    NotBipartite { edge: EdgeId },
    /// The rotation at a vertex is not a permutation of its incident edges.
    #[error("rotation at vertex {vertex} is inconsistent with its incident edges")]
    BadRotation { vertex: VertexId },
    /// A boundary vertex is black.
    #[error("boundary vertex {label} is black")]
    BlackBoundary { label: usize },
    /// A boundary vertex has degree two or more.
    #[error("boundary vertex {label} has degree {degree} > 1")]
    BoundaryDegree { label: usize, degree: usize },
    /// A vertex appears twice in the boundary order.
    #[error("vertex {vertex} appears twice in the boundary order")]
    DuplicateBoundary { vertex: VertexId },
    /// Torus graphs have no boundary.
    #[error("torus graphs cannot have boundary vertices")]
    TorusBoundary,
    /// The rotation system does not describe a map on the declared surface.
    #[error("Euler characteristic check failed: V - E + F = {value}, expected {expected}")]
    Euler { value: i64, expected: i64 },
    /// A component of a disk graph does not reach the boundary.
    #[error("disk graph has a component without boundary vertices")]
    FloatingComponent,
    /// The operation needs a disk graph.
    #[error("operation requires a disk graph")]
    NotDisk,
    /// A vertex has the wrong colour for the operation.
    #[error("vertex {vertex} has the wrong colour for this operation")]
    WrongColor { vertex: VertexId },
    /// A label or index could not be resolved.
    #[error("unknown vertex or edge reference: {0}")]
    Unknown(String),
    /// The JSON description is malformed.
    #[error("malformed graph description: {0}")]
    Format(String),
}

/// Plain data form of a graph used for construction, surgery and JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphParts {
    /// Surface tag.
    pub surface: Surface,
    /// Vertex labels and colours, indexed by vertex id.
    pub vertices: Vec<VertexSpec>,
    /// Edges as `[black, white]` pairs (either order accepted on input).
    pub edges: Vec<[VertexId; 2]>,
    /// Counterclockwise edge order at each vertex.
    pub rotation: Vec<Vec<EdgeId>>,
    /// Boundary vertices in clockwise order; entry `j-1` is vertex `j`.
    #[serde(default)]
    pub boundary: Vec<VertexId>,
    /// For disk graphs without boundary vertices: a dart on the outer face.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_dart: Option<Dart>,
}

/// Vertex description inside [`GraphParts`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexSpec {
    /// Stable label.
    pub label: String,
    /// Colour.
    pub color: Color,
}

/// A bipartite multigraph with a rotation system on a disk or torus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurfaceGraph {
    surface: Surface,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    rotation: Vec<Vec<EdgeId>>,
    boundary: Vec<VertexId>,
    outer_dart: Option<Dart>,
    faces: Vec<Face>,
    dart_face: HashMap<Dart, usize>,
}

/// Half-edge map used for face tracing. Half-edge `2e` sits at the black end
/// of edge `e` and `2e + 1` at the white end; boundary arcs follow.
struct HalfEdgeMap {
    vertex: Vec<usize>,
    twin: Vec<usize>,
    next_ccw: Vec<usize>,
}

impl HalfEdgeMap {
    fn faces(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.vertex.len()];
        let mut out = Vec::new();
        for start in 0..self.vertex.len() {
            if seen[start] {
                continue;
            }
            let mut orbit = Vec::new();
            let mut h = start;
            while !seen[h] {
                seen[h] = true;
                orbit.push(h);
                h = self.next_ccw[self.twin[h]];
            }
            out.push(orbit);
        }
        out
    }

    fn components(&self, n_vertices: usize) -> (usize, usize) {
        let mut parent: Vec<usize> = (0..n_vertices).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let nxt = p[y];
                p[y] = r;
                y = nxt;
            }
            r
        }
        let mut used = vec![false; n_vertices];
        for h in 0..self.vertex.len() {
            let a = self.vertex[h];
            let b = self.vertex[self.twin[h]];
            used[a] = true;
            used[b] = true;
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        let mut roots = BTreeSet::new();
        for v in 0..n_vertices {
            if used[v] {
                roots.insert(find(&mut parent, v));
            }
        }
        (roots.len(), used.iter().filter(|&&u| u).count())
    }
}

impl SurfaceGraph {
    /// Validates and builds a graph from its parts.
    ///
    /// Checks bipartiteness, that each rotation lists exactly the incident
    /// edges, the boundary conventions (white, degree at most one, distinct,
    /// none on a torus) and the Euler characteristic of the traced faces.
    pub fn from_parts(parts: GraphParts) -> Result<Self, GraphError> {
        let nv = parts.vertices.len();
        let mut vertices: Vec<Vertex> = parts
            .vertices
            .iter()
            .map(|s| Vertex { label: s.label.clone(), color: s.color, boundary: None })
            .collect();
        let mut edges = Vec::with_capacity(parts.edges.len());
        for (e, [a, b]) in parts.edges.iter().copied().enumerate() {
            for v in [a, b] {
                if v >= nv {
                    return Err(GraphError::MissingVertex { edge: e, vertex: v });
                }
            }
            let edge = match (vertices[a].color, vertices[b].color) {
                (Color::Black, Color::White) => Edge { black: a, white: b },
                (Color::White, Color::Black) => Edge { black: b, white: a },
                _ => return Err(GraphError::NotBipartite { edge: e }),
            };
            edges.push(edge);
        }
        if parts.rotation.len() != nv {
            return Err(GraphError::BadRotation { vertex: parts.rotation.len().min(nv) });
        }
        let mut incident: Vec<Vec<EdgeId>> = vec![Vec::new(); nv];
        for (e, edge) in edges.iter().enumerate() {
            incident[edge.black].push(e);
            incident[edge.white].push(e);
        }
        for v in 0..nv {
            let mut a = parts.rotation[v].clone();
            let mut b = incident[v].clone();
            a.sort_unstable();
            b.sort_unstable();
            if a != b {
                return Err(GraphError::BadRotation { vertex: v });
            }
        }
        if parts.surface == Surface::Torus && !parts.boundary.is_empty() {
            return Err(GraphError::TorusBoundary);
        }
        for (i, &v) in parts.boundary.iter().enumerate() {
            let label = i + 1;
            if v >= nv {
                return Err(GraphError::Unknown(format!("boundary vertex {v}")));
            }
            if vertices[v].boundary.is_some() {
                return Err(GraphError::DuplicateBoundary { vertex: v });
            }
            if vertices[v].color != Color::White {
                return Err(GraphError::BlackBoundary { label });
            }
            let degree = parts.rotation[v].len();
            if degree > 1 {
                return Err(GraphError::BoundaryDegree { label, degree });
            }
            vertices[v].boundary = Some(label);
        }
        // Canonical cyclic representative: each rotation starts at its
        // smallest edge id, so equal maps compare equal.
        let rotation: Vec<Vec<EdgeId>> = parts
            .rotation
            .into_iter()
            .map(|mut r| {
                if let Some(i) = r.iter().enumerate().min_by_key(|(_, e)| **e).map(|(i, _)| i) {
                    r.rotate_left(i);
                }
                r
            })
            .collect();
        let mut g = SurfaceGraph {
            surface: parts.surface,
            vertices,
            edges,
            rotation,
            boundary: parts.boundary,
            outer_dart: parts.outer_dart,
            faces: Vec::new(),
            dart_face: HashMap::new(),
        };
        g.trace_faces()?;
        Ok(g)
    }

    /// Plain data form of the graph.
    pub fn to_parts(&self) -> GraphParts {
        GraphParts {
            surface: self.surface,
            vertices: self
                .vertices
                .iter()
                .map(|v| VertexSpec { label: v.label.clone(), color: v.color })
                .collect(),
            edges: self.edges.iter().map(|e| [e.black, e.white]).collect(),
            rotation: self.rotation.clone(),
            boundary: self.boundary.clone(),
            outer_dart: self.outer_dart,
        }
    }

    /// Parses the JSON graph format.
    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let parts: GraphParts = serde_json::from_str(text).map_err(|e| GraphError::Format(e.to_string()))?;
        Self::from_parts(parts)
    }

    /// Serialises to the JSON graph format.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_parts()).expect("graph serialisation")
    }

    fn half_edge_map(&self) -> HalfEdgeMap {
        let ne = self.edges.len();
        let n = self.boundary.len();
        let total = 2 * ne + 2 * n;
        let mut vertex = vec![0; total];
        let mut twin = vec![0; total];
        let mut next_ccw = vec![0; total];
        for (e, edge) in self.edges.iter().enumerate() {
            vertex[2 * e] = edge.black;
            vertex[2 * e + 1] = edge.white;
            twin[2 * e] = 2 * e + 1;
            twin[2 * e + 1] = 2 * e;
        }
        let arc_out = |j: usize| 2 * ne + 2 * (j - 1);
        let arc_in = |j: usize| {
            let prev = if j == 1 { n } else { j - 1 };
            2 * ne + 2 * (prev - 1) + 1
        };
        for j in 1..=n {
            let v = self.boundary[j - 1];
            let next = self.boundary[j % n];
            vertex[arc_out(j)] = v;
            vertex[arc_out(j) + 1] = next;
            twin[arc_out(j)] = arc_out(j) + 1;
            twin[arc_out(j) + 1] = arc_out(j);
        }
        for v in 0..self.vertices.len() {
            let mut ring: Vec<usize> = self.rotation[v].iter().map(|&e| self.half_edge_at(e, v)).collect();
            if let Some(j) = self.vertices[v].boundary {
                ring.push(arc_out(j));
                ring.push(arc_in(j));
            }
            for i in 0..ring.len() {
                next_ccw[ring[i]] = ring[(i + 1) % ring.len()];
            }
        }
        HalfEdgeMap { vertex, twin, next_ccw }
    }

    fn half_edge_at(&self, e: EdgeId, v: VertexId) -> usize {
        if self.edges[e].black == v {
            2 * e
        } else {
            2 * e + 1
        }
    }

    fn trace_faces(&mut self) -> Result<(), GraphError> {
        let map = self.half_edge_map();
        let ne = self.edges.len();
        let n = self.boundary.len();
        let orbits = map.faces();
        let (components, used) = map.components(self.vertices.len());
        let v = used as i64;
        let e = (ne + n) as i64;
        let f = orbits.len() as i64;
        let expected = match self.surface {
            Surface::Disk => 2 * components as i64,
            Surface::Torus => 0,
        };
        if v - e + f != expected || (self.surface == Surface::Torus && components > 1) {
            return Err(GraphError::Euler { value: v - e + f, expected });
        }
        if self.surface == Surface::Disk && n > 0 && components > 1 {
            return Err(GraphError::FloatingComponent);
        }
        let step_of = |h: usize| -> Step {
            if h < 2 * ne {
                Step::Edge(Dart { edge: h / 2, from_black: h.is_multiple_of(2) })
            } else {
                Step::Arc((h - 2 * ne) / 2 + 1)
            }
        };
        let mut faces = Vec::new();
        for orbit in orbits {
            let steps: Vec<Step> = orbit.iter().map(|&h| step_of(h)).collect();
            // The region outside the disk is traced by reversed arcs only.
            if orbit.iter().all(|&h| h >= 2 * ne && (h - 2 * ne) % 2 == 1) {
                continue;
            }
            let kind = match self.surface {
                Surface::Torus => FaceKind::Internal,
                Surface::Disk => {
                    let arcs: Vec<usize> = steps
                        .iter()
                        .filter_map(|s| if let Step::Arc(j) = s { Some(*j) } else { None })
                        .collect();
                    if arcs.contains(&n) && n > 0 {
                        FaceKind::Infinite
                    } else if !arcs.is_empty() {
                        FaceKind::External
                    } else {
                        FaceKind::Internal
                    }
                }
            };
            faces.push(Face { steps: rotate_to_min(steps), kind });
        }
        if self.surface == Surface::Disk && n == 0 && !faces.is_empty() {
            let outer = self.outer_dart.unwrap_or(Dart { edge: 0, from_black: false });
            let idx = faces
                .iter()
                .position(|f| f.steps.contains(&Step::Edge(outer)))
                .ok_or_else(|| GraphError::Unknown("outer dart".into()))?;
            faces[idx].kind = FaceKind::Infinite;
        }
        faces.sort_by_key(face_sort_key);
        let mut dart_face = HashMap::new();
        for (i, f) in faces.iter().enumerate() {
            for d in f.darts() {
                dart_face.insert(d, i);
            }
        }
        self.faces = faces;
        self.dart_face = dart_face;
        Ok(())
    }

    /// Surface tag.
    pub fn surface(&self) -> Surface {
        self.surface
    }

    /// Number of vertices.
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Number of edges.
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Vertex record.
    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v]
    }

    /// All vertex records.
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    /// Edge record.
    pub fn edge(&self, e: EdgeId) -> Edge {
        self.edges[e]
    }

    /// All edges.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Counterclockwise rotation at `v`.
    pub fn rotation(&self, v: VertexId) -> &[EdgeId] {
        &self.rotation[v]
    }

    /// Degree of `v`.
    pub fn degree(&self, v: VertexId) -> usize {
        self.rotation[v].len()
    }

    /// Colour of `v`.
    pub fn color(&self, v: VertexId) -> Color {
        self.vertices[v].color
    }

    /// Boundary vertices in clockwise order.
    pub fn boundary(&self) -> &[VertexId] {
        &self.boundary
    }

    /// Number of boundary vertices.
    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }

    /// Vertex carrying boundary label `j` (1-based).
    pub fn boundary_vertex(&self, j: usize) -> VertexId {
        self.boundary[j - 1]
    }

    /// True for boundary vertices.
    pub fn is_boundary(&self, v: VertexId) -> bool {
        self.vertices[v].boundary.is_some()
    }

    /// Looks up a vertex by label.
    pub fn find_label(&self, label: &str) -> Option<VertexId> {
        self.vertices.iter().position(|v| v.label == label)
    }

    /// Black vertices in id order.
    pub fn blacks(&self) -> Vec<VertexId> {
        (0..self.vertices.len()).filter(|&v| self.vertices[v].color == Color::Black).collect()
    }

    /// White vertices with the boundary first (in boundary order) followed by
    /// internal whites in id order. This is the column order of the
    /// Kasteleyn matrix.
    pub fn whites(&self) -> Vec<VertexId> {
        let mut out = self.boundary.clone();
        out.extend(
            (0..self.vertices.len())
                .filter(|&v| self.vertices[v].color == Color::White && self.vertices[v].boundary.is_none()),
        );
        out
    }

    /// Internal white vertices in id order.
    pub fn internal_whites(&self) -> Vec<VertexId> {
        self.whites().into_iter().filter(|&w| !self.is_boundary(w)).collect()
    }

    /// Endpoint of `e` other than `v`.
    pub fn other_end(&self, e: EdgeId, v: VertexId) -> VertexId {
        let edge = self.edges[e];
        if edge.black == v {
            edge.white
        } else {
            edge.black
        }
    }

    /// Start vertex of a dart.
    pub fn tail(&self, d: Dart) -> VertexId {
        let e = self.edges[d.edge];
        if d.from_black {
            e.black
        } else {
            e.white
        }
    }

    /// End vertex of a dart.
    pub fn head(&self, d: Dart) -> VertexId {
        self.tail(d.reverse())
    }

    /// Dart leaving `v` along `e`.
    pub fn dart_from(&self, v: VertexId, e: EdgeId) -> Dart {
        Dart { edge: e, from_black: self.edges[e].black == v }
    }

    /// Position of `e` in the rotation at `v`.
    pub fn rotation_index(&self, v: VertexId, e: EdgeId) -> usize {
        self.rotation[v].iter().position(|&x| x == e).expect("edge not incident")
    }

    /// Edge following `e` counterclockwise around `v`.
    pub fn succ_ccw(&self, v: VertexId, e: EdgeId) -> EdgeId {
        let r = &self.rotation[v];
        r[(self.rotation_index(v, e) + 1) % r.len()]
    }

    /// Edge following `e` clockwise around `v`.
    pub fn pred_ccw(&self, v: VertexId, e: EdgeId) -> EdgeId {
        let r = &self.rotation[v];
        r[(self.rotation_index(v, e) + r.len() - 1) % r.len()]
    }

    /// Edges joining `b` and `w`.
    pub fn edges_between(&self, a: VertexId, b: VertexId) -> Vec<EdgeId> {
        self.rotation[a].iter().copied().filter(|&e| self.other_end(e, a) == b).collect()
    }

    /// Neighbours of `v` in rotation order (with multiplicity).
    pub fn neighbors(&self, v: VertexId) -> Vec<VertexId> {
        self.rotation[v].iter().map(|&e| self.other_end(e, v)).collect()
    }

    /// Faces, sorted canonically: internal faces first, then external faces,
    /// then the infinite face; ties broken by the smallest dart.
    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Index of the face lying to the right of a dart.
    pub fn face_of_dart(&self, d: Dart) -> usize {
        self.dart_face[&d]
    }

    /// Indices of internal faces.
    pub fn internal_faces(&self) -> Vec<usize> {
        (0..self.faces.len()).filter(|&i| self.faces[i].kind == FaceKind::Internal).collect()
    }

    /// Cyclic vertex sequence of a face walk (graph vertices only).
    pub fn face_vertices(&self, f: usize) -> Vec<VertexId> {
        self.faces[f].darts().iter().map(|&d| self.tail(d)).collect()
    }

    /// Walk of an internal face as `(w_1, b_1, …, w_m, b_m)` in clockwise
    /// order together with the edges `b_i w_i` and `b_i w_{i+1}`, starting at
    /// the white vertex of the smallest dart leaving a white vertex.
    pub fn face_cycle(&self, f: usize) -> FaceCycle {
        let darts = self.faces[f].darts();
        let start = darts.iter().position(|d| !d.from_black).expect("face without white vertex");
        let len = darts.len();
        let mut whites = Vec::new();
        let mut blacks = Vec::new();
        let mut numer_edges = Vec::new();
        let mut denom_edges = Vec::new();
        for i in 0..len / 2 {
            let wb = darts[(start + 2 * i) % len];
            let bw = darts[(start + 2 * i + 1) % len];
            whites.push(self.tail(wb));
            blacks.push(self.head(wb));
            numer_edges.push(wb.edge);
            denom_edges.push(bw.edge);
        }
        FaceCycle { whites, blacks, numer_edges, denom_edges }
    }

    /// Rotation successor map recovered from the traced faces: for each dart
    /// `h` on a face, the next dart of the face leaves the head of `h` along
    /// the edge following `h` counterclockwise.
    pub fn rotation_from_faces(&self) -> Vec<Vec<EdgeId>> {
        let mut succ: HashMap<(VertexId, EdgeId), EdgeId> = HashMap::new();
        for f in &self.faces {
            let darts = f.darts();
            let steps = &f.steps;
            for (i, s) in steps.iter().enumerate() {
                let Step::Edge(d) = s else { continue };
                if let Step::Edge(next) = steps[(i + 1) % steps.len()] {
                    succ.insert((self.head(*d), d.edge), next.edge);
                }
            }
            let _ = darts;
        }
        (0..self.vertices.len())
            .map(|v| {
                let deg = self.rotation[v].len();
                if deg == 0 {
                    return Vec::new();
                }
                let first = self.rotation[v][0];
                let mut ring = vec![first];
                let mut cur = first;
                for _ in 1..deg {
                    cur = *succ.get(&(v, cur)).unwrap_or(&cur);
                    ring.push(cur);
                }
                ring
            })
            .collect()
    }

    /// Zigzag successor of a dart: at a white head turn maximally left (the
    /// next edge clockwise), at a black head turn maximally right (the next
    /// edge counterclockwise).
    pub fn zigzag_next(&self, d: Dart) -> Dart {
        let v = self.head(d);
        let e = match self.color(v) {
            Color::White => self.pred_ccw(v, d.edge),
            Color::Black => self.succ_ccw(v, d.edge),
        };
        self.dart_from(v, e)
    }

    /// All zigzag paths and cycles together with the trip permutation.
    pub fn zigzags(&self) -> Zigzags {
        let mut on_path: HashMap<Dart, usize> = HashMap::new();
        let mut paths = Vec::new();
        let mut trip = Vec::new();
        for (i, &v) in self.boundary.iter().enumerate() {
            let j = i + 1;
            let mut darts = Vec::new();
            let end;
            if self.rotation[v].is_empty() {
                end = j;
            } else {
                let mut d = self.dart_from(v, self.rotation[v][0]);
                loop {
                    darts.push(d);
                    let h = self.head(d);
                    if let Some(label) = self.vertices[h].boundary {
                        end = label;
                        break;
                    }
                    d = self.zigzag_next(d);
                }
            }
            for (pos, d) in darts.iter().enumerate() {
                on_path.insert(*d, pos);
            }
            paths.push(Zigzag { start: Some(j), end: Some(end), darts });
            trip.push(end);
        }
        let mut cycles = Vec::new();
        let mut seen: BTreeSet<Dart> = on_path.keys().copied().collect();
        for e in 0..self.edges.len() {
            for from_black in [true, false] {
                let start = Dart { edge: e, from_black };
                if seen.contains(&start) {
                    continue;
                }
                let mut darts = Vec::new();
                let mut d = start;
                while seen.insert(d) {
                    darts.push(d);
                    d = self.zigzag_next(d);
                }
                cycles.push(Zigzag { start: None, end: None, darts });
            }
        }
        Zigzags { paths, cycles, trip }
    }

    /// Reducedness: every zigzag runs boundary to boundary, no zigzag of
    /// length greater than two meets itself, and no two distinct zigzags have
    /// two intersections met in the same order along both. An intersection
    /// is an edge the two zigzags traverse in opposite directions.
    pub fn is_reduced(&self) -> bool {
        if self.surface != Surface::Disk {
            return false;
        }
        let z = self.zigzags();
        if !z.cycles.is_empty() {
            return false;
        }
        let mut owner: HashMap<Dart, (usize, usize)> = HashMap::new();
        for (i, p) in z.paths.iter().enumerate() {
            for (pos, d) in p.darts.iter().enumerate() {
                owner.insert(*d, (i, pos));
            }
        }
        for p in &z.paths {
            if p.darts.len() > 2 {
                let mut edges = BTreeSet::new();
                for d in &p.darts {
                    if !edges.insert(d.edge) {
                        return false;
                    }
                }
            }
        }
        // For each ordered pair of zigzags, the positions of shared edges.
        let mut shared: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for e in 0..self.edges.len() {
            let a = owner[&Dart { edge: e, from_black: true }];
            let b = owner[&Dart { edge: e, from_black: false }];
            if a.0 == b.0 {
                continue;
            }
            let (x, y) = if a.0 < b.0 { (a, b) } else { (b, a) };
            shared.entry((x.0, y.0)).or_default().push((x.1, y.1));
        }
        for list in shared.values() {
            for i in 0..list.len() {
                for j in 0..list.len() {
                    if i != j && list[i].0 < list[j].0 && list[i].1 < list[j].1 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Graphviz rendering: black and white filled nodes, boundary vertices
    /// drawn as double circles with their numbers.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph G {\n  node [style=filled, shape=circle, fontsize=10];\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let (fill, font) = match v.color {
                Color::Black => ("black", "white"),
                Color::White => ("white", "black"),
            };
            let shape = if v.boundary.is_some() { "doublecircle" } else { "circle" };
            let _ = writeln!(
                s,
                "  v{i} [label=\"{}\", fillcolor={fill}, fontcolor={font}, shape={shape}];",
                v.label.replace('"', "'")
            );
        }
        for (e, edge) in self.edges.iter().enumerate() {
            let _ = writeln!(s, "  v{} -- v{} [label=\"e{e}\"];", edge.black, edge.white);
        }
        s.push_str("}\n");
        s
    }

    /// Dual adjacency of internal faces: for every edge separating two
    /// distinct internal faces, the pair of faces on its two sides as
    /// `(face right of the black-to-white dart, face right of the
    /// white-to-black dart)`.
    pub fn dual_edges(&self) -> Vec<(EdgeId, usize, usize)> {
        (0..self.edges.len())
            .map(|e| {
                let f1 = self.face_of_dart(Dart { edge: e, from_black: true });
                let f2 = self.face_of_dart(Dart { edge: e, from_black: false });
                (e, f1, f2)
            })
            .collect()
    }
}

/// An internal face read clockwise as `w_1, b_1, …, w_m, b_m`, with
/// `numer_edges[i]` joining `b_i, w_i` and `denom_edges[i]` joining
/// `b_i, w_{i+1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaceCycle {
    /// White vertices `w_1..w_m`.
    pub whites: Vec<VertexId>,
    /// Black vertices `b_1..b_m`.
    pub blacks: Vec<VertexId>,
    /// Edges `b_i w_i`.
    pub numer_edges: Vec<EdgeId>,
    /// Edges `b_i w_{i+1}`.
    pub denom_edges: Vec<EdgeId>,
}

/// A zigzag path (boundary to boundary) or cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Zigzag {
    /// Starting boundary label, `None` for cycles.
    pub start: Option<usize>,
    /// Ending boundary label, `None` for cycles.
    pub end: Option<usize>,
    /// Darts in order.
    pub darts: Vec<Dart>,
}

/// Zigzag decomposition of a graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Zigzags {
    /// Zigzag `j` is `paths[j - 1]`.
    pub paths: Vec<Zigzag>,
    /// Closed zigzags (none for reduced graphs).
    pub cycles: Vec<Zigzag>,
    /// Trip permutation: `trip[j - 1]` is the end label of zigzag `j`.
    pub trip: Vec<usize>,
}

fn rotate_to_min(mut steps: Vec<Step>) -> Vec<Step> {
    let key = |s: &Step| match s {
        Step::Edge(d) => (0usize, d.edge, !d.from_black as usize),
        Step::Arc(j) => (1, *j, 0),
    };
    if let Some((i, _)) = steps.iter().enumerate().min_by_key(|(_, s)| key(s)) {
        steps.rotate_left(i);
    }
    steps
}

fn face_sort_key(f: &Face) -> (u8, Vec<(usize, bool)>) {
    let rank = match f.kind {
        FaceKind::Internal => 0,
        FaceKind::External => 1,
        FaceKind::Infinite => 2,
    };
    let mut darts: Vec<(usize, bool)> = f.darts().iter().map(|d| (d.edge, !d.from_black)).collect();
    darts.sort();
    let arcs: Vec<(usize, bool)> = f.arcs().iter().map(|&j| (usize::MAX - 1000 + j, false)).collect();
    darts.extend(arcs);
    (rank, darts)
}

/// A boundary leg created by preprocessing: boundary vertex `boundary` is
/// joined to a new degree-two black vertex `black`, whose other neighbour is
/// the new internal white `white` carrying the original edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leg {
    /// Boundary label `j`.
    pub boundary: usize,
    /// The new degree-two black vertex.
    pub black: VertexId,
    /// The new internal white vertex.
    pub white: VertexId,
    /// Edge from the black vertex to the boundary vertex.
    pub outer_edge: EdgeId,
    /// Edge from the black vertex to the new internal white vertex.
    pub inner_edge: EdgeId,
}

impl GraphParts {
    /// Rewrites every boundary vertex of degree two or more by degree-two
    /// black vertex addition: the boundary vertex keeps a single edge to a
    /// new black vertex, whose other edge leads to a new internal white
    /// vertex that takes over the original edges. New vertices are appended
    /// after the existing ones, so existing ids are unchanged.
    pub fn preprocess_boundary(mut self) -> (GraphParts, Vec<Leg>) {
        let mut legs = Vec::new();
        for (i, &v) in self.boundary.clone().iter().enumerate() {
            if v >= self.rotation.len() || self.rotation[v].len() < 2 {
                continue;
            }
            let label = self.vertices[v].label.clone();
            let c = self.vertices.len();
            self.vertices.push(VertexSpec { label: format!("c{label}"), color: Color::Black });
            let x = self.vertices.len();
            self.vertices.push(VertexSpec { label: format!("x{label}"), color: Color::White });
            let old = std::mem::take(&mut self.rotation[v]);
            for &e in &old {
                for end in self.edges[e].iter_mut() {
                    if *end == v {
                        *end = x;
                    }
                }
            }
            let inner = self.edges.len();
            self.edges.push([c, x]);
            let outer = self.edges.len();
            self.edges.push([c, v]);
            let mut ring = old;
            ring.push(inner);
            self.rotation.push(vec![outer, inner]);
            self.rotation.push(ring);
            self.rotation[v] = vec![outer];
            legs.push(Leg { boundary: i + 1, black: c, white: x, outer_edge: outer, inner_edge: inner });
        }
        (self, legs)
    }
}

/// An almost perfect matching of all black vertices into the white vertices
/// outside `avoid`, using only edges accepted by `allowed`. Returns the
/// matched edge for each black vertex (in the order of
/// [`SurfaceGraph::blacks`]) or `None` when no such matching exists.
pub fn matching_avoiding(
    g: &SurfaceGraph,
    avoid: &[VertexId],
    allowed: impl Fn(EdgeId) -> bool,
) -> Option<Vec<EdgeId>> {
    let blacks = g.blacks();
    let forbidden: BTreeSet<VertexId> = avoid.iter().copied().collect();
    let mut owner: HashMap<VertexId, (usize, EdgeId)> = HashMap::new();
    fn augment(
        g: &SurfaceGraph,
        bi: usize,
        blacks: &[VertexId],
        forbidden: &BTreeSet<VertexId>,
        allowed: &dyn Fn(EdgeId) -> bool,
        owner: &mut HashMap<VertexId, (usize, EdgeId)>,
        visited: &mut BTreeSet<VertexId>,
    ) -> bool {
        for &e in g.rotation(blacks[bi]) {
            let w = g.edge(e).white;
            if forbidden.contains(&w) || !allowed(e) || !visited.insert(w) {
                continue;
            }
            let free = match owner.get(&w) {
                None => true,
                Some(&(other, _)) => augment(g, other, blacks, forbidden, allowed, owner, visited),
            };
            if free {
                owner.insert(w, (bi, e));
                return true;
            }
        }
        false
    }
    for bi in 0..blacks.len() {
        let mut visited = BTreeSet::new();
        if !augment(g, bi, &blacks, &forbidden, &allowed, &mut owner, &mut visited) {
            return None;
        }
    }
    let mut out = vec![0; blacks.len()];
    for &(bi, e) in owner.values() {
        out[bi] = e;
    }
    Some(out)
}

/// Incremental builder for planar graphs drawn with integer coordinates.
/// Rotations are computed from the exact angular order of the edges around
/// each vertex, so parallel edges are not supported here.
#[derive(Clone, Debug, Default)]
pub struct PlanarBuilder {
    labels: Vec<String>,
    colors: Vec<Color>,
    pos: Vec<(i64, i64)>,
    edges: Vec<[VertexId; 2]>,
    boundary: Vec<VertexId>,
}

impl PlanarBuilder {
    /// Empty builder.
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a vertex at an integer position and returns its id.
    pub fn vertex(&mut self, label: &str, color: Color, x: i64, y: i64) -> VertexId {
        self.labels.push(label.to_string());
        self.colors.push(color);
        self.pos.push((x, y));
        self.labels.len() - 1
    }

    /// Adds a white boundary vertex; boundary numbers follow insertion order
    /// and must be clockwise.
    pub fn boundary_vertex(&mut self, label: &str, x: i64, y: i64) -> VertexId {
        let v = self.vertex(label, Color::White, x, y);
        self.boundary.push(v);
        v
    }

    /// Adds an edge.
    pub fn edge(&mut self, a: VertexId, b: VertexId) -> EdgeId {
        self.edges.push([a, b]);
        self.edges.len() - 1
    }

    /// Position of a vertex.
    pub fn position(&self, v: VertexId) -> (i64, i64) {
        self.pos[v]
    }

    /// Builds the disk graph, preprocessing boundary vertices of degree two
    /// or more into legs.
    pub fn build(&self) -> Result<SurfaceGraph, GraphError> {
        self.build_with_legs().map(|(g, _)| g)
    }

    /// Builds the disk graph and reports the legs created by boundary
    /// preprocessing.
    pub fn build_with_legs(&self) -> Result<(SurfaceGraph, Vec<Leg>), GraphError> {
        let nv = self.labels.len();
        let mut rotation: Vec<Vec<EdgeId>> = vec![Vec::new(); nv];
        for (e, [a, b]) in self.edges.iter().copied().enumerate() {
            rotation[a].push(e);
            rotation[b].push(e);
        }
        // Boundary rings start just after the outward direction, measured
        // from the centroid of the boundary vertices, so that the outside of
        // the disk sits between the last and the first edge.
        let nb = self.boundary.len() as i64;
        let centroid = if nb == 0 {
            (0, 0)
        } else {
            let sx: i64 = self.boundary.iter().map(|&v| self.pos[v].0).sum();
            let sy: i64 = self.boundary.iter().map(|&v| self.pos[v].1).sum();
            (sx, sy)
        };
        for (v, ring) in rotation.iter_mut().enumerate() {
            let (x0, y0) = self.pos[v];
            let reference = if self.boundary.contains(&v) {
                (nb * x0 - centroid.0, nb * y0 - centroid.1)
            } else {
                (1, 0)
            };
            let dir = |e: EdgeId| {
                let [a, b] = self.edges[e];
                let o = if a == v { b } else { a };
                let (dx, dy) = (self.pos[o].0 - x0, self.pos[o].1 - y0);
                (dx * reference.0 + dy * reference.1, dy * reference.0 - dx * reference.1)
            };
            ring.sort_by(|&e1, &e2| angle_cmp(dir(e1), dir(e2)));
        }
        let outer_dart = if self.boundary.is_empty() { self.outer_dart() } else { None };
        let parts = GraphParts {
            surface: Surface::Disk,
            vertices: self
                .labels
                .iter()
                .zip(&self.colors)
                .map(|(l, c)| VertexSpec { label: l.clone(), color: *c })
                .collect(),
            edges: self.edges.clone(),
            rotation,
            boundary: self.boundary.clone(),
            outer_dart,
        };
        let (parts, legs) = parts.preprocess_boundary();
        Ok((SurfaceGraph::from_parts(parts)?, legs))
    }
}

impl PlanarBuilder {
    /// A dart with the unbounded region on its right: it leaves the
    /// lowest of the leftmost vertices along the first edge counterclockwise
    /// from due south.
    fn outer_dart(&self) -> Option<Dart> {
        let v = (0..self.labels.len())
            .filter(|&v| self.edges.iter().any(|e| e.contains(&v)))
            .min_by_key(|&v| self.pos[v])?;
        let (x0, y0) = self.pos[v];
        let dir = |e: EdgeId| {
            let [a, b] = self.edges[e];
            let o = if a == v { b } else { a };
            let (dx, dy) = (self.pos[o].0 - x0, self.pos[o].1 - y0);
            (-dy, dx)
        };
        let e = (0..self.edges.len())
            .filter(|&e| self.edges[e].contains(&v))
            .min_by(|&a, &b| angle_cmp(dir(a), dir(b)))?;
        let [a, b] = self.edges[e];
        let black = if self.colors[a] == Color::Black { a } else { b };
        Some(Dart { edge: e, from_black: black == v })
    }
}

/// Exact counterclockwise angular comparison of two nonzero directions,
/// starting from the positive x axis.
fn angle_cmp(a: (i64, i64), b: (i64, i64)) -> std::cmp::Ordering {
    let half = |p: (i64, i64)| if p.1 > 0 || (p.1 == 0 && p.0 > 0) { 0 } else { 1 };
    let (ha, hb) = (half(a), half(b));
    if ha != hb {
        return ha.cmp(&hb);
    }
    let cross = a.0 as i128 * b.1 as i128 - a.1 as i128 * b.0 as i128;
    0.cmp(&cross)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_cycle() -> SurfaceGraph {
        let mut b = PlanarBuilder::new();
        let w0 = b.vertex("w0", Color::White, 0, 0);
        let b0 = b.vertex("b0", Color::Black, 1, 0);
        let w1 = b.vertex("w1", Color::White, 1, 1);
        let b1 = b.vertex("b1", Color::Black, 0, 1);
        b.edge(w0, b0);
        b.edge(b0, w1);
        b.edge(w1, b1);
        b.edge(b1, w0);
        b.build().unwrap()
    }

    #[test]
    fn four_cycle_faces() {
        let g = four_cycle();
        let kinds: Vec<_> = g.faces().iter().map(|f| f.kind).collect();
        assert_eq!(kinds, vec![FaceKind::Internal, FaceKind::Infinite]);
        assert!(g.faces().iter().all(|f| f.len() == 4));
    }

    #[test]
    fn rejects_bad_boundary_degree() {
        let parts = GraphParts {
            surface: Surface::Disk,
            vertices: vec![
                VertexSpec { label: "1".into(), color: Color::White },
                VertexSpec { label: "b1".into(), color: Color::Black },
                VertexSpec { label: "b2".into(), color: Color::Black },
            ],
            edges: vec![[0, 1], [0, 2]],
            rotation: vec![vec![0, 1], vec![0], vec![1]],
            boundary: vec![0],
            outer_dart: None,
        };
        assert!(matches!(
            SurfaceGraph::from_parts(parts.clone()),
            Err(GraphError::BoundaryDegree { label: 1, degree: 2 })
        ));
        let (fixed, legs) = parts.preprocess_boundary();
        assert_eq!(legs.len(), 1);
        let g = SurfaceGraph::from_parts(fixed).unwrap();
        assert_eq!(g.degree(0), 1);
        assert_eq!(g.degree(legs[0].white), 3);
    }

    #[test]
    fn rejects_monochromatic_edge() {
        let mut b = PlanarBuilder::new();
        let w = b.vertex("a", Color::White, 0, 0);
        let x = b.vertex("b", Color::White, 1, 0);
        b.edge(w, x);
        assert!(matches!(b.build(), Err(GraphError::NotBipartite { edge: 0 })));
    }

    #[test]
    fn degree_one_black_zigzag_returns() {
        let mut b = PlanarBuilder::new();
        let w = b.boundary_vertex("1", 0, 2);
        let blk = b.vertex("b", Color::Black, 0, 1);
        b.edge(w, blk);
        let g = b.build().unwrap();
        let z = g.zigzags();
        assert_eq!(z.trip, vec![1]);
        assert_eq!(z.paths[0].darts.len(), 2);
        assert_eq!(g.head(z.paths[0].darts[0]), blk);
    }

    #[test]
    fn isolated_boundary_vertex_has_empty_zigzag() {
        let mut b = PlanarBuilder::new();
        b.boundary_vertex("1", 0, 2);
        b.boundary_vertex("2", 2, 0);
        let w = b.boundary_vertex("3", 0, -2);
        let blk = b.vertex("b", Color::Black, 0, 0);
        b.edge(w, blk);
        let g = b.build().unwrap();
        let z = g.zigzags();
        assert!(z.paths[0].darts.is_empty());
        assert_eq!(z.trip[0], 1);
        assert_eq!(z.trip[1], 2);
    }

    #[test]
    fn doubled_edge_is_not_reduced() {
        let parts = GraphParts {
            surface: Surface::Disk,
            vertices: vec![
                VertexSpec { label: "1".into(), color: Color::White },
                VertexSpec { label: "2".into(), color: Color::White },
                VertexSpec { label: "b".into(), color: Color::Black },
                VertexSpec { label: "w".into(), color: Color::White },
                VertexSpec { label: "c".into(), color: Color::Black },
            ],
            // 1 - b = w = c - 2, with a doubled edge between b and w.
            edges: vec![[2, 0], [2, 3], [2, 3], [4, 3], [4, 1]],
            rotation: vec![vec![0], vec![4], vec![1, 0, 2], vec![3, 1, 2], vec![3, 4]],
            boundary: vec![0, 1],
            outer_dart: None,
        };
        let g = SurfaceGraph::from_parts(parts).unwrap();
        assert!(!g.is_reduced());
    }

    #[test]
    fn rotation_round_trip() {
        let g = four_cycle();
        assert_eq!(g.rotation_from_faces(), g.to_parts().rotation);
    }

    #[test]
    fn json_round_trip() {
        let g = four_cycle();
        let g2 = SurfaceGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(g, g2);
    }
}
