//! Geometric dynamical systems realised by local moves.
//!
//! Every system comes in two forms: a direct construction from lines and
//! planes, and a sequence of urban renewals and degree-two removals on the
//! associated bipartite graph, with the new points read off the white
//! vertices. The graph runs also carry the face weights along by Y-seed
//! mutation, so each run doubles as a check of the mutation rule.
//!
//! - Pentagram map: `B_i = ⟨A_{i−1}, A_{i+1}⟩ ∩ ⟨A_i, A_{i+2}⟩` on the square
//!   grid folded onto a torus by the lattice `⟨(−3, 1), (2n, 0)⟩`.
//! - Laplace–Darboux dynamics on a finite window of the square grid.
//! - Q-nets: gentrification of one elementary cube on a lozenge patch.
//! - Discrete Darboux maps: superurban renewal of one hexahedron.
//! - Resistor networks, whose configurations are Koenigs nets, and the
//!   Ising graph of a triangle, whose six boundary points lie on a conic.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config_core::{is_circuit, ConfigError, Configuration, Mode};
use crate::exact_linalg::{
    join, line_meet, meet_point, multi_ratio, q, random_invertible, random_nonzero, random_nonzero_vector,
    LinalgError, Matrix, ProjectivePoint, Scalar, Subspace, Vector,
};
use crate::local_moves::{
    face_correspondence, face_correspondence_by_edges, remove_degree2_with_map, urban_renewal_with_map, y_mutation,
    MoveError, UrbanRenewalMap,
};
use crate::surface_graph::{
    Color, Dart, EdgeId, GraphError, GraphParts, PlanarBuilder, Surface, SurfaceGraph, VertexId, VertexSpec,
};

/// Errors raised by the dynamics drivers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DynamicsError {
    /// The pentagram map needs at least five vertices.
    #[error("polygon has {n} vertices; at least 5 are needed")]
    TooSmall { n: usize },
    /// Points have the wrong number of homogeneous coordinates.
    #[error("points must have {expected} homogeneous coordinates, found {found}")]
    Dimension { expected: usize, found: usize },
    /// A required intersection is not a single point, or a neighbourhood
    /// is not in general position.
    #[error("degenerate intersection: {0}")]
    Degenerate(String),
    /// A black neighbourhood of four points is not coplanar.
    #[error("coplanarity violated at {0}")]
    CoplanarityViolated(String),
    /// The edge points of a lozenge are not collinear.
    #[error("collinearity violated at {0}")]
    CollinearityViolated(String),
    /// The three planes through the new cube vertex do not meet in a point.
    #[error("planes are not in general position")]
    PlanesNotGeneral,
    /// A conductance is zero or negative.
    #[error("conductance of edge {0} is not positive")]
    NonpositiveConductance(String),
    /// The neighbours of a black vertex are not a circuit.
    #[error("neighbours of black vertex {0} are not a circuit")]
    NotACircuit(String),
    /// A move sequence did not find the face or vertex it expected.
    #[error("move sequence failed: {0}")]
    Sequence(String),
    /// The two pipelines disagree.
    #[error("graph pipeline disagrees with the direct construction: {0}")]
    Mismatch(String),
    /// Local move failure.
    #[error(transparent)]
    Move(#[from] MoveError),
    /// Configuration failure.
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Linear algebra failure.
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    /// Graph failure.
    #[error(transparent)]
    Graph(#[from] GraphError),
}

type Result<T> = std::result::Result<T, DynamicsError>;

fn point(v: &[Scalar]) -> Result<ProjectivePoint> {
    Ok(ProjectivePoint::new(v.to_vec())?)
}

fn rank(points: &[&ProjectivePoint]) -> usize {
    join(points).dim()
}

fn check_dim(points: &[&ProjectivePoint], expected: usize) -> Result<()> {
    for p in points {
        if p.len() != expected {
            return Err(DynamicsError::Dimension { expected, found: p.len() });
        }
    }
    Ok(())
}

fn circuit(points: &[&ProjectivePoint]) -> bool {
    let k = points.first().map_or(0, |p| p.len());
    let vs: Vec<Vector> = points.iter().map(|p| p.coords().clone()).collect();
    is_circuit(k, &vs)
}

fn meet(p1: &ProjectivePoint, p2: &ProjectivePoint, p3: &ProjectivePoint, p4: &ProjectivePoint, what: &str) -> Result<ProjectivePoint> {
    line_meet(p1, p2, p3, p4).map_err(|_| DynamicsError::Degenerate(what.to_string()))
}

/// A random point `Σ λ_i P_i` with nonzero integer coefficients.
fn random_combination<R: Rng + ?Sized>(rng: &mut R, points: &[&ProjectivePoint]) -> Option<ProjectivePoint> {
    let k = points.first()?.len();
    let mut v = vec![Scalar::zero(); k];
    for p in points {
        let l = random_nonzero(rng);
        for (x, y) in v.iter_mut().zip(p.coords()) {
            *x += &l * y;
        }
    }
    ProjectivePoint::new(v).ok()
}

fn random_point<R: Rng + ?Sized>(rng: &mut R, k: usize) -> ProjectivePoint {
    ProjectivePoint::new(random_nonzero_vector(rng, k)).expect("nonzero vector")
}

/// Builds the configuration with the given white vectors whose relation at
/// each black vertex is the unique (up to scale) dependency among its
/// neighbours. Every black neighbourhood must be a circuit.
pub fn configuration_from_points(g: &SurfaceGraph, k: usize, vectors: Vec<Option<Vector>>) -> Result<Configuration> {
    let mut coeffs = vec![Scalar::zero(); g.n_edges()];
    for b in g.blacks() {
        let ring = g.rotation(b);
        let mut cols = Vec::with_capacity(ring.len());
        for &e in ring {
            let w = g.edge(e).white;
            let v = vectors
                .get(w)
                .and_then(|v| v.clone())
                .ok_or_else(|| DynamicsError::Sequence(format!("no vector at white vertex {}", g.vertex(w).label)))?;
            cols.push(v);
        }
        if !is_circuit(k, &cols) {
            return Err(DynamicsError::NotACircuit(g.vertex(b).label.clone()));
        }
        let ker = Matrix::from_columns(k, &cols)?.kernel();
        for (i, &e) in ring.iter().enumerate() {
            coeffs[e] = ker[0][i].clone();
        }
    }
    Ok(Configuration::new(g.clone(), k, vectors, coeffs, Mode::General)?)
}

fn transport(weights: &BTreeMap<usize, Scalar>, corr: &BTreeMap<usize, usize>) -> BTreeMap<usize, Scalar> {
    weights.iter().filter_map(|(f, y)| corr.get(f).map(|g| (*g, y.clone()))).collect()
}

/// A configuration evolving under local moves together with face weights
/// carried along by Y-seed mutation (urban renewal) and unchanged through
/// degree-two removals.
#[derive(Clone, Debug)]
pub struct MoveTracker {
    config: Configuration,
    tracked: BTreeMap<usize, Scalar>,
    renewals: usize,
}

impl MoveTracker {
    /// Starts tracking from the face weights of `config`.
    pub fn new(config: Configuration) -> Result<Self> {
        let tracked = config.face_weights()?;
        Ok(MoveTracker { config, tracked, renewals: 0 })
    }

    /// Current configuration.
    pub fn config(&self) -> &Configuration {
        &self.config
    }

    /// Face weights obtained by mutation, keyed by current face index.
    pub fn tracked_weights(&self) -> &BTreeMap<usize, Scalar> {
        &self.tracked
    }

    /// Number of urban renewals performed.
    pub fn renewals(&self) -> usize {
        self.renewals
    }

    /// True when the mutated face weights equal the face weights recomputed
    /// from the current coefficients.
    pub fn weights_agree(&self) -> Result<bool> {
        Ok(self.config.face_weights()? == self.tracked)
    }

    /// Vertex with the given label.
    pub fn vertex(&self, label: &str) -> Result<VertexId> {
        self.config
            .graph()
            .find_label(label)
            .ok_or_else(|| DynamicsError::Sequence(format!("no vertex labelled {label}")))
    }

    /// Point at the white vertex with the given label.
    pub fn point(&self, label: &str) -> Result<ProjectivePoint> {
        point(self.config.vector(self.vertex(label)?))
    }

    /// Labels of the neighbours of a vertex, in rotation order.
    pub fn neighbour_labels(&self, label: &str) -> Result<Vec<String>> {
        let g = self.config.graph();
        Ok(g.neighbors(self.vertex(label)?).into_iter().map(|v| g.vertex(v).label.clone()).collect())
    }

    /// Urban renewal at face `f`.
    pub fn renew(&mut self, f: usize) -> Result<UrbanRenewalMap> {
        let mutated = y_mutation(self.config.graph(), &self.tracked, f)?;
        let (next, map) = urban_renewal_with_map(&self.config, f)?;
        let corr = face_correspondence(self.config.graph(), next.graph(), &map);
        self.tracked = transport(&mutated, &corr);
        self.config = next;
        self.renewals += 1;
        Ok(map)
    }

    /// Removes the degree-two vertex with the given label.
    pub fn remove(&mut self, label: &str) -> Result<()> {
        let v = self.vertex(label)?;
        let (next, emap) = remove_degree2_with_map(&self.config, v)?;
        let corr = face_correspondence_by_edges(self.config.graph(), next.graph(), &emap);
        self.tracked = transport(&self.tracked, &corr);
        self.config = next;
        Ok(())
    }

    /// Renames a vertex.
    pub fn relabel(&mut self, from: &str, to: &str) -> Result<()> {
        let v = self.vertex(from)?;
        let mut parts = self.config.graph().to_parts();
        parts.vertices[v].label = to.to_string();
        let g = SurfaceGraph::from_parts(parts)?;
        let c = &self.config;
        self.config = Configuration::new(g, c.k(), c.vectors().to_vec(), c.coeffs().to_vec(), c.mode())?;
        Ok(())
    }

    /// The internal face whose white vertices are exactly the given labels.
    pub fn face_with_whites(&self, labels: &[&str]) -> Result<usize> {
        let want: BTreeSet<VertexId> = labels.iter().map(|l| self.vertex(l)).collect::<Result<_>>()?;
        let g = self.config.graph();
        let found: Vec<usize> = g
            .internal_faces()
            .into_iter()
            .filter(|&f| {
                let cyc = g.face_cycle(f);
                cyc.whites.len() == want.len() && cyc.whites.iter().copied().collect::<BTreeSet<_>>() == want
            })
            .collect();
        match found.as_slice() {
            [f] => Ok(*f),
            _ => Err(DynamicsError::Sequence(format!(
                "expected one internal face with white vertices {labels:?}, found {}",
                found.len()
            ))),
        }
    }

    /// Urban renewal at the quadrilateral face with white vertices `w1, w2`,
    /// followed by the removal of every face vertex left with degree two
    /// (whites listed in `protected` are kept). Returns, for each new white
    /// vertex that survives, its label and the label of the old black vertex
    /// it hangs from.
    pub fn square_move(&mut self, w1: &str, w2: &str, protected: &BTreeSet<String>) -> Result<Vec<(String, String)>> {
        let f = self.face_with_whites(&[w1, w2])?;
        if self.config.graph().faces()[f].len() != 4 {
            return Err(DynamicsError::Sequence(format!("face of {w1}, {w2} is not a quadrilateral")));
        }
        let map = self.renew(f)?;
        let g = self.config.graph();
        let label = |v: VertexId| g.vertex(v).label.clone();
        let fresh: Vec<(String, String)> = (0..2).map(|i| (label(map.new_whites[i]), label(map.blacks[i]))).collect();
        let candidates: Vec<String> = map.blacks.iter().chain(map.whites.iter()).map(|&v| label(v)).collect();
        for name in candidates {
            let Some(v) = self.config.graph().find_label(&name) else { continue };
            let g = self.config.graph();
            let removable = g.degree(v) == 2 && (g.color(v) == Color::Black || !protected.contains(&name));
            if removable {
                self.remove(&name)?;
            }
        }
        Ok(fresh.into_iter().filter(|(l, _)| self.config.graph().find_label(l).is_some()).collect())
    }

    fn expect_survivors(
        &mut self,
        w1: &str,
        w2: &str,
        protected: &BTreeSet<String>,
        names: &[(&str, &str)],
    ) -> Result<()> {
        let survivors = self.square_move(w1, w2, protected)?;
        if survivors.len() != names.len() {
            return Err(DynamicsError::Sequence(format!(
                "square move at {w1}, {w2} left {} new points, expected {}",
                survivors.len(),
                names.len()
            )));
        }
        for (label, black) in survivors {
            let name = if names.len() == 1 {
                names[0].1
            } else {
                names
                    .iter()
                    .find(|(b, _)| *b == black)
                    .map(|(_, n)| *n)
                    .ok_or_else(|| DynamicsError::Sequence(format!("unexpected new point next to {black}")))?
            };
            self.relabel(&label, name)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Pentagram map
// ---------------------------------------------------------------------------

fn check_polygon(polygon: &[ProjectivePoint]) -> Result<()> {
    let n = polygon.len();
    if n < 5 {
        return Err(DynamicsError::TooSmall { n });
    }
    check_dim(&polygon.iter().collect::<Vec<_>>(), 3)?;
    for i in 0..n {
        let quad: Vec<&ProjectivePoint> = (0..4).map(|d| &polygon[(i + n - 1 + d) % n]).collect();
        if !circuit(&quad) {
            return Err(DynamicsError::Degenerate(format!(
                "vertices {}..{} are not in general position",
                (i + n - 1) % n,
                (i + 2) % n
            )));
        }
    }
    Ok(())
}

/// One step of the pentagram map by direct line intersections,
/// `B_i = ⟨A_{i−1}, A_{i+1}⟩ ∩ ⟨A_i, A_{i+2}⟩`.
pub fn pentagram_step(polygon: &[ProjectivePoint]) -> Result<Vec<ProjectivePoint>> {
    check_polygon(polygon)?;
    let n = polygon.len();
    (0..n)
        .map(|i| {
            let a = |d: usize| &polygon[(i + n + d - 1) % n];
            meet(a(0), a(2), a(1), a(3), &format!("B_{i}"))
        })
        .collect()
}

/// The square grid modulo `⟨(−3, 1), (2n, 0)⟩`. Vertex `c ∈ Z/2n` is the
/// class of `(c, 0)`; even classes are white (`A{c/2}`), odd classes black
/// (`b{(c−1)/2}`). Edge `c` joins `c` to `c + 1` and edge `2n + c` joins `c`
/// to `c + 3`; the rotation at `c` is east, north, west, south.
pub fn pentagram_torus(n: usize) -> Result<SurfaceGraph> {
    if n < 3 {
        return Err(DynamicsError::TooSmall { n });
    }
    let m = 2 * n;
    let vertices = (0..m)
        .map(|c| {
            if c % 2 == 0 {
                VertexSpec { label: format!("A{}", c / 2), color: Color::White }
            } else {
                VertexSpec { label: format!("b{}", c / 2), color: Color::Black }
            }
        })
        .collect();
    let mut edges = Vec::with_capacity(2 * m);
    edges.extend((0..m).map(|c| [c, (c + 1) % m]));
    edges.extend((0..m).map(|c| [c, (c + 3) % m]));
    let rotation = (0..m).map(|c| vec![c, m + c, (c + m - 1) % m, m + (c + m - 3) % m]).collect();
    let parts =
        GraphParts { surface: Surface::Torus, vertices, edges, rotation, boundary: Vec::new(), outer_dart: None };
    Ok(SurfaceGraph::from_parts(parts)?)
}

/// The configuration on [`pentagram_torus`] with `A_i` at white vertex `A{i}`.
pub fn pentagram_configuration(polygon: &[ProjectivePoint]) -> Result<Configuration> {
    check_polygon(polygon)?;
    let n = polygon.len();
    let g = pentagram_torus(n)?;
    let mut vectors = vec![None; 2 * n];
    for (i, p) in polygon.iter().enumerate() {
        vectors[2 * i] = Some(p.coords().clone());
    }
    configuration_from_points(&g, 3, vectors)
}

/// Runs one pentagram step on the torus graph: urban renewal at every face
/// whose upper-left corner is black, then removal of all old vertices.
/// Returns the new polygon (the point at the vertex that replaces `b{i}` is
/// `B_i`) and the tracker holding the final configuration.
pub fn pentagram_run(polygon: &[ProjectivePoint]) -> Result<(Vec<ProjectivePoint>, MoveTracker)> {
    let n = polygon.len();
    let mut t = MoveTracker::new(pentagram_configuration(polygon)?)?;
    for i in 0..n {
        let f = t.config().graph().face_of_dart(Dart { edge: 2 * i, from_black: true });
        t.renew(f)?;
    }
    let slots: Vec<Vec<String>> = (0..n).map(|i| t.neighbour_labels(&format!("b{i}"))).collect::<Result<_>>()?;
    for i in 0..n {
        t.remove(&format!("b{i}"))?;
    }
    for i in 0..n {
        t.remove(&format!("A{i}"))?;
    }
    let mut out = Vec::with_capacity(n);
    for (i, labels) in slots.iter().enumerate() {
        let label = labels
            .iter()
            .find(|l| t.config().graph().find_label(l).is_some())
            .ok_or_else(|| DynamicsError::Sequence(format!("no vertex replaces b{i}")))?;
        out.push(t.point(label)?);
    }
    Ok((out, t))
}

/// One pentagram step computed by moves on the torus graph.
pub fn pentagram_step_via_graph(polygon: &[ProjectivePoint]) -> Result<Vec<ProjectivePoint>> {
    pentagram_run(polygon).map(|(p, _)| p)
}

/// The face weight of the face with white vertices `A_i, A_{i+1}`:
/// `−[A_i, ⟨A_i, A_{i+1}⟩ ∩ ⟨A_{i−2}, A_{i−1}⟩, A_{i+1}, ⟨A_i, A_{i+1}⟩ ∩ ⟨A_{i+2}, A_{i+3}⟩]⁻¹`.
pub fn pentagram_face_weight(polygon: &[ProjectivePoint], i: usize) -> Result<Scalar> {
    check_polygon(polygon)?;
    let n = polygon.len();
    let a = |d: isize| &polygon[((i as isize + d).rem_euclid(n as isize)) as usize];
    let left = meet(a(0), a(1), a(-2), a(-1), "left side point")?;
    let right = meet(a(0), a(1), a(2), a(3), "right side point")?;
    let r = multi_ratio(&[a(0).clone(), left, a(1).clone(), right])?;
    if r.is_zero() {
        return Err(DynamicsError::Degenerate("vanishing cross ratio".into()));
    }
    Ok(-r.recip())
}

/// Face of [`pentagram_torus`] whose white vertices are `A_i, A_{i+1}`.
pub fn pentagram_face(g: &SurfaceGraph, i: usize) -> usize {
    let m = g.n_vertices();
    let c = (2 * i + m - 1) % m;
    g.face_of_dart(Dart { edge: c, from_black: false })
}

/// `steps` generations of the pentagram map computed on the torus graph,
/// each checked against the direct construction. The first entry is the
/// input polygon.
pub fn pentagram_trajectory(polygon: &[ProjectivePoint], steps: usize) -> Result<Vec<Vec<ProjectivePoint>>> {
    let mut out = vec![polygon.to_vec()];
    for s in 0..steps {
        let current = out.last().expect("nonempty");
        let via = pentagram_step_via_graph(current)?;
        let direct = pentagram_step(current)?;
        if via != direct {
            return Err(DynamicsError::Mismatch(format!("pentagram generation {}", s + 1)));
        }
        out.push(via);
    }
    Ok(out)
}

/// A random rational polygon `(x_i, y_i, 1)` in general position whose
/// pentagram image is again in general position.
pub fn random_polygon<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Polygon {
    loop {
        let poly: Vec<ProjectivePoint> = (0..n)
            .map(|_| {
                let x = q(rng.gen_range(-20..=20));
                let y = q(rng.gen_range(-20..=20));
                ProjectivePoint::affine(&[x, y])
            })
            .collect();
        if let Ok(next) = pentagram_step(&poly) {
            if check_polygon(&next).is_ok() && pentagram_run(&poly).is_ok() {
                return poly;
            }
        }
    }
}

/// A polygon as a list of points of the projective plane.
pub type Polygon = Vec<ProjectivePoint>;

// ---------------------------------------------------------------------------
// Laplace–Darboux dynamics
// ---------------------------------------------------------------------------

/// A square window `0 ≤ i, j < size` of points `P_{i,j}` (`i + j` even) in
/// projective 3-space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaplacePatch {
    /// Side length of the window.
    pub size: i64,
    /// Points keyed by `(i, j)`.
    pub points: BTreeMap<(i64, i64), ProjectivePoint>,
}

/// Cell `(i, j)` with `i + j` odd whose four neighbours lie in the window.
fn laplace_centre(size: i64, (i, j): (i64, i64)) -> bool {
    (i + j).rem_euclid(2) == 1 && (1..size - 1).contains(&i) && (1..size - 1).contains(&j)
}

fn laplace_neighbours((i, j): (i64, i64)) -> [(i64, i64); 4] {
    [(i, j - 1), (i - 1, j), (i + 1, j), (i, j + 1)]
}

impl LaplacePatch {
    fn get(&self, c: (i64, i64)) -> Result<&ProjectivePoint> {
        self.points.get(&c).ok_or_else(|| DynamicsError::Sequence(format!("missing point P_{{{},{}}}", c.0, c.1)))
    }

    /// Centres `(i, j)`, `i + j` odd, with all four neighbours in the window.
    pub fn centres(&self) -> Vec<(i64, i64)> {
        let s = self.size;
        (0..s).flat_map(|j| (0..s).map(move |i| (i, j))).filter(|&c| laplace_centre(s, c)).collect()
    }

    fn validate(&self) -> Result<()> {
        for j in 0..self.size {
            for i in 0..self.size {
                if (i + j) % 2 == 0 {
                    check_dim(&[self.get((i, j))?], 4)?;
                }
            }
        }
        for c in self.centres() {
            let pts: Vec<&ProjectivePoint> = laplace_neighbours(c).iter().map(|&n| self.get(n)).collect::<Result<_>>()?;
            if rank(&pts) > 3 {
                return Err(DynamicsError::CoplanarityViolated(format!("({}, {})", c.0, c.1)));
            }
            if !circuit(&pts) {
                return Err(DynamicsError::Degenerate(format!("neighbours of ({}, {}) are not in general position", c.0, c.1)));
            }
        }
        Ok(())
    }
}

/// A random window satisfying the coplanarity condition: rows are filled
/// upwards and `P_{i,j}` is a random combination of the other three
/// neighbours of the centre `(i, j − 1)` whenever that centre is in the
/// window.
pub fn random_laplace_patch<R: Rng + ?Sized>(rng: &mut R, size: i64) -> LaplacePatch {
    loop {
        let mut points = BTreeMap::new();
        for j in 0..size {
            for i in 0..size {
                if (i + j) % 2 != 0 {
                    continue;
                }
                let below = (i, j - 1);
                let p = if laplace_centre(size, below) {
                    let others: Vec<&ProjectivePoint> =
                        [(i, j - 2), (i - 1, j - 1), (i + 1, j - 1)].iter().map(|c| &points[c]).collect();
                    random_combination(rng, &others)
                } else {
                    Some(random_point(rng, 4))
                };
                if let Some(p) = p {
                    points.insert((i, j), p);
                }
            }
        }
        let patch = LaplacePatch { size, points };
        if patch.points.len() == ((size * size + 1) / 2) as usize
            && patch.validate().is_ok()
            && laplace_darboux_step(&patch).is_ok()
            && laplace_darboux_run(&patch).is_ok()
        {
            return patch;
        }
    }
}

/// Direct Laplace–Darboux step: `Q_{i,j} = ⟨P_{i,j−1}, P_{i+1,j}⟩ ∩ ⟨P_{i−1,j}, P_{i,j+1}⟩`
/// at every centre of the window.
pub fn laplace_darboux_step(patch: &LaplacePatch) -> Result<BTreeMap<(i64, i64), ProjectivePoint>> {
    patch.validate()?;
    let mut out = BTreeMap::new();
    for (i, j) in patch.centres() {
        let qp = meet(
            patch.get((i, j - 1))?,
            patch.get((i + 1, j))?,
            patch.get((i - 1, j))?,
            patch.get((i, j + 1))?,
            &format!("Q_{{{i},{j}}}"),
        )?;
        out.insert((i, j), qp);
    }
    Ok(out)
}

/// Grid point of a Laplace window.
pub type GridPoint = (i64, i64);

/// Edge ids of a Laplace window keyed by (centre, point).
pub type GridEdges = BTreeMap<(GridPoint, GridPoint), EdgeId>;

/// The window as a configuration on the square grid: whites `P{i},{j}` at
/// every point of the window, blacks `b{i},{j}` at the centres.
pub fn laplace_configuration(patch: &LaplacePatch) -> Result<(Configuration, GridEdges)> {
    patch.validate()?;
    let mut b = PlanarBuilder::new();
    let mut ids = BTreeMap::new();
    let mut vectors = Vec::new();
    for j in 0..patch.size {
        for i in 0..patch.size {
            if (i + j) % 2 == 0 {
                ids.insert((i, j), b.vertex(&format!("P{i},{j}"), Color::White, i, j));
                vectors.push(Some(patch.get((i, j))?.coords().clone()));
            } else if laplace_centre(patch.size, (i, j)) {
                ids.insert((i, j), b.vertex(&format!("b{i},{j}"), Color::Black, i, j));
                vectors.push(None);
            }
        }
    }
    let mut edges = BTreeMap::new();
    for c in patch.centres() {
        for n in laplace_neighbours(c) {
            edges.insert((c, n), b.edge(ids[&c], ids[&n]));
        }
    }
    let g = b.build()?;
    Ok((configuration_from_points(&g, 4, vectors)?, edges))
}

/// Laplace–Darboux step by moves: urban renewal at every unit square whose
/// upper-left corner is black (and whose black corners are centres), then
/// removal of the old vertices left with degree two. Returns the points at
/// the vertices replacing the centres both of whose renewed squares lie in
/// the window, and the tracker.
pub fn laplace_darboux_run(patch: &LaplacePatch) -> Result<(BTreeMap<GridPoint, ProjectivePoint>, MoveTracker)> {
    let (config, edges) = laplace_configuration(patch)?;
    let size = patch.size;
    let renewable = |(a, b): (i64, i64)| {
        (a + b) % 2 == 0 && a + 1 < size && b + 1 < size && laplace_centre(size, (a + 1, b)) && laplace_centre(size, (a, b + 1))
    };
    let mut t = MoveTracker::new(config)?;
    for b in 0..size {
        for a in 0..size {
            if !renewable((a, b)) {
                continue;
            }
            let e = edges[&((a + 1, b), (a, b))];
            let f = t.config().graph().face_of_dart(Dart { edge: e, from_black: true });
            t.renew(f)?;
        }
    }
    let outputs: Vec<(i64, i64)> =
        patch.centres().into_iter().filter(|&(i, j)| renewable((i, j - 1)) && renewable((i - 1, j))).collect();
    let mut slots = BTreeMap::new();
    for &(i, j) in &outputs {
        slots.insert((i, j), t.neighbour_labels(&format!("b{i},{j}"))?);
    }
    let old: Vec<String> = (0..size)
        .flat_map(|j| (0..size).map(move |i| (i, j)))
        .filter_map(|(i, j)| {
            if (i + j) % 2 == 0 {
                Some(format!("P{i},{j}"))
            } else if laplace_centre(size, (i, j)) {
                Some(format!("b{i},{j}"))
            } else {
                None
            }
        })
        .collect();
    for label in old {
        let Some(v) = t.config().graph().find_label(&label) else { continue };
        if t.config().graph().degree(v) == 2 {
            t.remove(&label)?;
        }
    }
    let mut out = BTreeMap::new();
    for (c, labels) in slots {
        let label = labels
            .iter()
            .find(|l| t.config().graph().find_label(l).is_some())
            .ok_or_else(|| DynamicsError::Sequence(format!("no vertex replaces b{},{}", c.0, c.1)))?;
        out.insert(c, t.point(label)?);
    }
    Ok((out, t))
}

/// Laplace–Darboux step computed by moves.
pub fn laplace_darboux_step_via_graph(patch: &LaplacePatch) -> Result<BTreeMap<(i64, i64), ProjectivePoint>> {
    laplace_darboux_run(patch).map(|(p, _)| p)
}

// ---------------------------------------------------------------------------
// Lozenge patches
// ---------------------------------------------------------------------------

/// Coordinate axes of the cubic lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// First axis.
    X,
    /// Second axis.
    Y,
    /// Third axis.
    Z,
}

impl Axis {
    /// The three axes in order.
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// Index 0, 1 or 2.
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// Cyclic successor `x → y → z → x`.
    pub fn next(self) -> Axis {
        Axis::ALL[(self.index() + 1) % 3]
    }

    /// Lower-case name.
    pub fn name(self) -> char {
        ['x', 'y', 'z'][self.index()]
    }
}

/// A point of the cubic lattice.
pub type Site = [i64; 3];

/// `s + d·e_a`.
pub fn shift(s: Site, a: Axis, d: i64) -> Site {
    let mut t = s;
    t[a.index()] += d;
    t
}

fn site_label(s: Site) -> String {
    format!("{},{},{}", s[0], s[1], s[2])
}

/// An elementary square of the cubic lattice at `base`, spanned by `first`
/// and `first.next()` (so one of the `xy`, `yz`, `zx` squares).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Lozenge {
    /// Lowest corner.
    pub base: Site,
    /// First spanning axis.
    pub first: Axis,
}

impl Lozenge {
    /// The `p` axis (`first`).
    pub fn p(&self) -> Axis {
        self.first
    }

    /// The `q` axis (`first.next()`).
    pub fn q(&self) -> Axis {
        self.first.next()
    }

    /// Corners `base, base + e_p, base + e_q, base + e_p + e_q`.
    pub fn corners(&self) -> [Site; 4] {
        let (p, q) = (self.p(), self.q());
        [self.base, shift(self.base, p, 1), shift(self.base, q, 1), shift(shift(self.base, p, 1), q, 1)]
    }

    /// Edges as `(site, axis)`: `p` at base, `q` at base, `p` at `base + e_q`,
    /// `q` at `base + e_p`.
    pub fn edges(&self) -> [EdgeSite; 4] {
        let (p, q) = (self.p(), self.q());
        [(self.base, p), (self.base, q), (shift(self.base, q, 1), p), (shift(self.base, p, 1), q)]
    }

    fn name(&self) -> String {
        format!("{}{}{}", self.p().name(), self.q().name(), site_label(self.base))
    }
}

/// A lattice edge: the edge leaving `site` in direction `axis`.
pub type EdgeSite = (Site, Axis);

/// The three squares at a lattice point.
pub fn lozenges_at(base: Site) -> Vec<Lozenge> {
    Axis::ALL.iter().map(|&first| Lozenge { base, first }).collect()
}

/// Planar projection of the cubic lattice used to draw lozenge tilings, with
/// the axes 120° apart.
fn project(s: Site) -> (i64, i64) {
    (16 * s[0] - 8 * s[1] - 8 * s[2], 16 * s[1] - 16 * s[2])
}

fn add(a: (i64, i64), b: (i64, i64)) -> (i64, i64) {
    (a.0 + b.0, a.1 + b.1)
}

fn axis_vec(a: Axis, num: i64, den: i64) -> (i64, i64) {
    let (x, y) = project(shift([0, 0, 0], a, 1));
    (x * num / den, y * num / den)
}

// ---------------------------------------------------------------------------
// Q-nets
// ---------------------------------------------------------------------------

/// Label of the white vertex carrying `Q_s`.
pub fn qnet_label(s: Site) -> String {
    format!("Q{}", site_label(s))
}

/// The bipartite graph of a lozenge patch: a white vertex `Q{site}` at every
/// corner and a black vertex at every lozenge joined to its four corners.
pub fn qnet_graph(lozenges: &[Lozenge]) -> Result<SurfaceGraph> {
    let mut b = PlanarBuilder::new();
    let mut whites: BTreeMap<Site, VertexId> = BTreeMap::new();
    for l in lozenges {
        for c in l.corners() {
            whites.entry(c).or_insert_with(|| {
                let (x, y) = project(c);
                b.vertex(&qnet_label(c), Color::White, x, y)
            });
        }
    }
    for l in lozenges {
        let (x, y) = add(project(l.base), add(axis_vec(l.p(), 1, 2), axis_vec(l.q(), 1, 2)));
        let bl = b.vertex(&l.name(), Color::Black, x, y);
        for c in l.corners() {
            b.edge(bl, whites[&c]);
        }
    }
    Ok(b.build()?)
}

/// Points of one elementary cube of a Q-net: `Q_s` for the seven sites
/// `s ∈ {0,1}³ ∖ {(1,1,1)}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QNetCube {
    /// Points keyed by site.
    pub points: BTreeMap<Site, ProjectivePoint>,
}

const ORIGIN: Site = [0, 0, 0];

impl QNetCube {
    fn get(&self, s: Site) -> Result<&ProjectivePoint> {
        self.points.get(&s).ok_or_else(|| DynamicsError::Sequence(format!("missing Q_{}", site_label(s))))
    }

    fn validate(&self) -> Result<()> {
        for l in lozenges_at(ORIGIN) {
            let pts: Vec<&ProjectivePoint> = l.corners().iter().map(|&c| self.get(c)).collect::<Result<_>>()?;
            check_dim(&pts, 4)?;
            if rank(&pts) > 3 {
                return Err(DynamicsError::CoplanarityViolated(l.name()));
            }
            if !circuit(&pts) {
                return Err(DynamicsError::Degenerate(format!("corners of {} are not in general position", l.name())));
            }
        }
        Ok(())
    }
}

/// A random cube: `Q_000, Q_100, Q_010, Q_001` random and each of
/// `Q_011, Q_101, Q_110` a random point of the plane of its square.
pub fn random_qnet_cube<R: Rng + ?Sized>(rng: &mut R) -> QNetCube {
    loop {
        let mut points = BTreeMap::new();
        for s in [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]] {
            points.insert(s, random_point(rng, 4));
        }
        let mut ok = true;
        for (s, a, b) in [([0, 1, 1], [0, 1, 0], [0, 0, 1]), ([1, 0, 1], [1, 0, 0], [0, 0, 1]), ([1, 1, 0], [1, 0, 0], [0, 1, 0])] {
            match random_combination(rng, &[&points[&ORIGIN], &points[&a], &points[&b]]) {
                Some(p) => {
                    points.insert(s, p);
                }
                None => ok = false,
            }
        }
        let cube = QNetCube { points };
        if ok && qnet_gentrify(&cube).is_ok() && qnet_run(&cube).is_ok() {
            return cube;
        }
    }
}

/// Direct construction of `Q_111` as the intersection of the planes
/// `⟨Q_100, Q_101, Q_110⟩`, `⟨Q_010, Q_011, Q_110⟩` and `⟨Q_001, Q_011, Q_101⟩`.
pub fn qnet_gentrify(cube: &QNetCube) -> Result<ProjectivePoint> {
    cube.validate()?;
    let plane = |a: Site, b: Site, c: Site| -> Result<Subspace> {
        let s = join(&[cube.get(a)?, cube.get(b)?, cube.get(c)?]);
        if s.dim() != 3 {
            return Err(DynamicsError::PlanesNotGeneral);
        }
        Ok(s)
    };
    let p1 = plane([1, 0, 0], [1, 0, 1], [1, 1, 0])?;
    let p2 = plane([0, 1, 0], [0, 1, 1], [1, 1, 0])?;
    let p3 = plane([0, 0, 1], [0, 1, 1], [1, 0, 1])?;
    meet_point(&p1.intersect(&p2), &p3).map_err(|_| DynamicsError::PlanesNotGeneral)
}

/// The configuration of a cube on the three squares at the origin.
pub fn qnet_configuration(cube: &QNetCube) -> Result<Configuration> {
    cube.validate()?;
    let g = qnet_graph(&lozenges_at(ORIGIN))?;
    let mut vectors = vec![None; g.n_vertices()];
    for (s, p) in &cube.points {
        if let Some(v) = g.find_label(&qnet_label(*s)) {
            vectors[v] = Some(p.coords().clone());
        }
    }
    configuration_from_points(&g, 4, vectors)
}

/// Gentrification by four square moves on the three-square patch. With
/// `D = Q_000`, `A, B, C = Q_100, Q_010, Q_001` and `A′, B′, C′ = Q_011,
/// Q_101, Q_110`, the moves create `G = A′B ∩ CD`, `H = AB′ ∩ CD`,
/// `F = C′D′ ∩ BA′`, `E = C′D′ ∩ AB′` and finally `D′ = Q_111`.
pub fn qnet_run(cube: &QNetCube) -> Result<(ProjectivePoint, MoveTracker)> {
    let mut t = MoveTracker::new(qnet_configuration(cube)?)?;
    let d = qnet_label([0, 0, 0]);
    let (a, b, c) = (qnet_label([1, 0, 0]), qnet_label([0, 1, 0]), qnet_label([0, 0, 1]));
    let protected: BTreeSet<String> =
        [[1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 1, 1], [1, 0, 1], [1, 1, 0], [1, 1, 1]].iter().map(|&s| qnet_label(s)).collect();
    let yz = Lozenge { base: ORIGIN, first: Axis::Y }.name();
    let zx = Lozenge { base: ORIGIN, first: Axis::Z }.name();
    t.expect_survivors(&d, &c, &protected, &[(yz.as_str(), "G"), (zx.as_str(), "H")])?;
    t.expect_survivors("G", &b, &protected, &[("", "F")])?;
    t.expect_survivors(&a, "H", &protected, &[("", "E")])?;
    let top = qnet_label([1, 1, 1]);
    t.expect_survivors("F", "E", &protected, &[("", top.as_str())])?;
    Ok((t.point(&top)?, t))
}

/// `Q_111` computed by gentrification moves.
pub fn qnet_gentrify_via_graph(cube: &QNetCube) -> Result<ProjectivePoint> {
    qnet_run(cube).map(|(p, _)| p)
}

fn qnet_line_meet(points: &BTreeMap<Site, ProjectivePoint>, s: Site, a: Axis, t: Site) -> Result<ProjectivePoint> {
    let get = |x: Site| points.get(&x).ok_or_else(|| DynamicsError::Sequence(format!("missing Q_{}", site_label(x))));
    meet(get(s)?, get(shift(s, a, 1))?, get(t)?, get(shift(t, a, 1))?, "edge line intersection")
}

/// `Y^a_s = −[Q_s, Q^a_s ∩ Q^a_{s+e_b}, Q_{s+e_a}, Q^a_s ∩ Q^a_{s+e_c}]⁻¹`
/// with `(a, b, c)` a cyclic order of the axes and `Q^a_s` the line through
/// `Q_s, Q_{s+e_a}`.
pub fn qnet_y(points: &BTreeMap<Site, ProjectivePoint>, s: Site, a: Axis) -> Result<Scalar> {
    let (b, c) = (a.next(), a.next().next());
    let m1 = qnet_line_meet(points, s, a, shift(s, b, 1))?;
    let m2 = qnet_line_meet(points, s, a, shift(s, c, 1))?;
    neg_inverse_ratio(&[points[&s].clone(), m1, points[&shift(s, a, 1)].clone(), m2])
}

/// `Ỹ^a_s = −[Q_s, Q^a_s ∩ Q^a_{s−e_c}, Q_{s+e_a}, Q^a_s ∩ Q^a_{s−e_b}]⁻¹`.
pub fn qnet_y_tilde(points: &BTreeMap<Site, ProjectivePoint>, s: Site, a: Axis) -> Result<Scalar> {
    let (b, c) = (a.next(), a.next().next());
    let m1 = qnet_line_meet(points, s, a, shift(s, c, -1))?;
    let m2 = qnet_line_meet(points, s, a, shift(s, b, -1))?;
    neg_inverse_ratio(&[points[&s].clone(), m1, points[&shift(s, a, 1)].clone(), m2])
}

fn neg_inverse_ratio(points: &[ProjectivePoint]) -> Result<Scalar> {
    let r = multi_ratio(points)?;
    if r.is_zero() {
        return Err(DynamicsError::Degenerate("vanishing multi-ratio".into()));
    }
    Ok(-r.recip())
}

/// Reverses a cyclic point list while keeping its first point, turning a
/// counterclockwise listing around a face into the clockwise one.
fn clockwise(mut points: Vec<ProjectivePoint>) -> Vec<ProjectivePoint> {
    points[1..].reverse();
    points
}

fn inverse_ratio(points: &[ProjectivePoint]) -> Result<Scalar> {
    neg_inverse_ratio(points).map(|x| -x)
}

/// The evolution `Ỹ^x_{i,j+1,k+1} = (Y^y)⁻¹ (1 + Y^x + Y^y Y^x) / (1 + Y^z + Y^z Y^x)`
/// and its cyclic shifts, from `[Y^x, Y^y, Y^z]` at `s` to
/// `[Ỹ^x_{s+e_y+e_z}, Ỹ^y_{s+e_z+e_x}, Ỹ^z_{s+e_x+e_y}]`.
pub fn qnet_y_evolution(y: &[Scalar; 3]) -> Result<[Scalar; 3]> {
    let one = Scalar::one();
    let mut out: [Scalar; 3] = [Scalar::zero(), Scalar::zero(), Scalar::zero()];
    for a in 0..3 {
        let (ya, yb, yc) = (&y[a], &y[(a + 1) % 3], &y[(a + 2) % 3]);
        let num = &one + ya + yb * ya;
        let den = &one + yc + yc * ya;
        if den.is_zero() || yb.is_zero() {
            return Err(DynamicsError::Degenerate("vanishing denominator in Y evolution".into()));
        }
        out[a] = num / (den * yb);
    }
    Ok(out)
}

/// Face weights of a gentrification run: the initial `[Y^x, Y^y, Y^z]` at the
/// origin (faces of the edges `Q_000 Q_{e_a}`) and the final
/// `[Ỹ^x_011, Ỹ^y_101, Ỹ^z_110]` (faces of the edges into `Q_111`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QNetFaceWeights {
    /// Initial weights from the graph.
    pub initial: [Scalar; 3],
    /// Final weights from the graph.
    pub final_: [Scalar; 3],
    /// Final weights carried along by mutation.
    pub tracked: [Scalar; 3],
}

/// Reads the face weights before and after gentrification off the graph.
pub fn qnet_face_weights(cube: &QNetCube) -> Result<QNetFaceWeights> {
    let t0 = MoveTracker::new(qnet_configuration(cube)?)?;
    let (_, t1) = qnet_run(cube)?;
    let origin = qnet_label(ORIGIN);
    let top = qnet_label([1, 1, 1]);
    let mut initial: [Scalar; 3] = Default::default();
    let mut final_: [Scalar; 3] = Default::default();
    let mut tracked: [Scalar; 3] = Default::default();
    for a in Axis::ALL {
        let f0 = t0.face_with_whites(&[&origin, &qnet_label(shift(ORIGIN, a, 1))])?;
        initial[a.index()] = t0.config().face_weight(f0)?;
        let from = shift([1, 1, 1], a, -1);
        let f1 = t1.face_with_whites(&[&qnet_label(from), &top])?;
        final_[a.index()] = t1.config().face_weight(f1)?;
        tracked[a.index()] = t1.tracked_weights()[&f1].clone();
    }
    Ok(QNetFaceWeights { initial, final_, tracked })
}

// ---------------------------------------------------------------------------
// Discrete Darboux maps
// ---------------------------------------------------------------------------

/// Label of the white vertex carrying `f^a_s`.
pub fn darboux_label((s, a): EdgeSite) -> String {
    format!("f{}{}", a.name(), site_label(s))
}

/// The bipartite graph of a discrete Darboux map on a lozenge patch: a
/// white vertex on every lattice edge and two black vertices in each
/// lozenge, one joined to `q` at the base, `q` at `base + e_p` and `p` at
/// the base (suffix `a`), the other to the same two `q` edges and `p` at
/// `base + e_q` (suffix `b`).
pub fn darboux_graph(lozenges: &[Lozenge]) -> Result<SurfaceGraph> {
    let mut b = PlanarBuilder::new();
    let mut whites: BTreeMap<EdgeSite, VertexId> = BTreeMap::new();
    for l in lozenges {
        for e in l.edges() {
            whites.entry(e).or_insert_with(|| {
                let (x, y) = add(project(e.0), axis_vec(e.1, 1, 2));
                b.vertex(&darboux_label(e), Color::White, x, y)
            });
        }
    }
    for l in lozenges {
        let [p0, q0, p1, q1] = l.edges();
        let mid_p0 = add(project(p0.0), axis_vec(p0.1, 1, 2));
        let mid_p1 = add(project(p1.0), axis_vec(p1.1, 1, 2));
        let (qx, qy) = axis_vec(l.q(), 1, 4);
        let ba = b.vertex(&format!("{}a", l.name()), Color::Black, mid_p0.0 + qx, mid_p0.1 + qy);
        let bb = b.vertex(&format!("{}b", l.name()), Color::Black, mid_p1.0 - qx, mid_p1.1 - qy);
        for e in [q0, q1, p0] {
            b.edge(ba, whites[&e]);
        }
        for e in [q0, q1, p1] {
            b.edge(bb, whites[&e]);
        }
    }
    Ok(b.build()?)
}

/// Edge points of a discrete Darboux map on a set of lozenges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DarbouxPatch {
    /// Lozenges of the patch, all with bases in one generation.
    pub lozenges: Vec<Lozenge>,
    /// Points keyed by lattice edge.
    pub points: BTreeMap<EdgeSite, ProjectivePoint>,
}

impl DarbouxPatch {
    fn get(&self, e: EdgeSite) -> Result<&ProjectivePoint> {
        self.points.get(&e).ok_or_else(|| DynamicsError::Sequence(format!("missing {}", darboux_label(e))))
    }

    fn validate(&self) -> Result<()> {
        for l in &self.lozenges {
            let pts: Vec<&ProjectivePoint> = l.edges().iter().map(|&e| self.get(e)).collect::<Result<_>>()?;
            check_dim(&pts, 4)?;
            if rank(&pts) > 2 {
                return Err(DynamicsError::CollinearityViolated(l.name()));
            }
            let distinct: BTreeSet<Vector> = pts.iter().map(|p| p.normalized()).collect();
            if distinct.len() != 4 {
                return Err(DynamicsError::Degenerate(format!("edge points of {} coincide", l.name())));
            }
        }
        Ok(())
    }

    /// The configuration on [`darboux_graph`].
    pub fn configuration(&self) -> Result<Configuration> {
        self.validate()?;
        let g = darboux_graph(&self.lozenges)?;
        let mut vectors = vec![None; g.n_vertices()];
        for (e, p) in &self.points {
            if let Some(v) = g.find_label(&darboux_label(*e)) {
                vectors[v] = Some(p.coords().clone());
            }
        }
        configuration_from_points(&g, 4, vectors)
    }
}

/// Random Darboux data on lozenges whose bases share one generation. The
/// points lie in a random plane of projective 3-space: edges at the bases
/// are random, and every other edge is the intersection of the lines of its
/// two lozenges, or a random point on the line of its only lozenge.
pub fn random_darboux_patch<R: Rng + ?Sized>(rng: &mut R, lozenges: &[Lozenge]) -> DarbouxPatch {
    let base_edges: BTreeSet<EdgeSite> = lozenges.iter().flat_map(|l| [l.edges()[0], l.edges()[1]]).collect();
    let mut far: BTreeMap<EdgeSite, Vec<Lozenge>> = BTreeMap::new();
    for l in lozenges {
        for e in [l.edges()[2], l.edges()[3]] {
            far.entry(e).or_default().push(*l);
        }
    }
    loop {
        let frame = Matrix::from_columns(4, &[random_nonzero_vector(rng, 4), random_nonzero_vector(rng, 4), random_nonzero_vector(rng, 4)]);
        let Ok(frame) = frame else { continue };
        if frame.rank() != 3 {
            continue;
        }
        let mut points = BTreeMap::new();
        for &e in &base_edges {
            let v = frame.mul_vec(&random_nonzero_vector(rng, 3)).expect("shape");
            if let Ok(p) = ProjectivePoint::new(v) {
                points.insert(e, p);
            }
        }
        if points.len() != base_edges.len() {
            continue;
        }
        let mut ok = true;
        for (e, ls) in &far {
            let line = |l: &Lozenge| (points[&l.edges()[0]].clone(), points[&l.edges()[1]].clone());
            let p = match ls.as_slice() {
                [l] => {
                    let (a, b) = line(l);
                    random_combination(rng, &[&a, &b])
                }
                [l1, l2] => {
                    let (a, b) = line(l1);
                    let (c, d) = line(l2);
                    line_meet(&a, &b, &c, &d).ok()
                }
                _ => None,
            };
            match p {
                Some(p) => {
                    points.insert(*e, p);
                }
                None => ok = false,
            }
        }
        let patch = DarbouxPatch { lozenges: lozenges.to_vec(), points };
        if ok && patch.configuration().is_ok() {
            return patch;
        }
    }
}

/// Random data on the hexahedron: the three squares at the origin.
pub fn random_darboux_hexahedron<R: Rng + ?Sized>(rng: &mut R) -> DarbouxPatch {
    loop {
        let patch = random_darboux_patch(rng, &lozenges_at(ORIGIN));
        if darboux_superurban(&patch).is_ok() && darboux_run(&patch).is_ok() {
            return patch;
        }
    }
}

/// The three new edge points `f^c_{e_a+e_b}` for `(a, b, c)` cyclic,
/// `f^c_{e_a+e_b} = ⟨f^b_{e_a}, f^c_{e_a}⟩ ∩ ⟨f^a_{e_b}, f^c_{e_b}⟩`, keyed by
/// lattice edge. The hexahedron is the one over the three squares at the
/// origin.
pub fn darboux_superurban(patch: &DarbouxPatch) -> Result<BTreeMap<EdgeSite, ProjectivePoint>> {
    patch.validate()?;
    for l in lozenges_at(ORIGIN) {
        if !patch.lozenges.contains(&l) {
            return Err(DynamicsError::Sequence(format!("patch lacks {}", l.name())));
        }
    }
    let mut out = BTreeMap::new();
    for c in Axis::ALL {
        let a = c.next();
        let b = a.next();
        let ea = shift(ORIGIN, a, 1);
        let eb = shift(ORIGIN, b, 1);
        let p = meet(
            patch.get((ea, b))?,
            patch.get((ea, c))?,
            patch.get((eb, a))?,
            patch.get((eb, c))?,
            &darboux_label((shift(ea, b, 1), c)),
        )?;
        out.insert((shift(ea, b, 1), c), p);
    }
    Ok(out)
}

/// Superurban renewal by seven square moves on the hexahedron graph. Writing
/// `ℓ_xy, ℓ_yz, ℓ_zx` for the lines of the three squares at the origin and
/// `m_xy, m_yz, m_zx` for the lines of the new squares, the moves create in
/// turn `r = ℓ_zx ∩ m_zx`, `f^x_011 = m_zx ∩ m_xy`, `t = ℓ_xy ∩ m_xy`,
/// `f^y_101 = m_xy ∩ m_yz` and `f^z_110 = m_yz ∩ m_zx`, the remaining moves
/// only exchanging which pair of each square's edges the black vertices
/// share.
pub fn darboux_run(patch: &DarbouxPatch) -> Result<(BTreeMap<EdgeSite, ProjectivePoint>, MoveTracker)> {
    let mut t = MoveTracker::new(patch.configuration()?)?;
    let l = |s: Site, a: Axis| darboux_label((s, a));
    let (x, y, z) = (Axis::X, Axis::Y, Axis::Z);
    let fx = l(ORIGIN, x);
    let fy = l(ORIGIN, y);
    let fz = l(ORIGIN, z);
    let p1 = l([1, 0, 0], y);
    let p2 = l([0, 1, 0], x);
    let p3 = l([0, 1, 0], z);
    let p5 = l([0, 0, 1], x);
    let new_x = l([0, 1, 1], x);
    let new_y = l([1, 0, 1], y);
    let new_z = l([1, 1, 0], z);
    let protected: BTreeSet<String> = [
        p1.clone(),
        p2.clone(),
        p3.clone(),
        l([0, 0, 1], y),
        p5.clone(),
        l([1, 0, 0], z),
        new_x.clone(),
        new_y.clone(),
        new_z.clone(),
    ]
    .into_iter()
    .collect();
    t.expect_survivors(&fy, &p1, &protected, &[])?;
    t.expect_survivors(&fx, &fz, &protected, &[("", "r")])?;
    t.expect_survivors("r", &p3, &protected, &[("", new_x.as_str())])?;
    t.expect_survivors(&fx, &p2, &protected, &[("", "t")])?;
    t.expect_survivors("t", &p5, &protected, &[("", new_y.as_str())])?;
    t.expect_survivors(&p5, &new_x, &protected, &[])?;
    t.expect_survivors(&new_y, &p1, &protected, &[("", new_z.as_str())])?;
    let mut out = BTreeMap::new();
    for (e, label) in [(([0, 1, 1], x), new_x), (([1, 0, 1], y), new_y), (([1, 1, 0], z), new_z)] {
        out.insert(e, t.point(&label)?);
    }
    Ok((out, t))
}

/// Superurban renewal computed by moves.
pub fn darboux_superurban_via_graph(patch: &DarbouxPatch) -> Result<BTreeMap<EdgeSite, ProjectivePoint>> {
    darboux_run(patch).map(|(p, _)| p)
}

fn edge_points(points: &BTreeMap<EdgeSite, ProjectivePoint>, edges: &[EdgeSite]) -> Result<Vec<ProjectivePoint>> {
    edges
        .iter()
        .map(|e| points.get(e).cloned().ok_or_else(|| DynamicsError::Sequence(format!("missing {}", darboux_label(*e)))))
        .collect()
}

/// Lozenge variable `Y^{pq}_s = −[f^p_s, f^q_{s+e_p}, f^p_{s+e_q}, f^q_s]⁻¹`
/// for the square of `l`.
pub fn darboux_y_lozenge(points: &BTreeMap<EdgeSite, ProjectivePoint>, l: &Lozenge) -> Result<Scalar> {
    let (p, q, s) = (l.p(), l.q(), l.base);
    neg_inverse_ratio(&edge_points(points, &[(s, p), (shift(s, p, 1), q), (shift(s, q, 1), p), (s, q)])?)
}

/// Vertex variable of the first generation,
/// `Y^in_s = [f^x_s, f^x_{s+e_z}, f^z_s, f^z_{s+e_y}, f^y_s, f^y_{s+e_x}]⁻¹`.
pub fn darboux_y_in(points: &BTreeMap<EdgeSite, ProjectivePoint>, s: Site) -> Result<Scalar> {
    let (x, y, z) = (Axis::X, Axis::Y, Axis::Z);
    let e = [(s, x), (shift(s, x, 1), y), (s, y), (shift(s, y, 1), z), (s, z), (shift(s, z, 1), x)];
    inverse_ratio(&clockwise(edge_points(points, &e)?))
}

/// Vertex variable of the middle generation: the negated inverse
/// twelve-point multi-ratio of `f^x_s, f^y_{s+e_x−e_y}, f^y_{s−e_y}, f^z_{s−e_y}, f^z_s, f^x_{s−e_x+e_z},
/// f^x_{s−e_x}, f^y_{s−e_x}, f^y_s, f^z_{s+e_y−e_z}, f^z_{s−e_z}, f^x_{s−e_z}`.
pub fn darboux_y_mid(points: &BTreeMap<EdgeSite, ProjectivePoint>, s: Site) -> Result<Scalar> {
    let (x, y, z) = (Axis::X, Axis::Y, Axis::Z);
    let sh = |v: Site, a: Axis, d: i64| shift(v, a, d);
    let e = [
        (s, x),
        (sh(s, z, -1), x),
        (sh(s, z, -1), z),
        (sh(sh(s, y, 1), z, -1), z),
        (s, y),
        (sh(s, x, -1), y),
        (sh(s, x, -1), x),
        (sh(sh(s, x, -1), z, 1), x),
        (s, z),
        (sh(s, y, -1), z),
        (sh(s, y, -1), y),
        (sh(sh(s, x, 1), y, -1), y),
    ];
    neg_inverse_ratio(&clockwise(edge_points(points, &e)?))
}

/// Vertex variable of the last generation,
/// `Y^out_s = [f^x_{s−e_x}, f^x_{s−e_x−e_z}, f^z_{s−e_z}, f^z_{s−e_y−e_z}, f^y_{s−e_y}, f^y_{s−e_x−e_y}]⁻¹`.
pub fn darboux_y_out(points: &BTreeMap<EdgeSite, ProjectivePoint>, s: Site) -> Result<Scalar> {
    let (x, y, z) = (Axis::X, Axis::Y, Axis::Z);
    let sh = |v: Site, a: Axis, d: i64| shift(v, a, d);
    let e = [
        (sh(s, x, -1), x),
        (sh(sh(s, x, -1), y, -1), y),
        (sh(s, y, -1), y),
        (sh(sh(s, y, -1), z, -1), z),
        (sh(s, z, -1), z),
        (sh(sh(s, x, -1), z, -1), x),
    ];
    inverse_ratio(&clockwise(edge_points(points, &e)?))
}

/// Labels of the white vertices of the face for each variable.
pub fn darboux_face_whites_lozenge(l: &Lozenge) -> Vec<String> {
    vec![darboux_label((l.base, l.q())), darboux_label((shift(l.base, l.p(), 1), l.q()))]
}

/// White vertices around a first-generation vertex `s`.
pub fn darboux_face_whites_in(s: Site) -> Vec<String> {
    Axis::ALL.iter().map(|&a| darboux_label((s, a))).collect()
}

/// White vertices around a middle-generation vertex `s`.
pub fn darboux_face_whites_mid(s: Site) -> Vec<String> {
    Axis::ALL.iter().flat_map(|&a| [darboux_label((s, a)), darboux_label((shift(s, a, -1), a))]).collect()
}

/// White vertices around a last-generation vertex `s`.
pub fn darboux_face_whites_out(s: Site) -> Vec<String> {
    Axis::ALL.iter().map(|&a| darboux_label((shift(s, a, -1), a))).collect()
}

// ---------------------------------------------------------------------------
// Resistor networks
// ---------------------------------------------------------------------------

/// A vertex of the triangular grid `{(a, b)}` with triangles
/// `(a,b), (a+1,b), (a,b+1)` (up) and `(a+1,b), (a+1,b+1), (a,b+1)` (down).
pub type Node = (i64, i64);

/// A resistor network on part of the triangular grid: a set of grid edges,
/// each with a conductance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResistorPatch {
    /// Conductance of each edge, keyed by its endpoints in increasing order.
    pub conductances: BTreeMap<(Node, Node), Scalar>,
}

/// A triangle of the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Triangle {
    /// Up triangle at `(a, b)`.
    Up(i64, i64),
    /// Down triangle at `(a, b)`.
    Down(i64, i64),
}

impl Triangle {
    fn label(&self) -> String {
        match self {
            Triangle::Up(a, b) => format!("U{a},{b}"),
            Triangle::Down(a, b) => format!("D{a},{b}"),
        }
    }

    /// Position of the centroid (times 6, in the drawing coordinates).
    fn position(&self) -> (i64, i64) {
        match *self {
            Triangle::Up(a, b) => (12 * a + 6 * b + 6, 12 * b + 4),
            Triangle::Down(a, b) => (12 * a + 6 * b + 12, 12 * b + 8),
        }
    }

    /// Corners in counterclockwise order.
    pub fn corners(&self) -> [Node; 3] {
        match *self {
            Triangle::Up(a, b) => [(a, b), (a + 1, b), (a, b + 1)],
            Triangle::Down(a, b) => [(a + 1, b), (a + 1, b + 1), (a, b + 1)],
        }
    }
}

fn node_position((a, b): Node) -> (i64, i64) {
    (12 * a + 6 * b, 12 * b)
}

/// For a grid edge: its up triangle, its down triangle, and its endpoints
/// ordered counterclockwise around the up triangle.
fn edge_triangles(u: Node, v: Node) -> Option<(Triangle, Triangle, Node, Node)> {
    let (lo, hi) = if u < v { (u, v) } else { (v, u) };
    let (d0, d1) = (hi.0 - lo.0, hi.1 - lo.1);
    match (d0, d1) {
        (1, 0) => Some((Triangle::Up(lo.0, lo.1), Triangle::Down(lo.0, lo.1 - 1), lo, hi)),
        (0, 1) => Some((Triangle::Up(lo.0, lo.1), Triangle::Down(lo.0 - 1, lo.1), hi, lo)),
        (-1, 1) | (1, -1) => {
            let (right, top) = if lo.0 > hi.0 { (lo, hi) } else { (hi, lo) };
            let (a, b) = (top.0, right.1);
            Some((Triangle::Up(a, b), Triangle::Down(a, b), right, top))
        }
        _ => None,
    }
}

impl ResistorPatch {
    /// The three edges of the up triangle at the origin with conductances
    /// `c_1, c_2, c_3` on `(0,0)(1,0)`, `(1,0)(0,1)` and `(0,1)(0,0)`.
    pub fn star(c: &[Scalar; 3]) -> Self {
        let t = Triangle::Up(0, 0).corners();
        let mut conductances = BTreeMap::new();
        for i in 0..3 {
            let (u, v) = (t[i], t[(i + 1) % 3]);
            conductances.insert((u.min(v), u.max(v)), c[i].clone());
        }
        ResistorPatch { conductances }
    }

    fn validate(&self) -> Result<()> {
        for ((u, v), c) in &self.conductances {
            if edge_triangles(*u, *v).is_none() {
                return Err(DynamicsError::Sequence(format!("{u:?}{v:?} is not a grid edge")));
            }
            if !c.is_positive() {
                return Err(DynamicsError::NonpositiveConductance(format!("{u:?}{v:?}")));
            }
        }
        Ok(())
    }
}

/// Label of the black vertex at the crossing of a grid edge and its dual.
fn crossing_label(u: Node, v: Node) -> String {
    let (lo, hi) = (u.min(v), u.max(v));
    format!("e{},{}-{},{}", lo.0, lo.1, hi.0, hi.1)
}

/// Label of the white vertex at a grid vertex.
pub fn node_label((a, b): Node) -> String {
    format!("w{a},{b}")
}

/// Signed edge weights of the resistor graph: at the crossing of grid edge
/// `w → w′` (counterclockwise around its up triangle `u`, with down triangle
/// `u′`) the relation is `u + c w − u′ − c w′`.
pub fn resistor_graph(patch: &ResistorPatch) -> Result<(SurfaceGraph, Vec<Scalar>)> {
    patch.validate()?;
    let mut b = PlanarBuilder::new();
    let mut whites: BTreeMap<String, VertexId> = BTreeMap::new();
    let mut white = |b: &mut PlanarBuilder, label: String, pos: (i64, i64)| -> VertexId {
        *whites.entry(label.clone()).or_insert_with(|| b.vertex(&label, Color::White, pos.0, pos.1))
    };
    let mut coeffs = Vec::new();
    for ((u, v), c) in &patch.conductances {
        let (up, down, tail, head) = edge_triangles(*u, *v).expect("validated");
        let wu = white(&mut b, up.label(), up.position());
        let wd = white(&mut b, down.label(), down.position());
        let wt = white(&mut b, node_label(tail), node_position(tail));
        let wh = white(&mut b, node_label(head), node_position(head));
        let (pu, pv) = (node_position(*u), node_position(*v));
        let bl = b.vertex(&crossing_label(*u, *v), Color::Black, (pu.0 + pv.0) / 2, (pu.1 + pv.1) / 2);
        for (w, k) in [(wu, Scalar::one()), (wt, c.clone()), (wd, -Scalar::one()), (wh, -c.clone())] {
            b.edge(bl, w);
            coeffs.push(k);
        }
    }
    Ok((b.build()?, coeffs))
}

/// The resistor configuration: the relations of [`resistor_graph`] with
/// vectors spanning the solution space of `K V = 0`, in coordinates changed
/// by a random invertible matrix.
pub fn resistor_to_config<R: Rng + ?Sized>(patch: &ResistorPatch, rng: &mut R) -> Result<Configuration> {
    let (g, coeffs) = resistor_graph(patch)?;
    let km = crate::config_core::kasteleyn_from_coeffs(&g, &coeffs);
    let ker = km.kernel();
    let k = ker.len();
    let basis = Matrix::from_rows(ker)?;
    let frame = random_invertible(rng, k);
    let whites = g.whites();
    let mut vectors = vec![None; g.n_vertices()];
    for (i, &w) in whites.iter().enumerate() {
        vectors[w] = Some(frame.mul_vec(&basis.col(i))?);
    }
    Ok(Configuration::new(g, k, vectors, coeffs, Mode::General)?)
}

/// Result of the Koenigs check at one up triangle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KoenigsCheck {
    /// The up triangle.
    pub triangle: Triangle,
    /// `(Σ 1/c_i) u − Σ u_i / c_i` vanishes.
    pub relation_holds: bool,
    /// Rank of `u, u_1, u_2, u_3` (coplanar points have rank at most 3).
    pub rank: usize,
    /// `det[u u_1 u_2 u_3]` when the vectors are 4-dimensional.
    pub determinant: Option<Scalar>,
}

impl KoenigsCheck {
    /// The four points are coplanar and the summed relation holds.
    pub fn passed(&self) -> bool {
        self.relation_holds && self.rank <= 3 && self.determinant.as_ref().is_none_or(|d| d.is_zero())
    }
}

/// Checks the Koenigs relation at every up triangle whose three edges are in
/// the patch.
pub fn koenigs_check(patch: &ResistorPatch, config: &Configuration) -> Result<Vec<KoenigsCheck>> {
    let g = config.graph();
    let vec_of = |label: &str| -> Result<&Vector> {
        let v = g.find_label(label).ok_or_else(|| DynamicsError::Sequence(format!("no vertex {label}")))?;
        Ok(config.vector(v))
    };
    let ups: BTreeSet<Triangle> =
        patch.conductances.keys().filter_map(|(u, v)| edge_triangles(*u, *v).map(|t| t.0)).collect();
    let mut out = Vec::new();
    for up in ups {
        let corners = up.corners();
        let mut edges = Vec::new();
        for i in 0..3 {
            let (u, v) = (corners[i], corners[(i + 1) % 3]);
            if let Some(c) = patch.conductances.get(&(u.min(v), u.max(v))) {
                edges.push((c.clone(), edge_triangles(u, v).expect("grid edge").1));
            }
        }
        if edges.len() != 3 {
            continue;
        }
        let k = config.k();
        let u = vec_of(&up.label())?;
        let mut residual = vec![Scalar::zero(); k];
        let mut cols = vec![u.clone()];
        for (c, down) in &edges {
            let ui = vec_of(&down.label())?;
            let inv = c.recip();
            for i in 0..k {
                residual[i] += &inv * (&u[i] - &ui[i]);
            }
            cols.push(ui.clone());
        }
        let m = Matrix::from_columns(k, &cols)?;
        let determinant = if k == 4 { Some(m.det()?) } else { None };
        out.push(KoenigsCheck {
            triangle: up,
            relation_holds: residual.iter().all(|x| x.is_zero()),
            rank: m.rank(),
            determinant,
        });
    }
    Ok(out)
}

/// Negative edges on each internal face of the resistor graph.
pub fn resistor_face_negatives(config: &Configuration) -> Vec<usize> {
    let g = config.graph();
    g.internal_faces()
        .into_iter()
        .map(|f| g.faces()[f].darts().iter().filter(|d| config.coeff(d.edge).is_negative()).count())
        .collect()
}

// ---------------------------------------------------------------------------
// Ising model
// ---------------------------------------------------------------------------

/// The rational point `(c, s) = ((1 − t²)/(1 + t²), 2t/(1 + t²))` of the unit
/// circle; positive for `0 < t < 1`.
pub fn circle_point(t: &Scalar) -> (Scalar, Scalar) {
    let one = Scalar::one();
    let d = &one + t * t;
    ((&one - t * t) / &d, (q(2) * t) / d)
}

/// Points of the Ising configuration of a triangle: `G, H, K` at the
/// hexagonal face, `A, B` on line `GH`, `C, D` on line `HK`, `E, F` on line
/// `KG`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsingPoints {
    /// Points keyed by their letter.
    pub points: BTreeMap<char, ProjectivePoint>,
}

impl IsingPoints {
    /// The point with the given letter.
    pub fn get(&self, c: char) -> &ProjectivePoint {
        &self.points[&c]
    }

    /// The six points `A, …, F`.
    pub fn six(&self) -> [ProjectivePoint; 6] {
        ['A', 'B', 'C', 'D', 'E', 'F'].map(|c| self.get(c).clone())
    }
}

fn rotate(p: (f64, f64), turns: i32) -> (i64, i64) {
    let th = -2.0 * std::f64::consts::PI / 3.0 * turns as f64;
    let (c, s) = (th.cos(), th.sin());
    ((p.0 * c - p.1 * s).round() as i64, (p.0 * s + p.1 * c).round() as i64)
}

/// The Ising graph of a triangle: a hexagon `G, bGH, H, bHK, K, bKG` and a
/// square on each of its edges `G bGH`, `H bHK`, `K bKG`. With `(c_i, s_i)`
/// on the unit circle, square `i` carries `s_i, c_i, s_i, c_i` and the
/// hexagon alternates `c_i` and `1`; one edge of each square is negated so
/// the signs satisfy the Kasteleyn condition. Returns the graph and the
/// signed coefficients.
pub fn ising_graph(cs: &[(Scalar, Scalar); 3]) -> Result<(SurfaceGraph, Vec<Scalar>)> {
    for (c, s) in cs {
        if !c.is_positive() || !s.is_positive() || c * c + s * s != Scalar::one() {
            return Err(DynamicsError::Sequence("Ising weights must be positive with c² + s² = 1".into()));
        }
    }
    let mut b = PlanarBuilder::new();
    let mut coeffs = Vec::new();
    // Square 2 sits on the edge G–bGH; squares 3 and 1 are its rotations by
    // one and two thirds of a clockwise turn.
    let hexes = ["G", "H", "K"];
    let hex_blacks = ["bGH", "bHK", "bKG"];
    let outer = [("B", "A", "g2"), ("D", "C", "g3"), ("F", "E", "g1")];
    let weight_index = [1, 2, 0];
    let mut hw = Vec::new();
    let mut hb = Vec::new();
    for r in 0..3usize {
        let (x, y) = rotate((0.0, 400.0), r as i32);
        hw.push(b.vertex(hexes[r], Color::White, x, y));
        let (x, y) = rotate((346.0, 200.0), r as i32);
        hb.push(b.vertex(hex_blacks[r], Color::Black, x, y));
    }
    let mut edge = |b: &mut PlanarBuilder, u: VertexId, v: VertexId, k: Scalar| {
        b.edge(u, v);
        coeffs.push(k);
    };
    for r in 0..3 {
        let (c, s) = &cs[weight_index[r]];
        let (p_label, a_label, g_label) = outer[r];
        let (x, y) = rotate((500.0, 500.0), r as i32);
        let p = b.vertex(p_label, Color::White, x, y);
        let (x, y) = rotate((200.0, 700.0), r as i32);
        let gv = b.vertex(g_label, Color::Black, x, y);
        let (x, y) = rotate((250.0, 950.0), r as i32);
        let a = b.vertex(a_label, Color::White, x, y);
        let (w, hbk, wn) = (hw[r], hb[r], hw[(r + 1) % 3]);
        edge(&mut b, hbk, w, c.clone());
        edge(&mut b, hbk, wn, Scalar::one());
        edge(&mut b, hbk, p, s.clone());
        edge(&mut b, gv, w, s.clone());
        edge(&mut b, gv, p, -c.clone());
        edge(&mut b, gv, a, Scalar::one());
    }
    let _ = &mut edge;
    Ok((b.build()?, coeffs))
}

/// The Ising configuration (vectors spanning the solution space of
/// `K V = 0`, in ℚ³) and its labelled points.
pub fn ising_config(cs: &[(Scalar, Scalar); 3]) -> Result<(Configuration, IsingPoints)> {
    let (g, coeffs) = ising_graph(cs)?;
    let km = crate::config_core::kasteleyn_from_coeffs(&g, &coeffs);
    let ker = km.kernel();
    let k = ker.len();
    if k != 3 {
        return Err(DynamicsError::Degenerate(format!("solution space has dimension {k}")));
    }
    let basis = Matrix::from_rows(ker)?;
    let whites = g.whites();
    let mut vectors = vec![None; g.n_vertices()];
    for (i, &w) in whites.iter().enumerate() {
        vectors[w] = Some(basis.col(i));
    }
    let config = Configuration::new(g, k, vectors, coeffs, Mode::General)?;
    let mut points = BTreeMap::new();
    for c in ['A', 'B', 'C', 'D', 'E', 'F', 'G', 'H', 'K'] {
        let v = config.graph().find_label(&c.to_string()).expect("labelled vertex");
        points.insert(c, point(config.vector(v))?);
    }
    Ok((config, IsingPoints { points }))
}

/// True iff the six points lie on a conic: the 6×6 determinant of the
/// monomials `x², xy, y², xz, yz, z²` vanishes.
pub fn ising_conic_check(points: &[ProjectivePoint; 6]) -> bool {
    if points.iter().any(|p| p.len() != 3) {
        return false;
    }
    let rows: Vec<Vector> = points
        .iter()
        .map(|p| {
            let c = p.coords();
            let (x, y, z) = (&c[0], &c[1], &c[2]);
            vec![x * x, x * y, y * y, x * z, y * z, z * z]
        })
        .collect();
    Matrix::from_rows(rows).and_then(|m| m.det()).map(|d| d.is_zero()).unwrap_or(false)
}

/// The two triple ratios `[G, B, H, D, K, F]` and `[G, E, K, C, H, A]`.
pub fn ising_triple_ratios(p: &IsingPoints) -> Result<(Scalar, Scalar)> {
    let pick = |s: &str| -> Vec<ProjectivePoint> { s.chars().map(|c| p.get(c).clone()).collect() };
    Ok((multi_ratio(&pick("GBHDKF"))?, multi_ratio(&pick("GEKCHA"))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_linalg::qv;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn pentagon() -> Vec<ProjectivePoint> {
        [(0, 0), (2, 0), (3, 2), (1, 4), (-1, 2)].iter().map(|&(x, y)| ProjectivePoint::affine(&[q(x), q(y)])).collect()
    }

    #[test]
    fn pentagon_two_ways() {
        let a = pentagon();
        let direct = pentagram_step(&a).unwrap();
        let (via, t) = pentagram_run(&a).unwrap();
        assert_eq!(direct, via);
        assert!(t.weights_agree().unwrap());
        let g = t.config().graph();
        assert_eq!(g.n_vertices(), 10);
        assert_eq!(g.n_edges(), 20);
        assert!((0..10).all(|v| g.degree(v) == 4));
        assert_eq!(g.whites().len(), 5);
    }

    #[test]
    fn quadrilateral_is_rejected() {
        let a: Vec<ProjectivePoint> =
            [(0, 0), (2, 0), (2, 2), (0, 2)].iter().map(|&(x, y)| ProjectivePoint::affine(&[q(x), q(y)])).collect();
        assert_eq!(pentagram_step(&a), Err(DynamicsError::TooSmall { n: 4 }));
        let diag = line_meet(&a[3], &a[1], &a[0], &a[2]).unwrap();
        for i in 0..4 {
            let b = line_meet(&a[(i + 3) % 4], &a[(i + 1) % 4], &a[i], &a[(i + 2) % 4]).unwrap();
            assert_eq!(b, diag);
        }
    }

    #[test]
    fn collinear_vertices_are_degenerate() {
        let a: Vec<ProjectivePoint> = [(0, 0), (1, 0), (2, 0), (1, 4), (-1, 2)]
            .iter()
            .map(|&(x, y)| ProjectivePoint::affine(&[q(x), q(y)]))
            .collect();
        assert!(matches!(pentagram_step(&a), Err(DynamicsError::Degenerate(_))));
    }

    #[test]
    fn pentagram_face_weights_match_the_graph() {
        let mut r = rng(3);
        for n in [5, 6, 7] {
            let a = random_polygon(&mut r, n);
            let c = pentagram_configuration(&a).unwrap();
            for i in 0..n {
                let f = pentagram_face(c.graph(), i);
                let cyc = c.graph().face_cycle(f);
                let labels: BTreeSet<String> = cyc.whites.iter().map(|&w| c.graph().vertex(w).label.clone()).collect();
                assert_eq!(labels, [format!("A{i}"), format!("A{}", (i + 1) % n)].into_iter().collect());
                assert_eq!(c.face_weight(f).unwrap(), pentagram_face_weight(&a, i).unwrap());
            }
        }
    }

    #[test]
    fn pentagram_is_projectively_equivariant() {
        let mut r = rng(4);
        for _ in 0..10 {
            let a = random_polygon(&mut r, 6);
            let m = random_invertible(&mut r, 3);
            let ma: Vec<ProjectivePoint> = a.iter().map(|p| p.transform(&m).unwrap()).collect();
            let Ok(lhs) = pentagram_step(&ma) else { continue };
            let rhs: Vec<ProjectivePoint> = pentagram_step(&a).unwrap().iter().map(|p| p.transform(&m).unwrap()).collect();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn trajectory_has_requested_generations() {
        let traj = pentagram_trajectory(&pentagon(), 2).unwrap();
        assert_eq!(traj.len(), 3);
        assert!(traj.iter().all(|g| g.len() == 5));
    }

    #[test]
    fn laplace_two_ways() {
        let mut r = rng(5);
        for _ in 0..3 {
            let p = random_laplace_patch(&mut r, 7);
            let direct = laplace_darboux_step(&p).unwrap();
            let (via, t) = laplace_darboux_run(&p).unwrap();
            assert_eq!(via.len(), 4);
            for (c, x) in &via {
                assert_eq!(&direct[c], x);
            }
            assert!(t.weights_agree().unwrap());
        }
    }

    #[test]
    fn laplace_local_picture() {
        let mut r = rng(6);
        let p = random_laplace_patch(&mut r, 7);
        let out = laplace_darboux_step(&p).unwrap();
        let expected = line_meet(&p.points[&(2, 0)], &p.points[&(3, 1)], &p.points[&(1, 1)], &p.points[&(2, 2)]).unwrap();
        assert_eq!(out[&(2, 1)], expected);
    }

    #[test]
    fn laplace_rejects_bad_windows() {
        let mut r = rng(7);
        let mut p = random_laplace_patch(&mut r, 7);
        let (a, b, c) = (p.points[&(2, 0)].clone(), p.points[&(1, 1)].clone(), p.points[&(3, 1)].clone());
        p.points.insert((2, 2), random_combination(&mut r, &[&a, &b, &c]).unwrap());
        p.points.insert((3, 1), random_combination(&mut r, &[&a, &b]).unwrap());
        assert!(matches!(laplace_darboux_step(&p), Err(DynamicsError::Degenerate(_))));
        let mut p = random_laplace_patch(&mut r, 7);
        p.points.insert((2, 2), random_point(&mut r, 4));
        assert!(matches!(laplace_darboux_step(&p), Err(DynamicsError::CoplanarityViolated(_))));
    }

    #[test]
    fn qnet_two_ways_and_face_weights() {
        let mut r = rng(8);
        for _ in 0..5 {
            let cube = random_qnet_cube(&mut r);
            let direct = qnet_gentrify(&cube).unwrap();
            let (via, t) = qnet_run(&cube).unwrap();
            assert_eq!(direct, via);
            assert!(t.weights_agree().unwrap());
            let mut pts = cube.points.clone();
            pts.insert([1, 1, 1], direct);
            let fw = qnet_face_weights(&cube).unwrap();
            for a in Axis::ALL {
                assert_eq!(fw.initial[a.index()], qnet_y(&pts, ORIGIN, a).unwrap());
                assert_eq!(fw.final_[a.index()], qnet_y_tilde(&pts, shift([1, 1, 1], a, -1), a).unwrap());
            }
            assert_eq!(fw.final_, fw.tracked);
            assert_eq!(qnet_y_evolution(&fw.initial).unwrap(), fw.final_);
        }
    }

    #[test]
    fn qnet_final_graph_has_new_lozenges() {
        let mut r = rng(9);
        let cube = random_qnet_cube(&mut r);
        let (_, t) = qnet_run(&cube).unwrap();
        let g = t.config().graph();
        let mut sets: Vec<BTreeSet<String>> = g
            .blacks()
            .into_iter()
            .map(|b| g.neighbors(b).into_iter().map(|w| g.vertex(w).label.clone()).collect())
            .collect();
        sets.sort();
        let mut want: Vec<BTreeSet<String>> = [
            Lozenge { base: [1, 0, 0], first: Axis::Y },
            Lozenge { base: [0, 1, 0], first: Axis::Z },
            Lozenge { base: [0, 0, 1], first: Axis::X },
        ]
        .iter()
        .map(|l| l.corners().iter().map(|&c| qnet_label(c)).collect())
        .collect();
        want.sort();
        assert_eq!(sets, want);
    }

    #[test]
    fn qnet_rejects_non_planar_squares() {
        let mut r = rng(10);
        let mut cube = random_qnet_cube(&mut r);
        cube.points.insert([0, 1, 1], random_point(&mut r, 4));
        assert!(matches!(qnet_gentrify(&cube), Err(DynamicsError::CoplanarityViolated(_))));
    }

    #[test]
    fn darboux_two_ways() {
        let mut r = rng(11);
        for _ in 0..5 {
            let patch = random_darboux_hexahedron(&mut r);
            let direct = darboux_superurban(&patch).unwrap();
            let (via, t) = darboux_run(&patch).unwrap();
            assert_eq!(direct, via);
            assert!(t.weights_agree().unwrap());
            let mut all = patch.points.clone();
            all.extend(direct.clone());
            let pts: Vec<&ProjectivePoint> = all.values().collect();
            assert_eq!(rank(&pts), 3);
            for l in [
                Lozenge { base: [1, 0, 0], first: Axis::Y },
                Lozenge { base: [0, 1, 0], first: Axis::Z },
                Lozenge { base: [0, 0, 1], first: Axis::X },
            ] {
                let e: Vec<&ProjectivePoint> = l.edges().iter().map(|e| &all[e]).collect();
                assert_eq!(rank(&e), 2);
            }
        }
    }

    #[test]
    fn darboux_final_graph_has_new_lozenges() {
        let mut r = rng(12);
        let patch = random_darboux_hexahedron(&mut r);
        let (_, t) = darboux_run(&patch).unwrap();
        let g = t.config().graph();
        let mut sets: Vec<BTreeSet<String>> = g
            .blacks()
            .into_iter()
            .map(|b| g.neighbors(b).into_iter().map(|w| g.vertex(w).label.clone()).collect())
            .collect();
        sets.sort();
        let target = darboux_graph(&[
            Lozenge { base: [1, 0, 0], first: Axis::Y },
            Lozenge { base: [0, 1, 0], first: Axis::Z },
            Lozenge { base: [0, 0, 1], first: Axis::X },
        ])
        .unwrap();
        let mut want: Vec<BTreeSet<String>> = target
            .blacks()
            .into_iter()
            .map(|b| target.neighbors(b).into_iter().map(|w| target.vertex(w).label.clone()).collect())
            .collect();
        want.sort();
        assert_eq!(sets, want);
    }

    #[test]
    fn darboux_face_weights_match_multi_ratios() {
        let mut r = rng(13);
        let patch = random_darboux_hexahedron(&mut r);
        let t0 = MoveTracker::new(patch.configuration().unwrap()).unwrap();
        for l in lozenges_at(ORIGIN) {
            let w = darboux_face_whites_lozenge(&l);
            let f = t0.face_with_whites(&w.iter().map(String::as_str).collect::<Vec<_>>()).unwrap();
            assert_eq!(t0.config().face_weight(f).unwrap(), darboux_y_lozenge(&patch.points, &l).unwrap());
        }
        let w = darboux_face_whites_in(ORIGIN);
        let f = t0.face_with_whites(&w.iter().map(String::as_str).collect::<Vec<_>>()).unwrap();
        assert_eq!(t0.config().face_weight(f).unwrap(), darboux_y_in(&patch.points, ORIGIN).unwrap());

        let (new, t1) = darboux_run(&patch).unwrap();
        let mut all = patch.points.clone();
        all.extend(new);
        let w = darboux_face_whites_out([1, 1, 1]);
        let f = t1.face_with_whites(&w.iter().map(String::as_str).collect::<Vec<_>>()).unwrap();
        assert_eq!(t1.config().face_weight(f).unwrap(), darboux_y_out(&all, [1, 1, 1]).unwrap());
        for l in [
            Lozenge { base: [1, 0, 0], first: Axis::Y },
            Lozenge { base: [0, 1, 0], first: Axis::Z },
            Lozenge { base: [0, 0, 1], first: Axis::X },
        ] {
            let w = darboux_face_whites_lozenge(&l);
            let f = t1.face_with_whites(&w.iter().map(String::as_str).collect::<Vec<_>>()).unwrap();
            assert_eq!(t1.config().face_weight(f).unwrap(), darboux_y_lozenge(&all, &l).unwrap());
        }
    }

    #[test]
    fn darboux_middle_generation_weight() {
        let mut r = rng(14);
        let mut lozenges = Vec::new();
        for base in [[0, 0, 0], [1, -1, 0], [1, 0, -1]] {
            lozenges.extend(lozenges_at(base));
        }
        let patch = random_darboux_patch(&mut r, &lozenges);
        let t = MoveTracker::new(patch.configuration().unwrap()).unwrap();
        let mid = [1, 0, 0];
        let w = darboux_face_whites_mid(mid);
        let f = t.face_with_whites(&w.iter().map(String::as_str).collect::<Vec<_>>()).unwrap();
        assert_eq!(t.config().face_weight(f).unwrap(), darboux_y_mid(&patch.points, mid).unwrap());
        for base in [[0, 0, 0], [1, -1, 0], [1, 0, -1]] {
            let w = darboux_face_whites_in(base);
            let f = t.face_with_whites(&w.iter().map(String::as_str).collect::<Vec<_>>()).unwrap();
            assert_eq!(t.config().face_weight(f).unwrap(), darboux_y_in(&patch.points, base).unwrap());
        }
    }

    #[test]
    fn darboux_rejects_non_collinear_data() {
        let mut r = rng(15);
        let mut patch = random_darboux_hexahedron(&mut r);
        patch.points.insert(([1, 0, 0], Axis::Y), random_point(&mut r, 4));
        assert!(matches!(darboux_superurban(&patch), Err(DynamicsError::CollinearityViolated(_))));
    }

    #[test]
    fn unit_conductances() {
        let mut r = rng(16);
        let patch = ResistorPatch::star(&[q(1), q(1), q(1)]);
        let c = resistor_to_config(&patch, &mut r).unwrap();
        assert_eq!(c.k(), 4);
        let g = c.graph();
        let v = |l: &str| c.vector(g.find_label(l).unwrap()).clone();
        let lhs: Vector = (0..4).map(|i| q(3) * &v("U0,0")[i] - &v("D0,-1")[i] - &v("D0,0")[i] - &v("D-1,0")[i]).collect();
        assert_eq!(lhs, qv(&[0, 0, 0, 0]));
        let checks = koenigs_check(&patch, &c).unwrap();
        assert_eq!(checks.len(), 1);
        assert!(checks[0].passed());
    }

    #[test]
    fn generic_conductances_are_koenigs() {
        let mut r = rng(17);
        for _ in 0..10 {
            let cs = [random_positive(&mut r), random_positive(&mut r), random_positive(&mut r)];
            let patch = ResistorPatch::star(&cs);
            let c = resistor_to_config(&patch, &mut r).unwrap();
            let checks = koenigs_check(&patch, &c).unwrap();
            assert!(checks.iter().all(KoenigsCheck::passed));
            assert_eq!(checks[0].determinant, Some(Scalar::zero()));
            assert!(resistor_face_negatives(&c).iter().all(|&n| n == 1 || n == 3));
        }
    }

    #[test]
    fn larger_resistor_patch() {
        let mut r = rng(18);
        let mut conductances = BTreeMap::new();
        for t in [Triangle::Up(0, 0), Triangle::Down(0, 0), Triangle::Up(1, 0), Triangle::Up(0, 1)] {
            let c = t.corners();
            for i in 0..3 {
                let (u, v) = (c[i], c[(i + 1) % 3]);
                conductances.insert((u.min(v), u.max(v)), random_positive(&mut r));
            }
        }
        let patch = ResistorPatch { conductances };
        let c = resistor_to_config(&patch, &mut r).unwrap();
        let checks = koenigs_check(&patch, &c).unwrap();
        assert_eq!(checks.len(), 3);
        assert!(checks.iter().all(KoenigsCheck::passed));
        assert!(resistor_face_negatives(&c).iter().all(|&n| n == 1 || n == 3));
    }

    #[test]
    fn nonpositive_conductance_is_rejected() {
        let patch = ResistorPatch::star(&[q(1), q(0), q(2)]);
        assert!(matches!(resistor_graph(&patch), Err(DynamicsError::NonpositiveConductance(_))));
    }

    fn random_positive(r: &mut ChaCha8Rng) -> Scalar {
        crate::exact_linalg::random_positive(r)
    }

    fn random_circle(r: &mut ChaCha8Rng) -> (Scalar, Scalar) {
        let den = r.gen_range(2..=12);
        circle_point(&Scalar::new(r.gen_range(1..den).into(), den.into()))
    }

    #[test]
    fn ising_points_lie_on_a_conic() {
        let mut r = rng(19);
        for _ in 0..5 {
            let cs = [random_circle(&mut r), random_circle(&mut r), random_circle(&mut r)];
            let (c, p) = ising_config(&cs).unwrap();
            assert!(ising_conic_check(&p.six()));
            let (lhs, rhs) = ising_triple_ratios(&p).unwrap();
            assert_eq!(lhs, rhs);
            let g = c.graph();
            let hex = g.internal_faces().into_iter().find(|&f| g.faces()[f].len() == 6).unwrap();
            let prod = &cs[0].0 * &cs[1].0 * &cs[2].0;
            assert_eq!(c.face_weight(hex).unwrap(), prod);
            let mut quads = Scalar::one();
            for f in g.internal_faces() {
                if g.faces()[f].len() == 4 {
                    quads *= Scalar::one() + c.face_weight(f).unwrap();
                }
            }
            assert_eq!(&prod * &prod * quads, Scalar::one());
        }
    }

    #[test]
    fn conic_check_examples() {
        let on_circle: [ProjectivePoint; 6] = [
            qv(&[1, 0, 1]),
            qv(&[0, 1, 1]),
            qv(&[-1, 0, 1]),
            qv(&[0, -1, 1]),
            qv(&[3, 4, 5]),
            qv(&[5, 12, 13]),
        ]
        .map(|v| ProjectivePoint::new(v).unwrap());
        assert!(ising_conic_check(&on_circle));
        let mut r = rng(20);
        let mut generic = 0;
        for _ in 0..20 {
            let pts: [ProjectivePoint; 6] = std::array::from_fn(|_| random_point(&mut r, 3));
            if !ising_conic_check(&pts) {
                generic += 1;
            }
        }
        assert!(generic >= 19);
    }
}
