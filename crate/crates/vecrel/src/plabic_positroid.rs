//! Combinatorics of reduced plabic graphs: almost perfect matchings,
//! positroids, Grassmann necklaces, Kasteleyn signs, strand labels and the
//! canonical acyclic perfect orientation.
//!
//! Boundary labels are 1-based throughout; subsets of `{1..n}` are sorted
//! vectors. Zigzag `j` starts at boundary vertex `j`, turning maximally left
//! at white vertices and maximally right at black vertices.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config_core::KasteleynSigns;
use crate::exact_linalg::{minor, LinalgError, Matrix};
use crate::surface_graph::{matching_avoiding, Color, Dart, EdgeId, Step, Surface, SurfaceGraph, VertexId};

/// Default cap on the number of enumerated matchings.
pub const DEFAULT_MATCHING_CAP: usize = 1_000_000;

/// Errors raised by plabic combinatorics.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlabicError {
    /// The graph is not a disk graph.
    #[error("plabic graphs must be embedded in a disk")]
    NotDisk,
    /// The graph is not reduced.
    #[error("graph is not reduced")]
    NotReduced,
    /// Matching enumeration exceeded the cap.
    #[error("more than {cap} almost perfect matchings")]
    MatchingCap { cap: usize },
    /// The graph has no almost perfect matching.
    #[error("positroid is empty")]
    EmptyPositroid,
    /// The matrix does not have full row rank.
    #[error("matrix has rank {rank}, expected {k}")]
    RankDeficient { rank: usize, k: usize },
    /// The matrix has the wrong number of columns.
    #[error("matrix has {cols} columns, expected {n}")]
    Shape { cols: usize, n: usize },
    /// Linear algebra failure.
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A positroid: the set of its bases, each a sorted list of labels.
pub type Positroid = BTreeSet<Vec<usize>>;

/// All `k`-subsets of `{1..n}` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in start..=n {
            if n - x + 1 < k - cur.len() {
                break;
            }
            cur.push(x);
            rec(x + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(1, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// `k = |W| − |B|` for a bipartite graph.
pub fn plabic_k(g: &SurfaceGraph) -> usize {
    g.whites().len().saturating_sub(g.blacks().len())
}

/// All almost perfect matchings (matchings covering every black and every
/// internal white vertex), each as a sorted edge list. Enumeration stops with
/// an error beyond [`DEFAULT_MATCHING_CAP`] matchings.
pub fn almost_perfect_matchings(g: &SurfaceGraph) -> Result<Vec<Vec<EdgeId>>, PlabicError> {
    almost_perfect_matchings_capped(g, DEFAULT_MATCHING_CAP)
}

/// [`almost_perfect_matchings`] with an explicit cap.
pub fn almost_perfect_matchings_capped(g: &SurfaceGraph, cap: usize) -> Result<Vec<Vec<EdgeId>>, PlabicError> {
    struct Search<'a> {
        g: &'a SurfaceGraph,
        blacks: Vec<VertexId>,
        used: Vec<bool>,
        chosen: Vec<EdgeId>,
        uncovered_internal: usize,
        out: Vec<Vec<EdgeId>>,
        cap: usize,
    }
    impl Search<'_> {
        fn run(&mut self, i: usize) -> Result<(), PlabicError> {
            if self.uncovered_internal > self.blacks.len() - i {
                return Ok(());
            }
            if i == self.blacks.len() {
                if self.out.len() == self.cap {
                    return Err(PlabicError::MatchingCap { cap: self.cap });
                }
                let mut m = self.chosen.clone();
                m.sort_unstable();
                self.out.push(m);
                return Ok(());
            }
            let b = self.blacks[i];
            for &e in self.g.rotation(b) {
                let w = self.g.edge(e).white;
                if self.used[w] {
                    continue;
                }
                let internal = !self.g.is_boundary(w);
                self.used[w] = true;
                if internal {
                    self.uncovered_internal -= 1;
                }
                self.chosen.push(e);
                self.run(i + 1)?;
                self.chosen.pop();
                if internal {
                    self.uncovered_internal += 1;
                }
                self.used[w] = false;
            }
            Ok(())
        }
    }
    let mut s = Search {
        g,
        blacks: g.blacks(),
        used: vec![false; g.n_vertices()],
        chosen: Vec::new(),
        uncovered_internal: g.internal_whites().len(),
        out: Vec::new(),
        cap,
    };
    s.run(0)?;
    Ok(s.out)
}

/// Boundary labels not covered by a matching.
pub fn unused_boundary(g: &SurfaceGraph, matching: &[EdgeId]) -> Vec<usize> {
    let covered: BTreeSet<VertexId> = matching.iter().map(|&e| g.edge(e).white).collect();
    (1..=g.n_boundary()).filter(|&j| !covered.contains(&g.boundary_vertex(j))).collect()
}

/// The positroid of a plabic graph: the `k`-subsets `J` of boundary labels
/// such that some almost perfect matching avoids exactly `J`.
pub fn positroid(g: &SurfaceGraph) -> Positroid {
    let k = plabic_k(g);
    k_subsets(g.n_boundary(), k)
        .into_iter()
        .filter(|j| {
            let avoid: Vec<VertexId> = j.iter().map(|&x| g.boundary_vertex(x)).collect();
            matching_avoiding(g, &avoid, |_| true).is_some()
        })
        .collect()
}

fn cyclic_lex_min(pos: &Positroid, n: usize, key: impl Fn(usize) -> usize) -> Vec<usize> {
    pos.iter()
        .map(|b| {
            let mut ranks: Vec<usize> = b.iter().map(|&x| key(x)).collect();
            ranks.sort_unstable();
            (ranks, b)
        })
        .min()
        .map(|(_, b)| b.clone())
        .unwrap_or_else(|| {
            debug_assert!(n == 0 || pos.is_empty());
            Vec::new()
        })
}

/// Grassmann necklace `(I_1, …, I_n)`: `I_j` is the lexicographically
/// minimal basis for the order `j < j+1 < … < n < 1 < … < j−1`.
pub fn grassmann_necklace(pos: &Positroid, n: usize) -> Result<Vec<Vec<usize>>, PlabicError> {
    if pos.is_empty() {
        return Err(PlabicError::EmptyPositroid);
    }
    Ok((1..=n).map(|j| cyclic_lex_min(pos, n, |x| (x + n - j) % n)).collect())
}

/// Reverse Grassmann necklace `(Ĩ_1, …, Ĩ_n)`: `Ĩ_j` is the lexicographically
/// minimal basis for the order `j < j−1 < … < 1 < n < … < j+1`, equivalently
/// the lexicographically maximal one for `j+1 < … < n < 1 < … < j`.
pub fn reverse_necklace(pos: &Positroid, n: usize) -> Result<Vec<Vec<usize>>, PlabicError> {
    if pos.is_empty() {
        return Err(PlabicError::EmptyPositroid);
    }
    Ok((1..=n).map(|j| cyclic_lex_min(pos, n, |x| (j + n - x) % n)).collect())
}

/// Solves a linear system over GF(2). Each row lists its variables (with
/// repetition allowed) and its right-hand side. Free variables are zero.
fn solve_gf2(rows: &[(Vec<usize>, bool)], n_vars: usize) -> Option<Vec<bool>> {
    let mut mat: Vec<(Vec<bool>, bool)> = rows
        .iter()
        .map(|(vars, rhs)| {
            let mut r = vec![false; n_vars];
            for &v in vars {
                r[v] ^= true;
            }
            (r, *rhs)
        })
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n_vars {
        let Some(p) = (row..mat.len()).find(|&i| mat[i].0[col]) else { continue };
        mat.swap(row, p);
        let pivot = mat[row].clone();
        for (i, r) in mat.iter_mut().enumerate() {
            if i != row && r.0[col] {
                for (x, y) in r.0.iter_mut().zip(&pivot.0) {
                    *x ^= *y;
                }
                r.1 ^= pivot.1;
            }
        }
        pivots.push(col);
        row += 1;
    }
    if mat[row..].iter().any(|(_, rhs)| *rhs) {
        return None;
    }
    let mut x = vec![false; n_vars];
    for (i, &col) in pivots.iter().enumerate() {
        x[col] = mat[i].1;
    }
    Some(x)
}

/// Required parity of negative signs on a finite face: a face whose walks
/// carry `2m` edges and which meets `a` boundary arcs needs sign product
/// `(−1)^{m+a−1}`. Returns `None` for the infinite face.
fn face_parity(g: &SurfaceGraph, f: usize) -> Option<bool> {
    use crate::surface_graph::FaceKind;
    let face = &g.faces()[f];
    if face.kind == FaceKind::Infinite {
        return None;
    }
    let m = face.len() / 2;
    let a = face.arcs().len();
    Some((m + a + 1) % 2 == 1)
}

/// Kasteleyn signs of a plabic disk graph. The graph is closed up on the
/// sphere by a black vertex joined to every boundary vertex with sign `+1`;
/// the sphere condition (a finite `2m`-gon has sign product `(−1)^{m−1}`)
/// restricted to the original edges is then solved over GF(2).
pub fn kasteleyn_signs(g: &SurfaceGraph) -> Result<KasteleynSigns, PlabicError> {
    if g.surface() != Surface::Disk {
        return Err(PlabicError::NotDisk);
    }
    let rows: Vec<(Vec<usize>, bool)> = (0..g.faces().len())
        .filter_map(|f| face_parity(g, f).map(|odd| (g.faces()[f].darts().iter().map(|d| d.edge).collect(), odd)))
        .collect();
    let x = solve_gf2(&rows, g.n_edges()).expect("Kasteleyn signs exist for planar disk graphs");
    Ok(KasteleynSigns::new(x.into_iter().map(|neg| if neg { -1 } else { 1 }).collect()))
}

/// Checks the Kasteleyn conditions on every finite face.
pub fn is_kasteleyn(g: &SurfaceGraph, signs: &KasteleynSigns) -> bool {
    (0..g.faces().len()).all(|f| match face_parity(g, f) {
        None => true,
        Some(odd) => (signs.negatives_on_face(g, f) % 2 == 1) == odd,
    })
}

/// Whether two sign choices differ by flipping all signs at some set of
/// vertices (solved over GF(2)).
pub fn signs_gauge_equivalent(g: &SurfaceGraph, a: &KasteleynSigns, b: &KasteleynSigns) -> bool {
    let rows: Vec<(Vec<usize>, bool)> = (0..g.n_edges())
        .map(|e| {
            let edge = g.edge(e);
            (vec![edge.black, edge.white], a.sign(e) != b.sign(e))
        })
        .collect();
    solve_gf2(&rows, g.n_vertices()).is_some()
}

/// Strand labels: `faces[f]` is `S_F`, `vertices[v]` is `S_w` or `S_b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrandLabels {
    /// Per face, in face order.
    pub faces: Vec<Vec<usize>>,
    /// Per vertex.
    pub vertices: Vec<Vec<usize>>,
}

fn require_reduced(g: &SurfaceGraph) -> Result<(), PlabicError> {
    if g.surface() != Surface::Disk {
        return Err(PlabicError::NotDisk);
    }
    if !g.is_reduced() {
        return Err(PlabicError::NotReduced);
    }
    Ok(())
}

/// Faces lying to the left of a zigzag: flood fill from the faces on the
/// left of its darts without crossing its edges.
fn faces_left_of(g: &SurfaceGraph, darts: &[Dart]) -> BTreeSet<usize> {
    let blocked: BTreeSet<EdgeId> = darts.iter().map(|d| d.edge).collect();
    let mut left: BTreeSet<usize> = darts.iter().map(|d| g.face_of_dart(d.reverse())).collect();
    let mut queue: VecDeque<usize> = left.iter().copied().collect();
    while let Some(f) = queue.pop_front() {
        for d in g.faces()[f].darts() {
            if blocked.contains(&d.edge) {
                continue;
            }
            let other = g.face_of_dart(d.reverse());
            if left.insert(other) {
                queue.push_back(other);
            }
        }
    }
    debug_assert!(darts.iter().all(|d| !left.contains(&g.face_of_dart(*d))));
    left
}

/// A face incident to a vertex.
fn incident_face(g: &SurfaceGraph, v: VertexId) -> usize {
    if let Some(&e) = g.rotation(v).first() {
        return g.face_of_dart(g.dart_from(v, e));
    }
    let j = g.vertex(v).boundary.expect("internal vertices have edges");
    g.faces()
        .iter()
        .position(|f| f.steps.contains(&Step::Arc(j)))
        .expect("every arc lies on a face")
}

/// Strand labels of a reduced plabic graph. `S_F` is the set of zigzags
/// with `F` on their left; for a vertex, black vertices on a zigzag count as
/// left of it and white vertices on it do not. A zigzag that returns to its
/// start through a degree-one black vertex has everything on its right; the
/// empty zigzag of an isolated boundary vertex has everything on its left.
pub fn strand_labels(g: &SurfaceGraph) -> Result<StrandLabels, PlabicError> {
    require_reduced(g)?;
    let z = g.zigzags();
    let n_faces = g.faces().len();
    let mut faces = vec![Vec::new(); n_faces];
    let mut vertices = vec![Vec::new(); g.n_vertices()];
    for (i, path) in z.paths.iter().enumerate() {
        let j = i + 1;
        if path.darts.is_empty() {
            faces.iter_mut().for_each(|s| s.push(j));
            vertices.iter_mut().for_each(|s| s.push(j));
            continue;
        }
        if path.end == Some(j) && path.darts.len() == 2 {
            continue;
        }
        let left = faces_left_of(g, &path.darts);
        for &f in &left {
            faces[f].push(j);
        }
        let on: BTreeSet<VertexId> = path.darts.iter().flat_map(|d| [g.tail(*d), g.head(*d)]).collect();
        for (v, labels) in vertices.iter_mut().enumerate() {
            let is_left = if on.contains(&v) {
                g.color(v) == Color::Black
            } else {
                left.contains(&incident_face(g, v))
            };
            if is_left {
                labels.push(j);
            }
        }
    }
    Ok(StrandLabels { faces, vertices })
}

/// The acyclic perfect orientation in which every edge points along the
/// smaller numbered of the two zigzags through it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orientation {
    /// The oriented dart of each edge.
    pub darts: Vec<Dart>,
}

impl Orientation {
    /// Edges oriented from black to white (an almost perfect matching for a
    /// perfect orientation), sorted.
    pub fn matching(&self) -> Vec<EdgeId> {
        self.darts.iter().filter(|d| d.from_black).map(|d| d.edge).collect()
    }

    /// Every internal white vertex has exactly one incoming edge and every
    /// black vertex exactly one outgoing edge.
    pub fn is_perfect(&self, g: &SurfaceGraph) -> bool {
        let mut count = vec![0usize; g.n_vertices()];
        for d in &self.darts {
            if d.from_black {
                count[g.tail(*d)] += 1;
                count[g.head(*d)] += 1;
            }
        }
        g.blacks().iter().all(|&b| count[b] == 1) && g.internal_whites().iter().all(|&w| count[w] == 1)
    }

    /// A topological order of the vertices, or `None` for a cyclic
    /// orientation.
    pub fn topological_order(&self, g: &SurfaceGraph) -> Option<Vec<VertexId>> {
        let mut indeg = vec![0usize; g.n_vertices()];
        let mut out: Vec<Vec<VertexId>> = vec![Vec::new(); g.n_vertices()];
        for d in &self.darts {
            indeg[g.head(*d)] += 1;
            out[g.tail(*d)].push(g.head(*d));
        }
        let mut queue: VecDeque<VertexId> = (0..g.n_vertices()).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::new();
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &h in &out[v] {
                indeg[h] -= 1;
                if indeg[h] == 0 {
                    queue.push_back(h);
                }
            }
        }
        (order.len() == g.n_vertices()).then_some(order)
    }

    /// Boundary labels with no incoming edge.
    pub fn sources(&self, g: &SurfaceGraph) -> Vec<usize> {
        let matched: BTreeSet<VertexId> = self.matching().iter().map(|&e| g.edge(e).white).collect();
        (1..=g.n_boundary()).filter(|&j| !matched.contains(&g.boundary_vertex(j))).collect()
    }

    /// The unique edge entering a white vertex, if any.
    pub fn incoming(&self, g: &SurfaceGraph, w: VertexId) -> Option<EdgeId> {
        g.rotation(w).iter().copied().find(|&e| self.darts[e].from_black)
    }

    /// The unique edge leaving a black vertex.
    pub fn outgoing(&self, g: &SurfaceGraph, b: VertexId) -> Option<EdgeId> {
        g.rotation(b).iter().copied().find(|&e| self.darts[e].from_black)
    }
}

/// The canonical perfect orientation of a reduced plabic graph. An edge
/// traversed twice by the same zigzag (a degree-one black vertex at the
/// boundary) points towards the boundary vertex.
pub fn perfect_orientation(g: &SurfaceGraph) -> Result<Orientation, PlabicError> {
    require_reduced(g)?;
    let z = g.zigzags();
    let mut owner: BTreeMap<Dart, usize> = BTreeMap::new();
    for (i, p) in z.paths.iter().enumerate() {
        for d in &p.darts {
            owner.insert(*d, i + 1);
        }
    }
    let darts = (0..g.n_edges())
        .map(|e| {
            let fb = Dart { edge: e, from_black: true };
            let fw = fb.reverse();
            match owner[&fb].cmp(&owner[&fw]) {
                std::cmp::Ordering::Less | std::cmp::Ordering::Equal => fb,
                std::cmp::Ordering::Greater => fw,
            }
        })
        .collect();
    Ok(Orientation { darts })
}

/// Boundary sign `σ_j = (−1)^{|I_1 ∩ {1..j}| − 1}`.
pub fn sigma(i1: &[usize], j: usize) -> i8 {
    let c = i1.iter().filter(|&&x| x <= j).count();
    if c % 2 == 1 {
        1
    } else {
        -1
    }
}

/// Kasteleyn signs read off the canonical orientation: negative on the
/// black-to-white edges, then flipped at each boundary vertex `j` with
/// `σ_j = −1`.
pub fn signs_from_orientation(g: &SurfaceGraph, o: &Orientation, i1: &[usize]) -> KasteleynSigns {
    let mut s = KasteleynSigns::new(o.darts.iter().map(|d| if d.from_black { -1 } else { 1 }).collect());
    for j in 1..=g.n_boundary() {
        if sigma(i1, j) < 0 {
            s.flip_vertex(g, g.boundary_vertex(j));
        }
    }
    s
}

/// Everything computed once per reduced plabic graph.
#[derive(Clone, Debug)]
pub struct PlabicContext {
    /// The graph.
    pub graph: SurfaceGraph,
    /// Number of boundary vertices.
    pub n: usize,
    /// `k = N − M`.
    pub k: usize,
    /// Number of black vertices.
    pub m: usize,
    /// Number of white vertices.
    pub big_n: usize,
    /// Positroid.
    pub positroid: Positroid,
    /// Grassmann necklace.
    pub necklace: Vec<Vec<usize>>,
    /// Reverse Grassmann necklace.
    pub reverse_necklace: Vec<Vec<usize>>,
    /// Strand labels.
    pub labels: StrandLabels,
    /// Canonical perfect orientation.
    pub orientation: Orientation,
    /// Trip permutation.
    pub trip: Vec<usize>,
    /// Kasteleyn signs from the sphere closure.
    pub signs: KasteleynSigns,
}

impl PlabicContext {
    /// Computes the context of a reduced plabic graph.
    pub fn new(graph: &SurfaceGraph) -> Result<Self, PlabicError> {
        require_reduced(graph)?;
        let n = graph.n_boundary();
        let pos = positroid(graph);
        let necklace = grassmann_necklace(&pos, n)?;
        let reverse = reverse_necklace(&pos, n)?;
        Ok(PlabicContext {
            n,
            k: plabic_k(graph),
            m: graph.blacks().len(),
            big_n: graph.whites().len(),
            necklace,
            reverse_necklace: reverse,
            labels: strand_labels(graph)?,
            orientation: perfect_orientation(graph)?,
            trip: graph.zigzags().trip,
            signs: kasteleyn_signs(graph)?,
            positroid: pos,
            graph: graph.clone(),
        })
    }

    /// `I_1`.
    pub fn i1(&self) -> &[usize] {
        &self.necklace[0]
    }

    /// `σ_j` for the canonical orientation.
    pub fn sigma(&self, j: usize) -> i8 {
        sigma(self.i1(), j)
    }

    /// The extremal matching of the canonical orientation.
    pub fn extremal_matching(&self) -> Vec<EdgeId> {
        self.orientation.matching()
    }
}

/// Whether a `k × n` matrix lies in the positroid variety: every Plücker
/// minor outside the positroid vanishes.
pub fn in_positroid_variety(a: &Matrix, pos: &Positroid, n: usize) -> Result<bool, PlabicError> {
    if a.cols() != n {
        return Err(PlabicError::Shape { cols: a.cols(), n });
    }
    let k = a.rows();
    let rank = a.rank();
    if rank != k {
        return Err(PlabicError::RankDeficient { rank, k });
    }
    for j in k_subsets(n, k) {
        if pos.contains(&j) {
            continue;
        }
        let cols: Vec<usize> = j.iter().map(|x| x - 1).collect();
        if !num_traits::Zero::is_zero(&minor(a, &cols)?) {
            return Ok(false);
        }
    }
    Ok(true)
}
