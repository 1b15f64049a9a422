//! Boundary restriction, boundary measurement, the right twist,
//! reconstruction from a Grassmann point and edge-weight recovery for
//! reduced plabic graphs.
//!
//! Two independent implementations of the boundary measurement map are
//! provided: Plücker coordinates as signed-free matching sums, and column
//! vectors from path sums along the canonical acyclic perfect orientation.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config_core::{configuration_from_coeffs, ConfigError, Configuration, KasteleynSigns, Mode};
use crate::exact_linalg::{
    format_scalar, lin_comb, minor, parse_scalar, primitive_integer, unit_vec, vscale, LinalgError, Matrix, Scalar,
    Subspace, Vector,
};
use crate::plabic_positroid::{
    almost_perfect_matchings, in_positroid_variety, k_subsets, unused_boundary, PlabicContext, PlabicError,
};
use crate::surface_graph::{EdgeId, SurfaceGraph, VertexId};

/// Errors raised by the boundary maps.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundaryError {
    /// The representative matrix does not have full row rank.
    #[error("matrix has rank {rank}, expected {k}")]
    RankDeficient { rank: usize, k: usize },
    /// The graph has no almost perfect matching.
    #[error("no almost perfect matchings")]
    NoMatchings,
    /// A weight vanishes where it is used as a divisor.
    #[error("weight of edge {edge} is zero")]
    ZeroWeight { edge: EdgeId },
    /// Weights have the wrong length.
    #[error("expected {expected} weights, found {found}")]
    WeightCount { expected: usize, found: usize },
    /// A Plücker vector does not come from a matrix.
    #[error("coordinates do not satisfy the Plücker relations")]
    NotPlucker,
    /// A necklace minor of the point vanishes.
    #[error("necklace minor Δ_I{j} vanishes")]
    NecklaceMinorVanishes { j: usize },
    /// The point is not in the open positroid variety.
    #[error("point is outside the open positroid variety")]
    OutsideOpenPositroid,
    /// A twisted face minor vanishes.
    #[error("twisted face minor vanishes at face {face}")]
    NotInTG { face: usize },
    /// A reconstruction line is not one-dimensional.
    #[error("intersection at vertex {vertex} has dimension {dim}")]
    LineDegenerate { vertex: VertexId, dim: usize },
    /// The neighbours of a black vertex do not form a circuit.
    #[error("neighbours of black vertex {black} are not a circuit")]
    NotACircuit { black: VertexId },
    /// A Plücker coordinate has the wrong sign for a totally positive point.
    #[error("Plücker coordinate {set:?} is not positive")]
    NonpositiveMinor { set: Vec<usize> },
    /// Malformed input.
    #[error("format: {0}")]
    Format(String),
    /// Plabic combinatorics failure.
    #[error(transparent)]
    Plabic(#[from] PlabicError),
    /// Configuration failure.
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Linear algebra failure.
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A point of `Gr(k, n)` given by a full-rank `k × n` representative.
#[derive(Clone, Debug)]
pub struct GrassmannPoint {
    rep: Matrix,
}

impl PartialEq for GrassmannPoint {
    fn eq(&self, other: &Self) -> bool {
        self.same_point(other)
    }
}

impl GrassmannPoint {
    /// Wraps a full-rank representative.
    pub fn new(rep: Matrix) -> Result<Self, BoundaryError> {
        let rank = rep.rank();
        if rank != rep.rows() {
            return Err(BoundaryError::RankDeficient { rank, k: rep.rows() });
        }
        Ok(GrassmannPoint { rep })
    }

    /// Builds a point from Plücker coordinates keyed by sorted 1-based sets,
    /// checking that they are the maximal minors of some matrix (up to a
    /// common scale). Missing sets count as zero.
    pub fn from_plucker(n: usize, k: usize, coords: &BTreeMap<Vec<usize>, Scalar>) -> Result<Self, BoundaryError> {
        let (j0, d0) = coords
            .iter()
            .find(|(_, v)| !v.is_zero())
            .map(|(j, v)| (j.clone(), v.clone()))
            .ok_or(BoundaryError::NotPlucker)?;
        let get = |set: &[usize]| -> Scalar {
            let mut s = set.to_vec();
            // Sign of the sorting permutation.
            let mut sign = Scalar::one();
            for i in 0..s.len() {
                for j in i + 1..s.len() {
                    if s[i] > s[j] {
                        sign = -sign;
                    }
                }
            }
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Scalar::zero();
            }
            sign * coords.get(&s).cloned().unwrap_or_else(Scalar::zero)
        };
        let mut rows = vec![vec![Scalar::zero(); n]; k];
        for (i, row) in rows.iter_mut().enumerate() {
            for (c, slot) in row.iter_mut().enumerate() {
                let mut set = j0.clone();
                set[i] = c + 1;
                *slot = get(&set) / &d0;
            }
        }
        let p = GrassmannPoint::new(Matrix::from_rows_with_width(rows, n)?)?;
        let scale = d0 / p.plucker(&j0)?;
        for j in k_subsets(n, k) {
            let expected = coords.get(&j).cloned().unwrap_or_else(Scalar::zero);
            if p.plucker(&j)? * &scale != expected {
                return Err(BoundaryError::NotPlucker);
            }
        }
        Ok(p)
    }

    /// The representative matrix.
    pub fn matrix(&self) -> &Matrix {
        &self.rep
    }

    /// `k`.
    pub fn k(&self) -> usize {
        self.rep.rows()
    }

    /// `n`.
    pub fn n(&self) -> usize {
        self.rep.cols()
    }

    /// Column `j` (1-based).
    pub fn column(&self, j: usize) -> Vector {
        self.rep.col(j - 1)
    }

    /// Plücker coordinate `Δ_J` of the representative for a sorted 1-based set.
    pub fn plucker(&self, j: &[usize]) -> Result<Scalar, BoundaryError> {
        let cols: Vec<usize> = j.iter().map(|x| x - 1).collect();
        Ok(minor(&self.rep, &cols)?)
    }

    /// All Plücker coordinates keyed by sorted 1-based sets.
    pub fn plucker_vector(&self) -> BTreeMap<Vec<usize>, Scalar> {
        k_subsets(self.n(), self.k())
            .into_iter()
            .map(|j| {
                let v = self.plucker(&j).expect("valid subset");
                (j, v)
            })
            .collect()
    }

    /// Plücker vector scaled so that its first nonzero coordinate is one.
    pub fn normalized_plucker(&self) -> BTreeMap<Vec<usize>, Scalar> {
        let p = self.plucker_vector();
        let lead = p.values().find(|v| !v.is_zero()).cloned().expect("full rank");
        p.into_iter().map(|(j, v)| (j, v / &lead)).collect()
    }

    /// Equality of row spaces.
    pub fn same_point(&self, other: &GrassmannPoint) -> bool {
        self.rep.cols() == other.rep.cols() && self.rep.rows() == other.rep.rows() && self.rep.rref().0 == other.rep.rref().0
    }

    /// Serializable form.
    pub fn to_file(&self, with_plucker: bool) -> GrassmannPointFile {
        GrassmannPointFile {
            k: self.k(),
            n: self.n(),
            matrix: self.rep.to_rows().iter().map(|r| r.iter().map(format_scalar).collect()).collect(),
            plucker: with_plucker.then(|| {
                self.normalized_plucker()
                    .into_iter()
                    .map(|(j, v)| (j.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","), format_scalar(&v)))
                    .collect()
            }),
        }
    }

    /// Parses a serialized point.
    pub fn from_json(text: &str) -> Result<Self, BoundaryError> {
        let file: GrassmannPointFile = serde_json::from_str(text).map_err(|e| BoundaryError::Format(e.to_string()))?;
        file.into_point()
    }
}

/// JSON form of a Grassmann point: the `k × n` matrix as rational strings
/// and, optionally, the Plücker vector (scaled to a leading one) keyed by
/// comma-separated index sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrassmannPointFile {
    /// Rows.
    pub k: usize,
    /// Columns.
    pub n: usize,
    /// Matrix rows.
    pub matrix: Vec<Vec<String>>,
    /// Optional Plücker coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plucker: Option<BTreeMap<String, String>>,
}

impl GrassmannPointFile {
    /// Converts to a point.
    pub fn into_point(self) -> Result<GrassmannPoint, BoundaryError> {
        let rows: Vec<Vector> = self
            .matrix
            .iter()
            .map(|r| r.iter().map(|s| parse_scalar(s)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<_, _>>()?;
        if rows.len() != self.k || rows.iter().any(|r| r.len() != self.n) {
            return Err(BoundaryError::Format("matrix shape does not match k and n".into()));
        }
        GrassmannPoint::new(Matrix::from_rows_with_width(rows, self.n)?)
    }
}

/// The boundary restriction map: the columns are the boundary vectors.
pub fn restrict_phi(c: &Configuration) -> Result<GrassmannPoint, BoundaryError> {
    GrassmannPoint::new(c.boundary_matrix())
}

fn check_weights(g: &SurfaceGraph, weights: &[Scalar]) -> Result<(), BoundaryError> {
    if weights.len() != g.n_edges() {
        return Err(BoundaryError::WeightCount { expected: g.n_edges(), found: weights.len() });
    }
    if let Some(e) = weights.iter().position(|w| w.is_zero()) {
        return Err(BoundaryError::ZeroWeight { edge: e });
    }
    Ok(())
}

/// Boundary measurement by matching sums: `Δ_J` is the sum over almost
/// perfect matchings avoiding exactly `J` of the product of edge weights.
pub fn boundary_measurement_matchings(g: &SurfaceGraph, weights: &[Scalar]) -> Result<GrassmannPoint, BoundaryError> {
    check_weights(g, weights)?;
    let matchings = almost_perfect_matchings(g)?;
    if matchings.is_empty() {
        return Err(BoundaryError::NoMatchings);
    }
    let mut coords: BTreeMap<Vec<usize>, Scalar> = BTreeMap::new();
    for m in &matchings {
        let j = unused_boundary(g, m);
        let term = m.iter().fold(Scalar::one(), |acc, &e| acc * &weights[e]);
        *coords.entry(j).or_insert_with(Scalar::zero) += term;
    }
    let k = coords.keys().next().map(|j| j.len()).unwrap_or(0);
    GrassmannPoint::from_plucker(g.n_boundary(), k, &coords)
}

/// The configuration with coefficients `K_e = ε_e wt(e)`.
pub fn configuration_from_weights(
    g: &SurfaceGraph,
    weights: &[Scalar],
    signs: &KasteleynSigns,
) -> Result<Configuration, BoundaryError> {
    check_weights(g, weights)?;
    Ok(configuration_from_coeffs(g, signs.coefficients(weights), None)?)
}

/// Vectors `ṽ_w` of the path recursion seeded with the standard basis at the
/// sources `I_1` (in increasing order), indexed by vertex.
pub fn path_vectors(ctx: &PlabicContext, weights: &[Scalar]) -> Result<Vec<Option<Vector>>, BoundaryError> {
    let g = &ctx.graph;
    check_weights(g, weights)?;
    let k = ctx.k;
    let o = &ctx.orientation;
    let order = o.topological_order(g).ok_or(BoundaryError::Plabic(PlabicError::NotReduced))?;
    let mut vecs: Vec<Option<Vector>> = vec![None; g.n_vertices()];
    for (i, &j) in ctx.i1().iter().enumerate() {
        vecs[g.boundary_vertex(j)] = Some(unit_vec(k, i));
    }
    for &w in &order {
        if g.color(w) != crate::surface_graph::Color::White || vecs[w].is_some() {
            continue;
        }
        let Some(e) = o.incoming(g, w) else {
            // An isolated boundary vertex outside I_1 cannot occur; internal
            // whites always have an incoming edge.
            vecs[w] = Some(vec![Scalar::zero(); k]);
            continue;
        };
        let b = g.edge(e).black;
        let mut terms = Vec::new();
        for &f in g.rotation(b) {
            if f == e {
                continue;
            }
            let w2 = g.edge(f).white;
            let v = vecs[w2].clone().expect("upstream vectors precede in topological order");
            terms.push((weights[f].clone(), v));
        }
        let sum = lin_comb(k, terms.iter().map(|(c, v)| (c, v)));
        vecs[w] = Some(vscale(&weights[e].recip(), &sum));
    }
    Ok(vecs)
}

/// Boundary measurement by path sums along the canonical orientation:
/// column `j` is `σ_j ṽ_j`.
pub fn boundary_measurement_paths(ctx: &PlabicContext, weights: &[Scalar]) -> Result<GrassmannPoint, BoundaryError> {
    let g = &ctx.graph;
    let vecs = path_vectors(ctx, weights)?;
    let cols: Vec<Vector> = (1..=ctx.n)
        .map(|j| {
            let v = vecs[g.boundary_vertex(j)].clone().expect("boundary vectors are computed");
            if ctx.sigma(j) < 0 {
                vscale(&-Scalar::one(), &v)
            } else {
                v
            }
        })
        .collect();
    GrassmannPoint::new(Matrix::from_columns(ctx.k, &cols)?)
}

/// Columns `v′_1, …, v′_n` of the right twist, each determined up to scale
/// by orthogonality to `v_i` for `i ∈ I_j ∖ {j}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwistPoint {
    /// Primitive integer representatives with positive leading entry.
    pub columns: Vec<Vector>,
}

impl TwistPoint {
    /// `Δ_J` of the matrix with these columns.
    pub fn minor(&self, j: &[usize]) -> Result<Scalar, BoundaryError> {
        let cols: Vec<Vector> = j.iter().map(|x| self.columns[x - 1].clone()).collect();
        let k = cols.first().map(|c| c.len()).unwrap_or(0);
        Ok(Matrix::from_columns(k, &cols)?.det()?)
    }
}

fn check_necklace(a: &GrassmannPoint, necklace: &[Vec<usize>]) -> Result<(), BoundaryError> {
    for (i, set) in necklace.iter().enumerate() {
        if a.plucker(set)?.is_zero() {
            return Err(BoundaryError::NecklaceMinorVanishes { j: i + 1 });
        }
    }
    Ok(())
}

/// `H_j = span{v_i : i ∈ I_j ∖ {j}}`.
pub fn necklace_hyperplane(a: &GrassmannPoint, necklace: &[Vec<usize>], j: usize) -> Subspace {
    let vs: Vec<Vector> = necklace[j - 1].iter().filter(|&&i| i != j).map(|&i| a.column(i)).collect();
    Subspace::span(a.k(), &vs)
}

/// The right twist, through its orthogonality characterization.
pub fn right_twist(a: &GrassmannPoint, necklace: &[Vec<usize>]) -> Result<TwistPoint, BoundaryError> {
    check_necklace(a, necklace)?;
    let columns = (1..=a.n())
        .map(|j| {
            let perp = necklace_hyperplane(a, necklace, j).orthogonal_complement();
            debug_assert_eq!(perp.dim(), 1);
            primitive_integer(&perp.basis()[0])
        })
        .collect();
    Ok(TwistPoint { columns })
}

/// Membership in the open positroid variety: all forbidden minors vanish and
/// all necklace minors do not.
pub fn in_open_positroid(a: &GrassmannPoint, ctx: &PlabicContext) -> Result<bool, BoundaryError> {
    if !in_positroid_variety(a.matrix(), &ctx.positroid, ctx.n)? {
        return Ok(false);
    }
    Ok(ctx.necklace.iter().all(|set| !a.plucker(set).map(|x| x.is_zero()).unwrap_or(true)))
}

/// The first face whose twisted minor `Δ_{S_F}(A′)` vanishes, if any. All
/// faces, internal and external, are checked.
pub fn first_vanishing_face(a: &GrassmannPoint, ctx: &PlabicContext) -> Result<Option<usize>, BoundaryError> {
    if !in_open_positroid(a, ctx)? {
        return Err(BoundaryError::OutsideOpenPositroid);
    }
    let twist = right_twist(a, &ctx.necklace)?;
    for (f, set) in ctx.labels.faces.iter().enumerate() {
        if twist.minor(set)?.is_zero() {
            return Ok(Some(f));
        }
    }
    Ok(None)
}

/// Membership in the image of the boundary measurement map.
pub fn in_t_g(a: &GrassmannPoint, ctx: &PlabicContext) -> Result<bool, BoundaryError> {
    Ok(first_vanishing_face(a, ctx)?.is_none())
}

/// The line `L_w = ⋂_{j ∈ S_w} H_j` for an internal white vertex.
pub fn reconstruction_line(a: &GrassmannPoint, ctx: &PlabicContext, w: VertexId) -> Result<Vector, BoundaryError> {
    let mut space = Subspace::full(ctx.k);
    for &j in &ctx.labels.vertices[w] {
        space = space.intersect(&necklace_hyperplane(a, &ctx.necklace, j));
    }
    if space.dim() != 1 {
        return Err(BoundaryError::LineDegenerate { vertex: w, dim: space.dim() });
    }
    Ok(primitive_integer(&space.basis()[0]))
}

/// The reconstruction map: boundary vectors are the columns of `A`, each
/// internal vector generates its line `L_w`, and each relation is the unique
/// (up to scale) linear relation among the neighbouring vectors, scaled to
/// a primitive integer vector with positive leading coefficient.
pub fn reconstruct_psi(a: &GrassmannPoint, ctx: &PlabicContext) -> Result<Configuration, BoundaryError> {
    if let Some(face) = first_vanishing_face(a, ctx)? {
        return Err(BoundaryError::NotInTG { face });
    }
    let g = &ctx.graph;
    let mut vectors: Vec<Option<Vector>> = vec![None; g.n_vertices()];
    for j in 1..=ctx.n {
        vectors[g.boundary_vertex(j)] = Some(a.column(j));
    }
    for w in g.internal_whites() {
        vectors[w] = Some(reconstruction_line(a, ctx, w)?);
    }
    let mut coeffs = vec![Scalar::zero(); g.n_edges()];
    for b in g.blacks() {
        let ring = g.rotation(b);
        let cols: Vec<Vector> = ring.iter().map(|&e| vectors[g.edge(e).white].clone().expect("white vector")).collect();
        let ker = Matrix::from_columns(ctx.k, &cols)?.kernel();
        if ker.len() != 1 || ker[0].iter().any(|x| x.is_zero()) {
            return Err(BoundaryError::NotACircuit { black: b });
        }
        for (&e, x) in ring.iter().zip(primitive_integer(&ker[0])) {
            coeffs[e] = x;
        }
    }
    Ok(Configuration::new(g.clone(), ctx.k, vectors, coeffs, Mode::Plabic)?)
}

/// Result of edge-weight recovery.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveredWeights {
    /// Positive weight per edge.
    pub weights: Vec<Scalar>,
    /// The scaling `λ` on the incoming edge of each non-source boundary
    /// vertex, keyed by boundary label.
    pub boundary_scales: BTreeMap<usize, Scalar>,
}

/// Normalizes a representative so that its Plücker coordinates are
/// nonnegative, and checks that they are positive exactly on the positroid.
fn totally_positive_rep(a: &GrassmannPoint, ctx: &PlabicContext) -> Result<GrassmannPoint, BoundaryError> {
    let p = a.plucker_vector();
    let lead = p.iter().find(|(_, v)| !v.is_zero()).map(|(_, v)| v.is_negative()).unwrap_or(false);
    let rep = if lead {
        let mut m = a.matrix().clone();
        for c in 0..m.cols() {
            let x = -m.get(0, c).clone();
            m.set(0, c, x);
        }
        GrassmannPoint::new(m)?
    } else {
        a.clone()
    };
    for (j, v) in rep.plucker_vector() {
        let ok = if ctx.positroid.contains(&j) { v.is_positive() } else { v.is_zero() };
        if !ok {
            return Err(BoundaryError::NonpositiveMinor { set: j });
        }
    }
    Ok(rep)
}

/// Recovers positive edge weights from a totally positive point of the
/// positroid cell. Working along the canonical orientation, each non-source
/// white `w` with incoming edge `e` from `b` satisfies
/// `ṽ_w = (1/wt(e)) Σ wt(bw′) ṽ_{w′}`; for internal `w` the gauge is fixed by
/// `wt(e) = 1` so the other weights are barycentric coordinates, and for
/// boundary `w` the vector `ṽ_w = σ_w v_w` is fixed and `wt(e) = λ` is the
/// factor making `λ ṽ_w` a convex combination.
pub fn recover_edge_weights(a: &GrassmannPoint, ctx: &PlabicContext) -> Result<RecoveredWeights, BoundaryError> {
    let a = totally_positive_rep(a, ctx)?;
    let g = &ctx.graph;
    let o = &ctx.orientation;
    let psi = reconstruct_psi(&a, ctx)?;
    let order = o.topological_order(g).ok_or(BoundaryError::Plabic(PlabicError::NotReduced))?;
    let mut tilde: Vec<Option<Vector>> = vec![None; g.n_vertices()];
    for &j in ctx.i1() {
        let v = a.column(j);
        tilde[g.boundary_vertex(j)] = Some(if ctx.sigma(j) < 0 { vscale(&-Scalar::one(), &v) } else { v });
    }
    let mut weights = vec![Scalar::zero(); g.n_edges()];
    let mut scales = BTreeMap::new();
    for &w in &order {
        if g.color(w) != crate::surface_graph::Color::White || tilde[w].is_some() {
            continue;
        }
        let e = o.incoming(g, w).ok_or(BoundaryError::Plabic(PlabicError::NotReduced))?;
        let b = g.edge(e).black;
        let upstream: Vec<EdgeId> = g.rotation(b).iter().copied().filter(|&f| f != e).collect();
        let cols: Vec<Vector> =
            upstream.iter().map(|&f| tilde[g.edge(f).white].clone().expect("upstream first")).collect();
        let target = match g.vertex(w).boundary {
            Some(j) => {
                let v = a.column(j);
                if ctx.sigma(j) < 0 {
                    vscale(&-Scalar::one(), &v)
                } else {
                    v
                }
            }
            None => psi.vector(w).clone(),
        };
        let c = Matrix::from_columns(ctx.k, &cols)?.solve(&target).ok_or(BoundaryError::NotACircuit { black: b })?;
        let total: Scalar = c.iter().fold(Scalar::zero(), |acc, x| acc + x);
        if total.is_zero() {
            return Err(BoundaryError::NotACircuit { black: b });
        }
        let lambda = total.recip();
        for (&f, x) in upstream.iter().zip(&c) {
            weights[f] = x * &lambda;
        }
        match g.vertex(w).boundary {
            Some(j) => {
                weights[e] = lambda.clone();
                scales.insert(j, lambda);
                tilde[w] = Some(target);
            }
            None => {
                weights[e] = Scalar::one();
                tilde[w] = Some(vscale(&lambda, &target));
            }
        }
    }
    // Edges at source boundary vertices and any untouched edges keep weight
    // one only if they were never assigned; every edge enters some white
    // vertex or leaves one towards a black vertex, so all are assigned.
    debug_assert!(weights.iter().all(|w| !w.is_zero()));
    Ok(RecoveredWeights { weights, boundary_scales: scales })
}

/// Sets of whites (as vertex ids) of size `k` with no almost perfect
/// matching avoiding them.
pub fn unmatchable_white_sets(g: &SurfaceGraph, k: usize) -> Vec<Vec<VertexId>> {
    let whites = g.whites();
    k_subsets(whites.len(), k)
        .into_iter()
        .map(|s| s.iter().map(|&i| whites[i - 1]).collect::<Vec<_>>())
        .filter(|s| crate::surface_graph::matching_avoiding(g, s, |_| true).is_none())
        .collect()
}

/// Whites lying strictly to the left of zigzag `j` (not on it).
pub fn whites_left_of_zigzag(ctx: &PlabicContext, j: usize) -> BTreeSet<VertexId> {
    let g = &ctx.graph;
    let path = &g.zigzags().paths[j - 1];
    let on: BTreeSet<VertexId> = path.darts.iter().flat_map(|d| [g.tail(*d), g.head(*d)]).collect();
    g.whites()
        .into_iter()
        .filter(|w| !on.contains(w) && ctx.labels.vertices[*w].contains(&j))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_core::{find_system, gauge_equal, parity_sign};
    use crate::exact_linalg::{q, qf, qv, random_positive};
    use crate::fixtures;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_weights(g: &SurfaceGraph, rng: &mut ChaCha8Rng) -> Vec<Scalar> {
        (0..g.n_edges()).map(|_| random_positive(rng)).collect()
    }

    fn vandermonde(rng: &mut ChaCha8Rng, k: usize, n: usize) -> GrassmannPoint {
        let mut t = Scalar::zero();
        let cols: Vec<Vector> = (0..n)
            .map(|_| {
                t += qf(rng.gen_range(1..20), rng.gen_range(1..5));
                let mut p = Scalar::one();
                (0..k)
                    .map(|_| {
                        let x = p.clone();
                        p *= &t;
                        x
                    })
                    .collect()
            })
            .collect();
        GrassmannPoint::new(Matrix::from_columns(k, &cols).unwrap()).unwrap()
    }

    #[test]
    fn plucker_round_trip() {
        let a = GrassmannPoint::new(Matrix::from_i64(&[&[1, 0, -1, 2], &[0, 1, 3, 1]])).unwrap();
        let b = GrassmannPoint::from_plucker(4, 2, &a.plucker_vector()).unwrap();
        assert!(a.same_point(&b));
        let mut bad = a.plucker_vector();
        *bad.get_mut(&vec![1, 2]).unwrap() += q(1);
        assert_eq!(GrassmannPoint::from_plucker(4, 2, &bad), Err(BoundaryError::NotPlucker));
    }

    #[test]
    fn unit_weights_count_matchings() {
        let g = fixtures::gr36().graph;
        let ones = vec![q(1); g.n_edges()];
        let a = boundary_measurement_matchings(&g, &ones).unwrap();
        let p = a.plucker_vector();
        let lead = p[&vec![1, 2, 3]].clone();
        let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for m in almost_perfect_matchings(&g).unwrap() {
            *counts.entry(unused_boundary(&g, &m)).or_default() += 1;
        }
        let base = Scalar::from_integer(counts[&vec![1, 2, 3]].into());
        for (j, v) in p {
            assert_eq!(v / &lead * &base, Scalar::from_integer(counts[&j].into()));
        }
    }

    #[test]
    fn single_edge_measurement() {
        let mut b = crate::surface_graph::PlanarBuilder::new();
        let v1 = b.boundary_vertex("1", 0, 100);
        let v2 = b.boundary_vertex("2", 0, -100);
        let blk = b.vertex("b", crate::surface_graph::Color::Black, 0, 0);
        b.edge(blk, v1);
        b.edge(blk, v2);
        let g = b.build().unwrap();
        let a = boundary_measurement_matchings(&g, &[q(2), q(3)]).unwrap();
        // Δ_1 = wt(b–2) = 3 and Δ_2 = wt(b–1) = 2.
        assert_eq!(a.plucker(&[1]).unwrap() * q(2), a.plucker(&[2]).unwrap() * q(3));
    }

    #[test]
    fn matchings_paths_and_restriction_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for fx in fixtures::plabic_test_graphs() {
            let ctx = PlabicContext::new(&fx.graph).unwrap();
            for _ in 0..10 {
                let w: Vec<Scalar> =
                    (0..fx.graph.n_edges()).map(|_| crate::exact_linalg::random_nonzero(&mut rng)).collect();
                let by_matchings = boundary_measurement_matchings(&fx.graph, &w).unwrap();
                let by_paths = boundary_measurement_paths(&ctx, &w).unwrap();
                assert!(by_matchings.same_point(&by_paths), "{}", fx.name);
                let c = configuration_from_weights(&fx.graph, &w, &ctx.signs).unwrap();
                assert!(restrict_phi(&c).unwrap().same_point(&by_matchings), "{}", fx.name);
            }
        }
    }

    #[test]
    fn minor_identity_with_parity_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for fx in fixtures::plabic_test_graphs() {
            let g = &fx.graph;
            let w: Vec<Scalar> = (0..g.n_edges()).map(|_| crate::exact_linalg::random_nonzero(&mut rng)).collect();
            let c = configuration_from_weights(g, &w, &kasteleyn(g)).unwrap();
            let a = restrict_phi(&c).unwrap();
            let km = c.kasteleyn_matrix();
            let nw = km.cols();
            let mut ratio: Option<Scalar> = None;
            for j in k_subsets(fx.graph.n_boundary(), c.k()) {
                let rest: Vec<usize> = (0..nw).filter(|i| !j.contains(&(i + 1))).collect();
                let rhs = parity_sign(&j) * minor(&km, &rest).unwrap();
                let lhs = a.plucker(&j).unwrap();
                assert_eq!(lhs.is_zero(), rhs.is_zero());
                if !lhs.is_zero() {
                    let r = lhs / rhs;
                    assert_eq!(ratio.get_or_insert(r.clone()), &r);
                }
            }
        }
    }

    fn kasteleyn(g: &SurfaceGraph) -> KasteleynSigns {
        crate::plabic_positroid::kasteleyn_signs(g).unwrap()
    }

    #[test]
    fn sources_are_the_standard_basis() {
        let ctx = PlabicContext::new(&fixtures::gr36().graph).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random_weights(&ctx.graph, &mut rng);
        let a = boundary_measurement_paths(&ctx, &w).unwrap();
        assert_eq!(ctx.i1(), &[1, 2, 3]);
        assert_eq!(a.column(1), qv(&[1, 0, 0]));
        assert_eq!(a.column(2), qv(&[0, -1, 0]));
        assert_eq!(a.column(3), qv(&[0, 0, 1]));
    }

    #[test]
    fn twist_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ctx = PlabicContext::new(&fixtures::gr36().graph).unwrap();
        let a = vandermonde(&mut rng, 3, 6);
        let t = right_twist(&a, &ctx.necklace).unwrap();
        for j in 1..=6 {
            for &i in &ctx.necklace[j - 1] {
                if i != j {
                    assert!(crate::exact_linalg::dot(&t.columns[j - 1], &a.column(i)).is_zero());
                }
            }
        }
    }

    #[test]
    fn reconstruction_example() {
        // v1 = e1, v2 = e2, v4 = e3, v5 = (1,1,1): the internal vector spans
        // ⟨v1, v2⟩ ∩ ⟨v4, v5⟩ = span (1, 1, 0).
        let ctx = PlabicContext::new(&fixtures::gr36().graph).unwrap();
        let a = GrassmannPoint::new(Matrix::from_columns(
            3,
            &[qv(&[1, 0, 0]), qv(&[0, 1, 0]), qv(&[2, -3, 5]), qv(&[0, 0, 1]), qv(&[1, 1, 1]), qv(&[7, 2, -4])],
        )
        .unwrap())
        .unwrap();
        let u = ctx.graph.find_label("u").unwrap();
        assert_eq!(reconstruction_line(&a, &ctx, u).unwrap(), qv(&[1, 1, 0]));
    }

    #[test]
    fn engineered_point_outside_t_g() {
        // Putting v5 on ⟨v1, v2⟩ keeps every necklace minor nonzero but
        // forces the internal line onto v5, so a relation coefficient and a
        // twisted face minor vanish.
        let ctx = PlabicContext::new(&fixtures::gr36().graph).unwrap();
        let cols = [qv(&[1, 0, 0]), qv(&[0, 1, 0]), qv(&[2, -3, 5]), qv(&[0, 0, 1]), qv(&[1, 1, 0]), qv(&[7, 2, -4])];
        let a = GrassmannPoint::new(Matrix::from_columns(3, &cols).unwrap()).unwrap();
        assert!(in_open_positroid(&a, &ctx).unwrap());
        let u = ctx.graph.find_label("u").unwrap();
        assert_eq!(reconstruction_line(&a, &ctx, u).unwrap(), qv(&[1, 1, 0]));
        assert!(!in_t_g(&a, &ctx).unwrap());
        assert!(matches!(reconstruct_psi(&a, &ctx), Err(BoundaryError::NotInTG { .. })));
    }

    #[test]
    fn measurement_images_are_in_t_g() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for fx in fixtures::plabic_test_graphs() {
            let ctx = PlabicContext::new(&fx.graph).unwrap();
            for _ in 0..5 {
                let w = random_weights(&fx.graph, &mut rng);
                let a = boundary_measurement_paths(&ctx, &w).unwrap();
                assert!(in_t_g(&a, &ctx).unwrap(), "{}", fx.name);
            }
        }
    }

    #[test]
    fn round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for fx in fixtures::plabic_test_graphs() {
            let ctx = PlabicContext::new(&fx.graph).unwrap();
            for _ in 0..5 {
                let w = random_weights(&fx.graph, &mut rng);
                let a = boundary_measurement_paths(&ctx, &w).unwrap();
                let c = reconstruct_psi(&a, &ctx).unwrap();
                assert!(restrict_phi(&c).unwrap().same_point(&a));
                assert!(c.is_circuit_configuration());
                let c2 = crate::config_core::random_gauge(&c, &mut rng);
                let back = reconstruct_psi(&restrict_phi(&c2).unwrap(), &ctx).unwrap();
                let system = find_system(&c).unwrap();
                assert!(gauge_equal(&back, &c2, &system).unwrap(), "{}", fx.name);
            }
        }
    }

    #[test]
    fn recovery_formula_on_gr36() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ctx = PlabicContext::new(&fixtures::gr36().graph).unwrap();
        let g = &ctx.graph;
        for _ in 0..5 {
            let a = vandermonde(&mut rng, 3, 6);
            let rec = recover_edge_weights(&a, &ctx).unwrap();
            assert!(rec.weights.iter().all(|w| w.is_positive()));
            let back = boundary_measurement_paths(&ctx, &rec.weights).unwrap();
            assert!(back.same_point(&a));
            let det = |i: usize, j: usize, l: usize| {
                Matrix::from_columns(3, &[a.column(i), a.column(j), a.column(l)]).unwrap().det().unwrap()
            };
            let (d145, d245) = (det(1, 4, 5), det(2, 4, 5));
            let a1 = &d245 / (&d145 + &d245);
            let a2 = &d145 / (&d145 + &d245);
            let bu = g.find_label("b_u").unwrap();
            let leg_white = |j: usize| {
                let v = g.boundary_vertex(j);
                let c = g.edge(g.rotation(v)[0]).black;
                g.edge(g.rotation(c).iter().copied().find(|&e| g.edge(e).white != v).unwrap()).white
            };
            let edge_to = |w: VertexId| g.rotation(bu).iter().copied().find(|&e| g.edge(e).white == w).unwrap();
            assert_eq!(rec.weights[edge_to(leg_white(1))], a1);
            assert_eq!(rec.weights[edge_to(leg_white(2))], a2);
        }
    }

    #[test]
    fn flow_lemma_and_dependence() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ctx = PlabicContext::new(&fixtures::gr36().graph).unwrap();
        let w = random_weights(&ctx.graph, &mut rng);
        let a = boundary_measurement_paths(&ctx, &w).unwrap();
        let c = reconstruct_psi(&a, &ctx).unwrap();
        for j in 1..=ctx.n {
            let h = necklace_hyperplane(&a, &ctx.necklace, j);
            for v in whites_left_of_zigzag(&ctx, j) {
                assert!(h.contains(c.vector(v)), "zigzag {j}");
            }
        }
        for s in unmatchable_white_sets(&ctx.graph, ctx.k) {
            let vs: Vec<Vector> = s.iter().map(|&v| c.vector(v).clone()).collect();
            assert!(Subspace::span(ctx.k, &vs).dim() < ctx.k);
        }
    }

    #[test]
    fn nonpositive_points_are_rejected() {
        let ctx = PlabicContext::new(&fixtures::gr24().graph).unwrap();
        let a = GrassmannPoint::new(Matrix::from_i64(&[&[1, 0, -1, 2], &[0, 1, 3, 1]])).unwrap();
        assert!(matches!(recover_edge_weights(&a, &ctx), Err(BoundaryError::NonpositiveMinor { .. })));
    }

    #[test]
    fn json_round_trip() {
        let a = GrassmannPoint::new(Matrix::from_i64(&[&[1, 0, -1, 2], &[0, 1, 3, 1]])).unwrap();
        let text = serde_json::to_string(&a.to_file(true)).unwrap();
        assert!(GrassmannPoint::from_json(&text).unwrap().same_point(&a));
    }
}
