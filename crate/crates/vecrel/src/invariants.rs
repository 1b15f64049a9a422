//! The invariant suite: twelve exact, seeded checks covering every module.
//!
//! Each check samples random instances, compares two independent
//! computations exactly, and reports a one-line summary. The suite backs
//! both the `check all` command and the acceptance tests.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boundary_maps::{
    boundary_measurement_matchings, boundary_measurement_paths, configuration_from_weights, in_open_positroid, in_t_g,
    reconstruct_psi, recover_edge_weights, restrict_phi, GrassmannPoint,
};
use crate::config_core::{
    chart_from_coordinates, configuration_from_coeffs, find_system, gauge_equal, parity_sign,
    random_chart_configuration, random_gauge, Configuration, KasteleynSigns, System,
};
use crate::dynamics_drivers::{
    circle_point, darboux_run, darboux_superurban, darboux_superurban_via_graph, ising_config, ising_conic_check,
    koenigs_check, laplace_darboux_step, laplace_darboux_step_via_graph, pentagram_step, pentagram_step_via_graph,
    qnet_face_weights, qnet_gentrify, qnet_gentrify_via_graph, qnet_y_evolution, random_darboux_hexahedron,
    random_laplace_patch, random_polygon, random_qnet_cube, resistor_to_config, ResistorPatch,
};
use crate::exact_linalg::{minor, q, qf, random_matrix, random_nonzero, random_positive, Matrix, Scalar, Vector};
use crate::fixtures::{self, Fixture};
use crate::local_moves::{face_correspondence, urban_renewal_edge_weights, urban_renewal_with_map, y_mutation};
use crate::plabic_positroid::{is_kasteleyn, k_subsets, kasteleyn_signs, unused_boundary, PlabicContext};
use crate::surface_graph::SurfaceGraph;

/// How many instances each check samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Effort {
    /// The full sample counts.
    Full,
    /// One tenth of the full counts (at least two).
    Quick,
}

impl Effort {
    fn count(self, full: usize) -> usize {
        match self {
            Effort::Full => full,
            Effort::Quick => (full / 10).max(2),
        }
    }
}

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    /// Check number, 1 to 12.
    pub id: usize,
    /// Short name.
    pub name: &'static str,
    /// Whether every sampled instance passed.
    pub passed: bool,
    /// Summary on success, first failure otherwise.
    pub detail: String,
    /// Wall-clock time; not serialized, so reports stay deterministic.
    #[serde(skip)]
    pub elapsed: Duration,
}

type Outcome = Result<String, String>;
type CheckFn = fn(&mut ChaCha8Rng, Effort) -> Outcome;

const CHECKS: [(&str, CheckFn); 12] = [
    ("Φ∘Ψ round trip", round_trip_phi_psi),
    ("Ψ∘Φ uniqueness up to gauge", uniqueness),
    ("urban renewal commutes with signed weights", commutation),
    ("face weights mutate", face_weight_mutation),
    ("matchings = restriction = paths", measurements_agree),
    ("minor identity with parity sign", minor_identity),
    ("Gr(2,4) chart example", chart_example),
    ("edge-weight recovery", recovery),
    ("dynamics pipelines agree", dynamics),
    ("Q-net face-weight evolution", qnet_evolution),
    ("resistor and Ising reductions", reductions),
    ("canonical orientation structure", orientation),
];

/// Number of checks in the suite.
pub const N_CHECKS: usize = CHECKS.len();

/// Runs check `id` (1-based) with a generator seeded from `seed` and `id`.
/// Panics inside the check are reported as failures.
///
/// # Panics
/// If `id` is not in `1..=N_CHECKS`.
pub fn run_check(id: usize, seed: u64, effort: Effort) -> CheckReport {
    let (name, check) = CHECKS[id - 1];
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(id as u64));
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(|| check(&mut rng, effort))).unwrap_or_else(|_| Err("panicked".into()));
    let elapsed = start.elapsed();
    let (passed, detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    CheckReport { id, name, passed, detail, elapsed }
}

/// Runs every check, one worker thread per check, and returns the reports
/// in check order.
pub fn run_all(seed: u64, effort: Effort) -> Vec<CheckReport> {
    std::thread::scope(|s| {
        let handles: Vec<_> = (1..=N_CHECKS).map(|id| s.spawn(move || run_check(id, seed, effort))).collect();
        handles.into_iter().map(|h| h.join().expect("checks catch their own panics")).collect()
    })
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>, what: &str) -> Result<T, String> {
    r.map_err(|e| format!("{what}: {e}"))
}

/// Counts rejected samples and gives up when they outnumber the target a
/// hundredfold.
struct Budget {
    left: usize,
}

impl Budget {
    fn new(target: usize) -> Self {
        Budget { left: 100 * target.max(1) }
    }

    fn reject(&mut self, what: &str) -> Result<(), String> {
        self.left = self.left.saturating_sub(1);
        ensure(self.left > 0, || format!("{what}: too many degenerate samples"))
    }
}

fn round_trip_graphs() -> Vec<Fixture> {
    vec![fixtures::gr36(), fixtures::gr24()]
}

fn random_nonzero_weights(g: &SurfaceGraph, rng: &mut ChaCha8Rng) -> Vec<Scalar> {
    (0..g.n_edges()).map(|_| random_nonzero(rng)).collect()
}

/// A configuration from random nonzero coefficients satisfying the circuit
/// condition.
fn random_circuit_config(g: &SurfaceGraph, rng: &mut ChaCha8Rng) -> Result<Configuration, String> {
    let mut budget = Budget::new(1);
    loop {
        let coeffs = random_nonzero_weights(g, rng);
        if let Ok(c) = configuration_from_coeffs(g, coeffs, None) {
            if c.is_circuit_configuration() {
                return Ok(c);
            }
        }
        budget.reject("random configuration")?;
    }
}

/// Totally positive point of `Gr(k, n)`: columns `(1, t, …, t^{k−1})` at
/// strictly increasing positive rationals `t`.
pub fn vandermonde_point<R: Rng + ?Sized>(rng: &mut R, k: usize, n: usize) -> GrassmannPoint {
    let mut t = Scalar::zero();
    let cols: Vec<Vector> = (0..n)
        .map(|_| {
            t += qf(rng.gen_range(1..20), rng.gen_range(1..5));
            let mut p = q(1);
            (0..k)
                .map(|_| {
                    let x = p.clone();
                    p *= &t;
                    x
                })
                .collect()
        })
        .collect();
    GrassmannPoint::new(Matrix::from_columns(k, &cols).expect("k rows")).expect("Vandermonde matrices have full rank")
}

fn round_trip_phi_psi(rng: &mut ChaCha8Rng, effort: Effort) -> Outcome {
    let target = effort.count(100);
    for fx in round_trip_graphs() {
        let ctx = ok(PlabicContext::new(&fx.graph), fx.name)?;
        let mut budget = Budget::new(target);
        let mut done = 0;
        while done < target {
            let Ok(a) = GrassmannPoint::new(random_matrix(rng, ctx.k, ctx.n)) else {
                budget.reject(fx.name)?;
                continue;
            };
            if !ok(in_open_positroid(&a, &ctx), "in_open_positroid")? || !ok(in_t_g(&a, &ctx), "in_t_g")? {
                budget.reject(fx.name)?;
                continue;
            }
            let c = ok(reconstruct_psi(&a, &ctx), "reconstruct_psi")?;
            let back = ok(restrict_phi(&c), "restrict_phi")?;
            ensure(back.same_point(&a), || format!("{}: Φ(Ψ(A)) ≠ A for {:?}", fx.name, a.matrix()))?;
            done += 1;
        }
    }
    Ok(format!("{target} points each on gr36 and gr24"))
}

fn uniqueness(rng: &mut ChaCha8Rng, effort: Effort) -> Outcome {
    let target = effort.count(100);
    for fx in round_trip_graphs() {
        let g = &fx.graph;
        let ctx = ok(PlabicContext::new(g), fx.name)?;
        let system = ok(find_system(&random_circuit_config(g, rng)?), "find_system")?;
        let mut budget = Budget::new(target);
        let mut done = 0;
        while done < target {
            let c = ok(random_chart_configuration(g, &system, rng), "chart")?;
            if !c.is_circuit_configuration() {
                budget.reject(fx.name)?;
                continue;
            }
            let c = random_gauge(&c, rng);
            let a = ok(restrict_phi(&c), "restrict_phi")?;
            let back = ok(reconstruct_psi(&a, &ctx), "reconstruct_psi")?;
            let s = ok(find_system(&c), "find_system")?;
            ensure(ok(gauge_equal(&back, &c, &s), "gauge_equal")?, || format!("{}: Ψ(Φ(c)) not gauge-equal", fx.name))?;
            done += 1;
        }
    }
    Ok(format!("{target} configurations each on gr36 and gr24"))
}

fn quad_faces(g: &SurfaceGraph) -> Vec<usize> {
    g.internal_faces().into_iter().filter(|&f| g.faces()[f].len() == 4).collect()
}

/// Kasteleyn signs on the renewed graph inherited from `signs`: unchanged
/// on old edges, `+1` on the spokes, and on the inner square
/// `s₂u₂ ↦ −ε_c`, `s₂u₁ ↦ ε_aε_bε_c`, `s₁u₁ ↦ −ε_a`, `s₁u₂ ↦ ε_aε_cε_d`.
pub fn renewed_signs(signs: &KasteleynSigns, face_edges: [usize; 4]) -> KasteleynSigns {
    let [ea, eb, ec, ed] = face_edges.map(|e| signs.sign(e));
    let mut out = signs.signs().to_vec();
    for e in face_edges {
        out[e] = 1;
    }
    out.extend([-ec, ea * eb * ec, -ea, ea * ec * ed]);
    KasteleynSigns::new(out)
}

fn commutation(rng: &mut ChaCha8Rng, effort: Effort) -> Outcome {
    let target = effort.count(50);
    let mut graphs = 0;
    for fx in fixtures::plabic_test_graphs() {
        let g = &fx.graph;
        let faces = quad_faces(g);
        if faces.is_empty() {
            continue;
        }
        graphs += 1;
        let signs = ok(kasteleyn_signs(g), "kasteleyn_signs")?;
        let mut budget = Budget::new(target);
        let mut done = 0;
        while done < target {
            let f = faces[done % faces.len()];
            let wt: Vec<Scalar> = (0..g.n_edges()).map(|_| random_positive(rng)).collect();
            let c = ok(configuration_from_weights(g, &wt, &signs), "configuration_from_weights")?;
            if !c.is_circuit_configuration() {
                budget.reject(fx.name)?;
                continue;
            }
            let (d, map) = ok(urban_renewal_with_map(&c, f), "urban_renewal")?;
            let (g2, wt2, map2) = ok(urban_renewal_edge_weights(g, &wt, f), "urban_renewal_edge_weights")?;
            ensure(&g2 == d.graph() && map2 == map, || format!("{}: renewed graphs differ", fx.name))?;
            let signs2 = renewed_signs(&signs, map.face_edges);
            ensure(is_kasteleyn(&g2, &signs2), || format!("{}: inherited signs are not Kasteleyn", fx.name))?;
            let expected = ok(configuration_from_weights(&g2, &wt2, &signs2), "configuration_from_weights")?;
            let s = ok(find_system(&d), "find_system")?;
            ensure(ok(gauge_equal(&d, &expected, &s), "gauge_equal")?, || {
                format!("{}: renewal does not commute at face {f}", fx.name)
            })?;
            done += 1;
        }
    }
    Ok(format!("{target} renewals on each of {graphs} graphs"))
}

fn face_weight_mutation(rng: &mut ChaCha8Rng, effort: Effort) -> Outcome {
    let target = effort.count(50);
    let graphs: Vec<Fixture> =
        fixtures::plabic_test_graphs().into_iter().filter(|fx| !quad_faces(&fx.graph).is_empty()).collect();
    let mut budget = Budget::new(target);
    let mut done = 0;
    while done < target {
        let fx = &graphs[done % graphs.len()];
        let g = &fx.graph;
        let faces = quad_faces(g);
        let f = faces[rng.gen_range(0..faces.len())];
        let c = random_circuit_config(g, rng)?;
        let before = ok(c.face_weights(), "face_weights")?;
        let (Ok((d, map)), Ok(expected)) = (urban_renewal_with_map(&c, f), y_mutation(g, &before, f)) else {
            budget.reject(fx.name)?;
            continue;
        };
        let corr = face_correspondence(g, d.graph(), &map);
        for (old, y) in &expected {
            let got = ok(d.face_weight(corr[old]), "face_weight")?;
            ensure(&got == y, || format!("{}: face {old} has {got}, expected {y}", fx.name))?;
        }
        let after = ok(d.face_weights(), "face_weights")?;
        ensure(after.len() == expected.len(), || format!("{}: internal face count changed", fx.name))?;
        done += 1;
    }
    Ok(format!("{target} renewals, every internal face"))
}

fn measurements_agree(rng: &mut ChaCha8Rng, effort: Effort) -> Outcome {
    let target = effort.count(100);
    let fxs = fixtures::plabic_test_graphs();
    let ctxs = fxs.iter().map(|fx| ok(PlabicContext::new(&fx.graph), fx.name)).collect::<Result<Vec<_>, _>>()?;
    let mut budget = Budget::new(target);
    let mut done = 0;
    while done < target {
        let i = done % ctxs.len();
        let (ctx, name) = (&ctxs[i], fxs[i].name);
        let g = &ctx.graph;
        let w = random_nonzero_weights(g, rng);
        let (Ok(by_matchings), Ok(c)) =
            (boundary_measurement_matchings(g, &w), configuration_from_weights(g, &w, &ctx.signs))
        else {
            budget.reject(name)?;
            continue;
        };
        let by_restriction = ok(restrict_phi(&c), "restrict_phi")?;
        let by_paths = ok(boundary_measurement_paths(ctx, &w), "boundary_measurement_paths")?;
        ensure(by_matchings.same_point(&by_restriction), || format!("{name}: matchings ≠ restriction"))?;
        ensure(by_matchings.same_point(&by_paths), || format!("{name}: matchings ≠ paths"))?;
        done += 1;
    }
    Ok(format!("{target} weight vectors across {} graphs", fxs.len()))
}

fn minor_identity(rng: &mut ChaCha8Rng, effort: Effort) -> Outcome {
    let target = effort.count(20);
    let fxs = fixtures::plabic_test_graphs();
    for fx in &fxs {
        let g = &fx.graph;
        for _ in 0..target {
            let c = random_circuit_config(g, rng)?;
            let a = c.boundary_matrix();
            let km = c.kasteleyn_matrix();
            let nw = km.cols();
            let mut ratio: Option<Scalar> = None;
            for j in k_subsets(g.n_boundary(), c.k()) {
                let cols: Vec<usize> = j.iter().map(|x| x - 1).collect();
                let rest: Vec<usize> = (0..nw).filter(|i| !j.contains(&(i + 1))).collect();
                let lhs = ok(minor(&a, &cols), "minor")?;
                let rhs = parity_sign(&j) * ok(minor(&km, &rest), "minor")?;
                ensure(lhs.is_zero() == rhs.is_zero(), || format!("{}: zero pattern differs at {j:?}", fx.name))?;
                if !lhs.is_zero() {
                    let r = lhs / rhs;
                    let first = ratio.get_or_insert_with(|| r.clone());
                    ensure(*first == r, || format!("{}: ratio differs at {j:?}", fx.name))?;
                }
            }
        }
    }
    Ok(format!("{target} configurations on each of {} graphs, all index sets", fxs.len()))
}

fn chart_example(_: &mut ChaCha8Rng, _: Effort) -> Outcome {
    let fx = fixtures::gr24();
    let g = &fx.graph;
    let label = |l: &str| g.find_label(l).ok_or_else(|| format!("no vertex {l}"));
    let edge = |b: &str, w: &str| -> Result<usize, String> {
        g.edges_between(label(b)?, label(w)?).first().copied().ok_or_else(|| format!("no edge {b}{w}"))
    };
    let system = ok(System::with_legs(g, [edge("b1", "x2")?, edge("b2", "x4")?], &fx.legs), "system")?;
    let (a, b, c, d) = (q(1), q(2), q(3), q(5));
    let coords: BTreeMap<usize, Scalar> = [
        (edge("b1", "3")?, a.clone()),
        (edge("b1", "x4")?, b.clone()),
        (edge("b2", "1")?, c.clone()),
        (edge("b2", "x2")?, d.clone()),
    ]
    .into_iter()
    .collect();
    let conf = ok(chart_from_coordinates(g, &system, &coords), "chart")?;
    let den = q(1) - &b * &d;
    let x2 = &b * &c / &den;
    let y2 = -&a / &den;
    let x4 = -&c / &den;
    let y4 = &a * &d / &den;
    ensure(x2 == qf(-2, 3), || format!("x2 formula gives {x2}"))?;
    let v2 = conf.vector(g.boundary_vertex(2));
    let v4 = conf.vector(g.boundary_vertex(4));
    ensure(v2 == &vec![x2.clone(), y2.clone()], || format!("v2 = {v2:?}"))?;
    ensure(v4 == &vec![x4.clone(), y4.clone()], || format!("v4 = {v4:?}"))?;
    ensure(conf.vector(g.boundary_vertex(1)) == &vec![q(1), q(0)], || "v1 is not e1".into())?;
    ensure(conf.vector(g.boundary_vertex(3)) == &vec![q(0), q(1)], || "v3 is not e2".into())?;
    Ok(format!("v2 = ({x2}, {y2}), v4 = ({x4}, {y4})"))
}

fn recovery(rng: &mut ChaCha8Rng, effort: Effort) -> Outcome {
    let target = effort.count(50);
    let ctx = ok(PlabicContext::new(&fixtures::gr36().graph), "gr36")?;
    for _ in 0..target {
        let a = vandermonde_point(rng, ctx.k, ctx.n);
        let rec = ok(recover_edge_weights(&a, &ctx), "recover_edge_weights")?;
        ensure(rec.weights.iter().all(Signed::is_positive), || "a recovered weight is not positive".into())?;
        let back = ok(boundary_measurement_paths(&ctx, &rec.weights), "boundary_measurement_paths")?;
        ensure(back.same_point(&a), || format!("recovery fails for {:?}", a.matrix()))?;
    }
    Ok(format!("{target} totally positive points of Gr(3,6)"))
}

fn dynamics(rng: &mut ChaCha8Rng, effort: Effort) -> Outcome {
    let target = effort.count(100);
    for i in 0..target {
        let a = random_polygon(rng, 5 + i % 4);
        let direct = ok(pentagram_step(&a), "pentagram_step")?;
        let via = ok(pentagram_step_via_graph(&a), "pentagram_step_via_graph")?;
        ensure(direct == via, || format!("pentagram instance {i} disagrees"))?;
    }
    for i in 0..target {
        let p = random_laplace_patch(rng, 7);
        let direct = ok(laplace_darboux_step(&p), "laplace_darboux_step")?;
        let via = ok(laplace_darboux_step_via_graph(&p), "laplace_darboux_step_via_graph")?;
        ensure(!via.is_empty(), || "Laplace graph pipeline produced no points".into())?;
        for (site, x) in &via {
            ensure(direct.get(site) == Some(x), || format!("Laplace instance {i} disagrees at {site:?}"))?;
        }
    }
    for i in 0..target {
        let cube = random_qnet_cube(rng);
        let direct = ok(qnet_gentrify(&cube), "qnet_gentrify")?;
        let via = ok(qnet_gentrify_via_graph(&cube), "qnet_gentrify_via_graph")?;
        ensure(direct == via, || format!("Q-net instance {i} disagrees"))?;
    }
    for i in 0..target {
        let patch = random_darboux_hexahedron(rng);
        let direct = ok(darboux_superurban(&patch), "darboux_superurban")?;
        let via = ok(darboux_superurban_via_graph(&patch), "darboux_superurban_via_graph")?;
        ensure(direct == via, || format!("Darboux instance {i} disagrees"))?;
        if i == 0 {
            let (_, t) = ok(darboux_run(&patch), "darboux_run")?;
            ensure(ok(t.weights_agree(), "weights")?, || "Darboux tracked weights disagree".into())?;
        }
    }
    Ok(format!("{target} instances each of pentagram, Laplace, Q-net and Darboux"))
}

fn qnet_evolution(rng: &mut ChaCha8Rng, effort: Effort) -> Outcome {
    let target = effort.count(50);
    for i in 0..target {
        let cube = random_qnet_cube(rng);
        let fw = ok(qnet_face_weights(&cube), "qnet_face_weights")?;
        let formula = ok(qnet_y_evolution(&fw.initial), "qnet_y_evolution")?;
        ensure(fw.tracked == formula, || format!("instance {i}: move composition ≠ formula"))?;
        ensure(fw.final_ == formula, || format!("instance {i}: geometry ≠ formula"))?;
    }
    Ok(format!("{target} cubes"))
}

fn reductions(rng: &mut ChaCha8Rng, effort: Effort) -> Outcome {
    let target = effort.count(50);
    for i in 0..target {
        let cs = [random_positive(rng), random_positive(rng), random_positive(rng)];
        let patch = ResistorPatch::star(&cs);
        let c = ok(resistor_to_config(&patch, rng), "resistor_to_config")?;
        let checks = ok(koenigs_check(&patch, &c), "koenigs_check")?;
        ensure(!checks.is_empty() && checks.iter().all(|k| k.passed()), || format!("resistor sample {i} fails"))?;
        ensure(checks.iter().all(|k| k.determinant == Some(q(0))), || format!("resistor sample {i}: det ≠ 0"))?;
    }
    for i in 0..target {
        let cs: [(Scalar, Scalar); 3] = std::array::from_fn(|_| {
            let den: i64 = rng.gen_range(2..=12);
            circle_point(&qf(rng.gen_range(1..den), den))
        });
        let (_, p) = ok(ising_config(&cs), "ising_config")?;
        ensure(ising_conic_check(&p.six()), || format!("Ising sample {i} fails the conic check"))?;
    }
    Ok(format!("{target} resistor and {target} Ising samples"))
}

fn orientation(_: &mut ChaCha8Rng, _: Effort) -> Outcome {
    let fxs = fixtures::plabic_test_graphs();
    for fx in &fxs {
        let g = &fx.graph;
        let ctx = ok(PlabicContext::new(g), fx.name)?;
        let o = &ctx.orientation;
        ensure(o.is_perfect(g), || format!("{}: not perfect", fx.name))?;
        ensure(o.topological_order(g).is_some(), || format!("{}: has a directed cycle", fx.name))?;
        ensure(unused_boundary(g, &o.matching()) == ctx.i1(), || {
            format!("{}: matching does not avoid exactly I_1", fx.name)
        })?;
        for f in g.internal_faces() {
            let half = g.faces()[f].len() / 2;
            let on = g.faces()[f].darts().iter().filter(|d| o.darts[d.edge].from_black).count();
            ensure(on == half - 1, || format!("{}: face {f} has {on} matched edges, expected {}", fx.name, half - 1))?;
        }
    }
    Ok(format!("{} graphs", fxs.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes_and_is_deterministic() {
        let a = run_all(7, Effort::Quick);
        assert_eq!(a.len(), N_CHECKS);
        for r in &a {
            assert!(r.passed, "check {} failed: {}", r.id, r.detail);
        }
        let b = run_check(7, 7, Effort::Quick);
        assert_eq!(b.detail, a[6].detail);
    }
}
