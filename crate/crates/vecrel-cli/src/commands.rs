//! Implementations of the subcommands. Each returns a serializable value;
//! the caller renders it as JSON.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use vecrel::boundary_maps::{
    boundary_measurement_matchings, boundary_measurement_paths, reconstruct_psi, recover_edge_weights, restrict_phi,
    GrassmannPoint, GrassmannPointFile,
};
use vecrel::config_core::{Configuration, ConfigurationFile};
use vecrel::dynamics_drivers::{
    darboux_label, darboux_superurban, darboux_superurban_via_graph, laplace_darboux_step,
    laplace_darboux_step_via_graph, pentagram_trajectory, qnet_gentrify, qnet_gentrify_via_graph, qnet_label,
    random_darboux_hexahedron, random_laplace_patch, random_qnet_cube,
};
use vecrel::exact_linalg::{format_scalar, parse_scalar, ProjectivePoint, Scalar};
use vecrel::fixtures;
use vecrel::invariants::{run_all, CheckReport, Effort};
use vecrel::local_moves::{apply_moves, Move};
use vecrel::plabic_positroid::{grassmann_necklace, kasteleyn_signs, plabic_k, positroid, reverse_necklace, PlabicContext};
use vecrel::surface_graph::{FaceKind, GraphParts, Step, Surface, SurfaceGraph};

use crate::error::CliError;

/// Reads a file, tagging failures with its name.
pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::from(e).in_file(&path.display().to_string()))
}

fn with_file<T, E: Into<CliError>>(r: Result<T, E>, path: &Path) -> Result<T, CliError> {
    r.map_err(|e| e.into().in_file(&path.display().to_string()))
}

/// Loads a graph file.
pub fn load_graph(path: &Path) -> Result<SurfaceGraph, CliError> {
    with_file(SurfaceGraph::from_json(&read_text(path)?), path)
}

/// Loads a configuration file.
pub fn load_config(path: &Path) -> Result<Configuration, CliError> {
    with_file(Configuration::from_json(&read_text(path)?), path)
}

/// Loads a Grassmann point file.
pub fn load_point(path: &Path) -> Result<GrassmannPoint, CliError> {
    with_file(GrassmannPoint::from_json(&read_text(path)?), path)
}

/// Edge weights on a graph, as stored on disk.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightsFile {
    /// The graph.
    pub graph: GraphParts,
    /// One weight per edge, in edge order.
    pub weights: Vec<String>,
    /// Boundary scalings from weight recovery, keyed by boundary label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_scales: Option<BTreeMap<String, String>>,
}

fn load_weights(path: &Path) -> Result<(SurfaceGraph, Vec<Scalar>), CliError> {
    let file: WeightsFile = with_file(serde_json::from_str(&read_text(path)?), path)?;
    let g = with_file(SurfaceGraph::from_parts(file.graph), path)?;
    if file.weights.len() != g.n_edges() {
        return Err(CliError::validation(format!("{} weights for {} edges", file.weights.len(), g.n_edges()))
            .in_file(&path.display().to_string()));
    }
    let w = file.weights.iter().map(|s| parse_scalar(s)).collect::<Result<Vec<_>, _>>();
    Ok((g, with_file(w, path)?))
}

/// A point with a canonical representative: the reduced row echelon form,
/// so equal points serialize identically.
pub fn canonical_point(a: &GrassmannPoint) -> Result<GrassmannPointFile, CliError> {
    Ok(GrassmannPoint::new(a.matrix().rref().0)?.to_file(true))
}

fn label(g: &SurfaceGraph, v: usize) -> String {
    g.vertex(v).label.clone()
}

fn point_strings(p: &ProjectivePoint) -> Vec<String> {
    p.normalized().iter().map(format_scalar).collect()
}

/// Summary produced by `validate`.
#[derive(Serialize)]
pub struct GraphSummary {
    surface: Surface,
    vertices: usize,
    edges: usize,
    blacks: usize,
    whites: usize,
    boundary: usize,
    faces: usize,
    internal_faces: usize,
    reduced: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
}

/// `validate`: parses a graph and summarizes it.
pub fn validate(path: &Path) -> Result<GraphSummary, CliError> {
    let g = load_graph(path)?;
    let disk = g.surface() == Surface::Disk;
    Ok(GraphSummary {
        surface: g.surface(),
        vertices: g.n_vertices(),
        edges: g.n_edges(),
        blacks: g.blacks().len(),
        whites: g.whites().len(),
        boundary: g.n_boundary(),
        faces: g.faces().len(),
        internal_faces: g.internal_faces().len(),
        reduced: g.is_reduced(),
        k: disk.then(|| plabic_k(&g)),
    })
}

/// One face in the `faces` listing.
#[derive(Serialize)]
pub struct FaceEntry {
    index: usize,
    kind: FaceKind,
    degree: usize,
    /// Clockwise walk: vertex labels, with `"|j"` for the boundary arc from
    /// `j` to `j + 1`.
    walk: Vec<String>,
}

/// `faces`: faces in canonical order with their clockwise walks.
pub fn faces(path: &Path) -> Result<Vec<FaceEntry>, CliError> {
    let g = load_graph(path)?;
    Ok(g.faces()
        .iter()
        .enumerate()
        .map(|(index, f)| FaceEntry {
            index,
            kind: f.kind,
            degree: f.darts().len(),
            walk: f
                .steps
                .iter()
                .map(|s| match s {
                    Step::Edge(d) => label(&g, g.tail(*d)),
                    Step::Arc(j) => format!("|{j}"),
                })
                .collect(),
        })
        .collect())
}

/// A zigzag path or cycle in the `zigzags` listing.
#[derive(Serialize)]
pub struct ZigzagEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    start: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    end: Option<usize>,
    vertices: Vec<String>,
}

/// Output of `zigzags`.
#[derive(Serialize)]
pub struct ZigzagReport {
    paths: Vec<ZigzagEntry>,
    cycles: Vec<ZigzagEntry>,
    trip: Vec<usize>,
}

/// `zigzags`: zigzag paths, cycles and the trip permutation.
pub fn zigzags(path: &Path) -> Result<ZigzagReport, CliError> {
    let g = load_graph(path)?;
    let z = g.zigzags();
    let entry = |p: &vecrel::surface_graph::Zigzag| ZigzagEntry {
        start: p.start,
        end: p.end,
        vertices: p.darts.iter().map(|&d| label(&g, g.tail(d))).chain(p.darts.last().map(|&d| label(&g, g.head(d)))).collect(),
    };
    Ok(ZigzagReport { paths: z.paths.iter().map(entry).collect(), cycles: z.cycles.iter().map(entry).collect(), trip: z.trip })
}

/// Output of `positroid`.
#[derive(Serialize)]
pub struct PositroidReport {
    n: usize,
    k: usize,
    bases: Vec<Vec<usize>>,
}

fn require_disk(g: &SurfaceGraph) -> Result<(), CliError> {
    if g.surface() != Surface::Disk {
        return Err(vecrel::plabic_positroid::PlabicError::NotDisk.into());
    }
    Ok(())
}

/// `positroid`: the bases realised by almost perfect matchings.
pub fn positroid_cmd(path: &Path) -> Result<PositroidReport, CliError> {
    let g = load_graph(path)?;
    require_disk(&g)?;
    Ok(PositroidReport { n: g.n_boundary(), k: plabic_k(&g), bases: positroid(&g).into_iter().collect() })
}

/// Output of `necklace`.
#[derive(Serialize)]
pub struct NecklaceReport {
    necklace: Vec<Vec<usize>>,
    reverse: Vec<Vec<usize>>,
}

/// `necklace`: the Grassmann necklace and its reverse.
pub fn necklace(path: &Path) -> Result<NecklaceReport, CliError> {
    let g = load_graph(path)?;
    require_disk(&g)?;
    let pos = positroid(&g);
    let n = g.n_boundary();
    Ok(NecklaceReport { necklace: grassmann_necklace(&pos, n)?, reverse: reverse_necklace(&pos, n)? })
}

/// One edge sign in the `signs` listing.
#[derive(Serialize)]
pub struct SignEntry {
    edge: usize,
    black: String,
    white: String,
    sign: i8,
}

/// `signs`: a Kasteleyn sign for every edge.
pub fn signs(path: &Path) -> Result<Vec<SignEntry>, CliError> {
    let g = load_graph(path)?;
    require_disk(&g)?;
    let s = kasteleyn_signs(&g)?;
    Ok((0..g.n_edges())
        .map(|e| SignEntry { edge: e, black: label(&g, g.edge(e).black), white: label(&g, g.edge(e).white), sign: s.sign(e) })
        .collect())
}

/// `moves apply`: replays a move script on a configuration.
pub fn moves_apply(script: &Path, config: &Path) -> Result<ConfigurationFile, CliError> {
    let moves: Vec<Move> = with_file(serde_json::from_str(&read_text(script)?), script)?;
    let c = load_config(config)?;
    Ok(with_file(apply_moves(&c, &moves), script)?.to_file())
}

/// One face weight in the `faceweights` listing.
#[derive(Serialize)]
pub struct FaceWeightEntry {
    face: usize,
    whites: Vec<String>,
    weight: String,
}

/// `faceweights`: the weight of every internal face.
pub fn faceweights(path: &Path) -> Result<Vec<FaceWeightEntry>, CliError> {
    let c = load_config(path)?;
    let g = c.graph();
    let weights = with_file(c.face_weights(), path)?;
    Ok(weights
        .into_iter()
        .map(|(f, y)| FaceWeightEntry {
            face: f,
            whites: g.face_cycle(f).whites.iter().map(|&w| label(g, w)).collect(),
            weight: format_scalar(&y),
        })
        .collect())
}

/// `restrict`: the boundary point of a configuration.
pub fn restrict(path: &Path) -> Result<GrassmannPointFile, CliError> {
    let c = load_config(path)?;
    canonical_point(&with_file(restrict_phi(&c), path)?)
}

/// How `measure` computes the boundary measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    /// Sum over almost perfect matchings.
    Matchings,
    /// Path sums in the canonical perfect orientation.
    Paths,
}

/// `measure`: the boundary measurement of an edge-weighted plabic graph.
pub fn measure(path: &Path, method: Method) -> Result<GrassmannPointFile, CliError> {
    let (g, w) = load_weights(path)?;
    let a = match method {
        Method::Matchings => with_file(boundary_measurement_matchings(&g, &w), path)?,
        Method::Paths => {
            let ctx = with_file(PlabicContext::new(&g), path)?;
            with_file(boundary_measurement_paths(&ctx, &w), path)?
        }
    };
    canonical_point(&a)
}

/// `reconstruct`: the configuration determined by a boundary point.
pub fn reconstruct(point: &Path, graph: &Path) -> Result<ConfigurationFile, CliError> {
    let a = load_point(point)?;
    let ctx = with_file(PlabicContext::new(&load_graph(graph)?), graph)?;
    Ok(with_file(reconstruct_psi(&a, &ctx), point)?.to_file())
}

/// `recover-weights`: positive edge weights whose measurement is the point.
pub fn recover_weights(point: &Path, graph: &Path) -> Result<WeightsFile, CliError> {
    let a = load_point(point)?;
    let g = load_graph(graph)?;
    let ctx = with_file(PlabicContext::new(&g), graph)?;
    let rec = with_file(recover_edge_weights(&a, &ctx), point)?;
    Ok(WeightsFile {
        graph: g.to_parts(),
        weights: rec.weights.iter().map(format_scalar).collect(),
        boundary_scales: Some(rec.boundary_scales.iter().map(|(j, s)| (j.to_string(), format_scalar(s))).collect()),
    })
}

/// `fixture`: one of the built-in example graphs.
pub fn fixture(name: &str) -> Result<GraphParts, CliError> {
    let fx = match name {
        "gr36" => fixtures::gr36(),
        "gr24" => fixtures::gr24(),
        "schubert24" => fixtures::schubert24(),
        other => return Err(CliError::validation(format!("unknown fixture {other}; expected gr36, gr24 or schubert24"))),
    };
    Ok(fx.graph.to_parts())
}

/// A polygon input file: affine `[x, y]` or homogeneous `[x, y, z]` points.
#[derive(Deserialize)]
pub struct PolygonFile {
    points: Vec<Vec<String>>,
}

/// The rational pentagon used when no polygon is given.
pub fn default_pentagon() -> Vec<ProjectivePoint> {
    [(0, 0), (2, 0), (3, 2), (1, 4), (-1, 2)]
        .iter()
        .map(|&(x, y)| ProjectivePoint::affine(&[Scalar::from_integer(x.into()), Scalar::from_integer(y.into())]))
        .collect()
}

/// Loads a polygon file.
pub fn load_polygon(path: &Path) -> Result<Vec<ProjectivePoint>, CliError> {
    let file: PolygonFile = with_file(serde_json::from_str(&read_text(path)?), path)?;
    file.points
        .iter()
        .map(|p| {
            let xs = p.iter().map(|s| parse_scalar(s)).collect::<Result<Vec<_>, _>>()?;
            match xs.len() {
                2 => Ok(ProjectivePoint::affine(&xs)),
                3 => Ok(ProjectivePoint::new(xs)?),
                n => Err(CliError::validation(format!("polygon points need 2 or 3 coordinates, got {n}"))),
            }
        })
        .collect::<Result<_, CliError>>()
        .map_err(|e| e.in_file(&path.display().to_string()))
}

/// Output of `dynamics pentagram`.
#[derive(Serialize)]
pub struct PentagramReport {
    system: &'static str,
    n: usize,
    steps: usize,
    /// Generation 0 is the input; every later generation was computed on
    /// the torus graph and matched against the direct construction.
    generations: Vec<Vec<Vec<String>>>,
}

/// `dynamics pentagram`: a checked trajectory. Returns the report and the
/// raw generations for plotting.
pub fn pentagram(polygon: &[ProjectivePoint], steps: usize) -> Result<(PentagramReport, Vec<Vec<ProjectivePoint>>), CliError> {
    let traj = pentagram_trajectory(polygon, steps)?;
    let report = PentagramReport {
        system: "pentagram",
        n: polygon.len(),
        steps,
        generations: traj.iter().map(|g| g.iter().map(point_strings).collect()).collect(),
    };
    Ok((report, traj))
}

/// One seeded instance of a lattice system.
#[derive(Serialize)]
pub struct Instance {
    index: usize,
    input: BTreeMap<String, Vec<String>>,
    output: BTreeMap<String, Vec<String>>,
}

/// Output of the lattice `dynamics` systems.
#[derive(Serialize)]
pub struct InstancesReport {
    system: &'static str,
    seed: u64,
    instances: Vec<Instance>,
}

/// The lattice systems run by `dynamics`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum System {
    /// The pentagram map on a polygon.
    Pentagram,
    /// One Laplace–Darboux step on a 7×7 window.
    Laplace,
    /// Q-net gentrification of a cube.
    Qnet,
    /// The superurban move of a discrete Darboux map.
    Darboux,
}

fn agree<K: Ord + Clone, F: Fn(&K) -> String>(
    direct: &BTreeMap<K, ProjectivePoint>,
    via: &BTreeMap<K, ProjectivePoint>,
    key: F,
    what: &str,
) -> Result<BTreeMap<String, Vec<String>>, CliError> {
    let mut out = BTreeMap::new();
    for (k, p) in via {
        if direct.get(k) != Some(p) {
            return Err(CliError::internal(format!("{what}: graph pipeline disagrees at {}", key(k))));
        }
        out.insert(key(k), point_strings(p));
    }
    Ok(out)
}

fn strings<K, F: Fn(&K) -> String>(m: &BTreeMap<K, ProjectivePoint>, key: F) -> BTreeMap<String, Vec<String>> {
    m.iter().map(|(k, p)| (key(k), point_strings(p))).collect()
}

/// `dynamics laplace|qnet|darboux`: `count` seeded random instances, each
/// run through the move sequence and checked against the direct
/// construction.
pub fn lattice_instances(system: System, count: usize, seed: u64) -> Result<InstancesReport, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instances = Vec::with_capacity(count);
    for index in 0..count {
        let (input, output) = match system {
            System::Laplace => {
                let p = random_laplace_patch(&mut rng, 7);
                let direct = laplace_darboux_step(&p)?;
                let via = laplace_darboux_step_via_graph(&p)?;
                let key = |&(i, j): &(i64, i64)| format!("{i},{j}");
                (strings(&p.points, key), agree(&direct, &via, key, "Laplace")?)
            }
            System::Qnet => {
                let cube = random_qnet_cube(&mut rng);
                let direct = qnet_gentrify(&cube)?;
                let via = qnet_gentrify_via_graph(&cube)?;
                if direct != via {
                    return Err(CliError::internal("Q-net: graph pipeline disagrees"));
                }
                let input = strings(&cube.points, |&s| qnet_label(s));
                (input, [(qnet_label([1, 1, 1]), point_strings(&via))].into_iter().collect())
            }
            System::Darboux => {
                let patch = random_darboux_hexahedron(&mut rng);
                let direct = darboux_superurban(&patch)?;
                let via = darboux_superurban_via_graph(&patch)?;
                let key = |&e: &([i64; 3], vecrel::dynamics_drivers::Axis)| darboux_label(e);
                (strings(&patch.points, key), agree(&direct, &via, key, "Darboux")?)
            }
            System::Pentagram => unreachable!("the pentagram map has its own driver"),
        };
        instances.push(Instance { index, input, output });
    }
    let system = match system {
        System::Laplace => "laplace",
        System::Qnet => "qnet",
        System::Darboux => "darboux",
        System::Pentagram => "pentagram",
    };
    Ok(InstancesReport { system, seed, instances })
}

/// Output of `check all`.
#[derive(Serialize)]
pub struct CheckAllReport {
    seed: u64,
    quick: bool,
    passed: bool,
    checks: Vec<CheckReport>,
}

/// `check all`: the invariant suite.
pub fn check_all(seed: u64, quick: bool) -> CheckAllReport {
    let checks = run_all(seed, if quick { Effort::Quick } else { Effort::Full });
    CheckAllReport { seed, quick, passed: checks.iter().all(|c| c.passed), checks }
}

impl CheckAllReport {
    /// Whether every check passed.
    pub fn passed(&self) -> bool {
        self.passed
    }

    /// Names of the failed checks.
    pub fn failures(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.passed).map(|c| format!("{} {}: {}", c.id, c.name, c.detail)).collect()
    }
}
