//! End-to-end tests of the `vecrel` binary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use vecrel::config_core::{chart_from_coordinates, System};
use vecrel::exact_linalg::q;
use vecrel::fixtures;

fn vecrel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vecrel")).args(args).env_remove("VECREL_SEED").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// The `Gr(2,4)` chart configuration at `(a, b, c, d) = (1, 2, 3, 5)`.
fn gr24_chart_json() -> String {
    let fx = fixtures::gr24();
    let g = &fx.graph;
    let e = |b: &str, w: &str| g.edges_between(g.find_label(b).unwrap(), g.find_label(w).unwrap())[0];
    let system = System::with_legs(g, [e("b1", "x2"), e("b2", "x4")], &fx.legs).unwrap();
    let coords: BTreeMap<usize, _> =
        [(e("b1", "3"), q(1)), (e("b1", "x4"), q(2)), (e("b2", "1"), q(3)), (e("b2", "x2"), q(5))].into_iter().collect();
    chart_from_coordinates(g, &system, &coords).unwrap().to_json()
}

fn gr36_weights(dir: &TempDir) -> (PathBuf, PathBuf) {
    let graph = stdout(&vecrel(&["fixture", "gr36"]));
    let parts: Value = serde_json::from_str(&graph).unwrap();
    let n = parts["edges"].as_array().unwrap().len();
    let weights: Vec<String> = (0..n).map(|i| format!("{}/{}", i % 5 + 1, i % 3 + 1)).collect();
    let file = serde_json::json!({ "graph": parts, "weights": weights });
    (write(dir, "gr36.json", &graph), write(dir, "w.json", &file.to_string()))
}

#[test]
fn restrict_gr24_chart() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.json", &gr24_chart_json());
    let out: Value = serde_json::from_str(&stdout(&vecrel(&["restrict", s(&config)]))).unwrap();
    let p = &out["plucker"];
    assert_eq!(p["1,2"], "1/1");
    assert_ne!(p["1,3"], "0/1");
    // v1 = e1, v2 = (−2/3, 1/9), v3 = e2, v4 = (1/3, −5/9), scaled so Δ12 = 1.
    assert_eq!(p["1,3"], "9/1");
    assert_eq!(p["2,3"], "-6/1");
}

#[test]
fn reconstruct_then_restrict_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let (graph, weights) = gr36_weights(&dir);
    let point = stdout(&vecrel(&["measure", s(&weights)]));
    let point_path = write(&dir, "p.json", &point);
    let config = stdout(&vecrel(&["reconstruct", s(&point_path), "--graph", s(&graph)]));
    let config_path = write(&dir, "c.json", &config);
    assert_eq!(stdout(&vecrel(&["restrict", s(&config_path)])), point);
}

#[test]
fn measurement_methods_and_recovery_agree() {
    let dir = TempDir::new().unwrap();
    let (graph, weights) = gr36_weights(&dir);
    let by_matchings = stdout(&vecrel(&["measure", s(&weights)]));
    let by_paths = stdout(&vecrel(&["measure", "--method", "paths", s(&weights)]));
    assert_eq!(by_matchings, by_paths);
    let point = write(&dir, "p.json", &by_matchings);
    let recovered = write(&dir, "r.json", &stdout(&vecrel(&["recover-weights", s(&point), "--graph", s(&graph)])));
    assert_eq!(stdout(&vecrel(&["measure", s(&recovered)])), by_matchings);
}

#[test]
fn moves_keep_the_boundary_point() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.json", &gr24_chart_json());
    let script = write(&dir, "s.json", r#"[{"op": "urban_renewal", "face": 0}]"#);
    let moved = write(&dir, "m.json", &stdout(&vecrel(&["moves", "apply", s(&script), "--config", s(&config)])));
    let before = stdout(&vecrel(&["restrict", s(&config)]));
    assert_eq!(stdout(&vecrel(&["restrict", s(&moved)])), before);
    let weights: Value = serde_json::from_str(&stdout(&vecrel(&["faceweights", s(&moved)]))).unwrap();
    assert_eq!(weights.as_array().unwrap().len(), 1);
}

#[test]
fn pentagram_two_steps_writes_json_and_svg() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("pent.json");
    stdout(&vecrel(&["dynamics", "pentagram", "--steps", "2", "--out", s(&out)]));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["steps"], 2);
    let generations = report["generations"].as_array().unwrap();
    assert_eq!(generations.len(), 3);
    assert!(generations.iter().all(|g| g.as_array().unwrap().len() == 5));
    let svg = std::fs::read_to_string(dir.path().join("pent.svg")).unwrap();
    assert_eq!(svg.matches("<polygon").count(), 3);
    let again = stdout(&vecrel(&["dynamics", "pentagram", "--steps", "2"]));
    assert_eq!(again, std::fs::read_to_string(&out).unwrap());
}

#[test]
fn pentagram_rejects_a_quadrilateral() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "quad.json", r#"{"points": [["0","0"],["2","0"],["2","2"],["0","2"]]}"#);
    let o = vecrel(&["dynamics", "pentagram", "--input", s(&input)]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["context"]["module"], "dynamics_drivers");
}

#[test]
fn seeded_dynamics_are_reproducible() {
    let a = stdout(&vecrel(&["--seed", "7", "dynamics", "qnet", "--steps", "2"]));
    let b = stdout(&vecrel(&["dynamics", "qnet", "--steps", "2", "--seed", "7"]));
    assert_eq!(a, b);
    let env = Command::new(env!("CARGO_BIN_EXE_vecrel"))
        .args(["dynamics", "qnet", "--steps", "2"])
        .env("VECREL_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(stdout(&env), a);
    assert!(String::from_utf8_lossy(&env.stderr).contains("seed: 7"));
    let other = stdout(&vecrel(&["--seed", "8", "dynamics", "qnet", "--steps", "2"]));
    assert_ne!(a, other);
    let report: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(report["instances"].as_array().unwrap().len(), 2);
}

#[test]
fn lattice_systems_run() {
    for system in ["laplace", "darboux"] {
        let report: Value = serde_json::from_str(&stdout(&vecrel(&["dynamics", system, "--steps", "1"]))).unwrap();
        assert_eq!(report["system"], system);
        assert!(!report["instances"][0]["output"].as_object().unwrap().is_empty());
    }
}

#[test]
fn graph_inspection() {
    let dir = TempDir::new().unwrap();
    let graph = write(&dir, "g.json", &stdout(&vecrel(&["fixture", "gr36"])));
    let summary: Value = serde_json::from_str(&stdout(&vecrel(&["validate", s(&graph)]))).unwrap();
    assert_eq!(summary["k"], 3);
    assert_eq!(summary["boundary"], 6);
    assert_eq!(summary["reduced"], true);
    let necklace: Value = serde_json::from_str(&stdout(&vecrel(&["necklace", s(&graph)]))).unwrap();
    assert_eq!(necklace["necklace"][0], serde_json::json!([1, 2, 3]));
    let positroid: Value = serde_json::from_str(&stdout(&vecrel(&["positroid", s(&graph)]))).unwrap();
    assert_eq!(positroid["bases"].as_array().unwrap().len(), 20);
    let zigzags: Value = serde_json::from_str(&stdout(&vecrel(&["zigzags", s(&graph)]))).unwrap();
    assert_eq!(zigzags["trip"], serde_json::json!([4, 5, 6, 1, 2, 3]));
    let faces: Value = serde_json::from_str(&stdout(&vecrel(&["faces", s(&graph)]))).unwrap();
    assert_eq!(faces.as_array().unwrap().iter().filter(|f| f["kind"] == "internal").count(), 4);
    let signs: Value = serde_json::from_str(&stdout(&vecrel(&["signs", s(&graph)]))).unwrap();
    assert_eq!(signs.as_array().unwrap().len(), summary["edges"].as_u64().unwrap() as usize);
    assert!(stdout(&vecrel(&["dot", s(&graph)])).contains("graph"));
}

#[test]
fn errors_are_structured() {
    let o = vecrel(&["validate", "/nonexistent/graph.json"]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_json(&o);
    assert_eq!(e["code"], 2);
    assert_eq!(e["context"]["command"], "validate");
    assert_eq!(e["context"]["file"], "/nonexistent/graph.json");

    let dir = TempDir::new().unwrap();
    let graph = write(&dir, "g.json", &stdout(&vecrel(&["fixture", "gr36"])));
    // Every necklace minor is nonzero but v5 lies on ⟨v1, v2⟩, so the point
    // is outside the reconstructible locus.
    let point = write(
        &dir,
        "p.json",
        r#"{"k":3,"n":6,"matrix":[["1","0","2","0","1","7"],["0","1","-3","0","1","2"],["0","0","5","1","0","-4"]]}"#,
    );
    let o = vecrel(&["reconstruct", s(&point), "--graph", s(&graph)]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_json(&o)["context"]["kind"], "degenerate");

    let o = vecrel(&["fixture", "nosuch"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn quick_check_suite_passes() {
    let out: Value = serde_json::from_str(&stdout(&vecrel(&["check", "all", "--quick"]))).unwrap();
    assert_eq!(out["passed"], true);
    assert_eq!(out["checks"].as_array().unwrap().len(), 12);
}
