//! Standard example graphs.
//!
//! Every fixture is built from integer drawing coordinates with
//! [`PlanarBuilder`], so the rotation system is the one of the drawing.
//! Boundary vertices of degree two or more are turned into legs (boundary
//! vertex, new degree-two black vertex, new internal white vertex); the legs
//! are returned so that charts can pin their coefficients to `(1, −1)`.

use crate::surface_graph::{Color, Leg, PlanarBuilder, SurfaceGraph};

/// A fixture graph with the legs created by boundary preprocessing.
#[derive(Clone, Debug)]
pub struct Fixture {
    /// Short name used in reports.
    pub name: &'static str,
    /// The graph.
    pub graph: SurfaceGraph,
    /// Boundary legs.
    pub legs: Vec<Leg>,
}

fn finish(name: &'static str, b: PlanarBuilder) -> Fixture {
    let (graph, legs) = b.build_with_legs().expect("fixture graphs are valid");
    Fixture { name, graph, legs }
}

/// The reduced plabic graph for the top cell of `Gr(3,6)`: one internal
/// white vertex `u` and four black vertices with neighbourhoods
/// `{u,1,2}`, `{u,2,3,4}`, `{u,4,5}` and `{u,5,6,1}`. Boundary vertices
/// 1, 2, 4 and 5 have degree two in the drawing and become legs.
pub fn gr36() -> Fixture {
    let mut b = PlanarBuilder::new();
    let v1 = b.boundary_vertex("1", 0, 100);
    let v2 = b.boundary_vertex("2", 87, 50);
    let v3 = b.boundary_vertex("3", 87, -50);
    let v4 = b.boundary_vertex("4", 0, -100);
    let v5 = b.boundary_vertex("5", -87, -50);
    let v6 = b.boundary_vertex("6", -87, 50);
    let u = b.vertex("u", Color::White, 0, 0);
    let bu = b.vertex("b_u", Color::Black, 20, 35);
    let b4 = b.vertex("b4", Color::Black, 35, -20);
    let b5 = b.vertex("b5", Color::Black, -20, -35);
    let b6 = b.vertex("b6", Color::Black, -35, 20);
    for (blk, ws) in [
        (bu, vec![u, v1, v2]),
        (b4, vec![u, v2, v3, v4]),
        (b5, vec![u, v4, v5]),
        (b6, vec![u, v5, v6, v1]),
    ] {
        for w in ws {
            b.edge(blk, w);
        }
    }
    finish("gr36", b)
}

/// The plabic graph for the top cell of `Gr(2,4)` whose Kasteleyn matrix,
/// with boundary columns only, reads `[[0,1,a,b],[c,d,0,1]]`: black `b1`
/// is adjacent to 2, 3, 4 and black `b2` to 1, 2, 4. Boundary vertices 2 and
/// 4 become legs.
pub fn gr24() -> Fixture {
    let mut b = PlanarBuilder::new();
    let v1 = b.boundary_vertex("1", 0, 100);
    let v2 = b.boundary_vertex("2", 100, 0);
    let v3 = b.boundary_vertex("3", 0, -100);
    let v4 = b.boundary_vertex("4", -100, 0);
    let b1 = b.vertex("b1", Color::Black, 0, -30);
    let b2 = b.vertex("b2", Color::Black, 0, 30);
    for w in [v2, v3, v4] {
        b.edge(b1, w);
    }
    for w in [v1, v2, v4] {
        b.edge(b2, w);
    }
    finish("gr24", b)
}

/// A plabic graph whose positroid is the Schubert variety `Δ_12 = 0` in
/// `Gr(2,4)`: internal white `u`, blacks `β1 = {1,u}`, `β2 = {2,u}` and
/// `β3 = {u,3,4}`.
pub fn schubert24() -> Fixture {
    let mut b = PlanarBuilder::new();
    let v1 = b.boundary_vertex("1", -70, 70);
    let v2 = b.boundary_vertex("2", 70, 70);
    let v3 = b.boundary_vertex("3", 70, -70);
    let v4 = b.boundary_vertex("4", -70, -70);
    let u = b.vertex("u", Color::White, 0, 0);
    let p1 = b.vertex("beta1", Color::Black, -35, 35);
    let p2 = b.vertex("beta2", Color::Black, 35, 35);
    let p3 = b.vertex("beta3", Color::Black, 0, -35);
    b.edge(p1, v1);
    b.edge(p1, u);
    b.edge(p2, v2);
    b.edge(p2, u);
    b.edge(p3, u);
    b.edge(p3, v3);
    b.edge(p3, v4);
    finish("schubert24", b)
}

/// One boundary vertex joined to a degree-one black vertex (`k = 0`).
pub fn single_edge() -> Fixture {
    let mut b = PlanarBuilder::new();
    let v1 = b.boundary_vertex("1", 0, 100);
    let blk = b.vertex("b", Color::Black, 0, 0);
    b.edge(blk, v1);
    finish("single_edge", b)
}

/// Boundary vertex 1 joined through a degree-two black vertex to an
/// internal white vertex (`k = 1`).
pub fn boundary_path() -> Fixture {
    let mut b = PlanarBuilder::new();
    let v1 = b.boundary_vertex("1", 0, 100);
    let blk = b.vertex("b", Color::Black, 0, 50);
    let w = b.vertex("w", Color::White, 0, 0);
    b.edge(blk, v1);
    b.edge(blk, w);
    finish("boundary_path", b)
}

/// The reduced plabic test graphs used by the round-trip suites.
pub fn plabic_test_graphs() -> Vec<Fixture> {
    vec![gr36(), gr24(), schubert24()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface_graph::FaceKind;

    #[test]
    fn gr36_faces_and_trip() {
        let f = gr36();
        let g = &f.graph;
        let internal = g.faces().iter().filter(|f| f.kind == FaceKind::Internal).count();
        let external = g.faces().iter().filter(|f| f.kind != FaceKind::Internal).count();
        assert_eq!((internal, external), (4, 6));
        assert!(g.faces().iter().filter(|f| f.is_internal()).all(|f| f.len() == 4));
        let z = g.zigzags();
        assert_eq!(z.trip, vec![4, 5, 6, 1, 2, 3]);
        assert!(g.is_reduced());
        assert_eq!(f.legs.len(), 4);
        assert_eq!(g.blacks().len() + 3, g.whites().len());
    }

    #[test]
    fn gr24_shape() {
        let f = gr24();
        let g = &f.graph;
        assert!(g.is_reduced());
        assert_eq!(g.internal_faces().len(), 1);
        assert_eq!(g.blacks().len() + 2, g.whites().len());
        assert_eq!(g.zigzags().trip, vec![3, 4, 1, 2]);
    }

    #[test]
    fn schubert_shape() {
        let f = schubert24();
        assert!(f.legs.is_empty());
        assert_eq!(f.graph.internal_faces().len(), 0);
    }
}
