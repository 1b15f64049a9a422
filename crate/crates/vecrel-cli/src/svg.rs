//! SVG rendering of polygon trajectories. Presentation only: nothing reads
//! these files back.

use std::fmt::Write;

use num_traits::ToPrimitive;
use vecrel::exact_linalg::ProjectivePoint;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 20.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn affine(p: &ProjectivePoint) -> Option<(f64, f64)> {
    let v = p.dehomogenize()?;
    Some((v[0].to_f64()?, v[1].to_f64()?))
}

/// Draws every generation as a closed polygon in the affine chart `z = 1`,
/// scaled to fit a square canvas. Generations with a point at infinity are
/// skipped.
pub fn trajectory_svg(generations: &[Vec<ProjectivePoint>]) -> String {
    let polys: Vec<(usize, Vec<(f64, f64)>)> = generations
        .iter()
        .enumerate()
        .filter_map(|(i, g)| g.iter().map(affine).collect::<Option<Vec<_>>>().map(|p| (i, p)))
        .collect();
    let all = polys.iter().flat_map(|(_, p)| p.iter().copied());
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (x, y) in all {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let span = (x1 - x0).max(y1 - y0).max(f64::EPSILON);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let map = |(x, y): (f64, f64)| (MARGIN + (x - x0) * scale, SIZE - MARGIN - (y - y0) * scale);
    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#)
        .expect("string write");
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).expect("string write");
    for (i, poly) in &polys {
        let pts: Vec<String> = poly.iter().map(|&p| map(p)).map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
        writeln!(
            out,
            r#"<polygon points="{}" fill="none" stroke="{}" stroke-width="1.5"><title>generation {i}</title></polygon>"#,
            pts.join(" "),
            COLOURS[i % COLOURS.len()]
        )
        .expect("string write");
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use vecrel::exact_linalg::q;

    #[test]
    fn draws_one_polygon_per_finite_generation() {
        let square: Vec<ProjectivePoint> =
            [(0, 0), (1, 0), (1, 1), (0, 1)].iter().map(|&(x, y)| ProjectivePoint::affine(&[q(x), q(y)])).collect();
        let at_infinity = vec![ProjectivePoint::new(vec![q(1), q(0), q(0)]).unwrap()];
        let svg = trajectory_svg(&[square.clone(), at_infinity, square]);
        assert_eq!(svg.matches("<polygon").count(), 2);
        assert!(svg.contains("20.000,580.000"));
        assert!(svg.contains("generation 2"));
    }
}
