//! Analytic catalogue of planar BV test maps with closed-form derivative
//! measures, restriction to polylines, and measure queries.

pub mod catalogue;
pub mod clip;
pub mod restrict;

pub use catalogue::{
    catalogue_entries, make_catalogue_map, CatalogueEntry, JumpArc, JumpBreak, Side, TestMap,
};
pub use clip::Rect;
pub use restrict::{restrict_to_polyline, OneDBV, OneDJump};

use crate::geom::Point2;
use crate::{Error, Result};

/// Which derivative measure to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureKind {
    Total,
    Ac,
    Sing,
    Directional(f64, f64),
}

/// Closed-form derivative-measure query on an axis-parallel rectangle:
/// |Df|(R), |D^a f|(R), |D^s f|(R), or |⟨Df, v⟩|(R) for a unit vector v.
///
/// The absolutely continuous part uses the Frobenius norm of the per-triangle
/// derivative; the directional part uses the Euclidean norm of the derivative
/// applied to v.
pub fn measure_query(f: &TestMap, r: &Rect, which: MeasureKind) -> Result<f64> {
    match which {
        MeasureKind::Total => Ok(ac_mass(f, r, None) + sing_mass(f, r, None)),
        MeasureKind::Ac => Ok(ac_mass(f, r, None)),
        MeasureKind::Sing => Ok(sing_mass(f, r, None)),
        MeasureKind::Directional(vx, vy) => {
            let n = (vx * vx + vy * vy).sqrt();
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::NonUnitVector(n));
            }
            Ok(ac_mass(f, r, Some((vx, vy))) + sing_mass(f, r, Some((vx, vy))))
        }
    }
}

fn ac_mass(f: &TestMap, r: &Rect, v: Option<(f64, f64)>) -> f64 {
    let mut total = 0.0;
    for t in 0..f.pl.domain.triangles.len() {
        let tri = f.pl.domain.triangle_points(t);
        let area = clip::triangle_rect_area(&tri, r);
        if area <= 0.0 {
            continue;
        }
        let m = f.pl.derivative(t);
        let density = match v {
            None => m.norm(),
            Some((vx, vy)) => (m * nalgebra::Vector2::new(vx, vy)).norm(),
        };
        total += area * density;
    }
    total
}

fn sing_mass(f: &TestMap, r: &Rect, v: Option<(f64, f64)>) -> f64 {
    let mut total = 0.0;
    for arc in &f.jumps {
        let Some((tlo, thi)) = clip::segment_rect_interval(&arc.seg, r) else {
            continue;
        };
        let factor = match v {
            None => 1.0,
            Some((vx, vy)) => (arc.normal.x * vx + arc.normal.y * vy).abs(),
        };
        total += factor * arc.mass_on(tlo, thi);
    }
    total
}

/// Brute-force disintegration oracle for the directional measure: slices R
/// into strips orthogonal to v (v must be an axis direction here), restricts
/// the map to the fiber through each strip midpoint, and sums fiber
/// variations times strip widths. Splits strips at the mesh breakpoints so
/// the piecewise-linear integrand is integrated exactly.
pub fn directional_by_slicing(
    f: &TestMap,
    r: &Rect,
    horizontal: bool,
    lines: usize,
) -> Result<f64> {
    use crate::geom::Polyline;
    let (lo, hi) = if horizontal { (r.y0, r.y1) } else { (r.x0, r.x1) };
    let mut knots: Vec<f64> = vec![lo, hi];
    for p in &f.pl.domain.vertices {
        let c = if horizontal { p.y } else { p.x };
        if lo < c && c < hi {
            knots.push(c);
        }
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut total = 0.0;
    for w in knots.windows(2) {
        let n = ((lines as f64 * (w[1] - w[0]) / (hi - lo)).ceil() as usize).max(1);
        for i in 0..n {
            let width = (w[1] - w[0]) / n as f64;
            let c = w[0] + (i as f64 + 0.5) * width;
            let line = if horizontal {
                Polyline::new(vec![Point2::new(r.x0, c), Point2::new(r.x1, c)])?
            } else {
                Polyline::new(vec![Point2::new(c, r.y0), Point2::new(c, r.y1)])?
            };
            let bv = restrict_to_polyline(f, &line)?;
            total += bv.var_total(1.0) * width;
        }
    }
    Ok(total)
}
