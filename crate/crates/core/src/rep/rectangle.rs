//! Selection of a rectangle around a point whose boundary carries little
//! variation of the map, together with the induced admissible grid.

use crate::geom::{Point2, Polyline};
use crate::grid::{check_admissible, default_radii, Grid, StraightGrid};
use crate::mapcat::{measure_query, restrict_to_polyline, MeasureKind, Rect, TestMap};
use crate::{Error, Result};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct SmallTvRectangle {
    pub rect: Rect,
    /// Radius at which the variation ratio dropped below sigma/34.
    pub radius: f64,
    /// Variation of the restriction to the four sides (left, right, bottom,
    /// top).
    pub side_variations: [f64; 4],
    /// Straight grid generated by the rectangle sides; admissible for `f`.
    pub grid: StraightGrid,
}

/// Picks a rectangle around `p` with x-sides in (p.x - r, p.x - r/2) and
/// (p.x + r/2, p.x + r) (likewise in y) such that every side carries
/// variation below sigma/16, the whole boundary below sigma/4, and the
/// four side lines form an admissible straight grid.
///
/// Precondition: the variation ratio r^-1 |Df|(Q(p,r)) must drop below
/// sigma/34 somewhere along a dyadic radius scan.
pub fn select_small_tv_rectangle(
    f: &TestMap,
    p: Point2,
    sigma: f64,
    rng: &mut impl Rng,
) -> Result<SmallTvRectangle> {
    if !(sigma > 0.0) {
        return Err(Error::Precondition(format!("sigma = {sigma} must be > 0")));
    }
    let margin = (1.0 - p.x.abs()).min(1.0 - p.y.abs());
    if margin <= 0.0 {
        return Err(Error::Precondition(format!(
            "point ({}, {}) is not strictly inside the unit square",
            p.x, p.y
        )));
    }
    let r = find_small_ratio_radius(f, p, sigma, 0.9 * margin)?;

    let mut best = f64::INFINITY;
    for _ in 0..48 {
        let x1 = rng.gen_range(p.x - r..p.x - r / 2.0);
        let x2 = rng.gen_range(p.x + r / 2.0..p.x + r);
        let y1 = rng.gen_range(p.y - r..p.y - r / 2.0);
        let y2 = rng.gen_range(p.y + r / 2.0..p.y + r);
        let rect = Rect::new(x1, y1, x2, y2)?;
        let Ok(vars) = side_variations(f, &rect) else {
            continue;
        };
        let total: f64 = vars.iter().sum();
        best = best.min(vars.iter().cloned().fold(0.0, f64::max));
        if vars.iter().any(|&v| v >= sigma / 16.0) || total >= sigma / 4.0 {
            continue;
        }
        let grid = StraightGrid::new(vec![x1, x2], vec![y1, y2])?;
        let report = check_admissible(&Grid::Straight(grid.clone()), f, &default_radii())?;
        if !report.pass() {
            continue;
        }
        return Ok(SmallTvRectangle {
            rect,
            radius: r,
            side_variations: vars,
            grid,
        });
    }
    Err(Error::SamplingBudget(format!(
        "no rectangle with small boundary variation around ({}, {}); best side \
         variation {best} against budget {}",
        p.x,
        p.y,
        sigma / 16.0
    )))
}

/// First dyadic radius where the variation ratio drops below sigma/34.
fn find_small_ratio_radius(f: &TestMap, p: Point2, sigma: f64, r_max: f64) -> Result<f64> {
    let mut min_ratio = f64::INFINITY;
    for k in 0..=20 {
        let r = r_max * 0.5f64.powi(k);
        let q = Rect::square(p.x, p.y, r)?;
        let ratio = measure_query(f, &q, MeasureKind::Total)? / r;
        min_ratio = min_ratio.min(ratio);
        if ratio <= sigma / 34.0 {
            return Ok(r);
        }
    }
    Err(Error::Precondition(format!(
        "variation ratio around ({}, {}) never drops below sigma/34 = {}: \
         minimum seen {min_ratio}",
        p.x,
        p.y,
        sigma / 34.0
    )))
}

/// Variation of the restriction of `f` to each side of `rect`.
fn side_variations(f: &TestMap, rect: &Rect) -> Result<[f64; 4]> {
    let sides = [
        // left, right, bottom, top
        (Point2::new(rect.x0, rect.y0), Point2::new(rect.x0, rect.y1)),
        (Point2::new(rect.x1, rect.y0), Point2::new(rect.x1, rect.y1)),
        (Point2::new(rect.x0, rect.y0), Point2::new(rect.x1, rect.y0)),
        (Point2::new(rect.x0, rect.y1), Point2::new(rect.x1, rect.y1)),
    ];
    let mut vars = [0.0; 4];
    for (i, (a, b)) in sides.iter().enumerate() {
        let bv = restrict_to_polyline(f, &Polyline::new(vec![*a, *b])?)?;
        vars[i] = bv.var_total(1.0);
    }
    Ok(vars)
}
