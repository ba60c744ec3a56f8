//! Geodesic width integrals of a boundary map: for a direction `v`, the
//! domain is sliced into fibers parallel to `v`, each fiber's two boundary
//! points are pushed through the boundary map, and the geodesic distance
//! between their images inside the image region is integrated over the
//! fiber parameter.

use super::boundary::BoundaryData;
use crate::geom::{geodesic_distance, Point2, SimplePolygon, Vec2};
use crate::{Error, Result};

/// One fiber endpoint: its domain position, its image under the boundary
/// map, and its coordinate along the fiber direction.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FiberEnd {
    pub dom: Point2,
    pub img: Point2,
    pub along: f64,
}

/// Sampled geodesic widths in a direction and its perpendicular, with the
/// corresponding integrals.
#[derive(Debug, Clone)]
pub struct WidthProfile {
    pub v: (f64, f64),
    /// `(parameter, width)` samples for fibers parallel to `v`.
    pub along: Vec<(f64, f64)>,
    /// `(parameter, width)` samples for fibers parallel to `v` rotated 90°.
    pub across: Vec<(f64, f64)>,
    pub integral_along: f64,
    pub integral_across: f64,
}

fn unit(v: (f64, f64)) -> Result<Vec2> {
    let n = (v.0 * v.0 + v.1 * v.1).sqrt();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::NonUnitVector(n));
    }
    Ok(Vec2::new(v.0, v.1))
}

/// Both boundary points of the fiber `{p : <p, v_perp> = t}` through the
/// convex domain, ordered by their coordinate along `v`, together with
/// their boundary-map images. Returns `None` when the fiber misses the
/// domain or degenerates to a single point.
pub(crate) fn fiber_endpoints(bd: &BoundaryData, v: Vec2, t: f64) -> Option<(FiberEnd, FiberEnd)> {
    let w = v.perp();
    let n = bd.dom.len();
    let mut lo: Option<FiberEnd> = None;
    let mut hi: Option<FiberEnd> = None;
    for k in 0..n {
        let (a, b) = (bd.dom[k], bd.dom[(k + 1) % n]);
        let (ta, tb) = (a.sub(Point2::new(0.0, 0.0)).dot(w), b.sub(Point2::new(0.0, 0.0)).dot(w));
        if (ta - t) * (tb - t) > 0.0 || ta == tb {
            continue;
        }
        let s = (t - ta) / (tb - ta);
        let dom = a.lerp(b, s);
        let img = bd.img[k].lerp(bd.img[(k + 1) % n], s);
        let along = dom.sub(Point2::new(0.0, 0.0)).dot(v);
        let end = FiberEnd { dom, img, along };
        match (&mut lo, &mut hi) {
            (None, _) => lo = Some(end),
            (Some(l), None) => {
                if end.along < l.along {
                    hi = Some(*l);
                    lo = Some(end);
                } else {
                    hi = Some(end);
                }
            }
            (Some(l), Some(h)) => {
                if end.along < l.along {
                    *l = end;
                } else if end.along > h.along {
                    *h = end;
                }
            }
        }
    }
    match (lo, hi) {
        (Some(l), Some(h)) if h.along > l.along => Some((l, h)),
        _ => None,
    }
}

/// Sorted fiber parameters of all domain break-points along `v_perp`,
/// duplicates removed.
pub(crate) fn break_point_parameters(bd: &BoundaryData, v: Vec2) -> Vec<f64> {
    let w = v.perp();
    let mut ts: Vec<f64> = bd
        .dom
        .iter()
        .map(|p| p.sub(Point2::new(0.0, 0.0)).dot(w))
        .collect();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (a.abs() + b.abs() + 1.0));
    ts
}

/// Rejects directions for which a domain side runs parallel to the fibers
/// anywhere except at the extreme fiber parameters (for a convex domain a
/// parallel side can only sit at an extreme, where it is integrable; an
/// interior one would make the width integrand ill-defined).
fn check_parallel_sides(bd: &BoundaryData, v: Vec2, ts: &[f64]) -> Result<()> {
    let w = v.perp();
    let (tmin, tmax) = (ts[0], *ts.last().unwrap());
    let span = tmax - tmin;
    let n = bd.dom.len();
    for k in 0..n {
        let (a, b) = (bd.dom[k], bd.dom[(k + 1) % n]);
        let d = b.sub(a);
        if d.cross(v).abs() <= 1e-12 * d.norm() {
            let t = a.sub(Point2::new(0.0, 0.0)).dot(w);
            if t - tmin > 1e-12 * span && tmax - t > 1e-12 * span {
                return Err(Error::Precondition(format!(
                    "domain side {k} is parallel to the fiber direction \
                     strictly inside the projected interval"
                )));
            }
        }
    }
    Ok(())
}

struct WidthFn<'a> {
    bd: &'a BoundaryData,
    image: SimplePolygon,
    v: Vec2,
}

impl WidthFn<'_> {
    fn eval(&self, t: f64) -> Result<f64> {
        match fiber_endpoints(self.bd, self.v, t) {
            Some((l, h)) => Ok(geodesic_distance(&self.image, l.img, h.img)?.length),
            None => Ok(0.0),
        }
    }
}

/// Adaptive Simpson on `[a, b]` given endpoint and midpoint values.
#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &WidthFn,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let fl = f.eval(0.5 * (a + m))?;
    let fr = f.eval(0.5 * (m + b))?;
    let left = (m - a) / 6.0 * (fa + 4.0 * fl + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * fr + fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        return Ok(left + right + err / 15.0);
    }
    Ok(simpson_rec(f, a, m, fa, fl, fm, left, 0.5 * tol, depth - 1)?
        + simpson_rec(f, m, b, fm, fr, fb, right, 0.5 * tol, depth - 1)?)
}

fn simpson_interval(f: &WidthFn, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (fa, fm, fb) = (f.eval(a)?, f.eval(0.5 * (a + b))?, f.eval(b)?);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 24)
}

/// Integral over the fiber parameter of the geodesic distance between the
/// images of the two fiber endpoints, fibers parallel to the unit vector
/// `v`. Quadrature intervals break at the domain break-point parameters;
/// the adaptive tolerance is `1e-4 * value + 1e-9`.
pub fn width_integral(bd: &BoundaryData, v: (f64, f64)) -> Result<f64> {
    let v = unit(v)?;
    let ts = break_point_parameters(bd, v);
    check_parallel_sides(bd, v, &ts)?;
    let f = WidthFn {
        bd,
        image: bd.image_polygon(),
        v,
    };
    // First pass with a loose tolerance to scale the final budget.
    let span = ts.last().unwrap() - ts[0];
    let mut rough = 0.0;
    for w in ts.windows(2) {
        rough += simpson_interval(&f, w[0], w[1], 1e-3 * span)?;
    }
    let budget = 1e-4 * rough.abs() + 1e-9;
    let mut total = 0.0;
    for w in ts.windows(2) {
        let share = budget * (w[1] - w[0]) / span;
        total += simpson_interval(&f, w[0], w[1], share)?;
    }
    Ok(total)
}

/// Width profile in `v` and its perpendicular: integrals plus a fixed
/// 129-point sample of each width function for inspection and reports.
pub fn width_profile(bd: &BoundaryData, v: (f64, f64)) -> Result<WidthProfile> {
    let uv = unit(v)?;
    let across_v = (-v.1, v.0);
    let integral_along = width_integral(bd, v)?;
    let integral_across = width_integral(bd, across_v)?;
    let image = bd.image_polygon();
    let sample = |dir: Vec2| -> Result<Vec<(f64, f64)>> {
        let ts = break_point_parameters(bd, dir);
        let (a, b) = (ts[0], *ts.last().unwrap());
        let f = WidthFn {
            bd,
            image: image.clone(),
            v: dir,
        };
        (0..=128)
            .map(|k| {
                let t = a + (b - a) * k as f64 / 128.0;
                Ok((t, f.eval(t)?))
            })
            .collect()
    };
    Ok(WidthProfile {
        v,
        along: sample(uv)?,
        across: sample(uv.perp())?,
        integral_along,
        integral_across,
    })
}

/// Same integral with straight-line (Euclidean) distances in place of
/// geodesic ones; a lower bound on [`width_integral`], with equality for
/// convex image regions.
pub fn straight_width_integral(bd: &BoundaryData, v: (f64, f64)) -> Result<f64> {
    let v = unit(v)?;
    let ts = break_point_parameters(bd, v);
    check_parallel_sides(bd, v, &ts)?;
    // The Euclidean width is piecewise smooth between break-point
    // parameters; a fine Simpson grid per interval is plenty at 1e-6.
    let mut total = 0.0;
    for w in ts.windows(2) {
        let m = 256;
        let h = (w[1] - w[0]) / m as f64;
        let eval = |t: f64| -> f64 {
            fiber_endpoints(bd, v, t).map_or(0.0, |(l, hi)| l.img.dist(hi.img))
        };
        let mut s = eval(w[0]) + eval(w[1]);
        for k in 1..m {
            let t = w[0] + h * k as f64;
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * eval(t);
        }
        total += s * h / 3.0;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extend::boundary::square_identity;

    #[test]
    fn identity_square_width_is_four_in_both_axis_directions() {
        let bd = square_identity(1.0, 1);
        let wy = width_integral(&bd, (0.0, 1.0)).unwrap();
        let wx = width_integral(&bd, (1.0, 0.0)).unwrap();
        assert!((wy - 4.0).abs() < 1e-6, "wy = {wy}");
        assert!((wx - 4.0).abs() < 1e-6, "wx = {wx}");
    }

    /// Convex hexagonal domain whose boundary map sends the six
    /// break-points to the corners of an L-shaped region.
    fn l_shape_data() -> BoundaryData {
        let dom = vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(3.0, 1.0),
            Point2::new(2.5, 2.5),
            Point2::new(1.0, 3.0),
            Point2::new(-0.5, 1.5),
        ];
        let img = vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(2.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 2.0),
            Point2::new(0.0, 2.0),
        ];
        BoundaryData::new(dom, img).unwrap()
    }

    #[test]
    fn l_shape_width_matches_dense_fiber_sums() {
        let bd = l_shape_data();
        for v in [(1.0, 0.0), (0.0, 1.0)] {
            let fast = width_integral(&bd, v).unwrap();
            // Midpoint-rule oracle on a dense uniform fiber grid.
            let uv = Vec2::new(v.0, v.1);
            let ts = break_point_parameters(&bd, uv);
            let (a, b) = (ts[0], *ts.last().unwrap());
            let image = bd.image_polygon();
            let m = 4000;
            let h = (b - a) / m as f64;
            let mut brute = 0.0;
            for k in 0..m {
                let t = a + h * (k as f64 + 0.5);
                if let Some((l, hi)) = fiber_endpoints(&bd, uv, t) {
                    brute += geodesic_distance(&image, l.img, hi.img).unwrap().length * h;
                }
            }
            assert!(
                (fast - brute).abs() < 1e-3,
                "v = {v:?}: fast {fast} vs brute {brute}"
            );
        }
    }

    #[test]
    fn geodesic_width_dominates_straight_width() {
        let bd = l_shape_data();
        for v in [(1.0, 0.0), (0.0, 1.0)] {
            let geo = width_integral(&bd, v).unwrap();
            let straight = straight_width_integral(&bd, v).unwrap();
            assert!(geo >= straight - 1e-9, "v = {v:?}: {geo} < {straight}");
        }
        // Strict for the non-convex L-shape in the vertical direction:
        // fibers near the inner corner must route around it.
        let geo = width_integral(&bd, (0.0, 1.0)).unwrap();
        let straight = straight_width_integral(&bd, (0.0, 1.0)).unwrap();
        assert!(geo > straight + 1e-3, "{geo} vs {straight}");
    }

    #[test]
    fn convex_image_gives_equality_of_geodesic_and_straight_widths() {
        let bd = square_identity(1.0, 2);
        for v in [(1.0, 0.0), (0.6, 0.8)] {
            let geo = width_integral(&bd, v).unwrap();
            let straight = straight_width_integral(&bd, v).unwrap();
            assert!((geo - straight).abs() < 1e-5, "v = {v:?}: {geo} vs {straight}");
        }
    }

    #[test]
    fn profile_reports_both_directions() {
        let bd = square_identity(1.0, 1);
        let prof = width_profile(&bd, (1.0, 0.0)).unwrap();
        assert!((prof.integral_along - 4.0).abs() < 1e-6);
        assert!((prof.integral_across - 4.0).abs() < 1e-6);
        assert_eq!(prof.along.len(), 129);
        // Interior fibers of the identity square all have width 2.
        assert!((prof.along[64].1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn non_unit_direction_is_rejected() {
        let bd = square_identity(1.0, 0);
        assert!(width_integral(&bd, (1.0, 1.0)).is_err());
    }
}
