//! Singular-support isolation and dyadic classification with measured
//! quantitative conclusions.

use nalgebra::{Matrix2, Vector2};

use crate::geom::{Point2, Vec2};
use crate::mapcat::clip::segment_rect_interval;
use crate::mapcat::{measure_query, MeasureKind, Rect, TestMap};
use crate::{Error, Result};

use super::{Category, SquareClassification, SquareInfo};

const K_MIN: u32 = 4;
const K_MAX: u32 = 12;

/// The dyadic square `(ix, iy)` of level `k` inside `Q(0,1)`, row-major from
/// the lower-left corner.
pub fn square_rect(k: u32, ix: usize, iy: usize) -> Rect {
    let h = 2.0f64.powi(1 - k as i32);
    Rect {
        x0: -1.0 + ix as f64 * h,
        y0: -1.0 + iy as f64 * h,
        x1: -1.0 + (ix + 1) as f64 * h,
        y1: -1.0 + (iy + 1) as f64 * h,
    }
}

pub(super) fn full_square() -> Rect {
    Rect {
        x0: -1.0,
        y0: -1.0,
        x1: 1.0,
        y1: 1.0,
    }
}

fn clamp_rect(r: Rect) -> Rect {
    Rect {
        x0: r.x0.max(-1.0),
        y0: r.y0.max(-1.0),
        x1: r.x1.min(1.0),
        y1: r.y1.min(1.0),
    }
}

/// Doubles a rectangle about its centre (then clamps to `Q(0,1)`).
pub(super) fn double_rect(r: &Rect) -> Rect {
    let (hx, hy) = ((r.x1 - r.x0) / 2.0, (r.y1 - r.y0) / 2.0);
    clamp_rect(Rect {
        x0: r.x0 - hx,
        y0: r.y0 - hy,
        x1: r.x1 + hx,
        y1: r.y1 + hy,
    })
}

fn rects_overlap(a: &Rect, b: &Rect) -> bool {
    a.x0 < b.x1 && b.x0 < a.x1 && a.y0 < b.y1 && b.y0 < a.y1
}

/// Finds a thin rectangle cover of the jump set whose absolutely continuous
/// mass is at most `eps` times the total, leaving at most an `eps` fraction
/// of the singular mass outside. Empty when the map has no singular part.
pub fn isolate_singular_support(f: &TestMap, eps: f64) -> Result<Vec<Rect>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Precondition(format!(
            "isolation scale must lie in (0,1), got {eps}"
        )));
    }
    let q = full_square();
    let sing_total = measure_query(f, &q, MeasureKind::Sing)?;
    if sing_total == 0.0 {
        return Ok(Vec::new());
    }
    let ac_total = measure_query(f, &q, MeasureKind::Ac)?;
    for j in 1..=40 {
        let w = 2.0f64.powi(-j);
        let cover: Vec<Rect> = f
            .jumps
            .iter()
            .map(|arc| {
                let (a, b) = (arc.seg.a, arc.seg.b);
                clamp_rect(Rect {
                    x0: a.x.min(b.x) - w,
                    y0: a.y.min(b.y) - w,
                    x1: a.x.max(b.x) + w,
                    y1: a.y.max(b.y) + w,
                })
            })
            .collect();
        let mut ac_cover = 0.0;
        let mut sing_cover = 0.0;
        for r in &cover {
            ac_cover += measure_query(f, r, MeasureKind::Ac)?;
            sing_cover += measure_query(f, r, MeasureKind::Sing)?;
        }
        // Overlapping cover rectangles only over-count, which is safe for
        // the upper bound being checked.
        if ac_cover <= eps * ac_total && sing_total - sing_cover.min(sing_total) <= eps * sing_total
        {
            return Ok(cover);
        }
    }
    Err(Error::Pipeline(format!(
        "could not isolate the singular support of '{}' at scale {eps}",
        f.name
    )))
}

/// A point of the square at which the map is differentiable: strictly inside
/// a mesh triangle and off every jump arc.
fn reference_point(f: &TestMap, r: &Rect) -> Point2 {
    let c = Point2::new((r.x0 + r.x1) / 2.0, (r.y0 + r.y1) / 2.0);
    let h = r.x1 - r.x0;
    let offsets = [
        (0.0, 0.0),
        (0.11, 0.07),
        (-0.13, 0.05),
        (0.06, -0.14),
        (-0.08, -0.09),
        (0.17, 0.13),
        (-0.19, 0.16),
        (0.04, 0.21),
    ];
    for (dx, dy) in offsets {
        let p = Point2::new(c.x + dx * h, c.y + dy * h);
        if is_differentiability_point(f, p) {
            return p;
        }
    }
    c
}

pub(super) fn is_differentiability_point(f: &TestMap, p: Point2) -> bool {
    for arc in &f.jumps {
        if crate::geom::point_on_segment(p, &arc.seg) {
            return false;
        }
    }
    let Some(t) = f.pl.domain.locate(p) else {
        return false;
    };
    // strictly interior to the triangle: positive distance to each side
    let tri = f.pl.domain.triangle_points(t);
    for e in 0..3 {
        let (a, b) = (tri[e], tri[(e + 1) % 3]);
        let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        let len = a.dist(b);
        if len == 0.0 || cross / len < 1e-12 {
            return false;
        }
    }
    true
}

/// True when the map is exactly the identity on the rectangle (no jump mass,
/// unit derivative on every overlapping triangle, fixed centre).
fn is_identity_on(f: &TestMap, r: &Rect) -> bool {
    for arc in &f.jumps {
        if segment_rect_interval(&arc.seg, r).is_some() {
            return false;
        }
    }
    let eye = Matrix2::identity();
    for t in 0..f.pl.domain.triangles.len() {
        let tri = f.pl.domain.triangle_points(t);
        if crate::mapcat::clip::triangle_rect_area(&tri, r) <= 0.0 {
            continue;
        }
        if (f.pl.derivative(t) - eye).norm() > 1e-13 {
            return false;
        }
        let a = tri[0];
        if f.pl.image[f.pl.domain.triangles[t][0]].dist(a) > 1e-13 {
            return false;
        }
    }
    true
}

/// Worst affine-approximation defect of `f` around `(w, grad)` sampled on an
/// `m × m` grid over the rectangle; `None` when some sample is unreachable.
fn approx_defect(f: &TestMap, r: &Rect, w: Point2, grad: &Matrix2<f64>, m: usize) -> Option<f64> {
    let fw = f.eval(w)?;
    let mut worst: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            let p = Point2::new(
                r.x0 + (i as f64 + 0.5) / m as f64 * (r.x1 - r.x0),
                r.y0 + (j as f64 + 0.5) / m as f64 * (r.y1 - r.y0),
            );
            let fp = f.eval(p)?;
            let lin = grad * Vector2::new(p.x - w.x, p.y - w.y);
            let d = Point2::new(fw.x + lin.x, fw.y + lin.y).dist(fp);
            worst = worst.max(d);
        }
    }
    Some(worst)
}

/// Polar-decomposition oscillation of the singular part around the square's
/// reference arc point, integrated against the jump mass on `2Q_i`.
fn polar_oscillation(f: &TestMap, twice: &Rect, anchor: (Vec2, Vec2)) -> f64 {
    let anchor_m = rank_one(anchor.0, anchor.1);
    let mut total = 0.0;
    for arc in &f.jumps {
        let Some((tlo, thi)) = segment_rect_interval(&arc.seg, twice) else {
            continue;
        };
        let steps = 64;
        for s in 0..steps {
            let a = tlo + (thi - tlo) * s as f64 / steps as f64;
            let b = tlo + (thi - tlo) * (s + 1) as f64 / steps as f64;
            if let Some((u, nu, _)) = arc.polar((a + b) / 2.0) {
                let dev = (rank_one(u, nu) - anchor_m).norm();
                total += dev * arc.mass_on(a, b);
            }
        }
    }
    total
}

fn rank_one(u: Vec2, v: Vec2) -> Matrix2<f64> {
    Matrix2::new(u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y)
}

/// Jump direction and normal of the arc segment carrying the square's
/// singular mass, evaluated mid-interval.
fn square_polar(f: &TestMap, r: &Rect) -> Option<(Vec2, Vec2)> {
    for arc in &f.jumps {
        if let Some((tlo, thi)) = segment_rect_interval(&arc.seg, r) {
            if arc.mass_on(tlo, thi) > 1e-14 {
                if let Some((u, nu, _)) = arc.polar((tlo + thi) / 2.0) {
                    return Some((u, nu));
                }
            }
        }
    }
    None
}

/// Classifies the `2^{2K}` dyadic squares, scanning `K` upward from 4 until
/// every quantitative conclusion verifies against the measure oracle, and
/// returning the first verifying level. `alpha` is the Jacobian threshold.
pub fn classify_dyadic(f: &TestMap, eps: f64, alpha: f64) -> Result<SquareClassification> {
    classify_dyadic_in(f, eps, alpha, K_MIN, K_MAX)
}

/// [`classify_dyadic`] with an explicit level range.
pub fn classify_dyadic_in(
    f: &TestMap,
    eps: f64,
    alpha: f64,
    k_min: u32,
    k_max: u32,
) -> Result<SquareClassification> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Precondition(format!(
            "classification scale must lie in (0,1), got {eps}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Precondition(format!(
            "Jacobian threshold must lie in (0,1), got {alpha}"
        )));
    }
    let cover = isolate_singular_support(f, eps)?;
    let mut last_failure = String::new();
    for k in k_min..=k_max.min(K_MAX) {
        match try_level(f, eps, alpha, k, &cover) {
            Ok(cls) => return Ok(cls),
            Err(Error::Pipeline(msg)) => last_failure = msg,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Pipeline(format!(
        "no dyadic level up to {} verifies the classification conclusions; last failure: {last_failure}",
        k_max.min(K_MAX)
    )))
}

fn try_level(
    f: &TestMap,
    eps: f64,
    alpha: f64,
    k: u32,
    cover: &[Rect],
) -> Result<SquareClassification> {
    let n = 1usize << k;
    let q = full_square();
    let ac_total = measure_query(f, &q, MeasureKind::Ac)?;

    let mut squares = Vec::with_capacity(n * n);
    let mut ac_f = 0.0;
    let mut ac_w = 0.0;
    let mut worst_polar: f64 = 0.0;
    for iy in 0..n {
        for ix in 0..n {
            let r = square_rect(k, ix, iy);
            let twice = double_rect(&r);
            let w = reference_point(f, &r);
            let grad = f.grad(w).unwrap_or_else(Matrix2::identity);
            let collar = ix == 0 || iy == 0 || ix == n - 1 || iy == n - 1;
            let in_cover = cover.iter().any(|c| rects_overlap(c, &r));
            let sing_here = measure_query(f, &r, MeasureKind::Sing)?;

            let category = if collar {
                Category::W
            } else if in_cover || sing_here > 0.0 {
                ac_f += measure_query(f, &r, MeasureKind::Ac)?;
                if sing_here > 1e-14 {
                    Category::E
                } else {
                    Category::F
                }
            } else if is_identity_on(f, &twice) {
                Category::Plain
            } else {
                let nrm = grad.norm();
                let det = grad.determinant();
                let bound = alpha.powi(4) * 2.0f64.powi(-(k as i32));
                let affine_ok = alpha <= nrm
                    && nrm <= 1.0 / alpha
                    && approx_defect(f, &twice, w, &grad, 17).map_or(false, |d| d <= bound);
                if affine_ok && det > alpha {
                    Category::G
                } else if affine_ok && det.abs() <= 1e-12 * nrm * nrm {
                    Category::T
                } else {
                    ac_w += measure_query(f, &r, MeasureKind::Ac)?;
                    Category::W
                }
            };

            let polar = if category == Category::E {
                let p = square_polar(f, &r);
                if let Some(anchor) = p {
                    let lhs = polar_oscillation(f, &twice, anchor);
                    let four = double_rect(&twice);
                    let rhs = eps * measure_query(f, &four, MeasureKind::Sing)?;
                    worst_polar = worst_polar.max(lhs - rhs);
                }
                p
            } else {
                None
            };
            squares.push(SquareInfo {
                category,
                w,
                grad,
                polar,
            });
        }
    }

    if ac_total > 0.0 && ac_f > 2.0 * eps * ac_total {
        return Err(Error::Pipeline(format!(
            "level {k}: singular-cover squares carry too much absolutely continuous mass \
             ({ac_f:.6e} > 2·{eps}·{ac_total:.6e})"
        )));
    }
    if worst_polar > 1e-12 {
        return Err(Error::Pipeline(format!(
            "level {k}: polar-decomposition oscillation exceeds budget by {worst_polar:.6e}"
        )));
    }
    if ac_w > 8.0 * eps * (ac_total + 1.0) {
        return Err(Error::Pipeline(format!(
            "level {k}: leftover squares carry too much absolutely continuous mass \
             ({ac_w:.6e} > 8·{eps}·({ac_total:.6e}+1))"
        )));
    }
    Ok(SquareClassification {
        k,
        eps,
        alpha,
        squares,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapcat::make_catalogue_map;
    use std::collections::BTreeMap;

    fn map(kind: &str, params: &[(&str, f64)]) -> TestMap {
        let p: BTreeMap<String, f64> = params
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        make_catalogue_map(kind, &p).unwrap()
    }

    #[test]
    fn identity_has_empty_isolation_cover() {
        let f = map("identity", &[]);
        assert!(isolate_singular_support(&f, 0.1).unwrap().is_empty());
    }

    #[test]
    fn affine_has_empty_isolation_cover() {
        let f = map("affine", &[("a11", 2.0), ("a22", 1.0)]);
        assert!(isolate_singular_support(&f, 0.1).unwrap().is_empty());
    }

    #[test]
    fn fracture_cover_is_a_thin_strip_with_small_ac_mass() {
        let f = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let cover = isolate_singular_support(&f, 0.1).unwrap();
        assert_eq!(cover.len(), 1);
        let r = &cover[0];
        assert!(r.x0 < 0.0 && 0.0 < r.x1);
        assert!(r.y0 <= -0.5 && 0.5 <= r.y1);
        let q = full_square();
        let ac_q = measure_query(&f, &q, MeasureKind::Ac).unwrap();
        let ac_cover = measure_query(&f, r, MeasureKind::Ac).unwrap();
        assert!(ac_cover <= 0.1 * ac_q);
        // the strip contains the whole jump set
        let sing_q = measure_query(&f, &q, MeasureKind::Sing).unwrap();
        let sing_cover = measure_query(&f, r, MeasureKind::Sing).unwrap();
        assert!((sing_cover - sing_q).abs() <= 1e-12 * sing_q);
    }

    #[test]
    fn affine_interior_squares_classify_as_definite_jacobian() {
        let f = map("affine", &[("a11", 2.0), ("a22", 1.0)]);
        let cls = classify_dyadic(&f, 0.2, 0.05).unwrap();
        let n = cls.n();
        // the core window is affine with determinant 2: squares well inside
        // [-0.5, 0.5]^2 must be G
        let mid = n / 2;
        assert_eq!(cls.square(mid, mid).category, Category::G);
        assert!(cls.count(Category::G) > 0);
        // categories partition
        assert_eq!(cls.squares.len(), n * n);
        // collar forced to W
        assert_eq!(cls.square(0, 0).category, Category::W);
    }

    #[test]
    fn rank_one_core_squares_classify_as_degenerate() {
        let f = map("rank_one", &[("d", 1.0)]);
        let cls = classify_dyadic(&f, 0.2, 0.05).unwrap();
        let n = cls.n();
        let mid = n / 2;
        let s = cls.square(mid, mid);
        assert_eq!(s.category, Category::T);
        assert!(s.grad.determinant().abs() <= 1e-12);
        assert!(cls.count(Category::T) > 0);
    }

    #[test]
    fn fracture_jump_squares_are_singular_with_constant_polar() {
        let f = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let cls = classify_dyadic(&f, 0.1, 0.05).unwrap();
        let n = cls.n();
        // squares adjacent to the seam at mid-height carry singular mass
        let s = cls.square(n / 2, n / 2);
        assert_eq!(s.category, Category::E);
        let (u, nu) = s.polar.unwrap();
        assert!((u.x.abs() - 1.0).abs() < 1e-12 && u.y.abs() < 1e-12);
        assert!((nu.x.abs() - 1.0).abs() < 1e-12 && nu.y.abs() < 1e-12);
        assert!(cls.count(Category::E) > 0);
    }

    #[test]
    fn identity_map_is_mostly_plain() {
        let f = map("identity", &[]);
        let cls = classify_dyadic(&f, 0.2, 0.05).unwrap();
        let n = cls.n();
        assert_eq!(
            cls.count(Category::Plain) + cls.count(Category::W),
            n * n
        );
        assert_eq!(cls.count(Category::W), 4 * n - 4);
    }
}
