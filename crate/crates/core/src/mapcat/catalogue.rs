//! The analytic catalogue of planar BV test maps. Every member is an exact
//! piecewise-affine map on an explicit triangulation of Q(0,1) = [-1,1]²,
//! with vertices doubled along jump seams, so all derivative-measure queries
//! reduce to polygon clipping in closed form.

use crate::geom::pahomeo::PaHomeo;
use crate::geom::{Point2, Segment, Triangulation, Vec2};
use crate::{Error, Result};
use nalgebra::Matrix2;
use std::collections::BTreeMap;

/// Which one-sided limit to take on a jump seam.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

/// A straight jump arc: domain locus, unit normal from the minus to the plus
/// side, and piecewise-linear one-sided values along the arc.
#[derive(Debug, Clone)]
pub struct JumpArc {
    pub seg: Segment,
    pub normal: Vec2,
    /// Sorted parameters in [0,1] with one-sided values; linear between.
    pub breaks: Vec<JumpBreak>,
}

#[derive(Debug, Clone, Copy)]
pub struct JumpBreak {
    pub t: f64,
    pub minus: Point2,
    pub plus: Point2,
}

impl JumpArc {
    pub fn values(&self, t: f64) -> (Point2, Point2) {
        let t = t.clamp(0.0, 1.0);
        let i = self
            .breaks
            .windows(2)
            .position(|w| t <= w[1].t)
            .unwrap_or(self.breaks.len() - 2);
        let (a, b) = (self.breaks[i], self.breaks[i + 1]);
        let s = if b.t > a.t { (t - a.t) / (b.t - a.t) } else { 0.0 };
        (a.minus.lerp(b.minus, s), a.plus.lerp(b.plus, s))
    }

    /// Jump size |f⁺ - f⁻| at parameter t.
    pub fn size(&self, t: f64) -> f64 {
        let (m, p) = self.values(t);
        p.dist(m)
    }

    /// Polar factors of the jump density at parameter t: the unit opening
    /// direction u, the unit normal ν, and the density |f⁺ - f⁻|.
    pub fn polar(&self, t: f64) -> Option<(Vec2, Vec2, f64)> {
        let (m, p) = self.values(t);
        let d = p.sub(m);
        let size = d.norm();
        (size > 1e-15).then(|| (d.normalize(), self.normal, size))
    }

    /// ∫ |f⁺ - f⁻| dℋ¹ over the sub-arc with parameters in [tlo, thi].
    pub fn mass_on(&self, tlo: f64, thi: f64) -> f64 {
        let len = self.seg.length();
        let mut total = 0.0;
        for w in self.breaks.windows(2) {
            let lo = w[0].t.max(tlo);
            let hi = w[1].t.min(thi);
            if lo >= hi {
                continue;
            }
            total += adaptive_simpson(&|t| self.size(t), lo, hi, 1e-14, 24);
        }
        total * len
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    simpson_rec(f, a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, depth)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// An analytic planar BV test map on Q(0,1).
#[derive(Debug, Clone)]
pub struct TestMap {
    pub name: String,
    /// The absolutely continuous body: an exact PL map (not necessarily
    /// injective) on a triangulation with doubled seam vertices.
    pub pl: PaHomeo,
    pub jumps: Vec<JumpArc>,
    pub identity_on_boundary: bool,
}

impl TestMap {
    /// Pointwise value; on a jump seam an arbitrary one-sided value.
    pub fn eval(&self, p: Point2) -> Option<Point2> {
        self.pl.eval(p)
    }

    /// One-sided value at a point: nudges off the seam before evaluating.
    pub fn eval_side(&self, p: Point2, side: Side) -> Option<Point2> {
        for arc in &self.jumps {
            if crate::geom::point_on_segment(p, &arc.seg) {
                let sgn = if side == Side::Plus { 1.0 } else { -1.0 };
                let t = project_param(&arc.seg, p);
                let (m, pl) = arc.values(t);
                return Some(if sgn > 0.0 { pl } else { m });
            }
        }
        self.eval(p)
    }

    /// Approximate gradient, defined a.e. (constant per triangle).
    pub fn grad(&self, p: Point2) -> Option<Matrix2<f64>> {
        self.pl.domain.locate(p).map(|t| *self.pl.derivative(t))
    }

    /// Max deviation from the identity over sampled boundary points.
    pub fn boundary_identity_defect(&self, samples: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..samples {
            let s = 8.0 * i as f64 / samples as f64;
            let p = walk_square_boundary(s);
            if let Some(q) = self.eval(p) {
                worst = worst.max(q.dist(p));
            }
        }
        worst
    }
}

fn walk_square_boundary(s: f64) -> Point2 {
    // s in [0,8) walks the boundary of [-1,1]² CCW from (-1,-1)
    match s as usize / 2 {
        0 => Point2::new(-1.0 + (s - 0.0), -1.0),
        1 => Point2::new(1.0, -1.0 + (s - 2.0)),
        2 => Point2::new(1.0 - (s - 4.0), 1.0),
        _ => Point2::new(-1.0, 1.0 - (s - 6.0)),
    }
}

fn project_param(seg: &Segment, p: Point2) -> f64 {
    let d = seg.b.sub(seg.a);
    let l2 = d.dot(d);
    (p.sub(seg.a).dot(d) / l2).clamp(0.0, 1.0)
}

/// One documented catalogue entry for listings.
#[derive(Debug, Clone)]
pub struct CatalogueEntry {
    pub name: &'static str,
    pub params: &'static str,
}

pub fn catalogue_entries() -> Vec<CatalogueEntry> {
    vec![
        CatalogueEntry {
            name: "identity",
            params: "(none)",
        },
        CatalogueEntry {
            name: "affine",
            params: "a11 a12 a21 a22 bx by  (defaults I, 0); acts on the inner window [-1/2,1/2]², blended to the identity",
        },
        CatalogueEntry {
            name: "rank_one",
            params: "d (strength, 0<|d|<=1), vx vy (axis direction), w (window half-width, 0<w<=1/2)",
        },
        CatalogueEntry {
            name: "fracture",
            params: "d (opening, 0<d<=1), a (half-length, 0.1<a<1); jump set {0}x[-a,a], trapezoidal profile",
        },
        CatalogueEntry {
            name: "shear_blend",
            params: "s (shear strength, |s|<=2)",
        },
    ]
}

/// Builds a catalogue map by name. Unknown names, unknown parameter keys and
/// out-of-range values are rejected.
pub fn make_catalogue_map(kind: &str, params: &BTreeMap<String, f64>) -> Result<TestMap> {
    for (k, v) in params {
        if !v.is_finite() {
            return Err(Error::BadCatalogueParams(format!(
                "parameter {k} is not finite; the variation would be unbounded"
            )));
        }
    }
    match kind {
        "identity" => {
            expect_keys(params, &[])?;
            build_identity()
        }
        "affine" => {
            expect_keys(params, &["a11", "a12", "a21", "a22", "bx", "by"])?;
            let a = Matrix2::new(
                get(params, "a11", 1.0),
                get(params, "a12", 0.0),
                get(params, "a21", 0.0),
                get(params, "a22", 1.0),
            );
            let b = Vec2 {
                x: get(params, "bx", 0.0),
                y: get(params, "by", 0.0),
            };
            if a.iter().any(|x| x.abs() > 4.0) || b.norm() > 2.0 {
                return Err(Error::BadCatalogueParams(
                    "affine parameters out of range (|entries| <= 4, |b| <= 2)".into(),
                ));
            }
            build_affine(a, b)
        }
        "rank_one" => {
            expect_keys(params, &["d", "vx", "vy", "w"])?;
            let d = get(params, "d", 0.5);
            let w = get(params, "w", 0.5);
            let vx = get(params, "vx", 1.0);
            let vy = get(params, "vy", 0.0);
            let horizontal = match (vx, vy) {
                (x, y) if x.abs() == 1.0 && y == 0.0 => true,
                (x, y) if x == 0.0 && y.abs() == 1.0 => false,
                _ => {
                    return Err(Error::BadCatalogueParams(
                        "rank_one direction must be an axis direction".into(),
                    ))
                }
            };
            if !(0.0 < d.abs() && d.abs() <= 1.0) || !(0.0 < w && w <= 0.5) {
                return Err(Error::BadCatalogueParams(
                    "rank_one requires 0 < |d| <= 1 and 0 < w <= 1/2".into(),
                ));
            }
            build_rank_one(d, w, horizontal)
        }
        "fracture" => {
            expect_keys(params, &["d", "a"])?;
            let d = get(params, "d", 0.2);
            let a = get(params, "a", 0.5);
            if !(0.0 < d && d <= 1.0) || !(0.1 < a && a < 1.0) {
                return Err(Error::BadCatalogueParams(
                    "fracture requires 0 < d <= 1 and 0.1 < a < 1".into(),
                ));
            }
            build_fracture(d, a)
        }
        "shear_blend" => {
            expect_keys(params, &["s"])?;
            let s = get(params, "s", 0.8);
            if s.abs() > 2.0 || s == 0.0 {
                return Err(Error::BadCatalogueParams(
                    "shear_blend requires 0 < |s| <= 2".into(),
                ));
            }
            build_shear_blend(s)
        }
        other => Err(Error::BadCatalogueParams(format!(
            "unknown catalogue map {other}"
        ))),
    }
}

fn expect_keys(params: &BTreeMap<String, f64>, allowed: &[&str]) -> Result<()> {
    for k in params.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::BadCatalogueParams(format!("unknown parameter {k}")));
        }
    }
    Ok(())
}

fn get(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

/// Grid-cell PL interpolant builder. `seam_x`, when set, doubles every
/// vertex on that grid column; cells left of the seam reference the minus
/// copies and cells right of it the plus copies.
fn build_grid_map(
    name: &str,
    xs: &[f64],
    ys: &[f64],
    seam_x: Option<f64>,
    value: &dyn Fn(f64, f64, Side) -> Point2,
) -> Result<PaHomeo> {
    let nx = xs.len();
    let ny = ys.len();
    let mut vertices = Vec::new();
    let mut image = Vec::new();
    // index[(i, j, side)] with side 0 = minus/only copy, 1 = plus copy
    let mut index = vec![[usize::MAX; 2]; nx * ny];
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let on_seam = seam_x.map_or(false, |s| x == s);
            index[i * ny + j][0] = vertices.len();
            vertices.push(Point2::new(x, y));
            image.push(value(x, y, Side::Minus));
            if on_seam {
                index[i * ny + j][1] = vertices.len();
                vertices.push(Point2::new(x, y));
                image.push(value(x, y, Side::Plus));
            } else {
                index[i * ny + j][1] = index[i * ny + j][0];
            }
        }
    }
    let pick = |i: usize, j: usize, cell_x_lo: f64| -> usize {
        let side = match seam_x {
            Some(s) if xs[i] == s => usize::from(cell_x_lo >= s),
            _ => 0,
        };
        index[i * ny + j][side]
    };
    let mut triangles = Vec::new();
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            let lo = xs[i];
            let v00 = pick(i, j, lo);
            let v10 = pick(i + 1, j, lo);
            let v11 = pick(i + 1, j + 1, lo);
            let v01 = pick(i, j + 1, lo);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let tri = Triangulation::from_parts(vertices, triangles).map_err(|e| {
        Error::BadCatalogueParams(format!("{name}: bad grid triangulation: {e}"))
    })?;
    PaHomeo::new(tri, image)
}

fn build_identity() -> Result<TestMap> {
    let pl = build_grid_map("identity", &[-1.0, 1.0], &[-1.0, 1.0], None, &|x, y, _| {
        Point2::new(x, y)
    })?;
    Ok(TestMap {
        name: "identity".into(),
        pl,
        jumps: vec![],
        identity_on_boundary: true,
    })
}

fn build_affine(a: Matrix2<f64>, b: Vec2) -> Result<TestMap> {
    let grid = [-1.0, -0.5, 0.5, 1.0];
    let value = move |x: f64, y: f64, _: Side| {
        if x.abs() <= 0.5 && y.abs() <= 0.5 {
            Point2::new(a.m11 * x + a.m12 * y + b.x, a.m21 * x + a.m22 * y + b.y)
        } else {
            Point2::new(x, y)
        }
    };
    let pl = build_grid_map("affine", &grid, &grid, None, &value)?;
    Ok(TestMap {
        name: "affine".into(),
        pl,
        jumps: vec![],
        identity_on_boundary: true,
    })
}

fn build_rank_one(d: f64, w: f64, horizontal: bool) -> Result<TestMap> {
    // squashes the coordinate orthogonal to v by the factor 1-d on the core
    // window, blended back to the identity by a plateau along v; at d = 1
    // the core derivative is exactly the rank-one matrix v ⊗ v
    let squash = move |r: f64| {
        if r.abs() <= w {
            (1.0 - d) * r
        } else if r.abs() >= 0.75 {
            r
        } else {
            let s = (r.abs() - w) / (0.75 - w);
            (((1.0 - d) * w) * (1.0 - s) + 0.75 * s) * r.signum()
        }
    };
    let plateau = |s: f64| ((0.75 - s.abs()) / 0.25).clamp(0.0, 1.0);
    let mut across = vec![-1.0, -0.75, -w, 0.0, w, 0.75, 1.0];
    across.dedup_by(|a, b| a == b);
    let along = vec![-1.0, -0.75, -0.5, 0.0, 0.5, 0.75, 1.0];
    let (xs, ys) = if horizontal {
        (along, across)
    } else {
        (across, along)
    };
    let value = move |x: f64, y: f64, _: Side| {
        let (s, r) = if horizontal { (x, y) } else { (y, x) };
        let rr = r + (squash(r) - r) * plateau(s);
        if horizontal {
            Point2::new(x, rr)
        } else {
            Point2::new(rr, y)
        }
    };
    let pl = build_grid_map("rank_one", &xs, &ys, None, &value)?;
    Ok(TestMap {
        name: "rank_one".into(),
        pl,
        jumps: vec![],
        identity_on_boundary: true,
    })
}

/// Trapezoidal fracture profile: 1 on [-a+0.1, a-0.1], linear taper to 0 at
/// ±a, 0 outside.
fn fracture_profile(a: f64, y: f64) -> f64 {
    ((a - y.abs()) / 0.1).clamp(0.0, 1.0)
}

fn build_fracture(d: f64, a: f64) -> Result<TestMap> {
    let taper = |x: f64| (1.0 - x.abs() / 0.5).max(0.0);
    let value = move |x: f64, y: f64, side: Side| {
        let sgn = if x > 0.0 || (x == 0.0 && side == Side::Plus) {
            1.0
        } else {
            -1.0
        };
        Point2::new(x + sgn * 0.5 * d * fracture_profile(a, y) * taper(x), y)
    };
    let xs = vec![-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut ys = vec![-1.0, -a, -a + 0.1, 0.0, a - 0.1, a, 1.0];
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let pl = build_grid_map("fracture", &xs, &ys, Some(0.0), &value)?;
    let seg = Segment::new(Point2::new(0.0, -a), Point2::new(0.0, a))?;
    let mut breaks = Vec::new();
    for &y in &[-a, -a + 0.1, a - 0.1, a] {
        let t = (y + a) / (2.0 * a);
        let half = 0.5 * d * fracture_profile(a, y);
        breaks.push(JumpBreak {
            t,
            minus: Point2::new(-half, y),
            plus: Point2::new(half, y),
        });
    }
    Ok(TestMap {
        name: "fracture".into(),
        pl,
        jumps: vec![JumpArc {
            seg,
            normal: Vec2 { x: 1.0, y: 0.0 },
            breaks,
        }],
        identity_on_boundary: true,
    })
}

fn build_shear_blend(s: f64) -> Result<TestMap> {
    let hat = |y: f64| ((0.5 - y.abs()) / 0.5).max(0.0);
    let plateau = |x: f64| ((0.75 - x.abs()) / 0.25).clamp(0.0, 1.0);
    let xs = vec![-1.0, -0.75, -0.5, 0.5, 0.75, 1.0];
    let ys = vec![-1.0, -0.5, 0.0, 0.5, 1.0];
    let value = move |x: f64, y: f64, _: Side| Point2::new(x + s * hat(y) * plateau(x), y);
    let pl = build_grid_map("shear_blend", &xs, &ys, None, &value)?;
    Ok(TestMap {
        name: "shear_blend".into(),
        pl,
        jumps: vec![],
        identity_on_boundary: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(kind: &str, kv: &[(&str, f64)]) -> TestMap {
        let params: BTreeMap<String, f64> =
            kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        make_catalogue_map(kind, &params).unwrap()
    }

    #[test]
    fn all_members_are_identity_on_boundary() {
        for m in [
            map("identity", &[]),
            map("affine", &[("a11", 2.0), ("a22", 1.0)]),
            map("rank_one", &[("d", 0.5), ("w", 0.4)]),
            map("fracture", &[("d", 0.2), ("a", 0.5)]),
            map("shear_blend", &[("s", 0.8)]),
        ] {
            assert!(
                m.boundary_identity_defect(400) < 1e-12,
                "{} moves the boundary",
                m.name
            );
        }
    }

    #[test]
    fn fracture_jump_size_matches_profile() {
        let m = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let arc = &m.jumps[0];
        assert!((arc.size(0.5) - 0.2).abs() < 1e-15); // y = 0, plateau
        assert!(arc.size(0.0) < 1e-15); // fracture tip
        let (u, nu, rho) = arc.polar(0.5).unwrap();
        assert!((u.norm() - 1.0).abs() < 1e-15);
        assert!((nu.norm() - 1.0).abs() < 1e-15);
        assert!((rho - 0.2).abs() < 1e-15);
    }

    #[test]
    fn fracture_jump_mass_closed_form() {
        // d·(plateau length 2a - 0.2, plus two triangular tapers of base 0.1)
        let m = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let expect = 0.2 * (0.8 + 0.1);
        assert!((m.jumps[0].mass_on(0.0, 1.0) - expect).abs() < 1e-12);
    }

    #[test]
    fn eval_side_distinguishes_lips() {
        let m = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let p = Point2::new(0.0, 0.0);
        let minus = m.eval_side(p, Side::Minus).unwrap();
        let plus = m.eval_side(p, Side::Plus).unwrap();
        assert!((plus.x - minus.x - 0.2).abs() < 1e-15);
    }

    #[test]
    fn bad_params_rejected() {
        let mut params = BTreeMap::new();
        params.insert("d".to_string(), 0.2);
        params.insert("a".to_string(), 0.05);
        assert!(matches!(
            make_catalogue_map("fracture", &params),
            Err(Error::BadCatalogueParams(_))
        ));
        params.clear();
        params.insert("bogus".to_string(), 1.0);
        assert!(make_catalogue_map("identity", &params).is_err());
        params.clear();
        params.insert("d".to_string(), f64::INFINITY);
        assert!(make_catalogue_map("fracture", &params).is_err());
    }

    #[test]
    fn grad_is_identity_near_corner() {
        let m = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let g = m.grad(Point2::new(0.9, 0.9)).unwrap();
        assert!((g - Matrix2::identity()).norm() < 1e-15);
    }
}
