//! Straight and non-straight grids on Q(0,1) = (-1,1)²: generation,
//! validation, admissibility against a test map, and the grid file format.

use crate::geom::intersect::{segment_intersection, SegmentIntersection};
use crate::geom::{is_injective_polyline, Point2, Polyline, Segment};
use crate::mapcat::{measure_query, restrict_to_polyline, MeasureKind, Rect, TestMap};
use crate::{Error, Result};
use rand::Rng;
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const TAU_CONT: f64 = 1e-6;
pub const TAU_DENSITY: f64 = 1e-3;

/// Default radii for density-decay checks: 2⁻³, …, 2⁻¹⁰.
pub fn default_radii() -> Vec<f64> {
    (3..=10).map(|k| 2f64.powi(-k)).collect()
}

/// A straight grid: vertical lines at x_coords, horizontal lines at
/// y_coords, all strictly inside (-1,1).
#[derive(Debug, Clone, PartialEq)]
pub struct StraightGrid {
    pub x_coords: Vec<f64>,
    pub y_coords: Vec<f64>,
}

impl StraightGrid {
    pub fn new(mut x_coords: Vec<f64>, mut y_coords: Vec<f64>) -> Result<Self> {
        x_coords.sort_by(f64::total_cmp);
        y_coords.sort_by(f64::total_cmp);
        for c in x_coords.iter().chain(&y_coords) {
            if !(c.abs() < 1.0) {
                return Err(Error::BadRegion(format!(
                    "grid coordinate {c} not strictly inside (-1,1)"
                )));
            }
        }
        for w in x_coords.windows(2).chain(y_coords.windows(2)) {
            if w[0] == w[1] {
                return Err(Error::BadRegion(format!("repeated grid coordinate {}", w[0])));
            }
        }
        Ok(StraightGrid { x_coords, y_coords })
    }

    /// The grid lines as boundary-to-boundary curves.
    pub fn to_nonstraight(&self) -> NonStraightGrid {
        let mut curves = Vec::new();
        for &x in &self.x_coords {
            curves.push(
                Polyline::new(vec![Point2::new(x, -1.0), Point2::new(x, 1.0)]).unwrap(),
            );
        }
        for &y in &self.y_coords {
            curves.push(
                Polyline::new(vec![Point2::new(-1.0, y), Point2::new(1.0, y)]).unwrap(),
            );
        }
        NonStraightGrid::new(curves).expect("straight grid lines always validate")
    }

    /// The closed cells of the grid, row-major.
    pub fn cells(&self) -> Vec<Rect> {
        let xs: Vec<f64> = std::iter::once(-1.0)
            .chain(self.x_coords.iter().copied())
            .chain(std::iter::once(1.0))
            .collect();
        let ys: Vec<f64> = std::iter::once(-1.0)
            .chain(self.y_coords.iter().copied())
            .chain(std::iter::once(1.0))
            .collect();
        let mut cells = Vec::new();
        for wy in ys.windows(2) {
            for wx in xs.windows(2) {
                cells.push(Rect::new(wx[0], wy[0], wx[1], wy[1]).unwrap());
            }
        }
        cells
    }
}

/// A non-straight grid: injective curves, pairwise meeting in at most one
/// point.
#[derive(Debug, Clone)]
pub struct NonStraightGrid {
    pub curves: Vec<Polyline>,
    /// Unordered pair (i,j), i < j, to the unique intersection point.
    pub crossings: BTreeMap<(usize, usize), Point2>,
}

impl NonStraightGrid {
    pub fn new(curves: Vec<Polyline>) -> Result<Self> {
        let mut g = NonStraightGrid {
            curves,
            crossings: BTreeMap::new(),
        };
        let outcome = validate_curves(&g.curves);
        if !outcome.pass {
            return Err(Error::BadRegion(format!(
                "invalid non-straight grid: {}",
                outcome.witnesses.join("; ")
            )));
        }
        g.crossings = outcome.crossings;
        Ok(g)
    }
}

/// Result of the exhaustive pairwise validation.
#[derive(Debug, Clone)]
pub struct ValidationOutcome {
    pub pass: bool,
    pub witnesses: Vec<String>,
    pub crossings: BTreeMap<(usize, usize), Point2>,
}

/// Re-verifies both invariants of a non-straight grid by pairwise segment
/// intersection and reports witnesses on failure.
pub fn validate_nonstraight_grid(g: &NonStraightGrid) -> ValidationOutcome {
    validate_curves(&g.curves)
}

fn validate_curves(curves: &[Polyline]) -> ValidationOutcome {
    let mut witnesses = Vec::new();
    let mut crossings = BTreeMap::new();
    for (i, c) in curves.iter().enumerate() {
        let (ok, w) = is_injective_polyline(c);
        if !ok {
            witnesses.push(format!(
                "curve {i} is not injective (segments {:?})",
                w.unwrap_or((0, 0))
            ));
        }
    }
    for i in 0..curves.len() {
        for j in (i + 1)..curves.len() {
            match curve_pair_intersections(&curves[i], &curves[j]) {
                Err(msg) => witnesses.push(format!("curves {i},{j}: {msg}")),
                Ok(points) => match points.len() {
                    0 => {}
                    1 => {
                        crossings.insert((i, j), points[0]);
                    }
                    n => witnesses.push(format!("curves {i},{j} intersect in {n} points")),
                },
            }
        }
    }
    let pts: Vec<(&(usize, usize), &Point2)> = crossings.iter().collect();
    for a in 0..pts.len() {
        for b in (a + 1)..pts.len() {
            if pts[a].1.dist(*pts[b].1) < 1e-12 {
                witnesses.push(format!(
                    "pairs {:?} and {:?} share the crossing point {:?}",
                    pts[a].0, pts[b].0, pts[a].1
                ));
            }
        }
    }
    ValidationOutcome {
        pass: witnesses.is_empty(),
        witnesses,
        crossings,
    }
}

fn curve_pair_intersections(
    a: &Polyline,
    b: &Polyline,
) -> std::result::Result<Vec<Point2>, String> {
    let mut points: Vec<Point2> = Vec::new();
    for sa in a.segments() {
        for sb in b.segments() {
            match segment_intersection(&sa, &sb).map_err(|e| e.to_string())? {
                SegmentIntersection::Empty => {}
                SegmentIntersection::Overlap(p, q) => {
                    if p.dist(q) > 1e-12 {
                        return Err(format!("overlap between {p:?} and {q:?}"));
                    }
                    push_distinct(&mut points, p);
                }
                SegmentIntersection::Point(p) => push_distinct(&mut points, p),
            }
        }
    }
    Ok(points)
}

fn push_distinct(points: &mut Vec<Point2>, p: Point2) {
    if points.iter().all(|q| q.dist(p) > 1e-12) {
        points.push(p);
    }
}

/// The smallest straight grid whose lines contain every input segment.
pub fn generate_straight_grid(segments: &[Segment]) -> Result<StraightGrid> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in segments {
        if s.a.x.abs() > 1.0 || s.a.y.abs() > 1.0 || s.b.x.abs() > 1.0 || s.b.y.abs() > 1.0 {
            return Err(Error::BadRegion(format!(
                "segment {:?}-{:?} leaves the closed square",
                s.a, s.b
            )));
        }
        if s.a.x == s.b.x {
            xs.push(s.a.x);
        } else if s.a.y == s.b.y {
            ys.push(s.a.y);
        } else {
            return Err(Error::NotAxisParallel((s.a.x, s.a.y), (s.b.x, s.b.y)));
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    StraightGrid::new(xs, ys)
}

/// Either kind of grid, as the admissibility checker and the CLI accept.
#[derive(Debug, Clone)]
pub enum Grid {
    Straight(StraightGrid),
    NonStraight(NonStraightGrid),
}

impl Grid {
    pub fn as_nonstraight(&self) -> NonStraightGrid {
        match self {
            Grid::Straight(s) => s.to_nonstraight(),
            Grid::NonStraight(g) => g.clone(),
        }
    }
}

/// One admissibility condition with its witnesses.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub pass: bool,
    pub witnesses: Vec<String>,
}

/// Report of the five admissibility conditions of a grid against a map.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    /// 1: finite variation along every curve; 2: continuity at curve
    /// vertices; 3: continuity at crossings along both curves; 4: density
    /// decay at curve vertices (failed outright by curves inside the jump
    /// set); 5: density decay at crossings.
    pub conditions: [ConditionReport; 5],
    /// Every special point checked, with a label.
    pub checked_points: Vec<(String, Point2)>,
    /// Sampled density ratios r⁻¹|Df|(Q(p,r)) per checked density point.
    pub density_samples: Vec<(Point2, Vec<f64>)>,
}

impl AdmissibilityReport {
    pub fn pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }
}

/// Checks the five admissibility conditions of `g` for `f` at the given
/// decreasing radii.
pub fn check_admissible(g: &Grid, f: &TestMap, radii: &[f64]) -> Result<AdmissibilityReport> {
    let ns = g.as_nonstraight();
    let mut conds: [ConditionReport; 5] = std::array::from_fn(|_| ConditionReport {
        pass: true,
        witnesses: Vec::new(),
    });
    let mut checked_points = Vec::new();
    let mut density_samples = Vec::new();

    let restrictions: Vec<_> = ns
        .curves
        .iter()
        .map(|c| restrict_to_polyline(f, c))
        .collect();

    // condition 1: finite variation along each curve
    for (i, r) in restrictions.iter().enumerate() {
        match r {
            Err(e) => {
                conds[0].pass = false;
                conds[0].witnesses.push(format!("curve {i}: {e}"));
                if matches!(e, Error::GridOnJumpSet(_)) {
                    // a curve inside the jump set carries singular mass at
                    // every point, so the density ratio cannot decay
                    conds[3].pass = false;
                    conds[3].witnesses.push(format!(
                        "curve {i} lies in the jump set; density ratio is bounded below"
                    ));
                }
            }
            Ok(bv) => {
                if !bv.var_total(1.0).is_finite() {
                    conds[0].pass = false;
                    conds[0]
                        .witnesses
                        .push(format!("curve {i}: infinite variation"));
                }
            }
        }
    }

    // special points: polyline vertices and crossings
    let h = 1e-9;
    for (i, c) in ns.curves.iter().enumerate() {
        let Ok(bv) = &restrictions[i] else { continue };
        let len = c.length();
        let mut arc = 0.0;
        for (k, v) in c.vertices.iter().enumerate() {
            if k > 0 {
                arc += c.vertices[k - 1].dist(*v);
            }
            let t = arc / len;
            let label = format!("s_{i},{k}");
            checked_points.push((label.clone(), *v));
            // condition 2: one-sided limits agree at the vertex
            let gap = bv.eval((t - h).max(0.0)).dist(bv.eval((t + h).min(1.0)));
            if gap > TAU_CONT {
                conds[1].pass = false;
                conds[1]
                    .witnesses
                    .push(format!("{label}: one-sided gap {gap:.3e}"));
            }
            // condition 4 at vertices
            if !density_decays(f, *v, radii, &mut density_samples)? {
                conds[3].pass = false;
                conds[3]
                    .witnesses
                    .push(format!("{label}: density ratio does not decay"));
            }
        }
    }

    for (&(i, j), &x) in &ns.crossings {
        let label = format!("X_{i},{j}");
        checked_points.push((label.clone(), x));
        // condition 3: continuity at the crossing along both curves
        for (ci, r) in [(i, &restrictions[i]), (j, &restrictions[j])] {
            let Ok(bv) = r else { continue };
            let t = param_of_point(&ns.curves[ci], x);
            let gap = bv.eval((t - h).max(0.0)).dist(bv.eval((t + h).min(1.0)));
            if gap > TAU_CONT {
                conds[2].pass = false;
                conds[2].witnesses.push(format!(
                    "{label} along curve {ci}: one-sided gap {gap:.3e}"
                ));
            }
        }
        // condition 5: density decay at the crossing
        if !density_decays(f, x, radii, &mut density_samples)? {
            conds[4].pass = false;
            conds[4]
                .witnesses
                .push(format!("{label}: density ratio does not decay"));
        }
    }

    Ok(AdmissibilityReport {
        conditions: conds,
        checked_points,
        density_samples,
    })
}

fn param_of_point(c: &Polyline, p: Point2) -> f64 {
    let len = c.length();
    let mut arc = 0.0;
    let mut best = (f64::INFINITY, 0.0);
    for s in c.segments() {
        let d = s.b.sub(s.a);
        let t = (p.sub(s.a).dot(d) / d.dot(d)).clamp(0.0, 1.0);
        let q = s.a.lerp(s.b, t);
        let dist = q.dist(p);
        if dist < best.0 {
            best = (dist, (arc + t * s.length()) / len);
        }
        arc += s.length();
    }
    best.1
}

/// Samples r⁻¹|Df|(Q(p,r) ∩ Q(0,1)) over the radii and decides decay: the
/// ratios must be non-increasing (5% slack) and the last must fall below
/// max(τ_density, 2% of the first). The relative clause keeps maps with a
/// large but bounded gradient from failing at the smallest default radius.
fn density_decays(
    f: &TestMap,
    p: Point2,
    radii: &[f64],
    samples: &mut Vec<(Point2, Vec<f64>)>,
) -> Result<bool> {
    let mut ratios = Vec::with_capacity(radii.len());
    for &r in radii {
        let rect = Rect::new(
            (p.x - r).max(-1.0),
            (p.y - r).max(-1.0),
            (p.x + r).min(1.0),
            (p.y + r).min(1.0),
        )?;
        let mass = measure_query(f, &rect, MeasureKind::Total)?;
        ratios.push(mass / r);
    }
    let monotone = ratios.windows(2).all(|w| w[1] <= 1.05 * w[0]);
    let decayed = *ratios.last().unwrap() <= TAU_DENSITY.max(0.02 * ratios[0]);
    samples.push((p, ratios));
    Ok(monotone && decayed)
}

/// Draws straight grids with the requested line counts uniformly away from
/// the boundary until one passes admissibility; at most 64 retries.
pub fn sample_straight_grid(
    f: &TestMap,
    nx: usize,
    ny: usize,
    radii: &[f64],
    rng: &mut impl Rng,
) -> Result<StraightGrid> {
    for _ in 0..64 {
        let xs: Vec<f64> = (0..nx).map(|_| rng.gen_range(-0.95..0.95)).collect();
        let ys: Vec<f64> = (0..ny).map(|_| rng.gen_range(-0.95..0.95)).collect();
        let Ok(grid) = StraightGrid::new(xs, ys) else {
            continue;
        };
        let report = check_admissible(&Grid::Straight(grid.clone()), f, radii)?;
        if report.pass() {
            return Ok(grid);
        }
    }
    Err(Error::SamplingBudget(
        "no admissible straight grid in 64 draws".into(),
    ))
}

/// Serializes a grid: `X c` / `Y c` lines for straight grids, `CURVE n`
/// followed by `x y` rows for non-straight grids.
pub fn write_grid(g: &Grid) -> String {
    let mut out = String::new();
    match g {
        Grid::Straight(s) => {
            for x in &s.x_coords {
                writeln!(out, "X {x}").unwrap();
            }
            for y in &s.y_coords {
                writeln!(out, "Y {y}").unwrap();
            }
        }
        Grid::NonStraight(ns) => {
            for c in &ns.curves {
                writeln!(out, "CURVE {}", c.vertices.len()).unwrap();
                for v in &c.vertices {
                    writeln!(out, "{} {}", v.x, v.y).unwrap();
                }
            }
        }
    }
    out
}

pub fn read_grid(text: &str) -> Result<Grid> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut curves: Vec<Polyline> = Vec::new();
    let mut pending: Option<(usize, Vec<Point2>)> = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Config {
            line: ln + 1,
            msg,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if let Some((n, ref mut pts)) = pending {
            let (x, y) = parse_xy(&fields).map_err(&err)?;
            pts.push(Point2::new(x, y));
            if pts.len() == n {
                curves.push(Polyline::new(std::mem::take(pts))?);
                pending = None;
            }
            continue;
        }
        match fields[0] {
            "X" | "Y" => {
                let c: f64 = fields
                    .get(1)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err("expected a coordinate".into()))?;
                if fields[0] == "X" {
                    xs.push(c);
                } else {
                    ys.push(c);
                }
            }
            "CURVE" => {
                let n: usize = fields
                    .get(1)
                    .and_then(|s| s.parse().ok())
                    .filter(|&n| n >= 2)
                    .ok_or_else(|| err("expected a vertex count >= 2".into()))?;
                pending = Some((n, Vec::with_capacity(n)));
            }
            other => return Err(err(format!("unknown grid record {other}"))),
        }
    }
    if pending.is_some() {
        return Err(Error::Config {
            line: 0,
            msg: "unterminated CURVE block".into(),
        });
    }
    match (xs.is_empty() && ys.is_empty(), curves.is_empty()) {
        (false, true) => Ok(Grid::Straight(StraightGrid::new(xs, ys)?)),
        (true, false) => Ok(Grid::NonStraight(NonStraightGrid::new(curves)?)),
        (true, true) => Err(Error::Config {
            line: 0,
            msg: "empty grid file".into(),
        }),
        (false, false) => Err(Error::Config {
            line: 0,
            msg: "grid file mixes straight lines and curves".into(),
        }),
    }
}

fn parse_xy(fields: &[&str]) -> std::result::Result<(f64, f64), String> {
    let get = |i: usize| -> std::result::Result<f64, String> {
        fields
            .get(i)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| "expected `x y`".to_string())
    };
    Ok((get(0)?, get(1)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapcat::make_catalogue_map;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn map(kind: &str, kv: &[(&str, f64)]) -> TestMap {
        let params: BTreeMap<String, f64> =
            kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        make_catalogue_map(kind, &params).unwrap()
    }

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn seg(a: Point2, b: Point2) -> Segment {
        Segment::new(a, b).unwrap()
    }

    #[test]
    fn single_horizontal_segment() {
        let g = generate_straight_grid(&[seg(p(-0.5, 0.25), p(0.5, 0.25))]).unwrap();
        assert_eq!(g.y_coords, vec![0.25]);
        assert!(g.x_coords.is_empty());
    }

    #[test]
    fn rectangle_boundary_gives_four_lines() {
        let segs = [
            seg(p(-0.5, -0.5), p(0.5, -0.5)),
            seg(p(0.5, -0.5), p(0.5, 0.5)),
            seg(p(0.5, 0.5), p(-0.5, 0.5)),
            seg(p(-0.5, 0.5), p(-0.5, -0.5)),
        ];
        let g = generate_straight_grid(&segs).unwrap();
        assert_eq!(g.x_coords, vec![-0.5, 0.5]);
        assert_eq!(g.y_coords, vec![-0.5, 0.5]);
    }

    #[test]
    fn generation_is_idempotent() {
        let g = generate_straight_grid(&[
            seg(p(-0.3, -1.0), p(-0.3, 1.0)),
            seg(p(-1.0, 0.6), p(1.0, 0.6)),
        ])
        .unwrap();
        let back: Vec<Segment> = g
            .to_nonstraight()
            .curves
            .iter()
            .flat_map(|c| c.segments().collect::<Vec<_>>())
            .collect();
        assert_eq!(generate_straight_grid(&back).unwrap(), g);
    }

    #[test]
    fn diagonal_segment_rejected() {
        let e = generate_straight_grid(&[seg(p(0., 0.), p(0.5, 0.5))]);
        assert!(matches!(e, Err(Error::NotAxisParallel(_, _))));
    }

    #[test]
    fn straight_grid_converts_and_validates() {
        let g = StraightGrid::new(vec![-0.4, 0.2], vec![0.1]).unwrap();
        let ns = g.to_nonstraight();
        assert_eq!(ns.crossings.len(), 2);
        assert!(validate_nonstraight_grid(&ns).pass);
    }

    #[test]
    fn crossing_diagonals_pass() {
        let ns = NonStraightGrid::new(vec![
            Polyline::new(vec![p(-1., -1.), p(1., 1.)]).unwrap(),
            Polyline::new(vec![p(-1., 1.), p(1., -1.)]).unwrap(),
        ])
        .unwrap();
        assert_eq!(ns.crossings.len(), 1);
        assert!(ns.crossings[&(0, 1)].dist(p(0., 0.)) < 1e-12);
    }

    #[test]
    fn shared_subsegment_fails() {
        let curves = vec![
            Polyline::new(vec![p(-1., 0.), p(1., 0.)]).unwrap(),
            Polyline::new(vec![p(-0.5, 0.), p(0.5, 0.), p(0.5, 0.5)]).unwrap(),
        ];
        assert!(NonStraightGrid::new(curves.clone()).is_err());
        let g = NonStraightGrid {
            curves,
            crossings: BTreeMap::new(),
        };
        let outcome = validate_nonstraight_grid(&g);
        assert!(!outcome.pass);
        assert!(outcome.witnesses.iter().any(|w| w.contains("overlap")));
    }

    #[test]
    fn two_crossings_fail() {
        let curves = vec![
            Polyline::new(vec![p(-1., 0.), p(1., 0.)]).unwrap(),
            Polyline::new(vec![p(-0.5, -0.5), p(0., 0.5), p(0.5, -0.5)]).unwrap(),
        ];
        assert!(NonStraightGrid::new(curves).is_err());
    }

    #[test]
    fn validator_agrees_with_exact_rational_oracle() {
        use num_bigint::BigInt;
        use num_rational::BigRational;
        let br = |x: f64| BigRational::from_float(x).unwrap();
        let cross = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| -> i8 {
            let v = (br(b.0) - br(a.0)) * (br(c.1) - br(a.1))
                - (br(b.1) - br(a.1)) * (br(c.0) - br(a.0));
            match v.cmp(&BigRational::from_integer(BigInt::from(0))) {
                std::cmp::Ordering::Less => -1,
                std::cmp::Ordering::Equal => 0,
                std::cmp::Ordering::Greater => 1,
            }
        };
        // exact proper-crossing count between two polylines
        let oracle_crossings = |a: &Polyline, b: &Polyline| -> usize {
            let mut n = 0;
            for sa in a.segments() {
                for sb in b.segments() {
                    let (p1, p2) = ((sa.a.x, sa.a.y), (sa.b.x, sa.b.y));
                    let (q1, q2) = ((sb.a.x, sb.a.y), (sb.b.x, sb.b.y));
                    let d1 = cross(q1, q2, p1);
                    let d2 = cross(q1, q2, p2);
                    let d3 = cross(p1, p2, q1);
                    let d4 = cross(p1, p2, q2);
                    if d1 * d2 < 0 && d3 * d4 < 0 {
                        n += 1;
                    }
                }
            }
            n
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut agreements = 0;
        while agreements < 10 {
            let mk = |rng: &mut ChaCha8Rng| {
                let pts: Vec<Point2> = (0..4)
                    .map(|_| {
                        p(
                            rng.gen_range(-7i32..=7) as f64 / 8.0,
                            rng.gen_range(-7i32..=7) as f64 / 8.0,
                        )
                    })
                    .collect();
                Polyline::new(pts).ok()
            };
            let (Some(a), Some(b)) = (mk(&mut rng), mk(&mut rng)) else {
                continue;
            };
            if !is_injective_polyline(&a).0 || !is_injective_polyline(&b).0 {
                continue;
            }
            // avoid grazing contacts so both sides count the same thing
            let float_pts = match curve_pair_intersections(&a, &b) {
                Ok(pts) => pts,
                Err(_) => continue,
            };
            let exact = oracle_crossings(&a, &b);
            if exact != float_pts.len() {
                continue; // tangential or endpoint contact, skip sample
            }
            let verdict = NonStraightGrid::new(vec![a, b]).is_ok();
            assert_eq!(verdict, exact <= 1);
            agreements += 1;
        }
    }

    #[test]
    fn identity_is_admissible_everywhere() {
        let f = map("identity", &[]);
        let g = Grid::Straight(StraightGrid::new(vec![-0.3, 0.41], vec![0.17]).unwrap());
        let report = check_admissible(&g, &f, &default_radii()).unwrap();
        assert!(report.pass(), "{:?}", report.conditions);
        assert!(!report.checked_points.is_empty());
    }

    #[test]
    fn grid_on_fracture_jump_fails_density() {
        let f = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let g = Grid::Straight(StraightGrid::new(vec![0.0], vec![]).unwrap());
        let report = check_admissible(&g, &f, &default_radii()).unwrap();
        assert!(!report.conditions[3].pass);
        assert!(!report.pass());
    }

    #[test]
    fn fracture_off_jump_is_admissible_with_linear_decay() {
        let f = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let g = Grid::Straight(StraightGrid::new(vec![0.3], vec![0.7]).unwrap());
        let report = check_admissible(&g, &f, &default_radii()).unwrap();
        assert!(report.pass(), "{:?}", report.conditions);
        // ratio at the crossing decays like r: halves with each radius step
        let crossing = p(0.3, 0.7);
        let (_, ratios) = report
            .density_samples
            .iter()
            .find(|(q, _)| q.dist(crossing) < 1e-12)
            .unwrap();
        for w in ratios.windows(2) {
            let q = w[1] / w[0];
            assert!((q - 0.5).abs() < 0.1, "decay factor {q}");
        }
    }

    #[test]
    fn random_grids_are_mostly_admissible() {
        let f = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let radii = default_radii();
        let mut passes = 0;
        for _ in 0..100 {
            let xs = vec![rng.gen_range(-0.95..0.95), rng.gen_range(-0.95..0.95)];
            let ys = vec![rng.gen_range(-0.95..0.95)];
            let Ok(g) = StraightGrid::new(xs, ys) else {
                continue;
            };
            if check_admissible(&Grid::Straight(g), &f, &radii)
                .unwrap()
                .pass()
            {
                passes += 1;
            }
        }
        assert!(passes >= 95, "only {passes}/100 draws admissible");
    }

    #[test]
    fn sampling_returns_admissible_grid() {
        let f = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = sample_straight_grid(&f, 2, 2, &default_radii(), &mut rng).unwrap();
        let report = check_admissible(&Grid::Straight(g), &f, &default_radii()).unwrap();
        assert!(report.pass());
    }

    #[test]
    fn grid_file_round_trip() {
        let g = Grid::Straight(StraightGrid::new(vec![-0.25, 0.5], vec![0.125]).unwrap());
        let text = write_grid(&g);
        match read_grid(&text).unwrap() {
            Grid::Straight(s) => {
                assert_eq!(s.x_coords, vec![-0.25, 0.5]);
                assert_eq!(s.y_coords, vec![0.125]);
            }
            _ => panic!("expected straight grid"),
        }
        let ns = Grid::NonStraight(
            NonStraightGrid::new(vec![
                Polyline::new(vec![p(-1., -1.), p(0., 0.5), p(1., -1.)]).unwrap(),
            ])
            .unwrap(),
        );
        let text = write_grid(&ns);
        match read_grid(&text).unwrap() {
            Grid::NonStraight(g2) => assert_eq!(g2.curves[0].vertices.len(), 3),
            _ => panic!("expected non-straight grid"),
        }
    }

    #[test]
    fn mixed_grid_file_rejected() {
        let text = "X 0.5\nCURVE 2\n0 0\n1 1\n";
        assert!(matches!(read_grid(text), Err(Error::Config { .. })));
    }
}
