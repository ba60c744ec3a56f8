//! Transfer of a non-straight grid to an axis-parallel subgrid: crossings
//! are rerouted through spiral arms, large jumps are crossed through short
//! bypass staircases with controlled one-sided image error, and everything
//! in between is approximated by adaptive staircases, together with a
//! piecewise constant-speed correspondence back to the original curves.

use super::geomrep::{fill_jumps, ArcRep};
use super::spiral::spiral_replacement;
use crate::geom::intersect::{segment_intersection, SegmentIntersection};
use crate::geom::{Point2, Polyline, Segment, Vec2};
use crate::grid::{generate_straight_grid, NonStraightGrid, StraightGrid};
use crate::mapcat::{restrict_to_polyline, TestMap};
use crate::{Error, Result};
use rand::Rng;

/// Monotone piecewise-linear correspondence between the arc length of a hat
/// curve and the parameter of the original curve.
#[derive(Debug, Clone)]
pub struct ParamMap {
    pub s_hat: Vec<f64>,
    pub t: Vec<f64>,
}

impl ParamMap {
    pub fn t_of(&self, s: f64) -> f64 {
        let s = s.clamp(self.s_hat[0], *self.s_hat.last().unwrap());
        let k = self
            .s_hat
            .partition_point(|&v| v < s)
            .clamp(1, self.s_hat.len() - 1);
        let (a, b) = (self.s_hat[k - 1], self.s_hat[k]);
        let frac = if b - a <= 0.0 { 0.0 } else { (s - a) / (b - a) };
        self.t[k - 1] + frac * (self.t[k] - self.t[k - 1])
    }
}

/// A short axis-parallel detour across a large jump of the restriction.
#[derive(Debug, Clone)]
pub struct Bypass {
    pub curve: usize,
    /// Jump parameter on the original curve.
    pub t: f64,
    pub dom_before: Point2,
    pub dom_after: Point2,
    /// Distances of the images of the detour endpoints to the one-sided
    /// limits of the restriction.
    pub image_errors: (f64, f64),
}

/// Result of the transfer.
#[derive(Debug, Clone)]
pub struct Transfer {
    /// Axis-parallel replacement curves, one per original curve.
    pub hat: Vec<Polyline>,
    /// The straight grid spanned by the hat segments.
    pub straight: StraightGrid,
    /// Per-curve correspondence back to the original parameter.
    pub maps: Vec<ParamMap>,
    pub bypasses: Vec<Bypass>,
    /// Spiral anchors, one per crossing of the original grid.
    pub anchors: Vec<Point2>,
}

impl Transfer {
    pub fn hat_point(&self, curve: usize, s_hat: f64) -> Point2 {
        self.hat[curve].point_at_arclen(s_hat)
    }

    /// The correspondence g: hat point at `s_hat` to the matching point of
    /// the original curve.
    pub fn g(&self, grid: &NonStraightGrid, curve: usize, s_hat: f64) -> (Point2, f64) {
        let t = self.maps[curve].t_of(s_hat);
        let c = &grid.curves[curve];
        (c.point_at_arclen(t * c.length()), t)
    }

    /// Max over `samples` points per curve of the distance between the image
    /// of the hat point and the filled image curve of the original arc near
    /// the corresponding parameter.
    pub fn sampled_sup_error(
        &self,
        f: &TestMap,
        grid: &NonStraightGrid,
        samples: usize,
    ) -> Result<f64> {
        let mut sup: f64 = 0.0;
        for (ci, hat) in self.hat.iter().enumerate() {
            let bv = restrict_to_polyline(f, &grid.curves[ci])?;
            let arc = fill_jumps(&bv)?;
            let len = hat.length();
            for k in 0..=samples {
                let s = len * k as f64 / samples as f64;
                let p_hat = self.hat_point(ci, s);
                let img = f.eval(clamp_to_square(p_hat)).ok_or_else(|| {
                    Error::Precondition(format!(
                        "hat point ({}, {}) left the domain",
                        p_hat.x, p_hat.y
                    ))
                })?;
                let t = self.maps[ci].t_of(s);
                sup = sup.max(dist_to_curve_window(&arc, t, 0.02, img));
            }
        }
        Ok(sup)
    }
}

fn clamp_to_square(p: Point2) -> Point2 {
    Point2::new(p.x.clamp(-1.0, 1.0), p.y.clamp(-1.0, 1.0))
}

/// Distance from `q` to the part of the filled curve whose domain parameter
/// lies within `w` of `t`.
fn dist_to_curve_window(arc: &ArcRep, t: f64, w: f64, q: Point2) -> f64 {
    let mut best = f64::INFINITY;
    for k in 0..arc.curve.vertices.len() - 1 {
        if arc.t[k] > t + w || arc.t[k + 1] < t - w {
            continue;
        }
        let (a, b) = (arc.curve.vertices[k], arc.curve.vertices[k + 1]);
        best = best.min(point_segment_dist(q, a, b));
    }
    best
}

fn point_segment_dist(p: Point2, a: Point2, b: Point2) -> f64 {
    let d = b.sub(a);
    let l2 = d.dot(d);
    if l2 <= 0.0 {
        return p.dist(a);
    }
    let u = (p.sub(a).dot(d) / l2).clamp(0.0, 1.0);
    p.dist(a.add(d.scale(u)))
}

/// One matched piece of a hat curve: hat points spanning the original
/// parameter interval [t_a, t_b].
struct Piece {
    t_a: f64,
    t_b: f64,
    pts: Vec<Point2>,
}

/// Builds the axis-parallel subgrid and correspondence for `f` on `grid`.
pub fn transfer_nonstraight_to_straight(
    f: &TestMap,
    grid: &NonStraightGrid,
    sigma: f64,
    rng: &mut impl Rng,
) -> Result<Transfer> {
    if !(sigma > 0.0) {
        return Err(Error::Precondition(format!("sigma = {sigma} must be > 0")));
    }
    let tau = sigma / 32.0;
    let jump_budget = 4.0 * (sigma / 100.0) * (sigma / 100.0);

    // spiral replacements at the crossings, shared between the two curves
    struct CrossingPlan {
        curves: (usize, usize),
        x: Point2,
        anchor: Point2,
        /// forward and backward arm (anchor-to-endpoint) per involved curve
        arms: [(Polyline, Polyline); 2],
        r: f64,
    }
    let mut plans: Vec<CrossingPlan> = Vec::new();
    for (&(ci, cj), &x) in &grid.crossings {
        let di = tangent_at(&grid.curves[ci], x)?;
        let dj = tangent_at(&grid.curves[cj], x)?;
        let margin = segment_margin(&grid.curves[ci], x).min(segment_margin(&grid.curves[cj], x));
        let r = (sigma / 256.0).min(margin / 20.0);
        if !(r > 0.0) {
            return Err(Error::Precondition(format!(
                "crossing at ({}, {}) sits on a curve vertex",
                x.x, x.y
            )));
        }
        let rays = [di, di.scale(-1.0), dj, dj.scale(-1.0)];
        let sp = spiral_replacement(f, x, rays, r, sigma, rng)?;
        plans.push(CrossingPlan {
            curves: (ci, cj),
            x,
            anchor: sp.anchor,
            arms: [
                (sp.arms[0].clone(), sp.arms[1].clone()),
                (sp.arms[2].clone(), sp.arms[3].clone()),
            ],
            r,
        });
    }
    let crossing_pts: Vec<Point2> = plans.iter().map(|p| p.x).collect();

    let mut hat = Vec::with_capacity(grid.curves.len());
    let mut maps = Vec::with_capacity(grid.curves.len());
    let mut bypasses = Vec::new();

    for (ci, curve) in grid.curves.iter().enumerate() {
        let len = curve.length();
        // events along this curve, sorted by parameter
        enum Event<'a> {
            Crossing(&'a CrossingPlan, usize),
            Jump(f64, Point2, Point2),
        }
        let mut events: Vec<(f64, Event)> = Vec::new();
        for plan in &plans {
            if plan.curves.0 == ci || plan.curves.1 == ci {
                let side = usize::from(plan.curves.1 == ci);
                let t = param_on_curve(curve, plan.x);
                events.push((t, Event::Crossing(plan, side)));
            }
        }
        let bv = restrict_to_polyline(f, curve)?;
        for j in &bv.jumps {
            if j.z.dist(j.y) >= sigma / 40.0 {
                events.push((j.t, Event::Jump(j.t, j.y, j.z)));
            }
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in events.windows(2) {
            if w[1].0 - w[0].0 < 32.0 * tau / len {
                return Err(Error::Precondition(format!(
                    "events on curve {ci} at parameters {} and {} are too close",
                    w[0].0, w[1].0
                )));
            }
        }

        let mut pieces: Vec<Piece> = Vec::new();
        let mut cursor = 0.0;
        for (t_e, ev) in &events {
            match ev {
                Event::Crossing(plan, side) => {
                    let (fwd, back) = &plan.arms[*side];
                    let e_back = *back.vertices.last().unwrap();
                    let e_fwd = *fwd.vertices.last().unwrap();
                    let t_back = t_e - e_back.dist(plan.x) / len;
                    let t_fwd = t_e + e_fwd.dist(plan.x) / len;
                    pieces.push(staircase(
                        curve,
                        cursor,
                        t_back,
                        &crossing_pts,
                        tau,
                        plan.r / 32.0,
                    )?);
                    let mut rev = back.vertices.clone();
                    rev.reverse();
                    pieces.push(Piece {
                        t_a: t_back,
                        t_b: *t_e,
                        pts: rev,
                    });
                    pieces.push(Piece {
                        t_a: *t_e,
                        t_b: t_fwd,
                        pts: fwd.vertices.clone(),
                    });
                    cursor = t_fwd;
                }
                Event::Jump(tj, y, z) => {
                    let (delta, before, after, err) =
                        shrink_jump_window(f, curve, *tj, *y, *z, jump_budget, len)?;
                    let t_b = tj - delta;
                    let t_a2 = tj + delta;
                    pieces.push(staircase(
                        curve,
                        cursor,
                        t_b,
                        &crossing_pts,
                        tau,
                        tau / 32.0,
                    )?);
                    pieces.push(Piece {
                        t_a: t_b,
                        t_b: t_a2,
                        pts: bent_connector(before, after),
                    });
                    bypasses.push(Bypass {
                        curve: ci,
                        t: *tj,
                        dom_before: before,
                        dom_after: after,
                        image_errors: err,
                    });
                    cursor = t_a2;
                }
            }
        }
        pieces.push(staircase(curve, cursor, 1.0, &crossing_pts, tau, tau / 32.0)?);

        // assemble the hat polyline and the parameter correspondence; the
        // subgrid builder demands bit-exact axis-parallel segments, so every
        // junction whose endpoints share no coordinate gets an exact corner
        let mut verts: Vec<Point2> = Vec::new();
        let mut s_hat = vec![0.0];
        let mut ts = vec![pieces[0].t_a];
        let mut acc = 0.0;
        for piece in &pieces {
            let mut plen = 0.0;
            for p in &piece.pts {
                match verts.last().copied() {
                    None => verts.push(*p),
                    Some(last) => {
                        if last.dist(*p) == 0.0 {
                            continue;
                        }
                        if last.x != p.x && last.y != p.y {
                            let c = pick_corner(last, *p);
                            plen += last.dist(c) + c.dist(*p);
                            verts.push(c);
                        } else {
                            plen += last.dist(*p);
                        }
                        verts.push(*p);
                    }
                }
            }
            acc += plen;
            s_hat.push(acc);
            ts.push(piece.t_b);
        }
        hat.push(Polyline::new(verts)?);
        maps.push(ParamMap { s_hat, t: ts });
    }

    check_hat_disjoint(&hat, &plans.iter().map(|p| (p.curves, p.anchor)).collect::<Vec<_>>())?;

    let segs: Vec<Segment> = hat
        .iter()
        .flat_map(|c| c.segments())
        .collect();
    let straight = generate_straight_grid(&segs)?;

    Ok(Transfer {
        hat,
        straight,
        maps,
        bypasses,
        anchors: plans.iter().map(|p| p.anchor).collect(),
    })
}

/// Unit tangent of the segment of `curve` containing `p`.
fn tangent_at(curve: &Polyline, p: Point2) -> Result<Vec2> {
    let mut best = (f64::INFINITY, Vec2::new(1.0, 0.0));
    for seg in curve.segments() {
        let d = point_segment_dist(p, seg.a, seg.b);
        if d < best.0 {
            best = (d, seg.dir());
        }
    }
    if best.0 > 1e-9 {
        return Err(Error::Precondition(format!(
            "point ({}, {}) is not on the curve",
            p.x, p.y
        )));
    }
    Ok(best.1)
}

/// Distance from `p` to the ends of the segment of `curve` containing it.
fn segment_margin(curve: &Polyline, p: Point2) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for seg in curve.segments() {
        let d = point_segment_dist(p, seg.a, seg.b);
        if d < best.0 {
            best = (d, p.dist(seg.a).min(p.dist(seg.b)));
        }
    }
    best.1
}

/// Arc-length fraction of the closest point of `curve` to `p`.
fn param_on_curve(curve: &Polyline, p: Point2) -> f64 {
    let mut acc = 0.0;
    let mut best = (f64::INFINITY, 0.0);
    for seg in curve.segments() {
        let l = seg.length();
        let u = (p.sub(seg.a).dot(seg.dir()) / l).clamp(0.0, 1.0);
        let d = seg.eval(u).dist(p);
        if d < best.0 {
            best = (d, acc + u * l);
        }
        acc += l;
    }
    best.1 / curve.length()
}

/// Shrinks the parameter window around a jump until the images of the window
/// endpoints are within `budget` of the one-sided limits.
fn shrink_jump_window(
    f: &TestMap,
    curve: &Polyline,
    tj: f64,
    y: Point2,
    z: Point2,
    budget: f64,
    len: f64,
) -> Result<(f64, Point2, Point2, (f64, f64))> {
    let mut delta = 1e-4;
    for _ in 0..60 {
        let before = curve.point_at_arclen((tj - delta) * len);
        let after = curve.point_at_arclen((tj + delta) * len);
        let (Some(ib), Some(ia)) = (f.eval(before), f.eval(after)) else {
            delta *= 0.5;
            continue;
        };
        let (eb, ea) = (ib.dist(y), ia.dist(z));
        if eb <= budget && ea <= budget {
            return Ok((delta, before, after, (eb, ea)));
        }
        delta *= 0.5;
    }
    Err(Error::Precondition(format!(
        "one-sided limits at jump parameter {tj} are not attained continuously"
    )))
}

/// Two axis-parallel segments joining p to q (or one, if aligned).
fn bent_connector(p: Point2, q: Point2) -> Vec<Point2> {
    if (p.x - q.x).abs() < 1e-15 || (p.y - q.y).abs() < 1e-15 {
        return vec![p, q];
    }
    vec![p, pick_corner(p, q), q]
}

/// Staircase corner between p and q whose two line coordinates stay strictly
/// inside (-1, 1).
fn pick_corner(p: Point2, q: Point2) -> Point2 {
    let inside = |c: f64| c.abs() < 1.0 - 1e-12;
    if inside(p.x) && inside(q.y) {
        Point2::new(p.x, q.y)
    } else {
        Point2::new(q.x, p.y)
    }
}

/// Axis-parallel staircase tracking the curve on [t_a, t_b], with step size
/// shrinking near the crossings.
fn staircase(
    curve: &Polyline,
    t_a: f64,
    t_b: f64,
    crossings: &[Point2],
    tau: f64,
    step_min: f64,
) -> Result<Piece> {
    let len = curve.length();
    let mut pts = vec![curve.point_at_arclen(t_a * len)];
    let mut t = t_a;
    while t < t_b - 1e-15 {
        let p = *pts.last().unwrap();
        let d = crossings
            .iter()
            .map(|c| c.dist(p))
            .fold(f64::INFINITY, f64::min);
        let step = tau.min((d / 16.0).max(step_min));
        let t_next = (t + step / len).min(t_b);
        let q = curve.point_at_arclen(t_next * len);
        if q.dist(p) > 1e-15 {
            pts.push(q);
        }
        t = t_next;
    }
    // the hat curve must end exactly at the original endpoint
    if t_b == 1.0 {
        let e = *curve.vertices.last().unwrap();
        if pts.last().map_or(true, |p| p.dist(e) > 1e-12) {
            pts.push(e);
        } else {
            *pts.last_mut().unwrap() = e;
        }
    }
    Ok(Piece { t_a, t_b, pts })
}

/// Pairwise disjointness of the hat curves away from the shared spiral
/// anchors, via a uniform spatial hash over segment boxes.
fn check_hat_disjoint(
    hat: &[Polyline],
    anchors: &[((usize, usize), Point2)],
) -> Result<()> {
    let cell = 0.02;
    let key = |x: f64, y: f64| ((x / cell).floor() as i64, (y / cell).floor() as i64);
    for i in 0..hat.len() {
        for j in (i + 1)..hat.len() {
            let allowed: Vec<Point2> = anchors
                .iter()
                .filter(|(c, _)| *c == (i, j) || *c == (j, i))
                .map(|(_, a)| *a)
                .collect();
            // hash j's segments by the cells their boxes touch
            let mut bins: std::collections::HashMap<(i64, i64), Vec<Segment>> =
                std::collections::HashMap::new();
            for s in hat[j].segments() {
                let (x0, x1) = (s.a.x.min(s.b.x), s.a.x.max(s.b.x));
                let (y0, y1) = (s.a.y.min(s.b.y), s.a.y.max(s.b.y));
                let (k0, k1) = (key(x0, y0), key(x1, y1));
                for kx in k0.0..=k1.0 {
                    for ky in k0.1..=k1.1 {
                        bins.entry((kx, ky)).or_default().push(s);
                    }
                }
            }
            for sa in hat[i].segments() {
                let (x0, x1) = (sa.a.x.min(sa.b.x), sa.a.x.max(sa.b.x));
                let (y0, y1) = (sa.a.y.min(sa.b.y), sa.a.y.max(sa.b.y));
                let (k0, k1) = (key(x0, y0), key(x1, y1));
                for kx in k0.0..=k1.0 {
                    for ky in k0.1..=k1.1 {
                        let Some(list) = bins.get(&(kx, ky)) else {
                            continue;
                        };
                        for sb in list {
                            match segment_intersection(&sa, sb)? {
                                SegmentIntersection::Empty => {}
                                SegmentIntersection::Point(p) => {
                                    if !allowed.iter().any(|a| a.dist(p) < 1e-12) {
                                        return Err(Error::Injectivity(format!(
                                            "hat curves {i} and {j} cross at ({}, {})",
                                            p.x, p.y
                                        )));
                                    }
                                }
                                SegmentIntersection::Overlap(a, _) => {
                                    return Err(Error::Injectivity(format!(
                                        "hat curves {i} and {j} overlap near ({}, {})",
                                        a.x, a.y
                                    )));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapcat::make_catalogue_map;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn diagonal_grid() -> NonStraightGrid {
        // two transversal diagonals crossing at (0.3, 0.1)
        let c1 = Polyline::new(vec![
            Point2::new(-1.0, -0.16),
            Point2::new(1.0, 0.24),
        ])
        .unwrap();
        let c2 = Polyline::new(vec![
            Point2::new(0.21, -1.0),
            Point2::new(0.39, 1.0),
        ])
        .unwrap();
        NonStraightGrid::new(vec![c1, c2]).unwrap()
    }

    fn map(kind: &str, params: &[(&str, f64)]) -> TestMap {
        let p: BTreeMap<String, f64> =
            params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        make_catalogue_map(kind, &p).unwrap()
    }

    #[test]
    fn identity_transfer_is_axis_parallel_and_disjoint() {
        let f = map("identity", &[]);
        let grid = diagonal_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tr = transfer_nonstraight_to_straight(&f, &grid, 0.1, &mut rng).unwrap();
        assert_eq!(tr.hat.len(), 2);
        assert_eq!(tr.anchors.len(), 1);
        assert!(tr.bypasses.is_empty());
        for c in &tr.hat {
            for s in c.segments() {
                assert!(
                    (s.a.x - s.b.x).abs() < 1e-15 || (s.a.y - s.b.y).abs() < 1e-15,
                    "hat segment is not axis-parallel"
                );
            }
        }
        // hat endpoints coincide with the original curve endpoints
        for (hc, oc) in tr.hat.iter().zip(&grid.curves) {
            assert_eq!(hc.vertices.first(), oc.vertices.first());
            assert_eq!(hc.vertices.last(), oc.vertices.last());
        }
    }

    #[test]
    fn correspondence_is_monotone_and_stays_close() {
        let f = map("identity", &[]);
        let grid = diagonal_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sigma = 0.1;
        let tr = transfer_nonstraight_to_straight(&f, &grid, sigma, &mut rng).unwrap();
        for (ci, hc) in tr.hat.iter().enumerate() {
            let len = hc.length();
            let mut prev = -1.0;
            for k in 0..=100 {
                let s = len * k as f64 / 100.0;
                let (dom, t) = tr.g(&grid, ci, s);
                assert!(t >= prev - 1e-12, "correspondence not monotone");
                prev = t;
                assert!(
                    tr.hat_point(ci, s).dist(dom) < 8.0 * sigma / 32.0 + 0.01,
                    "hat point drifted from the curve"
                );
            }
        }
    }

    #[test]
    fn fracture_gets_one_bypass_with_tiny_image_error() {
        let f = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let grid = diagonal_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sigma = 0.05;
        let tr = transfer_nonstraight_to_straight(&f, &grid, sigma, &mut rng).unwrap();
        assert_eq!(tr.bypasses.len(), 1);
        let b = &tr.bypasses[0];
        assert_eq!(b.curve, 0);
        let budget = 4.0 * (sigma / 100.0) * (sigma / 100.0);
        assert!(b.image_errors.0 <= budget && b.image_errors.1 <= budget);
        assert!(b.dom_before.x < 0.0 && b.dom_after.x > 0.0);
    }

    #[test]
    fn sampled_guarantee_holds_for_fracture() {
        let f = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let grid = diagonal_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sigma = 0.05;
        let tr = transfer_nonstraight_to_straight(&f, &grid, sigma, &mut rng).unwrap();
        let sup = tr.sampled_sup_error(&f, &grid, 200).unwrap();
        // a sigma/4 perturbation of the straight-grid curves still stays
        // within sigma of the original representative
        assert!(
            sup + sigma / 4.0 < sigma,
            "sampled error {sup} too large for the sigma = {sigma} budget"
        );
    }
}
