//! Rerouting of a grid crossing through four rectangular spiral arms that
//! meet only at a common anchor, each truncated where it first returns to
//! its assigned ray.

use crate::geom::intersect::{segment_intersection, SegmentIntersection};
use crate::geom::{is_injective_polyline, Point2, Polyline, Segment, Vec2};
use crate::mapcat::TestMap;
use crate::{Error, Result};
use rand::Rng;

/// Vertices of the base spiral arm at scale 1 anchored at the origin.
pub fn base_spiral() -> Vec<Point2> {
    [
        (0.0, 0.0),
        (1.0, 0.0),
        (1.0, 2.0),
        (-3.0, 2.0),
        (-3.0, -4.0),
        (5.0, -4.0),
        (5.0, 6.0),
        (-7.0, 6.0),
    ]
    .iter()
    .map(|&(x, y)| Point2::new(x, y))
    .collect()
}

/// Four spiral arms replacing a crossing: each runs from the shared anchor
/// to a point on its ray, and the arms are pairwise disjoint away from the
/// anchor.
#[derive(Debug, Clone)]
pub struct SpiralReplacement {
    pub anchor: Point2,
    pub arms: Vec<Polyline>,
    /// Oscillation of the map along each arm (diameter of the sampled image).
    pub oscillations: [f64; 4],
}

/// Builds a spiral replacement of the crossing at `x` whose four outgoing
/// rays have directions `rays`. The anchor is rejection-sampled in the
/// diamond |p - x|_1 <= r/4 until all four truncated arms are pairwise
/// disjoint (except at the anchor) and the oscillation of `f` along each arm
/// is at most sigma/4.
pub fn spiral_replacement(
    f: &TestMap,
    x: Point2,
    rays: [Vec2; 4],
    r: f64,
    sigma: f64,
    rng: &mut impl Rng,
) -> Result<SpiralReplacement> {
    if !(r > 0.0) {
        return Err(Error::Precondition(format!("spiral scale r = {r} must be > 0")));
    }
    for v in rays {
        if (v.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::NonUnitVector(v.norm()));
        }
    }
    let base = base_spiral();
    let mut best_osc = f64::INFINITY;
    for _ in 0..64 {
        let anchor = sample_diamond(x, r / 4.0, rng);
        let Some(arms) = build_arms(&base, anchor, x, rays, r) else {
            continue;
        };
        if !arms_disjoint(&arms, anchor) {
            continue;
        }
        let mut oscillations = [0.0; 4];
        let mut ok = true;
        for (i, arm) in arms.iter().enumerate() {
            match oscillation(f, arm) {
                Some(osc) => {
                    oscillations[i] = osc;
                    best_osc = best_osc.min(osc);
                    if osc > sigma / 4.0 {
                        ok = false;
                    }
                }
                None => ok = false,
            }
        }
        if ok {
            return Ok(SpiralReplacement {
                anchor,
                arms,
                oscillations,
            });
        }
    }
    Err(Error::SamplingBudget(format!(
        "no admissible spiral anchor near ({}, {}); best arm oscillation {best_osc} \
         against budget {}",
        x.x,
        x.y,
        sigma / 4.0
    )))
}

fn sample_diamond(x: Point2, radius: f64, rng: &mut impl Rng) -> Point2 {
    loop {
        let dx = rng.gen_range(-radius..radius);
        let dy = rng.gen_range(-radius..radius);
        if dx.abs() + dy.abs() <= radius && dx != 0.0 && dy != 0.0 {
            return Point2::new(x.x + dx, x.y + dy);
        }
    }
}

/// The four candidate arms are the base spiral rotated clockwise by
/// 0..4 quarter turns, scaled by r and anchored at `anchor`. Each arm is
/// truncated at its outermost meeting with the union of the four rays, each
/// ray must end up claimed by exactly one arm, and the result is reordered
/// so that `arms[i]` ends on `rays[i]`. An anchor is additionally rejected
/// unless every crossing of an arm with a foreign ray happens strictly
/// closer to `x` than the endpoint of the arm owning that ray, so foreign
/// crossings stay inside the region the rerouting cuts away.
fn build_arms(
    base: &[Point2],
    anchor: Point2,
    x: Point2,
    rays: [Vec2; 4],
    r: f64,
) -> Option<Vec<Polyline>> {
    let ray_segs: Vec<Segment> = rays
        .iter()
        .map(|ray| Segment::new(x, x.add(ray.scale(16.0 * r))))
        .collect::<Result<_>>()
        .ok()?;
    let mut owner_of_ray = [usize::MAX; 4];
    let mut arms_by_ray: Vec<Option<Polyline>> = vec![None; 4];
    for i in 0..4 {
        let pts: Vec<Point2> = base
            .iter()
            .map(|p| anchor.add(rotate_cw(Vec2::new(p.x, p.y), i).scale(r)))
            .collect();
        let (arm, ray_idx) = truncate_at_last_ray_hit(&pts, &ray_segs)?;
        if owner_of_ray[ray_idx] != usize::MAX {
            return None;
        }
        owner_of_ray[ray_idx] = i;
        arms_by_ray[ray_idx] = Some(arm);
    }
    let arms: Vec<Polyline> = arms_by_ray.into_iter().collect::<Option<_>>()?;
    let reach: Vec<f64> = arms
        .iter()
        .map(|a| a.vertices.last().unwrap().dist(x))
        .collect();
    for (i, arm) in arms.iter().enumerate() {
        for (j, ray) in ray_segs.iter().enumerate() {
            let n_segs = arm.vertices.len() - 1;
            for (k, seg) in arm.segments().enumerate() {
                // the final segment ends on the owned ray by construction
                if j == i && k == n_segs - 1 {
                    continue;
                }
                match segment_intersection(&seg, ray).ok()? {
                    SegmentIntersection::Empty => {}
                    SegmentIntersection::Point(p) => {
                        if p.dist(x) > reach[j] - r / 8.0 {
                            return None;
                        }
                    }
                    SegmentIntersection::Overlap(_, _) => return None,
                }
            }
        }
    }
    Some(arms)
}

fn rotate_cw(v: Vec2, quarter_turns: usize) -> Vec2 {
    let mut v = v;
    for _ in 0..(quarter_turns % 4) {
        v = Vec2::new(v.y, -v.x);
    }
    v
}

/// Cuts the arm at its outermost meeting with the union of the rays and
/// reports which ray that meeting lies on. Truncating at the last meeting
/// makes every earlier ray crossing happen strictly inside the arm, which
/// the caller then checks against the reach of the owning arm.
fn truncate_at_last_ray_hit(
    pts: &[Point2],
    rays: &[Segment],
) -> Option<(Polyline, usize)> {
    let mut last: Option<(usize, f64, Point2, usize)> = None;
    for i in 0..pts.len() - 1 {
        let seg = Segment::new(pts[i], pts[i + 1]).ok()?;
        for (j, ray) in rays.iter().enumerate() {
            match segment_intersection(&seg, ray).ok()? {
                SegmentIntersection::Empty => {}
                SegmentIntersection::Point(p) => {
                    let along = pts[i].dist(p);
                    if last.map_or(true, |(li, la, ..)| (i, along) > (li, la)) {
                        last = Some((i, along, p, j));
                    }
                }
                SegmentIntersection::Overlap(a, b) => {
                    let far = if pts[i].dist(a) >= pts[i].dist(b) { a } else { b };
                    let along = pts[i].dist(far);
                    if last.map_or(true, |(li, la, ..)| (i, along) > (li, la)) {
                        last = Some((i, along, far, j));
                    }
                }
            }
        }
    }
    let (i, _, hit, ray_idx) = last?;
    // project the intersection point back onto the arm's segment line, so
    // that an axis-parallel arm stays exactly axis-parallel after truncation
    let hit = {
        let d = pts[i + 1].sub(pts[i]);
        let u = d.scale(1.0 / d.norm());
        pts[i].add(u.scale(hit.sub(pts[i]).dot(u)))
    };
    let mut out: Vec<Point2> = pts[..=i].to_vec();
    if out.last().map_or(true, |q| q.dist(hit) > 1e-15) {
        out.push(hit);
    }
    if out.len() < 2 {
        return None;
    }
    Some((Polyline::new(out).ok()?, ray_idx))
}

/// Pairwise disjointness of the arms away from the shared anchor, plus
/// injectivity of each arm.
fn arms_disjoint(arms: &[Polyline], anchor: Point2) -> bool {
    for arm in arms {
        if !is_injective_polyline(arm).0 {
            return false;
        }
    }
    for i in 0..arms.len() {
        for j in (i + 1)..arms.len() {
            for (a, sa) in arms[i].segments().enumerate() {
                for (b, sb) in arms[j].segments().enumerate() {
                    match segment_intersection(&sa, &sb) {
                        Ok(SegmentIntersection::Empty) => {}
                        Ok(SegmentIntersection::Point(p)) => {
                            if a != 0 || b != 0 || p.dist(anchor) > 1e-12 {
                                return false;
                            }
                        }
                        _ => return false,
                    }
                }
            }
        }
    }
    true
}

/// Diameter of the image of the arm under `f`, sampled densely; `None` if
/// the arm leaves the domain of `f`.
fn oscillation(f: &TestMap, arm: &Polyline) -> Option<f64> {
    let len = arm.length();
    let n = 96;
    let mut imgs = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let p = arm.point_at_arclen(len * k as f64 / n as f64);
        imgs.push(f.eval(p)?);
    }
    let mut diam: f64 = 0.0;
    for i in 0..imgs.len() {
        for j in (i + 1)..imgs.len() {
            diam = diam.max(imgs[i].dist(imgs[j]));
        }
    }
    Some(diam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapcat::make_catalogue_map;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn identity() -> TestMap {
        make_catalogue_map("identity", &BTreeMap::new()).unwrap()
    }

    fn axis_rays() -> [Vec2; 4] {
        [
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(-1.0, 0.0),
            Vec2::new(0.0, -1.0),
        ]
    }

    #[test]
    fn base_spiral_has_the_expected_vertices() {
        let b = base_spiral();
        assert_eq!(b.len(), 8);
        assert_eq!(b[0], Point2::new(0.0, 0.0));
        assert_eq!(b[3], Point2::new(-3.0, 2.0));
        assert_eq!(b[7], Point2::new(-7.0, 6.0));
    }

    #[test]
    fn arms_connect_anchor_to_their_rays() {
        let f = identity();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Point2::new(0.1, -0.2);
        let sp =
            spiral_replacement(&f, x, axis_rays(), 0.005, 0.5, &mut rng).unwrap();
        assert_eq!(sp.arms.len(), 4);
        for (i, arm) in sp.arms.iter().enumerate() {
            assert_eq!(arm.vertices[0], sp.anchor);
            let end = *arm.vertices.last().unwrap();
            let v = end.sub(x);
            let ray = axis_rays()[i];
            // endpoint lies on the ray: parallel to it and on the forward side
            assert!(v.cross(ray).abs() < 1e-11, "arm {i} ends off its ray");
            assert!(v.dot(ray) > 0.0);
        }
    }

    #[test]
    fn arms_are_pairwise_disjoint_for_random_configurations() {
        let f = identity();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 0..25 {
            let x = Point2::new(
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            );
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::FRAC_PI_2);
            let rays = [0, 1, 2, 3].map(|i| {
                let a = theta + i as f64 * std::f64::consts::FRAC_PI_2;
                Vec2::new(a.cos(), a.sin())
            });
            let sp = spiral_replacement(&f, x, rays, 0.003, 0.5, &mut rng)
                .unwrap_or_else(|e| panic!("config {k}: {e}"));
            assert!(arms_disjoint(&sp.arms, sp.anchor));
        }
    }

    #[test]
    fn oscillation_budget_is_enforced() {
        let f = identity();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // arms have diameter comparable to 10 r, far above sigma/4 here
        let err = spiral_replacement(
            &f,
            Point2::new(0.0, 0.0),
            axis_rays(),
            0.01,
            1e-4,
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SamplingBudget(_)));
    }
}
