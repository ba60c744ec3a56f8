//! Injective piecewise-linear approximation of the filled image curves: an
//! injective perturbation H of the curves is routed cell by cell through an
//! arrival grid, with straight chords between line crossings and generalized
//! segments where a cell is entered and left through the same line.

use super::arrival::{choose_arrival_grid, ArrivalGrid, ArrivalHit};
use super::genseg::generalized_segment;
use super::geomrep::{ArcRep, GeomRep};
use crate::geom::intersect::{segment_intersection, SegmentIntersection};
use crate::geom::{is_injective_polyline, Point2, Polyline};
use crate::mapcat::Rect;
use crate::{Error, Result};
use rand::Rng;

/// Strategy for producing the injective curve family H from the filled
/// curves.
#[derive(Debug, Clone, Copy)]
pub enum HProvider {
    /// Use the filled curves themselves; valid whenever they are already
    /// injective and pairwise disjoint away from the domain crossings.
    RepItself,
    /// Additionally push the two lips of every filled jump segment apart by
    /// the given fraction of sigma, for maps whose one-sided limits collide.
    LipOffset { fraction: f64 },
}

impl HProvider {
    /// Produces H as a vertex-for-vertex perturbation of the filled curves,
    /// with |H - h| <= sigma/4 at every vertex.
    pub fn provide(&self, rep: &GeomRep, sigma: f64) -> Result<GeomRep> {
        let mut out = rep.clone();
        if let HProvider::LipOffset { fraction } = *self {
            if !(fraction > 0.0 && fraction <= 0.25) {
                return Err(Error::Precondition(format!(
                    "lip offset fraction {fraction} outside (0, 1/4]"
                )));
            }
            for arc in &mut out.arcs {
                offset_lips(arc, fraction * sigma);
            }
        }
        for (a, b) in out.arcs.iter().zip(&rep.arcs) {
            for (p, q) in a.curve.vertices.iter().zip(&b.curve.vertices) {
                debug_assert!(p.dist(*q) <= sigma / 4.0 + 1e-12);
            }
        }
        certify_family_injective(&out)?;
        Ok(out)
    }
}

/// Pushes the curve apart across each filled jump segment: vertices with
/// domain parameter below the jump move one way along the segment normal,
/// vertices above move the other way, with influence decaying linearly over
/// a parameter window.
fn offset_lips(arc: &mut ArcRep, amount: f64) {
    let jumps = arc.jumps.clone();
    for j in &jumps {
        let dir = j.z.sub(j.y).normalize();
        let n = dir.perp();
        let window = 0.1;
        for (k, v) in arc.curve.vertices.iter_mut().enumerate() {
            let dt = arc.t[k] - j.t;
            if dt.abs() >= window {
                continue;
            }
            let ramp = 1.0 - dt.abs() / window;
            let sign = if dt < 0.0 {
                -1.0
            } else if dt > 0.0 {
                1.0
            } else {
                continue;
            };
            *v = v.add(n.scale(sign * amount * ramp));
        }
    }
    let mut s = vec![0.0];
    for w in arc.curve.vertices.windows(2) {
        s.push(s.last().unwrap() + w[0].dist(w[1]));
    }
    arc.s = s;
}

/// Verifies that each curve is injective and that two curves meet only at
/// the image of their shared domain crossing.
pub fn certify_family_injective(rep: &GeomRep) -> Result<()> {
    for (i, arc) in rep.arcs.iter().enumerate() {
        let (ok, pair) = is_injective_polyline(&arc.curve);
        if !ok {
            return Err(Error::Injectivity(format!(
                "image curve of arc {i} self-intersects at segment pair {pair:?}"
            )));
        }
    }
    for i in 0..rep.arcs.len() {
        for j in (i + 1)..rep.arcs.len() {
            let allowed = rep
                .grid
                .crossings
                .get(&(i, j))
                .map(|&cp| image_of_domain_point(rep, i, cp));
            for sa in rep.arcs[i].curve.segments() {
                for sb in rep.arcs[j].curve.segments() {
                    match segment_intersection(&sa, &sb)? {
                        SegmentIntersection::Empty => {}
                        SegmentIntersection::Point(p) => {
                            let ok = allowed.map_or(false, |q| q.dist(p) < 1e-9);
                            if !ok {
                                return Err(Error::Injectivity(format!(
                                    "image curves of arcs {i} and {j} meet at \
                                     ({}, {}) away from their crossing image",
                                    p.x, p.y
                                )));
                            }
                        }
                        SegmentIntersection::Overlap(a, _) => {
                            return Err(Error::Injectivity(format!(
                                "image curves of arcs {i} and {j} overlap near \
                                 ({}, {})",
                                a.x, a.y
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Image of a domain point on arc `i` under the filled curve.
fn image_of_domain_point(rep: &GeomRep, i: usize, p: Point2) -> Point2 {
    let dom = &rep.grid.curves[i];
    let mut acc = 0.0;
    let mut best = (f64::INFINITY, 0.0);
    for seg in dom.segments() {
        let l = seg.length();
        let v = p.sub(seg.a);
        let t = (v.dot(seg.dir()) / l).clamp(0.0, 1.0);
        let q = seg.eval(t);
        let d = q.dist(p);
        if d < best.0 {
            best = (d, acc + t * l);
        }
        acc += l;
    }
    let t = best.1 / dom.length();
    let arc = &rep.arcs[i];
    arc.image_at(s_at_domain_param(arc, t))
}

/// First arc-length parameter with the given domain parameter.
fn s_at_domain_param(arc: &ArcRep, t: f64) -> f64 {
    let i = arc.t.partition_point(|&v| v < t).max(1) - 1;
    let i = i.min(arc.t.len() - 2);
    let (a, b) = (arc.t[i], arc.t[i + 1]);
    if b - a <= 0.0 {
        return arc.s[i];
    }
    let frac = ((t - a) / (b - a)).clamp(0.0, 1.0);
    arc.s[i] + frac * (arc.s[i + 1] - arc.s[i])
}

/// One routed arc of the PL approximation.
#[derive(Debug, Clone)]
pub struct PlArc {
    /// The routed curve.
    pub path: Polyline,
    /// H-parameters of the routing nodes (start, hits, crossings, end).
    pub node_s: Vec<f64>,
    /// Vertex index in `path` of each node.
    pub node_v: Vec<usize>,
}

impl PlArc {
    /// Point of the routed curve at H-parameter `s`, matching pieces
    /// constant-speed between nodes.
    pub fn eval(&self, s: f64) -> Point2 {
        let k = self
            .node_s
            .partition_point(|&v| v < s)
            .clamp(1, self.node_s.len() - 1);
        let (sa, sb) = (self.node_s[k - 1], self.node_s[k]);
        let frac = if sb - sa <= 0.0 {
            0.0
        } else {
            ((s - sa) / (sb - sa)).clamp(0.0, 1.0)
        };
        let (va, vb) = (self.node_v[k - 1], self.node_v[k]);
        let piece = &self.path.vertices[va..=vb];
        let len: f64 = piece.windows(2).map(|w| w[0].dist(w[1])).sum();
        point_at(piece, frac * len)
    }
}

fn point_at(pts: &[Point2], mut rem: f64) -> Point2 {
    for w in pts.windows(2) {
        let l = w[0].dist(w[1]);
        if rem <= l {
            return w[0].lerp(w[1], if l > 0.0 { rem / l } else { 0.0 });
        }
        rem -= l;
    }
    *pts.last().unwrap()
}

/// The assembled PL approximation on all arcs.
#[derive(Debug, Clone)]
pub struct PlGridMap {
    pub arcs: Vec<PlArc>,
    pub grid: ArrivalGrid,
    pub xi: f64,
}

/// Quality report of the approximation.
#[derive(Debug, Clone, Copy)]
pub struct ApproxReport {
    /// Max sampled distance between the routed curve and H.
    pub sup_dist: f64,
    /// 4 kappa + 7 sigma.
    pub sup_bound: f64,
    /// Max over pieces of len(phi) / ((1+xi)(1+eps)(len(h) + 4 kappa)).
    pub worst_ledger_ratio: f64,
}

/// Builds the injective PL approximation of the filled curves of `rep`.
///
/// H comes from `provider` and must be injective; an arrival grid with gap
/// bound `kappa` is drawn; each arc is rerouted node to node, where nodes
/// are the arc endpoints, the arrival-grid hits and the domain crossings.
/// Two consecutive nodes always lie in one closed arrival cell, so each
/// piece becomes a generalized segment of that cell.
pub fn build_injective_pl_approx(
    rep: &GeomRep,
    provider: HProvider,
    kappa: f64,
    sigma: f64,
    xi: f64,
    eps: f64,
    rng: &mut impl Rng,
) -> Result<(PlGridMap, ApproxReport)> {
    let h = provider.provide(rep, sigma)?;
    let (grid, hits) = choose_arrival_grid(&h, kappa, &[], rng)?;
    for attempt in 0..16 {
        let scale = if attempt == 0 {
            1.0
        } else {
            rng.gen_range(0.5..1.0)
        };
        let arcs = route_arcs(&h, &grid, &hits, xi * scale)?;
        let routed = PlGridMap {
            arcs,
            grid: grid.clone(),
            xi,
        };
        if certify_routed(&routed, &h).is_ok() {
            let report = quality_report(&routed, rep, &h, kappa, sigma, xi, eps);
            return Ok((routed, report));
        }
    }
    Err(Error::Injectivity(
        "routed curves stay entangled after 16 reroutes".into(),
    ))
}

/// Routes every arc through its nodes.
fn route_arcs(
    h: &GeomRep,
    grid: &ArrivalGrid,
    hits: &[ArrivalHit],
    xi: f64,
) -> Result<Vec<PlArc>> {
    let mut out = Vec::with_capacity(h.arcs.len());
    for (ai, arc) in h.arcs.iter().enumerate() {
        let mut nodes: Vec<(f64, Point2)> = vec![(0.0, arc.curve.vertices[0])];
        for hit in hits.iter().filter(|hh| hh.arc == ai) {
            nodes.push((hit.s, hit.img));
        }
        for (&(ci, cj), &cp) in &h.grid.crossings {
            if ci == ai || cj == ai {
                let img = image_of_domain_point(h, ai, cp);
                let dom = &h.grid.curves[ai];
                let t = param_on_curve(dom, cp);
                nodes.push((s_at_domain_param(arc, t), img));
            }
        }
        nodes.push((arc.s_total(), *arc.curve.vertices.last().unwrap()));
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        nodes.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12);

        let mut verts: Vec<Point2> = vec![nodes[0].1];
        let mut node_v = vec![0usize];
        for w in nodes.windows(2) {
            let (sa, pa) = w[0];
            let (sb, pb) = w[1];
            let mid = arc.image_at((sa + sb) / 2.0);
            let (x0, y0, x1, y1) = grid.cell_bounds(mid);
            let big = 16.0;
            let rect = Rect::new(
                x0.max(mid.x - big),
                y0.max(mid.y - big),
                x1.min(mid.x + big),
                y1.min(mid.y + big),
            )?;
            let piece = generalized_segment(&rect, pa, pb, xi)?;
            for v in piece.path.vertices.iter().skip(1) {
                if verts.last().map_or(true, |q| q.dist(*v) > 1e-15) {
                    verts.push(*v);
                }
            }
            node_v.push(verts.len() - 1);
        }
        out.push(PlArc {
            path: Polyline::new(verts)?,
            node_s: nodes.iter().map(|n| n.0).collect(),
            node_v,
        });
    }
    Ok(out)
}

/// Arc-length fraction of the closest point of `curve` to `p`.
fn param_on_curve(curve: &Polyline, p: Point2) -> f64 {
    let mut acc = 0.0;
    let mut best = (f64::INFINITY, 0.0);
    for seg in curve.segments() {
        let l = seg.length();
        let t = (p.sub(seg.a).dot(seg.dir()) / l).clamp(0.0, 1.0);
        let d = seg.eval(t).dist(p);
        if d < best.0 {
            best = (d, acc + t * l);
        }
        acc += l;
    }
    best.1 / curve.length()
}

/// Injectivity of the routed family: each path injective, two paths meeting
/// only at shared crossing images.
fn certify_routed(routed: &PlGridMap, h: &GeomRep) -> Result<()> {
    let family = GeomRep {
        grid: h.grid.clone(),
        arcs: routed
            .arcs
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let mut s = vec![0.0];
                for w in a.path.vertices.windows(2) {
                    s.push(s.last().unwrap() + w[0].dist(w[1]));
                }
                ArcRep {
                    curve: a.path.clone(),
                    s,
                    t: vec![0.0; a.path.vertices.len()],
                    jumps: h.arcs[i].jumps.clone(),
                    variation: a.path.length(),
                }
            })
            .collect(),
    };
    certify_routed_family(&family, h)
}

/// Like [`certify_family_injective`] but the allowed meeting point of two
/// routed arcs is the image of their domain crossing under H.
fn certify_routed_family(family: &GeomRep, h: &GeomRep) -> Result<()> {
    for (i, arc) in family.arcs.iter().enumerate() {
        let (ok, pair) = is_injective_polyline(&arc.curve);
        if !ok {
            return Err(Error::Injectivity(format!(
                "routed curve of arc {i} self-intersects at segment pair {pair:?}"
            )));
        }
    }
    for i in 0..family.arcs.len() {
        for j in (i + 1)..family.arcs.len() {
            let allowed = h
                .grid
                .crossings
                .get(&(i, j))
                .map(|&cp| image_of_domain_point(h, i, cp));
            for sa in family.arcs[i].curve.segments() {
                for sb in family.arcs[j].curve.segments() {
                    match segment_intersection(&sa, &sb)? {
                        SegmentIntersection::Empty => {}
                        SegmentIntersection::Point(p) => {
                            let ok = allowed.map_or(false, |q| q.dist(p) < 1e-9);
                            if !ok {
                                return Err(Error::Injectivity(format!(
                                    "routed curves of arcs {i} and {j} cross at \
                                     ({}, {})",
                                    p.x, p.y
                                )));
                            }
                        }
                        SegmentIntersection::Overlap(a, _) => {
                            return Err(Error::Injectivity(format!(
                                "routed curves of arcs {i} and {j} overlap near \
                                 ({}, {})",
                                a.x, a.y
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Sampled closeness and the per-piece length ledger.
fn quality_report(
    routed: &PlGridMap,
    rep: &GeomRep,
    h: &GeomRep,
    kappa: f64,
    sigma: f64,
    xi: f64,
    eps: f64,
) -> ApproxReport {
    let mut sup_dist: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for (ai, arc) in routed.arcs.iter().enumerate() {
        let h_arc = &h.arcs[ai];
        let total = h_arc.s_total();
        for k in 0..=200 {
            let s = total * k as f64 / 200.0;
            sup_dist = sup_dist.max(arc.eval(s).dist(h_arc.image_at(s)));
        }
        for w in arc.node_s.windows(2).zip(arc.node_v.windows(2)) {
            let (sw, vw) = w;
            let (sa, sb) = (sw[0], sw[1]);
            let piece = &arc.path.vertices[vw[0]..=vw[1]];
            let len_phi: f64 = piece.windows(2).map(|p| p[0].dist(p[1])).sum();
            // corresponding piece of the original filled curve
            let ta = h_arc.domain_param_at(sa);
            let tb = h_arc.domain_param_at(sb);
            let r_arc = &rep.arcs[ai];
            let len_h =
                (s_at_domain_param(r_arc, tb) - s_at_domain_param(r_arc, ta)).abs();
            let budget = (1.0 + xi) * (1.0 + eps) * (len_h + 4.0 * kappa);
            if budget > 0.0 {
                worst_ratio = worst_ratio.max(len_phi / budget);
            }
        }
    }
    ApproxReport {
        sup_dist,
        sup_bound: 4.0 * kappa + 7.0 * sigma,
        worst_ledger_ratio: worst_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, StraightGrid};
    use crate::mapcat::{make_catalogue_map, TestMap};
    use crate::rep::build_geom_rep;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn map(kind: &str, params: &[(&str, f64)]) -> TestMap {
        let p: BTreeMap<String, f64> =
            params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        make_catalogue_map(kind, &p).unwrap()
    }

    #[test]
    fn identity_routes_to_an_injective_family() {
        let f = map("identity", &[]);
        let g = Grid::Straight(StraightGrid::new(vec![0.0], vec![0.0]).unwrap());
        let rep = build_geom_rep(&f, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (routed, report) = build_injective_pl_approx(
            &rep,
            HProvider::RepItself,
            0.2,
            0.05,
            0.25,
            0.5,
            &mut rng,
        )
        .unwrap();
        assert_eq!(routed.arcs.len(), 2);
        assert!(report.sup_dist <= report.sup_bound);
        assert!(report.worst_ledger_ratio <= 1.0 + 1e-9);
        // for the identity the routed curves barely move
        assert!(report.sup_dist < 1e-9);
    }

    #[test]
    fn routed_arcs_share_the_crossing_image() {
        let f = map("affine", &[("a11", 1.5), ("a12", 0.2)]);
        let g = Grid::Straight(StraightGrid::new(vec![0.1], vec![-0.15]).unwrap());
        let rep = build_geom_rep(&f, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (routed, _) = build_injective_pl_approx(
            &rep,
            HProvider::RepItself,
            0.15,
            0.02,
            0.25,
            0.5,
            &mut rng,
        )
        .unwrap();
        let cross_img = image_of_domain_point(&rep, 0, Point2::new(0.1, -0.15));
        for arc in &routed.arcs {
            let d = arc
                .path
                .vertices
                .iter()
                .map(|v| v.dist(cross_img))
                .fold(f64::INFINITY, f64::min);
            assert!(d < 1e-9, "routed arc misses the crossing image by {d}");
        }
    }

    #[test]
    fn fracture_stays_close_and_respects_the_ledger() {
        let f = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let g = Grid::Straight(StraightGrid::new(vec![], vec![0.0]).unwrap());
        let rep = build_geom_rep(&f, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (_, report) = build_injective_pl_approx(
            &rep,
            HProvider::RepItself,
            0.1,
            0.02,
            0.25,
            0.5,
            &mut rng,
        )
        .unwrap();
        assert!(report.sup_dist <= report.sup_bound);
        assert!(report.worst_ledger_ratio <= 1.0 + 1e-9);
    }

    #[test]
    fn lip_offset_provider_keeps_curves_close() {
        let f = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let g = Grid::Straight(StraightGrid::new(vec![], vec![0.0]).unwrap());
        let rep = build_geom_rep(&f, &g).unwrap();
        let sigma = 0.05;
        let h = HProvider::LipOffset { fraction: 0.125 }
            .provide(&rep, sigma)
            .unwrap();
        for (a, b) in h.arcs.iter().zip(&rep.arcs) {
            for (p, q) in a.curve.vertices.iter().zip(&b.curve.vertices) {
                assert!(p.dist(*q) <= sigma / 4.0 + 1e-12);
            }
        }
    }
}
