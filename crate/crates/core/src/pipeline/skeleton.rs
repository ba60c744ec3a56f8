//! Injective piecewise-linear boundary map on the perturbed mesh skeleton,
//! obtained from the filled restriction of the test map blended slightly
//! towards the identity.

use std::collections::HashMap;

use crate::geom::{segment_intersection, Point2, Polyline, Segment, SegmentIntersection};
use crate::mapcat::{measure_query, restrict_to_polyline, MeasureKind, TestMap};
use crate::{Error, Result};

use super::classify::{double_rect, square_rect};
use super::perturb::PerturbedMesh;
use super::{Category, PipelineParams, SquareClassification};

/// A piecewise-linear chain along one straight mesh edge: strictly
/// increasing parameters in `[0,1]` (0 at the lexicographically smaller
/// vertex) with image points, linear in between.
#[derive(Debug, Clone)]
pub struct Chain {
    pub s: Vec<f64>,
    pub img: Vec<Point2>,
}

impl Chain {
    /// Evaluates the chain, snapping exactly onto nodes within `1e-12`.
    pub fn eval(&self, t: f64) -> Point2 {
        let t = t.clamp(0.0, 1.0);
        for (i, &sk) in self.s.iter().enumerate() {
            if (t - sk).abs() <= 1e-12 {
                return self.img[i];
            }
        }
        let i = self
            .s
            .windows(2)
            .position(|w| t <= w[1])
            .unwrap_or(self.s.len() - 2);
        let lam = (t - self.s[i]) / (self.s[i + 1] - self.s[i]);
        self.img[i].lerp(self.img[i + 1], lam)
    }

    /// Total length of the image polyline.
    pub fn variation(&self) -> f64 {
        self.img.windows(2).map(|w| w[0].dist(w[1])).sum()
    }

    pub fn is_straight(&self) -> bool {
        self.img.len() == 2
    }

    fn reversed(&self) -> Chain {
        Chain {
            s: self.s.iter().rev().map(|&t| 1.0 - t).collect(),
            img: self.img.iter().rev().copied().collect(),
        }
    }
}

/// Measured conclusions of the skeleton construction.
#[derive(Debug, Clone, Default)]
pub struct SkeletonLedger {
    /// Worst per-quad ratio of the boundary variation of the skeleton map to
    /// its budget `C·2^K·|Df|(2Q_i)`.
    pub worst_variation_ratio: f64,
    /// Number of re-linearised edges (both neighbours affine-like).
    pub relinearized: usize,
    /// Worst ratio of jump-direction boundary variation to total boundary
    /// variation over singular squares (logged, not thresholded).
    pub worst_jump_direction_share: f64,
}

/// The skeleton map: one chain per mesh edge, keyed by the lexicographic
/// vertex-index pair, plus the identity-blend weight used to make it
/// injective.
#[derive(Debug, Clone)]
pub struct SkeletonMap {
    pub chains: HashMap<(usize, usize), Chain>,
    pub blend: f64,
    pub ledger: SkeletonLedger,
}

impl SkeletonMap {
    /// Chain along the edge from lattice vertex `a` to `b` (adjacent),
    /// oriented `a -> b`.
    pub fn chain(&self, n: usize, a: (usize, usize), b: (usize, usize)) -> Chain {
        let ia = a.1 * (n + 1) + a.0;
        let ib = b.1 * (n + 1) + b.0;
        let c = &self.chains[&(ia.min(ib), ia.max(ib))];
        if ia < ib {
            c.clone()
        } else {
            c.reversed()
        }
    }
}

/// Builds one chain from the filled one-dimensional restriction of `f`
/// along the straight edge `pa -> pb`, blending every value towards the
/// identity with weight `mu`. Jumps are traversed by straight fill segments
/// over a short parameter window around the jump location.
fn build_chain(
    f: &TestMap,
    pa: Point2,
    pb: Point2,
    mu: f64,
    img_a: Point2,
    img_b: Point2,
) -> Result<Chain> {
    let line = Polyline::new(vec![pa, pb])?;
    let bv = restrict_to_polyline(f, &line)?;
    let mut s: Vec<f64> = Vec::new();
    let mut img: Vec<Point2> = Vec::new();
    let jump_at = |t: f64| bv.jumps.iter().find(|j| (j.t - t).abs() <= 1e-14);
    for (m, &t) in bv.t.iter().enumerate() {
        if let Some(j) = jump_at(t) {
            // parameter window around the jump: a quarter of the gap to the
            // neighbouring breakpoints on each side
            let prev = if m > 0 { bv.t[m - 1] } else { 0.0 };
            let next = if m + 1 < bv.t.len() { bv.t[m + 1] } else { 1.0 };
            let eta = ((t - prev).min(next - t) * 0.25).min(0.05);
            s.push(t - eta);
            img.push(bv.eval(t - eta));
            s.push(t - eta * 0.5);
            img.push(j.y);
            s.push(t + eta * 0.5);
            img.push(j.z);
            s.push(t + eta);
            img.push(bv.eval(t + eta));
        } else {
            s.push(t);
            img.push(bv.right[m]);
        }
    }
    // blend towards the identity along the straight domain edge
    for (sk, v) in s.iter().zip(img.iter_mut()) {
        let dom = pa.lerp(pb, *sk);
        *v = Point2::new((1.0 - mu) * v.x + mu * dom.x, (1.0 - mu) * v.y + mu * dom.y);
    }
    // drop repeated nodes
    let mut cs = vec![s[0]];
    let mut ci = vec![img[0]];
    for k in 1..s.len() {
        if s[k] > cs.last().unwrap() + 1e-13 && img[k].dist(*ci.last().unwrap()) > 1e-15 {
            cs.push(s[k]);
            ci.push(img[k]);
        }
    }
    if *cs.last().unwrap() < 1.0 {
        // restore the exact terminal node if deduplication removed it
        cs.push(1.0);
        ci.push(Point2::new(
            (1.0 - mu) * bv.right[bv.t.len() - 1].x + mu * pb.x,
            (1.0 - mu) * bv.right[bv.t.len() - 1].y + mu * pb.y,
        ));
    }
    cs[0] = 0.0;
    let last = cs.len() - 1;
    cs[last] = 1.0;
    // every chain meeting at a lattice vertex must carry exactly the same
    // image there, so override the endpoints with the canonical values
    ci[0] = img_a;
    ci[last] = img_b;
    Ok(Chain { s: cs, img: ci })
}

/// Builds the injective piecewise-linear skeleton map on the mesh edges and
/// verifies the measured conclusions: per-quad boundary variation within its
/// budget and global injectivity of the image chains.
pub fn build_boundary_map(
    f: &TestMap,
    cls: &SquareClassification,
    mesh: &PerturbedMesh,
    eps: f64,
    params: &PipelineParams,
) -> Result<SkeletonMap> {
    let n = mesh.n;
    let mu = (params.blend * eps).clamp(1e-6, 0.5);
    let vid = |v: (usize, usize)| v.1 * (n + 1) + v.0;
    let on_boundary = |v: (usize, usize)| v.0 == 0 || v.1 == 0 || v.0 == n || v.1 == n;

    // canonical per-vertex images shared by every incident chain
    let mut vert_img: Vec<Point2> = Vec::with_capacity((n + 1) * (n + 1));
    for iy in 0..=n {
        for ix in 0..=n {
            let p = mesh.vert(ix, iy);
            let img = if f.identity_on_boundary && on_boundary((ix, iy)) {
                p
            } else {
                let v = f.eval(p).ok_or_else(|| {
                    Error::Pipeline(format!("map undefined at mesh vertex ({ix},{iy})"))
                })?;
                Point2::new((1.0 - mu) * v.x + mu * p.x, (1.0 - mu) * v.y + mu * p.y)
            };
            vert_img.push(img);
        }
    }

    let mut chains: HashMap<(usize, usize), Chain> = HashMap::new();
    let mut relinearized = 0usize;
    for (a, b) in mesh.edges() {
        let (pa, pb) = (mesh.vert(a.0, a.1), mesh.vert(b.0, b.1));
        let chain = if f.identity_on_boundary && on_boundary(a) && on_boundary(b) {
            // the map is the identity on the boundary ring; keep it exact
            Chain {
                s: vec![0.0, 1.0],
                img: vec![pa, pb],
            }
        } else {
            let mut c = build_chain(f, pa, pb, mu, vert_img[vid(a)], vert_img[vid(b)])?;
            // re-linearise edges whose neighbourhoods are affine-like so the
            // corner extension applies there
            let affine_like = adjacent_categories(cls, a, b)
                .iter()
                .all(|c| matches!(c, Category::G | Category::T | Category::Plain));
            if affine_like && !c.is_straight() {
                c = Chain {
                    s: vec![0.0, 1.0],
                    img: vec![c.img[0], *c.img.last().unwrap()],
                };
            }
            if c.is_straight() {
                relinearized += usize::from(affine_like);
            }
            let poly = Polyline::new(c.img.clone())?;
            let (inj, _) = crate::geom::is_injective_polyline(&poly);
            if !inj {
                return Err(Error::Injectivity(format!(
                    "skeleton chain on edge ({},{})-({},{}) self-intersects",
                    a.0, a.1, b.0, b.1
                )));
            }
            c
        };
        chains.insert((vid(a).min(vid(b)), vid(a).max(vid(b))), chain);
    }

    let skel = SkeletonMap {
        chains,
        blend: mu,
        ledger: SkeletonLedger::default(),
    };

    // per-quad boundary-variation budget
    let mut worst_ratio: f64 = 0.0;
    let mut worst_share: f64 = 0.0;
    for iy in 0..n {
        for ix in 0..n {
            let var: f64 = quad_edges(ix, iy)
                .iter()
                .map(|&(a, b)| skel.chain(n, a, b).variation())
                .sum();
            let twice = double_rect(&square_rect(cls.k, ix, iy));
            let budget =
                params.c * 2.0f64.powi(cls.k as i32) * measure_query(f, &twice, MeasureKind::Total)?;
            let ratio = var / budget;
            if ratio > 1.0 {
                return Err(Error::Pipeline(format!(
                    "skeleton variation on quad ({ix},{iy}) exceeds its budget by a factor {ratio:.3}"
                )));
            }
            worst_ratio = worst_ratio.max(ratio);

            let info = cls.square(ix, iy);
            if let Some((u, _)) = info.polar {
                let along: f64 = quad_edges(ix, iy)
                    .iter()
                    .map(|&(a, b)| {
                        let c = skel.chain(n, a, b);
                        c.img
                            .windows(2)
                            .map(|w| (w[1].sub(w[0]).dot(u)).abs())
                            .sum::<f64>()
                    })
                    .sum();
                if var > 0.0 {
                    worst_share = worst_share.max(along / var);
                }
            }
        }
    }

    // global injectivity of the skeleton image (bucketed pairwise check)
    check_skeleton_injective(&skel, mesh)?;

    Ok(SkeletonMap {
        ledger: SkeletonLedger {
            worst_variation_ratio: worst_ratio,
            relinearized,
            worst_jump_direction_share: worst_share,
        },
        ..skel
    })
}

/// The four directed edges of quad `(ix, iy)`, counter-clockwise.
pub(super) fn quad_edges(ix: usize, iy: usize) -> [((usize, usize), (usize, usize)); 4] {
    [
        ((ix, iy), (ix + 1, iy)),
        ((ix + 1, iy), (ix + 1, iy + 1)),
        ((ix + 1, iy + 1), (ix, iy + 1)),
        ((ix, iy + 1), (ix, iy)),
    ]
}

fn adjacent_categories(
    cls: &SquareClassification,
    a: (usize, usize),
    b: (usize, usize),
) -> Vec<Category> {
    let n = cls.n();
    let mut out = Vec::new();
    if a.1 == b.1 {
        let ix = a.0.min(b.0);
        if a.1 > 0 {
            out.push(cls.square(ix, a.1 - 1).category);
        }
        if a.1 < n {
            out.push(cls.square(ix, a.1).category);
        }
    } else {
        let iy = a.1.min(b.1);
        if a.0 > 0 {
            out.push(cls.square(a.0 - 1, iy).category);
        }
        if a.0 < n {
            out.push(cls.square(a.0, iy).category);
        }
    }
    out
}

/// Pairwise intersection check of all chain image segments, bucketed on a
/// uniform grid; segments from different chains may only meet at an exactly
/// shared node image.
fn check_skeleton_injective(skel: &SkeletonMap, mesh: &PerturbedMesh) -> Result<()> {
    struct Seg {
        s: Segment,
        chain: usize,
    }
    let mut segs: Vec<Seg> = Vec::new();
    let mut bbox = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (ci, chain) in skel.chains.values().enumerate() {
        for w in chain.img.windows(2) {
            if w[0].dist(w[1]) == 0.0 {
                continue;
            }
            bbox.0 = bbox.0.min(w[0].x.min(w[1].x));
            bbox.1 = bbox.1.min(w[0].y.min(w[1].y));
            bbox.2 = bbox.2.max(w[0].x.max(w[1].x));
            bbox.3 = bbox.3.max(w[0].y.max(w[1].y));
            segs.push(Seg {
                s: Segment::new(w[0], w[1])?,
                chain: ci,
            });
        }
    }
    let m = (mesh.n * 2).max(8);
    let (sx, sy) = (
        (bbox.2 - bbox.0).max(1e-9) / m as f64,
        (bbox.3 - bbox.1).max(1e-9) / m as f64,
    );
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, seg) in segs.iter().enumerate() {
        let (x0, x1) = (seg.s.a.x.min(seg.s.b.x), seg.s.a.x.max(seg.s.b.x));
        let (y0, y1) = (seg.s.a.y.min(seg.s.b.y), seg.s.a.y.max(seg.s.b.y));
        let (cx0, cx1) = (((x0 - bbox.0) / sx) as i64, ((x1 - bbox.0) / sx) as i64);
        let (cy0, cy1) = (((y0 - bbox.1) / sy) as i64, ((y1 - bbox.1) / sy) as i64);
        for cx in cx0..=cx1 {
            for cy in cy0..=cy1 {
                buckets.entry((cx, cy)).or_default().push(i);
            }
        }
    }
    let mut seen: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    for ids in buckets.values() {
        for (p, &i) in ids.iter().enumerate() {
            for &j in &ids[p + 1..] {
                if segs[i].chain == segs[j].chain || !seen.insert((i.min(j), i.max(j))) {
                    continue;
                }
                let (a, b) = (&segs[i].s, &segs[j].s);
                let shared = a.a == b.a || a.a == b.b || a.b == b.a || a.b == b.b;
                match segment_intersection(a, b)? {
                    SegmentIntersection::Empty => {}
                    SegmentIntersection::Point(_) if shared => {}
                    _ => {
                        return Err(Error::Injectivity(
                            "skeleton image chains intersect away from shared nodes".to_string(),
                        ))
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
    use crate::pipeline::{classify_dyadic, perturb_vertices};
    use std::collections::BTreeMap;

    fn map(kind: &str, params: &[(&str, f64)]) -> TestMap {
        let p: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        crate::mapcat::make_catalogue_map(kind, &p).unwrap()
    }

    fn stages(f: &TestMap, eps: f64) -> (SquareClassification, PerturbedMesh, SkeletonMap) {
        let params = PipelineParams::default();
        let cls = classify_dyadic(f, eps, 0.05).unwrap();
        let mesh = perturb_vertices(f, &cls, &params).unwrap();
        let skel = build_boundary_map(f, &cls, &mesh, eps, &params).unwrap();
        (cls, mesh, skel)
    }

    #[test]
    fn identity_skeleton_is_nearly_the_mesh_embedding() {
        let f = map("identity", &[]);
        let (_, mesh, skel) = stages(&f, 0.2);
        for (a, b) in mesh.edges() {
            let c = skel.chain(mesh.n, a, b);
            assert!(c.is_straight());
            assert!(c.img[0].dist(mesh.vert(a.0, a.1)) < 1e-12);
            assert!(c.img[1].dist(mesh.vert(b.0, b.1)) < 1e-12);
        }
        assert!(skel.ledger.worst_variation_ratio < 0.1);
    }

    #[test]
    fn fracture_skeleton_opens_the_crack() {
        let f = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let (_, mesh, skel) = stages(&f, 0.1);
        // some chain crossing the seam must contain a fill segment of length
        // comparable to the jump size
        let mut widest: f64 = 0.0;
        for (a, b) in mesh.edges() {
            let c = skel.chain(mesh.n, a, b);
            for w in c.img.windows(2) {
                let gap = (w[1].x - w[0].x).abs();
                let dom_a = mesh.vert(a.0, a.1);
                let dom_b = mesh.vert(b.0, b.1);
                if dom_a.x.min(dom_b.x) < 0.0 && dom_a.x.max(dom_b.x) > 0.0 {
                    widest = widest.max(gap);
                }
            }
        }
        assert!(widest > 0.1, "widest fill segment {widest}");
    }

    #[test]
    fn boundary_ring_chains_are_exactly_the_identity() {
        let f = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let (_, mesh, skel) = stages(&f, 0.1);
        let n = mesh.n;
        for i in 0..n {
            let c = skel.chain(n, (i, 0), (i + 1, 0));
            assert_eq!(c.img[0], mesh.vert(i, 0));
            assert_eq!(c.img[1], mesh.vert(i + 1, 0));
        }
    }
}
