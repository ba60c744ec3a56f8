//! Random perturbation of the dyadic lattice into a convex quadrilateral
//! mesh whose edges pass per-edge quality checks.

use nalgebra::Vector2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geom::{segment_intersection, Point2, Polyline, Segment, SegmentIntersection};
use crate::mapcat::{measure_query, restrict_to_polyline, MeasureKind, TestMap};
use crate::{Error, Result};

use super::classify::{double_rect, is_differentiability_point, square_rect};
use super::{Category, PipelineParams, SquareClassification};

/// Ledger entry for one mesh edge: the measured one-dimensional variation of
/// the map along the edge against its budget, the number of transversal jump
/// crossings, and the worst crossing transversality.
#[derive(Debug, Clone)]
pub struct EdgeCheck {
    pub a: (usize, usize),
    pub b: (usize, usize),
    pub variation: f64,
    pub bound: f64,
    pub crossings: usize,
    pub min_transversality: f64,
}

/// A perturbed quadrilateral mesh over the level-`K` dyadic lattice. The
/// boundary lattice points are kept fixed; every interior point moves within
/// the square of radius `2^{-K-2}` around its lattice position.
#[derive(Debug, Clone)]
pub struct PerturbedMesh {
    pub k: u32,
    pub n: usize,
    /// `(n+1)^2` vertices, row-major from the lower-left corner.
    pub verts: Vec<Point2>,
    pub ledger: Vec<EdgeCheck>,
    /// Fraction of perturbation draws that were accepted.
    pub acceptance: f64,
}

impl PerturbedMesh {
    pub fn vert(&self, ix: usize, iy: usize) -> Point2 {
        self.verts[iy * (self.n + 1) + ix]
    }

    /// Counter-clockwise corners of quadrilateral `(ix, iy)`.
    pub fn quad(&self, ix: usize, iy: usize) -> [Point2; 4] {
        [
            self.vert(ix, iy),
            self.vert(ix + 1, iy),
            self.vert(ix + 1, iy + 1),
            self.vert(ix, iy + 1),
        ]
    }

    /// All lattice edges as index pairs (horizontal, then vertical).
    pub fn edges(&self) -> Vec<((usize, usize), (usize, usize))> {
        let n = self.n;
        let mut out = Vec::with_capacity(2 * n * (n + 1));
        for iy in 0..=n {
            for ix in 0..n {
                out.push(((ix, iy), (ix + 1, iy)));
            }
        }
        for iy in 0..n {
            for ix in 0..=n {
                out.push(((ix, iy), (ix, iy + 1)));
            }
        }
        out
    }
}

/// Squares of the lattice adjacent to the edge `a -> b`.
fn adjacent_squares(n: usize, a: (usize, usize), b: (usize, usize)) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if a.1 == b.1 {
        // horizontal edge at row a.1, columns min(a.0,b.0)
        let ix = a.0.min(b.0);
        if a.1 > 0 {
            out.push((ix, a.1 - 1));
        }
        if a.1 < n {
            out.push((ix, a.1));
        }
    } else {
        let iy = a.1.min(b.1);
        if a.0 > 0 {
            out.push((a.0 - 1, iy));
        }
        if a.0 < n {
            out.push((a.0, iy));
        }
    }
    out
}

fn check_edge(
    f: &TestMap,
    cls: &SquareClassification,
    params: &PipelineParams,
    a: (usize, usize),
    b: (usize, usize),
    pa: Point2,
    pb: Point2,
) -> std::result::Result<EdgeCheck, String> {
    let n = cls.n();
    let k = cls.k;
    let dir = pb.sub(pa).normalize();

    // no jump mass on the edge itself, and every crossing transversal
    let seg = Segment::new(pa, pb).map_err(|_| "degenerate edge".to_string())?;
    let mut crossings = 0usize;
    let mut min_trans = f64::INFINITY;
    for arc in &f.jumps {
        match segment_intersection(&seg, &arc.seg).map_err(|e| e.to_string())? {
            SegmentIntersection::Empty => {}
            SegmentIntersection::Overlap(_, _) => {
                return Err("edge overlaps a jump arc".to_string());
            }
            SegmentIntersection::Point(_) => {
                let t = (dir.x * arc.normal.x + dir.y * arc.normal.y).abs();
                if t < params.beta {
                    return Err(format!(
                        "jump crossing not transversal (|cos| = {t:.3e} < {})",
                        params.beta
                    ));
                }
                crossings += 1;
                min_trans = min_trans.min(t);
            }
        }
    }

    // the one-dimensional restriction must be continuous at the endpoints
    let line = Polyline::new(vec![pa, pb]).map_err(|e| e.to_string())?;
    let bv = restrict_to_polyline(f, &line).map_err(|e| e.to_string())?;
    for j in &bv.jumps {
        if j.t < 1e-9 || j.t > 1.0 - 1e-9 {
            return Err("restriction jumps at an endpoint".to_string());
        }
    }

    // variation budget against each adjacent doubled square
    let variation = bv.var_total(1.0);
    let mut bound = f64::INFINITY;
    for (ix, iy) in adjacent_squares(n, a, b) {
        let twice = double_rect(&square_rect(k, ix, iy));
        let df = measure_query(f, &twice, MeasureKind::Total).map_err(|e| e.to_string())?;
        bound = bound.min(params.c * 2.0f64.powi(k as i32) * df);
    }
    if variation > bound {
        return Err(format!(
            "edge variation {variation:.6e} exceeds budget {bound:.6e}"
        ));
    }

    Ok(EdgeCheck {
        a,
        b,
        variation,
        bound,
        crossings,
        min_transversality: if crossings == 0 { 1.0 } else { min_trans },
    })
}

/// Affine-approximation defect of `f` at `p` around the reference point of a
/// square with definite or vanishing Jacobian.
fn membership_defect(f: &TestMap, cls: &SquareClassification, sq: (usize, usize), p: Point2) -> f64 {
    let info = cls.square(sq.0, sq.1);
    let (Some(fp), Some(fw)) = (f.eval(p), f.eval(info.w)) else {
        return f64::INFINITY;
    };
    let lin = info.grad * Vector2::new(p.x - info.w.x, p.y - info.w.y);
    Point2::new(fw.x + lin.x, fw.y + lin.y).dist(fp)
}

fn vertex_ok(
    f: &TestMap,
    cls: &SquareClassification,
    ix: usize,
    iy: usize,
    p: Point2,
) -> std::result::Result<(), String> {
    if !is_differentiability_point(f, p) {
        return Err("not a differentiability point".to_string());
    }
    // incident squares with definite or vanishing Jacobian require the
    // vertex to lie in their affine-approximation set
    let n = cls.n();
    let bound = cls.alpha.powi(4) * 2.0f64.powi(-(cls.k as i32));
    for (sx, sy) in [
        (ix.wrapping_sub(1), iy.wrapping_sub(1)),
        (ix, iy.wrapping_sub(1)),
        (ix.wrapping_sub(1), iy),
        (ix, iy),
    ] {
        if sx >= n || sy >= n {
            continue;
        }
        let cat = cls.square(sx, sy).category;
        if matches!(cat, Category::G | Category::T)
            && membership_defect(f, cls, (sx, sy), p) > bound
        {
            return Err(format!(
                "vertex outside the affine-approximation set of square ({sx},{sy})"
            ));
        }
    }
    Ok(())
}

/// Perturbs the interior dyadic lattice points by rejection sampling so that
/// every mesh edge passes the per-edge checks: differentiable endpoints,
/// endpoint continuity of the restriction, transversal jump crossings, no
/// singular mass along the edge, a variation budget against the doubled
/// neighbouring squares, and affine-approximation membership for squares
/// with definite or vanishing Jacobian.
pub fn perturb_vertices(
    f: &TestMap,
    cls: &SquareClassification,
    params: &PipelineParams,
) -> Result<PerturbedMesh> {
    let n = cls.n();
    let k = cls.k;
    let h = 2.0f64.powi(1 - k as i32);
    let rho = 2.0f64.powi(-(k as i32) - 2);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let lattice = |ix: usize, iy: usize| Point2::new(-1.0 + ix as f64 * h, -1.0 + iy as f64 * h);
    let mut verts: Vec<Point2> = (0..=n)
        .flat_map(|iy| (0..=n).map(move |ix| lattice(ix, iy)))
        .collect();

    let mut draws = 0usize;
    let mut accepted = 0usize;
    for iy in 1..n {
        for ix in 1..n {
            let mut last_fail = String::new();
            let mut placed = false;
            for _ in 0..params.budget.max(1) {
                draws += 1;
                let p = Point2::new(
                    lattice(ix, iy).x + rng.gen_range(-rho..=rho),
                    lattice(ix, iy).y + rng.gen_range(-rho..=rho),
                );
                match vertex_ok(f, cls, ix, iy, p) {
                    Err(e) => {
                        last_fail = e;
                        continue;
                    }
                    Ok(()) => {}
                }
                // edges towards the already-finalised neighbours
                let mut edge_fail = None;
                for (jx, jy) in [(ix - 1, iy), (ix, iy - 1)] {
                    let q = verts[jy * (n + 1) + jx];
                    if let Err(e) = check_edge(f, cls, params, (jx, jy), (ix, iy), q, p) {
                        edge_fail = Some(e);
                        break;
                    }
                }
                if let Some(e) = edge_fail {
                    last_fail = e;
                    continue;
                }
                verts[iy * (n + 1) + ix] = p;
                accepted += 1;
                placed = true;
                break;
            }
            if !placed {
                return Err(Error::Pipeline(format!(
                    "perturbation budget exhausted at lattice vertex ({ix},{iy}): {last_fail}"
                )));
            }
        }
    }

    let mesh = PerturbedMesh {
        k,
        n,
        verts,
        ledger: Vec::new(),
        acceptance: if draws == 0 {
            1.0
        } else {
            accepted as f64 / draws as f64
        },
    };

    // final ledger over every edge (right/top edges of each vertex were
    // checked when the opposite endpoint was placed; this re-checks all)
    let mut ledger = Vec::new();
    for (a, b) in mesh.edges() {
        let (pa, pb) = (mesh.vert(a.0, a.1), mesh.vert(b.0, b.1));
        match check_edge(f, cls, params, a, b, pa, pb) {
            Ok(entry) => ledger.push(entry),
            Err(e) => {
                return Err(Error::Pipeline(format!(
                    "edge ({},{})-({},{}) fails its quality check: {e}",
                    a.0, a.1, b.0, b.1
                )))
            }
        }
    }

    // convexity of every quadrilateral
    for iy in 0..n {
        for ix in 0..n {
            let q = mesh.quad(ix, iy);
            for i in 0..4 {
                let (a, b, c) = (q[i], q[(i + 1) % 4], q[(i + 2) % 4]);
                if b.sub(a).cross(c.sub(b)) <= 0.0 {
                    return Err(Error::Pipeline(format!(
                        "quadrilateral ({ix},{iy}) is not convex"
                    )));
                }
            }
        }
    }

    Ok(PerturbedMesh { ledger, ..mesh })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::classify_dyadic;
    use std::collections::BTreeMap;

    fn map(kind: &str, params: &[(&str, f64)]) -> TestMap {
        let p: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        crate::mapcat::make_catalogue_map(kind, &p).unwrap()
    }

    #[test]
    fn identity_perturbation_accepts_quickly_and_tiles() {
        let f = map("identity", &[]);
        let cls = classify_dyadic(&f, 0.2, 0.05).unwrap();
        let mesh = perturb_vertices(&f, &cls, &PipelineParams::default()).unwrap();
        assert!(mesh.acceptance >= 0.5, "acceptance {}", mesh.acceptance);
        // quads tile the square: areas sum to 4
        let mut area = 0.0;
        for iy in 0..mesh.n {
            for ix in 0..mesh.n {
                let q = mesh.quad(ix, iy);
                area += crate::geom::signed_area(&q);
            }
        }
        assert!((area - 4.0).abs() < 1e-9, "area {area}");
        // identity edge variation equals the edge length, far below budget
        for e in &mesh.ledger {
            let len = mesh.vert(e.a.0, e.a.1).dist(mesh.vert(e.b.0, e.b.1));
            assert!((e.variation - len).abs() < 1e-9);
            assert!(e.variation <= e.bound);
        }
    }

    #[test]
    fn fracture_edges_cross_the_seam_transversally() {
        let f = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let cls = classify_dyadic(&f, 0.1, 0.05).unwrap();
        let mesh = perturb_vertices(&f, &cls, &PipelineParams::default()).unwrap();
        assert!(mesh.acceptance >= 0.5, "acceptance {}", mesh.acceptance);
        let crossing_edges: Vec<_> = mesh.ledger.iter().filter(|e| e.crossings > 0).collect();
        assert!(!crossing_edges.is_empty());
        for e in crossing_edges {
            assert!(e.min_transversality >= 0.05);
        }
    }

    #[test]
    fn boundary_vertices_stay_fixed() {
        let f = map("identity", &[]);
        let cls = classify_dyadic(&f, 0.2, 0.05).unwrap();
        let mesh = perturb_vertices(&f, &cls, &PipelineParams::default()).unwrap();
        let n = mesh.n;
        for i in 0..=n {
            assert_eq!(mesh.vert(i, 0).y, -1.0);
            assert_eq!(mesh.vert(i, n).y, 1.0);
            assert_eq!(mesh.vert(0, i).x, -1.0);
            assert_eq!(mesh.vert(n, i).x, 1.0);
        }
    }
}
