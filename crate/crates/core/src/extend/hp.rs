//! Total-variation-bounded homeomorphic extension of an injective
//! piecewise-linear boundary map on a convex polygon: the image region is
//! triangulated, the triangulation is embedded back into the convex domain
//! by a convex-combination (Tutte-type) solve, and the correspondence is
//! certified and refined until it is a homeomorphism.

use super::boundary::BoundaryData;
use crate::geom::triangulate::insert_point;
use crate::geom::{
    certify_homeomorphism, pa_total_variation, signed_area, triangulate_simple_polygon, Point2,
    PaHomeo, Triangulation,
};
use crate::{Error, Result};
use std::collections::HashMap;

/// Hard cap on 4-to-1 refinement rounds before the construction gives up.
pub const MAX_REFINEMENT_ROUNDS: usize = 12;

/// Report of [`extend_hp`]: the realized total variation against the
/// `diameter * boundary variation` yardstick.
#[derive(Debug, Clone)]
pub struct HpReport {
    pub ratio: f64,
    pub total_variation: f64,
    pub boundary_variation: f64,
    pub diameter: f64,
    pub triangles: usize,
    pub rounds: usize,
}

/// Extends the boundary map to a finitely piecewise-affine homeomorphism of
/// the convex domain onto the image region and reports the realized
/// total-variation ratio.
pub fn extend_hp(bd: &BoundaryData) -> Result<(PaHomeo, HpReport)> {
    let (g, rounds) = extend_by_embedding(bd, MAX_REFINEMENT_ROUNDS)?;
    let region: Vec<usize> = (0..g.domain.triangles.len()).collect();
    let total_variation = pa_total_variation(&g, &region)?;
    let boundary_variation = bd.image_length();
    let diameter = bd.diameter();
    let report = HpReport {
        ratio: total_variation / (diameter * boundary_variation),
        total_variation,
        boundary_variation,
        diameter,
        triangles: region.len(),
        rounds,
    };
    Ok((g, report))
}

/// Mesh state threaded through the refinement rounds: image positions with
/// fixed combinatorics, and domain positions that are pinned for boundary
/// vertices and solved for interior ones.
struct Mesh {
    img: Vec<Point2>,
    /// Pinned domain position (boundary vertices) or `None` (interior).
    dom: Vec<Option<Point2>>,
    triangles: Vec<[usize; 3]>,
}

/// Shared engine for the extension operators: triangulate the image,
/// embed into the convex domain, certify, refine.
pub(crate) fn extend_by_embedding(
    bd: &BoundaryData,
    max_rounds: usize,
) -> Result<(PaHomeo, usize)> {
    let mut mesh = initial_mesh(bd)?;
    let scale = bd.diameter();
    let mut last_failure = String::new();
    for round in 0..=max_rounds {
        let dom = solve_domain_positions(&mesh, bd, scale);
        match realize(&mesh, dom) {
            Ok(g) => {
                let cert = certify_homeomorphism(&g);
                if cert.is_pass() {
                    return Ok((g, round));
                }
                last_failure = format!("{cert:?}");
            }
            Err(e) => last_failure = e.to_string(),
        }
        if round < max_rounds {
            subdivide(&mut mesh);
        }
    }
    Err(Error::Extension(format!(
        "embedding did not certify within {max_rounds} refinement rounds \
         ({} triangles): {last_failure}",
        mesh.triangles.len()
    )))
}

/// Ear-clips the image region and splits every triangle whose three domain
/// break-points are collinear (a configuration no midpoint refinement can
/// repair) at its image centroid, creating an interior vertex for the solve.
fn initial_mesh(bd: &BoundaryData) -> Result<Mesh> {
    let mut tri = triangulate_simple_polygon(&bd.image_polygon(), &[])?;
    let n = bd.dom.len();
    debug_assert_eq!(tri.vertices.len(), n);
    let area_floor = 1e-14 * bd.diameter() * bd.diameter();
    loop {
        let mut split_at = None;
        for t in &tri.triangles {
            if t.iter().all(|&v| v < n) {
                let d = [bd.dom[t[0]], bd.dom[t[1]], bd.dom[t[2]]];
                if signed_area(&d) <= area_floor {
                    let [a, b, c] = [tri.vertices[t[0]], tri.vertices[t[1]], tri.vertices[t[2]]];
                    split_at = Some(Point2::new(
                        (a.x + b.x + c.x) / 3.0,
                        (a.y + b.y + c.y) / 3.0,
                    ));
                    break;
                }
            }
        }
        match split_at {
            Some(p) => insert_point(&mut tri, p)?,
            None => break,
        }
    }
    let dom = (0..tri.vertices.len())
        .map(|v| if v < n { Some(bd.dom[v]) } else { None })
        .collect();
    Ok(Mesh {
        img: tri.vertices,
        dom,
        triangles: tri.triangles,
    })
}

/// Places interior vertices at the convex-combination (uniform-weight)
/// solution of the mesh graph with the boundary pinned, by Gauss-Seidel
/// sweeps. With a convex boundary this is an embedding.
fn solve_domain_positions(mesh: &Mesh, bd: &BoundaryData, scale: f64) -> Vec<Point2> {
    let v = mesh.img.len();
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); v];
    for t in &mesh.triangles {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            if !neighbors[a].contains(&b) {
                neighbors[a].push(b);
            }
            if !neighbors[b].contains(&a) {
                neighbors[b].push(a);
            }
        }
    }
    let centroid = {
        let n = bd.dom.len() as f64;
        let (sx, sy) = bd.dom.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
        Point2::new(sx / n, sy / n)
    };
    let mut pos: Vec<Point2> = mesh
        .dom
        .iter()
        .map(|d| d.unwrap_or(centroid))
        .collect();
    let free: Vec<usize> = (0..v).filter(|&k| mesh.dom[k].is_none()).collect();
    if free.is_empty() {
        return pos;
    }
    let tol = 1e-14 * scale.max(1.0);
    for _ in 0..20_000 {
        let mut moved: f64 = 0.0;
        for &k in &free {
            let (mut sx, mut sy) = (0.0, 0.0);
            for &nb in &neighbors[k] {
                sx += pos[nb].x;
                sy += pos[nb].y;
            }
            let m = neighbors[k].len() as f64;
            let q = Point2::new(sx / m, sy / m);
            moved = moved.max(q.dist(pos[k]));
            pos[k] = q;
        }
        if moved < tol {
            break;
        }
    }
    pos
}

fn realize(mesh: &Mesh, dom: Vec<Point2>) -> Result<PaHomeo> {
    let tri = Triangulation::from_parts(dom, mesh.triangles.clone())?;
    PaHomeo::new(tri, mesh.img.clone())
}

/// 4-to-1 midpoint refinement in place. Midpoints of mesh-boundary edges
/// are pinned boundary vertices (the boundary map is linear between
/// break-points, so arithmetic midpoints match it exactly); midpoints of
/// interior edges are solved with the other interior vertices.
fn subdivide(mesh: &mut Mesh) {
    let mut edge_use: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &mesh.triangles {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            *edge_use.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |mesh: &mut Mesh,
                   midpoint: &mut HashMap<(usize, usize), usize>,
                   a: usize,
                   b: usize|
     -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&v) = midpoint.get(&key) {
            return v;
        }
        let v = mesh.img.len();
        mesh.img.push(mesh.img[a].mid(mesh.img[b]));
        let pinned = edge_use[&key] == 1;
        mesh.dom.push(match (pinned, mesh.dom[a], mesh.dom[b]) {
            (true, Some(da), Some(db)) => Some(da.mid(db)),
            _ => None,
        });
        midpoint.insert(key, v);
        v
    };
    let old = std::mem::take(&mut mesh.triangles);
    for t in old {
        let [a, b, c] = t;
        let mab = mid(mesh, &mut midpoint, a, b);
        let mbc = mid(mesh, &mut midpoint, b, c);
        let mca = mid(mesh, &mut midpoint, c, a);
        mesh.triangles.push([a, mab, mca]);
        mesh.triangles.push([b, mbc, mab]);
        mesh.triangles.push([c, mca, mbc]);
        mesh.triangles.push([mab, mbc, mca]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extend::boundary::{square_identity, square_loop};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_boundary_extends_to_the_identity() {
        let bd = square_identity(1.0, 1);
        let (g, rep) = extend_hp(&bd).unwrap();
        assert_eq!(rep.rounds, 0);
        for &(x, y) in &[(0.3, -0.4), (0.0, 0.0), (-0.9, 0.9)] {
            let p = Point2::new(x, y);
            assert!(g.eval(p).unwrap().dist(p) < 1e-12);
        }
        // total variation of the identity on the square: area * sqrt(2)
        assert!((rep.total_variation - 4.0 * 2.0f64.sqrt()).abs() < 1e-9);
        let expected = 4.0 * 2.0f64.sqrt() / (8.0f64.sqrt() * 8.0);
        assert!((rep.ratio - expected).abs() < 1e-12);
    }

    #[test]
    fn linear_boundary_extends_to_the_linear_map() {
        let d = square_loop(1.0, 0);
        let i: Vec<Point2> = d.iter().map(|p| Point2::new(2.0 * p.x, p.y)).collect();
        let bd = BoundaryData::new(d, i).unwrap();
        let (g, rep) = extend_hp(&bd).unwrap();
        for t in 0..g.domain.triangles.len() {
            let m = g.derivative(t);
            assert!((m[(0, 0)] - 2.0).abs() < 1e-12 && (m[(1, 1)] - 1.0).abs() < 1e-12);
            assert!(m[(0, 1)].abs() < 1e-12 && m[(1, 0)].abs() < 1e-12);
        }
        assert!((rep.total_variation - 4.0 * 5.0f64.sqrt()).abs() < 1e-9);
    }

    /// Random star-shaped jitter of the square boundary, n break-points.
    fn star_boundary(n: usize, rng: &mut impl Rng) -> BoundaryData {
        crate::extend::corpus::random_star_boundary(n, rng)
    }

    #[test]
    fn random_star_corpus_certifies_with_bounded_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut max_ratio: f64 = 0.0;
        for _ in 0..20 {
            let n = 4 * rng.gen_range(2..=8);
            let bd = star_boundary(n, &mut rng);
            let (g, rep) = extend_hp(&bd).unwrap();
            assert!(certify_homeomorphism(&g).is_pass());
            max_ratio = max_ratio.max(rep.ratio);
        }
        assert!(max_ratio <= 1000.0, "max ratio {max_ratio}");
    }

    #[test]
    fn ratio_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bd = star_boundary(16, &mut rng);
        let (_, rep) = extend_hp(&bd).unwrap();
        let (_, rep_scaled) = extend_hp(&bd.scaled(3.7).unwrap()).unwrap();
        assert!((rep.ratio - rep_scaled.ratio).abs() < 1e-9);
    }

    #[test]
    fn boundary_break_points_are_matched_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let bd = star_boundary(24, &mut rng);
        let (g, _) = extend_hp(&bd).unwrap();
        for (d, i) in bd.dom.iter().zip(&bd.img) {
            let k = g
                .domain
                .vertices
                .iter()
                .position(|v| v == d)
                .expect("break-point is a mesh vertex");
            assert_eq!(g.image[k], *i);
        }
    }
}
