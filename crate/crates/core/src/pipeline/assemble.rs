//! Per-quadrilateral homeomorphic extension dispatched by category, glued
//! into one certified global piecewise-affine homeomorphism.

use std::collections::HashMap;

use nalgebra::Matrix2;
use rayon::prelude::*;

use crate::extend::{
    affine_corner_extension, extend_componentwise, extend_degenerate, extend_hp, BoundaryData,
};
use crate::geom::{certify_homeomorphism, PaHomeo, Point2, Triangulation};
use crate::{Error, Result};

use super::perturb::PerturbedMesh;
use super::skeleton::{quad_edges, Chain, SkeletonMap};
use super::{Category, SquareClassification};

/// The assembled global map with per-triangle provenance.
#[derive(Debug, Clone)]
pub struct AssembledMap {
    pub g: PaHomeo,
    /// Source quad (`iy * n + ix`) of each triangle.
    pub tri_quad: Vec<usize>,
    /// Quads whose category-preferred extension failed its preconditions and
    /// fell back to the harmonic-style extension, with the reason.
    pub fallbacks: Vec<(usize, String)>,
    /// Worst componentwise directional slack over E-square extensions that
    /// shipped through the componentwise construction (non-positive means
    /// both directional inequalities held).
    pub e_slack: Option<f64>,
    /// Number of E-squares extended by the componentwise construction.
    pub e_extended: usize,
}

/// Boundary data of quad `(ix, iy)`: the four chains concatenated
/// counter-clockwise, with domain breakpoints placed on the straight edges.
fn quad_boundary(
    mesh: &PerturbedMesh,
    skel: &SkeletonMap,
    ix: usize,
    iy: usize,
) -> Result<BoundaryData> {
    let mut dom = Vec::new();
    let mut img = Vec::new();
    for (a, b) in quad_edges(ix, iy) {
        let (pa, pb) = (mesh.vert(a.0, a.1), mesh.vert(b.0, b.1));
        let c = skel.chain(mesh.n, a, b);
        for k in 0..c.s.len() - 1 {
            dom.push(pa.lerp(pb, c.s[k]));
            img.push(c.img[k]);
        }
    }
    BoundaryData::new(dom, img)
}

/// Closed-form 2×2 singular value decomposition with proper rotations:
/// `rot(phi)ᵀ · a · rot(theta) = diag(s1, s2)` with `s1 ≥ |s2|` and `s2`
/// carrying the sign of the determinant.
pub(super) fn svd2(a: &Matrix2<f64>) -> (f64, f64, f64, f64) {
    let e = (a[(0, 0)] + a[(1, 1)]) / 2.0;
    let f = (a[(0, 0)] - a[(1, 1)]) / 2.0;
    let g = (a[(1, 0)] + a[(0, 1)]) / 2.0;
    let h = (a[(1, 0)] - a[(0, 1)]) / 2.0;
    let q = e.hypot(h);
    let r = f.hypot(g);
    let s1 = q + r;
    let s2 = q - r;
    let a1 = g.atan2(f);
    let a2 = h.atan2(e);
    let theta = (a1 - a2) / 2.0;
    let phi = (a1 + a2) / 2.0;
    (phi, s1, s2, theta)
}

fn rot(p: Point2, angle: f64) -> Point2 {
    let (s, c) = angle.sin_cos();
    Point2::new(c * p.x - s * p.y, s * p.x + c * p.y)
}

/// Extension of a nearly-degenerate quad: conjugate by the rotations
/// aligning the reference derivative with `diag(d, 0)`, extend, and rotate
/// back.
fn extend_t_square(bd: &BoundaryData, grad: &Matrix2<f64>) -> Result<PaHomeo> {
    let (phi, s1, _s2, theta) = svd2(grad);
    if !(s1 > 0.0) {
        return Err(Error::Precondition(
            "degenerate square has a vanishing derivative".to_string(),
        ));
    }
    let dom: Vec<Point2> = bd.dom.iter().map(|&p| rot(p, -theta)).collect();
    let img: Vec<Point2> = bd.img.iter().map(|&p| rot(p, -phi)).collect();
    let rbd = BoundaryData::new(dom, img)?;
    let target = Matrix2::new(s1, 0.0, 0.0, 0.0);
    let tangent_l1 = rbd.tangent_deviation_integral(&target);
    let sup = rbd.sup_tangent_norm();
    let r0 = rbd.diameter() / 4.0 * (1.0 + 1e-9);
    let delta = (tangent_l1 / r0 * 1.5 + 1e-9).max((sup - s1).max(0.0) / 2.0 * 1.5 + 1e-9);
    let (gq, _) = extend_degenerate(&rbd, s1, delta, r0)?;
    let verts: Vec<Point2> = gq.domain.vertices.iter().map(|&p| rot(p, theta)).collect();
    let imgs: Vec<Point2> = gq.image.iter().map(|&p| rot(p, phi)).collect();
    PaHomeo::new(Triangulation::from_parts(verts, gq.domain.triangles)?, imgs)
}

struct QuadResult {
    verts: Vec<Point2>,
    imgs: Vec<Point2>,
    tris: Vec<[usize; 3]>,
    fallback: Option<String>,
    e_slack: Option<f64>,
}

fn extend_quad(
    mesh: &PerturbedMesh,
    skel: &SkeletonMap,
    cls: &SquareClassification,
    eps: f64,
    ix: usize,
    iy: usize,
) -> Result<QuadResult> {
    let bd = quad_boundary(mesh, skel, ix, iy)?;
    let info = cls.square(ix, iy);
    let mut fallback = None;
    let mut e_slack = None;

    let preferred: Result<PaHomeo> = match info.category {
        Category::Plain | Category::G => {
            if bd.len() == 4 {
                affine_corner_extension(&bd)
            } else {
                Err(Error::Precondition(
                    "boundary data has interior breakpoints".to_string(),
                ))
            }
        }
        Category::T => extend_t_square(&bd, &info.grad),
        Category::E => {
            let theta = info
                .polar
                .map(|(_, nu)| nu.y.atan2(nu.x))
                .unwrap_or(0.0);
            extend_componentwise(&bd, theta, eps).map(|(g, rep)| {
                e_slack = Some(rep.slack());
                g
            })
        }
        Category::W | Category::F => extend_hp(&bd).map(|(g, _)| g),
    };

    let g = match preferred {
        Ok(g) => g,
        Err(e) => {
            if matches!(info.category, Category::W | Category::F) {
                return Err(Error::Pipeline(format!(
                    "extension failed on quad ({ix},{iy}): {e}"
                )));
            }
            fallback = Some(e.to_string());
            extend_hp(&bd)
                .map(|(g, _)| g)
                .map_err(|e| Error::Pipeline(format!("extension failed on quad ({ix},{iy}): {e}")))?
        }
    };

    // canonicalise boundary vertices onto the shared chains so neighbouring
    // quads agree bitwise on shared nodes
    let corners = mesh.quad(ix, iy);
    let chains: Vec<Chain> = quad_edges(ix, iy)
        .iter()
        .map(|&(a, b)| skel.chain(mesh.n, a, b))
        .collect();
    let mut verts = g.domain.vertices.clone();
    let mut imgs = g.image.clone();
    for &vi in &g.boundary_loop() {
        let p = verts[vi];
        let Some((edge, s)) = locate_on_quad(&corners, p) else {
            return Err(Error::Pipeline(format!(
                "quad ({ix},{iy}): boundary vertex off the quad outline"
            )));
        };
        let (a, b) = (corners[edge], corners[(edge + 1) % 4]);
        let chain = &chains[edge];
        // snap exactly onto chain nodes when within tolerance
        let s = chain
            .s
            .iter()
            .find(|&&sk| (sk - s).abs() <= 1e-12)
            .copied()
            .unwrap_or(s);
        verts[vi] = if s == 0.0 {
            a
        } else if s == 1.0 {
            b
        } else {
            a.lerp(b, s)
        };
        imgs[vi] = chain.eval(s);
    }
    Ok(QuadResult {
        verts,
        imgs,
        tris: g.domain.triangles,
        fallback,
        e_slack,
    })
}

/// Finds the quad outline edge containing `p` (within tolerance) and the
/// parameter along it, measured on the dominant coordinate.
fn locate_on_quad(corners: &[Point2; 4], p: Point2) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for e in 0..4 {
        let (a, b) = (corners[e], corners[(e + 1) % 4]);
        let ab = b.sub(a);
        let len2 = ab.dot(ab);
        let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
        let d = p.dist(a.add(ab.scale(t)));
        if best.map_or(true, |(_, _, bd)| d < bd) {
            best = Some((e, t, d));
        }
    }
    let (e, t, d) = best?;
    (d <= 1e-9).then_some((e, t))
}

/// Assembles the global piecewise-affine homeomorphism from the
/// per-quadrilateral extensions: each quad is extended by its
/// category-preferred construction, boundary vertices are canonicalised to
/// the shared skeleton chains, the pieces are glued with a conforming
/// closure for hanging nodes, and the result is certified globally.
pub fn assemble_homeo(
    f: &crate::mapcat::TestMap,
    cls: &SquareClassification,
    mesh: &PerturbedMesh,
    skel: &SkeletonMap,
    eps: f64,
) -> Result<AssembledMap> {
    let n = mesh.n;
    let results: Vec<Result<QuadResult>> = (0..n * n)
        .into_par_iter()
        .map(|q| extend_quad(mesh, skel, cls, eps, q % n, q / n))
        .collect();

    let mut verts: Vec<Point2> = Vec::new();
    let mut imgs: Vec<Point2> = Vec::new();
    let mut tris: Vec<[usize; 3]> = Vec::new();
    let mut tri_quad: Vec<usize> = Vec::new();
    let mut index: HashMap<(u64, u64), usize> = HashMap::new();
    let mut fallbacks = Vec::new();
    let mut e_slack: Option<f64> = None;
    let mut e_extended = 0usize;

    for (q, res) in results.into_iter().enumerate() {
        let r = res?;
        if let Some(reason) = r.fallback {
            fallbacks.push((q, reason));
        } else if cls.squares[q].category == Category::E {
            e_extended += 1;
        }
        if let Some(s) = r.e_slack {
            e_slack = Some(e_slack.map_or(s, |w: f64| w.max(s)));
        }
        let mut local: Vec<usize> = Vec::with_capacity(r.verts.len());
        for (p, im) in r.verts.iter().zip(r.imgs.iter()) {
            let key = (p.x.to_bits(), p.y.to_bits());
            let gi = *index.entry(key).or_insert_with(|| {
                verts.push(*p);
                imgs.push(*im);
                verts.len() - 1
            });
            if imgs[gi].dist(*im) > 1e-9 {
                return Err(Error::Pipeline(format!(
                    "quad {q}: incompatible image values at a shared vertex \
                     ({:.3e} apart)",
                    imgs[gi].dist(*im)
                )));
            }
            local.push(gi);
        }
        for t in r.tris {
            tris.push([local[t[0]], local[t[1]], local[t[2]]]);
            tri_quad.push(q);
        }
    }

    conforming_closure(&verts, &mut tris, &mut tri_quad)?;

    let g = PaHomeo::new(Triangulation::from_parts(verts, tris)?, imgs)?;
    let cert = certify_homeomorphism(&g);
    if !cert.is_pass() {
        return Err(Error::Pipeline(format!(
            "assembled map failed certification: {cert:?}"
        )));
    }
    // exact identity at every boundary vertex
    if f.identity_on_boundary {
        for &vi in &g.boundary_loop() {
            if g.image[vi] != g.domain.vertices[vi] {
                return Err(Error::Pipeline(
                    "assembled map is not the identity at a boundary vertex".to_string(),
                ));
            }
        }
    }
    Ok(AssembledMap {
        g,
        tri_quad,
        fallbacks,
        e_slack,
        e_extended,
    })
}

/// Splits triangles whose edges contain other glued vertices in their
/// interior (hanging nodes from independently refined neighbours), so the
/// glued triangulation is edge-conforming.
fn conforming_closure(
    verts: &[Point2],
    tris: &mut Vec<[usize; 3]>,
    tri_quad: &mut Vec<usize>,
) -> Result<()> {
    // bucket vertices on a uniform grid for point-near-edge queries
    let m = ((verts.len() as f64).sqrt() as usize).clamp(8, 512);
    let cell = 2.0 / m as f64;
    let bucket_of = |p: Point2| -> (i64, i64) {
        (
            ((p.x + 1.0) / cell).floor() as i64,
            ((p.y + 1.0) / cell).floor() as i64,
        )
    };
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, &p) in verts.iter().enumerate() {
        buckets.entry(bucket_of(p)).or_default().push(i);
    }

    let tol = 1e-12;
    let mut stack: Vec<usize> = (0..tris.len()).collect();
    while let Some(ti) = stack.pop() {
        let t = tris[ti];
        let mut split = None;
        'edges: for e in 0..3 {
            let (u, v) = (t[e], t[(e + 1) % 3]);
            let (a, b) = (verts[u], verts[v]);
            let ab = b.sub(a);
            let len = ab.norm();
            let (c0, c1) = (bucket_of(a), bucket_of(b));
            for cx in c0.0.min(c1.0) - 1..=c0.0.max(c1.0) + 1 {
                for cy in c0.1.min(c1.1) - 1..=c0.1.max(c1.1) + 1 {
                    let Some(ids) = buckets.get(&(cx, cy)) else {
                        continue;
                    };
                    for &w in ids {
                        if w == u || w == v || w == t[(e + 2) % 3] {
                            continue;
                        }
                        let ap = verts[w].sub(a);
                        let s = ap.dot(ab) / (len * len);
                        if s <= tol || s >= 1.0 - tol {
                            continue;
                        }
                        let d = (ap.cross(ab) / len).abs();
                        if d <= tol {
                            split = Some((e, w));
                            break 'edges;
                        }
                    }
                }
            }
        }
        if let Some((e, w)) = split {
            let (u, v, o) = (t[e], t[(e + 1) % 3], t[(e + 2) % 3]);
            let q = tri_quad[ti];
            tris[ti] = [u, w, o];
            tris.push([w, v, o]);
            tri_quad.push(q);
            stack.push(ti);
            stack.push(tris.len() - 1);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{build_boundary_map, classify_dyadic, perturb_vertices, PipelineParams};
    use std::collections::BTreeMap;

    fn map(kind: &str, params: &[(&str, f64)]) -> crate::mapcat::TestMap {
        let p: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        crate::mapcat::make_catalogue_map(kind, &p).unwrap()
    }

    fn run(f: &crate::mapcat::TestMap, eps: f64) -> AssembledMap {
        let params = PipelineParams::default();
        let cls = classify_dyadic(f, eps, 0.05).unwrap();
        let mesh = perturb_vertices(f, &cls, &params).unwrap();
        let skel = build_boundary_map(f, &cls, &mesh, eps, &params).unwrap();
        assemble_homeo(f, &cls, &mesh, &skel, eps).unwrap()
    }

    #[test]
    fn svd2_diagonalises_with_proper_rotations() {
        let cases = [
            Matrix2::new(2.0, 0.3, -0.4, 1.0),
            Matrix2::new(1.0, 0.0, 0.7, 0.0),
            Matrix2::new(0.0, 1.0, -1.0, 0.5),
        ];
        for a in cases {
            let (phi, s1, s2, theta) = svd2(&a);
            let r = |t: f64| Matrix2::new(t.cos(), -t.sin(), t.sin(), t.cos());
            let d = r(phi).transpose() * a * r(theta);
            assert!((d[(0, 0)] - s1).abs() < 1e-12);
            assert!((d[(1, 1)] - s2).abs() < 1e-12);
            assert!(d[(0, 1)].abs() < 1e-12 && d[(1, 0)].abs() < 1e-12);
            assert!(s1 >= s2.abs() - 1e-15);
        }
    }

    #[test]
    fn identity_assembles_to_a_certified_identity_like_map() {
        let f = map("identity", &[]);
        let a = run(&f, 0.2);
        // total variation within a whisker of the identity's
        let region: Vec<usize> = (0..a.g.domain.triangles.len()).collect();
        let tv = crate::geom::pa_total_variation(&a.g, &region).unwrap();
        assert!((tv - 2.0_f64.sqrt() * 4.0).abs() < 1e-6, "tv = {tv}");
        assert!(a.fallbacks.is_empty(), "fallbacks: {:?}", a.fallbacks);
    }

    #[test]
    fn fracture_assembles_to_a_certified_homeomorphism() {
        let f = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let a = run(&f, 0.1);
        assert!(a.e_extended > 0, "no componentwise E-square extensions");
        if let Some(s) = a.e_slack {
            assert!(s <= 0.0, "componentwise slack {s}");
        }
        // mesh tiling: domain triangles cover the square
        assert!((a.g.domain.total_area() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn rank_one_assembles_with_degenerate_squares() {
        let f = map("rank_one", &[("d", 1.0)]);
        let a = run(&f, 0.2);
        assert!((a.g.domain.total_area() - 4.0).abs() < 1e-9);
    }
}
