//! Finitely piecewise-affine maps on triangulations, with injectivity
//! certification and variation functionals.

use super::intersect::{segment_intersection, SegmentIntersection};
use super::{signed_area, Point2, Segment, Triangulation};
use crate::{Error, Result};
use nalgebra::Matrix2;

/// A finitely piecewise-affine map carried by a triangulation: one image
/// position per vertex, affine on each triangle.
#[derive(Debug, Clone)]
pub struct PaHomeo {
    pub domain: Triangulation,
    pub image: Vec<Point2>,
    /// Cached per-triangle derivative matrices.
    derivatives: Vec<Matrix2<f64>>,
}

impl PaHomeo {
    pub fn new(domain: Triangulation, image: Vec<Point2>) -> Result<Self> {
        if image.len() != domain.vertices.len() {
            return Err(Error::Precondition(format!(
                "image positions ({}) do not match vertex count ({})",
                image.len(),
                domain.vertices.len()
            )));
        }
        let derivatives = (0..domain.triangles.len())
            .map(|t| derivative_matrix(&domain, &image, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(PaHomeo {
            domain,
            image,
            derivatives,
        })
    }

    /// The identity map on a triangulation.
    pub fn identity(domain: Triangulation) -> Result<Self> {
        let image = domain.vertices.clone();
        PaHomeo::new(domain, image)
    }

    pub fn derivative(&self, t: usize) -> &Matrix2<f64> {
        &self.derivatives[t]
    }

    pub fn image_triangle(&self, t: usize) -> [Point2; 3] {
        let [i, j, k] = self.domain.triangles[t];
        [self.image[i], self.image[j], self.image[k]]
    }

    pub fn image_triangle_signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.image_triangle(t);
        signed_area(&[a, b, c])
    }

    /// Evaluates the map at a point of the domain (by triangle location and
    /// barycentric interpolation).
    pub fn eval(&self, p: Point2) -> Option<Point2> {
        let t = self.domain.locate(p)?;
        let [a, b, c] = self.domain.triangle_points(t);
        let area = signed_area(&[a, b, c]);
        let wa = signed_area(&[p, b, c]) / area;
        let wb = signed_area(&[a, p, c]) / area;
        let wc = 1.0 - wa - wb;
        let [ia, ib, ic] = self.image_triangle(t);
        Some(Point2::new(
            wa * ia.x + wb * ib.x + wc * ic.x,
            wa * ia.y + wb * ib.y + wc * ic.y,
        ))
    }

    /// Recomputes the derivative of triangle `t` from vertex positions and
    /// checks it against the cache. Used by the invariants tests.
    pub fn derivative_consistent(&self, t: usize, tol: f64) -> bool {
        match derivative_matrix(&self.domain, &self.image, t) {
            Ok(m) => (m - self.derivatives[t]).norm() <= tol,
            Err(_) => false,
        }
    }

    /// Boundary vertex indices in the order they appear along ∂(domain).
    pub fn boundary_loop(&self) -> Vec<usize> {
        boundary_loop(&self.domain)
    }
}

fn derivative_matrix(
    domain: &Triangulation,
    image: &[Point2],
    t: usize,
) -> Result<Matrix2<f64>> {
    let [i, j, k] = domain.triangles[t];
    let [a, b, c] = domain.triangle_points(t);
    let e1 = b.sub(a);
    let e2 = c.sub(a);
    let f1 = image[j].sub(image[i]);
    let f2 = image[k].sub(image[i]);
    let dm = Matrix2::new(e1.x, e2.x, e1.y, e2.y);
    let fm = Matrix2::new(f1.x, f2.x, f1.y, f2.y);
    let inv = dm
        .try_inverse()
        .ok_or_else(|| Error::Precondition(format!("degenerate domain triangle {t}")))?;
    Ok(fm * inv)
}

/// Walks the boundary edges (edges used by exactly one triangle) into a
/// single closed loop of vertex indices.
pub fn boundary_loop(tri: &Triangulation) -> Vec<usize> {
    use std::collections::HashMap;
    let mut next: HashMap<usize, usize> = HashMap::new();
    let edge_map = tri.edge_map();
    for (t, t3) in tri.triangles.iter().enumerate() {
        for e in 0..3 {
            let (i, j) = (t3[e], t3[(e + 1) % 3]);
            let key = (i.min(j), i.max(j));
            if edge_map[&key].len() == 1 {
                debug_assert_eq!(edge_map[&key][0], t);
                next.insert(i, j); // directed boundary edge (CCW for CCW triangles)
            }
        }
    }
    let mut result = Vec::with_capacity(next.len());
    if next.is_empty() {
        return result;
    }
    let start = *next.keys().min().unwrap();
    let mut cur = start;
    loop {
        result.push(cur);
        cur = next[&cur];
        if cur == start || result.len() > next.len() {
            break;
        }
    }
    result
}

/// Total variation of a piecewise-affine map over a set of triangles:
/// `Σ area(T) · ‖Dg|_T‖_F` (Frobenius norm).
pub fn pa_total_variation(g: &PaHomeo, region: &[usize]) -> Result<f64> {
    check_region(g, region)?;
    Ok(region
        .iter()
        .map(|&t| g.domain.triangle_area(t) * g.derivative(t).norm())
        .sum())
}

/// Directional variation `Σ area(T) · |Dg|_T v|` for a unit vector `v`.
pub fn pa_directional_variation(g: &PaHomeo, v: (f64, f64), region: &[usize]) -> Result<f64> {
    let n = (v.0 * v.0 + v.1 * v.1).sqrt();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::NonUnitVector(n));
    }
    check_region(g, region)?;
    let vv = nalgebra::Vector2::new(v.0, v.1);
    Ok(region
        .iter()
        .map(|&t| g.domain.triangle_area(t) * (g.derivative(t) * vv).norm())
        .sum())
}

fn check_region(g: &PaHomeo, region: &[usize]) -> Result<()> {
    for &t in region {
        if t >= g.domain.triangles.len() {
            return Err(Error::BadRegion(format!("triangle index {t} out of range")));
        }
    }
    Ok(())
}

/// Outcome of the homeomorphism certification.
#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    Pass,
    /// An image triangle is not positively oriented.
    FlippedTriangle(usize),
    /// Two image boundary segments cross (indices into the boundary loop).
    BoundaryCrossing(usize, usize),
    /// Two boundary vertices share the same image.
    BoundaryNotInjective(usize, usize),
}

impl Certificate {
    pub fn is_pass(&self) -> bool {
        matches!(self, Certificate::Pass)
    }
}

/// Certifies global injectivity of a piecewise-affine map: every image
/// triangle positively oriented, the image boundary polyline simple, and the
/// boundary vertex images pairwise distinct.
pub fn certify_homeomorphism(g: &PaHomeo) -> Certificate {
    for t in 0..g.domain.triangles.len() {
        if g.image_triangle_signed_area(t) <= 0.0 {
            return Certificate::FlippedTriangle(t);
        }
    }
    let loop_idx = g.boundary_loop();
    let n = loop_idx.len();
    for i in 0..n {
        for j in (i + 1)..n {
            if g.image[loop_idx[i]] == g.image[loop_idx[j]] {
                return Certificate::BoundaryNotInjective(i, j);
            }
        }
    }
    let segs: Vec<Segment> = (0..n)
        .map(|i| Segment {
            a: g.image[loop_idx[i]],
            b: g.image[loop_idx[(i + 1) % n]],
        })
        .collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            match segment_intersection(&segs[i], &segs[j]).expect("valid boundary segments") {
                SegmentIntersection::Empty => {}
                // Adjacent edges meet in exactly one point only at the shared
                // vertex (the computed point may differ from it by rounding);
                // a backtracking pair is collinear and reports an overlap.
                SegmentIntersection::Point(_) => {
                    if !adjacent {
                        return Certificate::BoundaryCrossing(i, j);
                    }
                }
                SegmentIntersection::Overlap(_, _) => return Certificate::BoundaryCrossing(i, j),
            }
        }
    }
    Certificate::Pass
}
