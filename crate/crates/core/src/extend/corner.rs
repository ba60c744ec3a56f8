//! Affine extension for quadrilaterals whose boundary map is linear on
//! each side: two affine pieces glued along a diagonal.

use super::boundary::BoundaryData;
use crate::geom::{certify_homeomorphism, orient2d, Orientation, PaHomeo, Triangulation};
use crate::{Error, Result};

/// Extends a boundary map given by the four corner images of a convex
/// quadrilateral (linear on each side) to two affine pieces split along a
/// diagonal. The image quadrilateral must be convex; otherwise the caller
/// is expected to fall back to [`super::extend_hp`].
pub fn affine_corner_extension(bd: &BoundaryData) -> Result<PaHomeo> {
    if bd.len() != 4 {
        return Err(Error::Precondition(format!(
            "corner extension needs exactly 4 matched break-points, got {}",
            bd.len()
        )));
    }
    for k in 0..4 {
        if orient2d(bd.img[k], bd.img[(k + 1) % 4], bd.img[(k + 2) % 4])
            != Orientation::CounterClockwise
        {
            return Err(Error::Precondition(format!(
                "image quadrilateral is not strictly convex at corner {}",
                (k + 1) % 4
            )));
        }
    }
    // Pick a diagonal that splits the domain into two positively oriented
    // triangles; for a convex image either diagonal works on that side.
    let split = |diag: [[usize; 3]; 2]| -> Option<PaHomeo> {
        for t in &diag {
            if orient2d(bd.dom[t[0]], bd.dom[t[1]], bd.dom[t[2]]) != Orientation::CounterClockwise
            {
                return None;
            }
        }
        let tri = Triangulation::from_parts(bd.dom.clone(), diag.to_vec()).ok()?;
        PaHomeo::new(tri, bd.img.clone()).ok()
    };
    let g = split([[0, 1, 2], [0, 2, 3]])
        .or_else(|| split([[0, 1, 3], [1, 2, 3]]))
        .ok_or_else(|| {
            Error::Extension("no diagonal splits the quadrilateral into valid triangles".into())
        })?;
    let cert = certify_homeomorphism(&g);
    if !cert.is_pass() {
        return Err(Error::Extension(format!(
            "corner extension failed certification: {cert:?}"
        )));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point2;

    fn quad() -> Vec<Point2> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.2, -0.1),
            Point2::new(1.3, 1.1),
            Point2::new(-0.2, 0.9),
        ]
    }

    #[test]
    fn identity_on_a_convex_quadrilateral_is_the_identity() {
        let bd = BoundaryData::new(quad(), quad()).unwrap();
        let g = affine_corner_extension(&bd).unwrap();
        for &(x, y) in &[(0.5, 0.5), (0.1, 0.1), (1.0, 0.8)] {
            let p = Point2::new(x, y);
            assert!(g.eval(p).unwrap().dist(p) < 1e-12);
        }
    }

    #[test]
    fn linear_map_gives_two_identical_affine_pieces() {
        let dom = quad();
        let img: Vec<Point2> = dom.iter().map(|p| Point2::new(2.0 * p.x, p.y)).collect();
        let bd = BoundaryData::new(dom, img).unwrap();
        let g = affine_corner_extension(&bd).unwrap();
        assert_eq!(g.domain.triangles.len(), 2);
        for t in 0..2 {
            let m = g.derivative(t);
            assert!((m[(0, 0)] - 2.0).abs() < 1e-12 && (m[(1, 1)] - 1.0).abs() < 1e-12);
            assert!(m[(0, 1)].abs() < 1e-12 && m[(1, 0)].abs() < 1e-12);
        }
    }

    #[test]
    fn non_convex_image_is_rejected() {
        let dom = quad();
        // Pull one image corner inside the triangle of the other three.
        let img = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.4, 0.3),
            Point2::new(0.0, 1.0),
        ];
        let bd = BoundaryData::new(dom, img).unwrap();
        assert!(matches!(
            affine_corner_extension(&bd),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn near_affine_perturbations_all_certify() {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut accepted = 0;
        for _ in 0..100 {
            let dom = quad();
            let img: Vec<Point2> = dom
                .iter()
                .map(|p| {
                    Point2::new(
                        1.5 * p.x + 0.2 * p.y + rng.gen_range(-0.02..0.02),
                        -0.1 * p.x + 0.9 * p.y + rng.gen_range(-0.02..0.02),
                    )
                })
                .collect();
            let bd = BoundaryData::new(dom, img).unwrap();
            let g = affine_corner_extension(&bd).unwrap();
            assert!(certify_homeomorphism(&g).is_pass());
            accepted += 1;
        }
        assert_eq!(accepted, 100);
    }
}
