//! Generalized segments inside a rectangle: straight chords, except that two
//! endpoints on a common side are joined through a midpoint pushed slightly
//! into the rectangle, keeping every connected subset short relative to its
//! diameter.

use crate::geom::{Point2, Polyline, Vec2};
use crate::mapcat::Rect;
use crate::{Error, Result};

/// A two- or three-vertex polyline joining X to Y inside a rectangle.
#[derive(Debug, Clone)]
pub struct GeneralizedSegment {
    pub path: Polyline,
    pub xi: f64,
}

impl GeneralizedSegment {
    pub fn length(&self) -> f64 {
        self.path.length()
    }

    /// Length of the connected subset between arc-length parameters a and b.
    pub fn subset_length(&self, a: f64, b: f64) -> f64 {
        (b - a).abs()
    }

    /// Diameter of the connected subset between arc-length parameters a, b.
    /// Extreme points of a polyline piece are its endpoints and the interior
    /// vertices it contains, so the diameter is exact.
    pub fn subset_diameter(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.min(b), a.max(b));
        let mut pts = vec![self.path.point_at_arclen(a), self.path.point_at_arclen(b)];
        let mut acc = 0.0;
        for w in self.path.vertices.windows(2) {
            acc += w[0].dist(w[1]);
            if acc > a && acc < b {
                pts.push(w[1]);
            }
        }
        let mut diam: f64 = 0.0;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                diam = diam.max(pts[i].dist(pts[j]));
            }
        }
        diam
    }
}

/// Joins X to Y inside `rect`. If both points lie on the same side the path
/// detours through the midpoint pushed into the rectangle by xi/2 times the
/// endpoint distance; otherwise it is the straight chord.
pub fn generalized_segment(
    rect: &Rect,
    x: Point2,
    y: Point2,
    xi: f64,
) -> Result<GeneralizedSegment> {
    if !(xi > 0.0 && xi <= 1.0) {
        return Err(Error::Precondition(format!("xi = {xi} outside (0, 1]")));
    }
    if !rect.contains(x) || !rect.contains(y) {
        return Err(Error::Precondition(
            "generalized segment endpoints must lie in the rectangle".into(),
        ));
    }
    if x.dist(y) <= 0.0 {
        return Err(Error::DegenerateSegment(x.x, x.y));
    }
    let path = match common_side_normal(rect, x, y) {
        Some(inward) => {
            let mid = x.mid(y).add(inward.scale(0.5 * xi * x.dist(y)));
            Polyline::new(vec![x, mid, y])?
        }
        None => Polyline::new(vec![x, y])?,
    };
    Ok(GeneralizedSegment { path, xi })
}

/// Inward normal of a side of `rect` containing both points, if any.
fn common_side_normal(rect: &Rect, x: Point2, y: Point2) -> Option<Vec2> {
    let eps = 1e-12 * (rect.x1 - rect.x0).max(rect.y1 - rect.y0);
    if (x.x - rect.x0).abs() < eps && (y.x - rect.x0).abs() < eps {
        return Some(Vec2::new(1.0, 0.0));
    }
    if (x.x - rect.x1).abs() < eps && (y.x - rect.x1).abs() < eps {
        return Some(Vec2::new(-1.0, 0.0));
    }
    if (x.y - rect.y0).abs() < eps && (y.y - rect.y0).abs() < eps {
        return Some(Vec2::new(0.0, 1.0));
    }
    if (x.y - rect.y1).abs() < eps && (y.y - rect.y1).abs() < eps {
        return Some(Vec2::new(0.0, -1.0));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_rect() -> Rect {
        Rect::new(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn different_sides_give_a_chord() {
        let g = generalized_segment(
            &unit_rect(),
            Point2::new(0.0, 0.3),
            Point2::new(1.0, 0.8),
            0.25,
        )
        .unwrap();
        assert_eq!(g.path.vertices.len(), 2);
    }

    #[test]
    fn same_side_detours_into_the_rectangle() {
        let g = generalized_segment(
            &unit_rect(),
            Point2::new(0.2, 0.0),
            Point2::new(0.8, 0.0),
            0.25,
        )
        .unwrap();
        assert_eq!(g.path.vertices.len(), 3);
        let mid = g.path.vertices[1];
        assert!((mid.x - 0.5).abs() < 1e-12);
        assert!((mid.y - 0.125 * 0.6).abs() < 1e-12);
    }

    #[test]
    fn subset_length_bounded_by_diameter() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rect = unit_rect();
        let mut tried = 0;
        for _ in 0..200 {
            let (x, y) = random_boundary_pair(&rect, &mut rng);
            if x.dist(y) < 1e-3 {
                continue;
            }
            let xi = rng.gen_range(0.01..0.5);
            let g = generalized_segment(&rect, x, y, xi).unwrap();
            for _ in 0..5 {
                let a = rng.gen_range(0.0..g.length());
                let b = rng.gen_range(0.0..g.length());
                if (a - b).abs() < 1e-9 {
                    continue;
                }
                let len = g.subset_length(a, b);
                let diam = g.subset_diameter(a, b);
                assert!(
                    len <= (1.0 + xi) * diam + 1e-12,
                    "len {len} > (1+{xi}) * diam {diam}"
                );
                tried += 1;
            }
        }
        assert!(tried >= 1000 - 200, "too few subsets exercised: {tried}");
    }

    fn random_boundary_pair(rect: &Rect, rng: &mut ChaCha8Rng) -> (Point2, Point2) {
        let pick = |rng: &mut ChaCha8Rng| {
            let side = rng.gen_range(0..4);
            let t = rng.gen_range(0.0..1.0);
            match side {
                0 => Point2::new(rect.x0 + t * (rect.x1 - rect.x0), rect.y0),
                1 => Point2::new(rect.x1, rect.y0 + t * (rect.y1 - rect.y0)),
                2 => Point2::new(rect.x0 + t * (rect.x1 - rect.x0), rect.y1),
                _ => Point2::new(rect.x0, rect.y0 + t * (rect.y1 - rect.y0)),
            }
        };
        (pick(rng), pick(rng))
    }
}
