//! Axis-parallel rectangles and polygon clipping used by the measure
//! oracles.

use crate::geom::{signed_area, Point2, Segment};
use crate::{Error, Result};

/// A closed axis-parallel rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) || !(x0.is_finite() && y0.is_finite() && x1.is_finite() && y1.is_finite()) {
            return Err(Error::BadRegion(format!(
                "degenerate rectangle ({x0},{y0})-({x1},{y1})"
            )));
        }
        Ok(Rect { x0, y0, x1, y1 })
    }

    /// The square Q(c, r) = c + [-r, r]².
    pub fn square(cx: f64, cy: f64, r: f64) -> Result<Self> {
        Rect::new(cx - r, cy - r, cx + r, cy + r)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.x0 <= p.x && p.x <= self.x1 && self.y0 <= p.y && p.y <= self.y1
    }

    pub fn corners(&self) -> [Point2; 4] {
        [
            Point2::new(self.x0, self.y0),
            Point2::new(self.x1, self.y0),
            Point2::new(self.x1, self.y1),
            Point2::new(self.x0, self.y1),
        ]
    }
}

/// Clips a convex polygon (CCW) against the rectangle (Sutherland-Hodgman)
/// and returns the clipped vertex ring.
pub fn clip_polygon_to_rect(poly: &[Point2], r: &Rect) -> Vec<Point2> {
    // inside tests and intersectors for the four half-planes
    let planes: [(Box<dyn Fn(Point2) -> bool>, Box<dyn Fn(Point2, Point2) -> Point2>); 4] = [
        (
            Box::new(move |p: Point2| p.x >= r.x0),
            Box::new(move |a: Point2, b: Point2| cut_x(a, b, r.x0)),
        ),
        (
            Box::new(move |p: Point2| p.x <= r.x1),
            Box::new(move |a: Point2, b: Point2| cut_x(a, b, r.x1)),
        ),
        (
            Box::new(move |p: Point2| p.y >= r.y0),
            Box::new(move |a: Point2, b: Point2| cut_y(a, b, r.y0)),
        ),
        (
            Box::new(move |p: Point2| p.y <= r.y1),
            Box::new(move |a: Point2, b: Point2| cut_y(a, b, r.y1)),
        ),
    ];
    let mut ring: Vec<Point2> = poly.to_vec();
    for (inside, cut) in &planes {
        if ring.is_empty() {
            break;
        }
        let mut out = Vec::with_capacity(ring.len() + 2);
        for i in 0..ring.len() {
            let a = ring[i];
            let b = ring[(i + 1) % ring.len()];
            let (ia, ib) = (inside(a), inside(b));
            if ia {
                out.push(a);
            }
            if ia != ib {
                out.push(cut(a, b));
            }
        }
        ring = out;
    }
    ring
}

fn cut_x(a: Point2, b: Point2, x: f64) -> Point2 {
    let t = (x - a.x) / (b.x - a.x);
    Point2::new(x, a.y + t * (b.y - a.y))
}

fn cut_y(a: Point2, b: Point2, y: f64) -> Point2 {
    let t = (y - a.y) / (b.y - a.y);
    Point2::new(a.x + t * (b.x - a.x), y)
}

/// Area of the intersection of a CCW triangle with the rectangle.
pub fn triangle_rect_area(tri: &[Point2; 3], r: &Rect) -> f64 {
    let ring = clip_polygon_to_rect(tri, r);
    if ring.len() < 3 {
        0.0
    } else {
        signed_area(&ring)
    }
}

/// Parameter interval [tlo, thi] of the segment inside the rectangle
/// (Liang-Barsky), or None if disjoint.
pub fn segment_rect_interval(s: &Segment, r: &Rect) -> Option<(f64, f64)> {
    let (dx, dy) = (s.b.x - s.a.x, s.b.y - s.a.y);
    let mut tlo = 0.0f64;
    let mut thi = 1.0f64;
    for (p, q) in [
        (-dx, s.a.x - r.x0),
        (dx, r.x1 - s.a.x),
        (-dy, s.a.y - r.y0),
        (dy, r.y1 - s.a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                tlo = tlo.max(t);
            } else {
                thi = thi.min(t);
            }
        }
    }
    (tlo <= thi).then_some((tlo, thi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn triangle_fully_inside() {
        let r = Rect::new(-1., -1., 1., 1.).unwrap();
        let t = [p(0., 0.), p(0.5, 0.), p(0., 0.5)];
        assert!((triangle_rect_area(&t, &r) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn triangle_half_clipped() {
        let r = Rect::new(0., -1., 1., 1.).unwrap();
        // right half of a triangle symmetric about x = 0
        let t = [p(-1., 0.), p(1., 0.), p(0., 1.)];
        assert!((triangle_rect_area(&t, &r) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn clip_areas_partition_exactly() {
        let t = [p(-0.9, -0.7), p(0.8, -0.2), p(0.1, 0.9)];
        let whole = Rect::new(-1., -1., 1., 1.).unwrap();
        let total = triangle_rect_area(&t, &whole);
        let mut parts = 0.0;
        for (x0, x1) in [(-1.0, 0.3), (0.3, 1.0)] {
            for (y0, y1) in [(-1.0, -0.1), (-0.1, 1.0)] {
                parts += triangle_rect_area(&t, &Rect::new(x0, y0, x1, y1).unwrap());
            }
        }
        assert!((total - parts).abs() < 1e-12);
    }

    #[test]
    fn segment_interval_crossing() {
        let s = Segment::new(p(-2., 0.), p(2., 0.)).unwrap();
        let r = Rect::new(-1., -1., 1., 1.).unwrap();
        let (lo, hi) = segment_rect_interval(&s, &r).unwrap();
        assert!((lo - 0.25).abs() < 1e-15 && (hi - 0.75).abs() < 1e-15);
    }

    #[test]
    fn segment_interval_disjoint() {
        let s = Segment::new(p(-2., 5.), p(2., 5.)).unwrap();
        let r = Rect::new(-1., -1., 1., 1.).unwrap();
        assert!(segment_rect_interval(&s, &r).is_none());
    }
}
