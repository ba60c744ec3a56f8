//! Planar geometry kernel: points, segments, polylines, simple polygons,
//! triangulations, piecewise-affine maps and geodesic distance inside
//! Jordan polygons.

pub mod geodesic;
pub mod intersect;
pub mod pahomeo;
pub mod predicates;
pub mod snapshot;
pub mod triangulate;
pub mod visibility;

pub use geodesic::{geodesic_distance, GeodesicPath};
pub use intersect::{segment_intersection, SegmentIntersection};
pub use pahomeo::{
    certify_homeomorphism, pa_directional_variation, pa_total_variation, Certificate, PaHomeo,
};
pub use predicates::{orient2d, Orientation, TAU_GEOM};
pub use triangulate::{triangulate_simple_polygon, Triangulation};

use crate::{Error, Result};

/// A point in the plane. Coordinates are finite `f64`; predicates fall back
/// to exact rational arithmetic when the float computation is inconclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        debug_assert!(x.is_finite() && y.is_finite());
        Point2 { x, y }
    }

    pub fn sub(self, o: Point2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, v: Vec2) -> Point2 {
        Point2::new(self.x + v.x, self.y + v.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        self.sub(o).norm()
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        Point2::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    pub fn mid(self, o: Point2) -> Point2 {
        self.lerp(o, 0.5)
    }
}

/// A displacement vector in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalize(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }
}

/// A non-degenerate line segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub fn new(a: Point2, b: Point2) -> Result<Self> {
        if a == b {
            return Err(Error::DegenerateSegment(a.x, a.y));
        }
        Ok(Segment { a, b })
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn eval(&self, t: f64) -> Point2 {
        self.a.lerp(self.b, t)
    }

    pub fn dir(&self) -> Vec2 {
        self.b.sub(self.a).normalize()
    }
}

/// An ordered chain of distinct consecutive vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub vertices: Vec<Point2>,
}

impl Polyline {
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::Precondition("polyline needs >= 2 vertices".into()));
        }
        for w in vertices.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DegenerateSegment(w[0].x, w[0].y));
            }
        }
        Ok(Polyline { vertices })
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.vertices
            .windows(2)
            .map(|w| Segment { a: w[0], b: w[1] })
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[0].dist(w[1])).sum()
    }

    /// Point at arc length `s` from the start (clamped to the endpoints).
    pub fn point_at_arclen(&self, s: f64) -> Point2 {
        let mut rem = s.max(0.0);
        for w in self.vertices.windows(2) {
            let l = w[0].dist(w[1]);
            if rem <= l {
                return w[0].lerp(w[1], rem / l);
            }
            rem -= l;
        }
        *self.vertices.last().unwrap()
    }
}

/// Checks that no two non-adjacent segments of `p` intersect and that
/// adjacent segments meet only at their shared vertex. On failure the first
/// violating segment-index pair is returned.
pub fn is_injective_polyline(p: &Polyline) -> (bool, Option<(usize, usize)>) {
    let segs: Vec<Segment> = p.segments().collect();
    for i in 0..segs.len() {
        for j in (i + 1)..segs.len() {
            match segment_intersection(&segs[i], &segs[j]).expect("valid segments") {
                SegmentIntersection::Empty => {}
                SegmentIntersection::Point(pt) => {
                    if j == i + 1 {
                        // adjacent: only the shared vertex is allowed
                        if pt != segs[i].b {
                            return (false, Some((i, j)));
                        }
                    } else {
                        return (false, Some((i, j)));
                    }
                }
                SegmentIntersection::Overlap(_, _) => return (false, Some((i, j))),
            }
        }
    }
    (true, None)
}

/// A simple polygon with counterclockwise boundary and positive signed area.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplePolygon {
    vertices: Vec<Point2>,
}

impl SimplePolygon {
    /// Builds a simple polygon from its boundary vertex cycle (no repeated
    /// closing vertex). Clockwise input is reversed.
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::NonSimplePolygon("fewer than 3 vertices".into()));
        }
        for i in 0..vertices.len() {
            if vertices[i] == vertices[(i + 1) % vertices.len()] {
                return Err(Error::NonSimplePolygon(format!(
                    "repeated consecutive vertex at index {i}"
                )));
            }
        }
        let area = signed_area(&vertices);
        if area == 0.0 {
            return Err(Error::NonSimplePolygon("zero signed area".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        let poly = SimplePolygon { vertices };
        if let Some((i, j)) = poly.first_self_intersection() {
            return Err(Error::NonSimplePolygon(format!(
                "boundary segments {i} and {j} intersect"
            )));
        }
        Ok(poly)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn edge(&self, i: usize) -> Segment {
        let n = self.vertices.len();
        Segment {
            a: self.vertices[i % n],
            b: self.vertices[(i + 1) % n],
        }
    }

    fn first_self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.vertices.len();
        for i in 0..n {
            let si = self.edge(i);
            for j in (i + 1)..n {
                let sj = self.edge(j);
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                match segment_intersection(&si, &sj).ok()? {
                    SegmentIntersection::Empty => {}
                    SegmentIntersection::Point(_) => {
                        // adjacent edges meet in exactly one point only at
                        // the shared vertex (a backtracking pair is collinear
                        // and reports an overlap instead)
                        if !adjacent {
                            return Some((i, j));
                        }
                    }
                    SegmentIntersection::Overlap(_, _) => return Some((i, j)),
                }
            }
        }
        None
    }

    /// Point-in-polygon test; boundary points count as inside.
    pub fn contains(&self, p: Point2) -> bool {
        if self.on_boundary(p) {
            return true;
        }
        self.contains_strict(p)
    }

    pub fn on_boundary(&self, p: Point2) -> bool {
        for i in 0..self.vertices.len() {
            let e = self.edge(i);
            if point_on_segment(p, &e) {
                return true;
            }
        }
        false
    }

    /// Strict interior test by ray crossing with orientation predicates.
    pub fn contains_strict(&self, p: Point2) -> bool {
        if self.on_boundary(p) {
            return false;
        }
        let mut inside = false;
        let n = self.vertices.len();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if (a.y > p.y) != (b.y > p.y) {
                let t = (p.y - a.y) / (b.y - a.y);
                let x = a.x + t * (b.x - a.x);
                if x > p.x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// Shoelace signed area of a vertex cycle (positive for CCW).
pub fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    s / 2.0
}

/// True if `p` lies on the closed segment `s` (collinear and within the box).
pub fn point_on_segment(p: Point2, s: &Segment) -> bool {
    if orient2d(s.a, s.b, p) != Orientation::Collinear {
        return false;
    }
    p.x >= s.a.x.min(s.b.x)
        && p.x <= s.a.x.max(s.b.x)
        && p.y >= s.a.y.min(s.b.y)
        && p.y <= s.a.y.max(s.b.y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn square_boundary_open_path_is_injective() {
        let pl = Polyline::new(vec![p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]).unwrap();
        assert_eq!(is_injective_polyline(&pl), (true, None));
    }

    #[test]
    fn figure_eight_is_not_injective() {
        let pl = Polyline::new(vec![p(0., 0.), p(1., 1.), p(1., 0.), p(0., 1.)]).unwrap();
        let (ok, witness) = is_injective_polyline(&pl);
        assert!(!ok);
        assert!(witness.is_some());
    }

    #[test]
    fn polygon_orientation_normalised() {
        let poly = SimplePolygon::new(vec![p(0., 0.), p(0., 1.), p(1., 1.), p(1., 0.)]).unwrap();
        assert!(poly.area() > 0.0);
    }

    #[test]
    fn non_simple_polygon_rejected() {
        let r = SimplePolygon::new(vec![p(0., 0.), p(1., 1.), p(1., 0.), p(0., 1.)]);
        assert!(r.is_err());
    }

    #[test]
    fn containment() {
        let poly = SimplePolygon::new(vec![p(0., 0.), p(2., 0.), p(2., 2.), p(0., 2.)]).unwrap();
        assert!(poly.contains_strict(p(1., 1.)));
        assert!(!poly.contains_strict(p(3., 1.)));
        assert!(poly.contains(p(0., 1.)));
        assert!(!poly.contains_strict(p(0., 1.)));
    }
}
