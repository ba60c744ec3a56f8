//! Segment-segment intersection classification.

use super::predicates::{orient2d, Orientation};
use super::{point_on_segment, Point2, Segment};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentIntersection {
    Empty,
    Point(Point2),
    /// Collinear overlap, returned as the shared sub-segment endpoints.
    Overlap(Point2, Point2),
}

/// Classifies the intersection of two segments as empty, a single point, or
/// a collinear sub-segment. Orientation tests use the adaptive predicate so
/// the classification is stable near degeneracy.
pub fn segment_intersection(s1: &Segment, s2: &Segment) -> Result<SegmentIntersection> {
    let o1 = orient2d(s1.a, s1.b, s2.a);
    let o2 = orient2d(s1.a, s1.b, s2.b);
    let o3 = orient2d(s2.a, s2.b, s1.a);
    let o4 = orient2d(s2.a, s2.b, s1.b);

    if o1 == Orientation::Collinear && o2 == Orientation::Collinear {
        return Ok(collinear_overlap(s1, s2));
    }

    let crosses = o1 != o2
        && o3 != o4
        && straddles(o1, o2)
        && straddles(o3, o4);
    if crosses {
        // proper or touching crossing: compute the point
        let p = line_intersection_point(s1, s2);
        return Ok(SegmentIntersection::Point(p));
    }

    // touching cases: one endpoint on the other segment
    for &p in &[s2.a, s2.b] {
        if point_on_segment(p, s1) {
            return Ok(SegmentIntersection::Point(p));
        }
    }
    for &p in &[s1.a, s1.b] {
        if point_on_segment(p, s2) {
            return Ok(SegmentIntersection::Point(p));
        }
    }
    Ok(SegmentIntersection::Empty)
}

fn straddles(o1: Orientation, o2: Orientation) -> bool {
    use Orientation::*;
    matches!(
        (o1, o2),
        (CounterClockwise, Clockwise)
            | (Clockwise, CounterClockwise)
            | (Collinear, _)
            | (_, Collinear)
    )
}

fn collinear_overlap(s1: &Segment, s2: &Segment) -> SegmentIntersection {
    // project onto the dominant axis of s1
    let d = s1.b.sub(s1.a);
    let key = |p: Point2| -> f64 {
        if d.x.abs() >= d.y.abs() {
            p.x * d.x.signum()
        } else {
            p.y * d.y.signum()
        }
    };
    let (mut a1, mut b1) = (s1.a, s1.b);
    if key(a1) > key(b1) {
        std::mem::swap(&mut a1, &mut b1);
    }
    let (mut a2, mut b2) = (s2.a, s2.b);
    if key(a2) > key(b2) {
        std::mem::swap(&mut a2, &mut b2);
    }
    let lo = if key(a1) >= key(a2) { a1 } else { a2 };
    let hi = if key(b1) <= key(b2) { b1 } else { b2 };
    if key(lo) > key(hi) {
        SegmentIntersection::Empty
    } else if lo == hi {
        SegmentIntersection::Point(lo)
    } else {
        SegmentIntersection::Overlap(lo, hi)
    }
}

fn line_intersection_point(s1: &Segment, s2: &Segment) -> Point2 {
    let d1 = s1.b.sub(s1.a);
    let d2 = s2.b.sub(s2.a);
    let denom = d1.cross(d2);
    let mut t = s2.a.sub(s1.a).cross(d2) / denom;
    if !t.is_finite() {
        // nearly parallel: the float cross product underflowed to zero even
        // though the exact predicates saw a proper crossing; fall back to the
        // midpoint of s2's projection onto s1
        let l2 = d1.dot(d1);
        let u0 = (s2.a.sub(s1.a).dot(d1) / l2).clamp(0.0, 1.0);
        let u1 = (s2.b.sub(s1.a).dot(d1) / l2).clamp(0.0, 1.0);
        t = 0.5 * (u0 + u1);
    }
    let t = t.clamp(0.0, 1.0);
    s1.a.lerp(s1.b, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(ax: f64, ay: f64, bx: f64, by: f64) -> Segment {
        Segment::new(Point2::new(ax, ay), Point2::new(bx, by)).unwrap()
    }

    #[test]
    fn symmetric_crossing() {
        let got = segment_intersection(&seg(0., 0., 1., 0.), &seg(0.5, -1., 0.5, 1.)).unwrap();
        assert_eq!(got, SegmentIntersection::Point(Point2::new(0.5, 0.)));
    }

    #[test]
    fn parallel_disjoint() {
        let got = segment_intersection(&seg(0., 0., 1., 0.), &seg(0., 1., 1., 1.)).unwrap();
        assert_eq!(got, SegmentIntersection::Empty);
    }

    #[test]
    fn collinear_overlap_subsegment() {
        let got = segment_intersection(&seg(0., 0., 2., 0.), &seg(1., 0., 3., 0.)).unwrap();
        assert_eq!(
            got,
            SegmentIntersection::Overlap(Point2::new(1., 0.), Point2::new(2., 0.))
        );
    }

    #[test]
    fn endpoint_touch() {
        let got = segment_intersection(&seg(0., 0., 1., 0.), &seg(1., 0., 1., 1.)).unwrap();
        assert_eq!(got, SegmentIntersection::Point(Point2::new(1., 0.)));
    }

    #[test]
    fn degenerate_rejected() {
        assert!(Segment::new(Point2::new(0., 0.), Point2::new(0., 0.)).is_err());
    }
}
