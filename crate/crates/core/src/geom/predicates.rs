//! Orientation predicates in float with an exact rational fallback.
//!
//! The float determinant is trusted when its magnitude exceeds `TAU_GEOM`;
//! below that the sign is recomputed with arbitrary-precision rationals.

use super::Point2;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// Threshold under which the float orientation determinant is re-evaluated
/// exactly.
pub const TAU_GEOM: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    CounterClockwise,
    Clockwise,
    Collinear,
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite coordinate")
}

/// Sign of the cross product (b - a) x (c - a), exact below `TAU_GEOM`.
pub fn orient2d(a: Point2, b: Point2, c: Point2) -> Orientation {
    let det = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    if det > TAU_GEOM {
        return Orientation::CounterClockwise;
    }
    if det < -TAU_GEOM {
        return Orientation::Clockwise;
    }
    orient2d_exact(a, b, c)
}

fn orient2d_exact(a: Point2, b: Point2, c: Point2) -> Orientation {
    let (ax, ay) = (rational(a.x), rational(a.y));
    let (bx, by) = (rational(b.x), rational(b.y));
    let (cx, cy) = (rational(c.x), rational(c.y));
    let det = (&bx - &ax) * (&cy - &ay) - (&by - &ay) * (&cx - &ax);
    if det.is_zero() {
        Orientation::Collinear
    } else if det.is_positive() {
        Orientation::CounterClockwise
    } else {
        Orientation::Clockwise
    }
}

/// Exact sign of the 2x2 determinant `| r s ; t u |` of f64 entries.
pub fn det2_sign(r: f64, s: f64, t: f64, u: f64) -> i8 {
    let d = r * u - s * t;
    if d > TAU_GEOM {
        return 1;
    }
    if d < -TAU_GEOM {
        return -1;
    }
    let d = rational(r) * rational(u) - rational(s) * rational(t);
    match d.cmp(&BigRational::from_integer(BigInt::from(0))) {
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Less => -1,
        std::cmp::Ordering::Equal => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn clear_cases() {
        assert_eq!(
            orient2d(p(0., 0.), p(1., 0.), p(0., 1.)),
            Orientation::CounterClockwise
        );
        assert_eq!(
            orient2d(p(0., 0.), p(0., 1.), p(1., 0.)),
            Orientation::Clockwise
        );
    }

    #[test]
    fn exact_collinear() {
        // determinant is exactly zero but each term is tiny
        assert_eq!(
            orient2d(p(0., 0.), p(1e-7, 1e-7), p(2e-7, 2e-7)),
            Orientation::Collinear
        );
    }

    #[test]
    fn tiny_but_nonzero_resolved_exactly() {
        // below TAU_GEOM in float, sign recovered by rationals
        let a = p(0., 0.);
        let b = p(1e-6, 0.);
        let c = p(0.5e-6, 1e-7);
        assert_eq!(orient2d(a, b, c), Orientation::CounterClockwise);
    }
}
