//! Boundary data for the extension operators: a convex polygonal domain
//! together with a piecewise-linear injective map of its boundary, given as
//! matched break-point lists.

use crate::geom::predicates::{orient2d, Orientation};
use crate::geom::{signed_area, Point2, SimplePolygon};
use crate::{Error, Result};
use nalgebra::Matrix2;

/// A convex polygon with a piecewise-linear one-to-one map of its boundary.
/// `dom[k]` is carried to `img[k]` and the map interpolates linearly along
/// each boundary edge between consecutive break-points. Both cycles run
/// counterclockwise and the domain cycle contains every corner of the convex
/// polygon (so the polygon itself is recovered as the cycle of break-points).
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub dom: Vec<Point2>,
    pub img: Vec<Point2>,
}

impl BoundaryData {
    pub fn new(mut dom: Vec<Point2>, mut img: Vec<Point2>) -> Result<Self> {
        if dom.len() != img.len() {
            return Err(Error::Precondition(format!(
                "break-point counts differ: {} domain vs {} image",
                dom.len(),
                img.len()
            )));
        }
        if dom.len() < 3 {
            return Err(Error::Precondition(
                "boundary data needs at least 3 break-points".into(),
            ));
        }
        if signed_area(&dom) < 0.0 {
            dom.reverse();
            img.reverse();
        }
        // the domain cycle must bound a convex region (collinear break-points
        // along a side are allowed)
        let n = dom.len();
        for i in 0..n {
            let (a, b, c) = (dom[i], dom[(i + 1) % n], dom[(i + 2) % n]);
            if orient2d(a, b, c) == Orientation::Clockwise {
                return Err(Error::Precondition(format!(
                    "domain polygon is not convex at break-point {}",
                    (i + 1) % n
                )));
            }
        }
        // reject degenerate domain edges and verify simplicity of both cycles
        SimplePolygon::new(dom.clone())?;
        if signed_area(&img) <= 0.0 {
            return Err(Error::Precondition(
                "image boundary cycle must be positively oriented".into(),
            ));
        }
        SimplePolygon::new(img.clone()).map_err(|e| {
            Error::Precondition(format!("image boundary is not a simple curve: {e}"))
        })?;
        Ok(BoundaryData { dom, img })
    }

    pub fn len(&self) -> usize {
        self.dom.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The convex domain polygon.
    pub fn domain_polygon(&self) -> SimplePolygon {
        SimplePolygon::new(self.dom.clone()).expect("validated at construction")
    }

    /// The image region bounded by the image cycle.
    pub fn image_polygon(&self) -> SimplePolygon {
        SimplePolygon::new(self.img.clone()).expect("validated at construction")
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.dom.len() {
            for j in (i + 1)..self.dom.len() {
                d = d.max(self.dom[i].dist(self.dom[j]));
            }
        }
        d
    }

    /// Total variation of the boundary map: the length of the image cycle.
    pub fn image_length(&self) -> f64 {
        let n = self.img.len();
        (0..n).map(|i| self.img[i].dist(self.img[(i + 1) % n])).sum()
    }

    pub fn domain_perimeter(&self) -> f64 {
        let n = self.dom.len();
        (0..n).map(|i| self.dom[i].dist(self.dom[(i + 1) % n])).sum()
    }

    /// Integral over the boundary of the pointwise distance between the
    /// tangential derivative of the boundary map and the action of `m` on
    /// the unit tangent.
    pub fn tangent_deviation_integral(&self, m: &Matrix2<f64>) -> f64 {
        let n = self.dom.len();
        let mut acc = 0.0;
        for i in 0..n {
            let e = self.dom[(i + 1) % n].sub(self.dom[i]);
            let f = self.img[(i + 1) % n].sub(self.img[i]);
            let me = m * nalgebra::Vector2::new(e.x, e.y);
            let dx = f.x - me.x;
            let dy = f.y - me.y;
            acc += (dx * dx + dy * dy).sqrt();
        }
        acc
    }

    /// Supremum over boundary edges of the tangential derivative norm.
    pub fn sup_tangent_norm(&self) -> f64 {
        let n = self.dom.len();
        let mut sup: f64 = 0.0;
        for i in 0..n {
            let le = self.dom[(i + 1) % n].dist(self.dom[i]);
            let lf = self.img[(i + 1) % n].dist(self.img[i]);
            sup = sup.max(lf / le);
        }
        sup
    }

    /// Both cycles scaled by `s > 0` about the origin.
    pub fn scaled(&self, s: f64) -> Result<BoundaryData> {
        if !(s > 0.0) {
            return Err(Error::Precondition(format!("scale s = {s} must be > 0")));
        }
        let sc = |v: &[Point2]| v.iter().map(|p| Point2::new(s * p.x, s * p.y)).collect();
        BoundaryData::new(sc(&self.dom), sc(&self.img))
    }

    /// Serializes as matched `DOM x y` / `IMG x y` row pairs.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (d, i) in self.dom.iter().zip(&self.img) {
            out.push_str(&format!("DOM {} {}\nIMG {} {}\n", d.x, d.y, i.x, i.y));
        }
        out
    }

    /// Parses the `DOM` / `IMG` row format produced by [`dump`].
    ///
    /// [`dump`]: BoundaryData::dump
    pub fn parse(text: &str) -> Result<BoundaryData> {
        let mut dom = Vec::new();
        let mut img = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let tag = it.next().unwrap_or("");
            let coords: Vec<f64> = it.map(str::parse).collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config {
                    line: ln + 1,
                    msg: format!("bad coordinate: {e}"),
                })?;
            if coords.len() != 2 {
                return Err(Error::Config {
                    line: ln + 1,
                    msg: format!("expected 2 coordinates, got {}", coords.len()),
                });
            }
            let p = Point2::new(coords[0], coords[1]);
            match tag {
                "DOM" => dom.push(p),
                "IMG" => img.push(p),
                other => {
                    return Err(Error::Config {
                        line: ln + 1,
                        msg: format!("unknown row tag {other:?}"),
                    })
                }
            }
        }
        BoundaryData::new(dom, img)
    }
}

/// Identity boundary data on the square [-h, h]^2 with `per_side` extra
/// break-points on each side (besides the corners).
pub fn square_identity(h: f64, per_side: usize) -> BoundaryData {
    let pts = square_loop(h, per_side);
    BoundaryData::new(pts.clone(), pts).expect("square identity data is valid")
}

/// The counterclockwise cycle of break-points of the square [-h, h]^2.
pub fn square_loop(h: f64, per_side: usize) -> Vec<Point2> {
    let corners = [
        Point2::new(-h, -h),
        Point2::new(h, -h),
        Point2::new(h, h),
        Point2::new(-h, h),
    ];
    let mut pts = Vec::new();
    for c in 0..4 {
        let (a, b) = (corners[c], corners[(c + 1) % 4]);
        for k in 0..=per_side {
            pts.push(a.lerp(b, k as f64 / (per_side + 1) as f64));
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mismatched_counts_are_rejected() {
        let d = square_loop(1.0, 0);
        let mut i = d.clone();
        i.pop();
        assert!(matches!(
            BoundaryData::new(d, i),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn clockwise_input_is_normalized_jointly() {
        let mut d = square_loop(1.0, 0);
        let mut i = d.clone();
        d.reverse();
        i.reverse();
        let bd = BoundaryData::new(d, i).unwrap();
        assert!(signed_area(&bd.dom) > 0.0);
        for (a, b) in bd.dom.iter().zip(&bd.img) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn non_convex_domain_is_rejected() {
        let d = vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(1.0, 0.5),
            Point2::new(2.0, 2.0),
            Point2::new(0.0, 2.0),
        ];
        assert!(BoundaryData::new(d.clone(), d).is_err());
    }

    #[test]
    fn self_crossing_image_is_rejected() {
        let d = square_loop(1.0, 0);
        let i = vec![
            Point2::new(-1.0, -1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, -1.0),
            Point2::new(-1.0, 1.0),
        ];
        assert!(BoundaryData::new(d, i).is_err());
    }

    #[test]
    fn dump_and_parse_round_trip() {
        let bd = square_identity(0.75, 2);
        let back = BoundaryData::parse(&bd.dump()).unwrap();
        assert_eq!(bd.dom, back.dom);
        assert_eq!(bd.img, back.img);
    }

    #[test]
    fn tangent_integrals_for_a_linear_map() {
        let d = square_loop(1.0, 1);
        let m = Matrix2::new(2.0, 0.0, 0.0, 1.0);
        let i: Vec<Point2> = d.iter().map(|p| Point2::new(2.0 * p.x, p.y)).collect();
        let bd = BoundaryData::new(d, i).unwrap();
        assert!(bd.tangent_deviation_integral(&m) < 1e-12);
        assert!((bd.sup_tangent_norm() - 2.0).abs() < 1e-12);
        assert!((bd.image_length() - 12.0).abs() < 1e-12);
        assert!((bd.diameter() - 8.0f64.sqrt()).abs() < 1e-12);
    }
}
