//! Restriction of a catalogue map to a polyline: a one-dimensional BV map
//! with explicit jump list and variation functions.

use super::catalogue::TestMap;
use crate::geom::intersect::{segment_intersection, SegmentIntersection};
use crate::geom::{signed_area, Point2, Polyline};
use crate::{Error, Result};

/// A jump of the restricted map: parameter t ∈ [0,1], left limit Y and right
/// limit Z.
#[derive(Debug, Clone, Copy)]
pub struct OneDJump {
    pub t: f64,
    pub y: Point2,
    pub z: Point2,
}

/// A one-dimensional BV map along a constant-speed parametrized polyline,
/// piecewise linear between breakpoints with one-sided values.
#[derive(Debug, Clone)]
pub struct OneDBV {
    pub total_length: f64,
    /// Sorted breakpoints in [0,1]; first 0, last 1.
    pub t: Vec<f64>,
    /// Value arriving at the breakpoint (left limit).
    pub left: Vec<Point2>,
    /// Value leaving the breakpoint (right limit).
    pub right: Vec<Point2>,
    pub jumps: Vec<OneDJump>,
}

impl OneDBV {
    /// Right-continuous evaluation.
    pub fn eval(&self, t: f64) -> Point2 {
        let t = t.clamp(0.0, 1.0);
        let i = match self.t.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => return self.right[i.min(self.right.len() - 1)],
            Err(i) => i - 1,
        };
        let (a, b) = (self.t[i], self.t[i + 1]);
        let s = (t - a) / (b - a);
        self.right[i].lerp(self.left[i + 1], s)
    }

    /// Variation of the continuous part on [0, t].
    pub fn var_continuous(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let mut acc = 0.0;
        for i in 0..self.t.len() - 1 {
            let (a, b) = (self.t[i], self.t[i + 1]);
            if t <= a {
                break;
            }
            let frac = ((t - a) / (b - a)).min(1.0);
            acc += self.right[i].dist(self.left[i + 1]) * frac;
        }
        acc
    }

    /// Total variation on [0, t], jumps included (jumps at s ≤ t count).
    pub fn var_total(&self, t: f64) -> f64 {
        let jumps: f64 = self
            .jumps
            .iter()
            .filter(|j| j.t <= t)
            .map(|j| j.z.dist(j.y))
            .sum();
        self.var_continuous(t) + jumps
    }
}

/// Restricts a catalogue map to a polyline. Transversal jump crossings
/// become jumps of the 1D map; a polyline running along a jump arc is
/// rejected.
pub fn restrict_to_polyline(f: &TestMap, p: &Polyline) -> Result<OneDBV> {
    let total_length = p.length();
    let segs: Vec<_> = p.segments().collect();
    let seg_len: Vec<f64> = segs.iter().map(|s| s.length()).collect();
    let mut offset = 0.0;
    let mut cuts: Vec<f64> = vec![0.0, 1.0];
    let mut jump_ts: Vec<(f64, Point2, Point2)> = Vec::new();

    for (si, seg) in segs.iter().enumerate() {
        let to_global = |t_local: f64| (offset + t_local * seg_len[si]) / total_length;
        // direction changes at polyline vertices must bound affine pieces
        cuts.push(to_global(0.0));
        // cut at every triangulation edge crossing so pieces are affine
        for tri in &f.pl.domain.triangles {
            for e in 0..3 {
                let a = f.pl.domain.vertices[tri[e]];
                let b = f.pl.domain.vertices[tri[(e + 1) % 3]];
                if a == b {
                    continue;
                }
                let edge = crate::geom::Segment::new(a, b)?;
                match segment_intersection(seg, &edge)? {
                    SegmentIntersection::Point(q) => cuts.push(to_global(param_on(seg, q))),
                    SegmentIntersection::Overlap(q1, q2) => {
                        cuts.push(to_global(param_on(seg, q1)));
                        cuts.push(to_global(param_on(seg, q2)));
                    }
                    SegmentIntersection::Empty => {}
                }
            }
        }
        for arc in &f.jumps {
            match segment_intersection(seg, &arc.seg)? {
                SegmentIntersection::Empty => {}
                SegmentIntersection::Overlap(q1, q2) => {
                    if q1.dist(q2) > 1e-12 {
                        return Err(Error::GridOnJumpSet(format!(
                            "polyline runs along the jump arc between {q1:?} and {q2:?}"
                        )));
                    }
                }
                SegmentIntersection::Point(q) => {
                    let t_arc = param_on(&arc.seg, q);
                    if arc.size(t_arc) < 1e-15 {
                        continue; // closed fracture tip, no jump
                    }
                    let (minus, plus) = arc.values(t_arc);
                    let approach = seg.dir();
                    let from_minus = approach.dot(arc.normal) > 0.0;
                    let (y, z) = if from_minus { (minus, plus) } else { (plus, minus) };
                    let tg = to_global(param_on(seg, q));
                    cuts.push(tg);
                    jump_ts.push((tg, y, z));
                }
            }
        }
        offset += seg_len[si];
    }

    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    if (cuts[0]).abs() > 1e-13 {
        cuts.insert(0, 0.0);
    }
    *cuts.last_mut().unwrap() = 1.0;
    cuts[0] = 0.0;

    // one-sided values at every cut, from the affine piece of the midpoint
    let gamma = |t: f64| p.point_at_arclen(t * total_length);
    let mut left = Vec::with_capacity(cuts.len());
    let mut right = Vec::with_capacity(cuts.len());
    let mut piece_vals = Vec::with_capacity(cuts.len().saturating_sub(1));
    for w in cuts.windows(2) {
        let mid = gamma(0.5 * (w[0] + w[1]));
        let t = f.pl.domain.locate(mid).ok_or_else(|| {
            Error::BadRegion(format!("polyline leaves the domain near {mid:?}"))
        })?;
        let aff = affine_eval(f, t);
        piece_vals.push((aff(gamma(w[0])), aff(gamma(w[1]))));
    }
    for i in 0..cuts.len() {
        let lv = if i == 0 {
            piece_vals[0].0
        } else {
            piece_vals[i - 1].1
        };
        let rv = if i == cuts.len() - 1 {
            piece_vals[i - 1].1
        } else {
            piece_vals[i].0
        };
        left.push(lv);
        right.push(rv);
    }

    let mut jumps: Vec<OneDJump> = jump_ts
        .into_iter()
        .map(|(t, y, z)| OneDJump { t, y, z })
        .collect();
    jumps.sort_by(|a, b| a.t.total_cmp(&b.t));

    Ok(OneDBV {
        total_length,
        t: cuts,
        left,
        right,
        jumps,
    })
}

fn param_on(seg: &crate::geom::Segment, q: Point2) -> f64 {
    let d = seg.b.sub(seg.a);
    (q.sub(seg.a).dot(d) / d.dot(d)).clamp(0.0, 1.0)
}

fn affine_eval<'a>(f: &'a TestMap, t: usize) -> impl Fn(Point2) -> Point2 + 'a {
    let [a, b, c] = f.pl.domain.triangle_points(t);
    let [ia, ib, ic] = f.pl.image_triangle(t);
    move |p: Point2| {
        let area = signed_area(&[a, b, c]);
        let wa = signed_area(&[p, b, c]) / area;
        let wb = signed_area(&[a, p, c]) / area;
        let wc = 1.0 - wa - wb;
        Point2::new(
            wa * ia.x + wb * ib.x + wc * ic.x,
            wa * ia.y + wb * ib.y + wc * ic.y,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapcat::catalogue::make_catalogue_map;
    use std::collections::BTreeMap;

    fn map(kind: &str, kv: &[(&str, f64)]) -> TestMap {
        let params: BTreeMap<String, f64> =
            kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        make_catalogue_map(kind, &params).unwrap()
    }

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn identity_restriction_has_length_variation() {
        let m = map("identity", &[]);
        let line = Polyline::new(vec![p(-0.9, -0.3), p(0.4, 0.1), p(0.8, 0.7)]).unwrap();
        let r = restrict_to_polyline(&m, &line).unwrap();
        assert!(r.jumps.is_empty());
        assert!((r.var_total(1.0) - line.length()).abs() < 1e-12);
        assert!(r.eval(0.0).dist(p(-0.9, -0.3)) < 1e-12);
        assert!(r.eval(1.0).dist(p(0.8, 0.7)) < 1e-12);
    }

    #[test]
    fn fracture_horizontal_line_has_one_jump() {
        let m = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let line = Polyline::new(vec![p(-1.0, 0.0), p(1.0, 0.0)]).unwrap();
        let r = restrict_to_polyline(&m, &line).unwrap();
        assert_eq!(r.jumps.len(), 1);
        let j = r.jumps[0];
        assert!((j.t - 0.5).abs() < 1e-12);
        assert!((j.z.dist(j.y) - 0.2).abs() < 1e-12);
        assert!((j.y.x - -0.1).abs() < 1e-12 && (j.z.x - 0.1).abs() < 1e-12);
        // L - l equals the jump size
        assert!((r.var_total(1.0) - r.var_continuous(1.0) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn affine_segment_variation_is_au_times_length() {
        let m = map("affine", &[("a11", 2.0)]);
        // inside the window, direction (1,0), length 0.6
        let line = Polyline::new(vec![p(-0.3, 0.1), p(0.3, 0.1)]).unwrap();
        let r = restrict_to_polyline(&m, &line).unwrap();
        assert!((r.var_total(1.0) - 2.0 * 0.6).abs() < 1e-12);
    }

    #[test]
    fn polyline_along_jump_rejected() {
        let m = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let line = Polyline::new(vec![p(0.0, -0.3), p(0.0, 0.3)]).unwrap();
        assert!(matches!(
            restrict_to_polyline(&m, &line),
            Err(Error::GridOnJumpSet(_))
        ));
    }

    #[test]
    fn variation_is_monotone() {
        let m = map("fracture", &[("d", 0.3), ("a", 0.6)]);
        let line = Polyline::new(vec![p(-0.8, -0.2), p(0.7, 0.3)]).unwrap();
        let r = restrict_to_polyline(&m, &line).unwrap();
        let mut prev = 0.0;
        for i in 0..=50 {
            let t = i as f64 / 50.0;
            let v = r.var_total(t);
            assert!(v + 1e-12 >= prev);
            assert!(r.var_continuous(t) <= v + 1e-12);
            prev = v;
        }
    }
}
