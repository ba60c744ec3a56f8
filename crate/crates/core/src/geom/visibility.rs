//! Visibility-graph shortest paths inside a polygon. Slow and simple; used
//! as the reference oracle for the funnel implementation.

use super::intersect::{segment_intersection, SegmentIntersection};
use super::{Point2, Segment, SimplePolygon};
use crate::{Error, Result};

/// Shortest-path length between `a` and `b` in the closed region bounded by
/// `p`, computed by Dijkstra over the visibility graph on the polygon
/// vertices plus the two endpoints.
pub fn visibility_geodesic(p: &SimplePolygon, a: Point2, b: Point2) -> Result<f64> {
    if !p.contains(a) {
        return Err(Error::PointOutsidePolygon(a.x, a.y));
    }
    if !p.contains(b) {
        return Err(Error::PointOutsidePolygon(b.x, b.y));
    }
    let mut nodes: Vec<Point2> = vec![a, b];
    nodes.extend_from_slice(p.vertices());
    let n = nodes.len();

    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[0] = 0.0;
    for _ in 0..n {
        let u = match (0..n)
            .filter(|&i| !done[i] && dist[i].is_finite())
            .min_by(|&i, &j| dist[i].total_cmp(&dist[j]))
        {
            Some(u) => u,
            None => break,
        };
        done[u] = true;
        if u == 1 {
            break;
        }
        for v in 0..n {
            if done[v] || nodes[u] == nodes[v] {
                continue;
            }
            if segment_in_region(p, nodes[u], nodes[v])? {
                let d = dist[u] + nodes[u].dist(nodes[v]);
                if d < dist[v] {
                    dist[v] = d;
                }
            }
        }
    }
    if dist[1].is_finite() {
        Ok(dist[1])
    } else if a == b {
        Ok(0.0)
    } else {
        Err(Error::BadRegion("no visible path between endpoints".into()))
    }
}

/// Whether the closed segment xy stays inside the closed region bounded by
/// `p`. The segment is cut at every contact with the boundary and each piece
/// is tested at its midpoint, so grazing a vertex or running along an edge is
/// handled correctly.
fn segment_in_region(p: &SimplePolygon, x: Point2, y: Point2) -> Result<bool> {
    let s = Segment::new(x, y)?;
    let dir = s.dir();
    let proj = |q: Point2| (q.x - x.x) * dir.x + (q.y - x.y) * dir.y;
    let mut cuts: Vec<f64> = vec![0.0, s.length()];
    let m = p.vertices().len();
    for i in 0..m {
        let e = p.edge(i);
        match segment_intersection(&s, &e)? {
            SegmentIntersection::Empty => {}
            SegmentIntersection::Point(q) => cuts.push(proj(q)),
            SegmentIntersection::Overlap(q1, q2) => {
                cuts.push(proj(q1));
                cuts.push(proj(q2));
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    for w in cuts.windows(2) {
        if w[1] - w[0] < 1e-12 {
            continue;
        }
        let t = 0.5 * (w[0] + w[1]);
        let mid = Point2::new(x.x + t * dir.x, x.y + t * dir.y);
        if !p.contains(mid) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::geodesic::geodesic_distance;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn l_shape() -> SimplePolygon {
        SimplePolygon::new(vec![
            p(0., 0.),
            p(2., 0.),
            p(2., 1.),
            p(1., 1.),
            p(1., 2.),
            p(0., 2.),
        ])
        .unwrap()
    }

    #[test]
    fn l_shape_reference_value() {
        let d = visibility_geodesic(&l_shape(), p(1.5, 0.5), p(0.5, 1.5)).unwrap();
        assert!((d - 2.0 * 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_funnel_on_l_shape_grid() {
        let poly = l_shape();
        let samples = [
            p(0.25, 0.25),
            p(1.75, 0.25),
            p(0.25, 1.75),
            p(0.75, 0.75),
            p(1.25, 0.5),
            p(0.5, 1.25),
        ];
        for (i, &a) in samples.iter().enumerate() {
            for &b in &samples[i + 1..] {
                let f = geodesic_distance(&poly, a, b).unwrap().length;
                let v = visibility_geodesic(&poly, a, b).unwrap();
                assert!((f - v).abs() < 1e-9, "a={a:?} b={b:?} funnel={f} vis={v}");
            }
        }
    }

    #[test]
    fn boundary_hugging_path_allowed() {
        let poly = l_shape();
        // path along the inner corner edges
        let d = visibility_geodesic(&poly, p(1., 0.5), p(0.5, 1.)).unwrap();
        assert!(d <= p(1., 0.5).dist(p(1., 1.)) + p(1., 1.).dist(p(0.5, 1.)) + 1e-12);
    }
}
