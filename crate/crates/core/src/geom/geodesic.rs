//! Geodesic distance inside a Jordan polygon via the funnel algorithm over
//! the dual tree of an ear-clip triangulation.

use super::{Point2, SimplePolygon, Triangulation};
use crate::{Error, Result};
use std::collections::HashMap;

/// A shortest path inside a closed polygonal region, with its length.
#[derive(Debug, Clone)]
pub struct GeodesicPath {
    pub length: f64,
    pub points: Vec<Point2>,
}

fn cross2(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn path_length(points: &[Point2]) -> f64 {
    points.windows(2).map(|w| w[0].dist(w[1])).sum()
}

/// Shortest path between `a` and `b` staying in the closed region bounded by
/// `p`. The realizing path turns only at reflex vertices of the polygon.
pub fn geodesic_distance(p: &SimplePolygon, a: Point2, b: Point2) -> Result<GeodesicPath> {
    if !p.contains(a) {
        return Err(Error::PointOutsidePolygon(a.x, a.y));
    }
    if !p.contains(b) {
        return Err(Error::PointOutsidePolygon(b.x, b.y));
    }
    let tri = super::triangulate::triangulate_simple_polygon(p, &[])?;
    let ta = locate_closed(&tri, a)
        .ok_or_else(|| Error::PointOutsidePolygon(a.x, a.y))?;
    let tb = locate_closed(&tri, b)
        .ok_or_else(|| Error::PointOutsidePolygon(b.x, b.y))?;
    if ta == tb {
        return Ok(GeodesicPath {
            length: a.dist(b),
            points: vec![a, b],
        });
    }
    let strip = dual_path(&tri, ta, tb)
        .ok_or_else(|| Error::BadRegion("disconnected triangulation dual".into()))?;

    // Portals oriented as (left, right) with respect to the travel direction:
    // when the shared edge appears as u -> v in the CCW order of the triangle
    // being exited, u lies to the right and v to the left.
    let mut portals: Vec<(Point2, Point2)> = vec![(a, a)];
    for w in strip.windows(2) {
        let (u, v) = directed_shared_edge(&tri, w[0], w[1])
            .ok_or_else(|| Error::BadRegion("broken dual path".into()))?;
        portals.push((tri.vertices[v], tri.vertices[u]));
    }
    portals.push((b, b));

    let points = funnel(&portals);
    Ok(GeodesicPath {
        length: path_length(&points),
        points,
    })
}

fn locate_closed(tri: &Triangulation, p: Point2) -> Option<usize> {
    if let Some(t) = tri.locate(p) {
        return Some(t);
    }
    // Boundary points can slip through the closed test numerically; take the
    // triangle with the least outside defect.
    let mut best: Option<(usize, f64)> = None;
    for t in 0..tri.triangles.len() {
        let [x, y, z] = tri.triangle_points(t);
        let defect = [-cross2(x, y, p), -cross2(y, z, p), -cross2(z, x, p)]
            .into_iter()
            .fold(0.0f64, f64::max);
        if best.map_or(true, |(_, d)| defect < d) {
            best = Some((t, defect));
        }
    }
    best.filter(|&(_, d)| d < 1e-9).map(|(t, _)| t)
}

fn dual_path(tri: &Triangulation, from: usize, to: usize) -> Option<Vec<usize>> {
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for tris in tri.edge_map().values() {
        if let [s, t] = tris[..] {
            adj.entry(s).or_default().push(t);
            adj.entry(t).or_default().push(s);
        }
    }
    let mut prev: HashMap<usize, usize> = HashMap::new();
    let mut queue = std::collections::VecDeque::from([from]);
    let mut seen = vec![false; tri.triangles.len()];
    seen[from] = true;
    while let Some(t) = queue.pop_front() {
        if t == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = prev[&cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for &n in adj.get(&t).map(Vec::as_slice).unwrap_or(&[]) {
            if !seen[n] {
                seen[n] = true;
                prev.insert(n, t);
                queue.push_back(n);
            }
        }
    }
    None
}

/// The edge of triangle `cur` shared with `next`, directed u -> v as it
/// appears in `cur`'s CCW vertex order.
fn directed_shared_edge(tri: &Triangulation, cur: usize, next: usize) -> Option<(usize, usize)> {
    let c = tri.triangles[cur];
    let n = tri.triangles[next];
    for e in 0..3 {
        let (u, v) = (c[e], c[(e + 1) % 3]);
        if n.contains(&u) && n.contains(&v) {
            return Some((u, v));
        }
    }
    None
}

fn funnel(portals: &[(Point2, Point2)]) -> Vec<Point2> {
    let mut path = vec![portals[0].0];
    let (mut apex, mut left, mut right) = (portals[0].0, portals[0].0, portals[0].1);
    let (mut apex_i, mut left_i, mut right_i) = (0usize, 0usize, 0usize);
    let mut i = 1;
    while i < portals.len() {
        let (pl, pr) = portals[i];
        // tighten the right side
        if cross2(apex, right, pr) >= 0.0 {
            if apex == right || cross2(apex, left, pr) < 0.0 {
                right = pr;
                right_i = i;
            } else {
                // right sweeps over left: the left point joins the path
                path.push(left);
                apex = left;
                apex_i = left_i;
                left = apex;
                right = apex;
                left_i = apex_i;
                right_i = apex_i;
                i = apex_i + 1;
                continue;
            }
        }
        // tighten the left side
        if cross2(apex, left, pl) <= 0.0 {
            if apex == left || cross2(apex, right, pl) > 0.0 {
                left = pl;
                left_i = i;
            } else {
                path.push(right);
                apex = right;
                apex_i = right_i;
                left = apex;
                right = apex;
                left_i = apex_i;
                right_i = apex_i;
                i = apex_i + 1;
                continue;
            }
        }
        i += 1;
    }
    let goal = portals[portals.len() - 1].0;
    if *path.last().unwrap() != goal {
        path.push(goal);
    }
    path
}
