//! Constrained triangulation of simple polygons by ear clipping, with
//! insertion of interior points by triangle splitting.

use super::predicates::{orient2d, Orientation};
use super::{point_on_segment, signed_area, Point2, Segment, SimplePolygon};
use crate::{Error, Result};
use std::collections::HashMap;

/// A triangulation of a polygonal region. Triangles are positively oriented,
/// interior-disjoint, and each interior edge is shared by exactly two
/// triangles.
#[derive(Debug, Clone)]
pub struct Triangulation {
    pub vertices: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
    /// True for vertices on the boundary of the triangulated polygon.
    pub boundary: Vec<bool>,
}

impl Triangulation {
    /// Builds a triangulation from raw vertex and triangle lists, derives
    /// boundary flags from edge usage, and validates it.
    pub fn from_parts(vertices: Vec<Point2>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mut tri = Triangulation {
            boundary: vec![false; vertices.len()],
            vertices,
            triangles,
        };
        for (edge, ts) in tri.edge_map() {
            if ts.len() == 1 {
                tri.boundary[edge.0] = true;
                tri.boundary[edge.1] = true;
            }
        }
        tri.validate()?;
        Ok(tri)
    }

    pub fn triangle_points(&self, t: usize) -> [Point2; 3] {
        let [i, j, k] = self.triangles[t];
        [self.vertices[i], self.vertices[j], self.vertices[k]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(&[a, b, c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Index of a triangle whose closed hull contains `p`, if any.
    pub fn locate(&self, p: Point2) -> Option<usize> {
        (0..self.triangles.len()).find(|&t| self.triangle_contains(t, p))
    }

    pub fn triangle_contains(&self, t: usize, p: Point2) -> bool {
        let [a, b, c] = self.triangle_points(t);
        orient2d(a, b, p) != Orientation::Clockwise
            && orient2d(b, c, p) != Orientation::Clockwise
            && orient2d(c, a, p) != Orientation::Clockwise
    }

    /// Map from each undirected edge to the triangles using it.
    pub fn edge_map(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut m: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for e in 0..3 {
                let (i, j) = (tri[e], tri[(e + 1) % 3]);
                let key = (i.min(j), i.max(j));
                m.entry(key).or_default().push(t);
            }
        }
        m
    }

    /// Validates orientation, edge-manifoldness and area consistency.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.triangles.len() {
            if self.triangle_area(t) <= 0.0 {
                return Err(Error::NonSimplePolygon(format!(
                    "triangle {t} not positively oriented"
                )));
            }
        }
        for (edge, ts) in self.edge_map() {
            if ts.len() > 2 {
                return Err(Error::NonSimplePolygon(format!(
                    "edge {edge:?} shared by {} triangles",
                    ts.len()
                )));
            }
        }
        Ok(())
    }
}

/// Triangulates a simple polygon by ear clipping and then inserts the given
/// interior points by splitting the containing triangle (or both triangles
/// adjacent to an edge when the point lies on one).
pub fn triangulate_simple_polygon(
    poly: &SimplePolygon,
    interior_points: &[Point2],
) -> Result<Triangulation> {
    let mut tri = ear_clip(poly)?;
    for &p in interior_points {
        insert_point(&mut tri, p)?;
    }
    tri.validate()?;
    Ok(tri)
}

fn ear_clip(poly: &SimplePolygon) -> Result<Triangulation> {
    let verts: Vec<Point2> = poly.vertices().to_vec();
    let n = verts.len();
    let mut ring: Vec<usize> = (0..n).collect();
    let mut triangles = Vec::with_capacity(n.saturating_sub(2));

    let is_ear = |ring: &[usize], k: usize, verts: &[Point2]| -> bool {
        let m = ring.len();
        let prev = verts[ring[(k + m - 1) % m]];
        let cur = verts[ring[k]];
        let next = verts[ring[(k + 1) % m]];
        if orient2d(prev, cur, next) != Orientation::CounterClockwise {
            return false;
        }
        // no other ring vertex strictly inside the candidate ear
        for (idx, &vi) in ring.iter().enumerate() {
            if idx == k || idx == (k + m - 1) % m || idx == (k + 1) % m {
                continue;
            }
            let p = verts[vi];
            if point_in_triangle_closed(p, prev, cur, next) {
                return false;
            }
        }
        true
    };

    let mut guard = 0usize;
    while ring.len() > 3 {
        let m = ring.len();
        let mut clipped = false;
        for k in 0..m {
            if is_ear(&ring, k, &verts) {
                let prev = ring[(k + m - 1) % m];
                let next = ring[(k + 1) % m];
                triangles.push([prev, ring[k], next]);
                ring.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            return Err(Error::NonSimplePolygon(
                "ear clipping found no ear (degenerate input?)".into(),
            ));
        }
        guard += 1;
        if guard > 10 * n {
            return Err(Error::NonSimplePolygon("ear clipping did not terminate".into()));
        }
    }
    // last triangle; skip when collinear (possible with collinear boundary triples)
    let last = [ring[0], ring[1], ring[2]];
    if signed_area(&[verts[last[0]], verts[last[1]], verts[last[2]]]) > 0.0 {
        triangles.push(last);
    }

    let boundary = vec![true; n];
    Ok(Triangulation {
        vertices: verts,
        triangles,
        boundary,
    })
}

fn point_in_triangle_closed(p: Point2, a: Point2, b: Point2, c: Point2) -> bool {
    orient2d(a, b, p) != Orientation::Clockwise
        && orient2d(b, c, p) != Orientation::Clockwise
        && orient2d(c, a, p) != Orientation::Clockwise
}

/// Inserts `p` into the triangulation: 1-to-3 split inside a triangle,
/// 2-to-4 split when `p` falls on an interior edge.
pub fn insert_point(tri: &mut Triangulation, p: Point2) -> Result<()> {
    if tri.vertices.contains(&p) {
        return Ok(());
    }
    // edge case first: p on an edge of some triangle
    let edges = tri.edge_map();
    for ((i, j), ts) in &edges {
        let seg = Segment {
            a: tri.vertices[*i],
            b: tri.vertices[*j],
        };
        if point_on_segment(p, &seg) {
            if ts.len() < 2 {
                return Err(Error::Precondition(
                    "interior point lies on the polygon boundary".into(),
                ));
            }
            let v = tri.vertices.len();
            tri.vertices.push(p);
            tri.boundary.push(false);
            let mut sorted = ts.clone();
            sorted.sort_unstable_by(|a, b| b.cmp(a));
            for &t in &sorted {
                let old = tri.triangles[t];
                tri.triangles.swap_remove(t);
                // split old into two triangles replacing edge (i,j)
                for e in 0..3 {
                    let (a, b) = (old[e], old[(e + 1) % 3]);
                    if (a.min(b), a.max(b)) == (*i.min(j), *i.max(j)) {
                        let c = old[(e + 2) % 3];
                        tri.triangles.push([a, v, c]);
                        tri.triangles.push([v, b, c]);
                        break;
                    }
                }
            }
            return Ok(());
        }
    }
    let t = tri
        .locate(p)
        .ok_or_else(|| Error::PointOutsidePolygon(p.x, p.y))?;
    let [a, b, c] = tri.triangles[t];
    let v = tri.vertices.len();
    tri.vertices.push(p);
    tri.boundary.push(false);
    tri.triangles.swap_remove(t);
    tri.triangles.push([a, b, v]);
    tri.triangles.push([b, c, v]);
    tri.triangles.push([c, a, v]);
    Ok(())
}
