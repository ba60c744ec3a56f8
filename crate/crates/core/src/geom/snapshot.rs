//! Line-oriented snapshot format for triangulations and piecewise-affine
//! maps (`V x y`, `T i j k`, `IMG i x y`), plus SVG emission of meshes.

use super::pahomeo::PaHomeo;
use super::{Point2, Triangulation};
use crate::{Error, Result};
use std::fmt::Write as _;

/// Serializes a triangulation, optionally with per-vertex image positions.
pub fn write_snapshot(tri: &Triangulation, image: Option<&[Point2]>) -> String {
    let mut out = String::new();
    for v in &tri.vertices {
        writeln!(out, "V {} {}", fmt_f(v.x), fmt_f(v.y)).unwrap();
    }
    for t in &tri.triangles {
        writeln!(out, "T {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    if let Some(img) = image {
        for (i, p) in img.iter().enumerate() {
            writeln!(out, "IMG {} {} {}", i, fmt_f(p.x), fmt_f(p.y)).unwrap();
        }
    }
    out
}

fn fmt_f(x: f64) -> String {
    // shortest representation that round-trips
    format!("{x}")
}

/// Parses a snapshot; returns the triangulation and the image positions if
/// any `IMG` records are present.
pub fn read_snapshot(text: &str) -> Result<(Triangulation, Option<Vec<Point2>>)> {
    let mut vertices: Vec<Point2> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut image: Vec<(usize, Point2)> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let tag = it.next().unwrap();
        let bad = |msg: &str| Error::Config {
            line: ln + 1,
            msg: msg.into(),
        };
        match tag {
            "V" => {
                let x = parse_num(it.next(), ln)?;
                let y = parse_num(it.next(), ln)?;
                vertices.push(Point2::new(x, y));
            }
            "T" => {
                let i = parse_idx(it.next(), ln)?;
                let j = parse_idx(it.next(), ln)?;
                let k = parse_idx(it.next(), ln)?;
                triangles.push([i, j, k]);
            }
            "IMG" => {
                let i = parse_idx(it.next(), ln)?;
                let x = parse_num(it.next(), ln)?;
                let y = parse_num(it.next(), ln)?;
                image.push((i, Point2::new(x, y)));
            }
            _ => return Err(bad(&format!("unknown record tag {tag}"))),
        }
        if it.next().is_some() {
            return Err(bad("trailing fields"));
        }
    }
    for t in &triangles {
        if t.iter().any(|&i| i >= vertices.len()) {
            return Err(Error::Config {
                line: 0,
                msg: "triangle vertex index out of range".into(),
            });
        }
    }
    let tri = Triangulation::from_parts(vertices, triangles)?;
    let img = if image.is_empty() {
        None
    } else {
        let mut v = tri.vertices.clone();
        for (i, p) in image {
            if i >= v.len() {
                return Err(Error::Config {
                    line: 0,
                    msg: "IMG index out of range".into(),
                });
            }
            v[i] = p;
        }
        Some(v)
    };
    Ok((tri, img))
}

fn parse_num(field: Option<&str>, ln: usize) -> Result<f64> {
    field
        .and_then(|s| s.parse::<f64>().ok())
        .filter(|x| x.is_finite())
        .ok_or(Error::Config {
            line: ln + 1,
            msg: "expected a finite number".into(),
        })
}

fn parse_idx(field: Option<&str>, ln: usize) -> Result<usize> {
    field
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or(Error::Config {
            line: ln + 1,
            msg: "expected an index".into(),
        })
}

/// Renders a triangulation to SVG. Coordinates are mapped so the square
/// Q(0,1) = [-1,1]² fills a 1000×1000 viewBox with the y axis flipped.
pub fn svg_mesh(vertices: &[Point2], triangles: &[[usize; 3]], fills: Option<&[String]>) -> String {
    let (tx, ty) = svg_transform(vertices);
    let mut out = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1000 1000\">\n",
    );
    for (i, t) in triangles.iter().enumerate() {
        let pts: Vec<String> = t
            .iter()
            .map(|&v| format!("{:.2},{:.2}", tx(vertices[v].x), ty(vertices[v].y)))
            .collect();
        let fill = fills
            .and_then(|f| f.get(i).cloned())
            .unwrap_or_else(|| "#e8e8e8".into());
        writeln!(
            out,
            "<polygon points=\"{}\" fill=\"{}\" stroke=\"#303030\" stroke-width=\"0.6\"/>",
            pts.join(" "),
            fill
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// SVG of the image mesh of a piecewise-affine map, triangles colored by the
/// quantile of their derivative norm.
pub fn svg_image_mesh(g: &PaHomeo) -> String {
    let norms: Vec<f64> = (0..g.domain.triangles.len())
        .map(|t| g.derivative(t).norm())
        .collect();
    let mut sorted = norms.clone();
    sorted.sort_by(f64::total_cmp);
    let fills: Vec<String> = norms
        .iter()
        .map(|&x| {
            let rank = sorted.partition_point(|&s| s <= x);
            let q = rank as f64 / sorted.len() as f64;
            quantile_color(q)
        })
        .collect();
    svg_mesh(&g.image, &g.domain.triangles, Some(&fills))
}

fn quantile_color(q: f64) -> String {
    // light blue (low) to dark red (high)
    let r = (60.0 + 180.0 * q) as u8;
    let g = (120.0 * (1.0 - q) + 40.0) as u8;
    let b = (220.0 * (1.0 - q) + 30.0) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn svg_transform(vertices: &[Point2]) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (-1.0f64, 1.0f64, -1.0f64, 1.0f64);
    for v in vertices {
        lo_x = lo_x.min(v.x);
        hi_x = hi_x.max(v.x);
        lo_y = lo_y.min(v.y);
        hi_y = hi_y.max(v.y);
    }
    let span = (hi_x - lo_x).max(hi_y - lo_y).max(1e-12);
    let scale = 1000.0 / span;
    (
        move |x: f64| (x - lo_x) * scale,
        move |y: f64| 1000.0 - (y - lo_y) * scale,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{triangulate_simple_polygon, SimplePolygon};

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn square_tri() -> Triangulation {
        let sq = SimplePolygon::new(vec![p(-1., -1.), p(1., -1.), p(1., 1.), p(-1., 1.)]).unwrap();
        triangulate_simple_polygon(&sq, &[]).unwrap()
    }

    #[test]
    fn snapshot_round_trip() {
        let tri = square_tri();
        let image: Vec<Point2> = tri.vertices.iter().map(|v| p(2. * v.x, v.y)).collect();
        let text = write_snapshot(&tri, Some(&image));
        let (tri2, img2) = read_snapshot(&text).unwrap();
        assert_eq!(tri.vertices, tri2.vertices);
        assert_eq!(tri.triangles, tri2.triangles);
        assert_eq!(img2.unwrap(), image);
    }

    #[test]
    fn bad_record_reports_line() {
        let err = read_snapshot("V 0 0\nV 1 0\nQ 1 2\n");
        match err {
            Err(Error::Config { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn svg_contains_one_polygon_per_triangle() {
        let tri = square_tri();
        let g = PaHomeo::identity(tri).unwrap();
        let svg = svg_image_mesh(&g);
        let count = svg.matches("<polygon").count();
        assert_eq!(count, g.domain.triangles.len());
        assert!(svg.contains("viewBox=\"0 0 1000 1000\""));
    }
}
