//! Geometric representative of a BV map on a grid: per arc, the image curve
//! with jumps filled in by constant-speed straight segments.

use crate::geom::{Point2, Polyline};
use crate::grid::{check_admissible, default_radii, Grid, NonStraightGrid};
use crate::mapcat::{restrict_to_polyline, OneDBV, OneDJump, TestMap};
use crate::{Error, Result};
use std::fmt::Write as _;

/// Resolution of the polyline representation of the filled image curves.
pub const TAU_REP: f64 = 1.0 / 4096.0;

/// The filled image curve of one grid arc.
///
/// The curve is parametrized by its own arc length `s ∈ [0, length]`; `t`
/// records the domain parameter of the underlying arc at each curve vertex.
/// Across a filled jump segment `t` is constant while `s` advances.
#[derive(Debug, Clone)]
pub struct ArcRep {
    /// Image curve, jumps filled by straight segments.
    pub curve: Polyline,
    /// Arc-length parameter of each curve vertex.
    pub s: Vec<f64>,
    /// Domain parameter (in [0,1] along the grid arc) of each curve vertex.
    pub t: Vec<f64>,
    /// The jumps of the restriction, with one-sided values Y and Z.
    pub jumps: Vec<OneDJump>,
    /// Total variation of the restriction, jumps included.
    pub variation: f64,
}

impl ArcRep {
    pub fn s_total(&self) -> f64 {
        *self.s.last().unwrap()
    }

    /// Point of the image curve at arc-length parameter `s`.
    pub fn image_at(&self, s: f64) -> Point2 {
        self.curve.point_at_arclen(s)
    }

    /// Domain parameter corresponding to arc-length parameter `s`.
    pub fn domain_param_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.s_total());
        let i = self.s.partition_point(|&v| v < s).max(1) - 1;
        let i = i.min(self.s.len() - 2);
        let (a, b) = (self.s[i], self.s[i + 1]);
        if b - a <= 0.0 {
            return self.t[i];
        }
        let frac = ((s - a) / (b - a)).clamp(0.0, 1.0);
        self.t[i] + frac * (self.t[i + 1] - self.t[i])
    }
}

/// Geometric representative of a map on every arc of a grid.
#[derive(Debug, Clone)]
pub struct GeomRep {
    pub grid: NonStraightGrid,
    pub arcs: Vec<ArcRep>,
}

impl GeomRep {
    /// Plain-text dump: per arc the curve vertices, then the jump table.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, arc) in self.arcs.iter().enumerate() {
            writeln!(out, "ARC {i} {}", arc.curve.vertices.len()).unwrap();
            for v in &arc.curve.vertices {
                writeln!(out, "{} {}", v.x, v.y).unwrap();
            }
        }
        for (i, arc) in self.arcs.iter().enumerate() {
            for j in &arc.jumps {
                writeln!(out, "JUMP {i} {} {} {} {} {}", j.t, j.y.x, j.y.y, j.z.x, j.z.y)
                    .unwrap();
            }
        }
        out
    }
}

/// Builds the geometric representative of `f` on `g`. The grid must be
/// admissible for `f`; the restriction to each arc is evaluated at its
/// breakpoints and jumps are filled by straight segments.
pub fn build_geom_rep(f: &TestMap, g: &Grid) -> Result<GeomRep> {
    let report = check_admissible(g, f, &default_radii())?;
    if !report.pass() {
        let witness = report
            .conditions
            .iter()
            .filter(|c| !c.pass)
            .flat_map(|c| c.witnesses.iter().cloned())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::NotAdmissible(witness));
    }
    let grid = g.as_nonstraight();
    let mut arcs = Vec::with_capacity(grid.curves.len());
    for curve in &grid.curves {
        let bv = restrict_to_polyline(f, curve)?;
        arcs.push(fill_jumps(&bv)?);
    }
    Ok(GeomRep { grid, arcs })
}

/// Builds the filled image curve of a restriction.
pub(crate) fn fill_jumps(bv: &OneDBV) -> Result<ArcRep> {
    let mut pts: Vec<Point2> = Vec::new();
    let mut ts: Vec<f64> = Vec::new();
    let push = |p: Point2, t: f64, pts: &mut Vec<Point2>, ts: &mut Vec<f64>| {
        if pts.last().map_or(true, |q| q.dist(p) > 1e-15) {
            pts.push(p);
            ts.push(t);
        }
    };
    push(bv.right[0], bv.t[0], &mut pts, &mut ts);
    for i in 1..bv.t.len() {
        push(bv.left[i], bv.t[i], &mut pts, &mut ts);
        if bv.left[i].dist(bv.right[i]) > 1e-15 {
            push(bv.right[i], bv.t[i], &mut pts, &mut ts);
        }
    }
    if pts.len() < 2 {
        return Err(Error::Precondition(
            "restriction is constant; image curve is degenerate".into(),
        ));
    }
    let curve = Polyline::new(pts)?;
    let mut s = vec![0.0];
    for w in curve.vertices.windows(2) {
        s.push(s.last().unwrap() + w[0].dist(w[1]));
    }
    let variation = bv.var_total(1.0);
    debug_assert!((curve.length() - variation).abs() <= TAU_REP);
    Ok(ArcRep {
        curve,
        s,
        t: ts,
        jumps: bv.jumps.clone(),
        variation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::StraightGrid;
    use crate::mapcat::make_catalogue_map;
    use std::collections::BTreeMap;

    fn map(kind: &str, params: &[(&str, f64)]) -> TestMap {
        let p: BTreeMap<String, f64> =
            params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        make_catalogue_map(kind, &p).unwrap()
    }

    #[test]
    fn identity_representative_is_the_map_itself() {
        let f = map("identity", &[]);
        let g = Grid::Straight(StraightGrid::new(vec![0.3], vec![-0.2]).unwrap());
        let rep = build_geom_rep(&f, &g).unwrap();
        assert_eq!(rep.arcs.len(), 2);
        for (arc, curve) in rep.arcs.iter().zip(&rep.grid.curves) {
            assert!(arc.jumps.is_empty());
            assert!((arc.curve.length() - curve.length()).abs() < 1e-12);
            let first = arc.curve.vertices.first().unwrap();
            let last = arc.curve.vertices.last().unwrap();
            assert!(first.dist(*curve.vertices.first().unwrap()) < 1e-12);
            assert!(last.dist(*curve.vertices.last().unwrap()) < 1e-12);
        }
    }

    #[test]
    fn fracture_arc_gets_a_filled_segment() {
        let f = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let g = Grid::Straight(StraightGrid::new(vec![], vec![0.0]).unwrap());
        let rep = build_geom_rep(&f, &g).unwrap();
        let arc = &rep.arcs[0];
        assert_eq!(arc.jumps.len(), 1);
        let j = arc.jumps[0];
        assert!((j.t - 0.5).abs() < 1e-12);
        assert!(j.y.dist(Point2::new(-0.1, 0.0)) < 1e-12);
        assert!(j.z.dist(Point2::new(0.1, 0.0)) < 1e-12);
        // the filled segment contributes the jump size to the curve length;
        // here the tapered continuous part contracts by exactly that amount,
        // so the total variation equals the variation of the identity arc
        assert!((arc.curve.length() - arc.variation).abs() < 1e-12);
        assert!((arc.variation - 2.0).abs() < 1e-12);
    }

    #[test]
    fn variation_ledger_matches_curve_length() {
        let f = map("shear_blend", &[("s", 0.8)]);
        let g = Grid::Straight(StraightGrid::new(vec![-0.6, 0.55], vec![0.1]).unwrap());
        let rep = build_geom_rep(&f, &g).unwrap();
        for arc in &rep.arcs {
            assert!((arc.curve.length() - arc.variation).abs() <= TAU_REP);
        }
    }

    #[test]
    fn domain_param_is_constant_across_a_jump() {
        let f = map("fracture", &[("d", 0.4), ("a", 0.3)]);
        let g = Grid::Straight(StraightGrid::new(vec![], vec![0.05]).unwrap());
        let rep = build_geom_rep(&f, &g).unwrap();
        let arc = &rep.arcs[0];
        let j = arc.jumps[0];
        // find the curve vertices of the filled segment
        let idx: Vec<usize> = (0..arc.t.len())
            .filter(|&i| (arc.t[i] - j.t).abs() < 1e-12)
            .collect();
        assert_eq!(idx.len(), 2);
        let mid_s = (arc.s[idx[0]] + arc.s[idx[1]]) / 2.0;
        assert!((arc.domain_param_at(mid_s) - j.t).abs() < 1e-12);
    }

    #[test]
    fn dump_lists_arcs_and_jumps() {
        let f = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let g = Grid::Straight(StraightGrid::new(vec![], vec![0.0]).unwrap());
        let rep = build_geom_rep(&f, &g).unwrap();
        let dump = rep.dump();
        assert!(dump.starts_with("ARC 0"));
        let jump_line = dump
            .lines()
            .find(|l| l.starts_with("JUMP 0 "))
            .expect("jump table entry");
        let vals: Vec<f64> = jump_line
            .split_whitespace()
            .skip(2)
            .map(|v| v.parse().unwrap())
            .collect();
        let expect = [0.5, -0.1, 0.0, 0.1, 0.0];
        for (got, want) in vals.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{jump_line}");
        }
    }

    #[test]
    fn inadmissible_grid_is_rejected() {
        let f = map("fracture", &[("d", 0.2), ("a", 0.5)]);
        let g = Grid::Straight(StraightGrid::new(vec![0.0], vec![]).unwrap());
        assert!(matches!(
            build_geom_rep(&f, &g),
            Err(Error::NotAdmissible(_)) | Err(Error::GridOnJumpSet(_))
        ));
    }
}
