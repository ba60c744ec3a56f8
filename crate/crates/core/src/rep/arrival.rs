//! Arrival grids: straight grids in the image plane whose lines the filled
//! image curves cross finitely often, transversally, and away from grid
//! crossings and a caller-supplied avoid set.

use super::geomrep::GeomRep;
use crate::geom::Point2;
use crate::{Error, Result};
use rand::Rng;

/// A straight grid in the image plane: vertical lines at `w`, horizontal
/// lines at `z`, consecutive gaps strictly below `kappa`.
#[derive(Debug, Clone)]
pub struct ArrivalGrid {
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub kappa: f64,
}

impl ArrivalGrid {
    pub fn max_gap(&self) -> f64 {
        let gap = |v: &[f64]| {
            v.windows(2)
                .map(|p| p[1] - p[0])
                .fold(0.0f64, f64::max)
        };
        gap(&self.w).max(gap(&self.z))
    }

    /// The closed cell of the grid containing `p`, as coordinate bounds.
    /// Points outside the line span are clamped to the outer cells.
    pub fn cell_bounds(&self, p: Point2) -> (f64, f64, f64, f64) {
        let pick = |v: &[f64], c: f64| {
            let i = v.partition_point(|&x| x < c);
            let lo = if i == 0 { f64::NEG_INFINITY } else { v[i - 1] };
            let hi = if i == v.len() { f64::INFINITY } else { v[i] };
            (lo, hi)
        };
        let (x0, x1) = pick(&self.w, p.x);
        let (y0, y1) = pick(&self.z, p.y);
        (x0, y0, x1, y1)
    }
}

/// A transversal crossing of a filled image curve with an arrival-grid line.
#[derive(Debug, Clone, Copy)]
pub struct ArrivalHit {
    pub arc: usize,
    /// Arc-length parameter along the filled image curve.
    pub s: f64,
    /// Domain point of the underlying grid arc.
    pub dom: Point2,
    /// Image point; lies exactly on the grid line.
    pub img: Point2,
    /// True for a hit on a vertical line x = w, false for y = z.
    pub vertical: bool,
    pub line: usize,
}

/// Chooses an arrival grid for the filled curves of `rep` by rejection
/// sampling jittered line positions. A draw is rejected if any curve runs
/// along a line, meets a line at a curve vertex or grid crossing, crosses it
/// non-transversally, or produces a hit whose domain point lies near a grid
/// crossing of the domain grid or near a point of `avoid`.
pub fn choose_arrival_grid(
    rep: &GeomRep,
    kappa: f64,
    avoid: &[Point2],
    rng: &mut impl Rng,
) -> Result<(ArrivalGrid, Vec<ArrivalHit>)> {
    if !(kappa > 0.0) {
        return Err(Error::Precondition(format!("kappa = {kappa} must be > 0")));
    }
    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for arc in &rep.arcs {
        for v in &arc.curve.vertices {
            lo_x = lo_x.min(v.x);
            hi_x = hi_x.max(v.x);
            lo_y = lo_y.min(v.y);
            hi_y = hi_y.max(v.y);
        }
    }
    let mut witness = String::new();
    for _ in 0..64 {
        let spacing = kappa * rng.gen_range(0.85..0.95);
        let jitter = rng.gen_range(0.0..spacing);
        let lines = |lo: f64, hi: f64| -> Vec<f64> {
            let mut v = Vec::new();
            let mut c = lo - jitter - spacing / 2.0;
            while c < hi + spacing {
                v.push(c);
                c += spacing;
            }
            v
        };
        let grid = ArrivalGrid {
            w: lines(lo_x, hi_x),
            z: lines(lo_y, hi_y),
            kappa,
        };
        match collect_hits(rep, &grid, avoid) {
            Ok(mut hits) => {
                hits.sort_by(|a, b| (a.arc, a.s).partial_cmp(&(b.arc, b.s)).unwrap());
                return Ok((grid, hits));
            }
            Err(w) => witness = w,
        }
    }
    Err(Error::SamplingBudget(format!(
        "no valid arrival grid found: last rejection: {witness}"
    )))
}

/// All line crossings, or the rejection reason.
fn collect_hits(
    rep: &GeomRep,
    grid: &ArrivalGrid,
    avoid: &[Point2],
) -> std::result::Result<Vec<ArrivalHit>, String> {
    let tol = 1e-11;
    let mut hits = Vec::new();
    for (ai, arc) in rep.arcs.iter().enumerate() {
        let dom_curve = &rep.grid.curves[ai];
        let dom_len = dom_curve.length();
        for k in 0..arc.curve.vertices.len() - 1 {
            let (a, b) = (arc.curve.vertices[k], arc.curve.vertices[k + 1]);
            for (vertical, lines) in [(true, &grid.w), (false, &grid.z)] {
                let (ca, cb) = if vertical { (a.x, b.x) } else { (a.y, b.y) };
                let (lo, hi) = (ca.min(cb), ca.max(cb));
                let i0 = lines.partition_point(|&c| c < lo - tol);
                for (li, &c) in lines.iter().enumerate().skip(i0) {
                    if c > hi + tol {
                        break;
                    }
                    if (ca - c).abs() <= tol || (cb - c).abs() <= tol {
                        if (ca - c).abs() <= tol && (cb - c).abs() <= tol {
                            return Err(format!(
                                "arc {ai} runs along {} line at {c}",
                                axis_name(vertical)
                            ));
                        }
                        return Err(format!(
                            "arc {ai} has a vertex on the {} line at {c}",
                            axis_name(vertical)
                        ));
                    }
                    if !((ca < c) != (cb < c)) {
                        continue;
                    }
                    let frac = (c - ca) / (cb - ca);
                    if (cb - ca).abs() / a.dist(b) < 1e-6 {
                        return Err(format!(
                            "arc {ai} crosses the {} line at {c} non-transversally",
                            axis_name(vertical)
                        ));
                    }
                    let mut img = a.lerp(b, frac);
                    if vertical {
                        img.x = c;
                    } else {
                        img.y = c;
                    }
                    // reject an image point at an arrival-grid crossing
                    let other = if vertical { &grid.z } else { &grid.w };
                    let oc = if vertical { img.y } else { img.x };
                    let j = other.partition_point(|&x| x < oc);
                    let near = |idx: usize| idx < other.len() && (other[idx] - oc).abs() < 1e-9;
                    if near(j) || (j > 0 && near(j - 1)) {
                        return Err(format!(
                            "hit of arc {ai} lands on an arrival-grid crossing near \
                             ({}, {})",
                            img.x, img.y
                        ));
                    }
                    let s = arc.s[k] + frac * (arc.s[k + 1] - arc.s[k]);
                    let t = arc.domain_param_at(s);
                    let dom = dom_curve.point_at_arclen(t * dom_len);
                    for (&(ci, cj), &cp) in &rep.grid.crossings {
                        if (ci == ai || cj == ai) && dom.dist(cp) < 1e-9 {
                            return Err(format!(
                                "hit of arc {ai} has its domain point at grid \
                                 crossing ({}, {})",
                                cp.x, cp.y
                            ));
                        }
                    }
                    for p in avoid {
                        if dom.dist(*p) < 1e-9 {
                            return Err(format!(
                                "hit of arc {ai} has its domain point in the avoid \
                                 set at ({}, {})",
                                p.x, p.y
                            ));
                        }
                    }
                    hits.push(ArrivalHit {
                        arc: ai,
                        s,
                        dom,
                        img,
                        vertical,
                        line: li,
                    });
                }
            }
        }
    }
    Ok(hits)
}

fn axis_name(vertical: bool) -> &'static str {
    if vertical {
        "vertical"
    } else {
        "horizontal"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, StraightGrid};
    use crate::mapcat::make_catalogue_map;
    use crate::rep::build_geom_rep;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn identity_rep() -> GeomRep {
        let f = make_catalogue_map("identity", &BTreeMap::new()).unwrap();
        let g = Grid::Straight(StraightGrid::new(vec![0.0], vec![0.0]).unwrap());
        build_geom_rep(&f, &g).unwrap()
    }

    #[test]
    fn gaps_stay_below_kappa_and_lines_cover_the_image() {
        let rep = identity_rep();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (grid, hits) = choose_arrival_grid(&rep, 0.25, &[], &mut rng).unwrap();
        assert!(grid.max_gap() < 0.25);
        assert!(grid.w.len() >= 9 && grid.w.len() <= 14, "{}", grid.w.len());
        assert!(*grid.w.first().unwrap() < -1.0 && *grid.w.last().unwrap() > 1.0);
        assert!(!hits.is_empty());
    }

    #[test]
    fn hits_lie_on_lines_and_avoid_the_domain_crossing() {
        let rep = identity_rep();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (grid, hits) = choose_arrival_grid(&rep, 0.2, &[], &mut rng).unwrap();
        for h in &hits {
            if h.vertical {
                assert_eq!(h.img.x, grid.w[h.line]);
            } else {
                assert_eq!(h.img.y, grid.z[h.line]);
            }
            assert!(h.dom.dist(Point2::new(0.0, 0.0)) > 1e-9);
            // for the identity the domain and image points coincide
            assert!(h.dom.dist(h.img) < 1e-12);
        }
        // hits are sorted per arc by parameter
        for w in hits.windows(2) {
            if w[0].arc == w[1].arc {
                assert!(w[0].s < w[1].s);
            }
        }
    }

    #[test]
    fn avoid_set_excludes_previous_hit_points() {
        let rep = identity_rep();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (_, hits) = choose_arrival_grid(&rep, 0.3, &[], &mut rng).unwrap();
        let avoid = vec![hits[0].dom];
        let mut rng2 = ChaCha8Rng::seed_from_u64(8);
        let (_, hits2) = choose_arrival_grid(&rep, 0.3, &avoid, &mut rng2).unwrap();
        for h in &hits2 {
            assert!(h.dom.dist(avoid[0]) >= 1e-9);
        }
    }

    #[test]
    fn fracture_jump_segment_produces_hits() {
        let f = {
            let mut p = BTreeMap::new();
            p.insert("d".to_string(), 0.8);
            p.insert("a".to_string(), 0.5);
            make_catalogue_map("fracture", &p).unwrap()
        };
        let g = Grid::Straight(StraightGrid::new(vec![], vec![0.0]).unwrap());
        let rep = build_geom_rep(&f, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (_, hits) = choose_arrival_grid(&rep, 0.2, &[], &mut rng).unwrap();
        // some hit must land strictly inside the filled jump segment, whose
        // endpoints here are (-0.4, 0) and (0.4, 0), all at domain x = 0
        assert!(hits.iter().any(|h| h.dom.dist(Point2::new(0.0, 0.0)) < 1e-9
            && h.img.x.abs() < 0.4));
    }
}
