//! Full pipeline runs over a decreasing scale list, with L¹ and variation
//! convergence metrics measured against the closed-form oracles.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::geom::{pa_directional_variation, pa_total_variation, PaHomeo, Point2};
use crate::mapcat::{measure_query, MeasureKind, Rect, TestMap};
use crate::{Error, Result};

use super::assemble::{assemble_homeo, AssembledMap};
use super::classify::{classify_dyadic_in, full_square, square_rect};
use super::perturb::{perturb_vertices, PerturbedMesh};
use super::skeleton::build_boundary_map;
use super::{Category, PipelineParams, SquareClassification};

/// One row of the convergence report.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub eps: f64,
    pub k: u32,
    /// ‖g − f‖ in L¹.
    pub l1: f64,
    /// ‖(Dg)·χ_Ω − D^a f‖ in L¹, with Ω the complement of the singular
    /// region (the E-quads).
    pub ac_gap: f64,
    /// |Dg|(E-region) divided by its budget `(1+Cε)|D^s f|(Q) + Cε`.
    pub sing_ratio: f64,
    /// Gap between the coordinate-direction variation sums of g and f.
    pub mstrict_gap: f64,
    /// Gap between the total variations of g and f.
    pub strict_gap: f64,
    pub cert: bool,
}

/// Per-map convergence report (one row per scale).
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub map: String,
    pub rows: Vec<ReportRow>,
}

/// The assembled maps and intermediate stages of a run, kept for rendering.
pub struct RunArtifacts {
    pub classifications: Vec<SquareClassification>,
    pub meshes: Vec<PerturbedMesh>,
    pub assembled: Vec<AssembledMap>,
}

/// Serialises a convergence report as CSV with a fixed 8-column layout.
pub fn convergence_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from("eps,K,L1,ac_gap,sing_ratio,mstrict_gap,strict_gap,cert\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{:.6},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}\n",
            r.eps,
            r.k,
            r.l1,
            r.ac_gap,
            r.sing_ratio,
            r.mstrict_gap,
            r.strict_gap,
            if r.cert { "pass" } else { "fail" }
        ));
    }
    out
}

/// Bucketed point-location and evaluation for a large piecewise-affine map.
pub(super) struct Locator {
    cells: HashMap<(i64, i64), Vec<usize>>,
    m: usize,
}

impl Locator {
    pub(super) fn new(g: &PaHomeo) -> Locator {
        let m = ((g.domain.triangles.len() as f64).sqrt() as usize).clamp(8, 512);
        let cell = 2.0 / m as f64;
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (t, tri) in g.domain.triangles.iter().enumerate() {
            let ps = [
                g.domain.vertices[tri[0]],
                g.domain.vertices[tri[1]],
                g.domain.vertices[tri[2]],
            ];
            let (x0, x1) = (
                ps.iter().map(|p| p.x).fold(f64::INFINITY, f64::min),
                ps.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max),
            );
            let (y0, y1) = (
                ps.iter().map(|p| p.y).fold(f64::INFINITY, f64::min),
                ps.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max),
            );
            let (cx0, cx1) = (
                ((x0 + 1.0) / cell).floor() as i64,
                ((x1 + 1.0) / cell).floor() as i64,
            );
            let (cy0, cy1) = (
                ((y0 + 1.0) / cell).floor() as i64,
                ((y1 + 1.0) / cell).floor() as i64,
            );
            for cx in cx0..=cx1 {
                for cy in cy0..=cy1 {
                    cells.entry((cx, cy)).or_default().push(t);
                }
            }
        }
        Locator { cells, m }
    }

    pub(super) fn locate(&self, g: &PaHomeo, p: Point2) -> Option<usize> {
        let cell = 2.0 / self.m as f64;
        let key = (
            ((p.x + 1.0) / cell).floor() as i64,
            ((p.y + 1.0) / cell).floor() as i64,
        );
        self.cells
            .get(&key)?
            .iter()
            .copied()
            .find(|&t| g.domain.triangle_contains(t, p))
    }

    pub(super) fn eval(&self, g: &PaHomeo, p: Point2) -> Option<Point2> {
        let t = self.locate(g, p)?;
        let tri = g.domain.triangles[t];
        let [a, b, c] = g.domain.triangle_points(t);
        let det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        let l1 = ((b.x - p.x) * (c.y - p.y) - (c.x - p.x) * (b.y - p.y)) / det;
        let l2 = ((c.x - p.x) * (a.y - p.y) - (a.x - p.x) * (c.y - p.y)) / det;
        let l3 = 1.0 - l1 - l2;
        let (ia, ib, ic) = (g.image[tri[0]], g.image[tri[1]], g.image[tri[2]]);
        Some(Point2::new(
            l1 * ia.x + l2 * ib.x + l3 * ic.x,
            l1 * ia.y + l2 * ib.y + l3 * ic.y,
        ))
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// computed by Newton iteration on the Legendre recurrence.
pub(super) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Splits a cell at interior axis-parallel jump lines so the integrand is
/// smooth on each piece.
fn split_at_jumps(f: &TestMap, r: Rect) -> Vec<Rect> {
    let mut pieces = vec![r];
    for arc in &f.jumps {
        let (a, b) = (arc.seg.a, arc.seg.b);
        let vertical = (a.x - b.x).abs() < 1e-14;
        let horizontal = (a.y - b.y).abs() < 1e-14;
        let mut next = Vec::new();
        for p in pieces {
            if vertical && p.x0 < a.x && a.x < p.x1 && a.y.min(b.y) < p.y1 && a.y.max(b.y) > p.y0 {
                next.push(Rect { x1: a.x, ..p });
                next.push(Rect { x0: a.x, ..p });
            } else if horizontal
                && p.y0 < a.y
                && a.y < p.y1
                && a.x.min(b.x) < p.x1
                && a.x.max(b.x) > p.x0
            {
                next.push(Rect { y1: a.y, ..p });
                next.push(Rect { y0: a.y, ..p });
            } else {
                next.push(p);
            }
        }
        pieces = next;
    }
    pieces
}

/// Tensor-product Gauss–Legendre integral of `integrand` over the dyadic
/// cells at level `k`, with jump-adjacent cells split at the jump line.
fn integrate(
    f: &TestMap,
    k: u32,
    nodes: &[(f64, f64)],
    integrand: &(dyn Fn(Point2) -> f64 + Sync),
) -> f64 {
    let n = 1usize << k;
    (0..n * n)
        .into_par_iter()
        .map(|q| {
            let r = square_rect(k, q % n, q / n);
            let mut total = 0.0;
            for piece in split_at_jumps(f, r) {
                let (hx, hy) = ((piece.x1 - piece.x0) / 2.0, (piece.y1 - piece.y0) / 2.0);
                let (cx, cy) = ((piece.x1 + piece.x0) / 2.0, (piece.y1 + piece.y0) / 2.0);
                for &(xi, wi) in nodes {
                    for &(yj, wj) in nodes {
                        let p = Point2::new(cx + hx * xi, cy + hy * yj);
                        total += wi * wj * hx * hy * integrand(p);
                    }
                }
            }
            total
        })
        .sum()
}

/// Runs the full pipeline for each scale in the strictly decreasing list and
/// measures the convergence metrics against the measure oracle.
pub fn run_sequence(
    f: &TestMap,
    eps_list: &[f64],
    params: &PipelineParams,
) -> Result<(ConvergenceReport, RunArtifacts)> {
    if eps_list.is_empty() {
        return Err(Error::Precondition("empty scale list".to_string()));
    }
    for w in eps_list.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::Precondition(
                "scale list must be strictly decreasing".to_string(),
            ));
        }
    }
    let q = full_square();
    let nodes = gauss_legendre(32);
    let mut rows = Vec::new();
    let mut artifacts = RunArtifacts {
        classifications: Vec::new(),
        meshes: Vec::new(),
        assembled: Vec::new(),
    };
    for &eps in eps_list {
        let alpha = (eps / 4.0).min(0.05);
        let cls = classify_dyadic_in(f, eps, alpha, params.k_min, params.k_max)?;
        let mesh = perturb_vertices(f, &cls, params)?;
        let skel = build_boundary_map(f, &cls, &mesh, eps, params)?;
        let asm = assemble_homeo(f, &cls, &mesh, &skel, eps)?;
        let g = &asm.g;
        let loc = Locator::new(g);

        let l1 = integrate(f, cls.k, &nodes, &|p| match (loc.eval(g, p), f.eval(p)) {
            (Some(gp), Some(fp)) => gp.dist(fp),
            _ => 0.0,
        });


        let cat_of = |t: usize| cls.squares[asm.tri_quad[t]].category;
        let ac_gap = integrate(f, cls.k, &nodes, &|p| {
            let dg = loc
                .locate(g, p)
                .filter(|&t| cat_of(t) != Category::E)
                .map(|t| *g.derivative(t))
                .unwrap_or_else(nalgebra::Matrix2::zeros);
            let df = f.grad(p).unwrap_or_else(nalgebra::Matrix2::zeros);
            (dg - df).norm()
        });

        let e_region: Vec<usize> = (0..g.domain.triangles.len())
            .filter(|&t| cat_of(t) == Category::E)
            .collect();
        let dg_e = pa_total_variation(g, &e_region)?;
        let sing = measure_query(f, &q, MeasureKind::Sing)?;
        let sing_bound = (1.0 + params.c * eps) * sing + params.c * eps;
        let sing_ratio = dg_e / sing_bound;

        let all: Vec<usize> = (0..g.domain.triangles.len()).collect();
        let tv_g = pa_total_variation(g, &all)?;
        let tv_f = measure_query(f, &q, MeasureKind::Total)?;
        let strict_gap = (tv_g - tv_f).abs();
        let m_g = pa_directional_variation(g, (1.0, 0.0), &all)?
            + pa_directional_variation(g, (0.0, 1.0), &all)?;
        let m_f = measure_query(f, &q, MeasureKind::Directional(1.0, 0.0))?
            + measure_query(f, &q, MeasureKind::Directional(0.0, 1.0))?;
        let mstrict_gap = (m_g - m_f).abs();

        rows.push(ReportRow {
            eps,
            k: cls.k,
            l1,
            ac_gap,
            sing_ratio,
            mstrict_gap,
            strict_gap,
            cert: true,
        });
        artifacts.classifications.push(cls);
        artifacts.meshes.push(mesh);
        artifacts.assembled.push(asm);

        // the coordinate-direction sum never exceeds √2 times the total
        let row = rows.last().unwrap();
        if m_g > 2f64.sqrt() * tv_g + 1e-9 {
            return Err(Error::Pipeline(format!(
                "direction-sum variation {m_g:.6e} exceeds √2 × total {tv_g:.6e} at scale {}",
                row.eps
            )));
        }
    }
    Ok((
        ConvergenceReport {
            map: f.name.clone(),
            rows,
        },
        artifacts,
    ))
}
