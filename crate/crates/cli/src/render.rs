//! Artifact emission: the convergence CSV, per-scale SVG images of the
//! output mesh coloured by derivative magnitude, and a run manifest.

use crate::config::RunConfig;
use pabv_core::geom::{signed_area, Point2};
use pabv_core::pipeline::{
    convergence_csv, AssembledMap, Category, ConvergenceReport, RunArtifacts,
    SquareClassification,
};
use std::fmt::Write as _;
use std::io;
use std::path::PathBuf;

/// Frobenius norm of the derivative on triangle `t`.
fn frob(a: &AssembledMap, t: usize) -> f64 {
    a.g.derivative(t).iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Blue → pale yellow → red by quantile.
fn colour(q: f64) -> String {
    let lerp = |a: f64, b: f64, s: f64| a + (b - a) * s;
    let (r, g, b) = if q < 0.5 {
        let s = q / 0.5;
        (lerp(44.0, 255.0, s), lerp(123.0, 255.0, s), lerp(182.0, 191.0, s))
    } else {
        let s = (q - 0.5) / 0.5;
        (lerp(255.0, 215.0, s), lerp(255.0, 25.0, s), lerp(191.0, 28.0, s))
    };
    format!("rgb({},{},{})", r.round() as u8, g.round() as u8, b.round() as u8)
}

/// Renders the image mesh as SVG, colouring each triangle by the quantile
/// of its derivative magnitude among all triangles.
pub fn mesh_svg(a: &AssembledMap) -> String {
    let nt = a.g.domain.triangles.len();
    let mut order: Vec<usize> = (0..nt).collect();
    order.sort_by(|&i, &j| frob(a, i).total_cmp(&frob(a, j)));
    let mut quantile = vec![0.0; nt];
    let denom = (nt.max(2) - 1) as f64;
    for (rank, &t) in order.iter().enumerate() {
        quantile[t] = rank as f64 / denom;
    }
    // Equal values share the lowest rank so identical derivatives get
    // identical colours.
    for w in order.windows(2) {
        if frob(a, w[0]) == frob(a, w[1]) {
            quantile[w[1]] = quantile[w[0]];
        }
    }
    let mut s = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-1.05 -1.05 2.1 2.1\" \
         width=\"640\" height=\"640\">\n<g transform=\"scale(1,-1)\" \
         stroke=\"black\" stroke-width=\"0.002\" stroke-linejoin=\"round\">\n",
    );
    for t in 0..nt {
        let [p, q, r] = a.g.image_triangle(t);
        writeln!(
            s,
            "<polygon points=\"{:.6},{:.6} {:.6},{:.6} {:.6},{:.6}\" fill=\"{}\"/>",
            p.x,
            p.y,
            q.x,
            q.y,
            r.x,
            r.y,
            colour(quantile[t])
        )
        .unwrap();
    }
    s.push_str("</g>\n</svg>\n");
    s
}

/// Plain-text manifest: map, scales, seed, constants and thresholds, and a
/// per-row summary. Deterministic for a fixed config and seed.
pub fn manifest(report: &ConvergenceReport, cfg: &RunConfig) -> String {
    let mut s = String::new();
    writeln!(s, "map = {}", cfg.kind).unwrap();
    for (k, v) in &cfg.params {
        writeln!(s, "param {k} = {v}").unwrap();
    }
    let eps: Vec<String> = cfg.eps.iter().map(|e| e.to_string()).collect();
    writeln!(s, "eps = {}", eps.join(", ")).unwrap();
    writeln!(s, "seed = {}", cfg.seed).unwrap();
    writeln!(
        s,
        "c = {}\nbeta = {}\nblend = {}\nbudget = {}\nk_min = {}\nk_max = {}",
        cfg.c, cfg.beta, cfg.blend, cfg.budget, cfg.k_min, cfg.k_max
    )
    .unwrap();
    writeln!(
        s,
        "xi = {}\ntau_geom = {}\ntau_cont = {}\ntau_density = {}",
        cfg.xi, cfg.tau_geom, cfg.tau_cont, cfg.tau_density
    )
    .unwrap();
    for r in &report.rows {
        writeln!(
            s,
            "row eps={:.6} K={} cert={}",
            r.eps,
            r.k,
            if r.cert { "pass" } else { "fail" }
        )
        .unwrap();
    }
    s
}

/// Writes CSV, SVGs and manifest per the emission toggles; returns the
/// paths written.
pub fn render_outputs(
    report: &ConvergenceReport,
    artifacts: &RunArtifacts,
    cfg: &RunConfig,
) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut written = Vec::new();
    if cfg.emit_csv {
        let p = cfg.out_dir.join("report.csv");
        std::fs::write(&p, convergence_csv(report))?;
        written.push(p);
    }
    if cfg.emit_svg {
        for (i, a) in artifacts.assembled.iter().enumerate() {
            let p = cfg.out_dir.join(format!("mesh_{i:03}.svg"));
            std::fs::write(&p, mesh_svg(a))?;
            written.push(p);
        }
    }
    if cfg.emit_manifest {
        let p = cfg.out_dir.join("manifest.txt");
        std::fs::write(&p, manifest(report, cfg))?;
        written.push(p);
    }
    Ok(written)
}

fn point_in_triangle(p: Point2, tri: &[Point2; 3]) -> bool {
    let sgn = |a: Point2, b: Point2| signed_area(&[a, b, p]);
    let (d0, d1, d2) = (sgn(tri[0], tri[1]), sgn(tri[1], tri[2]), sgn(tri[2], tri[0]));
    let has_neg = d0 < 0.0 || d1 < 0.0 || d2 < 0.0;
    let has_pos = d0 > 0.0 || d1 > 0.0 || d2 > 0.0;
    !(has_neg && has_pos)
}

/// Whether any triangle outside the singular-cover squares covers `p` in
/// the image. Used to verify that a rendered crack is genuinely open: the
/// gap must be covered only by the stretched singular-cover triangles.
pub fn covered_outside_singular(
    a: &AssembledMap,
    cls: &SquareClassification,
    p: Point2,
) -> bool {
    for (t, &q) in a.tri_quad.iter().enumerate() {
        if cls.squares[q].category == Category::E {
            continue;
        }
        if point_in_triangle(p, &a.g.image_triangle(t)) {
            return true;
        }
    }
    false
}
