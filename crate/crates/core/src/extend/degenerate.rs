//! Extension of boundary maps that are close to the rank-one map
//! `(x, y) -> (d*x, 0)`: vertical fibers are ruled straight across the thin
//! image, so the output's derivative stays near `diag(d, 0)` in `L^1`.

use super::boundary::BoundaryData;
use super::componentwise::{ruled_extension, Route};
use super::hp::{extend_by_embedding, MAX_REFINEMENT_ROUNDS};
use crate::geom::{certify_homeomorphism, PaHomeo, Vec2};
use crate::{Error, Result};
use nalgebra::Matrix2;

/// Measured `L^1` distance of the output derivative from `diag(d, 0)`,
/// against the `delta * r0^2` yardstick.
#[derive(Debug, Clone)]
pub struct DegenerateReport {
    pub l1_deviation: f64,
    /// `delta * r0^2`.
    pub budget: f64,
    /// `l1_deviation / budget`.
    pub ratio: f64,
    pub triangles: usize,
    pub rounds: usize,
}

/// Extends a boundary map whose tangential derivative is `delta`-close to
/// the rank-one map `diag(d, 0)` on a domain comparable to `[0, r0]^2`,
/// and reports the realized `L^1` deviation of the derivative.
///
/// Preconditions (checked):
/// - the boundary integral of `|D_tau phi - diag(d, 0) tau|` is below
///   `delta * r0`;
/// - the tangential derivative never exceeds `d + 2 delta` in norm;
/// - the domain diameter is at most `4 r0` (comparability with the square).
pub fn extend_degenerate(
    bd: &BoundaryData,
    d: f64,
    delta: f64,
    r0: f64,
) -> Result<(PaHomeo, DegenerateReport)> {
    if !(d > 0.0) || !(delta > 0.0) || !(r0 > 0.0) {
        return Err(Error::Precondition(format!(
            "parameters must be positive: d = {d}, delta = {delta}, r0 = {r0}"
        )));
    }
    let target = Matrix2::new(d, 0.0, 0.0, 0.0);
    let tangent_l1 = bd.tangent_deviation_integral(&target);
    if tangent_l1 >= delta * r0 {
        return Err(Error::Precondition(format!(
            "boundary deviation integral {tangent_l1:.6e} is not below \
             delta * r0 = {:.6e}",
            delta * r0
        )));
    }
    let sup = bd.sup_tangent_norm();
    if sup > (d + 2.0 * delta) * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "sup tangential derivative {sup:.6e} exceeds d + 2 delta = {:.6e}",
            d + 2.0 * delta
        )));
    }
    if bd.diameter() > 4.0 * r0 {
        return Err(Error::Precondition(format!(
            "domain diameter {:.6e} is not comparable to r0 = {r0:.6e}",
            bd.diameter()
        )));
    }

    let (g, rounds) = build(bd)?;
    let mut l1 = 0.0;
    for t in 0..g.domain.triangles.len() {
        l1 += g.domain.triangle_area(t) * (g.derivative(t) - target).norm();
    }
    let budget = delta * r0 * r0;
    let report = DegenerateReport {
        l1_deviation: l1,
        budget,
        ratio: l1 / budget,
        triangles: g.domain.triangles.len(),
        rounds,
    };
    Ok((g, report))
}

/// Straight ruling of vertical fibers, refined on certification failure;
/// the convex-combination embedding is the backstop when ruling cannot be
/// certified (the result is still a valid extension, only its deviation is
/// whatever the report measures).
fn build(bd: &BoundaryData) -> Result<(PaHomeo, usize)> {
    let v = Vec2::new(0.0, 1.0);
    let mut last = String::new();
    for round in 0..=MAX_REFINEMENT_ROUNDS {
        match ruled_extension(bd, v, round, Route::Straight) {
            Ok(g) => {
                let cert = certify_homeomorphism(&g);
                if cert.is_pass() {
                    return Ok((g, round));
                }
                last = format!("{cert:?}");
            }
            Err(e) => last = e.to_string(),
        }
    }
    extend_by_embedding(bd, MAX_REFINEMENT_ROUNDS).map_err(|e| {
        Error::Extension(format!(
            "ruled construction failed ({last}); embedding backstop failed: {e}"
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extend::boundary::square_loop;
    use crate::geom::Point2;

    /// Boundary of `[-r0/2, r0/2]^2` under `diag(d, dy)`.
    fn sheared_square(r0: f64, d: f64, dy: f64, per_side: usize) -> BoundaryData {
        let dom = square_loop(r0 / 2.0, per_side);
        let img: Vec<Point2> = dom
            .iter()
            .map(|p| Point2::new(d * p.x, dy * p.y))
            .collect();
        BoundaryData::new(dom, img).unwrap()
    }

    #[test]
    fn near_degenerate_affine_stays_within_budget() {
        let (d, delta, r0) = (0.7, 0.3, 2.0);
        // Vertical stretch delta/3: boundary deviation (delta/3) * 2 r0
        //   = (2/3) delta r0, inside the precondition.
        let bd = sheared_square(r0, d, delta / 3.0, 1);
        let (g, rep) = extend_degenerate(&bd, d, delta, r0).unwrap();
        assert!(certify_homeomorphism(&g).is_pass());
        // The ruling reproduces the affine map, so the deviation is exactly
        // (delta/3) * r0^2 and the ratio 1/3.
        assert!((rep.l1_deviation - delta / 3.0 * r0 * r0).abs() < 1e-9);
        assert!((rep.ratio - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn vanishing_perturbation_gives_vanishing_deviation() {
        let (d, r0) = (0.7, 1.0);
        let delta = 3e-9;
        let bd = sheared_square(r0, d, 1e-9, 2);
        let (_, rep) = extend_degenerate(&bd, d, delta, r0).unwrap();
        assert!(
            rep.l1_deviation < 1e-6 * r0 * r0,
            "deviation = {}",
            rep.l1_deviation
        );
    }

    #[test]
    fn oversized_tangent_norm_is_rejected() {
        let (d, delta, r0) = (0.7, 0.05, 1.0);
        // Horizontal stretch d + 3 delta: violates both the integral and
        // the sup-norm precondition.
        let dom = square_loop(r0 / 2.0, 0);
        let img: Vec<Point2> = dom
            .iter()
            .map(|p| Point2::new((d + 3.0 * delta) * p.x, delta / 3.0 * p.y))
            .collect();
        let bd = BoundaryData::new(dom, img).unwrap();
        assert!(matches!(
            extend_degenerate(&bd, d, delta, r0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn non_affine_jitter_keeps_bounded_ratio() {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &delta in &[0.1f64, 0.05, 0.01] {
            let (d, r0) = (0.8, 1.0);
            let dom = square_loop(r0 / 2.0, 3);
            // Vertical jitter well inside the delta budget: the total
            // boundary deviation stays under delta * r0 / 2.
            let amp = delta * r0 / 256.0;
            let img: Vec<Point2> = dom
                .iter()
                .map(|p| {
                    Point2::new(
                        d * p.x,
                        delta / 8.0 * p.y + amp * rng.gen_range(-1.0..1.0),
                    )
                })
                .collect();
            let bd = BoundaryData::new(dom, img).unwrap();
            let (g, rep) = extend_degenerate(&bd, d, delta, r0).unwrap();
            assert!(certify_homeomorphism(&g).is_pass());
            assert!(rep.ratio < 64.0, "delta = {delta}: ratio = {}", rep.ratio);
        }
    }
}
