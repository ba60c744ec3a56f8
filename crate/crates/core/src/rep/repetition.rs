//! Deviation bound for a near-straight detour: a constant-speed path whose
//! endpoints almost match a segment's and whose length barely exceeds the
//! segment's stays uniformly close to the segment.

use crate::geom::{Point2, Polyline};
use crate::{Error, Result};

/// Outcome of the deviation check.
#[derive(Debug, Clone, Copy)]
pub struct RepetitionCheck {
    /// max over t of |eta(t) - gamma(t)| at matched constant-speed parameters.
    pub deviation: f64,
    /// sqrt(3 eps + 12 delta) * L.
    pub bound: f64,
}

impl RepetitionCheck {
    pub fn ok(&self) -> bool {
        self.deviation <= self.bound + 1e-12
    }
}

/// Compares the constant-speed parametrization of `eta` (running from C to D)
/// with the segment from X to Y. Preconditions: |C-X| <= delta L,
/// |D-Y| <= delta L and len(eta) <= (1+eps) L where L = |X-Y|.
pub fn repetition_bound(
    x: Point2,
    y: Point2,
    eta: &Polyline,
    eps: f64,
    delta: f64,
) -> Result<RepetitionCheck> {
    let l = x.dist(y);
    if l <= 0.0 {
        return Err(Error::DegenerateSegment(x.x, x.y));
    }
    if !(eps >= 0.0 && delta >= 0.0) {
        return Err(Error::Precondition("eps and delta must be >= 0".into()));
    }
    let c = eta.vertices[0];
    let d = *eta.vertices.last().unwrap();
    let slack = 1e-12 * l.max(1.0);
    if c.dist(x) > delta * l + slack {
        return Err(Error::Precondition(format!(
            "|C-X| = {} exceeds delta*L = {}",
            c.dist(x),
            delta * l
        )));
    }
    if d.dist(y) > delta * l + slack {
        return Err(Error::Precondition(format!(
            "|D-Y| = {} exceeds delta*L = {}",
            d.dist(y),
            delta * l
        )));
    }
    let len = eta.length();
    if len > (1.0 + eps) * l + slack {
        return Err(Error::Precondition(format!(
            "len(eta) = {len} exceeds (1+eps)*L = {}",
            (1.0 + eps) * l
        )));
    }
    let n = 1024;
    let mut deviation: f64 = 0.0;
    for k in 0..=n {
        let t = k as f64 / n as f64;
        let p = eta.point_at_arclen(t * len);
        let q = x.lerp(y, t);
        deviation = deviation.max(p.dist(q));
    }
    // both curves are piecewise linear in t between the sample knots, so the
    // sampled maximum is within one knot spacing of the true one; refine near
    // the interior vertices of eta to remove that slack
    for (i, v) in eta.vertices.iter().enumerate().skip(1) {
        if i + 1 == eta.vertices.len() {
            break;
        }
        let s: f64 = eta.vertices[..=i].windows(2).map(|w| w[0].dist(w[1])).sum();
        let t = s / len;
        deviation = deviation.max(v.dist(x.lerp(y, t)));
    }
    let bound = (3.0 * eps + 12.0 * delta).sqrt() * l;
    Ok(RepetitionCheck { deviation, bound })
}
