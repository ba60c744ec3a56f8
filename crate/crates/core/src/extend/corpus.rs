//! Random boundary-data corpus for benchmarking the harmonic-style
//! extension: star-shaped injective PL images over the unit-square loop.

use crate::extend::boundary::{square_loop, BoundaryData};
use crate::extend::hp::extend_hp;
use crate::geom::{certify_homeomorphism, Point2};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random injective PL boundary datum: the square loop with `n` nodes
/// (n ≥ 8, divisible by 4) mapped onto a star-shaped polygon with jittered
/// angles and radii in [0.5, 1.5). Star-shapedness about the origin makes
/// the image simple for any draw.
pub fn random_star_boundary(n: usize, rng: &mut impl Rng) -> BoundaryData {
    use std::f64::consts::TAU;
    assert!(n >= 8 && n % 4 == 0, "need n >= 8 divisible by 4");
    let dom = square_loop(1.0, n / 4 - 1);
    let mut img = Vec::with_capacity(n);
    for k in 0..n {
        let base = TAU * k as f64 / n as f64;
        let ang = base + rng.gen_range(-0.3..0.3) * TAU / n as f64;
        let r = rng.gen_range(0.5..1.5);
        img.push(Point2::new(r * ang.cos(), r * ang.sin()));
    }
    BoundaryData::new(dom, img).unwrap()
}

/// One corpus sample: node count and the realized variation ratio.
#[derive(Debug, Clone)]
pub struct CorpusSample {
    pub nodes: usize,
    pub ratio: f64,
    pub triangles: usize,
    pub rounds: usize,
}

/// Summary of a corpus run; `max_ratio` is the empirical maximum of
/// ∫|Dg| / (diam · boundary variation) over all samples.
#[derive(Debug, Clone)]
pub struct CorpusSummary {
    pub samples: Vec<CorpusSample>,
    pub max_ratio: f64,
}

/// Runs the extension over `count` random boundary data (seeded), requiring
/// every output to certify as a homeomorphism. Errors on the first sample
/// whose extension fails or does not certify.
pub fn run_hp_corpus(count: usize, seed: u64) -> Result<CorpusSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(count);
    let mut max_ratio: f64 = 0.0;
    for i in 0..count {
        let n = 4 * rng.gen_range(2..=8);
        let bd = random_star_boundary(n, &mut rng);
        let (g, rep) = extend_hp(&bd)?;
        let cert = certify_homeomorphism(&g);
        if !cert.is_pass() {
            return Err(Error::Injectivity(format!(
                "corpus sample {i} (n = {n}) failed certification: {cert:?}"
            )));
        }
        max_ratio = max_ratio.max(rep.ratio);
        samples.push(CorpusSample {
            nodes: n,
            ratio: rep.ratio,
            triangles: rep.triangles,
            rounds: rep.rounds,
        });
    }
    Ok(CorpusSummary { samples, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_corpus_runs_and_bounds_the_ratio() {
        let s = run_hp_corpus(5, 91).unwrap();
        assert_eq!(s.samples.len(), 5);
        assert!(s.max_ratio.is_finite() && s.max_ratio > 0.0);
        assert!(s.max_ratio <= 1000.0, "max ratio {}", s.max_ratio);
    }

    #[test]
    fn corpus_is_deterministic_per_seed() {
        let a = run_hp_corpus(3, 7).unwrap();
        let b = run_hp_corpus(3, 7).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(x.nodes, y.nodes);
            assert_eq!(x.ratio.to_bits(), y.ratio.to_bits());
        }
    }
}
