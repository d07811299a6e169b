//! Deterministic random generators shared by the unit and integration test
//! suites. Not part of the stable API.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calg::{CVec, Cpx, MultiPoly, PolyMap};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sample_cpx(r: &mut ChaCha8Rng, scale: f64) -> Cpx {
    Cpx::new(r.gen_range(-scale..scale), r.gen_range(-scale..scale))
}

pub fn sample_cvec(r: &mut ChaCha8Rng, dim: usize, radius: f64) -> CVec {
    CVec::new((0..dim).map(|_| sample_cpx(r, radius)).collect()).unwrap()
}

/// Random sparse polynomial with total degree at most `max_deg`.
pub fn sample_poly(
    r: &mut ChaCha8Rng,
    dim: usize,
    max_deg: u32,
    max_terms: usize,
    coeff_scale: f64,
) -> MultiPoly {
    let n_terms = r.gen_range(1..=max_terms);
    let mut terms = Vec::with_capacity(n_terms);
    for _ in 0..n_terms {
        let mut exps = vec![0u32; dim];
        let mut budget = max_deg;
        for e in exps.iter_mut() {
            let k = r.gen_range(0..=budget);
            *e = k;
            budget -= k;
        }
        terms.push((exps, sample_cpx(r, coeff_scale)));
    }
    MultiPoly::from_terms(dim, terms).unwrap()
}

/// Random polynomial self-map of `C^dim`.
pub fn sample_poly_map(
    r: &mut ChaCha8Rng,
    dim: usize,
    max_deg: u32,
    max_terms: usize,
    coeff_scale: f64,
) -> PolyMap {
    PolyMap::new(
        dim,
        (0..dim)
            .map(|_| sample_poly(r, dim, max_deg, max_terms, coeff_scale))
            .collect(),
    )
    .unwrap()
}
