//! Sampled inequality suites shared by the property and acceptance targets.

#![allow(dead_code)]

use hetlab::kernels::legendre_conjugate;
use hetlab::PhiKernel;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Slack `(rhs − lhs)/max(1, |rhs|)`; negative means the inequality failed.
pub fn slack(lhs: f64, rhs: f64) -> f64 {
    (rhs - lhs) / rhs.abs().max(1.0)
}

fn log_uniform(rng: &mut StdRng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Worst normalized slack of each suite over `n` samples.
#[derive(Debug, Clone, Copy)]
pub struct SuiteWorst {
    pub envelope: f64,
    pub young: f64,
    pub quasi_triangle: f64,
    pub monotone_flux: f64,
    pub conjugate_flux: f64,
}

impl SuiteWorst {
    pub fn min(&self) -> f64 {
        [self.envelope, self.young, self.quasi_triangle, self.monotone_flux, self.conjugate_flux].into_iter().fold(f64::INFINITY, f64::min)
    }
}

pub fn inequality_suites(k: &PhiKernel, n: usize, seed: u64) -> SuiteWorst {
    let mut rng = StdRng::seed_from_u64(seed);
    let (l, m) = (k.l(), k.m());
    let big_phi = |t: f64| k.phi_integral(t);
    let mut w = SuiteWorst { envelope: f64::INFINITY, young: f64::INFINITY, quasi_triangle: f64::INFINITY, monotone_flux: f64::INFINITY, conjugate_flux: f64::INFINITY };

    for _ in 0..n {
        // ξ0(t)Φ(s) ≤ Φ(st) ≤ ξ1(t)Φ(s)
        let s = log_uniform(&mut rng, 1e-2, 1e2);
        let t = log_uniform(&mut rng, 1e-2, 1e2);
        let (xi0, xi1) = (t.powf(l).min(t.powf(m)), t.powf(l).max(t.powf(m)));
        let (fs, fst) = (big_phi(s), big_phi(s * t));
        w.envelope = w.envelope.min(slack(xi0 * fs, fst)).min(slack(fst, xi1 * fs));

        // st ≤ Φ(t) + Φ̃(s)
        let conj = legendre_conjugate(k, s, 1e-13).expect("conjugate");
        w.young = w.young.min(slack(s * t, big_phi(t) + conj));

        // Φ̃(φ(t)t) ≤ Φ(2t)
        let lhs = legendre_conjugate(k, k.flux(t), 1e-13).expect("conjugate");
        w.conjugate_flux = w.conjugate_flux.min(slack(lhs, big_phi(2.0 * t)));

        // Φ(|s + r|) ≤ 2^m (Φ(|s|) + Φ(|r|)) and monotone differences
        let sign = |rng: &mut StdRng| if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let a = sign(&mut rng) * log_uniform(&mut rng, 1e-2, 1e2);
        let b = sign(&mut rng) * log_uniform(&mut rng, 1e-2, 1e2);
        w.quasi_triangle = w.quasi_triangle.min(slack(big_phi((a + b).abs()), 2f64.powf(m) * (big_phi(a.abs()) + big_phi(b.abs()))));
        if a != b {
            let prod = (k.flux(a) - k.flux(b)) * (a - b);
            // strict positivity, reported as a slack against 0
            w.monotone_flux = w.monotone_flux.min(if prod > 0.0 { prod.min(1.0) } else { slack(0.0, prod) - f64::EPSILON });
        }
    }
    w
}
