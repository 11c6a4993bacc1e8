//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's right-hand sides or integrator.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rotsol::emden::{EmdenState2D, EmdenState3D};
use rotsol::PhysParams;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `(a, a', b, b')' ` written out by hand.
pub fn rhs3(p: (f64, f64, f64), y: [f64; 4]) -> [f64; 4] {
    let (xi, lam, gam) = p;
    let [a, ad, b, bd] = y;
    let add = xi * xi / (a * a * a) + lam * a.powf(1.0 - 2.0 * gam) * b.powf(1.0 - gam);
    let bdd = lam * a.powf(2.0 - 2.0 * gam) * b.powf(-gam);
    [ad, add, bd, bdd]
}

pub fn rhs2(p: (f64, f64, f64), y: [f64; 2]) -> [f64; 2] {
    let (xi, lam, gam) = p;
    let [a, ad] = y;
    [ad, xi * xi / (a * a * a) + lam * a.powf(1.0 - 2.0 * gam)]
}

/// Classical fixed-step RK4 from 0 to `t_end`.
pub fn rk4<const N: usize>(f: impl Fn([f64; N]) -> [f64; N], y0: [f64; N], t_end: f64, dt: f64) -> [f64; N] {
    let steps = (t_end / dt).round() as usize;
    let h = t_end / steps as f64;
    let axpy = |y: &[f64; N], k: &[f64; N], c: f64| -> [f64; N] { std::array::from_fn(|i| y[i] + c * k[i]) };
    let mut y = y0;
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(axpy(&y, &k1, 0.5 * h));
        let k3 = f(axpy(&y, &k2, 0.5 * h));
        let k4 = f(axpy(&y, &k3, h));
        y = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    y
}

pub fn params(k: f64, gamma: f64, lambda: f64, alpha: f64, xi: f64) -> PhysParams {
    PhysParams::new(k, gamma, lambda, alpha, xi).unwrap()
}

pub fn ic3(a: f64, a1: f64, b: f64, b1: f64) -> EmdenState3D {
    EmdenState3D::new(0.0, a, a1, b, b1).unwrap()
}

pub fn ic2(a: f64, a1: f64) -> EmdenState2D {
    EmdenState2D::new(0.0, a, a1).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

pub fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    r.gen_range(lo..hi)
}
