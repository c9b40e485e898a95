//! Oracles shared by the integration tests. Nothing here goes through an
//! eigensolver.
#![allow(dead_code)]

use faer::Mat;
use syk_wormhole::linalg::{self, max_abs, mul};
use syk_wormhole::C64;

/// `e^{A}` by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &Mat<C64>) -> Mat<C64> {
    let n = a.nrows();
    let norm = max_abs(a.as_ref()) * n as f64;
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scale = 0.5f64.powi(squarings as i32);
    let scaled = Mat::<C64>::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let mut result = Mat::<C64>::identity(n, n);
    let mut term = Mat::<C64>::identity(n, n);
    for k in 1..=30 {
        term = mul(term.as_ref(), scaled.as_ref());
        let inv = 1.0 / k as f64;
        for j in 0..n {
            for i in 0..n {
                term[(i, j)] *= inv;
            }
        }
        result += &term;
    }
    for _ in 0..squarings {
        result = mul(result.as_ref(), result.as_ref());
    }
    result
}

/// `e^{-iHt}`.
pub fn propagator(h: &Mat<C64>, t: f64) -> Mat<C64> {
    let n = h.nrows();
    expm(&Mat::from_fn(n, n, |i, j| h[(i, j)] * C64::new(0.0, -t)))
}

pub fn vec_dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

pub fn apply(m: &Mat<C64>, v: &[C64]) -> Vec<C64> {
    linalg::mul_vec(m.as_ref(), v)
}
