//! Small dense helpers shared across modules, plus [`FlipSparse`], a storage
//! format for operators that are short sums of bit-flip patterns.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par};

use crate::C64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// `a ⊗ I_n`.
pub fn kron_identity_right(a: MatRef<'_, C64>, n: usize) -> Mat<C64> {
    let d = a.nrows() * n;
    let mut out = Mat::<C64>::zeros(d, d);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let v = a[(i, j)];
            if v != ZERO {
                for k in 0..n {
                    out[(i * n + k, j * n + k)] = v;
                }
            }
        }
    }
    out
}

/// `I_n ⊗ a`.
pub fn kron_identity_left(n: usize, a: MatRef<'_, C64>) -> Mat<C64> {
    let m = a.nrows();
    let mut out = Mat::<C64>::zeros(n * m, n * m);
    for k in 0..n {
        for j in 0..m {
            for i in 0..m {
                out[(k * m + i, k * m + j)] = a[(i, j)];
            }
        }
    }
    out
}

/// Largest entry of `|H - H†|`.
pub fn hermiticity_deviation(h: MatRef<'_, C64>) -> f64 {
    let n = h.nrows();
    let mut m = 0.0f64;
    for j in 0..n {
        for i in j..n {
            m = m.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    m
}

pub fn max_abs(h: MatRef<'_, C64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..h.ncols() {
        for i in 0..h.nrows() {
            m = m.max(h[(i, j)].norm());
        }
    }
    m
}

/// `H ← (H + H†)/2` in place.
pub fn symmetrize(h: &mut Mat<C64>) {
    let n = h.nrows();
    for j in 0..n {
        for i in j..n {
            let avg = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            h[(i, j)] = avg;
            h[(j, i)] = avg.conj();
        }
    }
}

pub fn frobenius_distance(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += (a[(i, j)] - b[(i, j)]).norm_sqr();
        }
    }
    s.sqrt()
}

pub fn frobenius_norm(a: MatRef<'_, C64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn trace(a: MatRef<'_, C64>) -> C64 {
    (0..a.nrows()).map(|i| a[(i, i)]).sum()
}

/// `A B` without temporaries beyond the result.
pub fn mul(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    let mut out = Mat::<C64>::zeros(a.nrows(), b.ncols());
    matmul(&mut out, Accum::Replace, a, b, ONE, Par::Seq);
    out
}

/// `A† B`.
pub fn adjoint_mul(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    let mut out = Mat::<C64>::zeros(a.ncols(), b.ncols());
    matmul(&mut out, Accum::Replace, a.adjoint(), b, ONE, Par::Seq);
    out
}

/// `A B†`.
pub fn mul_adjoint(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    let mut out = Mat::<C64>::zeros(a.nrows(), b.nrows());
    matmul(&mut out, Accum::Replace, a, b.adjoint(), ONE, Par::Seq);
    out
}

/// `A† v`.
pub fn adjoint_mul_vec(a: MatRef<'_, C64>, v: &[C64]) -> Vec<C64> {
    assert_eq!(a.nrows(), v.len());
    (0..a.ncols())
        .map(|j| {
            let col = a.col(j);
            let mut s = ZERO;
            for (i, x) in v.iter().enumerate() {
                s += col[i].conj() * x;
            }
            s
        })
        .collect()
}

pub fn mul_vec(a: MatRef<'_, C64>, v: &[C64]) -> Vec<C64> {
    assert_eq!(a.ncols(), v.len());
    let mut out = vec![ZERO; a.nrows()];
    for (j, &x) in v.iter().enumerate() {
        if x == ZERO {
            continue;
        }
        let col = a.col(j);
        for (i, o) in out.iter_mut().enumerate() {
            *o += col[i] * x;
        }
    }
    out
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// An operator stored as `(O v)_a = Σ_x c_x(a) · v_{a ⊕ x}`: one diagonal
/// coefficient vector per distinct bit-flip pattern `x`.
///
/// Any `2^n × 2^n` matrix decomposes this way; Pauli sums produce only a few
/// patterns, which makes products against vectors and density matrices
/// cheap.
#[derive(Clone, Debug)]
pub struct FlipSparse {
    dim: usize,
    groups: Vec<(usize, Vec<C64>)>,
}

impl FlipSparse {
    /// Keeps every flip pattern with at least one entry of magnitude above
    /// `tol`.
    pub fn from_dense(h: MatRef<'_, C64>, tol: f64) -> Self {
        let dim = h.nrows();
        assert_eq!(dim, h.ncols());
        assert!(dim.is_power_of_two());
        let groups = (0..dim)
            .filter_map(|x| {
                let coeffs: Vec<C64> = (0..dim).map(|a| h[(a, a ^ x)]).collect();
                coeffs.iter().any(|c| c.norm() > tol).then_some((x, coeffs))
            })
            .collect();
        Self { dim, groups }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &[(usize, Vec<C64>)] {
        &self.groups
    }

    /// `out += scale · O v`.
    pub fn apply_add(&self, v: &[C64], scale: C64, out: &mut [C64]) {
        for (x, coeffs) in &self.groups {
            for (a, o) in out.iter_mut().enumerate() {
                *o += scale * coeffs[a] * v[a ^ x];
            }
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; v.len()];
        self.apply_add(v, ONE, &mut out);
        out
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::<C64>::zeros(self.dim, self.dim);
        for (x, coeffs) in &self.groups {
            for (a, c) in coeffs.iter().enumerate() {
                m[(a, a ^ x)] += *c;
            }
        }
        m
    }
}
