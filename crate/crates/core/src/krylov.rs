//! Matrix-free application of the doubled Hamiltonian and Lanczos time
//! evolution, for sizes where the dense `2^N × 2^N` matrix is out of reach.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatMut, MatRef, Par, Side};

use crate::error::{Error, Result};
use crate::linalg::{self, ONE, ZERO};
use crate::pauli::{OperatorSum, PauliString};
use crate::syk::DoubledSystem;
use crate::tfd::TfdState;
use crate::transmission::{SignalTrace, TimeGrid};
use crate::C64;

pub const DEFAULT_KRYLOV_DIM: usize = 60;

/// Off-diagonal Lanczos coefficients below this close the Krylov space.
pub const BREAKDOWN_TOL: f64 = 1e-12;

/// `H = h ⊗ I + I ⊗ h + H_int` acting on row-major reshaped vectors.
#[derive(Clone, Debug)]
pub struct MatrixFreeHamiltonian {
    h_single: Mat<C64>,
    mu: f64,
    n_majorana: usize,
    h_int: OperatorSum,
    left: Vec<PauliString>,
    right: Vec<PauliString>,
}

impl MatrixFreeHamiltonian {
    pub fn from_system(sys: &DoubledSystem) -> Self {
        Self {
            h_single: sys.h_single().clone(),
            mu: sys.mu(),
            n_majorana: sys.n_majorana(),
            h_int: sys.h_int().clone(),
            left: sys.majorana_left().to_vec(),
            right: sys.majorana_right().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_majorana
    }

    pub fn dim_single(&self) -> usize {
        self.h_single.nrows()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn n_majorana(&self) -> usize {
        self.n_majorana
    }

    pub fn majorana_left(&self) -> &[PauliString] {
        &self.left
    }

    pub fn majorana_right(&self) -> &[PauliString] {
        &self.right
    }

    /// `out = H v`.
    pub fn apply_into(&self, v: &[C64], out: &mut [C64]) -> Result<()> {
        let d = self.dim();
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: v.len() });
        }
        if out.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: out.len() });
        }
        let ds = self.dim_single();
        let m = MatRef::from_row_major_slice(v, ds, ds);
        matmul(
            MatMut::from_row_major_slice_mut(out, ds, ds),
            Accum::Replace,
            self.h_single.as_ref(),
            m,
            ONE,
            Par::Seq,
        );
        matmul(
            MatMut::from_row_major_slice_mut(out, ds, ds),
            Accum::Add,
            m,
            self.h_single.transpose(),
            ONE,
            Par::Seq,
        );
        self.h_int.apply_add(v, out);
        Ok(())
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        let mut out = vec![ZERO; v.len()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }
}

/// Convenience wrapper matching the free-function form.
pub fn apply_h(h: &MatrixFreeHamiltonian, v: &[C64]) -> Result<Vec<C64>> {
    h.apply(v)
}

/// Orthonormal Krylov basis of a start vector with its tridiagonal
/// projection, already diagonalized.
#[derive(Clone, Debug)]
pub struct KrylovBasis {
    vectors: Vec<Vec<C64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// `β_m`, the norm of the component leaving the space.
    residual_beta: f64,
    start_norm: f64,
    breakdown: bool,
    ritz_values: Vec<f64>,
    ritz_vectors: Mat<f64>,
}

impl KrylovBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// True when the space closed before reaching the requested dimension.
    pub fn breakdown(&self) -> bool {
        self.breakdown
    }

    /// Coefficients of `e^{-iHt} ψ` in the basis.
    pub fn coefficients(&self, t: f64) -> Vec<C64> {
        let k = self.dim();
        let q = &self.ritz_vectors;
        let rot: Vec<C64> = (0..k)
            .map(|i| C64::cis(-self.ritz_values[i] * t) * (q[(0, i)] * self.start_norm))
            .collect();
        (0..k).map(|r| (0..k).map(|i| rot[i] * q[(r, i)]).sum()).collect()
    }

    /// A posteriori error estimate `β_m |e_m^T e^{-iTt} e_1|`.
    pub fn residual(&self, t: f64) -> f64 {
        if self.breakdown {
            return 0.0;
        }
        let c = self.coefficients(t);
        self.residual_beta * c[self.dim() - 1].norm()
    }

    /// `V c`.
    pub fn expand(&self, coeffs: &[C64]) -> Vec<C64> {
        let d = self.vectors[0].len();
        let mut out = vec![ZERO; d];
        for (v, &c) in self.vectors.iter().zip(coeffs) {
            for (o, x) in out.iter_mut().zip(v) {
                *o += c * x;
            }
        }
        out
    }

    pub fn evolve(&self, t: f64) -> Vec<C64> {
        self.expand(&self.coefficients(t))
    }

    /// `max |V†V - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let k = self.dim();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in i..k {
                let g = linalg::dot(&self.vectors[i], &self.vectors[j]);
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }
}

/// Lanczos with full reorthogonalization (two Gram-Schmidt passes).
pub fn lanczos(h: &MatrixFreeHamiltonian, psi: &[C64], m: usize) -> Result<KrylovBasis> {
    let d = h.dim();
    if psi.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: psi.len() });
    }
    if m < 2 || m > d {
        return Err(Error::KrylovDimension { m, dim: d });
    }
    let start_norm = linalg::norm(psi);
    if start_norm == 0.0 {
        return Err(Error::Invalid("Krylov start vector is zero".into()));
    }
    let mut vectors: Vec<Vec<C64>> = vec![psi.iter().map(|x| x / start_norm).collect()];
    let mut alpha = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    let mut w = vec![ZERO; d];
    let mut breakdown = false;
    let mut residual_beta = 0.0;
    loop {
        let k = vectors.len() - 1;
        h.apply_into(&vectors[k], &mut w)?;
        let a = linalg::dot(&vectors[k], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for v in &vectors {
                let c = linalg::dot(v, &w);
                for (x, y) in w.iter_mut().zip(v) {
                    *x -= c * y;
                }
            }
        }
        let b = linalg::norm(&w);
        if b < BREAKDOWN_TOL {
            breakdown = true;
            break;
        }
        if vectors.len() == m {
            residual_beta = b;
            break;
        }
        beta.push(b);
        vectors.push(w.iter().map(|x| x / b).collect());
    }

    let k = vectors.len();
    let t = Mat::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = t.self_adjoint_eigen(Side::Lower).map_err(|_| Error::EigenFailure)?;
    let ritz_values = eig.S().column_vector().iter().copied().collect();
    let ritz_vectors = eig.U().to_owned();
    Ok(KrylovBasis {
        vectors,
        alpha,
        beta,
        residual_beta,
        start_norm,
        breakdown,
        ritz_values,
        ritz_vectors,
    })
}

/// `e^{-iHt} ψ` from a fresh Krylov space of dimension `m`.
pub fn lanczos_evolve(h: &MatrixFreeHamiltonian, psi: &[C64], t: f64, m: usize) -> Result<Vec<C64>> {
    if t == 0.0 {
        return Ok(psi.to_vec());
    }
    Ok(lanczos(h, psi, m)?.evolve(t))
}

/// Even Majorana indices, the default subsample for large `N`.
pub fn even_sites(n_majorana: usize) -> Vec<usize> {
    (0..n_majorana).step_by(2).collect()
}

/// Krylov signal with the largest residual estimate seen on the grid.
#[derive(Clone, Debug)]
pub struct KrylovSignal {
    pub trace: SignalTrace,
    pub max_residual: f64,
}

/// `C(t)` averaged over `sites`, from Krylov spaces of `|TFD⟩` and of each
/// `ψ_j^L|TFD⟩`. Every time is evaluated from `t = 0` in the same space;
/// the overlap with `ψ_j^R` is formed once per site in the `m × m`
/// coefficient space, so memory stays at a few bases of length `d`.
pub fn signal_krylov(
    h: &MatrixFreeHamiltonian,
    tfd: &TfdState,
    sites: &[usize],
    grid: &TimeGrid,
    m: usize,
) -> Result<KrylovSignal> {
    if sites.is_empty() {
        return Err(Error::Empty("site list"));
    }
    if tfd.dim() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: tfd.dim() });
    }
    if let Some(&bad) = sites.iter().find(|&&j| j >= h.n_majorana()) {
        return Err(Error::MajoranaIndex { index: bad, n_qubits: h.n_majorana() });
    }
    let times = grid.times();
    let phi = lanczos(h, tfd.vector(), m)?;
    let phi_coeffs: Vec<Vec<C64>> = times.iter().map(|&t| phi.coefficients(t)).collect();
    let mut max_residual = times.iter().map(|&t| phi.residual(t)).fold(0.0, f64::max);

    let mut sum = vec![ZERO; times.len()];
    let mut scratch = vec![ZERO; h.dim()];
    for &j in sites {
        let chi = lanczos(h, &h.left[j].apply(tfd.vector()), m)?;
        // g[(r, c)] = ⟨phi_r| ψ_j^R |chi_c⟩
        let mut g = Mat::<C64>::zeros(phi.dim(), chi.dim());
        for (c, v) in chi.vectors().iter().enumerate() {
            h.right[j].apply_into(v, &mut scratch);
            for (r, u) in phi.vectors().iter().enumerate() {
                g[(r, c)] = linalg::dot(u, &scratch);
            }
        }
        for (k, &t) in times.iter().enumerate() {
            let b = chi.coefficients(t);
            max_residual = max_residual.max(chi.residual(t));
            let gb = linalg::mul_vec(g.as_ref(), &b);
            sum[k] += linalg::dot(&phi_coeffs[k], &gb);
        }
    }
    let inv = 1.0 / sites.len() as f64;
    let trace = SignalTrace::new(times.to_vec(), sum.into_iter().map(|s| s * inv).collect())?;
    Ok(KrylovSignal { trace, max_residual })
}
