//! Thermofield-double states built from a single-side eigendecomposition,
//! and their structural diagnostics.
//!
//! The doubled vector is laid out with the left index slower: component
//! `a * d_s + b` multiplies `|a⟩_L |b⟩_R`. Reshaped row-major it is the
//! `d_s × d_s` matrix `M = U W U^T` with `W = diag(e^{-β E_n / 2}) / √Z`.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, frobenius_distance, ONE, ZERO};
use crate::spectral::{self, Spectrum};
use crate::C64;

/// Eigenvalues of a reduced state below this are dropped from the entropy.
pub const ENTROPY_CUTOFF: f64 = 1e-14;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub n_majorana: usize,
    pub sparsity: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct TfdState {
    vector: Vec<C64>,
    dim_single: usize,
    beta: f64,
    ground_energy: f64,
    /// `ln Σ_n e^{-β (E_n - E_0)}`.
    log_z_shifted: f64,
    provenance: Provenance,
}

impl TfdState {
    /// Wraps an arbitrary doubled vector, e.g. for product-state checks.
    pub fn from_vector(vector: Vec<C64>, beta: f64, provenance: Provenance) -> Result<Self> {
        let d = vector.len();
        let ds = (d as f64).sqrt().round() as usize;
        if ds * ds != d || !ds.is_power_of_two() {
            return Err(Error::DimensionMismatch { expected: ds * ds, found: d });
        }
        Ok(Self {
            vector,
            dim_single: ds,
            beta,
            ground_energy: 0.0,
            log_z_shifted: 0.0,
            provenance,
        })
    }

    pub fn vector(&self) -> &[C64] {
        &self.vector
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn dim_single(&self) -> usize {
        self.dim_single
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// `ln Z` with `Z = Σ_n e^{-β E_n}`.
    pub fn log_partition(&self) -> f64 {
        self.log_z_shifted - self.beta * self.ground_energy
    }

    /// `Z` itself; may overflow or underflow for deep spectra.
    pub fn partition_z(&self) -> f64 {
        self.log_partition().exp()
    }

    /// Row-major `d_s × d_s` view: row = left index.
    pub fn as_matrix(&self) -> MatRef<'_, C64> {
        MatRef::from_row_major_slice(&self.vector, self.dim_single, self.dim_single)
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.vector)
    }
}

/// `|TFD⟩ = Z^{-1/2} Σ_n e^{-β E_n/2} |n⟩_L |n⟩_R`, with the right copy of
/// each eigenvector taken unconjugated.
pub fn build_tfd(spec: &Spectrum, beta: f64, provenance: Provenance) -> Result<TfdState> {
    if !(beta >= 0.0) {
        return Err(Error::NegativeBeta(beta));
    }
    let u = spec.eigenvectors()?;
    let ds = u.nrows();
    if ds != spec.dim() || ds == 0 {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: ds });
    }
    let e0 = spec.eigenvalues[0];
    let mut weights: Vec<f64> =
        spec.eigenvalues.iter().map(|e| (-0.5 * beta * (e - e0)).exp()).collect();
    let z_shifted: f64 = weights.iter().map(|w| w * w).sum();
    let inv = z_shifted.sqrt().recip();
    weights.iter_mut().for_each(|w| *w *= inv);

    let uw = Mat::<C64>::from_fn(ds, ds, |a, n| u[(a, n)] * weights[n]);
    let mut vector = vec![ZERO; ds * ds];
    {
        let m = faer::MatMut::from_row_major_slice_mut(&mut vector, ds, ds);
        matmul(m, Accum::Replace, uw.as_ref(), u.transpose(), ONE, Par::Seq);
    }
    let nrm = linalg::norm(&vector);
    vector.iter_mut().for_each(|x| *x /= nrm);
    Ok(TfdState {
        vector,
        dim_single: ds,
        beta,
        ground_energy: e0,
        log_z_shifted: z_shifted.ln(),
        provenance,
    })
}

/// `ρ_L = Tr_R |ψ⟩⟨ψ| = M M†`.
pub fn reduced_left(state: &TfdState) -> Mat<C64> {
    let m = state.as_matrix();
    linalg::mul_adjoint(m, m)
}

/// `ρ_R = Tr_L |ψ⟩⟨ψ| = (M† M)^*`.
pub fn reduced_right(state: &TfdState) -> Mat<C64> {
    let m = state.as_matrix();
    let g = linalg::adjoint_mul(m, m);
    Mat::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)].conj())
}

fn von_neumann(rho: &Mat<C64>) -> Result<f64> {
    let ev = rho.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::EigenFailure)?;
    Ok(ev.into_iter().filter(|&l| l > ENTROPY_CUTOFF).map(|l| -l * l.ln()).sum())
}

/// Entanglement entropy across the left/right cut, in nats.
pub fn entanglement_entropy(state: &TfdState) -> Result<f64> {
    von_neumann(&reduced_left(state))
}

/// `e^{-β H} / Z` through the eigendecomposition of `h`.
pub fn thermal_state(h_single: &Mat<C64>, beta: f64) -> Result<Mat<C64>> {
    let spec = spectral::diagonalize(h_single)?;
    let u = spec.eigenvectors()?;
    let e0 = spec.eigenvalues[0];
    let w: Vec<f64> = spec.eigenvalues.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    let uw = Mat::<C64>::from_fn(u.nrows(), u.ncols(), |a, n| u[(a, n)] * (w[n] / z));
    Ok(linalg::mul_adjoint(uw.as_ref(), u.as_ref()))
}

/// `‖ρ_L - e^{-β H}/Z‖_F`.
pub fn thermal_fidelity_error(state: &TfdState, h_single: &Mat<C64>, beta: f64) -> Result<f64> {
    if h_single.nrows() != state.dim_single() {
        return Err(Error::DimensionMismatch { expected: state.dim_single(), found: h_single.nrows() });
    }
    let rho = reduced_left(state);
    let th = thermal_state(h_single, beta)?;
    Ok(frobenius_distance(rho.as_ref(), th.as_ref()))
}

/// `|⟨a|b⟩|`.
pub fn tfd_overlap(a: &TfdState, b: &TfdState) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(linalg::dot(a.vector(), b.vector()).norm())
}

/// `Tr(ρ_L H)`.
pub fn mean_energy(state: &TfdState, h_single: &Mat<C64>) -> f64 {
    let rho = reduced_left(state);
    linalg::trace(linalg::mul(rho.as_ref(), h_single.as_ref()).as_ref()).re
}

/// One row of the TFD diagnostics table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfdDiagnostics {
    pub p: f64,
    pub seed: u64,
    pub s_ent: f64,
    pub s_over_smax: f64,
    pub thermal_err: f64,
    pub overlap_with_dense: Option<f64>,
}

pub fn diagnostics(
    state: &TfdState,
    h_single: &Mat<C64>,
    dense_reference: Option<&TfdState>,
) -> Result<TfdDiagnostics> {
    let s = entanglement_entropy(state)?;
    let s_max = (state.dim_single() as f64).ln();
    Ok(TfdDiagnostics {
        p: state.provenance().sparsity,
        seed: state.provenance().seed,
        s_ent: s,
        s_over_smax: s / s_max,
        thermal_err: thermal_fidelity_error(state, h_single, state.beta())?,
        overlap_with_dense: dense_reference.map(|d| tfd_overlap(state, d)).transpose()?,
    })
}
