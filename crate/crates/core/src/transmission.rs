//! The left-to-right transmission signal
//! `C(t) = (1/N) Σ_j ⟨TFD| ψ_j^R(t) ψ_j^L |TFD⟩` in the exact eigenbasis of
//! the coupled doubled Hamiltonian, and its peak / FWHM observables.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ONE, ZERO};
use crate::spectral::{self, Spectrum};
use crate::syk::DoubledSystem;
use crate::tfd::TfdState;
use crate::C64;

/// Signal magnitudes above `1 + UNITARITY_SLACK` indicate a bug.
pub const UNITARITY_SLACK: f64 = 1e-9;

/// An inclusive, ascending grid of evaluation times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    /// `points` evenly spaced times on `[0, t_max]`, both ends included.
    pub fn linspace(t_max: f64, points: usize) -> Result<Self> {
        if points == 0 || !(t_max >= 0.0) || !t_max.is_finite() {
            return Err(Error::Invalid(format!("time grid needs points >= 1 and t_max >= 0, got {points} on [0, {t_max}]")));
        }
        if points == 1 {
            return Ok(Self { times: vec![0.0] });
        }
        let step = t_max / (points - 1) as f64;
        let mut times: Vec<f64> = (0..points).map(|k| k as f64 * step).collect();
        times[points - 1] = t_max;
        Ok(Self { times })
    }

    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Empty("time grid"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Invalid("time grid must be finite and strictly ascending".into()));
        }
        Ok(Self { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// A sampled complex signal with its peak and width already extracted.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalTrace {
    pub times: Vec<f64>,
    pub values: Vec<C64>,
    pub peak_height: f64,
    pub peak_time: f64,
    /// `None` when the half-height level is not crossed on both sides.
    pub fwhm: Option<f64>,
}

impl SignalTrace {
    pub fn new(times: Vec<f64>, values: Vec<C64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), found: values.len() });
        }
        let abs: Vec<f64> = values.iter().map(|v| v.norm()).collect();
        let (idx, peak_height) = argmax_earliest(&abs).ok_or(Error::Empty("signal trace"))?;
        let fwhm = fwhm_from(&times, &abs, idx);
        Ok(Self { peak_time: times[idx], times, values, peak_height, fwhm })
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_deviation(&self, other: &SignalTrace) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: other.len() });
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// CSV body with header `t,re_C,im_C,abs_C`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,re_C,im_C,abs_C\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            s.push_str(&format!("{t},{},{},{}\n", v.re, v.im, v.norm()));
        }
        s
    }
}

fn argmax_earliest(abs: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &a) in abs.iter().enumerate() {
        match best {
            Some((_, b)) if a <= b => {}
            _ => best = Some((i, a)),
        }
    }
    best
}

/// `(peak height, peak time)` of `|C|`; ties go to the earliest sample.
pub fn extract_peak(trace: &SignalTrace) -> Result<(f64, f64)> {
    let abs = trace.abs();
    let (i, h) = argmax_earliest(&abs).ok_or(Error::Empty("signal trace"))?;
    Ok((h, trace.times[i]))
}

/// Full width at half maximum of `|C|` around the grid peak.
pub fn fwhm(trace: &SignalTrace) -> Option<f64> {
    let abs = trace.abs();
    let (i, _) = argmax_earliest(&abs)?;
    fwhm_from(&trace.times, &abs, i)
}

fn fwhm_from(times: &[f64], abs: &[f64], peak: usize) -> Option<f64> {
    let half = abs[peak] / 2.0;
    let cross = |i: usize, j: usize| {
        // abs[i] >= half > abs[j]
        let f = (abs[i] - half) / (abs[i] - abs[j]);
        times[i] + f * (times[j] - times[i])
    };
    let left = (0..peak).rev().find(|&k| abs[k] < half).map(|k| cross(k + 1, k))?;
    let right = (peak + 1..abs.len()).find(|&k| abs[k] < half).map(|k| cross(k - 1, k))?;
    Some(right - left)
}

/// Diagonalizes the dense doubled Hamiltonian and evaluates the signal.
pub fn signal_exact(sys: &DoubledSystem, tfd: &TfdState, grid: &TimeGrid) -> Result<SignalTrace> {
    let h = sys.h_full().ok_or(Error::MissingDenseHamiltonian)?;
    let spec = spectral::diagonalize(h)?;
    signal_exact_with(sys, &spec, tfd, grid)
}

/// Signal from a precomputed doubled eigendecomposition `H = V E V†`.
///
/// Per site, `C_j(t) = ⟨φ(t)| ψ_j^R |χ_j(t)⟩` with `φ(t) = V e^{-iEt} V†|TFD⟩`
/// and `χ_j(t) = V e^{-iEt} V† ψ_j^L|TFD⟩`; all times are rotated in one
/// matrix product, which is the double spectral sum evaluated exactly.
pub fn signal_exact_with(
    sys: &DoubledSystem,
    spec: &Spectrum,
    tfd: &TfdState,
    grid: &TimeGrid,
) -> Result<SignalTrace> {
    let d = sys.dim();
    if tfd.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: tfd.dim() });
    }
    if spec.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: spec.dim() });
    }
    let v = spec.eigenvectors()?;
    let times = grid.times();
    let nt = times.len();
    let n = sys.n_majorana();

    // phases[(m, k)] = e^{-i E_m t_k}
    let phases = Mat::<C64>::from_fn(d, nt, |m, k| C64::cis(-spec.eigenvalues[m] * times[k]));
    let evolve = |state: &[C64]| -> Mat<C64> {
        let c = linalg::adjoint_mul_vec(v.as_ref(), state);
        let coeffs = Mat::<C64>::from_fn(d, nt, |m, k| phases[(m, k)] * c[m]);
        let mut out = Mat::<C64>::zeros(d, nt);
        matmul(&mut out, Accum::Replace, v.as_ref(), coeffs.as_ref(), ONE, Par::Seq);
        out
    };

    let phi = evolve(tfd.vector());
    let mut sum = vec![ZERO; nt];
    let mut scratch = vec![ZERO; d];
    for (left, right) in sys.majorana_left().iter().zip(sys.majorana_right()) {
        let chi = evolve(&left.apply(tfd.vector()));
        for (k, s) in sum.iter_mut().enumerate() {
            right.apply_into(chi.col(k).try_as_col_major().unwrap().as_slice(), &mut scratch);
            let col = phi.col(k);
            let mut acc = ZERO;
            for (i, x) in scratch.iter().enumerate() {
                acc += col[i].conj() * x;
            }
            *s += acc;
        }
    }
    let inv = 1.0 / n as f64;
    SignalTrace::new(times.to_vec(), sum.into_iter().map(|s| s * inv).collect())
}

/// `(1/N) Σ_j ⟨TFD| ψ_j^R ψ_j^L |TFD⟩`, the `t = 0` value, by direct
/// operator application.
pub fn signal_at_zero(sys: &DoubledSystem, tfd: &TfdState) -> Result<C64> {
    if tfd.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: tfd.dim() });
    }
    let mut s = ZERO;
    for (l, r) in sys.majorana_left().iter().zip(sys.majorana_right()) {
        s += linalg::dot(tfd.vector(), &r.apply(&l.apply(tfd.vector())));
    }
    Ok(s / sys.n_majorana() as f64)
}
