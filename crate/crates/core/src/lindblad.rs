//! Dephasing dynamics `dρ/dt = -i[H, ρ] + γ Σ_k (Z_k ρ Z_k - ρ)` on the
//! doubled register and the noisy transmission signal.
//!
//! Operators are vectorized row-major: entry `(a, b)` sits at `a * d + b`.
//! In that basis the dissipator is diagonal, `-2γ · popcount(a ⊕ b)`.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, hermiticity_deviation, FlipSparse, ZERO};
use crate::ode::{self, Tolerances};
use crate::syk::DoubledSystem;
use crate::tfd::TfdState;
use crate::transmission::{SignalTrace, TimeGrid};
use crate::C64;

/// Largest doubled register evolved as a density matrix.
pub const MAX_LINDBLAD_QUBITS: usize = 8;

pub const TRACE_TOL: f64 = 1e-8;
pub const HERMITICITY_TOL: f64 = 1e-8;
/// Smallest eigenvalue tolerated in a valid state.
pub const POSITIVITY_TOL: f64 = 1e-7;
/// Below this an evolution is aborted.
pub const POSITIVITY_ABORT: f64 = 1e-5;

/// Flip patterns with every coefficient below this are dropped from `H`.
const SPARSITY_TOL: f64 = 1e-15;

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: Mat<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: Mat<C64>) -> Result<Self> {
        Self::checked(matrix, POSITIVITY_TOL)
    }

    fn checked(matrix: Mat<C64>, positivity: f64) -> Result<Self> {
        let d = matrix.nrows();
        if d == 0 || matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: matrix.ncols() });
        }
        let herm = hermiticity_deviation(matrix.as_ref());
        if herm > HERMITICITY_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = linalg::trace(matrix.as_ref());
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::Invalid(format!("density matrix trace {tr}")));
        }
        let min = min_eigenvalue(&matrix)?;
        if min < -positivity {
            return Err(Error::Positivity(min));
        }
        Ok(Self { matrix })
    }

    /// `|ψ⟩⟨ψ|` for a unit vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let d = psi.len();
        Self::new(Mat::from_fn(d, d, |a, b| psi[a] * psi[b].conj()))
    }

    pub fn matrix(&self) -> &Mat<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(self.matrix.as_ref())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        min_eigenvalue(&self.matrix)
    }

    /// `½ ‖ρ - σ‖_1`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let diff = &self.matrix - &other.matrix;
        let ev = diff.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::EigenFailure)?;
        Ok(0.5 * ev.iter().map(|x| x.abs()).sum::<f64>())
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        to_row_major(&self.matrix)
    }
}

fn min_eigenvalue(m: &Mat<C64>) -> Result<f64> {
    let ev = m.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::EigenFailure)?;
    Ok(ev.first().copied().unwrap_or(0.0))
}

pub fn to_row_major(m: &Mat<C64>) -> Vec<C64> {
    let d = m.nrows();
    (0..d * d).map(|k| m[(k / d, k % d)]).collect()
}

pub fn from_row_major(v: &[C64], d: usize) -> Mat<C64> {
    Mat::from_fn(d, d, |a, b| v[a * d + b])
}

/// Uniform single-qubit dephasing on every qubit of the register.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    gamma: f64,
}

impl NoiseConfig {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::Invalid(format!("dephasing rate must be >= 0, got {gamma}")));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Reference right-hand side, built from explicit `Z_k ρ Z_k` products.
pub fn lindblad_rhs(h: &Mat<C64>, rho: &Mat<C64>, gamma: f64) -> Result<Mat<C64>> {
    let d = h.nrows();
    if rho.nrows() != d || rho.ncols() != d || !d.is_power_of_two() {
        return Err(Error::DimensionMismatch { expected: d, found: rho.nrows() });
    }
    let n = d.trailing_zeros() as usize;
    let comm = linalg::mul(h.as_ref(), rho.as_ref()) - linalg::mul(rho.as_ref(), h.as_ref());
    let mut out = Mat::<C64>::from_fn(d, d, |a, b| comm[(a, b)] * C64::new(0.0, -1.0));
    for k in 0..n {
        let bit = 1usize << (n - 1 - k);
        let z = |a: usize| if a & bit == 0 { 1.0 } else { -1.0 };
        for b in 0..d {
            for a in 0..d {
                out[(a, b)] += rho[(a, b)] * (gamma * (z(a) * z(b) - 1.0));
            }
        }
    }
    Ok(out)
}

/// The Lindblad generator in flip-sparse form, acting on row-major vectors.
#[derive(Clone, Debug)]
pub struct LindbladGenerator {
    h: FlipSparse,
    gamma: f64,
    dim: usize,
}

impl LindbladGenerator {
    pub fn new(h: &Mat<C64>, noise: NoiseConfig) -> Result<Self> {
        let d = h.nrows();
        if !d.is_power_of_two() || h.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: h.ncols() });
        }
        if d.trailing_zeros() as usize > MAX_LINDBLAD_QUBITS {
            return Err(Error::DenseTooLarge(d.trailing_zeros() as usize));
        }
        Ok(Self { h: FlipSparse::from_dense(h.as_ref(), SPARSITY_TOL), gamma: noise.gamma(), dim: d })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_flip_groups(&self) -> usize {
        self.h.n_groups()
    }

    /// `out = L(ρ)`.
    pub fn rhs_into(&self, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        let minus_i = C64::new(0.0, -1.0);
        let plus_i = C64::new(0.0, 1.0);
        for (a, row) in out.chunks_exact_mut(d).enumerate() {
            let damp = -2.0 * self.gamma;
            for (b, o) in row.iter_mut().enumerate() {
                *o = rho[a * d + b] * (damp * (a ^ b).count_ones() as f64);
            }
            for (x, c) in self.h.groups() {
                // -i (Hρ)_{ab} = -i c_x(a) ρ_{a⊕x, b}
                let ca = c[a] * minus_i;
                let src = &rho[(a ^ x) * d..(a ^ x) * d + d];
                let own = &rho[a * d..a * d + d];
                for (b, o) in row.iter_mut().enumerate() {
                    // +i (ρH)_{ab} = +i ρ_{a, b⊕x} c_x(b⊕x)
                    let bx = b ^ x;
                    *o += ca * src[b] + plus_i * own[bx] * c[bx];
                }
            }
        }
    }

    /// Evolves any operator (not necessarily a state) and returns row-major
    /// snapshots at `times`.
    pub fn evolve(&self, op0: &[C64], times: &[f64]) -> Result<Vec<Vec<C64>>> {
        if op0.len() != self.dim * self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim * self.dim, found: op0.len() });
        }
        let (snaps, _) = ode::integrate(|_, y, dy| self.rhs_into(y, dy), 0.0, op0, times, Tolerances::default())?;
        Ok(snaps)
    }
}

/// Evolves a density matrix and validates every snapshot.
pub fn evolve_noisy(
    h: &Mat<C64>,
    rho0: &DensityMatrix,
    noise: NoiseConfig,
    grid: &TimeGrid,
) -> Result<Vec<DensityMatrix>> {
    let gen = LindbladGenerator::new(h, noise)?;
    if rho0.dim() != gen.dim() {
        return Err(Error::DimensionMismatch { expected: gen.dim(), found: rho0.dim() });
    }
    let snaps = gen.evolve(&rho0.to_row_major(), grid.times())?;
    snaps
        .iter()
        .zip(grid.times())
        .map(|(v, &t)| {
            DensityMatrix::checked(from_row_major(v, gen.dim()), POSITIVITY_ABORT).map_err(|e| match e {
                Error::Positivity(m) => Error::Integrator { t, reason: format!("positivity violated: min eigenvalue {m:e}") },
                other => other,
            })
        })
        .collect()
}

/// `Tr[P ρ]` for a Pauli string `P` and row-major `ρ`.
fn pauli_expectation(p: &crate::pauli::PauliString, rho: &[C64], d: usize) -> C64 {
    let mut s = ZERO;
    for b in 0..d {
        let (row, val) = p.column_entry(b);
        s += val * rho[b * d + row];
    }
    s
}

/// `C(t) = (1/N) Σ_j Tr[ψ_j^R ρ_j(t)]` with `ρ_j(0) = ψ_j^L |TFD⟩⟨TFD|`,
/// evolved under dephasing. At `γ = 0` this is the unitary signal.
pub fn noisy_signal(sys: &DoubledSystem, tfd: &TfdState, noise: NoiseConfig, grid: &TimeGrid) -> Result<SignalTrace> {
    if sys.n_majorana() > MAX_LINDBLAD_QUBITS {
        return Err(Error::DenseTooLarge(sys.n_majorana()));
    }
    let h = sys.h_full().ok_or(Error::MissingDenseHamiltonian)?;
    let d = sys.dim();
    if tfd.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: tfd.dim() });
    }
    let gen = LindbladGenerator::new(h, noise)?;
    let psi = tfd.vector();
    let mut sum = vec![ZERO; grid.len()];
    for (left, right) in sys.majorana_left().iter().zip(sys.majorana_right()) {
        let inserted = left.apply(psi);
        let op0: Vec<C64> = (0..d * d).map(|k| inserted[k / d] * psi[k % d].conj()).collect();
        for (s, snap) in sum.iter_mut().zip(gen.evolve(&op0, grid.times())?) {
            *s += pauli_expectation(right, &snap, d);
        }
    }
    let inv = 1.0 / sys.n_majorana() as f64;
    SignalTrace::new(grid.times().to_vec(), sum.into_iter().map(|s| s * inv).collect())
}

/// Rate at which the peak falls to half its `γ = 0` value.
///
/// `curve` holds `(γ, peak)` pairs sorted by `γ` and must start at `γ = 0`.
/// The first bracketing pair is interpolated linearly in `ln γ`, or in `γ`
/// when its lower end is zero. `None` if the curve never crosses.
pub fn critical_gamma(curve: &[(f64, f64)]) -> Result<Option<f64>> {
    if curve.len() < 2 {
        return Err(Error::TooFewLevels(curve.len()));
    }
    if curve[0].0 != 0.0 {
        return Err(Error::Invalid("noise curve must start at gamma = 0".into()));
    }
    if curve.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Invalid("noise curve rates must be strictly increasing".into()));
    }
    let target = 0.5 * curve[0].1;
    for w in curve.windows(2) {
        let ((g0, p0), (g1, p1)) = (w[0], w[1]);
        if p0 >= target && p1 < target {
            let f = (p0 - target) / (p0 - p1);
            return Ok(Some(if g0 == 0.0 { f * g1 } else { (g0.ln() + f * (g1.ln() - g0.ln())).exp() }));
        }
    }
    Ok(None)
}

/// One `(p, γ, seed)` row of a noise sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub p: f64,
    pub gamma: f64,
    pub seed: u64,
    pub peak_height: f64,
    pub peak_time: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_state(d: usize, seed: u64) -> DensityMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = Mat::<C64>::from_fn(d, d, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let m = linalg::mul_adjoint(a.as_ref(), a.as_ref());
        let tr = linalg::trace(m.as_ref()).re;
        DensityMatrix::new(Mat::from_fn(d, d, |i, j| m[(i, j)] / tr)).unwrap()
    }

    fn random_hermitian(d: usize, seed: u64) -> Mat<C64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut h = Mat::<C64>::from_fn(d, d, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        linalg::symmetrize(&mut h);
        h
    }

    #[test]
    fn generator_matches_reference() {
        let h = random_hermitian(16, 1);
        let rho = random_state(16, 2);
        for gamma in [0.0, 0.37] {
            let reference = lindblad_rhs(&h, rho.matrix(), gamma).unwrap();
            let gen = LindbladGenerator::new(&h, NoiseConfig::new(gamma).unwrap()).unwrap();
            let mut out = vec![ZERO; 256];
            gen.rhs_into(&rho.to_row_major(), &mut out);
            let got = from_row_major(&out, 16);
            assert!(linalg::frobenius_distance(got.as_ref(), reference.as_ref()) < 1e-12);
            assert!(linalg::trace(reference.as_ref()).norm() < 1e-13);
        }
    }

    #[test]
    fn zero_rate_is_pure_commutator() {
        let h = random_hermitian(8, 3);
        let rho = random_state(8, 4);
        let r = lindblad_rhs(&h, rho.matrix(), 0.0).unwrap();
        let comm = linalg::mul(h.as_ref(), rho.matrix().as_ref()) - linalg::mul(rho.matrix().as_ref(), h.as_ref());
        for i in 0..8 {
            for j in 0..8 {
                assert!((r[(i, j)] - comm[(i, j)] * C64::new(0.0, -1.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn single_qubit_coherence_decays() {
        let h = Mat::<C64>::zeros(2, 2);
        let half = C64::new(0.5, 0.0);
        let rho0 = DensityMatrix::new(Mat::from_fn(2, 2, |_, _| half)).unwrap();
        let gamma = 0.3;
        let grid = TimeGrid::linspace(5.0, 11).unwrap();
        let snaps = evolve_noisy(&h, &rho0, NoiseConfig::new(gamma).unwrap(), &grid).unwrap();
        for (s, &t) in snaps.iter().zip(grid.times()) {
            let exact = 0.5 * (-2.0 * gamma * t).exp();
            assert!((s.matrix()[(0, 1)].re - exact).abs() <= 1e-8);
            assert!((s.matrix()[(0, 0)].re - 0.5).abs() <= 1e-12);
        }
    }

    #[test]
    fn strong_dephasing_kills_coherences() {
        let h = Mat::<C64>::zeros(4, 4);
        let rho0 = random_state(4, 5);
        let grid = TimeGrid::from_times(vec![2.0]).unwrap();
        let snaps = evolve_noisy(&h, &rho0, NoiseConfig::new(10.0).unwrap(), &grid).unwrap();
        let m = snaps[0].matrix();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(m[(i, j)].norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(NoiseConfig::new(-0.1).is_err());
        let bad = Mat::<C64>::from_fn(2, 2, |i, j| if i == j { C64::new(1.0, 0.0) } else { ZERO });
        assert!(matches!(DensityMatrix::new(bad), Err(Error::Invalid(_))));
        let neg = Mat::<C64>::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => C64::new(1.5, 0.0),
            (1, 1) => C64::new(-0.5, 0.0),
            _ => ZERO,
        });
        assert!(matches!(DensityMatrix::new(neg), Err(Error::Positivity(_))));
    }

    #[test]
    fn critical_rate_of_exponential_curve() {
        let curve: Vec<(f64, f64)> = (0..=200).map(|k| k as f64 * 0.001).map(|g| (g, (-g / 0.08f64).exp())).collect();
        let g = critical_gamma(&curve).unwrap().unwrap();
        assert!((g - 0.08 * 2f64.ln()).abs() < 1e-5, "{g}");
        let flat: Vec<(f64, f64)> = vec![(0.0, 1.0), (0.1, 0.9)];
        assert_eq!(critical_gamma(&flat).unwrap(), None);
        assert!(critical_gamma(&[(0.1, 1.0), (0.2, 0.1)]).is_err());
        // crossing inside the first interval uses linear interpolation
        assert!((critical_gamma(&[(0.0, 1.0), (0.1, 0.0)]).unwrap().unwrap() - 0.05).abs() < 1e-15);
    }
}
