//! Hermitian eigendecomposition, adjacent-gap-ratio statistics and fermion
//! parity sectors.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermiticity_deviation, max_abs};
use crate::C64;

/// Reference `⟨r⟩` values for the Wigner-Dyson classes and Poisson levels.
pub const R_GUE: f64 = 0.603;
pub const R_GOE: f64 = 0.536;
pub const R_GSE: f64 = 0.676;
pub const R_POISSON: f64 = 0.386;

/// Lower edge of the chaotic label for each declared class.
pub const GUE_THRESHOLD: f64 = 0.55;
pub const GOE_THRESHOLD: f64 = 0.52;
pub const GSE_THRESHOLD: f64 = 0.65;
/// Lower edge of the transitional band.
pub const TRANSITIONAL_THRESHOLD: f64 = 0.40;

const HERMITIAN_TOL: f64 = 1e-12;
const PARITY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumSource {
    SingleSide,
    Doubled,
    Generic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParitySector {
    Even,
    Odd,
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Columns aligned with `eigenvalues`.
    pub eigenvectors: Option<Mat<C64>>,
    pub source: SpectrumSource,
    pub parity_sector: Option<ParitySector>,
}

impl Spectrum {
    pub fn with_source(mut self, source: SpectrumSource) -> Self {
        self.source = source;
        self
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvectors(&self) -> Result<&Mat<C64>> {
        self.eigenvectors.as_ref().ok_or(Error::MissingEigenvectors)
    }

    pub fn gap_ratio(&self) -> Result<GapRatio> {
        gap_ratio(&self.eigenvalues)
    }
}

fn check_hermitian(h: &Mat<C64>) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch { expected: h.nrows(), found: h.ncols() });
    }
    let dev = hermiticity_deviation(h.as_ref());
    if dev > HERMITIAN_TOL * max_abs(h.as_ref()).max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    Ok(())
}

/// Full eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn diagonalize(h: &Mat<C64>) -> Result<Spectrum> {
    check_hermitian(h)?;
    let evd = h.self_adjoint_eigen(Side::Lower).map_err(|_| Error::EigenFailure)?;
    let eigenvalues = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: Some(evd.U().to_owned()),
        source: SpectrumSource::Generic,
        parity_sector: None,
    })
}

/// Eigenvalues only, ascending.
pub fn eigenvalues(h: &Mat<C64>) -> Result<Vec<f64>> {
    check_hermitian(h)?;
    let ev = h.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::EigenFailure)?;
    Ok(ev.into_iter().collect())
}

/// Mean adjacent gap ratio of an ascending level sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRatio {
    pub mean: f64,
    pub n_ratios: usize,
    /// Ratios whose two spacings were both exactly zero (counted as 1).
    pub degenerate_pairs: usize,
}

impl GapRatio {
    pub fn flagged(&self) -> bool {
        self.degenerate_pairs > 0
    }
}

pub fn gap_ratio(levels: &[f64]) -> Result<GapRatio> {
    if levels.len() < 3 {
        return Err(Error::TooFewLevels(levels.len()));
    }
    let spacings: Vec<f64> = levels.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    let mut sum = 0.0;
    let mut degenerate_pairs = 0;
    for w in spacings.windows(2) {
        let (lo, hi) = if w[0] <= w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
        if hi == 0.0 {
            degenerate_pairs += 1;
            sum += 1.0;
        } else {
            sum += lo / hi;
        }
    }
    let n_ratios = spacings.len() - 1;
    Ok(GapRatio { mean: sum / n_ratios as f64, n_ratios, degenerate_pairs })
}

/// Eigenvalue of `Z ⊗ Z ⊗ ... ⊗ Z` on basis state `a`.
#[inline]
pub fn parity_of(a: usize) -> ParitySector {
    if a.count_ones() % 2 == 0 {
        ParitySector::Even
    } else {
        ParitySector::Odd
    }
}

pub fn sector_indices(dim: usize, sector: ParitySector) -> Vec<usize> {
    (0..dim).filter(|&a| parity_of(a) == sector).collect()
}

/// Restricts `h` to one eigenspace of the all-Z parity operator.
pub fn parity_project(h: &Mat<C64>, sector: ParitySector) -> Result<Mat<C64>> {
    let dim = h.nrows();
    if !dim.is_power_of_two() || dim != h.ncols() {
        return Err(Error::DimensionMismatch { expected: dim.next_power_of_two(), found: dim });
    }
    // [P, h] = 0 iff h has no entries between sectors
    let mut leak = 0.0f64;
    for j in 0..dim {
        for i in 0..dim {
            if parity_of(i) != parity_of(j) {
                leak = leak.max(h[(i, j)].norm());
            }
        }
    }
    if leak > PARITY_TOL {
        return Err(Error::ParityNotConserved(leak));
    }
    let idx = sector_indices(dim, sector);
    Ok(Mat::from_fn(idx.len(), idx.len(), |r, c| h[(idx[r], idx[c])]))
}

/// Which levels enter a level-spacing statistic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelSelection {
    FullSpectrum,
    Sector(ParitySector),
}

/// `⟨r⟩` of a single-side Hamiltonian under an explicit level selection.
pub fn level_spacing(h_single: &Mat<C64>, selection: LevelSelection) -> Result<GapRatio> {
    match selection {
        LevelSelection::FullSpectrum => gap_ratio(&eigenvalues(h_single)?),
        LevelSelection::Sector(s) => gap_ratio(&eigenvalues(&parity_project(h_single, s)?)?),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryClass {
    Goe,
    Gue,
    Gse,
}

impl SymmetryClass {
    /// Bott-periodic class of the `q = 4` SYK model with `N` Majoranas.
    pub fn for_syk(n_majorana: usize) -> Self {
        match n_majorana % 8 {
            0 => SymmetryClass::Goe,
            4 => SymmetryClass::Gse,
            _ => SymmetryClass::Gue,
        }
    }

    pub fn reference_ratio(self) -> f64 {
        match self {
            SymmetryClass::Goe => R_GOE,
            SymmetryClass::Gue => R_GUE,
            SymmetryClass::Gse => R_GSE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChaosClass {
    #[serde(rename = "GUE")]
    Gue,
    #[serde(rename = "GOE")]
    Goe,
    #[serde(rename = "GSE")]
    Gse,
    #[serde(rename = "transitional")]
    Transitional,
    #[serde(rename = "Poisson-like")]
    PoissonLike,
    #[serde(rename = "sub-Poisson")]
    SubPoisson,
}

impl std::fmt::Display for ChaosClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ChaosClass::Gue => "GUE",
            ChaosClass::Goe => "GOE",
            ChaosClass::Gse => "GSE",
            ChaosClass::Transitional => "transitional",
            ChaosClass::PoissonLike => "Poisson-like",
            ChaosClass::SubPoisson => "sub-Poisson",
        })
    }
}

/// Labels a mean gap ratio. Without a declared class the chaotic label is
/// GUE.
pub fn classify(mean_r: f64, declared: Option<SymmetryClass>) -> Result<ChaosClass> {
    if !(0.0..=1.0).contains(&mean_r) {
        return Err(Error::RatioOutOfRange(mean_r));
    }
    let (threshold, label) = match declared.unwrap_or(SymmetryClass::Gue) {
        SymmetryClass::Gue => (GUE_THRESHOLD, ChaosClass::Gue),
        SymmetryClass::Goe => (GOE_THRESHOLD, ChaosClass::Goe),
        SymmetryClass::Gse => (GSE_THRESHOLD, ChaosClass::Gse),
    };
    Ok(if mean_r >= threshold {
        label
    } else if mean_r >= TRANSITIONAL_THRESHOLD {
        ChaosClass::Transitional
    } else if mean_r >= R_POISSON {
        ChaosClass::PoissonLike
    } else {
        ChaosClass::SubPoisson
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{adjoint_mul, frobenius_distance, frobenius_norm, mul};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_hermitian(n: usize, seed: u64) -> Mat<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Mat::<C64>::from_fn(n, n, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
    }

    #[test]
    fn pauli_z_spectrum() {
        let z = Mat::<C64>::from_fn(2, 2, |i, j| {
            if i != j {
                C64::new(0.0, 0.0)
            } else if i == 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(-1.0, 0.0)
            }
        });
        let s = diagonalize(&z).unwrap();
        assert_eq!(s.eigenvalues, vec![-1.0, 1.0]);
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let h = random_hermitian(64, 1);
        let s = diagonalize(&h).unwrap();
        let v = s.eigenvectors().unwrap();
        let lam = Mat::<C64>::from_fn(64, 64, |i, j| {
            if i == j {
                C64::new(s.eigenvalues[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let rec = crate::linalg::mul_adjoint(mul(v.as_ref(), lam.as_ref()).as_ref(), v.as_ref());
        assert!(frobenius_distance(rec.as_ref(), h.as_ref()) <= 1e-10 * frobenius_norm(h.as_ref()));
        let g = adjoint_mul(v.as_ref(), v.as_ref());
        let id = Mat::<C64>::identity(64, 64);
        assert!(frobenius_distance(g.as_ref(), id.as_ref()) < 1e-10);
        assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut h = random_hermitian(4, 2);
        h[(0, 1)] += C64::new(1e-6, 0.0);
        assert!(matches!(diagonalize(&h), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn gap_ratio_examples() {
        assert_eq!(gap_ratio(&[0.0, 1.0, 2.0, 3.0]).unwrap().mean, 1.0);
        assert_eq!(gap_ratio(&[0.0, 1.0, 3.0]).unwrap().mean, 0.5);
        assert_eq!(gap_ratio(&[0.0, 1.0]), Err(Error::TooFewLevels(2)));
        let degenerate = gap_ratio(&[1.0, 1.0, 1.0, 2.0]).unwrap();
        assert!(degenerate.flagged());
        assert_eq!(degenerate.mean, 0.5);
    }

    #[test]
    fn synthetic_gue_and_poisson() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut gue = 0.0;
        let mut poisson = 0.0;
        for k in 0..200 {
            let h = random_hermitian(256, 1000 + k);
            gue += gap_ratio(&eigenvalues(&h).unwrap()).unwrap().mean;
            let mut levels: Vec<f64> = (0..256).map(|_| rng.random::<f64>()).collect();
            levels.sort_by(f64::total_cmp);
            poisson += gap_ratio(&levels).unwrap().mean;
        }
        let (gue, poisson) = (gue / 200.0, poisson / 200.0);
        assert!((gue - R_GUE).abs() < 0.01, "GUE {gue}");
        assert!((poisson - R_POISSON).abs() < 0.01, "Poisson {poisson}");
    }

    #[test]
    fn parity_projection_of_zz() {
        let zz = crate::pauli::PauliString::from_label("ZZ").unwrap().to_dense().unwrap();
        let even = parity_project(&zz, ParitySector::Even).unwrap();
        assert_eq!(even.nrows(), 2);
        assert_eq!(even[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(even[(1, 1)], C64::new(1.0, 0.0));
        let odd = parity_project(&zz, ParitySector::Odd).unwrap();
        assert_eq!(odd[(0, 0)], C64::new(-1.0, 0.0));
        let x = crate::pauli::PauliString::from_label("XI").unwrap().to_dense().unwrap();
        assert!(matches!(
            parity_project(&x, ParitySector::Even),
            Err(Error::ParityNotConserved(_))
        ));
    }

    #[test]
    fn sectors_merge_to_full_spectrum() {
        let c = crate::syk::sample_couplings(10, 1.0, 4).unwrap();
        let h = crate::syk::build_single_side(&c).unwrap();
        let mut merged = eigenvalues(&parity_project(&h, ParitySector::Even).unwrap()).unwrap();
        merged.extend(eigenvalues(&parity_project(&h, ParitySector::Odd).unwrap()).unwrap());
        merged.sort_by(f64::total_cmp);
        let full = eigenvalues(&h).unwrap();
        assert_eq!(merged.len(), 32);
        for (a, b) in merged.iter().zip(&full) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn classification() {
        assert_eq!(classify(0.603, None).unwrap(), ChaosClass::Gue);
        assert_eq!(classify(0.386, None).unwrap(), ChaosClass::PoissonLike);
        assert_eq!(classify(0.256, None).unwrap(), ChaosClass::SubPoisson);
        assert_eq!(classify(0.46, None).unwrap(), ChaosClass::Transitional);
        assert_eq!(classify(0.528, Some(SymmetryClass::Goe)).unwrap(), ChaosClass::Goe);
        assert_eq!(classify(0.515, Some(SymmetryClass::Goe)).unwrap(), ChaosClass::Transitional);
        assert_eq!(classify(0.672, Some(SymmetryClass::Gse)).unwrap(), ChaosClass::Gse);
        assert!(classify(1.2, None).is_err());
        assert_eq!(SymmetryClass::for_syk(10), SymmetryClass::Gue);
        assert_eq!(SymmetryClass::for_syk(20), SymmetryClass::Gse);
        assert_eq!(SymmetryClass::for_syk(24), SymmetryClass::Goe);
    }

    proptest! {
        #[test]
        fn gap_ratio_affine_invariant(
            gaps in prop::collection::vec(0.1f64..1.0, 3..40),
            a in 0.5f64..10.0,
            b in -5.0f64..5.0,
        ) {
            let levels: Vec<f64> = gaps
                .iter()
                .scan(0.0, |acc, g| {
                    *acc += g;
                    Some(*acc)
                })
                .collect();
            let r0 = gap_ratio(&levels).unwrap().mean;
            let scaled: Vec<f64> = levels.iter().map(|e| a * e + b).collect();
            let r1 = gap_ratio(&scaled).unwrap().mean;
            prop_assert!((r0 - r1).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&r0));
        }
    }
}
