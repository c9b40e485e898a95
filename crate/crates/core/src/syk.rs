//! Sparse SYK coupling tensors and the single-side / doubled Hamiltonians.
//!
//! Couplings are sampled in lexicographic order over `i < j < k < l`. For each
//! candidate the stream yields one standard normal and then one uniform; the
//! coupling survives when the uniform falls below `p` and its value is the
//! normal scaled to variance `6 / (p N^3)`. Both draws are consumed for every
//! candidate, so one seed fixes the full dense draw and lowering `p` only
//! deletes couplings (and rescales survivors) on top of it.

use std::fmt::Write as _;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, kron_identity_left, kron_identity_right};
use crate::pauli::{jw_majorana, OperatorSum, PauliString};
use crate::C64;

/// Largest `N` for which the doubled Hamiltonian is materialized densely.
pub const MAX_DENSE_DOUBLED_N: usize = 14;

/// Ensemble variance of a surviving coupling, `6 J^2 / (p N^3)` with `J = 1`.
pub fn coupling_variance(n_majorana: usize, sparsity: f64) -> f64 {
    6.0 / (sparsity * (n_majorana as f64).powi(3))
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i as u64 + 1))
}

fn check_params(n_majorana: usize, sparsity: f64) -> Result<()> {
    if n_majorana < 4 || n_majorana % 2 != 0 {
        return Err(Error::InvalidMajoranaCount(n_majorana));
    }
    if !(sparsity > 0.0 && sparsity <= 1.0) {
        return Err(Error::InvalidSparsity(sparsity));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingTensor {
    n_majorana: usize,
    entries: Vec<([usize; 4], f64)>,
    sparsity: f64,
    seed: u64,
    variance_target: f64,
}

impl CouplingTensor {
    /// Builds a tensor from explicit entries. Keys must be strictly
    /// increasing 4-tuples below `n_majorana`; they are sorted on entry.
    pub fn from_entries(
        n_majorana: usize,
        sparsity: f64,
        seed: u64,
        mut entries: Vec<([usize; 4], f64)>,
    ) -> Result<Self> {
        check_params(n_majorana, sparsity)?;
        for (key, _) in &entries {
            if !(key[0] < key[1] && key[1] < key[2] && key[2] < key[3] && key[3] < n_majorana) {
                return Err(Error::Invalid(format!("bad coupling index {key:?}")));
            }
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Invalid("duplicate coupling index".into()));
        }
        Ok(Self {
            n_majorana,
            entries,
            sparsity,
            seed,
            variance_target: coupling_variance(n_majorana, sparsity),
        })
    }

    pub fn n_majorana(&self) -> usize {
        self.n_majorana
    }

    pub fn n_qubits(&self) -> usize {
        self.n_majorana / 2
    }

    pub fn entries(&self) -> &[([usize; 4], f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sparsity(&self) -> f64 {
        self.sparsity
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn variance_target(&self) -> f64 {
        self.variance_target
    }

    pub fn candidate_count(&self) -> u64 {
        binomial(self.n_majorana, 4)
    }

    /// Deterministic text dump: a header line, then `i j k l value` rows in
    /// lexicographic order.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# N {} p {} seed {} variance_target {}\n",
            self.n_majorana, self.sparsity, self.seed, self.variance_target
        );
        for ([i, j, k, l], v) in &self.entries {
            let _ = writeln!(s, "{i} {j} {k} {l} {v}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty coupling file".into()))?;
        let fields: Vec<&str> = header.trim_start_matches('#').split_whitespace().collect();
        let lookup = |name: &str| -> Result<&str> {
            fields
                .iter()
                .position(|f| *f == name)
                .and_then(|i| fields.get(i + 1).copied())
                .ok_or_else(|| Error::Parse(format!("header missing {name}")))
        };
        let parse_err = |e: &dyn std::fmt::Display| Error::Parse(e.to_string());
        let n: usize = lookup("N")?.parse().map_err(|e| parse_err(&e))?;
        let p: f64 = lookup("p")?.parse().map_err(|e| parse_err(&e))?;
        let seed: u64 = lookup("seed")?.parse().map_err(|e| parse_err(&e))?;
        let mut entries = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 5 {
                return Err(Error::Parse(format!("bad coupling row {line:?}")));
            }
            let mut key = [0usize; 4];
            for (slot, c) in key.iter_mut().zip(&cols[..4]) {
                *slot = c.parse().map_err(|e| parse_err(&e))?;
            }
            let v: f64 = cols[4].parse().map_err(|e| parse_err(&e))?;
            entries.push((key, v));
        }
        Self::from_entries(n, p, seed, entries)
    }
}

/// Samples a sparse SYK coupling tensor; see the module docs for the stream
/// layout.
pub fn sample_couplings(n_majorana: usize, sparsity: f64, seed: u64) -> Result<CouplingTensor> {
    check_params(n_majorana, sparsity)?;
    let variance_target = coupling_variance(n_majorana, sparsity);
    let scale = variance_target.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_majorana;
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    let g: f64 = rng.sample(StandardNormal);
                    let u: f64 = rng.random();
                    if u < sparsity {
                        entries.push(([i, j, k, l], g * scale));
                    }
                }
            }
        }
    }
    Ok(CouplingTensor { n_majorana, entries, sparsity, seed, variance_target })
}

/// `H = -(1/4!) Σ J_ijkl ψ_i ψ_j ψ_k ψ_l` as a Pauli sum on `N/2` qubits.
pub fn single_side_operator(c: &CouplingTensor) -> Result<OperatorSum> {
    let nq = c.n_qubits();
    let majoranas: Vec<PauliString> =
        (0..c.n_majorana).map(|j| jw_majorana(j, nq)).collect::<Result<_>>()?;
    let mut h = OperatorSum::new(nq)?;
    for (idx, value) in &c.entries {
        let string = idx.iter().map(|&m| majoranas[m]).reduce(|a, b| a * b).expect("four factors");
        h.add(C64::new(-value / 24.0, 0.0), &string)?;
    }
    Ok(h)
}

pub fn build_single_side(c: &CouplingTensor) -> Result<Mat<C64>> {
    single_side_operator(c)?.to_dense()
}

/// Left Majoranas: JW indices `0..N` on the `N`-qubit doubled chain.
pub fn left_majoranas(n_majorana: usize) -> Result<Vec<PauliString>> {
    (0..n_majorana).map(|j| jw_majorana(j, n_majorana)).collect()
}

/// Right Majoranas: JW indices `N..2N` on the same chain, so each carries a Z
/// string through every left qubit.
pub fn right_majoranas(n_majorana: usize) -> Result<Vec<PauliString>> {
    (0..n_majorana).map(|j| jw_majorana(n_majorana + j, n_majorana)).collect()
}

/// `H_int = i μ Σ_j ψ_j^L ψ_j^R` on the doubled register.
pub fn interaction_operator(n_majorana: usize, mu: f64) -> Result<OperatorSum> {
    if n_majorana < 2 || n_majorana % 2 != 0 {
        return Err(Error::InvalidMajoranaCount(n_majorana));
    }
    let left = left_majoranas(n_majorana)?;
    let right = right_majoranas(n_majorana)?;
    let mut h = OperatorSum::new(n_majorana)?;
    for (l, r) in left.iter().zip(&right) {
        h.add(C64::new(0.0, mu), &l.multiply(r)?)?;
    }
    Ok(h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuildMode {
    Dense,
    MatrixFree,
}

/// Two copies of one SYK realization coupled by `H_int`.
#[derive(Clone, Debug)]
pub struct DoubledSystem {
    n_majorana: usize,
    mu: f64,
    couplings: CouplingTensor,
    h_single: Mat<C64>,
    majorana_left: Vec<PauliString>,
    majorana_right: Vec<PauliString>,
    h_int: OperatorSum,
    h_full: Option<Mat<C64>>,
}

impl DoubledSystem {
    pub fn n_majorana(&self) -> usize {
        self.n_majorana
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn couplings(&self) -> &CouplingTensor {
        &self.couplings
    }

    /// Single-side dimension `2^{N/2}`.
    pub fn dim_single(&self) -> usize {
        1 << (self.n_majorana / 2)
    }

    /// Doubled dimension `2^N`.
    pub fn dim(&self) -> usize {
        1 << self.n_majorana
    }

    pub fn h_single(&self) -> &Mat<C64> {
        &self.h_single
    }

    /// `H_L` restricted to the left factor; identical to [`Self::h_right`].
    pub fn h_left(&self) -> &Mat<C64> {
        &self.h_single
    }

    pub fn h_right(&self) -> &Mat<C64> {
        &self.h_single
    }

    pub fn majorana_left(&self) -> &[PauliString] {
        &self.majorana_left
    }

    pub fn majorana_right(&self) -> &[PauliString] {
        &self.majorana_right
    }

    pub fn h_int(&self) -> &OperatorSum {
        &self.h_int
    }

    pub fn h_full(&self) -> Option<&Mat<C64>> {
        self.h_full.as_ref()
    }
}

/// Assembles `H = H_L + H_R + H_int` and symmetrizes it. In
/// [`BuildMode::MatrixFree`] the dense doubled matrix is skipped.
pub fn build_doubled(c: &CouplingTensor, mu: f64, mode: BuildMode) -> Result<DoubledSystem> {
    let n = c.n_majorana();
    if mode == BuildMode::Dense && n > MAX_DENSE_DOUBLED_N {
        return Err(Error::DenseTooLarge(n));
    }
    let h_single = build_single_side(c)?;
    let h_int = interaction_operator(n, mu)?;
    let h_full = match mode {
        BuildMode::MatrixFree => None,
        BuildMode::Dense => {
            let ds = h_single.nrows();
            let mut h = kron_identity_right(h_single.as_ref(), ds);
            h += kron_identity_left(ds, h_single.as_ref());
            h += h_int.to_dense()?;
            linalg::symmetrize(&mut h);
            Some(h)
        }
    };
    Ok(DoubledSystem {
        n_majorana: n,
        mu,
        couplings: c.clone(),
        h_single,
        majorana_left: left_majoranas(n)?,
        majorana_right: right_majoranas(n)?,
        h_int,
        h_full,
    })
}
