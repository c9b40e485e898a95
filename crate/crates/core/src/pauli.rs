//! Symbolic Pauli-string algebra and the Jordan-Wigner Majorana map.
//!
//! A [`PauliString`] is stored canonically as `phase · X^x · Z^z`, where `x`
//! and `z` are bitmasks over qubits and `phase` is a power of `i`. Qubit 0 is
//! the slowest-varying Kronecker factor, so it owns the most significant bit
//! of a computational-basis index: qubit `q` of an `n`-qubit string maps to
//! bit `n - 1 - q`. With that layout a mask can be XOR-ed straight onto a
//! basis index.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;

use faer::Mat;

use crate::error::{Error, Result};
use crate::C64;

/// Largest register a symbolic string can address.
pub const MAX_QUBITS: usize = 64;

/// Largest register [`OperatorSum::to_dense`] will expand (2^14 rows).
pub const MAX_DENSE_QUBITS: usize = 14;

/// A unit phase `i^k`, stored as `k mod 4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: i64) -> Phase {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn conj(self) -> Phase {
        Phase((4 - self.0) % 4)
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn to_complex(self) -> C64 {
        match self.0 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }
}

impl Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        })
    }
}

/// Bit of a basis index that carries qubit `q` in an `n`-qubit register.
#[inline]
pub fn qubit_bit(n_qubits: usize, q: usize) -> u64 {
    1u64 << (n_qubits - 1 - q)
}

#[inline]
fn parity(bits: u64) -> bool {
    bits.count_ones() & 1 == 1
}

#[inline]
fn full_mask(n_qubits: usize) -> u64 {
    if n_qubits == 64 {
        u64::MAX
    } else {
        (1u64 << n_qubits) - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: usize,
    x_mask: u64,
    z_mask: u64,
    phase: Phase,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, 0, 0, Phase::ONE)
    }

    pub fn new(n_qubits: usize, x_mask: u64, z_mask: u64, phase: Phase) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Invalid(format!("unsupported qubit count {n_qubits}")));
        }
        let mask = full_mask(n_qubits);
        if x_mask & !mask != 0 || z_mask & !mask != 0 {
            return Err(Error::Invalid(format!(
                "mask addresses qubits beyond a {n_qubits}-qubit register"
            )));
        }
        Ok(Self { n_qubits, x_mask, z_mask, phase })
    }

    /// Parses a label such as `"ZXIY"`, one letter per qubit, with an
    /// optional leading `-`, `i` or `-i`. `Y` letters are taken literally, so
    /// `"Y"` is the Hermitian Pauli Y.
    pub fn from_label(label: &str) -> Result<Self> {
        let (mut phase, body) = if let Some(rest) = label.strip_prefix("-i") {
            (Phase::MINUS_I, rest)
        } else if let Some(rest) = label.strip_prefix('-') {
            (Phase::MINUS_ONE, rest)
        } else if let Some(rest) = label.strip_prefix('i') {
            (Phase::I, rest)
        } else {
            (Phase::ONE, label.strip_prefix('+').unwrap_or(label))
        };
        let n = body.chars().count();
        if n == 0 {
            return Err(Error::Parse(format!("empty Pauli label {label:?}")));
        }
        let (mut x, mut z) = (0u64, 0u64);
        for (q, c) in body.chars().enumerate() {
            let bit = qubit_bit(n, q);
            match c {
                'I' => {}
                'X' => x |= bit,
                'Z' => z |= bit,
                'Y' => {
                    x |= bit;
                    z |= bit;
                    // Y = i X Z
                    phase = phase * Phase::I;
                }
                other => return Err(Error::Parse(format!("bad Pauli letter {other:?}"))),
            }
        }
        Self::new(n, x, z, phase)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    /// Phase in the canonical `X^x Z^z` form.
    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn num_y(&self) -> u32 {
        (self.x_mask & self.z_mask).count_ones()
    }

    /// Phase when the string is written with literal `Y` letters.
    pub fn letter_phase(&self) -> Phase {
        self.phase * Phase::from_exponent(-(self.num_y() as i64))
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    pub fn is_hermitian(&self) -> bool {
        self.letter_phase().is_real()
    }

    pub fn letters(&self) -> String {
        (0..self.n_qubits)
            .map(|q| {
                let bit = qubit_bit(self.n_qubits, q);
                match (self.x_mask & bit != 0, self.z_mask & bit != 0) {
                    (false, false) => 'I',
                    (true, false) => 'X',
                    (false, true) => 'Z',
                    (true, true) => 'Y',
                }
            })
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        // (X^x Z^z)† = Z^z X^x = (-1)^{|x&z|} X^x Z^z
        let sign = if parity(self.x_mask & self.z_mask) {
            Phase::MINUS_ONE
        } else {
            Phase::ONE
        };
        Self { phase: self.phase.conj() * sign, ..*self }
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        !parity((self.x_mask & other.z_mask) ^ (self.z_mask & other.x_mask))
    }

    /// Exact product `self · other`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::QubitMismatch { left: self.n_qubits, right: other.n_qubits });
        }
        // X^a Z^b X^c Z^d = (-1)^{|b&c|} X^{a^c} Z^{b^d}
        let swap = if parity(self.z_mask & other.x_mask) {
            Phase::MINUS_ONE
        } else {
            Phase::ONE
        };
        Ok(Self {
            n_qubits: self.n_qubits,
            x_mask: self.x_mask ^ other.x_mask,
            z_mask: self.z_mask ^ other.z_mask,
            phase: self.phase * other.phase * swap,
        })
    }

    /// Column `col` of the matrix has a single non-zero entry, at row
    /// `col ^ x_mask`; this returns it.
    #[inline]
    pub fn column_entry(&self, col: usize) -> (usize, C64) {
        let value = if parity(self.z_mask & col as u64) {
            -self.phase.to_complex()
        } else {
            self.phase.to_complex()
        };
        (col ^ self.x_mask as usize, value)
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    /// `out = P v`. Both slices must have length `2^n_qubits`.
    pub fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        assert_eq!(v.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        let ph = self.phase.to_complex();
        let x = self.x_mask as usize;
        for (a, o) in out.iter_mut().enumerate() {
            let src = a ^ x;
            let val = v[src] * ph;
            *o = if parity(self.z_mask & src as u64) { -val } else { val };
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        self.apply_into(v, &mut out);
        out
    }

    /// Left-multiplies a dense matrix: returns `P · m`.
    pub fn left_mul(&self, m: &Mat<C64>) -> Mat<C64> {
        assert_eq!(m.nrows(), self.dim());
        let ph = self.phase.to_complex();
        let x = self.x_mask as usize;
        Mat::from_fn(m.nrows(), m.ncols(), |a, j| {
            let src = a ^ x;
            let val = m[(src, j)] * ph;
            if parity(self.z_mask & src as u64) {
                -val
            } else {
                val
            }
        })
    }

    pub fn to_dense(&self) -> Result<Mat<C64>> {
        let mut sum = OperatorSum::new(self.n_qubits)?;
        sum.add(C64::new(1.0, 0.0), self)?;
        sum.to_dense()
    }
}

impl Mul for PauliString {
    type Output = PauliString;

    /// Panics on mismatched registers; use [`PauliString::multiply`] for a
    /// checked product.
    fn mul(self, rhs: PauliString) -> PauliString {
        self.multiply(&rhs).expect("Pauli strings on different registers")
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.letter_phase(), self.letters())
    }
}

/// Majorana `ψ_j` (0-based) on an `n_qubits` Jordan-Wigner chain: a Z string
/// on qubits `0..k` followed by X (even `j`) or Y (odd `j`) on qubit
/// `k = j / 2`.
pub fn jw_majorana(j: usize, n_qubits: usize) -> Result<PauliString> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS || j >= 2 * n_qubits {
        return Err(Error::MajoranaIndex { index: j, n_qubits });
    }
    let k = j / 2;
    let z_string: u64 = (0..k).map(|q| qubit_bit(n_qubits, q)).sum();
    let site = qubit_bit(n_qubits, k);
    if j % 2 == 0 {
        PauliString::new(n_qubits, site, z_string, Phase::ONE)
    } else {
        // Z_{<k} Y_k = i X_k Z_{<=k}
        PauliString::new(n_qubits, site, z_string | site, Phase::I)
    }
}

/// A weighted sum of Pauli strings on a fixed register.
///
/// Terms are keyed by `(x_mask, z_mask)`; the string phase is folded into the
/// coefficient so that equal masks always merge.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSum {
    n_qubits: usize,
    terms: BTreeMap<(u64, u64), C64>,
}

impl OperatorSum {
    pub fn new(n_qubits: usize) -> Result<Self> {
        PauliString::identity(n_qubits)?;
        Ok(Self { n_qubits, terms: BTreeMap::new() })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&mut self, coeff: C64, string: &PauliString) -> Result<()> {
        if string.n_qubits != self.n_qubits {
            return Err(Error::QubitMismatch { left: self.n_qubits, right: string.n_qubits });
        }
        let key = (string.x_mask, string.z_mask);
        let c = coeff * string.phase.to_complex();
        let merged = self.terms.get(&key).copied().unwrap_or_default() + c;
        if merged == C64::new(0.0, 0.0) {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, merged);
        }
        Ok(())
    }

    pub fn extend(&mut self, other: &OperatorSum) -> Result<()> {
        for (c, s) in other.terms() {
            self.add(c, &s)?;
        }
        Ok(())
    }

    /// Terms as `(coefficient, string)` with every string at phase `+1`.
    pub fn terms(&self) -> impl Iterator<Item = (C64, PauliString)> + '_ {
        self.terms.iter().map(move |(&(x, z), &c)| {
            (c, PauliString { n_qubits: self.n_qubits, x_mask: x, z_mask: z, phase: Phase::ONE })
        })
    }

    /// Symbolic Hermiticity check on the merged coefficients.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.iter().all(|(&(x, z), &c)| {
            let adj = if parity(x & z) { -c.conj() } else { c.conj() };
            (adj - c).norm() <= tol
        })
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        self.apply_add(v, &mut out);
        out
    }

    /// `out += O v`, bit operations only.
    pub fn apply_add(&self, v: &[C64], out: &mut [C64]) {
        assert_eq!(v.len(), 1usize << self.n_qubits);
        assert_eq!(out.len(), v.len());
        for (&(x, z), &c) in &self.terms {
            let x = x as usize;
            for (a, o) in out.iter_mut().enumerate() {
                let src = a ^ x;
                let val = c * v[src];
                *o += if parity(z & src as u64) { -val } else { val };
            }
        }
    }

    /// Dense `2^n × 2^n` realization, qubit 0 as the leftmost Kronecker
    /// factor.
    pub fn to_dense(&self) -> Result<Mat<C64>> {
        if self.n_qubits > MAX_DENSE_QUBITS {
            return Err(Error::DenseTooLarge(self.n_qubits));
        }
        let dim = 1usize << self.n_qubits;
        let mut m = Mat::<C64>::zeros(dim, dim);
        for (c, s) in self.terms() {
            for col in 0..dim {
                let (row, v) = s.column_entry(col);
                m[(row, col)] += c * v;
            }
        }
        Ok(m)
    }
}
