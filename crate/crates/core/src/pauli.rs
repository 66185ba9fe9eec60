//! Pauli-group algebra on up to [`MAX_QUBITS`] qubits.
//!
//! A [`PauliString`] is the phase-free representative stored as two bit
//! masks: bit `q` of `x_mask` / `z_mask` is set when qubit `q` carries an
//! X / Z component (Y sets both). Text form is a string over `IXYZ` with the
//! leftmost character on qubit 0.
//!
//! ## Ordering
//!
//! Every vector or matrix indexed by Paulis uses the same order: the text
//! form compared lexicographically with `I < X < Y < Z`, qubit 0 most
//! significant. On one qubit this is `I, X, Y, Z`; on two it is
//! `II, IX, IY, IZ, XI, …, ZZ`. [`PauliString::index`] and
//! [`PauliString::from_index`] convert between the two.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 12;

/// Single-qubit Pauli label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    I,
    X,
    Y,
    Z,
}

impl Op {
    fn from_bits(x: bool, z: bool) -> Op {
        match (x, z) {
            (false, false) => Op::I,
            (true, false) => Op::X,
            (true, true) => Op::Y,
            (false, true) => Op::Z,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Op::I => (false, false),
            Op::X => (true, false),
            Op::Y => (true, true),
            Op::Z => (false, true),
        }
    }

    /// Position in the `I, X, Y, Z` order.
    fn digit(self) -> usize {
        match self {
            Op::I => 0,
            Op::X => 1,
            Op::Y => 2,
            Op::Z => 3,
        }
    }

    fn from_digit(d: usize) -> Op {
        [Op::I, Op::X, Op::Y, Op::Z][d & 3]
    }

    pub fn as_char(self) -> char {
        match self {
            Op::I => 'I',
            Op::X => 'X',
            Op::Y => 'Y',
            Op::Z => 'Z',
        }
    }
}

/// Phase-free n-qubit Pauli operator.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: u8,
    x: u16,
    z: u16,
}

impl PauliString {
    pub fn new(n: usize, x_mask: u16, z_mask: u16) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::InvalidPauli(format!("qubit count {n} outside 1..={MAX_QUBITS}")));
        }
        let valid = ((1u32 << n) - 1) as u16;
        if x_mask & !valid != 0 || z_mask & !valid != 0 {
            return Err(Error::InvalidPauli(format!(
                "masks {x_mask:#b}/{z_mask:#b} set bits beyond qubit {n}"
            )));
        }
        Ok(Self { n: n as u8, x: x_mask, z: z_mask })
    }

    pub fn identity(n: usize) -> Self {
        assert!((1..=MAX_QUBITS).contains(&n), "qubit count {n} outside 1..={MAX_QUBITS}");
        Self { n: n as u8, x: 0, z: 0 }
    }

    /// `op` on qubit `q`, identity elsewhere.
    pub fn single(n: usize, q: usize, op: Op) -> Self {
        assert!(q < n, "qubit {q} out of range for {n} qubits");
        let (x, z) = op.bits();
        let mut p = Self::identity(n);
        p.x = (x as u16) << q;
        p.z = (z as u16) << q;
        p
    }

    pub fn from_ops(ops: &[Op]) -> Result<Self> {
        let mut p = Self::new(ops.len(), 0, 0)?;
        for (q, op) in ops.iter().enumerate() {
            let (x, z) = op.bits();
            p.x |= (x as u16) << q;
            p.z |= (z as u16) << q;
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn x_mask(&self) -> u16 {
        self.x
    }

    pub fn z_mask(&self) -> u16 {
        self.z
    }

    pub fn op(&self, q: usize) -> Op {
        Op::from_bits(self.x >> q & 1 == 1, self.z >> q & 1 == 1)
    }

    pub fn support_mask(&self) -> u16 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support_mask().count_ones() as usize
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n()).filter(|&q| self.support_mask() >> q & 1 == 1).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Number of Y factors.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Symplectic commutation test. Both operands must have the same `n`.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        debug_assert_eq!(self.n, other.n);
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// The commutation sign as a float: `+1.0` or `-1.0`.
    pub fn chi(&self, other: &PauliString) -> f64 {
        if self.commutes_with(other) {
            1.0
        } else {
            -1.0
        }
    }

    /// Phase-free product (XOR of masks).
    pub fn xor(&self, other: &PauliString) -> PauliString {
        debug_assert_eq!(self.n, other.n);
        PauliString { n: self.n, x: self.x ^ other.x, z: self.z ^ other.z }
    }

    /// Operator product `self · other = i^k R`; returns `(R, Phase(k))`.
    pub fn mul_with_phase(&self, other: &PauliString) -> (PauliString, Phase) {
        debug_assert_eq!(self.n, other.n);
        // With P = i^{|x∧z|} X^x Z^z, the product picks up (-1)^{z_a·x_b}.
        let ya = (self.x & self.z).count_ones() as i32;
        let yb = (other.x & other.z).count_ones() as i32;
        let r = self.xor(other);
        let yr = (r.x & r.z).count_ones() as i32;
        let swap = (self.z & other.x).count_ones() as i32;
        let k = (ya + yb - yr + 2 * swap).rem_euclid(4);
        (r, Phase(k as u8))
    }

    /// Index in the fixed ordering (see module docs).
    pub fn index(&self) -> usize {
        (0..self.n()).fold(0, |acc, q| acc * 4 + self.op(q).digit())
    }

    pub fn from_index(n: usize, index: usize) -> PauliString {
        assert!(index < 1usize << (2 * n), "index {index} out of range for {n} qubits");
        let mut p = Self::identity(n);
        let mut rem = index;
        for q in (0..n).rev() {
            let (x, z) = Op::from_digit(rem & 3).bits();
            p.x |= (x as u16) << q;
            p.z |= (z as u16) << q;
            rem >>= 2;
        }
        p
    }

    /// Restrict to the listed qubits, in list order, producing a
    /// `positions.len()`-qubit Pauli.
    pub fn restrict(&self, positions: &[usize]) -> PauliString {
        let mut p = Self::identity(positions.len());
        for (i, &q) in positions.iter().enumerate() {
            p.x |= (self.x >> q & 1) << i;
            p.z |= (self.z >> q & 1) << i;
        }
        p
    }

    /// Inverse of [`restrict`](Self::restrict): place local qubit `i` at `positions[i]`
    /// of an `n`-qubit register.
    pub fn embed(&self, n: usize, positions: &[usize]) -> PauliString {
        assert_eq!(positions.len(), self.n());
        let mut p = Self::identity(n);
        for (i, &q) in positions.iter().enumerate() {
            p.x |= (self.x >> i & 1) << q;
            p.z |= (self.z >> i & 1) << q;
        }
        p
    }

    /// Dense `2^n × 2^n` matrix; qubit 0 is the leftmost tensor factor.
    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let d = 1usize << self.n();
        let mut m = DMatrix::zeros(d, d);
        for col in 0..d {
            let (row, v) = self.column_entry(col);
            m[(row, col)] = v;
        }
        m
    }

    /// The single non-zero entry in column `col` of the dense matrix.
    pub fn column_entry(&self, col: usize) -> (usize, Complex64) {
        let n = self.n();
        let xb = basis_bits(self.x, n);
        let zb = basis_bits(self.z, n);
        let row = col ^ xb;
        // Y = i X Z; Z contributes (-1)^{bit} of the input state.
        let sign = if (zb & col).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        let v = Phase((self.y_count() % 4) as u8).to_complex() * sign;
        (row, v)
    }
}

/// Reverse the qubit mask into basis-index bit order (qubit 0 = MSB).
fn basis_bits(mask: u16, n: usize) -> usize {
    (0..n).filter(|&q| mask >> q & 1 == 1).map(|q| 1usize << (n - 1 - q)).sum()
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n() {
            write!(f, "{}", self.op(q).as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ops = s
            .trim()
            .chars()
            .map(|c| match c {
                'I' => Ok(Op::I),
                'X' => Ok(Op::X),
                'Y' => Ok(Op::Y),
                'Z' => Ok(Op::Z),
                _ => Err(Error::InvalidPauli(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        if ops.is_empty() {
            return Err(Error::InvalidPauli(s.to_string()));
        }
        Self::from_ops(&ops)
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.n.cmp(&other.n).then(self.index().cmp(&other.index()))
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Power of `i`: `Phase(k)` is `i^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn new(k: i32) -> Phase {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn conj(self) -> Phase {
        Phase((4 - self.0) % 4)
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// A Pauli operator with a fourth-root-of-unity phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SignedPauli {
    pub pauli: PauliString,
    pub phase: Phase,
}

impl SignedPauli {
    pub fn new(pauli: PauliString, phase: Phase) -> Self {
        Self { pauli, phase }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(PauliString::identity(n), Phase::ONE)
    }

    pub fn n(&self) -> usize {
        self.pauli.n()
    }

    /// Product `self · other`, panicking on a dimension mismatch.
    pub fn mul(&self, other: &SignedPauli) -> SignedPauli {
        let (p, k) = self.pauli.mul_with_phase(&other.pauli);
        SignedPauli::new(p, self.phase * other.phase * k)
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        self.pauli.to_matrix() * self.phase.to_complex()
    }
}

impl From<PauliString> for SignedPauli {
    fn from(p: PauliString) -> Self {
        SignedPauli::new(p, Phase::ONE)
    }
}

impl fmt::Display for SignedPauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = ["+", "+i", "-", "-i"][self.phase.0 as usize];
        write!(f, "{prefix}{}", self.pauli)
    }
}

/// Commutation sign `χ_{P,Q}`: `+1` when `P` and `Q` commute, `-1` otherwise.
pub fn commutes(p: &PauliString, q: &PauliString) -> Result<i8> {
    if p.n != q.n {
        return Err(Error::DimensionMismatch(p.n(), q.n()));
    }
    Ok(if p.commutes_with(q) { 1 } else { -1 })
}

/// Signed Pauli product with phase tracking.
pub fn multiply(p: &SignedPauli, q: &SignedPauli) -> Result<SignedPauli> {
    if p.n() != q.n() {
        return Err(Error::DimensionMismatch(p.n(), q.n()));
    }
    Ok(p.mul(q))
}

/// All `4^n` Paulis on `n` qubits in the fixed ordering.
pub fn all_paulis(n: usize) -> impl Iterator<Item = PauliString> {
    (0..1usize << (2 * n)).map(move |i| PauliString::from_index(n, i))
}

/// Unnormalized ±1 transform `out[Q] = Σ_P χ_{P,Q} v[P]` over a vector in
/// the fixed ordering. Applying it twice multiplies by `4^w`.
pub fn commutation_transform(v: &[f64]) -> Vec<f64> {
    let w = width_of(v.len()).expect("length must be a power of four");
    // χ factorizes over qubits, so apply the 4×4 kernel one qubit at a time.
    const K: [[f64; 4]; 4] = [
        [1.0, 1.0, 1.0, 1.0],
        [1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, 1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
    ];
    let mut out = v.to_vec();
    for q in 0..w {
        let stride = 1usize << (2 * (w - 1 - q));
        let block = stride * 4;
        for base in (0..out.len()).step_by(block) {
            for off in 0..stride {
                let idx = |d: usize| base + d * stride + off;
                let a = [out[idx(0)], out[idx(1)], out[idx(2)], out[idx(3)]];
                for (d, row) in K.iter().enumerate() {
                    out[idx(d)] = row.iter().zip(&a).map(|(k, x)| k * x).sum();
                }
            }
        }
    }
    out
}

/// Fidelity vector → error-probability vector: `e(Q) = 4^{-w} Σ_P χ_{P,Q} f(P)`.
pub fn walsh_hadamard_vec(f: &[f64]) -> Vec<f64> {
    let scale = 1.0 / f.len() as f64;
    commutation_transform(f).into_iter().map(|v| v * scale).collect()
}

/// Probability vector → fidelity vector (the inverse transform).
pub fn inverse_walsh_hadamard_vec(p: &[f64]) -> Vec<f64> {
    commutation_transform(p)
}

/// Map form of [`walsh_hadamard_vec`]. Every Pauli on `w` qubits must be present.
pub fn walsh_hadamard(f: &HashMap<PauliString, f64>) -> Result<HashMap<PauliString, f64>> {
    let w = f
        .keys()
        .next()
        .map(|p| p.n())
        .ok_or(Error::IncompleteIndexSet { expected: 4, found: 0 })?;
    let expected = 1usize << (2 * w);
    let mut v = vec![f64::NAN; expected];
    for (p, &val) in f {
        if p.n() != w {
            return Err(Error::DimensionMismatch(w, p.n()));
        }
        v[p.index()] = val;
    }
    if f.len() != expected || v.iter().any(|x| x.is_nan()) {
        return Err(Error::IncompleteIndexSet { expected, found: f.len() });
    }
    Ok(walsh_hadamard_vec(&v)
        .into_iter()
        .enumerate()
        .map(|(i, e)| (PauliString::from_index(w, i), e))
        .collect())
}

/// Qubit count `w` for a vector of length `4^w`.
pub fn width_of(len: usize) -> Option<usize> {
    if len == 0 || !len.is_power_of_two() || len.trailing_zeros() % 2 != 0 {
        return None;
    }
    Some(len.trailing_zeros() as usize / 2)
}

/// Coefficients `c_Q = tr(Q M) / 2^w` of a dense `2^w × 2^w` matrix, in the
/// fixed ordering.
pub fn pauli_decompose(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let d = m.nrows();
    assert_eq!(d, m.ncols());
    assert!(d.is_power_of_two());
    let w = d.trailing_zeros() as usize;
    all_paulis(w)
        .map(|q| {
            // tr(Q M) = Σ_col Q[row, col] · M[col, row]
            let mut acc = Complex64::new(0.0, 0.0);
            for col in 0..d {
                let (row, v) = q.column_entry(col);
                acc += v * m[(col, row)];
            }
            acc / d as f64
        })
        .collect()
}
