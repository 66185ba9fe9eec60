//! Pauli-transfer-matrix arithmetic: exponentiation, composition, folding
//! with a hard cycle, twirling, and the truncated repeated-channel formulas.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::NoiseModel;
use crate::pauli::{all_paulis, pauli_decompose, Op, Phase, PauliString, SignedPauli};

/// Largest support (in qubits) a superoperator may span.
pub const MAX_SUPPORT: usize = 6;

/// Largest power tried when looking for a hard cycle's cyclicity.
pub const MAX_CYCLICITY: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Generator,
    Channel,
}

/// Real `4^w × 4^w` matrix in the Pauli basis over an ordered qubit support.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    support: Vec<usize>,
    matrix: DMatrix<f64>,
    kind: Kind,
}

impl Superoperator {
    pub fn generator(support: Vec<usize>, matrix: DMatrix<f64>) -> Self {
        Self::checked_shape(&support, &matrix);
        Self { support, matrix, kind: Kind::Generator }
    }

    pub fn channel(support: Vec<usize>, matrix: DMatrix<f64>) -> Self {
        Self::checked_shape(&support, &matrix);
        Self { support, matrix, kind: Kind::Channel }
    }

    fn checked_shape(support: &[usize], matrix: &DMatrix<f64>) {
        let dim = 1usize << (2 * support.len());
        assert_eq!(matrix.shape(), (dim, dim), "matrix shape does not match a {}-qubit support", support.len());
    }

    pub fn identity(support: Vec<usize>) -> Self {
        let dim = 1usize << (2 * support.len());
        Self::channel(support, DMatrix::identity(dim, dim))
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn width(&self) -> usize {
        self.support.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    /// Largest deviation of the identity row from `(1,0,…,0)` (channels)
    /// or from zero (generators).
    pub fn trace_defect(&self) -> f64 {
        let target = |j: usize| if self.kind == Kind::Channel && j == 0 { 1.0 } else { 0.0 };
        (0..self.matrix.ncols()).map(|j| (self.matrix[(0, j)] - target(j)).abs()).fold(0.0, f64::max)
    }

    pub fn check_trace_preserving(&self, tol: f64) -> Result<()> {
        let d = self.trace_defect();
        if d > tol {
            return Err(Error::NumericalIntegrity(format!("identity row deviates by {d:e}")));
        }
        Ok(())
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Superoperator) -> Result<Superoperator> {
        if self.support != other.support {
            return Err(Error::Config(format!(
                "cannot compose channels on supports {:?} and {:?}",
                self.support, other.support
            )));
        }
        Ok(Superoperator::channel(self.support.clone(), &self.matrix * &other.matrix))
    }

    /// Local Pauli for `p`, which may be given on the support width or on a
    /// global register that contains the support.
    fn local(&self, p: &PauliString) -> Result<PauliString> {
        if p.n() == self.width() {
            return Ok(*p);
        }
        let mask: u16 = self.support.iter().filter(|&&q| q < p.n()).fold(0, |m, &q| m | 1 << q);
        if self.support.iter().any(|&q| q >= p.n()) || p.support_mask() & !mask != 0 {
            return Err(Error::OffSupport { pauli: p.to_string() });
        }
        Ok(p.restrict(&self.support))
    }
}

/// `e^{tΛ}` by scaling and squaring with a truncated Taylor series.
pub fn exponentiate(gen: &Superoperator, t: f64) -> Result<Superoperator> {
    if gen.kind != Kind::Generator {
        return Err(Error::WrongKind { expected: "generator" });
    }
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    let a = &gen.matrix * t;
    let out = Superoperator::channel(gen.support.clone(), expm(&a));
    out.check_trace_preserving(1e-10)?;
    Ok(out)
}

/// Dense matrix exponential; Taylor terms are added until they fall below
/// 1e-12 relative to the running sum, after scaling the norm to ≤ 1/2.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a / 2f64.powi(squarings as i32);
    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=40 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if term.abs().max() < 1e-17 * sum.abs().max().max(1.0) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Diagonal PTM entry `tr(P E[P]) / 2^w`.
pub fn pauli_fidelity(e: &Superoperator, p: &PauliString) -> Result<f64> {
    if e.kind != Kind::Channel {
        return Err(Error::WrongKind { expected: "channel" });
    }
    let local = e.local(p)?;
    let i = local.index();
    Ok(e.matrix[(i, i)])
}

/// Pauli twirl: keep the PTM diagonal.
pub fn twirl(e: &Superoperator) -> Result<Superoperator> {
    if e.kind != Kind::Channel {
        return Err(Error::WrongKind { expected: "channel" });
    }
    let diag = e.matrix.diagonal();
    Ok(Superoperator::channel(e.support.clone(), DMatrix::from_diagonal(&diag)))
}

/// Images of the single-qubit generators under `U · U†`.
#[derive(Clone, Debug, PartialEq)]
struct Tableau {
    x_images: Vec<SignedPauli>,
    z_images: Vec<SignedPauli>,
}

impl Tableau {
    fn from_unitary(u: &DMatrix<Complex64>, w: usize) -> Option<Tableau> {
        let image = |p: PauliString| -> Option<SignedPauli> {
            let m = u * p.to_matrix() * u.adjoint();
            let coeffs = pauli_decompose(&m);
            let (idx, c) = coeffs.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))?;
            let phase = if (c - 1.0).norm() < 1e-9 {
                Phase::ONE
            } else if (c + 1.0).norm() < 1e-9 {
                Phase::MINUS_ONE
            } else {
                return None;
            };
            Some(SignedPauli::new(PauliString::from_index(w, idx), phase))
        };
        let mut x_images = Vec::with_capacity(w);
        let mut z_images = Vec::with_capacity(w);
        for q in 0..w {
            x_images.push(image(PauliString::single(w, q, Op::X))?);
            z_images.push(image(PauliString::single(w, q, Op::Z))?);
        }
        Some(Tableau { x_images, z_images })
    }

    /// `U P U†` for a signed Pauli `P`.
    fn conjugate(&self, p: &SignedPauli) -> SignedPauli {
        let w = p.n();
        // P = phase · i^{#Y} · Π_q X_q^{x_q} Z_q^{z_q}
        let mut out = SignedPauli::new(PauliString::identity(w), p.phase * Phase::new(p.pauli.y_count() as i32));
        for q in 0..w {
            match p.pauli.op(q) {
                Op::I => {}
                Op::X => out = out.mul(&self.x_images[q]),
                Op::Z => out = out.mul(&self.z_images[q]),
                Op::Y => out = out.mul(&self.x_images[q]).mul(&self.z_images[q]),
            }
        }
        out
    }
}

/// An ideal hard cycle on an ordered qubit support.
#[derive(Clone, Debug)]
pub struct HardCycle {
    support: Vec<usize>,
    unitary: DMatrix<Complex64>,
    ptm: Superoperator,
    cyclicity: usize,
    forward: Option<Tableau>,
    backward: Option<Tableau>,
}

impl HardCycle {
    pub fn new(support: Vec<usize>, unitary: DMatrix<Complex64>) -> Result<Self> {
        let w = support.len();
        if w == 0 {
            return Err(Error::Config("hard cycle needs at least one qubit".into()));
        }
        if w > MAX_SUPPORT {
            return Err(Error::SupportTooLarge { width: w, cap: MAX_SUPPORT });
        }
        let d = 1usize << w;
        if unitary.shape() != (d, d) {
            return Err(Error::Config(format!("unitary shape {:?} does not match {w} qubits", unitary.shape())));
        }
        let dev = (&unitary * unitary.adjoint() - DMatrix::<Complex64>::identity(d, d)).norm();
        if dev > 1e-9 {
            return Err(Error::Config(format!("hard-cycle matrix is not unitary (deviation {dev:e})")));
        }
        let forward = Tableau::from_unitary(&unitary, w);
        let backward = Tableau::from_unitary(&unitary.adjoint(), w);
        let dim = d * d;
        let mut ptm = DMatrix::zeros(dim, dim);
        match &forward {
            Some(tab) => {
                for p in all_paulis(w) {
                    let img = tab.conjugate(&p.into());
                    let sign = if img.phase == Phase::ONE { 1.0 } else { -1.0 };
                    ptm[(img.pauli.index(), p.index())] = sign;
                }
            }
            None => {
                for p in all_paulis(w) {
                    let m = &unitary * p.to_matrix() * unitary.adjoint();
                    for (i, c) in pauli_decompose(&m).into_iter().enumerate() {
                        ptm[(i, p.index())] = c.re;
                    }
                }
            }
        }
        let ptm = Superoperator::channel(support.clone(), ptm);
        let cyclicity = find_cyclicity(ptm.matrix())?;
        Ok(Self { support, unitary, ptm, cyclicity, forward, backward })
    }

    /// Product of named gates acting on positions of `support`.
    pub fn from_gates(support: Vec<usize>, gates: &[Gate]) -> Result<Self> {
        let w = support.len();
        let d = 1usize << w;
        let mut u = DMatrix::<Complex64>::identity(d, d);
        for g in gates {
            u = g.embedded(w)? * u;
        }
        Self::new(support, u)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn width(&self) -> usize {
        self.support.len()
    }

    pub fn unitary(&self) -> &DMatrix<Complex64> {
        &self.unitary
    }

    pub fn ptm(&self) -> &Superoperator {
        &self.ptm
    }

    pub fn cyclicity(&self) -> usize {
        self.cyclicity
    }

    pub fn is_clifford(&self) -> bool {
        self.forward.is_some()
    }

    /// `C P C†` for a Pauli on the cycle's width.
    pub fn conjugate(&self, p: &SignedPauli) -> Result<SignedPauli> {
        let tab = self.forward.as_ref().ok_or(Error::NotClifford)?;
        Ok(tab.conjugate(p))
    }

    /// `C† P C`.
    pub fn conjugate_inverse(&self, p: &SignedPauli) -> Result<SignedPauli> {
        let tab = self.backward.as_ref().ok_or(Error::NotClifford)?;
        Ok(tab.conjugate(p))
    }

    pub fn check_fold(&self, x: usize) -> Result<()> {
        if x == 0 || x % self.cyclicity != 1 % self.cyclicity {
            return Err(Error::FoldCongruence { x, cyclicity: self.cyclicity });
        }
        Ok(())
    }
}

fn find_cyclicity(ptm: &DMatrix<f64>) -> Result<usize> {
    let n = ptm.nrows();
    let identity = DMatrix::<f64>::identity(n, n);
    let mut power = ptm.clone();
    for c in 1..=MAX_CYCLICITY {
        if (&power - &identity).abs().max() < 1e-8 {
            return Ok(c);
        }
        power = ptm * power;
    }
    Err(Error::CyclicityNotFound(MAX_CYCLICITY))
}

/// Named gates for assembling hard cycles. Qubit indices are positions on
/// the cycle's support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub gate: String,
    pub qubits: Vec<usize>,
}

impl Gate {
    pub fn new(name: &str, qubits: &[usize]) -> Self {
        Self { gate: name.to_string(), qubits: qubits.to_vec() }
    }

    fn local_matrix(&self) -> Result<DMatrix<Complex64>> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let m = |d: usize, v: &[Complex64]| DMatrix::from_row_slice(d, d, v);
        let z0 = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        Ok(match self.gate.to_ascii_lowercase().as_str() {
            "id" | "i" => m(2, &[one, z0, z0, one]),
            "x" => m(2, &[z0, one, one, z0]),
            "y" => m(2, &[z0, c(0.0, -1.0), c(0.0, 1.0), z0]),
            "z" => m(2, &[one, z0, z0, c(-1.0, 0.0)]),
            "h" => m(2, &[c(r, 0.0), c(r, 0.0), c(r, 0.0), c(-r, 0.0)]),
            "s" => m(2, &[one, z0, z0, c(0.0, 1.0)]),
            "sdg" => m(2, &[one, z0, z0, c(0.0, -1.0)]),
            "sx" => m(2, &[c(0.5, 0.5), c(0.5, -0.5), c(0.5, -0.5), c(0.5, 0.5)]),
            "t" => m(2, &[one, z0, z0, c(r, r)]),
            "cx" | "cnot" => m(4, &[one, z0, z0, z0, z0, one, z0, z0, z0, z0, z0, one, z0, z0, one, z0]),
            "cz" => m(4, &[one, z0, z0, z0, z0, one, z0, z0, z0, z0, one, z0, z0, z0, z0, c(-1.0, 0.0)]),
            "swap" => m(4, &[one, z0, z0, z0, z0, z0, one, z0, z0, one, z0, z0, z0, z0, z0, one]),
            other => return Err(Error::Config(format!("unknown gate {other:?}"))),
        })
    }

    /// Full `2^w × 2^w` matrix with qubit 0 as the leftmost tensor factor.
    pub fn embedded(&self, w: usize) -> Result<DMatrix<Complex64>> {
        let local = self.local_matrix()?;
        let k = self.qubits.len();
        if local.nrows() != 1 << k {
            return Err(Error::Config(format!("gate {} expects {} qubits", self.gate, local.nrows().trailing_zeros())));
        }
        if self.qubits.iter().any(|&q| q >= w) {
            return Err(Error::Config(format!("gate {} targets a qubit outside the cycle support", self.gate)));
        }
        let mut seen = 0u32;
        for &q in &self.qubits {
            if seen >> q & 1 == 1 {
                return Err(Error::Config(format!("gate {} repeats qubit {q}", self.gate)));
            }
            seen |= 1 << q;
        }
        let d = 1usize << w;
        let bit = |state: usize, q: usize| state >> (w - 1 - q) & 1;
        let mut out = DMatrix::zeros(d, d);
        for col in 0..d {
            let sub_col = self.qubits.iter().fold(0, |acc, &q| acc << 1 | bit(col, q));
            for sub_row in 0..1usize << k {
                let v = local[(sub_row, sub_col)];
                if v == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let mut row = col;
                for (i, &q) in self.qubits.iter().enumerate() {
                    let b = sub_row >> (k - 1 - i) & 1;
                    let pos = w - 1 - q;
                    row = (row & !(1 << pos)) | (b << pos);
                }
                out[(row, col)] += v;
            }
        }
        Ok(out)
    }
}

/// `C^{-1} · (C · E)^x`: the x-folded noisy cycle referred back to a single
/// ideal application.
pub fn fold_with_cycle(e: &Superoperator, cycle: &HardCycle, x: usize) -> Result<Superoperator> {
    if e.kind != Kind::Channel {
        return Err(Error::WrongKind { expected: "channel" });
    }
    if e.support != cycle.support {
        return Err(Error::Config("error channel and hard cycle have different supports".into()));
    }
    cycle.check_fold(x)?;
    let step = cycle.ptm.matrix() * e.matrix();
    let mut acc = step.clone();
    for _ in 1..x {
        acc = &step * acc;
    }
    // The PTM of a unitary is orthogonal.
    let folded = cycle.ptm.matrix().transpose() * acc;
    Ok(Superoperator::channel(e.support.clone(), folded))
}

/// `Σ_{Q: χ_{P,Q}=−1} |h_Q|²` and `Σ_{j, Q: χ_{P,Q}=−1} |ℓ_{j,Q}|²`.
fn anticommuting_rates(model: &NoiseModel, p: &PauliString) -> (f64, f64) {
    let coherent = model
        .h_coefficients()
        .iter()
        .filter(|(q, _)| !q.commutes_with(p))
        .map(|(_, h)| h * h)
        .sum();
    let dissipative = model
        .jumps()
        .iter()
        .flat_map(|j| j.coefficients())
        .filter(|(q, _)| !q.commutes_with(p))
        .map(|(_, l)| l.norm_sqr())
        .sum();
    (coherent, dissipative)
}

/// Truncated repeated-channel fidelity
/// `1 − 2Σ|h_Q|² x² − 2Σ|ℓ_{j,Q}|² x` over `Q` anticommuting with `P`.
pub fn predicted_fidelity(model: &NoiseModel, p: &PauliString, x: f64) -> Result<f64> {
    if p.n() != model.n() {
        return Err(Error::DimensionMismatch(model.n(), p.n()));
    }
    let (coherent, dissipative) = anticommuting_rates(model, p);
    Ok(1.0 - 2.0 * coherent * x * x - 2.0 * dissipative * x)
}

/// Truncated repeated-channel error probability `x²|h_P|² + x Σ_j |ℓ_{j,P}|²`.
pub fn predicted_error_prob(model: &NoiseModel, p: &PauliString, x: f64) -> Result<f64> {
    if p.n() != model.n() {
        return Err(Error::DimensionMismatch(model.n(), p.n()));
    }
    let h = model.h(p);
    Ok(x * x * h * h + x * model.jump_weight(p))
}
