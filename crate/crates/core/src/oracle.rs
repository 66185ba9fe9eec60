//! Brute-force references: density-matrix Lindbladians, dense circuit
//! products and exhaustive fit search.
//!
//! Everything here is deliberately slow and literal. These functions are the
//! ground truth the fast Pauli-algebra paths are checked against.

use std::io;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::channel::{exponentiate, pauli_fidelity, predicted_fidelity, Superoperator};
use crate::error::{Error, Result};
use crate::fitdecay::DecayProblem;
use crate::lindblad::{build_generator, transition_amplitude, NoiseModel};
use crate::pauli::{all_paulis, PauliString};
use crate::protocol::CompiledCircuit;

pub const MAX_ORACLE_QUBITS: usize = 4;
pub const MAX_CIRCUIT_QUBITS: usize = 3;

fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

fn check_support(model: &NoiseModel, support: &[usize]) -> Result<()> {
    if support.len() > MAX_ORACLE_QUBITS {
        return Err(Error::SupportTooLarge { width: support.len(), cap: MAX_ORACLE_QUBITS });
    }
    if support.is_empty() || support.iter().any(|&q| q >= model.n()) {
        return Err(Error::Config(format!("invalid oracle support {support:?}")));
    }
    let mask: u16 = support.iter().fold(0, |m, &q| m | 1 << q);
    if model.support_mask() & !mask != 0 {
        let term = (0..model.n()).filter(|q| (model.support_mask() & !mask) >> q & 1 == 1).collect();
        return Err(Error::SupportTooSmall { term, support: support.to_vec() });
    }
    Ok(())
}

/// Smallest oracle support: the model's qubits plus `extra`, or qubit 0.
pub fn natural_support(model: &NoiseModel, extra: u16) -> Vec<usize> {
    let mask = model.support_mask() | extra;
    let s: Vec<usize> = (0..model.n()).filter(|q| mask >> q & 1 == 1).collect();
    if s.is_empty() { vec![0] } else { s }
}

/// `Λ` acting on column-stacked density matrices:
/// `−i(I⊗H − Hᵀ⊗I) + Σ_j [L̄_j⊗L_j − ½ I⊗L_j†L_j − ½ (L_j†L_j)ᵀ⊗I]`.
pub fn colvec_lindbladian(model: &NoiseModel, support: &[usize]) -> Result<DMatrix<Complex64>> {
    check_support(model, support)?;
    let w = support.len();
    let d = 1usize << w;
    let id = DMatrix::<Complex64>::identity(d, d);
    let local = |p: &PauliString| p.restrict(support).to_matrix();
    let mut h = DMatrix::<Complex64>::zeros(d, d);
    for t in model.hamiltonian() {
        h += local(&t.pauli) * Complex64::new(t.coefficient, 0.0);
    }
    let i = Complex64::new(0.0, 1.0);
    let mut out = (kron(&id, &h) - kron(&h.transpose(), &id)) * (-i);
    for j in model.jumps() {
        let mut l = DMatrix::<Complex64>::zeros(d, d);
        for (p, c) in &j.terms {
            l += local(p) * *c;
        }
        let ldl = l.adjoint() * &l;
        out += kron(&l.map(|z| z.conj()), &l);
        out -= kron(&id, &ldl) * Complex64::new(0.5, 0.0);
        out -= kron(&ldl.transpose(), &id) * Complex64::new(0.5, 0.0);
    }
    Ok(out)
}

fn vec_col(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    // Column-major storage is already column stacking.
    m.as_slice().to_vec()
}

/// Change of basis `G[Q,P] = vec(Q)† Λ vec(P) / 2^w`.
pub fn to_pauli_basis(lambda: &DMatrix<Complex64>, w: usize) -> Result<DMatrix<f64>> {
    let d = 1usize << w;
    if lambda.nrows() != d * d || lambda.ncols() != d * d {
        return Err(Error::DimensionMismatch(lambda.nrows(), d * d));
    }
    let paulis: Vec<PauliString> = all_paulis(w).collect();
    let vecs: Vec<Vec<Complex64>> = paulis.iter().map(|p| vec_col(&p.to_matrix())).collect();
    let dim = paulis.len();
    let mut g = DMatrix::<f64>::zeros(dim, dim);
    for (pi, vp) in vecs.iter().enumerate() {
        let image: Vec<Complex64> = (0..d * d).map(|r| (0..d * d).map(|c| lambda[(r, c)] * vp[c]).sum()).collect();
        for (qi, vq) in vecs.iter().enumerate() {
            let z: Complex64 = vq.iter().zip(&image).map(|(a, b)| a.conj() * b).sum::<Complex64>() / d as f64;
            if z.im.abs() > 1e-9 * (1.0 + z.re.abs()) {
                return Err(Error::NumericalIntegrity(format!("Pauli-basis entry ({qi},{pi}) has imaginary part {}", z.im)));
            }
            g[(qi, pi)] = z.re;
        }
    }
    Ok(g)
}

/// Pauli-basis generator computed through the density-matrix route.
pub fn colvec_generator(model: &NoiseModel, support: &[usize]) -> Result<Superoperator> {
    let lambda = colvec_lindbladian(model, support)?;
    Ok(Superoperator::generator(support.to_vec(), to_pauli_basis(&lambda, support.len())?))
}

/// `f_P(e^{xΛ})` through the density-matrix route.
pub fn exact_repeated_fidelity(model: &NoiseModel, p: &PauliString, x: f64) -> Result<f64> {
    if p.n() != model.n() {
        return Err(Error::DimensionMismatch(model.n(), p.n()));
    }
    let support = natural_support(model, p.support_mask());
    let gen = colvec_generator(model, &support)?;
    pauli_fidelity(&exponentiate(&gen, x)?, p)
}

/// Literal product of every ideal layer in time order.
pub fn dense_circuit_product(circuit: &CompiledCircuit) -> Result<DMatrix<Complex64>> {
    let cycle = &circuit.spec.cycle;
    let w = cycle.width();
    if w > MAX_CIRCUIT_QUBITS {
        return Err(Error::SupportTooLarge { width: w, cap: MAX_CIRCUIT_QUBITS });
    }
    let c = cycle.unitary();
    let mut u = DMatrix::<Complex64>::identity(1 << w, 1 << w);
    for layer in &circuit.easy_cycles[..circuit.spec.m] {
        u = layer.to_matrix() * u;
        for _ in 0..circuit.spec.x {
            u = c * u;
        }
    }
    u = circuit.easy_cycles[circuit.spec.m].to_matrix() * u;
    let inv = c.adjoint();
    for _ in 0..circuit.closing_inverses {
        u = &inv * u;
    }
    Ok(u)
}

/// `min_φ max |a − e^{iφ} b|` is below `tol`, with the phase read off the
/// largest entry of `b`.
pub fn equal_up_to_phase(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, tol: f64) -> bool {
    if a.shape() != b.shape() {
        return false;
    }
    let (idx, _) = b.iter().enumerate().fold((0, 0.0), |(bi, bv), (i, z)| if z.norm() > bv { (i, z.norm()) } else { (bi, bv) });
    let bz = b.as_slice()[idx];
    if bz.norm() == 0.0 {
        return a.iter().all(|z| z.norm() <= tol);
    }
    let phase = a.as_slice()[idx] / bz;
    if (phase.norm() - 1.0).abs() > tol {
        return false;
    }
    a.iter().zip(b.iter()).all(|(x, y)| (x - phase * y).norm() <= tol)
}

/// Exhaustive search of the fit cost over two parameters on an `n × n`
/// lattice, the others held at `base`. Returns `(p_i, p_j, cost)`.
pub fn grid_search(
    problem: &DecayProblem<'_>,
    base: &[f64],
    (i, lo_i, hi_i): (usize, f64, f64),
    (j, lo_j, hi_j): (usize, f64, f64),
    n: usize,
) -> (f64, f64, f64) {
    let mut params = base.to_vec();
    let mut best = (base[i], base[j], f64::INFINITY);
    let step = |lo: f64, hi: f64, k: usize| if n > 1 { lo + (hi - lo) * k as f64 / (n - 1) as f64 } else { lo };
    for a in 0..n {
        params[i] = step(lo_i, hi_i, a);
        for b in 0..n {
            params[j] = step(lo_j, hi_j, b);
            let c = problem.cost(&params);
            if c < best.2 {
                best = (params[i], params[j], c);
            }
        }
    }
    best
}

/// Row-major CSV of a matrix in the fixed Pauli ordering.
pub fn write_matrix_csv<W: io::Write>(out: W, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for r in 0..m.nrows() {
        w.write_record(m.row(r).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct FidelityCheck {
    pub pauli: PauliString,
    pub x: f64,
    pub predicted: f64,
    pub exact: f64,
    pub deviation: f64,
    /// `5·(1 − f)²`.
    pub bound: f64,
    pub within_bound: bool,
    /// `5·(1 − f)·max_Q (1 − f_Q)` over the Paulis on the support at the same `x`.
    pub support_bound: f64,
    pub within_support_bound: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub support: Vec<usize>,
    pub generator_max_abs_diff: f64,
    pub transition_max_abs_diff: f64,
    pub fidelities: Vec<FidelityCheck>,
}

impl OracleReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.generator_max_abs_diff <= tol
            && self.transition_max_abs_diff <= tol
            && self.fidelities.iter().all(|f| f.within_support_bound)
    }
}

/// Compare every fast path against its oracle for one model.
pub fn oracle_check(model: &NoiseModel, xs: &[f64]) -> Result<OracleReport> {
    let support = natural_support(model, 0);
    let (local, _) = model.restrict(&support);
    let fast = build_generator(&local, &support)?;
    let slow = colvec_generator(&local, &support)?;
    let generator_max_abs_diff = (fast.matrix() - slow.matrix()).abs().max();
    let w = support.len();
    let mut transition_max_abs_diff = 0.0f64;
    let mut fidelities = Vec::new();
    for (pi, p) in all_paulis(w).enumerate() {
        let gp = p.embed(model.n(), &support);
        for (qi, q) in all_paulis(w).enumerate() {
            let gq = q.embed(model.n(), &support);
            let t = transition_amplitude(model, &gp, &gq)?;
            transition_max_abs_diff = transition_max_abs_diff.max((t - slow.matrix()[(qi, pi)]).abs());
        }
        if p.is_identity() {
            continue;
        }
        for &x in xs {
            let predicted = predicted_fidelity(model, &gp, x)?;
            let exact = pauli_fidelity(&exponentiate(&slow, x)?, &p)?;
            let deviation = (predicted - exact).abs();
            let bound = 5.0 * (1.0 - exact).powi(2);
            fidelities.push(FidelityCheck {
                pauli: gp,
                x,
                predicted,
                exact,
                deviation,
                bound,
                within_bound: deviation <= bound + 1e-12,
                support_bound: 0.0,
                within_support_bound: false,
            });
        }
    }
    for &x in xs {
        let worst = fidelities.iter().filter(|f| f.x == x).map(|f| 1.0 - f.exact).fold(0.0, f64::max);
        for f in fidelities.iter_mut().filter(|f| f.x == x) {
            f.support_bound = 5.0 * (1.0 - f.exact) * worst;
            f.within_support_bound = f.deviation <= f.support_bound + 1e-12;
        }
    }
    Ok(OracleReport { support, generator_max_abs_diff, transition_max_abs_diff, fidelities })
}
