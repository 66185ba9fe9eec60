//! Noise-model specification and Lindbladian generators in the Pauli basis.
//!
//! A [`NoiseModel`] holds real Hamiltonian coefficients `h_P` and complex
//! jump coefficients `ℓ_{j,P}`, so that `H = Σ h_P P` and `L_j = Σ ℓ_{j,P} P`.
//! Rates are per hard-cycle application: the channel of one cycle is `e^Λ`.

use std::collections::{BTreeSet, HashMap};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{Superoperator, MAX_SUPPORT};
use crate::error::{Error, Result};
use crate::pauli::{all_paulis, Op, PauliString};

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianTerm {
    pub pauli: PauliString,
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LindbladJump {
    pub label: i64,
    pub terms: Vec<(PauliString, Complex64)>,
}

impl LindbladJump {
    pub fn support_mask(&self) -> u16 {
        self.terms.iter().fold(0, |m, (p, _)| m | p.support_mask())
    }

    /// Coefficients keyed by Pauli, with duplicates summed.
    pub fn coefficients(&self) -> HashMap<PauliString, Complex64> {
        let mut out = HashMap::new();
        for (p, c) in &self.terms {
            *out.entry(*p).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        out
    }
}

/// Undirected qubit interaction graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectivityGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl ConnectivityGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 || n > crate::pauli::MAX_QUBITS {
            return Err(Error::InvalidModel(format!("qubit count {n} out of range")));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidModel(format!("edge ({a},{b}) references a qubit ≥ {n}")));
            }
            if a == b {
                return Err(Error::InvalidModel(format!("self-loop on qubit {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self { n, edges: set })
    }

    /// Path graph 0-1-…-(n-1).
    pub fn line(n: usize) -> Self {
        Self::new(n, (1..n).map(|q| (q - 1, q))).expect("valid line graph")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    fn induced_connected(&self, mask: u16) -> bool {
        let Some(start) = (0..self.n).find(|&q| mask >> q & 1 == 1) else {
            return true;
        };
        let mut seen: u16 = 1 << start;
        let mut frontier = vec![start];
        while let Some(v) = frontier.pop() {
            for &(a, b) in &self.edges {
                let other = if a == v { b } else if b == v { a } else { continue };
                if mask >> other & 1 == 1 && seen >> other & 1 == 0 {
                    seen |= 1 << other;
                    frontier.push(other);
                }
            }
        }
        seen == mask
    }

    /// Size of the smallest connected vertex set containing `mask`, or
    /// `None` when no connected superset exists.
    pub fn area_of_effect(&self, mask: u16) -> Option<usize> {
        if mask == 0 {
            return Some(0);
        }
        let full = ((1u32 << self.n) - 1) as u16;
        let rest = full & !mask;
        let mut best: Option<usize> = None;
        // Enumerate supersets of `mask` through subsets of the complement.
        let mut sub = rest;
        loop {
            let w = mask | sub;
            let size = w.count_ones() as usize;
            if best.map_or(true, |b| size < b) && self.induced_connected(w) {
                best = Some(size);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        best
    }
}

/// Validated Hamiltonian + jump noise model on a connectivity graph.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    graph: ConnectivityGraph,
    hamiltonian: Vec<HamiltonianTerm>,
    jumps: Vec<LindbladJump>,
    locality_k: usize,
}

/// A term removed by [`NoiseModel::restrict`].
#[derive(Clone, Debug, PartialEq)]
pub enum DroppedTerm {
    Hamiltonian(HamiltonianTerm),
    Jump(LindbladJump),
}

impl NoiseModel {
    pub fn new(
        graph: ConnectivityGraph,
        hamiltonian: Vec<HamiltonianTerm>,
        jumps: Vec<LindbladJump>,
        locality_k: usize,
    ) -> Result<Self> {
        if locality_k == 0 {
            return Err(Error::InvalidModel("locality_k must be at least 1".into()));
        }
        let model = Self { graph, hamiltonian, jumps, locality_k };
        model.validate()?;
        Ok(model)
    }

    /// A model with no terms.
    pub fn empty(graph: ConnectivityGraph) -> Self {
        Self { graph, hamiltonian: Vec::new(), jumps: Vec::new(), locality_k: 1 }
    }

    fn validate(&self) -> Result<()> {
        let n = self.graph.n();
        for t in &self.hamiltonian {
            if t.pauli.n() != n {
                return Err(Error::DimensionMismatch(n, t.pauli.n()));
            }
            if t.pauli.is_identity() {
                return Err(Error::InvalidModel("Hamiltonian term on the identity".into()));
            }
            if !t.coefficient.is_finite() {
                return Err(Error::InvalidModel(format!("non-finite coefficient on {}", t.pauli)));
            }
            self.check_locality(t.pauli.support_mask(), &format!("Hamiltonian term {}", t.pauli))?;
        }
        for j in &self.jumps {
            if j.terms.is_empty() {
                return Err(Error::InvalidModel(format!("jump {} has no terms", j.label)));
            }
            for (p, c) in &j.terms {
                if p.n() != n {
                    return Err(Error::DimensionMismatch(n, p.n()));
                }
                if p.is_identity() {
                    return Err(Error::InvalidModel(format!("jump {} has an identity term", j.label)));
                }
                if !(c.re.is_finite() && c.im.is_finite()) {
                    return Err(Error::InvalidModel(format!("non-finite coefficient in jump {}", j.label)));
                }
            }
            self.check_locality(j.support_mask(), &format!("jump {}", j.label))?;
        }
        Ok(())
    }

    fn check_locality(&self, mask: u16, what: &str) -> Result<()> {
        match self.graph.area_of_effect(mask) {
            None => Err(Error::Locality(format!("{what} spans disconnected qubits"))),
            Some(a) if a > self.locality_k => Err(Error::Locality(format!(
                "{what} has area of effect {a} > k = {}",
                self.locality_k
            ))),
            Some(_) => Ok(()),
        }
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn graph(&self) -> &ConnectivityGraph {
        &self.graph
    }

    pub fn hamiltonian(&self) -> &[HamiltonianTerm] {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[LindbladJump] {
        &self.jumps
    }

    pub fn locality_k(&self) -> usize {
        self.locality_k
    }

    pub fn is_empty(&self) -> bool {
        self.hamiltonian.is_empty() && self.jumps.is_empty()
    }

    /// Qubits touched by any term.
    pub fn support_mask(&self) -> u16 {
        let h = self.hamiltonian.iter().fold(0, |m, t| m | t.pauli.support_mask());
        self.jumps.iter().fold(h, |m, j| m | j.support_mask())
    }

    /// `h_P` with duplicate terms summed.
    pub fn h_coefficients(&self) -> HashMap<PauliString, f64> {
        let mut out = HashMap::new();
        for t in &self.hamiltonian {
            *out.entry(t.pauli).or_insert(0.0) += t.coefficient;
        }
        out
    }

    pub fn h(&self, p: &PauliString) -> f64 {
        self.hamiltonian.iter().filter(|t| t.pauli == *p).map(|t| t.coefficient).sum()
    }

    /// `Σ_j |ℓ_{j,P}|²`.
    pub fn jump_weight(&self, p: &PauliString) -> f64 {
        self.jumps
            .iter()
            .map(|j| j.coefficients().get(p).map_or(0.0, |c| c.norm_sqr()))
            .sum()
    }

    /// Keep only terms acting inside `support`; the rest are returned as dropped.
    pub fn restrict(&self, support: &[usize]) -> (NoiseModel, Vec<DroppedTerm>) {
        let mask: u16 = support.iter().filter(|&&q| q < self.n()).fold(0, |m, &q| m | 1 << q);
        let inside = |m: u16| m & !mask == 0;
        let mut dropped = Vec::new();
        let mut hamiltonian = Vec::new();
        for t in &self.hamiltonian {
            if inside(t.pauli.support_mask()) {
                hamiltonian.push(t.clone());
            } else {
                dropped.push(DroppedTerm::Hamiltonian(t.clone()));
            }
        }
        let mut jumps = Vec::new();
        for j in &self.jumps {
            if inside(j.support_mask()) {
                jumps.push(j.clone());
            } else {
                dropped.push(DroppedTerm::Jump(j.clone()));
            }
        }
        let model = NoiseModel { graph: self.graph.clone(), hamiltonian, jumps, locality_k: self.locality_k };
        (model, dropped)
    }

    /// Amplitude damping and pure dephasing from relaxation times.
    ///
    /// Per qubit, with `dt` the cycle duration: `L = √(dt/T1)·(X+iY)/2` and
    /// `L = √(γ_φ/2)·Z` where `γ_φ = dt·(1/T2 − 1/(2T1))`, so that coherences
    /// decay at `1/T2` and populations relax at `1/T1`.
    pub fn with_relaxation(mut self, times: &[(usize, RelaxationTimes)]) -> Result<Self> {
        let n = self.n();
        let mut label = self.jumps.iter().map(|j| j.label).max().map_or(0, |l| l + 1);
        for &(q, t) in times {
            if q >= n {
                return Err(Error::InvalidModel(format!("relaxation times for qubit {q} ≥ {n}")));
            }
            if !(t.t1 > 0.0 && t.t2 > 0.0 && t.cycle_time >= 0.0) {
                return Err(Error::InvalidModel(format!("non-positive relaxation times on qubit {q}")));
            }
            let inv_tphi = 1.0 / t.t2 - 0.5 / t.t1;
            if inv_tphi < -1e-12 {
                return Err(Error::InvalidModel(format!("T2 > 2·T1 on qubit {q}")));
            }
            let g1 = t.cycle_time / t.t1;
            if g1 > 0.0 {
                let amp = g1.sqrt() / 2.0;
                self.jumps.push(LindbladJump {
                    label,
                    terms: vec![
                        (PauliString::single(n, q, Op::X), Complex64::new(amp, 0.0)),
                        (PauliString::single(n, q, Op::Y), Complex64::new(0.0, amp)),
                    ],
                });
                label += 1;
            }
            let gphi = t.cycle_time * inv_tphi.max(0.0);
            if gphi > 0.0 {
                self.jumps.push(LindbladJump {
                    label,
                    terms: vec![(PauliString::single(n, q, Op::Z), Complex64::new((gphi / 2.0).sqrt(), 0.0))],
                });
                label += 1;
            }
        }
        self.validate()?;
        Ok(self)
    }

    /// Parse the noise-model JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NoiseModelDoc = serde_json::from_str(text)?;
        doc.into_model()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&NoiseModelDoc::from_model(self))?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationTimes {
    pub t1: f64,
    pub t2: f64,
    pub cycle_time: f64,
}

/// Serialized form of a [`NoiseModel`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModelDoc {
    pub n: usize,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
    pub locality_k: usize,
    #[serde(default)]
    pub hamiltonian: Vec<HamiltonianDoc>,
    #[serde(default)]
    pub jumps: Vec<JumpDoc>,
    /// Per-qubit relaxation times, keyed by qubit index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1t2: Option<std::collections::BTreeMap<String, RelaxationTimes>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianDoc {
    pub pauli: PauliString,
    pub h: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpDoc {
    pub label: i64,
    pub terms: Vec<JumpTermDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpTermDoc {
    pub pauli: PauliString,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl NoiseModelDoc {
    pub fn into_model(self) -> Result<NoiseModel> {
        let graph = ConnectivityGraph::new(self.n, self.edges.iter().map(|e| (e[0], e[1])))?;
        let hamiltonian = self
            .hamiltonian
            .into_iter()
            .map(|t| HamiltonianTerm { pauli: t.pauli, coefficient: t.h })
            .collect();
        let jumps = self
            .jumps
            .into_iter()
            .map(|j| LindbladJump {
                label: j.label,
                terms: j.terms.into_iter().map(|t| (t.pauli, Complex64::new(t.re, t.im))).collect(),
            })
            .collect();
        let model = NoiseModel::new(graph, hamiltonian, jumps, self.locality_k)?;
        match self.t1t2 {
            None => Ok(model),
            Some(map) => {
                let times = map
                    .into_iter()
                    .map(|(k, t)| {
                        k.parse::<usize>()
                            .map(|q| (q, t))
                            .map_err(|_| Error::Config(format!("t1t2 key {k:?} is not a qubit index")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                model.with_relaxation(&times)
            }
        }
    }

    pub fn from_model(model: &NoiseModel) -> Self {
        Self {
            n: model.n(),
            edges: model.graph.edges().map(|(a, b)| [a, b]).collect(),
            locality_k: model.locality_k,
            hamiltonian: model
                .hamiltonian
                .iter()
                .map(|t| HamiltonianDoc { pauli: t.pauli, h: t.coefficient })
                .collect(),
            jumps: model
                .jumps
                .iter()
                .map(|j| JumpDoc {
                    label: j.label,
                    terms: j.terms.iter().map(|(p, c)| JumpTermDoc { pauli: *p, re: c.re, im: c.im }).collect(),
                })
                .collect(),
            t1t2: None,
        }
    }
}

fn local_paulis(model: &NoiseModel, support: &[usize]) -> Result<usize> {
    let w = support.len();
    if w > MAX_SUPPORT {
        return Err(Error::SupportTooLarge { width: w, cap: MAX_SUPPORT });
    }
    if w == 0 {
        return Err(Error::Config("generator support must contain at least one qubit".into()));
    }
    let mask: u16 = support.iter().fold(0, |m, &q| m | 1 << q);
    if support.iter().any(|&q| q >= model.n()) || mask.count_ones() as usize != w {
        return Err(Error::Config(format!("invalid support {support:?} for {} qubits", model.n())));
    }
    let check = |m: u16| {
        if m & !mask != 0 {
            let term = (0..model.n()).filter(|q| m >> q & 1 == 1).collect();
            Err(Error::SupportTooSmall { term, support: support.to_vec() })
        } else {
            Ok(())
        }
    };
    for t in &model.hamiltonian {
        check(t.pauli.support_mask())?;
    }
    for j in &model.jumps {
        check(j.support_mask())?;
    }
    Ok(w)
}

/// The Lindbladian `Λ` as a real `4^w × 4^w` matrix in the Pauli basis;
/// entry `(Q, P)` is the transition amplitude `t_{P→Q}`.
///
/// Built term-by-term from the Pauli expansion of `-i[H,·]` and the
/// dissipators, so the cost scales with the number of term pairs.
pub fn build_generator(model: &NoiseModel, support: &[usize]) -> Result<Superoperator> {
    let w = local_paulis(model, support)?;
    let dim = 1usize << (2 * w);
    let mut g = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    let local = |p: &PauliString| p.restrict(support);
    let paulis: Vec<PauliString> = all_paulis(w).collect();

    // -i[h A, P] = -2i h A·P when A and P anticommute.
    for t in &model.hamiltonian {
        let a = local(&t.pauli);
        for p in &paulis {
            if a.commutes_with(p) {
                continue;
            }
            let (r, k) = a.mul_with_phase(p);
            let c = Complex64::new(0.0, -2.0 * t.coefficient) * k.to_complex();
            g[(r.index(), p.index())] += c.re;
        }
    }

    // L P L† − ½ L†L P − ½ P L†L, expanded over term pairs (a, b).
    for jump in &model.jumps {
        let terms: Vec<(PauliString, Complex64)> =
            jump.coefficients().into_iter().map(|(p, c)| (local(&p), c)).collect();
        for (a, la) in &terms {
            for (b, lb) in &terms {
                let weight = la * lb.conj();
                // L†L contribution: ℓ_b^* ℓ_a B A
                let (ba, k_ba) = b.mul_with_phase(a);
                let ba_coeff = la * lb.conj() * k_ba.to_complex();
                for p in &paulis {
                    // A P B
                    let (ap, k1) = a.mul_with_phase(p);
                    let (apb, k2) = ap.mul_with_phase(b);
                    let c = weight * (k1 * k2).to_complex();
                    g[(apb.index(), p.index())] += c.re;
                    // -½ (BA) P − ½ P (BA)
                    let (left, kl) = ba.mul_with_phase(p);
                    let (right, kr) = p.mul_with_phase(&ba);
                    debug_assert_eq!(left, right);
                    let c = ba_coeff * (kl.to_complex() + kr.to_complex()) * -0.5;
                    g[(left.index(), p.index())] += c.re;
                }
            }
        }
    }
    Ok(Superoperator::generator(support.to_vec(), g))
}

/// `t_{P→Q} = tr(Q Λ[P]) / 2^n` from the closed-form expressions in the
/// commutation function χ.
///
/// With `ℓ_{j,M} := tr(M L_j)/2^n` and `h_M := tr(M† H)/2^n` for phased
/// products `M`, the three cases are:
/// * `P = Q`: `−2 Σ_{S: χ_{P,S}=−1} Σ_j |ℓ_{j,S}|²`
/// * `[P,Q] = 0, P ≠ Q`: `−2 Σ_{S: χ_{Q,S}=−1} Σ_j Re(ℓ_{j,S} ℓ*_{j,PQS})`
/// * `{P,Q} = 0`: `2 Re(i h_{PQ}) + Σ_{j,S} Re(ℓ_{j,S} ℓ*_{j,PQS}) χ_{Q,S}`
pub fn transition_amplitude(model: &NoiseModel, p: &PauliString, q: &PauliString) -> Result<f64> {
    let n = model.n();
    if p.n() != n {
        return Err(Error::DimensionMismatch(n, p.n()));
    }
    if q.n() != n {
        return Err(Error::DimensionMismatch(n, q.n()));
    }
    let jumps: Vec<HashMap<PauliString, Complex64>> = model.jumps.iter().map(|j| j.coefficients()).collect();

    if p == q {
        let total: f64 = jumps
            .iter()
            .flat_map(|j| j.iter())
            .filter(|(s, _)| !p.commutes_with(s))
            .map(|(_, l)| l.norm_sqr())
            .sum();
        return Ok(-2.0 * total);
    }

    let (pq, w_pq) = p.mul_with_phase(q);
    // Σ_{j,S} ℓ_{j,S} ℓ*_{j,PQS} · weight(S)
    let cross = |weight: &dyn Fn(&PauliString) -> f64| -> f64 {
        let mut acc = 0.0;
        for j in &jumps {
            for (s, ls) in j {
                let (r, w_s) = pq.mul_with_phase(s);
                let Some(lr) = j.get(&r) else { continue };
                // PQS = ω R with ω = w_pq·w_s, so ℓ_{PQS} = ω ℓ_R.
                let l_pqs = (w_pq * w_s).to_complex() * lr;
                acc += (ls * l_pqs.conj()).re * weight(s);
            }
        }
        acc
    };

    if p.commutes_with(q) {
        Ok(-2.0 * cross(&|s| if q.commutes_with(s) { 0.0 } else { 1.0 }))
    } else {
        // h_{PQ} = tr((PQ)† H)/2^n = conj(ω) h_R for PQ = ω R.
        let h_pq = w_pq.conj().to_complex() * model.h(&pq);
        let ham = 2.0 * (Complex64::i() * h_pq).re;
        Ok(ham + cross(&|s| q.chi(s)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn ham(n: usize, terms: &[(&str, f64)]) -> NoiseModel {
        NoiseModel::new(
            ConnectivityGraph::line(n),
            terms.iter().map(|&(s, h)| HamiltonianTerm { pauli: p(s), coefficient: h }).collect(),
            vec![],
            n,
        )
        .unwrap()
    }

    fn jump(n: usize, terms: &[(&str, Complex64)]) -> NoiseModel {
        NoiseModel::new(
            ConnectivityGraph::line(n),
            vec![],
            vec![LindbladJump { label: 0, terms: terms.iter().map(|&(s, c)| (p(s), c)).collect() }],
            n,
        )
        .unwrap()
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    /// Independent route: Λ[P] via dense matrices, then tr(Q Λ[P]) / 2^w.
    fn dense_generator(model: &NoiseModel) -> nalgebra::DMatrix<f64> {
        let n = model.n();
        let d = 1usize << n;
        let mut h = nalgebra::DMatrix::<Complex64>::zeros(d, d);
        for t in model.hamiltonian() {
            h += t.pauli.to_matrix() * re(t.coefficient);
        }
        let ls: Vec<_> = model
            .jumps()
            .iter()
            .map(|j| {
                j.terms.iter().fold(nalgebra::DMatrix::<Complex64>::zeros(d, d), |acc, (q, c)| acc + q.to_matrix() * *c)
            })
            .collect();
        let dim = d * d;
        let mut g = nalgebra::DMatrix::zeros(dim, dim);
        for pp in all_paulis(n) {
            let pm = pp.to_matrix();
            let mut out = (&h * &pm - &pm * &h) * Complex64::new(0.0, -1.0);
            for l in &ls {
                let ld = l.adjoint();
                let ldl = &ld * l;
                out += l * &pm * &ld - (&ldl * &pm + &pm * &ldl) * re(0.5);
            }
            for qq in all_paulis(n) {
                let t = (qq.to_matrix() * &out).trace() / d as f64;
                assert!(t.im.abs() < 1e-12);
                g[(qq.index(), pp.index())] = t.re;
            }
        }
        g
    }

    #[test]
    fn hamiltonian_z_rotation_generator() {
        let theta = 0.07;
        let g = build_generator(&ham(1, &[("Z", theta)]), &[0]).unwrap();
        let m = g.matrix();
        assert!((m[(p("Y").index(), p("X").index())] - 2.0 * theta).abs() < 1e-15);
        assert!((m[(p("X").index(), p("Y").index())] + 2.0 * theta).abs() < 1e-15);
        for i in 0..4 {
            assert_eq!(m[(i, i)], 0.0);
        }
        assert!((m - dense_generator(&ham(1, &[("Z", theta)]))).abs().max() < 1e-15);
    }

    #[test]
    fn dephasing_jump_generator_is_diagonal() {
        let gamma: f64 = 0.013;
        let g = build_generator(&jump(1, &[("Z", re(gamma.sqrt()))]), &[0]).unwrap();
        let expect = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, -2.0 * gamma, -2.0 * gamma, 0.0]));
        assert!((g.matrix() - expect).abs().max() < 1e-15);
    }

    #[test]
    fn empty_model_is_zero() {
        let model = NoiseModel::empty(ConnectivityGraph::line(2));
        let g = build_generator(&model, &[0, 1]).unwrap();
        assert!(g.matrix().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn generator_matches_dense_route_for_mixed_models() {
        let model = NoiseModel::new(
            ConnectivityGraph::line(2),
            vec![
                HamiltonianTerm { pauli: p("ZZ"), coefficient: 0.03 },
                HamiltonianTerm { pauli: p("YI"), coefficient: -0.02 },
            ],
            vec![
                LindbladJump { label: 0, terms: vec![(p("XI"), re(0.1)), (p("YI"), Complex64::new(0.0, 0.1))] },
                LindbladJump { label: 1, terms: vec![(p("ZX"), Complex64::new(0.05, -0.02)), (p("IY"), re(0.04)), (p("XZ"), Complex64::new(0.0, 0.03))] },
            ],
            2,
        )
        .unwrap();
        let g = build_generator(&model, &[0, 1]).unwrap();
        assert!((g.matrix() - dense_generator(&model)).abs().max() < 1e-14);
        for pp in all_paulis(2) {
            for qq in all_paulis(2) {
                let t = transition_amplitude(&model, &pp, &qq).unwrap();
                assert!((t - g.matrix()[(qq.index(), pp.index())]).abs() < 1e-12, "{pp}->{qq}");
            }
        }
    }

    #[test]
    fn transition_amplitude_examples() {
        let theta = 0.05;
        assert!((transition_amplitude(&ham(1, &[("Z", theta)]), &p("X"), &p("Y")).unwrap() - 2.0 * theta).abs() < 1e-15);
        let gamma: f64 = 0.01;
        let m = jump(1, &[("Z", re(gamma.sqrt()))]);
        assert!((transition_amplitude(&m, &p("X"), &p("X")).unwrap() + 2.0 * gamma).abs() < 1e-15);
        assert_eq!(transition_amplitude(&m, &p("Z"), &p("Z")).unwrap(), 0.0);
        assert!(transition_amplitude(&m, &p("ZZ"), &p("Z")).is_err());
    }

    #[test]
    fn identity_row_vanishes() {
        let model = jump(2, &[("XI", re(0.2)), ("ZY", Complex64::new(0.1, 0.3))]);
        let g = build_generator(&model, &[0, 1]).unwrap();
        assert!(g.matrix().row(0).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn generator_on_a_wider_support_embeds_terms() {
        let model = ham(3, &[("IZI", 0.1)]);
        let narrow = build_generator(&model, &[1]).unwrap();
        let wide = build_generator(&model, &[0, 1]).unwrap();
        let x = p("X").index();
        let y = p("Y").index();
        assert!((narrow.matrix()[(y, x)] - 0.2).abs() < 1e-15);
        assert!((wide.matrix()[(p("IY").index(), p("IX").index())] - 0.2).abs() < 1e-15);
        assert!(matches!(build_generator(&model, &[0]), Err(Error::SupportTooSmall { .. })));
        let wide_model = ham(7, &[("IZIIIII", 0.1)]);
        assert!(matches!(
            build_generator(&wide_model, &[0, 1, 2, 3, 4, 5, 6]),
            Err(Error::SupportTooLarge { .. })
        ));
    }

    #[test]
    fn restrict_examples() {
        let model = NoiseModel::new(
            ConnectivityGraph::line(4),
            vec![
                HamiltonianTerm { pauli: p("ZZII"), coefficient: 0.1 },
                HamiltonianTerm { pauli: p("IIIX"), coefficient: 0.2 },
            ],
            vec![LindbladJump { label: 3, terms: vec![(p("XIII"), re(0.1))] }],
            2,
        )
        .unwrap();
        let (r, dropped) = model.restrict(&[0, 1]);
        assert_eq!(r.hamiltonian().len(), 1);
        assert_eq!(r.jumps().len(), 1);
        assert_eq!(dropped.len(), 1);
        let (all, none) = model.restrict(&[0, 1, 2, 3]);
        assert_eq!(all, model);
        assert!(none.is_empty());
        let (empty, dropped) = model.restrict(&[]);
        assert!(empty.is_empty());
        assert_eq!(dropped.len(), 3);
    }

    #[test]
    fn locality_is_enforced() {
        let line = ConnectivityGraph::line(3);
        let far = vec![HamiltonianTerm { pauli: p("ZIZ"), coefficient: 0.1 }];
        assert!(matches!(NoiseModel::new(line.clone(), far.clone(), vec![], 2), Err(Error::Locality(_))));
        // Gaps are allowed once k covers the bridging qubit.
        assert!(NoiseModel::new(line, far.clone(), vec![], 3).is_ok());
        let split = ConnectivityGraph::new(3, [(0, 1)]).unwrap();
        assert!(matches!(NoiseModel::new(split, far, vec![], 3), Err(Error::Locality(_))));
        let big = vec![HamiltonianTerm { pauli: p("XXX"), coefficient: 0.1 }];
        assert!(NoiseModel::new(ConnectivityGraph::line(3), big, vec![], 2).is_err());
        assert!(NoiseModel::new(
            ConnectivityGraph::line(1),
            vec![HamiltonianTerm { pauli: p("I"), coefficient: 0.1 }],
            vec![],
            1
        )
        .is_err());
        assert!(ConnectivityGraph::new(2, [(1, 1)]).is_err());
        assert!(ConnectivityGraph::new(2, [(0, 2)]).is_err());
    }

    #[test]
    fn relaxation_constructor_rates() {
        let t = RelaxationTimes { t1: 100.0, t2: 80.0, cycle_time: 0.5 };
        let model = NoiseModel::empty(ConnectivityGraph::line(1)).with_relaxation(&[(0, t)]).unwrap();
        let g = build_generator(&model, &[0]).unwrap();
        let m = g.matrix();
        // Coherences decay at 1/T2, populations at 1/T1, per cycle.
        assert!((m[(1, 1)] + 0.5 / 80.0).abs() < 1e-14);
        assert!((m[(2, 2)] + 0.5 / 80.0).abs() < 1e-14);
        assert!((m[(3, 3)] + 0.5 / 100.0).abs() < 1e-14);
        // Non-unital pull toward |0⟩.
        assert!((m[(3, 0)] - 0.5 / 100.0).abs() < 1e-14);
        let bad = RelaxationTimes { t1: 10.0, t2: 30.0, cycle_time: 0.5 };
        assert!(NoiseModel::empty(ConnectivityGraph::line(1)).with_relaxation(&[(0, bad)]).is_err());
    }

    #[test]
    fn json_round_trip_and_errors() {
        let text = r#"{"n": 2, "edges": [[0,1]], "locality_k": 2,
            "hamiltonian": [{"pauli": "IZ", "h": 0.01}],
            "jumps": [{"label": 1, "terms": [{"pauli": "ZI", "re": 0.1, "im": 0.0}]}],
            "t1t2": {"0": {"t1": 100.0, "t2": 90.0, "cycle_time": 0.3}}}"#;
        let model = NoiseModel::from_json(text).unwrap();
        assert_eq!(model.jumps().len(), 3);
        let back = NoiseModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
        let err = NoiseModel::from_json(r#"{"n": 1, "locality_k": 1, "hamiltonain": []}"#).unwrap_err();
        assert!(err.to_string().contains("hamiltonain"), "{err}");
        assert!(NoiseModel::from_json(r#"{"n": 1, "locality_k": 1, "hamiltonian": [{"pauli": "Q", "h": 1}]}"#).is_err());
    }
}
