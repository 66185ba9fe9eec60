//! Finite-shot simulation of compiled circuits in the Pauli transfer picture.

use std::collections::HashMap;
use std::io;
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{exponentiate, HardCycle, Superoperator};
use crate::error::{Error, Result};
use crate::lindblad::{build_generator, NoiseModel};
use crate::pauli::{Op, PauliString};
use crate::protocol::{
    estimate_circuit_fidelity, generate, CircuitSpec, CompiledCircuit, OutcomeHistogram,
};

const INTEGRITY_EPS: f64 = 1e-9;

/// Per-qubit preparation and symmetric readout flip probabilities.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpamError {
    #[serde(default)]
    pub prep_flip: Vec<f64>,
    #[serde(default)]
    pub readout_flip: Vec<f64>,
}

impl SpamError {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn uniform(n: usize, prep: f64, readout: f64) -> Result<Self> {
        let s = Self { prep_flip: vec![prep; n], readout_flip: vec![readout; n] };
        s.validate()?;
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: SpamError = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for &p in self.prep_flip.iter().chain(&self.readout_flip) {
            if !(0.0..0.5).contains(&p) {
                return Err(Error::Config(format!("SPAM flip probability {p} outside [0, 0.5)")));
            }
        }
        Ok(())
    }

    fn prep(&self, q: usize) -> f64 {
        self.prep_flip.get(q).copied().unwrap_or(0.0)
    }

    fn readout(&self, q: usize) -> f64 {
        self.readout_flip.get(q).copied().unwrap_or(0.0)
    }
}

/// One frame-corrected fidelity estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityRecord {
    pub pauli: PauliString,
    pub x: usize,
    pub m: usize,
    pub seed: u64,
    pub estimate: f64,
    pub shots: u64,
}

/// Noisy register: every hard-cycle application is `C ∘ E`.
pub struct Simulator {
    cycle: HardCycle,
    step: DMatrix<f64>,
    easy: Option<DMatrix<f64>>,
    spam: SpamError,
    folded: Mutex<HashMap<usize, DMatrix<f64>>>,
}

impl Simulator {
    pub fn new(cycle: &HardCycle, noise: &NoiseModel, spam: SpamError) -> Result<Self> {
        let error = error_channel(cycle, noise)?;
        let step = cycle.ptm().matrix() * error.matrix();
        spam.validate()?;
        Ok(Self { cycle: cycle.clone(), step, easy: None, spam, folded: Mutex::new(HashMap::new()) })
    }

    /// Attach a noise channel applied after every easy Pauli layer.
    pub fn with_easy_noise(mut self, noise: &NoiseModel) -> Result<Self> {
        self.easy = Some(error_channel(&self.cycle, noise)?.into_matrix());
        Ok(self)
    }

    pub fn cycle(&self) -> &HardCycle {
        &self.cycle
    }

    fn folded(&self, x: usize) -> DMatrix<f64> {
        let mut cache = self.folded.lock().expect("cache lock");
        cache
            .entry(x)
            .or_insert_with(|| {
                let mut acc = DMatrix::identity(self.step.nrows(), self.step.ncols());
                for _ in 0..x {
                    acc = &self.step * acc;
                }
                acc
            })
            .clone()
    }

    /// Exact outcome distribution over the measured qubits' bitstrings.
    pub fn distribution(&self, circuit: &CompiledCircuit) -> Result<Vec<f64>> {
        let w = self.cycle.width();
        let basis = &circuit.spec.basis;
        if basis.register() != w {
            return Err(Error::DimensionMismatch(w, basis.register()));
        }
        let paulis: Vec<PauliString> = crate::pauli::all_paulis(w).collect();
        let mut state = self.initial_state(circuit);
        let folded = self.folded(circuit.spec.x);
        let apply_layer = |state: &mut DVector<f64>, layer: &PauliString| {
            for (i, p) in paulis.iter().enumerate() {
                state[i] *= layer.chi(p);
            }
        };
        for layer in &circuit.easy_cycles[..circuit.spec.m] {
            apply_layer(&mut state, &layer.pauli);
            if let Some(e) = &self.easy {
                state = e * state;
            }
            state = &folded * state;
        }
        apply_layer(&mut state, &circuit.easy_cycles[circuit.spec.m].pauli);
        if let Some(e) = &self.easy {
            state = e * state;
        }
        let inverse = self.cycle.ptm().matrix().transpose();
        for _ in 0..circuit.closing_inverses {
            state = &inverse * state;
        }

        let measured = basis.measured();
        let k = measured.len();
        // Expectation of every product of measured axes, damped by readout flips.
        let mut expect = vec![0.0; 1 << k];
        for (s, e) in expect.iter_mut().enumerate() {
            let mut ops = vec![Op::I; w];
            let mut damp = 1.0;
            for (i, &q) in measured.iter().enumerate() {
                if s >> i & 1 == 1 {
                    ops[q] = basis.axis(i);
                    damp *= 1.0 - 2.0 * self.spam.readout(q);
                }
            }
            *e = state[PauliString::from_ops(&ops)?.index()] * damp;
        }
        let norm = (1u64 << k) as f64;
        let probs: Vec<f64> = (0..1usize << k)
            .map(|b| {
                expect
                    .iter()
                    .enumerate()
                    .map(|(s, e)| if (s & b).count_ones() % 2 == 0 { *e } else { -*e })
                    .sum::<f64>()
                    / norm
            })
            .collect();
        for &p in &probs {
            if !(-INTEGRITY_EPS..=1.0 + INTEGRITY_EPS).contains(&p) || !p.is_finite() {
                return Err(Error::NumericalIntegrity(format!("outcome probability {p}")));
            }
        }
        Ok(probs.into_iter().map(|p| p.clamp(0.0, 1.0)).collect())
    }

    /// Product state: measured qubits along their basis axis, others in |0⟩.
    fn initial_state(&self, circuit: &CompiledCircuit) -> DVector<f64> {
        let w = self.cycle.width();
        let basis = &circuit.spec.basis;
        let mut local = vec![[1.0, 0.0, 0.0, 1.0]; w];
        for (i, &q) in basis.measured().iter().enumerate() {
            let mut v = [1.0, 0.0, 0.0, 0.0];
            let axis = basis.axis(i) as usize;
            v[axis] = 1.0 - 2.0 * self.spam.prep(q);
            local[q] = v;
        }
        let mut state = DVector::zeros(1 << (2 * w));
        for (idx, p) in crate::pauli::all_paulis(w).enumerate() {
            state[idx] = (0..w).map(|q| local[q][p.op(q) as usize]).product();
        }
        state
    }

    /// Sample `shots` outcomes from the exact distribution.
    pub fn run(&self, circuit: &CompiledCircuit, shots: u64, rng_seed: u64) -> Result<OutcomeHistogram> {
        let probs = self.distribution(circuit)?;
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        rng.set_stream(1);
        let mut hist = OutcomeHistogram { counts: vec![0; probs.len()] };
        let mut remaining = shots;
        let mut mass = 1.0;
        for (i, &p) in probs.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            if i + 1 == probs.len() || mass <= 0.0 {
                hist.counts[i] = remaining;
                break;
            }
            let q = (p / mass).clamp(0.0, 1.0);
            let c = Binomial::new(remaining, q)
                .map_err(|e| Error::NumericalIntegrity(format!("binomial draw: {e}")))?
                .sample(&mut rng);
            hist.counts[i] = c;
            remaining -= c;
            mass -= p;
        }
        Ok(hist)
    }

    /// Generate, run and estimate every basis Pauli of one spec.
    pub fn records_for(&self, spec: &CircuitSpec, shots: u64) -> Result<Vec<FidelityRecord>> {
        let circuit = generate(spec)?;
        let hist = self.run(&circuit, shots, spec.seed)?;
        circuit
            .measured_paulis
            .iter()
            .map(|p| {
                Ok(FidelityRecord {
                    pauli: spec.basis.marginal(p),
                    x: spec.x,
                    m: spec.m,
                    seed: spec.seed,
                    estimate: estimate_circuit_fidelity(&hist, &circuit, p)?,
                    shots,
                })
            })
            .collect()
    }

    /// Run a plan in parallel; records come back in plan order.
    pub fn run_plan(&self, specs: &[CircuitSpec], shots: u64) -> Result<Vec<FidelityRecord>> {
        if shots == 0 {
            return Err(Error::Config("shots must be ≥ 1".into()));
        }
        let per_spec: Vec<Result<Vec<FidelityRecord>>> = specs
            .par_iter()
            .map(|s| {
                self.records_for(s, shots).map_err(|e| {
                    e.context(format!("spec x={} m={} basis={} replicate={}", s.x, s.m, s.basis.label(), s.replicate))
                })
            })
            .collect();
        let mut out = Vec::new();
        for r in per_spec {
            out.extend(r?);
        }
        Ok(out)
    }
}

/// `exp(Λ)` on the hard-cycle support, for the terms of `noise` inside it.
pub fn error_channel(cycle: &HardCycle, noise: &NoiseModel) -> Result<Superoperator> {
    if noise.n() != cycle.width() {
        return Err(Error::DimensionMismatch(cycle.width(), noise.n()));
    }
    let (local, _) = noise.restrict(cycle.support());
    exponentiate(&build_generator(&local, cycle.support())?, 1.0)
}

pub fn write_records<W: io::Write>(out: W, records: &[FidelityRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: io::Read>(input: R) -> Result<Vec<FidelityRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize().enumerate() {
        let r: FidelityRecord = row.map_err(|e| Error::from(e).context(format!("records line {}", i + 2)))?;
        if !(-1.0..=1.0).contains(&r.estimate) || r.shots == 0 {
            return Err(Error::Config(format!("records line {}: estimate outside [-1, 1] or zero shots", i + 2)));
        }
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use num_complex::Complex64;

    use super::*;
    use crate::channel::Gate;
    use crate::lindblad::{ConnectivityGraph, HamiltonianTerm, LindbladJump};
    use crate::protocol::{compile, experiment_plan, SpamBasis};
    use crate::pauli::SignedPauli;

    fn cnot() -> Arc<HardCycle> {
        Arc::new(HardCycle::from_gates(vec![0, 1, 2], &[Gate::new("cx", &[1, 2])]).unwrap())
    }

    fn dephasing(n: usize, q: usize, gamma: f64) -> NoiseModel {
        let z = PauliString::single(n, q, Op::Z);
        NoiseModel::new(
            ConnectivityGraph::line(n),
            vec![],
            vec![LindbladJump { label: 0, terms: vec![(z, Complex64::new(gamma.sqrt(), 0.0))] }],
            2,
        )
        .unwrap()
    }

    fn spec(x: usize, m: usize, basis: &str, seed: u64) -> CircuitSpec {
        CircuitSpec { x, m, basis: SpamBasis::local(3, &[0], basis).unwrap(), seed, replicate: 0, cycle: cnot() }
    }

    #[test]
    fn noiseless_is_exact() {
        let sim = Simulator::new(&cnot(), &NoiseModel::empty(ConnectivityGraph::line(3)), SpamError::none()).unwrap();
        for (seed, basis) in [(1, "X"), (2, "Y"), (3, "Z")] {
            for (x, m) in [(1, 1), (3, 4), (5, 7)] {
                let s = spec(x, m, basis, seed);
                let recs = sim.records_for(&s, 1000).unwrap();
                assert_eq!(recs.len(), 1);
                assert_eq!(recs[0].estimate, 1.0);
                assert_eq!(recs[0].pauli.to_string(), basis);
            }
        }
    }

    #[test]
    fn noiseless_histogram_is_concentrated() {
        let sim = Simulator::new(&cnot(), &NoiseModel::empty(ConnectivityGraph::line(3)), SpamError::none()).unwrap();
        let c = generate(&spec(1, 3, "X", 9)).unwrap();
        let h = sim.run(&c, 1000, 9).unwrap();
        let p = c.measured_paulis[0];
        let expected = if c.frame_sign(&p) > 0.0 { 0 } else { 1 };
        assert_eq!(h.counts[expected], 1000);
    }

    #[test]
    fn readout_flip_gives_constant_spam() {
        let spam = SpamError::uniform(3, 0.0, 0.02).unwrap();
        let sim = Simulator::new(&cnot(), &NoiseModel::empty(ConnectivityGraph::line(3)), spam).unwrap();
        for m in [1, 8, 32] {
            let c = generate(&spec(1, m, "Z", m as u64)).unwrap();
            let probs = sim.distribution(&c).unwrap();
            let p = c.measured_paulis[0];
            let f = c.frame_sign(&p) * (probs[0] - probs[1]);
            assert!((f - 0.96).abs() < 1e-12);
        }
        let recs = sim.records_for(&spec(1, 4, "Z", 5), 1_000_000).unwrap();
        assert!((recs[0].estimate - 0.96).abs() < 5.0 * (0.04f64 / 1e6).sqrt() * 1.0);
    }

    #[test]
    fn dephasing_decay_is_exponential() {
        let gamma = 0.01;
        let sim = Simulator::new(&cnot(), &dephasing(3, 0, gamma), SpamError::none()).unwrap();
        for seed in 0..5 {
            let c = generate(&spec(1, 16, "X", seed)).unwrap();
            let probs = sim.distribution(&c).unwrap();
            let f = c.frame_sign(&c.measured_paulis[0]) * (probs[0] - probs[1]);
            assert!((f - (-0.32f64).exp()).abs() < 1e-12, "{f}");
        }
        let c = generate(&spec(1, 16, "Z", 0)).unwrap();
        let probs = sim.distribution(&c).unwrap();
        assert!((probs[0] - probs[1]).abs() - 1.0 < 1e-12);
    }

    #[test]
    fn prep_flip_matches_readout_flip() {
        let prep = Simulator::new(&cnot(), &NoiseModel::empty(ConnectivityGraph::line(3)), SpamError::uniform(3, 0.03, 0.0).unwrap()).unwrap();
        let read = Simulator::new(&cnot(), &NoiseModel::empty(ConnectivityGraph::line(3)), SpamError::uniform(3, 0.0, 0.03).unwrap()).unwrap();
        let c = generate(&spec(3, 4, "Y", 2)).unwrap();
        let a = prep.distribution(&c).unwrap();
        let b = read.distribution(&c).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-12);
    }

    #[test]
    fn coherent_error_on_target_spreads_to_two_qubit_paulis() {
        // Two measured qubits see the CNOT-propagated frame.
        let n = 3;
        let h = HamiltonianTerm { pauli: PauliString::single(n, 2, Op::X), coefficient: 0.05 };
        let model = NoiseModel::new(ConnectivityGraph::line(n), vec![h], vec![], 2).unwrap();
        let sim = Simulator::new(&cnot(), &model, SpamError::none()).unwrap();
        let basis = SpamBasis::local(3, &[1, 2], "ZZ").unwrap();
        let s = CircuitSpec { x: 1, m: 2, basis, seed: 0, replicate: 0, cycle: cnot() };
        let c = compile(&s, vec![SignedPauli::identity(3); 3]).unwrap();
        let probs = sim.distribution(&c).unwrap();
        assert_eq!(probs.len(), 4);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(probs[0] < 1.0);
    }

    #[test]
    fn plan_runs_in_order_and_deterministically() {
        let bases = SpamBasis::singletons(3, 0).unwrap();
        let specs = experiment_plan(&[1, 3], &[2, 4], 3, &bases, 17, cnot()).unwrap();
        let sim = Simulator::new(&cnot(), &dephasing(3, 0, 0.005), SpamError::none()).unwrap();
        let a = sim.run_plan(&specs, 500).unwrap();
        let b = sim.run_plan(&specs, 500).unwrap();
        assert_eq!(a.len(), specs.len());
        assert_eq!(a, b);
        for (r, s) in a.iter().zip(&specs) {
            assert_eq!((r.x, r.m, r.seed), (s.x, s.m, s.seed));
        }
        let mut buf = Vec::new();
        write_records(&mut buf, &a).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("pauli,x,m,seed,estimate,shots\n"));
        assert_eq!(read_records(&buf[..]).unwrap(), a);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(SpamError::uniform(1, 0.5, 0.0).is_err());
        assert!(SpamError::from_json(r#"{"prep_flip": [0.1], "readout": [0.1]}"#).is_err());
        let wrong = NoiseModel::empty(ConnectivityGraph::line(2));
        assert!(matches!(Simulator::new(&cnot(), &wrong, SpamError::none()), Err(Error::DimensionMismatch(3, 2))));
        assert!(read_records("pauli,x,m,seed,estimate,shots\nX,1,2,3,1.5,10\n".as_bytes()).is_err());
    }
}
