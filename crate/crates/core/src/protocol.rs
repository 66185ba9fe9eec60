//! Randomized-compiling circuits around an x-folded hard cycle.
//!
//! A circuit prepares the +1 eigenstate of a SPAM basis, applies `m` dressed
//! cycles (a uniformly random Pauli layer followed by `x` applications of the
//! hard cycle), a closing random Pauli layer, and enough ideal inverse cycles
//! to bring the total hard-cycle count to a multiple of the cyclicity. The
//! ideal circuit is then a Pauli, the *net frame*, whose commutation sign
//! with each measured Pauli corrects the raw estimate.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{Gate, HardCycle};
use crate::error::{Error, Result};
use crate::pauli::{Op, PauliString, SignedPauli};

/// Local-product SPAM basis: each measured qubit is prepared and read out
/// along one Pauli axis, and every non-identity product of those axes is
/// estimated from the same shots.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpamBasis {
    label: String,
    register: usize,
    measured: Vec<usize>,
    axes: Vec<Op>,
    paulis: Vec<PauliString>,
}

impl SpamBasis {
    /// `axes` is a Pauli string over `measured` (e.g. `"X"` or `"ZZ"`) with no identities.
    pub fn local(register: usize, measured: &[usize], axes: &str) -> Result<Self> {
        let local: PauliString = axes.parse()?;
        if local.n() != measured.len() {
            return Err(Error::Config(format!(
                "basis {axes:?} has {} axes for {} measured qubits",
                local.n(),
                measured.len()
            )));
        }
        if local.weight() != local.n() {
            return Err(Error::Config(format!("basis {axes:?} must name an axis on every measured qubit")));
        }
        let mut sorted = measured.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != measured.len() || measured.iter().any(|&q| q >= register) {
            return Err(Error::Config(format!("invalid measured qubits {measured:?} for a {register}-qubit register")));
        }
        let ops: Vec<Op> = (0..local.n()).map(|i| local.op(i)).collect();
        let k = measured.len();
        let paulis = (1u32..1 << k)
            .map(|subset| {
                let mut full = vec![Op::I; register];
                for (i, &q) in measured.iter().enumerate() {
                    if subset >> i & 1 == 1 {
                        full[q] = ops[i];
                    }
                }
                PauliString::from_ops(&full).expect("register within range")
            })
            .collect();
        Ok(Self { label: axes.to_string(), register, measured: measured.to_vec(), axes: ops, paulis })
    }

    /// The three single-axis bases `{X}`, `{Y}`, `{Z}` on one qubit.
    pub fn singletons(register: usize, qubit: usize) -> Result<Vec<SpamBasis>> {
        ["X", "Y", "Z"].iter().map(|a| Self::local(register, &[qubit], a)).collect()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn register(&self) -> usize {
        self.register
    }

    pub fn measured(&self) -> &[usize] {
        &self.measured
    }

    /// Axis prepared and measured on the `i`-th measured qubit.
    pub fn axis(&self, i: usize) -> Op {
        self.axes[i]
    }

    /// Register-width Paulis estimated by this basis.
    pub fn paulis(&self) -> &[PauliString] {
        &self.paulis
    }

    /// Pauli restricted to the measured qubits, as reported in records.
    pub fn marginal(&self, p: &PauliString) -> PauliString {
        p.restrict(&self.measured)
    }

    /// Bit mask over measured positions on which `p` acts.
    fn outcome_mask(&self, p: &PauliString) -> u64 {
        self.measured
            .iter()
            .enumerate()
            .filter(|(_, &q)| p.op(q) != Op::I)
            .fold(0, |m, (i, _)| m | 1 << i)
    }
}

/// Parameters of one random circuit.
#[derive(Clone, Debug)]
pub struct CircuitSpec {
    pub x: usize,
    pub m: usize,
    pub basis: SpamBasis,
    pub seed: u64,
    pub replicate: usize,
    pub cycle: Arc<HardCycle>,
}

impl CircuitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        if self.basis.register() != self.cycle.width() {
            return Err(Error::DimensionMismatch(self.cycle.width(), self.basis.register()));
        }
        self.cycle.check_fold(self.x)
    }
}

/// A fully specified circuit with its ideal net Pauli.
#[derive(Clone, Debug)]
pub struct CompiledCircuit {
    pub spec: CircuitSpec,
    /// `m + 1` Pauli layers; layer `i < m` precedes the `i`-th folded cycle.
    pub easy_cycles: Vec<SignedPauli>,
    pub net_frame: SignedPauli,
    pub measured_paulis: Vec<PauliString>,
    /// Ideal inverse cycles applied before readout.
    pub closing_inverses: usize,
}

impl CompiledCircuit {
    /// Sign `χ(F, P)` that the ideal circuit imprints on measured Pauli `P`.
    pub fn frame_sign(&self, p: &PauliString) -> f64 {
        self.net_frame.pauli.chi(p)
    }
}

/// Draw the easy cycles from a generator keyed by `spec.seed` and compile.
pub fn generate(spec: &CircuitSpec) -> Result<CompiledCircuit> {
    spec.validate()?;
    let w = spec.cycle.width();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let layers = (0..=spec.m)
        .map(|_| SignedPauli::from(PauliString::from_index(w, rng.gen_range(0..1usize << (2 * w)))))
        .collect();
    compile(spec, layers)
}

/// Compile a circuit from explicit easy-cycle layers (`m + 1` of them).
pub fn compile(spec: &CircuitSpec, easy_cycles: Vec<SignedPauli>) -> Result<CompiledCircuit> {
    spec.validate()?;
    let cycle = &spec.cycle;
    if !cycle.is_clifford() {
        return Err(Error::NotClifford);
    }
    if easy_cycles.len() != spec.m + 1 {
        return Err(Error::Config(format!("expected {} easy layers, got {}", spec.m + 1, easy_cycles.len())));
    }
    let w = cycle.width();
    // Invariant: ideal prefix = frame · C^power.
    let mut frame = SignedPauli::identity(w);
    let mut power = 0usize;
    for layer in &easy_cycles[..spec.m] {
        if layer.n() != w {
            return Err(Error::DimensionMismatch(w, layer.n()));
        }
        frame = layer.mul(&frame);
        for _ in 0..spec.x {
            frame = cycle.conjugate(&frame)?;
            power += 1;
        }
    }
    let last = &easy_cycles[spec.m];
    if last.n() != w {
        return Err(Error::DimensionMismatch(w, last.n()));
    }
    frame = last.mul(&frame);
    let closing_inverses = power % cycle.cyclicity();
    for _ in 0..closing_inverses {
        frame = cycle.conjugate_inverse(&frame)?;
    }
    Ok(CompiledCircuit {
        spec: spec.clone(),
        easy_cycles,
        net_frame: frame,
        measured_paulis: spec.basis.paulis().to_vec(),
        closing_inverses,
    })
}

/// Counts over outcome bitstrings; bit `i` is the outcome (1 = −1 eigenvalue)
/// of the `i`-th measured qubit along its basis axis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomeHistogram {
    pub counts: Vec<u64>,
}

impl OutcomeHistogram {
    pub fn new(measured: usize) -> Self {
        Self { counts: vec![0; 1 << measured] }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Frame-corrected empirical expectation of `P`'s ±1 eigenvalue.
pub fn estimate_circuit_fidelity(counts: &OutcomeHistogram, circuit: &CompiledCircuit, p: &PauliString) -> Result<f64> {
    if !circuit.measured_paulis.contains(p) {
        return Err(Error::NotInBasis(p.to_string()));
    }
    let total = counts.total();
    if total == 0 {
        return Err(Error::EmptyCounts);
    }
    let mask = circuit.spec.basis.outcome_mask(p);
    let signed: i64 = counts
        .counts
        .iter()
        .enumerate()
        .map(|(b, &c)| if (b as u64 & mask).count_ones() % 2 == 0 { c as i64 } else { -(c as i64) })
        .sum();
    Ok(circuit.frame_sign(p) * signed as f64 / total as f64)
}

/// Seed for one grid point, derived by hashing the point's coordinates.
pub fn derive_seed(master_seed: u64, x: usize, m: usize, basis: &str, replicate: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(format!("{master_seed}:{x}:{m}:{basis}:{replicate}").as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Full factorial grid in `x`, `m`, basis, replicate order.
pub fn experiment_plan(
    x_values: &[usize],
    m_values: &[usize],
    randomizations: usize,
    bases: &[SpamBasis],
    master_seed: u64,
    cycle: Arc<HardCycle>,
) -> Result<Vec<CircuitSpec>> {
    for &x in x_values {
        cycle.check_fold(x)?;
    }
    let mut specs = Vec::with_capacity(x_values.len() * m_values.len() * bases.len() * randomizations);
    for &x in x_values {
        for &m in m_values {
            for basis in bases {
                for replicate in 0..randomizations {
                    let spec = CircuitSpec {
                        x,
                        m,
                        basis: basis.clone(),
                        seed: derive_seed(master_seed, x, m, basis.label(), replicate),
                        replicate,
                        cycle: Arc::clone(&cycle),
                    };
                    spec.validate()?;
                    specs.push(spec);
                }
            }
        }
    }
    Ok(specs)
}

/// Plan JSON document.
///
/// `measured` and `hard_cycle` are optional and default to the
/// ancilla-next-to-CNOT layout: qubit 0 measured, CNOT on qubits 1 → 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDoc {
    pub x: Vec<usize>,
    pub m: Vec<usize>,
    pub randomizations: usize,
    pub bases: Vec<String>,
    pub master_seed: u64,
    pub shots: u64,
    #[serde(default = "default_measured")]
    pub measured: Vec<usize>,
    #[serde(default = "default_cycle")]
    pub hard_cycle: Vec<Gate>,
}

fn default_measured() -> Vec<usize> {
    vec![0]
}

fn default_cycle() -> Vec<Gate> {
    vec![Gate::new("cx", &[1, 2])]
}

impl PlanDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PlanDoc = serde_json::from_str(text)?;
        if doc.x.is_empty() || doc.m.is_empty() || doc.bases.is_empty() || doc.randomizations == 0 {
            return Err(Error::Config("plan needs non-empty x, m, bases and randomizations ≥ 1".into()));
        }
        if doc.m.contains(&0) {
            return Err(Error::Config("m values must be ≥ 1".into()));
        }
        Ok(doc)
    }

    pub fn hard_cycle(&self, register: usize) -> Result<Arc<HardCycle>> {
        Ok(Arc::new(HardCycle::from_gates((0..register).collect(), &self.hard_cycle)?))
    }

    pub fn spam_bases(&self, register: usize) -> Result<Vec<SpamBasis>> {
        self.bases.iter().map(|b| SpamBasis::local(register, &self.measured, b)).collect()
    }

    pub fn specs(&self, register: usize) -> Result<Vec<CircuitSpec>> {
        experiment_plan(
            &self.x,
            &self.m,
            self.randomizations,
            &self.spam_bases(register)?,
            self.master_seed,
            self.hard_cycle(register)?,
        )
    }
}
