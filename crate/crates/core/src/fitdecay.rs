//! Global fit of folded fidelity decays and the coherent/decoherent budget.
//!
//! Each fitted Pauli `P` decays as
//! `A_P · (1 − Σ_Q quad_Q x² − Σ_Q lin_Q x − Σ_Q cst_Q)^m`. In the default
//! parameterization the sums run over the fitted Paulis `Q` anticommuting with
//! `P`, so `quad_Q/2` is the coherent error rate of `Q`. The alternative
//! parameterization fits one `(A, a, b, c)` quadruple per fidelity and the
//! sums collapse to that Pauli's own coefficients.
//!
//! Note that `a_P` in the per-fidelity model is the anticommuting sum
//! `Σ_Q quad_Q`, not `|h_P|²`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lsq::{self, Problem};
use crate::notation::format_uncertainty;
use crate::pauli::PauliString;
use crate::simulate::FidelityRecord;

const INIT_MIN_MEAN: f64 = 0.05;
const FALLBACK_RATE: f64 = 1e-4;
pub const A_BOUNDS: (f64, f64) = (0.0, 1.2);
pub const RATE_BOUNDS: (f64, f64) = (0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameterization {
    /// `(A_P, quad_P, lin_P, cst_P)` per Pauli, coupled through anticommutation.
    PerPauli,
    /// `(A_P, a_P, b_P, c_P)` per fidelity, uncoupled.
    PerFidelity,
}

/// Offset of a parameter inside a Pauli's block of four.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    A = 0,
    Quad = 1,
    Lin = 2,
    Cst = 3,
}

/// Sample statistics of one `(P, x, m)` cell over randomizations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub pauli: PauliString,
    pub x: usize,
    pub m: usize,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    /// Standard error used as the residual weight.
    pub se: f64,
}

/// Group records into cells ordered by `(P, x, m)`.
///
/// Cells with a single randomization or zero spread get the pooled variance;
/// if nothing has spread the weights are uniform.
pub fn aggregate(records: &[FidelityRecord]) -> Vec<Cell> {
    let mut groups: BTreeMap<(PauliString, usize, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry((r.pauli, r.x, r.m)).or_default().push(r.estimate);
    }
    let mut cells: Vec<Cell> = groups
        .into_iter()
        .map(|((pauli, x, m), v)| {
            let n = v.len();
            let mean = v.iter().sum::<f64>() / n as f64;
            let var = if n > 1 { v.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
            Cell { pauli, x, m, n, mean, std: var.sqrt(), se: 0.0 }
        })
        .collect();
    let (num, den) = cells
        .iter()
        .filter(|c| c.n > 1)
        .fold((0.0, 0usize), |(s, d), c| (s + (c.n - 1) as f64 * c.std * c.std, d + c.n - 1));
    let pooled = if den > 0 { num / den as f64 } else { 0.0 };
    for c in &mut cells {
        c.se = if c.n > 1 && c.std > 0.0 {
            c.std / (c.n as f64).sqrt()
        } else if pooled > 0.0 {
            (pooled / c.n as f64).sqrt()
        } else {
            1.0
        };
    }
    cells
}

/// Decay model over a fixed list of Paulis.
#[derive(Clone, Debug)]
pub struct DecayModel {
    paulis: Vec<PauliString>,
    parameterization: Parameterization,
    /// For each fitted Pauli, the Paulis whose rates enter its decay.
    links: Vec<Vec<usize>>,
}

impl DecayModel {
    pub fn new(paulis: &[PauliString], parameterization: Parameterization) -> Result<Self> {
        if paulis.is_empty() {
            return Err(Error::Config("no Paulis to fit".into()));
        }
        let n = paulis[0].n();
        if let Some(p) = paulis.iter().find(|p| p.n() != n) {
            return Err(Error::DimensionMismatch(n, p.n()));
        }
        if paulis.iter().any(|p| p.is_identity()) {
            return Err(Error::Config("the identity has no decay to fit".into()));
        }
        let unique: BTreeSet<_> = paulis.iter().collect();
        if unique.len() != paulis.len() {
            return Err(Error::Config("duplicate Paulis in fit".into()));
        }
        let links = match parameterization {
            Parameterization::PerPauli => paulis
                .iter()
                .map(|p| (0..paulis.len()).filter(|&q| !p.commutes_with(&paulis[q])).collect())
                .collect(),
            Parameterization::PerFidelity => (0..paulis.len()).map(|i| vec![i]).collect(),
        };
        Ok(Self { paulis: paulis.to_vec(), parameterization, links })
    }

    pub fn paulis(&self) -> &[PauliString] {
        &self.paulis
    }

    pub fn parameterization(&self) -> Parameterization {
        self.parameterization
    }

    pub fn links(&self, p: usize) -> &[usize] {
        &self.links[p]
    }

    pub fn n_params(&self) -> usize {
        4 * self.paulis.len()
    }

    pub fn index(p: usize, field: Field) -> usize {
        4 * p + field as usize
    }

    pub fn lower(&self) -> Vec<f64> {
        (0..self.n_params()).map(|i| if i % 4 == 0 { A_BOUNDS.0 } else { RATE_BOUNDS.0 }).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        (0..self.n_params()).map(|i| if i % 4 == 0 { A_BOUNDS.1 } else { RATE_BOUNDS.1 }).collect()
    }

    pub fn parameter_names(&self) -> Vec<String> {
        let labels = match self.parameterization {
            Parameterization::PerPauli => ["A", "quad", "lin", "cst"],
            Parameterization::PerFidelity => ["A", "a", "b", "c"],
        };
        self.paulis.iter().flat_map(|p| labels.iter().map(move |l| format!("{l}_{p}"))).collect()
    }

    fn base(&self, params: &[f64], p: usize, x: f64) -> f64 {
        let s: f64 = self.links[p]
            .iter()
            .map(|&q| {
                params[Self::index(q, Field::Quad)] * x * x
                    + params[Self::index(q, Field::Lin)] * x
                    + params[Self::index(q, Field::Cst)]
            })
            .sum();
        1.0 - s
    }

    /// Predicted mean fidelity of Pauli `p` at `(x, m)`.
    pub fn predict(&self, params: &[f64], p: usize, x: usize, m: usize) -> f64 {
        params[Self::index(p, Field::A)] * self.base(params, p, x as f64).powi(m as i32)
    }

    /// Gradient of [`predict`](Self::predict) with respect to every parameter.
    pub fn gradient(&self, params: &[f64], p: usize, x: usize, m: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let xf = x as f64;
        let base = self.base(params, p, xf);
        let a = params[Self::index(p, Field::A)];
        out[Self::index(p, Field::A)] = base.powi(m as i32);
        let d = if m == 0 { 0.0 } else { -a * m as f64 * base.powi(m as i32 - 1) };
        for &q in &self.links[p] {
            out[Self::index(q, Field::Quad)] += d * xf * xf;
            out[Self::index(q, Field::Lin)] += d * xf;
            out[Self::index(q, Field::Cst)] += d;
        }
    }
}

/// Weighted residuals `(model − mean)/se` over a set of cells.
pub struct DecayProblem<'a> {
    pub model: &'a DecayModel,
    pub cells: &'a [Cell],
    /// Fitted-Pauli index of each cell.
    pub cell_pauli: Vec<usize>,
}

impl<'a> DecayProblem<'a> {
    pub fn new(model: &'a DecayModel, cells: &'a [Cell]) -> Result<Self> {
        let cell_pauli = cells
            .iter()
            .map(|c| {
                model.paulis.iter().position(|p| *p == c.pauli).ok_or_else(|| Error::NotInBasis(c.pauli.to_string()))
            })
            .collect::<Result<_>>()?;
        Ok(Self { model, cells, cell_pauli })
    }

    /// `Σ r_i²` at `params`.
    pub fn cost(&self, params: &[f64]) -> f64 {
        let mut r = vec![0.0; self.cells.len()];
        self.residuals(params, &mut r);
        r.iter().map(|v| v * v).sum()
    }
}

impl Problem for DecayProblem<'_> {
    fn n_residuals(&self) -> usize {
        self.cells.len()
    }

    fn n_params(&self) -> usize {
        self.model.n_params()
    }

    fn residuals(&self, params: &[f64], out: &mut [f64]) {
        for (i, c) in self.cells.iter().enumerate() {
            out[i] = (self.model.predict(params, self.cell_pauli[i], c.x, c.m) - c.mean) / c.se;
        }
    }

    fn jacobian(&self, params: &[f64], out: &mut DMatrix<f64>) {
        let mut g = vec![0.0; self.model.n_params()];
        for (i, c) in self.cells.iter().enumerate() {
            self.model.gradient(params, self.cell_pauli[i], c.x, c.m, &mut g);
            for (j, v) in g.iter().enumerate() {
                out[(i, j)] = v / c.se;
            }
        }
    }
}

/// Least-squares solution of `a·θ = b`, minimum norm when underdetermined.
fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |x, &y| x.max(y));
    svd.solve(b, smax * 1e-12).unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// Starting point from log-linear slopes in `m` and a quadratic in `x`.
pub fn initialize(model: &DecayModel, cells: &[Cell]) -> Vec<f64> {
    let n = model.paulis.len();
    let mut params = vec![0.0; model.n_params()];
    let mut sums = DMatrix::<f64>::zeros(n, 3);
    let mut have_any = false;
    for (p, pauli) in model.paulis.iter().enumerate() {
        let mut per_x: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
        for c in cells.iter().filter(|c| c.pauli == *pauli && c.mean > INIT_MIN_MEAN) {
            per_x.entry(c.x).or_default().push((c.m as f64, c.mean.ln()));
        }
        let mut rates = Vec::new();
        let mut intercepts = Vec::new();
        for (x, pts) in per_x {
            let ms: BTreeSet<u64> = pts.iter().map(|(m, _)| m.to_bits()).collect();
            if ms.len() < 2 {
                continue;
            }
            let a = DMatrix::from_fn(pts.len(), 2, |i, j| if j == 0 { 1.0 } else { pts[i].0 });
            let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
            let coef = lstsq(&a, &b);
            rates.push((x as f64, 1.0 - coef[1].exp()));
            intercepts.push(coef[0]);
        }
        let a_p = if intercepts.is_empty() {
            1.0
        } else {
            (intercepts.iter().sum::<f64>() / intercepts.len() as f64).exp()
        };
        params[DecayModel::index(p, Field::A)] = a_p.clamp(A_BOUNDS.0, A_BOUNDS.1);
        if rates.is_empty() {
            let k = model.links[p].len() as f64;
            sums[(p, 2)] = FALLBACK_RATE * k;
            continue;
        }
        have_any = true;
        let a = DMatrix::from_fn(rates.len(), 3, |i, j| rates[i].0.powi(2 - j as i32));
        let b = DVector::from_iterator(rates.len(), rates.iter().map(|r| r.1));
        let coef = lstsq(&a, &b);
        for j in 0..3 {
            sums[(p, j)] = coef[j];
        }
    }
    if !have_any {
        for p in 0..n {
            params[DecayModel::index(p, Field::A)] = 1.0;
            for f in [Field::Quad, Field::Lin, Field::Cst] {
                params[DecayModel::index(p, f)] = FALLBACK_RATE;
            }
        }
        return params;
    }
    let links = DMatrix::from_fn(n, n, |p, q| if model.links[p].contains(&q) { 1.0 } else { 0.0 });
    for (j, f) in [Field::Quad, Field::Lin, Field::Cst].into_iter().enumerate() {
        let per = lstsq(&links, &sums.column(j).into_owned());
        for q in 0..n {
            params[DecayModel::index(q, f)] = per[q].clamp(RATE_BOUNDS.0, RATE_BOUNDS.1);
        }
    }
    params
}

/// Cell-level outcome of a fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFit {
    pub pauli: PauliString,
    pub x: usize,
    pub m: usize,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub se: f64,
    pub prediction: f64,
    /// `(prediction − mean)/se`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFitResult {
    pub parameterization: Parameterization,
    pub paulis: Vec<PauliString>,
    pub parameter_names: Vec<String>,
    pub parameters: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub correlation: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: usize,
    pub reduced_chi2: f64,
    pub iterations: usize,
    pub projected_gradient: f64,
    pub cells: Vec<CellFit>,
}

impl DecayFitResult {
    pub fn pauli_index(&self, p: &PauliString) -> Option<usize> {
        self.paulis.iter().position(|q| q == p)
    }

    pub fn param(&self, p: usize, field: Field) -> f64 {
        self.parameters[DecayModel::index(p, field)]
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.covariance[i][j]
    }

    /// Value and standard error of `Σ_{Q linked to P} field_Q`, e.g. `a_X = quad_Y + quad_Z`.
    pub fn linked_sum(&self, p: usize, field: Field) -> Result<(f64, f64)> {
        let model = DecayModel::new(&self.paulis, self.parameterization)?;
        let idx: Vec<usize> = model.links(p).iter().map(|&q| DecayModel::index(q, field)).collect();
        let value = idx.iter().map(|&i| self.parameters[i]).sum();
        let var: f64 = idx.iter().flat_map(|&i| idx.iter().map(move |&j| (i, j))).map(|(i, j)| self.cov(i, j)).sum();
        Ok((value, var.max(0.0).sqrt()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub parameterization: Parameterization,
    /// Parameters held fixed at the given values.
    pub pinned: Vec<(usize, f64)>,
    pub start: Option<Vec<f64>>,
    pub lsq: lsq::Options,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { parameterization: Parameterization::PerPauli, pinned: Vec::new(), start: None, lsq: lsq::Options::default() }
    }
}

/// Ensure every Pauli has the full `x × m` grid with at least two of each.
pub fn check_grid(cells: &[Cell], paulis: &[PauliString]) -> Result<()> {
    let xs: BTreeSet<usize> = cells.iter().map(|c| c.x).collect();
    let ms: BTreeSet<usize> = cells.iter().map(|c| c.m).collect();
    if xs.len() < 2 || ms.len() < 2 {
        return Err(Error::InsufficientGrid(format!(
            "need at least 2 distinct x and 2 distinct m, found {} and {}",
            xs.len(),
            ms.len()
        )));
    }
    let present: BTreeSet<(PauliString, usize, usize)> = cells.iter().map(|c| (c.pauli, c.x, c.m)).collect();
    let mut missing = Vec::new();
    for p in paulis {
        for &x in &xs {
            for &m in &ms {
                if !present.contains(&(*p, x, m)) {
                    missing.push(format!("({p}, x={x}, m={m})"));
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::InsufficientGrid(format!("missing cells: {}", missing.join(", "))));
    }
    Ok(())
}

pub fn fit(records: &[FidelityRecord], paulis: &[PauliString]) -> Result<DecayFitResult> {
    fit_with(records, paulis, &FitOptions::default())
}

pub fn fit_with(records: &[FidelityRecord], paulis: &[PauliString], opts: &FitOptions) -> Result<DecayFitResult> {
    let model = DecayModel::new(paulis, opts.parameterization)?;
    let wanted: BTreeSet<&PauliString> = paulis.iter().collect();
    let kept: Vec<FidelityRecord> = records.iter().filter(|r| wanted.contains(&r.pauli)).cloned().collect();
    let cells = aggregate(&kept);
    check_grid(&cells, paulis)?;
    fit_cells(&model, &cells, opts)
}

/// Fit pre-aggregated cells.
pub fn fit_cells(model: &DecayModel, cells: &[Cell], opts: &FitOptions) -> Result<DecayFitResult> {
    let problem = DecayProblem::new(model, cells)?;
    let np = model.n_params();
    let mut start = match &opts.start {
        Some(s) if s.len() == np => s.clone(),
        Some(s) => return Err(Error::DimensionMismatch(np, s.len())),
        None => initialize(model, cells),
    };
    let mut pinned = vec![false; np];
    for &(i, v) in &opts.pinned {
        if i >= np {
            return Err(Error::Config(format!("pinned parameter {i} out of range")));
        }
        pinned[i] = true;
        start[i] = v;
    }
    let sol = lsq::minimize(&problem, &start, &model.lower(), &model.upper(), &pinned, &opts.lsq)?;

    let free: Vec<usize> = (0..np).filter(|&j| !pinned[j]).collect();
    let dof = cells.len().saturating_sub(free.len());
    let scale = if dof > 0 { sol.cost / dof as f64 } else { 1.0 };
    let jf = DMatrix::from_fn(cells.len(), free.len(), |i, c| sol.jacobian[(i, free[c])]);
    let cov_free = lsq::covariance(&jf, scale);
    let mut cov = vec![vec![0.0; np]; np];
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            cov[i][j] = cov_free[(a, b)];
        }
    }
    let std_errors: Vec<f64> = (0..np).map(|i| cov[i][i].max(0.0).sqrt()).collect();
    let correlation = (0..np)
        .map(|i| {
            (0..np)
                .map(|j| {
                    let d = std_errors[i] * std_errors[j];
                    if d > 0.0 { cov[i][j] / d } else if i == j { 1.0 } else { 0.0 }
                })
                .collect()
        })
        .collect();
    let cell_fits = cells
        .iter()
        .zip(&problem.cell_pauli)
        .zip(&sol.residuals)
        .map(|((c, &p), &r)| CellFit {
            pauli: c.pauli,
            x: c.x,
            m: c.m,
            n: c.n,
            mean: c.mean,
            std: c.std,
            se: c.se,
            prediction: model.predict(&sol.params, p, c.x, c.m),
            residual: r,
        })
        .collect();
    Ok(DecayFitResult {
        parameterization: model.parameterization,
        paulis: model.paulis.clone(),
        parameter_names: model.parameter_names(),
        parameters: sol.params,
        standard_errors: std_errors,
        covariance: cov,
        correlation,
        chi2: sol.cost,
        dof,
        reduced_chi2: if dof > 0 { sol.cost / dof as f64 } else { f64::NAN },
        iterations: sol.iterations,
        projected_gradient: sol.projected_gradient,
        cells: cell_fits,
    })
}

/// One row of the budget table: halves of the fitted rates with errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetEntry {
    pub pauli: PauliString,
    pub quad_half: f64,
    pub quad_half_err: f64,
    pub lin_half: f64,
    pub lin_half_err: f64,
    pub cst_half: f64,
    pub cst_half_err: f64,
    /// `(lin + cst)/2`.
    pub sum: f64,
    pub sum_err: f64,
    /// `(lin − cst)/2`.
    pub diff: f64,
    pub diff_err: f64,
    pub corr_lin_cst: f64,
}

impl BudgetEntry {
    /// Coherent error rate `quad/2`.
    pub fn coherent(&self) -> (f64, f64) {
        (self.quad_half, self.quad_half_err)
    }

    /// Everything else, `(lin + cst)/2`.
    pub fn other(&self) -> (f64, f64) {
        (self.sum, self.sum_err)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub entries: Vec<BudgetEntry>,
}

impl ErrorBudget {
    pub fn get(&self, p: &PauliString) -> Option<&BudgetEntry> {
        self.entries.iter().find(|e| e.pauli == *p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl fmt::Display for ErrorBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Pauli\tquad/2\tlin/2\tcst/2\t(lin+cst)/2\t(lin-cst)/2")?;
        for e in &self.entries {
            writeln!(
                f,
                "{}\t{}\t{}\t{}\t{}\t{}",
                e.pauli,
                format_uncertainty(e.quad_half, e.quad_half_err),
                format_uncertainty(e.lin_half, e.lin_half_err),
                format_uncertainty(e.cst_half, e.cst_half_err),
                format_uncertainty(e.sum, e.sum_err),
                format_uncertainty(e.diff, e.diff_err),
            )?;
        }
        Ok(())
    }
}

/// Reduce a per-Pauli fit to coherent and other error rates.
pub fn budget(fit: &DecayFitResult) -> Result<ErrorBudget> {
    if fit.parameterization != Parameterization::PerPauli {
        return Err(Error::Config("the error budget needs the per-Pauli parameterization".into()));
    }
    let entries = (0..fit.paulis.len())
        .map(|p| {
            let q = DecayModel::index(p, Field::Quad);
            let l = DecayModel::index(p, Field::Lin);
            let c = DecayModel::index(p, Field::Cst);
            let (vl, vc, clc) = (fit.cov(l, l), fit.cov(c, c), fit.cov(l, c));
            let sd = |v: f64| v.max(0.0).sqrt();
            BudgetEntry {
                pauli: fit.paulis[p],
                quad_half: fit.parameters[q] / 2.0,
                quad_half_err: sd(fit.cov(q, q)) / 2.0,
                lin_half: fit.parameters[l] / 2.0,
                lin_half_err: sd(vl) / 2.0,
                cst_half: fit.parameters[c] / 2.0,
                cst_half_err: sd(vc) / 2.0,
                sum: (fit.parameters[l] + fit.parameters[c]) / 2.0,
                sum_err: sd(vl + vc + 2.0 * clc) / 2.0,
                diff: (fit.parameters[l] - fit.parameters[c]) / 2.0,
                diff_err: sd(vl + vc - 2.0 * clc) / 2.0,
                corr_lin_cst: if vl > 0.0 && vc > 0.0 { clc / (vl * vc).sqrt() } else { 0.0 },
            }
        })
        .collect();
    Ok(ErrorBudget { entries })
}

/// One row of the decay-curve export: data and model per `(P, x, m)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCurveRow {
    pub pauli: PauliString,
    pub x: usize,
    pub m: usize,
    pub mean: f64,
    pub std: f64,
    pub prediction: f64,
}

pub fn decay_curve(fit: &DecayFitResult) -> Vec<DecayCurveRow> {
    fit.cells
        .iter()
        .map(|c| DecayCurveRow { pauli: c.pauli, x: c.x, m: c.m, mean: c.mean, std: c.std, prediction: c.prediction })
        .collect()
}

pub fn write_decay_curve<W: io::Write>(out: W, rows: &[DecayCurveRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_decay_curve<R: io::Read>(input: R) -> Result<Vec<DecayCurveRow>> {
    csv::Reader::from_reader(input).deserialize().map(|r| r.map_err(Error::from)).collect()
}
