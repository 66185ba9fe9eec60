//! Heatmap data: marginal single-qubit error probabilities per fold count.

use std::collections::{BTreeMap, BTreeSet};
use std::io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitdecay::{Cell, DecayFitResult, DecayModel, Field, Parameterization};
use crate::pauli::{all_paulis, walsh_hadamard_vec, Op, PauliString};

/// Rows are X, Y, Z; column `q` is the `q`-th measured qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub x: usize,
    pub values: Vec<[f64; 3]>,
}

impl Heatmap {
    pub fn get(&self, qubit: usize, op: Op) -> f64 {
        match op {
            Op::X => self.values[qubit][0],
            Op::Y => self.values[qubit][1],
            Op::Z => self.values[qubit][2],
            Op::I => 1.0 - self.values[qubit].iter().sum::<f64>(),
        }
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["pauli".to_string()];
        header.extend((0..self.values.len()).map(|q| format!("q{q}")));
        w.write_record(&header)?;
        for (row, label) in ["X", "Y", "Z"].iter().enumerate() {
            let mut rec = vec![label.to_string()];
            rec.extend(self.values.iter().map(|v| v[row].to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(x: usize, input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let vals = rec
                .iter()
                .skip(1)
                .map(|v| v.parse::<f64>().map_err(|e| Error::Config(format!("heatmap value {v:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(vals);
        }
        if rows.len() != 3 {
            return Err(Error::Config(format!("heatmap needs 3 rows, found {}", rows.len())));
        }
        let k = rows[0].len();
        Ok(Heatmap { x, values: (0..k).map(|q| [rows[0][q], rows[1][q], rows[2][q]]).collect() })
    }
}

/// Walsh–Hadamard transform of a full fidelity vector, then marginals.
fn heatmap_from_fidelities(x: usize, k: usize, fidelity: &BTreeMap<PauliString, f64>) -> Result<Heatmap> {
    let mut f = vec![0.0; 1 << (2 * k)];
    for p in all_paulis(k) {
        f[p.index()] = if p.is_identity() {
            1.0
        } else {
            *fidelity.get(&p).ok_or_else(|| Error::InsufficientGrid(format!("no fidelity for {p} at x={x}")))?
        };
    }
    let probs = walsh_hadamard_vec(&f);
    let mut values = vec![[0.0; 3]; k];
    for p in all_paulis(k) {
        for (q, v) in values.iter_mut().enumerate() {
            match p.op(q) {
                Op::X => v[0] += probs[p.index()],
                Op::Y => v[1] += probs[p.index()],
                Op::Z => v[2] += probs[p.index()],
                Op::I => {}
            }
        }
    }
    Ok(Heatmap { x, values })
}

fn width(paulis: &[PauliString]) -> Result<usize> {
    let k = paulis.first().map(|p| p.n()).ok_or_else(|| Error::Config("no Paulis".into()))?;
    let want: BTreeSet<PauliString> = all_paulis(k).skip(1).collect();
    let have: BTreeSet<PauliString> = paulis.iter().copied().collect();
    if want != have {
        return Err(Error::InsufficientGrid(format!("heatmaps need every non-identity Pauli on {k} qubits")));
    }
    Ok(k)
}

/// Heatmaps from the fitted per-cycle fidelities
/// `1 − Σ_Q (quad_Q x² + lin_Q x + cst_Q)`.
pub fn heatmaps_from_fit(fit: &DecayFitResult, xs: &[usize]) -> Result<Vec<Heatmap>> {
    if fit.parameterization != Parameterization::PerPauli {
        return Err(Error::Config("heatmaps need the per-Pauli parameterization".into()));
    }
    let k = width(&fit.paulis)?;
    let model = DecayModel::new(&fit.paulis, fit.parameterization)?;
    xs.iter()
        .map(|&x| {
            let xf = x as f64;
            let fid = fit
                .paulis
                .iter()
                .enumerate()
                .map(|(p, pauli)| {
                    let s: f64 = model
                        .links(p)
                        .iter()
                        .map(|&q| fit.param(q, Field::Quad) * xf * xf + fit.param(q, Field::Lin) * xf + fit.param(q, Field::Cst))
                        .sum();
                    (*pauli, 1.0 - s)
                })
                .collect();
            heatmap_from_fidelities(x, k, &fid)
        })
        .collect()
}

/// Heatmaps from raw cells: per `(P, x)` the decay `exp(slope)` of
/// `log(mean)` against `m`. Cells with mean ≤ `min_mean` are skipped unless
/// that leaves fewer than two, in which case every positive mean is used.
pub fn heatmaps_from_cells(cells: &[Cell], min_mean: f64) -> Result<Vec<Heatmap>> {
    let paulis: Vec<PauliString> = cells.iter().map(|c| c.pauli).collect::<BTreeSet<_>>().into_iter().collect();
    let k = width(&paulis)?;
    let mut pts: BTreeMap<(usize, PauliString), Vec<(f64, f64)>> = BTreeMap::new();
    for c in cells {
        pts.entry((c.x, c.pauli)).or_default().push((c.m as f64, c.mean));
    }
    let mut per_x: BTreeMap<usize, BTreeMap<PauliString, f64>> = BTreeMap::new();
    for ((x, p), all) in pts {
        let pick = |cut: f64| -> Vec<(f64, f64)> { all.iter().filter(|c| c.1 > cut).map(|&(m, f)| (m, f.ln())).collect() };
        let mut v = pick(min_mean);
        if v.len() < 2 {
            v = pick(0.0);
        }
        let n = v.len() as f64;
        let (sm, sy) = v.iter().fold((0.0, 0.0), |(a, b), (m, y)| (a + m, b + y));
        let (mm, my) = (sm / n, sy / n);
        let sxx: f64 = v.iter().map(|(m, _)| (m - mm).powi(2)).sum();
        if v.len() < 2 || sxx == 0.0 {
            return Err(Error::InsufficientGrid(format!("fewer than 2 usable m values for {p} at x={x}")));
        }
        let slope = v.iter().map(|(m, y)| (m - mm) * (y - my)).sum::<f64>() / sxx;
        per_x.entry(x).or_default().insert(p, slope.exp());
    }
    per_x.into_iter().map(|(x, fid)| heatmap_from_fidelities(x, k, &fid)).collect()
}
