//! `foldcer` command-line driver.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use foldcer::export::{heatmaps_from_cells, heatmaps_from_fit};
use foldcer::fitdecay::{self, aggregate, budget, decay_curve, write_decay_curve, DecayFitResult, FitOptions, Parameterization};
use foldcer::lindblad::NoiseModel;
use foldcer::oracle::oracle_check;
use foldcer::pauli::{all_paulis, PauliString};
use foldcer::protocol::PlanDoc;
use foldcer::simulate::{read_records, write_records, SpamError, Simulator};
use foldcer::{Error, Result};

const MIN_SHOTS: u64 = 100;

#[derive(Parser)]
#[command(name = "foldcer", version, about = "Folded cycle error reconstruction: simulate, fit and report")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a plan and write records.csv plus manifest.json.
    Simulate(SimulateArgs),
    /// Fit records and write fit.json, budget.json and decay_curve.csv.
    Fit(FitArgs),
    /// Print the error budget of a fit report.
    Budget(BudgetArgs),
    /// Compare the fast generator and propagation formula against the exact oracle.
    OracleCheck(OracleArgs),
    /// Write heatmap_x{X}.csv marginal error probabilities per fold count.
    HeatmapExport(HeatmapArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, required_unless_present = "manifest")]
    noise: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    plan: Option<PathBuf>,
    #[arg(long)]
    spam: Option<PathBuf>,
    /// Overrides the plan's shot count.
    #[arg(long)]
    shots: Option<u64>,
    /// Overrides the plan's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Rerun exactly the configuration captured in a previous manifest.
    #[arg(long, conflicts_with_all = ["noise", "plan", "spam", "shots", "seed"])]
    manifest: Option<PathBuf>,
    /// Worker threads; 0 uses the default pool.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    records: PathBuf,
    /// Comma-separated Paulis; defaults to every non-identity Pauli of the record width.
    #[arg(long, value_delimiter = ',')]
    paulis: Vec<PauliString>,
    #[arg(long, value_enum, default_value = "per-pauli")]
    parameterization: ParamArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ParamArg {
    PerPauli,
    PerFidelity,
}

#[derive(Args)]
struct BudgetArgs {
    /// Fit report written by `fit`.
    #[arg(long)]
    fit: PathBuf,
    /// Also write the budget as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    noise: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 3.0, 5.0, 7.0, 9.0])]
    x: Vec<f64>,
    /// Tolerance for the generator and transition comparisons.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "source")]
struct HeatmapSource {
    /// Fit report written by `fit`.
    #[arg(long)]
    fit: Option<PathBuf>,
    /// Raw records; fidelities come from log-slopes per (P, x).
    #[arg(long)]
    records: Option<PathBuf>,
}

#[derive(Args)]
struct HeatmapArgs {
    #[command(flatten)]
    source: HeatmapSource,
    /// Fold counts for fit-based export; defaults to those in the fit.
    #[arg(long, value_delimiter = ',')]
    x: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Budget(a) => show_budget(a),
        Command::OracleCheck(a) => oracle(a),
        Command::HeatmapExport(a) => heatmap(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::NumericalIntegrity(_) => 3,
        Error::NonConvergence { .. } => 4,
        _ => 2,
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))
}

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::from(e).context(format!("creating {}", dir.display())))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(BufWriter<fs::File>) -> Result<()>,
{
    let file = fs::File::create(path).map_err(|e| Error::from(e).context(format!("writing {}", path.display())))?;
    f(BufWriter::new(file)).map_err(|e| e.context(format!("writing {}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::from(e).context(format!("writing {}", path.display())))
}

fn json_value(text: &str, what: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::from(e).context(what.to_string()))
}

struct SimInputs {
    noise_text: String,
    plan: PlanDoc,
    spam_text: Option<String>,
    hashes: Value,
}

fn simulate_inputs(a: &SimulateArgs) -> Result<SimInputs> {
    if let Some(path) = &a.manifest {
        let m = json_value(&read(path)?, &format!("parsing manifest {}", path.display()))?;
        let field = |k: &str| m.get(k).cloned().ok_or_else(|| Error::Config(format!("manifest lacks {k:?}")));
        let plan: PlanDoc = serde_json::from_value(field("plan")?).map_err(|e| Error::from(e).context("manifest plan"))?;
        let noise_text = serde_json::to_string(&field("noise")?)?;
        let spam_text = match field("spam")? {
            Value::Null => None,
            v => Some(serde_json::to_string(&v)?),
        };
        return Ok(SimInputs { noise_text, plan, spam_text, hashes: field("config_sha256")? });
    }
    let noise_path = a.noise.as_ref().ok_or_else(|| Error::Config("--noise is required".into()))?;
    let plan_path = a.plan.as_ref().ok_or_else(|| Error::Config("--plan is required".into()))?;
    let noise_text = read(noise_path)?;
    let plan_text = read(plan_path)?;
    let spam_text = a.spam.as_deref().map(read).transpose()?;
    let mut plan = PlanDoc::from_json(&plan_text).map_err(|e| e.context(format!("parsing plan {}", plan_path.display())))?;
    if let Some(s) = a.shots {
        plan.shots = s;
    }
    if let Some(s) = a.seed {
        plan.master_seed = s;
    }
    let hashes = json!({
        "noise": sha256_hex(&noise_text),
        "plan": sha256_hex(&plan_text),
        "spam": spam_text.as_deref().map(sha256_hex),
    });
    Ok(SimInputs { noise_text, plan, spam_text, hashes })
}

fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let inputs = simulate_inputs(&a)?;
    let plan = &inputs.plan;
    if plan.shots < MIN_SHOTS {
        return Err(Error::Config(format!("shots must be at least {MIN_SHOTS}, got {}", plan.shots)));
    }
    let noise = NoiseModel::from_json(&inputs.noise_text).map_err(|e| e.context("parsing noise model"))?;
    let spam = match &inputs.spam_text {
        Some(t) => SpamError::from_json(t).map_err(|e| e.context("parsing SPAM parameters"))?,
        None => SpamError::none(),
    };
    let n = noise.n();
    let specs = plan.specs(n).map_err(|e| e.context("building the experiment plan"))?;
    let cycle = plan.hard_cycle(n)?;
    let sim = Simulator::new(&cycle, &noise, spam)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let records = pool.install(|| sim.run_plan(&specs, plan.shots))?;

    create_dir(&a.out)?;
    let records_path = a.out.join("records.csv");
    write_with(&records_path, |w| write_records(w, &records))?;
    let records_sha = sha256_hex(&read(&records_path)?);

    let seeds: Vec<Value> = specs
        .iter()
        .map(|s| json!({"x": s.x, "m": s.m, "basis": s.basis.label(), "replicate": s.replicate, "seed": s.seed}))
        .collect();
    let manifest = json!({
        "tool": "foldcer",
        "version": env!("CARGO_PKG_VERSION"),
        "master_seed": plan.master_seed,
        "shots": plan.shots,
        "n_specs": specs.len(),
        "n_records": records.len(),
        "config_sha256": inputs.hashes,
        "records_sha256": records_sha,
        "plan": plan,
        "noise": json_value(&inputs.noise_text, "noise model")?,
        "spam": inputs.spam_text.as_deref().map(|t| json_value(t, "SPAM parameters")).transpose()?,
        "seeds": seeds,
    });
    write_text(&a.out.join("manifest.json"), &serde_json::to_string_pretty(&manifest)?)?;
    println!("{} records from {} circuits written to {}", records.len(), specs.len(), records_path.display());
    Ok(ExitCode::SUCCESS)
}

fn load_records(path: &Path) -> Result<Vec<foldcer::simulate::FidelityRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
    let records = read_records(file).map_err(|e| e.context(format!("parsing {}", path.display())))?;
    if records.is_empty() {
        return Err(Error::Config(format!("{} holds no records", path.display())));
    }
    Ok(records)
}

fn fit(a: FitArgs) -> Result<ExitCode> {
    let records = load_records(&a.records)?;
    let paulis = if a.paulis.is_empty() {
        all_paulis(records[0].pauli.n()).skip(1).collect()
    } else {
        a.paulis.clone()
    };
    let opts = FitOptions {
        parameterization: match a.parameterization {
            ParamArg::PerPauli => Parameterization::PerPauli,
            ParamArg::PerFidelity => Parameterization::PerFidelity,
        },
        ..FitOptions::default()
    };
    let result = fitdecay::fit_with(&records, &paulis, &opts)?;
    create_dir(&a.out)?;
    write_text(&a.out.join("fit.json"), &result.to_json()?)?;
    let curve = decay_curve(&result);
    write_with(&a.out.join("decay_curve.csv"), |w| write_decay_curve(w, &curve))?;
    println!("chi2 = {:.4} (dof {}, reduced {:.4})", result.chi2, result.dof, result.reduced_chi2);
    if result.parameterization == Parameterization::PerPauli {
        let b = budget(&result)?;
        write_text(&a.out.join("budget.json"), &b.to_json()?)?;
        print!("{b}");
    }
    Ok(ExitCode::SUCCESS)
}

fn load_fit(path: &Path) -> Result<DecayFitResult> {
    DecayFitResult::from_json(&read(path)?).map_err(|e| e.context(format!("parsing {}", path.display())))
}

fn show_budget(a: BudgetArgs) -> Result<ExitCode> {
    let b = budget(&load_fit(&a.fit)?)?;
    if let Some(out) = &a.out {
        write_text(out, &b.to_json()?)?;
    }
    print!("{b}");
    Ok(ExitCode::SUCCESS)
}

fn oracle(a: OracleArgs) -> Result<ExitCode> {
    let model = NoiseModel::from_json(&read(&a.noise)?).map_err(|e| e.context("parsing noise model"))?;
    let report = oracle_check(&model, &a.x)?;
    let text = serde_json::to_string_pretty(&report)?;
    match &a.out {
        Some(out) => write_text(out, &text)?,
        None => println!("{text}"),
    }
    let literal = report.fidelities.iter().filter(|f| !f.within_bound).count();
    eprintln!(
        "generator diff {:.3e}, transition diff {:.3e}, {literal}/{} fidelities outside 5(1-f)^2",
        report.generator_max_abs_diff,
        report.transition_max_abs_diff,
        report.fidelities.len()
    );
    if !report.passed(a.tol) {
        return Err(Error::NumericalIntegrity("fast path disagrees with the oracle".into()));
    }
    Ok(ExitCode::SUCCESS)
}

fn heatmap(a: HeatmapArgs) -> Result<ExitCode> {
    let maps = if let Some(path) = &a.source.fit {
        let f = load_fit(path)?;
        let xs: Vec<usize> = if a.x.is_empty() {
            let set: std::collections::BTreeSet<usize> = f.cells.iter().map(|c| c.x).collect();
            set.into_iter().collect()
        } else {
            a.x.clone()
        };
        heatmaps_from_fit(&f, &xs)?
    } else {
        let path = a.source.records.as_ref().ok_or_else(|| Error::Config("--fit or --records is required".into()))?;
        let all = heatmaps_from_cells(&aggregate(&load_records(path)?), 0.05)?;
        if a.x.is_empty() {
            all
        } else {
            all.into_iter().filter(|h| a.x.contains(&h.x)).collect()
        }
    };
    create_dir(&a.out)?;
    for h in &maps {
        let path = a.out.join(format!("heatmap_x{}.csv", h.x));
        write_with(&path, |w| h.write_csv(w))?;
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}
