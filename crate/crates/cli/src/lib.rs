//! Configuration binding and subcommands of the `qbattery` binary.

pub mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use qbattery::ensemble::{
    load_records, persist_records, run_sweep, write_records_csv, EnsembleAggregate, Quantity, RealizationRecord,
    SweepOutcome, RECORD_SCHEMA, RECORD_VERSION,
};
use qbattery::scaling::{fit_aggregate, write_verdicts_csv, Verdict};
use qbattery::verify::{run_all, SuiteResult, VerifyOptions};
use serde::Serialize;

pub use config::{env_overrides, Format, Overrides, RunConfig, ENV_DENSE_CAP, ENV_WORKERS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SWEEP: i32 = 3;

pub const RUN_SCHEMA: &str = "qbattery.run";
pub const RUN_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("sweep failed: {0}")]
    Sweep(#[from] qbattery::Error),
    #[error("output error: {0}")]
    Output(#[from] std::io::Error),
    #[error("verification failed: {}", .0.join("; "))]
    Verify(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Verify(_) => EXIT_VERIFY,
            CliError::Sweep(_) | CliError::Output(_) => EXIT_SWEEP,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Index of the files a command wrote, with their schema versions.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema: &'static str,
    pub version: u32,
    pub command: String,
    pub master_seed: u64,
    pub records_schema: String,
    pub files: Vec<String>,
}

struct OutDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    fn open(&mut self, name: &str) -> CliResult<BufWriter<File>> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.root.join(name))?))
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.root.join(name)
    }

    fn finish(mut self, command: &str, config: &RunConfig) -> CliResult<()> {
        fs::write(self.root.join("config.toml"), config.to_toml())?;
        self.files.push("config.toml".into());
        let manifest = Manifest {
            schema: RUN_SCHEMA,
            version: RUN_VERSION,
            command: command.into(),
            master_seed: config.sweep.master_seed,
            records_schema: format!("{RECORD_SCHEMA} v{RECORD_VERSION}"),
            files: self.files,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(self.root.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}

fn write_jsonl<T: Serialize, W: Write>(mut out: W, rows: &[T]) -> CliResult<()> {
    for row in rows {
        let line = serde_json::to_string(row).map_err(|e| CliError::Output(e.into()))?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

fn write_csv<T: Serialize, W: Write>(out: W, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Output(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

fn sweep_with(config: &RunConfig, quantities: &[Quantity]) -> CliResult<SweepOutcome> {
    let plan = config.plan().with_quantities(quantities);
    Ok(run_sweep(&plan, &config.run_options())?)
}

fn emit_records(dir: &mut OutDir, config: &RunConfig, records: &[RealizationRecord]) -> CliResult<()> {
    if config.wants(Format::Jsonl) {
        persist_records(&dir.path("records.jsonl"), records)?;
    }
    if config.wants(Format::Csv) {
        write_records_csv(dir.open("records.csv")?, records)?;
    }
    Ok(())
}

/// Spectral extremes of one realization of `H₁`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub family: String,
    pub n: usize,
    pub realization: usize,
    pub seed: u64,
    pub e_min: Option<f64>,
    pub e_max: Option<f64>,
    pub gap: Option<f64>,
    pub degenerate: bool,
    pub error: Option<String>,
}

impl From<&RealizationRecord> for SpectrumRow {
    fn from(r: &RealizationRecord) -> Self {
        Self {
            family: r.family.to_string(),
            n: r.n,
            realization: r.realization,
            seed: r.seed,
            e_min: r.e_min,
            e_max: r.e_max,
            gap: r.gap,
            degenerate: r.degenerate,
            error: r.error.clone(),
        }
    }
}

pub fn cmd_spectrum(config: &RunConfig) -> CliResult<Vec<SpectrumRow>> {
    let outcome = sweep_with(config, &[Quantity::Variance, Quantity::Gap])?;
    let rows: Vec<SpectrumRow> = outcome.records.iter().map(SpectrumRow::from).collect();
    let mut dir = OutDir::create(&config.run.out)?;
    if config.wants(Format::Csv) {
        write_csv(dir.open("spectrum.csv")?, &rows)?;
    }
    if config.wants(Format::Jsonl) {
        write_jsonl(dir.open("spectrum.jsonl")?, &rows)?;
    }
    dir.finish("spectrum", config)?;
    Ok(rows)
}

/// Full charging runs, always with the parallel baseline and `Γ`.
pub fn cmd_charge(config: &RunConfig) -> CliResult<Vec<RealizationRecord>> {
    let mut quantities = config.sweep.quantities.clone();
    if !quantities.contains(&Quantity::Advantage) {
        quantities.push(Quantity::Advantage);
    }
    let outcome = sweep_with(config, &quantities)?;
    let mut dir = OutDir::create(&config.run.out)?;
    emit_records(&mut dir, config, &outcome.records)?;
    dir.finish("charge", config)?;
    Ok(outcome.records)
}

fn fit_and_emit(dir: &mut OutDir, config: &RunConfig, aggregate: &EnsembleAggregate) -> CliResult<Vec<Verdict>> {
    let m = &config.model;
    let fits = fit_aggregate(aggregate, m.family, m.q, m.alpha(), &config.sweep.quantities, config.fit.tolerance)?;
    let verdicts: Vec<Verdict> = fits.into_iter().map(|(_, v)| v).collect();
    aggregate.write_csv(dir.open("aggregate.csv")?)?;
    write_verdicts_csv(dir.open("verdicts.csv")?, &verdicts)?;
    for &q in &config.sweep.quantities {
        write_points(dir.open(&format!("points_{q}.csv"))?, &aggregate.points(q))?;
        if q == Quantity::Advantage {
            write_points(dir.open("points_advantage_ratio_of_means.csv")?, &aggregate.ratio_of_means_points())?;
        }
    }
    Ok(verdicts)
}

#[derive(Serialize)]
struct Point {
    n: usize,
    mean: f64,
    stderr: f64,
}

fn write_points<W: Write>(out: W, points: &[(f64, f64, f64)]) -> CliResult<()> {
    let rows: Vec<Point> = points.iter().map(|&(n, mean, stderr)| Point { n: n as usize, mean, stderr }).collect();
    write_csv(out, &rows)
}

/// Runs the ensemble, then fits every requested quantity that has a prediction.
pub fn cmd_sweep(config: &RunConfig) -> CliResult<Vec<Verdict>> {
    let outcome = sweep_with(config, &config.sweep.quantities)?;
    let mut dir = OutDir::create(&config.run.out)?;
    emit_records(&mut dir, config, &outcome.records)?;
    let verdicts = fit_and_emit(&mut dir, config, &outcome.aggregate)?;
    dir.finish("sweep", config)?;
    Ok(verdicts)
}

/// Re-fits from `records.jsonl` in the output directory without recomputing.
pub fn cmd_fit(config: &RunConfig) -> CliResult<Vec<Verdict>> {
    let path = config.run.out.join("records.jsonl");
    if !path.exists() {
        return Err(CliError::Config(format!("{} not found; run `sweep` with jsonl output first", path.display())));
    }
    let records = load_records(&path)?;
    let plan = config.plan();
    if let Some(r) = records.iter().find(|r| r.family != plan.spec_template.family) {
        return Err(CliError::Config(format!("records hold {} but the config asks for {}", r.family, plan.spec_template.family)));
    }
    let aggregate = EnsembleAggregate::from_records(&records, &plan.n_values, plan.realizations, &plan.quantities);
    let mut dir = OutDir::create(&config.run.out)?;
    let verdicts = fit_and_emit(&mut dir, config, &aggregate)?;
    dir.finish("fit", config)?;
    Ok(verdicts)
}

/// Runs every invariant suite; fails with the names of the broken invariants.
pub fn cmd_verify(options: &VerifyOptions) -> CliResult<Vec<SuiteResult>> {
    let suites = run_all(options);
    let failures: Vec<String> = suites
        .iter()
        .flat_map(|s| s.failures.iter().map(move |f| format!("{}: {f}", s.name)))
        .collect();
    if failures.is_empty() {
        Ok(suites)
    } else {
        Err(CliError::Verify(failures))
    }
}
