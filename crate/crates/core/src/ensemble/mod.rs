//! Seeded disorder-ensemble sweeps over `N`.

mod aggregate;
mod records;

pub use aggregate::{mean_stderr, AggregateRow, EnsembleAggregate};
pub use records::{
    load_records, persist_records, read_records, write_records, write_records_csv, RealizationRecord,
    RECORD_SCHEMA, RECORD_VERSION,
};

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::DEFAULT_DENSE_CAP;
use crate::charging::{
    charge, correlation_matrix, ground_state, lambda_n, sandwich_fraction, ChargingOptions, DEFAULT_SAMPLES,
};
use crate::error::{Error, Result};
use crate::models::{build, build_h0, build_parallel_drive, connection_count, Family, Hamiltonian, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Variance,
    Gap,
    Advantage,
    ConnectionCount,
    Lambda2,
    SandwichFraction,
}

impl Quantity {
    pub const ALL: [Quantity; 6] = [
        Quantity::Variance,
        Quantity::Gap,
        Quantity::Advantage,
        Quantity::ConnectionCount,
        Quantity::Lambda2,
        Quantity::SandwichFraction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Variance => "variance",
            Quantity::Gap => "gap",
            Quantity::Advantage => "advantage",
            Quantity::ConnectionCount => "connection_count",
            Quantity::Lambda2 => "lambda2",
            Quantity::SandwichFraction => "sandwich_fraction",
        }
    }

    /// Ratios are undefined on degenerate realizations.
    pub fn is_ratio(self) -> bool {
        matches!(self, Quantity::Advantage | Quantity::SandwichFraction)
    }
}

impl std::fmt::Display for Quantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// splitmix64 finalizer: a bijection on `u64` with full avalanche.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `r` at size `n`: `mix(mix(mix(master) ⊕ n) ⊕ r)`.
pub fn derive_seed(master_seed: u64, n: usize, realization: usize) -> u64 {
    mix(mix(mix(master_seed) ^ n as u64) ^ realization as u64)
}

fn default_fraction() -> f64 {
    1.0
}

fn default_quantities() -> Vec<Quantity> {
    vec![Quantity::Variance]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub spec_template: ModelParams,
    pub n_values: Vec<usize>,
    pub realizations: usize,
    pub master_seed: u64,
    #[serde(default = "default_fraction")]
    pub target_fraction: f64,
    #[serde(default = "default_quantities")]
    pub quantities: Vec<Quantity>,
}

impl SweepPlan {
    pub fn new(spec_template: ModelParams, n_values: Vec<usize>, realizations: usize, master_seed: u64) -> Self {
        Self {
            spec_template,
            n_values,
            realizations,
            master_seed,
            target_fraction: 1.0,
            quantities: default_quantities(),
        }
    }

    pub fn with_quantities(mut self, quantities: &[Quantity]) -> Self {
        self.quantities = quantities.to_vec();
        self
    }

    pub fn wants(&self, q: Quantity) -> bool {
        self.quantities.contains(&q)
    }

    pub fn validate(&self, dense_cap: usize) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::InvalidSpec("need at least one realization".into()));
        }
        if self.n_values.is_empty() || self.n_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpec("n_values must be nonempty and strictly increasing".into()));
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n > dense_cap) {
            return Err(Error::ResourceLimit { n_cells: n, cap: dense_cap });
        }
        if !(self.target_fraction > 0.0 && self.target_fraction <= 1.0) {
            return Err(Error::InvalidSpec(format!("target_fraction must lie in (0, 1], got {}", self.target_fraction)));
        }
        if self.quantities.is_empty() {
            return Err(Error::InvalidSpec("no quantities requested".into()));
        }
        let family = self.spec_template.family;
        if self.wants(Quantity::ConnectionCount) && !family.is_disordered() {
            return Err(Error::InvalidSpec(format!("{family} has no couplings to count")));
        }
        if self.wants(Quantity::Lambda2) && family != Family::SimplifiedVk {
            return Err(Error::InvalidSpec("lambda2 needs the simplified_vk family".into()));
        }
        for &n in &self.n_values {
            self.spec_template.at(n).validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Worker threads; `0` lets the pool decide.
    pub workers: usize,
    pub dense_cap: usize,
    pub n_samples: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { workers: 0, dense_cap: DEFAULT_DENSE_CAP, n_samples: DEFAULT_SAMPLES }
    }
}

/// Per-`N` inputs shared by every realization.
#[derive(Debug, Clone)]
pub struct Baseline {
    pub tau_parallel: Option<f64>,
    pub correlations: Option<DMatrix<f64>>,
}

pub fn baseline(plan: &SweepPlan, options: &RunOptions, n: usize) -> Result<Baseline> {
    let p = &plan.spec_template;
    let tau_parallel = if plan.wants(Quantity::Advantage) {
        let drive = Hamiltonian::Pauli(build_parallel_drive(n, p.lambda0));
        let run = charge(&build_h0(n, p.eps0), &drive, &ground_state(n), &charging_options(plan, options, true))?;
        run.report.tau
    } else {
        None
    };
    let correlations = if plan.wants(Quantity::Lambda2) { Some(correlation_matrix(&ground_state(n))?) } else { None };
    Ok(Baseline { tau_parallel, correlations })
}

fn charging_options(plan: &SweepPlan, options: &RunOptions, run_protocol: bool) -> ChargingOptions {
    ChargingOptions {
        target_fraction: plan.target_fraction,
        n_samples: options.n_samples,
        dense_cap: options.dense_cap,
        run_protocol,
    }
}

/// Builds and charges one realization. Errors are recorded, not returned.
pub fn realize(plan: &SweepPlan, options: &RunOptions, base: &Baseline, n: usize, r: usize) -> RealizationRecord {
    let seed = derive_seed(plan.master_seed, n, r);
    let mut rec = RealizationRecord::empty(plan.spec_template.family, n, r, seed);
    if let Err(e) = fill(&mut rec, plan, options, base) {
        rec.error = Some(e.to_string());
    }
    rec
}

fn fill(rec: &mut RealizationRecord, plan: &SweepPlan, options: &RunOptions, base: &Baseline) -> Result<()> {
    let n = rec.n;
    let p = &plan.spec_template;
    let model = build(&p.at(n), rec.seed)?;
    let psi = ground_state(n);
    let h0 = build_h0(n, p.eps0);
    let run_protocol = plan.wants(Quantity::Advantage);
    let report = charge(&h0, &model.hamiltonian, &psi, &charging_options(plan, options, run_protocol))?.report;

    rec.degenerate = model.is_empty_mask() || report.degenerate;
    rec.variance = Some(report.variance);
    rec.gap = Some(report.gap);
    rec.mu = Some(report.mu);
    rec.e_min = Some(report.e_min);
    rec.e_max = Some(report.e_max);
    rec.bhatia_slack = Some(report.bhatia_slack);
    rec.tau = report.tau;
    rec.work = report.work;
    rec.power = report.power;
    rec.length = report.length;
    if let Some(real) = &model.realization {
        rec.connection_count = Some(connection_count(real) as u64);
    }
    if run_protocol {
        rec.tau_parallel = base.tau_parallel;
        if !rec.degenerate {
            if let (Some(tp), Some(ts)) = (base.tau_parallel, report.tau) {
                rec.advantage = Some(tp / ts);
            }
        }
    }
    if plan.wants(Quantity::SandwichFraction) && !rec.degenerate {
        rec.sandwich_fraction = Some(sandwich_fraction(&model.hamiltonian, p.eps0, &psi, report.variance)?);
    }
    if let (Some(c), Some(real)) = (&base.correlations, &model.realization) {
        rec.lambda2 = Some(lambda_n(real, c, n, 2)?);
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub records: Vec<RealizationRecord>,
    pub aggregate: EnsembleAggregate,
}

/// Runs every `(N, r)` of the plan on a pool of `options.workers` threads.
///
/// Records come back ordered by `(N, r)` whatever the scheduling. The sweep
/// fails only when more than 10% of the realizations error.
pub fn run_sweep(plan: &SweepPlan, options: &RunOptions) -> Result<SweepOutcome> {
    plan.validate(options.dense_cap)?;
    let baselines: BTreeMap<usize, Baseline> = plan
        .n_values
        .iter()
        .map(|&n| Ok((n, baseline(plan, options, n)?)))
        .collect::<Result<_>>()?;
    let tasks: Vec<(usize, usize)> = plan
        .n_values
        .iter()
        .flat_map(|&n| (0..plan.realizations).map(move |r| (n, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| Error::InvalidSpec(format!("cannot start worker pool: {e}")))?;
    let records: Vec<RealizationRecord> =
        pool.install(|| tasks.par_iter().map(|&(n, r)| realize(plan, options, &baselines[&n], n, r)).collect());

    let failed = records.iter().filter(|r| r.failed()).count();
    if failed * 10 > records.len() {
        return Err(Error::SweepFailed { failed, total: records.len() });
    }
    let aggregate = EnsembleAggregate::from_records(&records, &plan.n_values, plan.realizations, &plan.quantities);
    Ok(SweepOutcome { records, aggregate })
}
