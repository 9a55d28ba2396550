//! The two-quench charging protocol and its per-realization observables.

mod sandwich;
mod spectrum;
mod state;
mod work;

pub use sandwich::{
    anticommuting_block, block_moment, cell_hamiltonian, correlation_matrix, lambda_n, sandwich_fraction,
    sandwich_moment, SANDWICH_THRESHOLD,
};
pub use spectrum::{
    bhatia_davis_slack, bhatia_davis_slack_from, cumulant_g2_check, cumulant_g2_check_with, is_zero_variance,
    mean_energy, spectral_gap, variance, Spectrum, BHATIA_TOL,
};
pub use state::{ground_state, top_state, BatteryState};
pub use work::{evolve_work_curve, evolve_work_curve_with, optimal_tau, Evolution, WorkCurve, DEFAULT_SAMPLES};

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{OperatorSum, DEFAULT_DENSE_CAP};
use crate::error::{Error, Result};
use crate::models::Hamiltonian;

/// `l(C) = ΔH₁ τ`.
pub fn fubini_length(delta_h1: f64, tau: f64) -> Result<f64> {
    if delta_h1 < 0.0 || tau < 0.0 {
        return Err(Error::Domain(format!("length needs ΔH₁ ≥ 0 and τ ≥ 0, got {delta_h1}, {tau}")));
    }
    Ok(delta_h1 * tau)
}

/// Observables of one charging run. Protocol fields are `None` when the
/// variance vanishes and the battery never charges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargingReport {
    pub variance: f64,
    pub gap: f64,
    pub mu: f64,
    pub e_min: f64,
    pub e_max: f64,
    pub bhatia_slack: f64,
    /// `ΔH₁² = 0` within roundoff: the quench does nothing.
    pub degenerate: bool,
    pub tau: Option<f64>,
    pub work: Option<f64>,
    pub power: Option<f64>,
    pub length: Option<f64>,
}

impl ChargingReport {
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}

/// `Γ = τ^∥ / τ^♯`; both reports must use the same target fraction.
pub fn advantage(parallel: &ChargingReport, sharp: &ChargingReport) -> Result<f64> {
    let tau_par = parallel.tau.ok_or_else(|| Error::Degenerate("parallel run never charged".into()))?;
    match sharp.tau {
        Some(t) if t > 0.0 => Ok(tau_par / t),
        _ => Err(Error::Degenerate("charging time τ♯ is zero or undefined".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargingOptions {
    pub target_fraction: f64,
    pub n_samples: usize,
    pub dense_cap: usize,
    /// Sample the work curve and pick `τ`; without it only the spectral
    /// quantities are filled in.
    pub run_protocol: bool,
}

impl Default for ChargingOptions {
    fn default() -> Self {
        Self { target_fraction: 1.0, n_samples: DEFAULT_SAMPLES, dense_cap: DEFAULT_DENSE_CAP, run_protocol: true }
    }
}

/// A finished run: the report plus the spectrum and work curve it came from.
#[derive(Debug, Clone)]
pub struct Charged {
    pub report: ChargingReport,
    pub spectrum: Arc<Spectrum>,
    pub curve: Option<WorkCurve>,
}

/// Quench `H₀ → H₁` on `psi0`, sample `W(t)` on `[0, 4π/ΔH₁]` and pick `τ`.
pub fn charge(h0: &OperatorSum, h1: &Hamiltonian, psi0: &BatteryState, options: &ChargingOptions) -> Result<Charged> {
    let dense = h1.dense(options.dense_cap)?;
    let spectrum = Arc::new(Spectrum::new(&dense)?);
    let mu = mean_energy(h1, psi0)?;
    let var = variance(h1, psi0)?;
    let bhatia_slack = bhatia_davis_slack_from(&spectrum, mu, var)?;
    let mut report = ChargingReport {
        variance: var,
        gap: spectrum.gap(),
        mu,
        e_min: spectrum.e_min(),
        e_max: spectrum.e_max(),
        bhatia_slack,
        degenerate: is_zero_variance(var, spectrum.gap()),
        tau: None,
        work: None,
        power: None,
        length: None,
    };
    if report.degenerate || !options.run_protocol {
        return Ok(Charged { report, spectrum, curve: None });
    }
    let delta = var.sqrt();
    let curve = evolve_work_curve_with(h0, spectrum.clone(), psi0, 4.0 * PI / delta, options.n_samples)?;
    let (tau, work) = optimal_tau(&curve, options.target_fraction)?;
    report.tau = Some(tau);
    report.work = Some(work);
    report.power = Some(work / tau);
    report.length = Some(fubini_length(delta, tau)?);
    Ok(Charged { report, spectrum, curve: Some(curve) })
}
