//! Invariant batteries run by the `verify` command.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{anticommutation_table_with, jw_majorana, MajoranaIndex, MajoranaMap, OperatorSum, PauliTerm};
use crate::charging::{
    anticommuting_block, block_moment, charge, cumulant_g2_check, ground_state, sandwich_moment, BatteryState,
    ChargingOptions, Spectrum, BHATIA_TOL,
};
use crate::ensemble::derive_seed;
use crate::error::Result;
use crate::models::{build, build_h0, build_parallel_drive, Family, Hamiltonian, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl SuiteResult {
    fn new(name: &str) -> Self {
        Self { name: name.into(), checks: 0, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn absorb<T>(&mut self, r: Result<T>, what: &str) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.checks += 1;
                self.failures.push(format!("{what}: {e}"));
                None
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    pub max_algebra_cells: usize,
    pub max_ground_cells: usize,
    pub realizations: usize,
    pub dense_cap: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 0x5EED, max_algebra_cells: 6, max_ground_cells: 10, realizations: 20, dense_cap: 12 }
    }
}

/// `{γ_m, γ_n} = 2δ_mn` from the string algebra and from dense matrices.
pub fn anticommutation_suite(max_cells: usize, map: &MajoranaMap) -> SuiteResult {
    let mut s = SuiteResult::new("anticommutation");
    for n in 1..=max_cells {
        if let Some(table) = s.absorb(anticommutation_table_with(n, map), &format!("table N={n}")) {
            for a in 0..2 * n {
                for b in 0..2 * n {
                    let want = if a == b { 2.0 } else { 0.0 };
                    s.check((table[(a, b)] - want).abs() <= 1e-12, || {
                        format!("N={n}: {{γ_{}, γ_{}}} = {}", a + 1, b + 1, table[(a, b)])
                    });
                }
            }
        }
        let dense: Vec<_> = (1..=2 * n)
            .map(|m| map(MajoranaIndex::new(m, n).expect("label in range"), n).to_dense())
            .collect::<Result<_>>()
            .unwrap_or_default();
        for a in 0..dense.len() {
            for b in 0..dense.len() {
                let anti = &dense[a] * &dense[b] + &dense[b] * &dense[a];
                let dev = anti
                    .iter()
                    .enumerate()
                    .map(|(k, v)| {
                        let on_diag = k % anti.nrows() == k / anti.nrows();
                        let want = if a == b && on_diag { 2.0 } else { 0.0 };
                        (v - Complex64::new(want, 0.0)).norm()
                    })
                    .fold(0.0, f64::max);
                s.check(dev <= 1e-12, || format!("N={n}: dense {{γ_{}, γ_{}}} off by {dev:e}", a + 1, b + 1));
            }
        }
    }
    s
}

/// `H₀|0⟩ = 0` and `σʸᵢ|0⟩ = −|0⟩`.
pub fn ground_state_suite(max_cells: usize) -> SuiteResult {
    let mut s = SuiteResult::new("ground_state");
    for n in 1..=max_cells {
        let g = ground_state(n);
        let residual = build_h0(n, 1.0).apply(g.amplitudes()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        s.check(residual <= 1e-12, || format!("N={n}: H₀|0⟩ has entry {residual:e}"));
        for i in 1..=n {
            let y = OperatorSum::from_term(PauliTerm::single('y', i, n).expect("cell in range"));
            let out = y.apply(g.amplitudes());
            let dev = out.iter().zip(g.amplitudes()).map(|(a, b)| (a + b).norm()).fold(0.0, f64::max);
            s.check(dev <= 1e-12, || format!("N={n}: σʸ_{i}|0⟩ ≠ −|0⟩ ({dev:e})"));
        }
    }
    s
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Parallel drive and geodesic against their closed forms.
pub fn closed_form_suite(max_cells: usize) -> SuiteResult {
    let mut s = SuiteResult::new("closed_forms");
    let (eps0, lambda0) = (1.0, 1.0);
    let opts = ChargingOptions::default();
    for n in 1..=max_cells {
        let h0 = build_h0(n, eps0);
        let drive = Hamiltonian::Pauli(build_parallel_drive(n, lambda0));
        let Some(run) = s.absorb(charge(&h0, &drive, &ground_state(n), &opts), &format!("parallel N={n}")) else {
            continue;
        };
        let nf = n as f64;
        let r = &run.report;
        s.check(rel(r.variance, nf * lambda0 * lambda0) <= 1e-6, || format!("N={n}: ΔH₁² = {}", r.variance));
        let tau = r.tau.unwrap_or(f64::NAN);
        s.check(rel(tau, PI / (2.0 * lambda0)) <= 1e-6, || format!("N={n}: τ∥ = {tau}"));
        let power = r.power.unwrap_or(f64::NAN);
        s.check(rel(power, 4.0 * nf * eps0 * lambda0 / PI) <= 1e-6, || format!("N={n}: P∥ = {power}"));
        if let Some(curve) = &run.curve {
            let worst = curve
                .times
                .iter()
                .zip(&curve.works)
                .map(|(t, w)| (w - 2.0 * nf * eps0 * (lambda0 * t).sin().powi(2)).abs())
                .fold(0.0, f64::max);
            s.check(worst <= 1e-6 * 2.0 * nf * eps0, || format!("N={n}: W(t) off sin² law by {worst:e}"));
        }
        let geo = build(&ModelParams::new(Family::Geodesic).at(n), 0).map(|m| m.hamiltonian);
        if let Some(geo) = s.absorb(geo, &format!("geodesic N={n}")) {
            if let Some(run) = s.absorb(charge(&h0, &geo, &ground_state(n), &opts), &format!("geodesic N={n}")) {
                let l = run.report.length.unwrap_or(f64::NAN);
                s.check((l - PI / 2.0).abs() <= 1e-9, || format!("N={n}: geodesic length {l}"));
                s.check(run.report.bhatia_slack.abs() <= 1e-9, || {
                    format!("N={n}: geodesic slack {}", run.report.bhatia_slack)
                });
            }
        }
    }
    s
}

/// Representative parameters for every family.
pub fn family_samples() -> Vec<ModelParams> {
    Family::ALL
        .iter()
        .flat_map(|&f| match f {
            Family::SparseSyk | Family::RescaledSparseSyk | Family::SimplifiedVk => vec![
                ModelParams::new(f).with_q_alpha(2, 1.0),
                ModelParams::new(f).with_q_alpha(4, 3.0),
                ModelParams::new(f).with_q_alpha(4, 4.0),
            ],
            _ => vec![ModelParams::new(f)],
        })
        .collect()
}

/// Bhatia-Davis slack and the cumulant identity on every family.
pub fn spectral_suite(options: &VerifyOptions, n: usize) -> SuiteResult {
    let mut s = SuiteResult::new("bhatia_davis_and_cumulant");
    let opts = ChargingOptions { run_protocol: false, dense_cap: options.dense_cap, ..Default::default() };
    let psi = ground_state(n);
    for params in family_samples() {
        let label = format!("{} q={} α={}", params.family, params.q, params.alpha());
        for r in 0..options.realizations {
            let seed = derive_seed(options.seed, n, r);
            let Some(model) = s.absorb(build(&params.at(n), seed), &label) else { continue };
            let Some(run) = s.absorb(charge(&build_h0(n, 1.0), &model.hamiltonian, &psi, &opts), &label) else {
                continue;
            };
            let (slack, var) = (run.report.bhatia_slack, run.report.variance);
            s.check(slack >= -BHATIA_TOL * var.max(1.0), || format!("{label} seed {seed}: slack {slack:e}"));
            if !run.report.degenerate {
                if let Some(dev) = s.absorb(cumulant_g2_check(&run.spectrum, &psi), &label) {
                    s.check(dev <= 1e-3, || format!("{label} seed {seed}: cumulant deviation {dev:e}"));
                }
            }
            if !params.family.is_disordered() {
                break;
            }
        }
    }
    s
}

/// `⟨H₁hᵢH₁⟩ = 2ε₀⟨H₁H_{1,i}⟩` on disordered quadratic realizations, and the
/// mask rule against dense anticommutators.
pub fn sandwich_suite(options: &VerifyOptions, n: usize) -> SuiteResult {
    let mut s = SuiteResult::new("sandwich");
    let psi: BatteryState = ground_state(n);
    let params = ModelParams::new(Family::DisorderedQuadratic);
    for r in 0..options.realizations {
        let seed = derive_seed(options.seed ^ 0xE77A, n, r);
        let Some(model) = s.absorb(build(&params.at(n), seed), "disordered quadratic") else { continue };
        let h1 = model.hamiltonian.as_pauli().expect("quadratic families are Pauli sums");
        for i in 1..=n {
            let lhs = sandwich_moment(h1, i, 1.0, &psi);
            let rhs = block_moment(h1, i, 1.0, &psi);
            if let (Some(l), Some(r)) = (s.absorb(lhs, "sandwich"), s.absorb(rhs, "block")) {
                s.check((l - r).abs() <= 1e-9 * l.abs().max(1.0), || format!("seed {seed}, cell {i}: {l} vs {r}"));
            }
        }
    }
    for m in 1..=n.min(4) {
        let Some(model) = s.absorb(build(&params.at(m), options.seed), "disordered quadratic") else { continue };
        let h1 = model.hamiltonian.as_pauli().expect("Pauli sum");
        for i in 1..=m {
            let y = PauliTerm::single('y', i, m).expect("cell").to_dense().expect("small");
            let Some((block, _)) = s.absorb(anticommuting_block(h1, i), "block") else { continue };
            for t in h1.terms() {
                let d = t.to_dense().expect("small");
                let anti = (&d * &y + &y * &d).iter().map(|c| c.norm()).fold(0.0, f64::max) <= 1e-12;
                let in_block = block.coeff(t.x_mask, t.z_mask) != Complex64::default();
                s.check(anti == in_block, || format!("N={m}, cell {i}: term {t} misclassified"));
            }
        }
    }
    s
}

/// Spectrum sanity: eigenvalues of `H₀` are `{0, 2ε₀, …, 2Nε₀}`.
pub fn h0_spectrum_suite(max_cells: usize) -> SuiteResult {
    let mut s = SuiteResult::new("h0_spectrum");
    for n in 1..=max_cells.min(8) {
        let dense = build_h0(n, 1.0).to_dense();
        let spec = dense.and_then(|d| Spectrum::new(&d));
        if let Some(spec) = s.absorb(spec, &format!("N={n}")) {
            let ok = spec.eigenvalues().iter().all(|e| (e / 2.0 - (e / 2.0).round()).abs() < 1e-10);
            s.check(ok && spec.e_min().abs() < 1e-10 && (spec.e_max() - 2.0 * n as f64).abs() < 1e-10, || {
                format!("N={n}: spectrum {:?}", spec.eigenvalues())
            });
        }
    }
    s
}

/// Every suite with the production Jordan-Wigner map.
pub fn run_all(options: &VerifyOptions) -> Vec<SuiteResult> {
    run_all_with(options, &jw_majorana)
}

pub fn run_all_with(options: &VerifyOptions, map: &MajoranaMap) -> Vec<SuiteResult> {
    vec![
        anticommutation_suite(options.max_algebra_cells, map),
        ground_state_suite(options.max_ground_cells.min(options.dense_cap)),
        h0_spectrum_suite(options.max_ground_cells),
        closed_form_suite(8.min(options.dense_cap)),
        spectral_suite(options, 4),
        sandwich_suite(options, 4),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn production_map_passes() {
        assert!(anticommutation_suite(4, &jw_majorana).passed());
        assert!(ground_state_suite(6).passed());
    }

    #[test]
    fn phase_error_is_caught() {
        let broken = |m: MajoranaIndex, n: usize| {
            let t = jw_majorana(m, n);
            if m.get() == 3 {
                t.scaled(Complex64::new(0.0, 1.0))
            } else {
                t
            }
        };
        let suite = anticommutation_suite(2, &broken);
        assert!(!suite.passed());
        assert!(suite.failures.iter().any(|f| f.contains("γ_3")));
    }
}
