use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spectrum::Spectrum;
use super::state::BatteryState;
use crate::algebra::{inner, OperatorSum};
use crate::error::{Error, Result};

/// Spectral propagator for `ψ(t) = e^{−iH₁t}ψ₀` and `W(t) = ⟨ψ(t)|H₀|ψ(t)⟩`.
#[derive(Debug, Clone)]
pub struct Evolution {
    spectrum: Arc<Spectrum>,
    coeffs: Vec<Complex64>,
    h0: OperatorSum,
    h0_radius: f64,
}

impl Evolution {
    pub fn new(h0: &OperatorSum, spectrum: Arc<Spectrum>, psi0: &BatteryState) -> Result<Self> {
        if spectrum.dim() != psi0.dim() || h0.dim() != psi0.dim() {
            return Err(Error::DimensionMismatch { left: spectrum.dim(), right: psi0.dim() });
        }
        let coeffs = spectrum.coefficients(psi0.amplitudes());
        // ‖H₀ − c·I‖ is bounded by the sum of the non-identity coefficients
        let h0_radius = h0.terms().filter(|t| !t.is_identity()).map(|t| t.coeff.norm()).sum();
        Ok(Self { spectrum, coeffs, h0: h0.clone(), h0_radius })
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    fn phased(&self, t: f64) -> Vec<Complex64> {
        self.coeffs
            .iter()
            .zip(self.spectrum.eigenvalues())
            .map(|(c, e)| c * Complex64::from_polar(1.0, -e * t))
            .collect()
    }

    pub fn state_at(&self, t: f64) -> Vec<Complex64> {
        self.spectrum.synthesize(&self.phased(t))
    }

    /// `dW/dt = ⟨ψ(t)|i[H₁, H₀]|ψ(t)⟩ = −2 Im⟨H₁ψ|H₀ψ⟩`.
    pub fn power_at(&self, t: f64) -> f64 {
        let d = self.phased(t);
        let psi = self.spectrum.synthesize(&d);
        let ed: Vec<Complex64> = d.iter().zip(self.spectrum.eigenvalues()).map(|(x, e)| x * e).collect();
        let h1psi = self.spectrum.synthesize(&ed);
        -2.0 * inner(&h1psi, &self.h0.apply(&psi)).im
    }

    pub fn work_at(&self, t: f64) -> f64 {
        let psi = self.state_at(t);
        inner(&psi, &self.h0.apply(&psi)).re
    }

    /// Largest amount by which `W` can exceed its value at the nearest point
    /// of a grid with spacing `dt`: `|W″| ≤ ΔE₁²‖H₀ − c‖`.
    pub fn peak_slack(&self, dt: f64) -> f64 {
        self.spectrum.gap().powi(2) * self.h0_radius * dt * dt / 8.0
    }
}

/// Work `W(t)` sampled on an increasing time grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkCurve {
    pub times: Vec<f64>,
    pub works: Vec<f64>,
    #[serde(skip)]
    evolution: Option<Arc<Evolution>>,
}

impl WorkCurve {
    /// A curve without an off-grid evaluator; τ is then resolved to the grid.
    pub fn from_samples(times: Vec<f64>, works: Vec<f64>) -> Result<Self> {
        if times.len() != works.len() {
            return Err(Error::DimensionMismatch { left: times.len(), right: works.len() });
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("time grid must be strictly increasing".into()));
        }
        Ok(Self { times, works, evolution: None })
    }

    pub fn evolution(&self) -> Option<&Evolution> {
        self.evolution.as_deref()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_work(&self) -> f64 {
        self.works.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Default number of grid samples.
pub const DEFAULT_SAMPLES: usize = 2048;

pub fn evolve_work_curve_with(
    h0: &OperatorSum,
    spectrum: Arc<Spectrum>,
    psi0: &BatteryState,
    t_max: f64,
    n_samples: usize,
) -> Result<WorkCurve> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::Domain(format!("t_max must be finite and > 0, got {t_max}")));
    }
    if n_samples < 2 {
        return Err(Error::Domain("need at least two samples".into()));
    }
    let evolution = Evolution::new(h0, spectrum, psi0)?;
    let dt = t_max / (n_samples - 1) as f64;
    let times: Vec<f64> = (0..n_samples).map(|k| k as f64 * dt).collect();
    let works = times.iter().map(|&t| evolution.work_at(t)).collect();
    Ok(WorkCurve { times, works, evolution: Some(Arc::new(evolution)) })
}

/// Diagonalizes `h1` once and samples `W(t)` on `n_samples` points of `[0, t_max]`.
pub fn evolve_work_curve(
    h0: &OperatorSum,
    h1: &DMatrix<Complex64>,
    psi0: &BatteryState,
    t_max: f64,
    n_samples: usize,
) -> Result<WorkCurve> {
    evolve_work_curve_with(h0, Arc::new(Spectrum::new(h1)?), psi0, t_max, n_samples)
}

const TIME_RTOL: f64 = 1e-12;
const PEAK_FUZZ: f64 = 1e-9;

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a <= TIME_RTOL * b.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximum of `W` on `[a, b]`: a root of `dW/dt` when the bracket changes
/// sign, golden section otherwise.
fn refine_peak(ev: &Evolution, a: f64, b: f64) -> (f64, f64) {
    let slope = |s: f64| -ev.power_at(s);
    if ev.power_at(a) > 0.0 && ev.power_at(b) < 0.0 {
        let (tp, _) = bisect_crossing(&slope, a, b, 0.0);
        (tp, ev.work_at(tp))
    } else {
        golden_max(&|s| ev.work_at(s), a, b)
    }
}

/// Root of `f(t) = level` on `[a, b]` with `f(a) < level ≤ f(b)`.
fn bisect_crossing(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, level: f64) -> (f64, f64) {
    let mut fb = f(b);
    for _ in 0..200 {
        if b - a <= TIME_RTOL * b.abs() {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm >= level {
            b = m;
            fb = fm;
        } else {
            a = m;
        }
    }
    (b, fb)
}

struct Peak {
    time: f64,
    work: f64,
    /// Grid index just before the peak.
    left: usize,
}

/// Earliest time at which `W` reaches `target_fraction` of its maximum.
///
/// Grid maxima that could hide a higher true peak are refined through the
/// root of `dW/dt`; the crossing itself is refined by bisection. Without an evaluator
/// the grid value is returned.
pub fn optimal_tau(curve: &WorkCurve, target_fraction: f64) -> Result<(f64, f64)> {
    if !(target_fraction > 0.0 && target_fraction <= 1.0) {
        return Err(Error::Domain(format!("target fraction must lie in (0, 1], got {target_fraction}")));
    }
    if curve.is_empty() {
        return Err(Error::Domain("empty work curve".into()));
    }
    let (t, w) = (&curve.times, &curve.works);
    let w_grid = curve.max_work();
    let radius = curve.evolution().map_or(0.0, |e| e.h0_radius);
    if !(w_grid > 1e-12 * radius.max(1.0)) {
        return Err(Error::NoCharging);
    }

    let Some(ev) = curve.evolution() else {
        let level = target_fraction * w_grid;
        let k = w.iter().position(|&x| x >= level).expect("max reaches level");
        return Ok((t[k], w[k]));
    };
    let work = |s: f64| ev.work_at(s);
    let n = t.len();
    let dt = if n > 1 { t[1] - t[0] } else { 0.0 };
    let floor = target_fraction * w_grid - ev.peak_slack(dt);

    let mut peaks = Vec::new();
    for k in 0..n {
        let rises = k == 0 || w[k] >= w[k - 1];
        let falls = k + 1 == n || w[k] >= w[k + 1];
        if !(rises && falls) || w[k] < floor {
            continue;
        }
        let peak = if k == 0 || k + 1 == n {
            Peak { time: t[k], work: w[k], left: k.saturating_sub(1) }
        } else {
            let (tp, wp) = refine_peak(ev, t[k - 1], t[k + 1]);
            if wp >= w[k] {
                Peak { time: tp, work: wp, left: if tp >= t[k] { k } else { k - 1 } }
            } else {
                Peak { time: t[k], work: w[k], left: k - 1 }
            }
        };
        peaks.push(peak);
    }
    let w_max = peaks.iter().map(|p| p.work).fold(w_grid, f64::max);
    let level = target_fraction * w_max;

    let first_peak = peaks
        .iter()
        .find(|p| p.work >= level * (1.0 - PEAK_FUZZ))
        .expect("the highest peak is a candidate");
    let first_cross = w.iter().position(|&x| x >= level);

    match first_cross {
        Some(k) if k > 0 && t[k] <= first_peak.time => Ok(bisect_crossing(&work, t[k - 1], t[k], level)),
        _ if first_peak.work > level * (1.0 + PEAK_FUZZ) && first_peak.time > t[first_peak.left] => {
            Ok(bisect_crossing(&work, t[first_peak.left], first_peak.time, level))
        }
        _ => Ok((first_peak.time, first_peak.work)),
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::charging::{ground_state, top_state};
    use crate::models::{build_geodesic, build_h0, build_parallel_drive};

    fn parallel_curve(n: usize, eps0: f64, lambda0: f64, t_max: f64) -> WorkCurve {
        let h0 = build_h0(n, eps0);
        let h1 = build_parallel_drive(n, lambda0).to_dense().unwrap();
        evolve_work_curve(&h0, &h1, &ground_state(n), t_max, DEFAULT_SAMPLES).unwrap()
    }

    #[test]
    fn parallel_curve_is_sin_squared() {
        for n in 1..=4 {
            let c = parallel_curve(n, 0.8, 1.3, 5.0);
            assert!(c.works[0].abs() < 1e-10);
            for (t, w) in c.times.iter().zip(&c.works) {
                let exact = 2.0 * n as f64 * 0.8 * (1.3 * t).sin().powi(2);
                assert!((w - exact).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn full_and_half_charge_times() {
        let lambda0 = 0.9;
        let c = parallel_curve(3, 1.0, lambda0, 4.0 * PI / (3f64.sqrt() * lambda0));
        let (tau, w) = optimal_tau(&c, 1.0).unwrap();
        assert!((tau - PI / (2.0 * lambda0)).abs() < 1e-5);
        assert!((w - 6.0).abs() < 1e-9);
        let (tau, w) = optimal_tau(&c, 0.5).unwrap();
        assert!((tau - PI / (4.0 * lambda0)).abs() < 1e-6);
        assert!((w - 3.0).abs() < 1e-6);
    }

    #[test]
    fn geodesic_reaches_top_state() {
        let n = 3;
        let lambda = 0.7;
        let h0 = build_h0(n, 1.0);
        let top = top_state(n);
        let h1 = build_geodesic(&h0, lambda, &ground_state(n), &top).unwrap();
        let t_full = PI / (2.0 * n as f64 * lambda);
        let c = evolve_work_curve(&h0, &h1, &ground_state(n), 2.0 * t_full, 101).unwrap();
        let ev = c.evolution().unwrap();
        assert!((ev.work_at(t_full) - 2.0 * n as f64).abs() < 1e-10);
        let psi = BatteryState::new(ev.state_at(t_full)).unwrap();
        assert!(1.0 - psi.fidelity(&top) < 1e-12);
    }

    #[test]
    fn commuting_drive_never_charges() {
        let h0 = build_h0(2, 1.0);
        let c = evolve_work_curve(&h0, &h0.to_dense().unwrap(), &ground_state(2), 3.0, 64).unwrap();
        assert!(c.works.iter().all(|w| w.abs() < 1e-12));
        assert!(matches!(optimal_tau(&c, 1.0), Err(Error::NoCharging)));
    }

    #[test]
    fn grid_only_curve_picks_first_crossing() {
        let c = WorkCurve::from_samples(vec![0.0, 1.0, 2.0, 3.0, 4.0], vec![0.0, 1.0, 3.0, 4.0, 2.0]).unwrap();
        assert_eq!(optimal_tau(&c, 0.7).unwrap(), (2.0, 3.0));
        assert_eq!(optimal_tau(&c, 1.0).unwrap(), (3.0, 4.0));
        assert!(optimal_tau(&c, 0.0).is_err());
        assert!(WorkCurve::from_samples(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn crossing_lies_in_first_grid_interval() {
        let c = parallel_curve(2, 1.0, 1.0, 4.0 * PI / 2f64.sqrt());
        let (tau, _) = optimal_tau(&c, 0.3).unwrap();
        let k = c.works.iter().position(|&w| w >= 0.3 * 4.0).unwrap();
        assert!(c.times[k - 1] <= tau && tau <= c.times[k]);
    }
}
