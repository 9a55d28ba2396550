use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::state::BatteryState;
use crate::algebra::{hermiticity_defect, inner, LinearOperator};
use crate::error::{Error, Result};

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `eigenvalues`.
    vectors: DMatrix<Complex64>,
}

impl Spectrum {
    pub fn new(h: &DMatrix<Complex64>) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::DimensionMismatch { left: h.nrows(), right: h.ncols() });
        }
        let scale = h.iter().map(|c| c.norm()).fold(1.0, f64::max);
        let defect = hermiticity_defect(h);
        if defect > 1e-9 * scale {
            return Err(Error::Numerical(format!("matrix is not Hermitian (defect {defect:e})")));
        }
        let eig = SymmetricEigen::new(h.clone());
        if eig.eigenvalues.iter().any(|e| !e.is_finite()) {
            return Err(Error::Numerical("eigendecomposition produced non-finite values".into()));
        }
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(h.nrows(), h.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Self { eigenvalues, vectors })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &DMatrix<Complex64> {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn e_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn e_max(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// `ΔE = E_max − E_min`.
    pub fn gap(&self) -> f64 {
        self.e_max() - self.e_min()
    }

    /// `c = U†ψ`.
    pub fn coefficients(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let c: DVector<Complex64> = self.vectors.ad_mul(&DVector::from_column_slice(psi));
        c.data.into()
    }

    /// `U c`.
    pub fn synthesize(&self, c: &[Complex64]) -> Vec<Complex64> {
        let v: DVector<Complex64> = &self.vectors * DVector::from_column_slice(c);
        v.data.into()
    }

    /// Spectral weights `|⟨E_k|ψ⟩|²`.
    pub fn weights(&self, psi: &[Complex64]) -> Vec<f64> {
        self.coefficients(psi).iter().map(|c| c.norm_sqr()).collect()
    }

    /// `(μ, ΔH²)` from the spectral weights.
    pub fn moments(&self, psi: &[Complex64]) -> (f64, f64) {
        let w = self.weights(psi);
        let mu: f64 = w.iter().zip(&self.eigenvalues).map(|(w, e)| w * e).sum();
        let var = w.iter().zip(&self.eigenvalues).map(|(w, e)| w * (e - mu).powi(2)).sum();
        (mu, var)
    }
}

/// `⟨ψ|H|ψ⟩`, real part.
pub fn mean_energy(h: &impl LinearOperator, psi: &BatteryState) -> Result<f64> {
    check_dim(h.dim(), psi.dim())?;
    Ok(inner(psi.amplitudes(), &h.apply(psi.amplitudes())).re)
}

/// `ΔH² = ⟨H²⟩ − ⟨H⟩²`, evaluated as `‖(H − μ)ψ‖²` so it never goes negative.
pub fn variance(h: &impl LinearOperator, psi: &BatteryState) -> Result<f64> {
    check_dim(h.dim(), psi.dim())?;
    let amps = psi.amplitudes();
    let hpsi = h.apply(amps);
    let mu = inner(amps, &hpsi).re;
    Ok(hpsi.iter().zip(amps).map(|(a, b)| (a - b * mu).norm_sqr()).sum())
}

pub fn spectral_gap(h: &DMatrix<Complex64>) -> Result<f64> {
    Ok(Spectrum::new(h)?.gap())
}

/// Relative tolerance on the Bhatia-Davis inequality.
pub const BHATIA_TOL: f64 = 1e-9;

/// `(E_max − μ)(μ − E_min) − ΔH²`; negative slack beyond tolerance is an error.
pub fn bhatia_davis_slack_from(spectrum: &Spectrum, mu: f64, var: f64) -> Result<f64> {
    let slack = (spectrum.e_max() - mu) * (mu - spectrum.e_min()) - var;
    if slack < -BHATIA_TOL * var.max(1.0) {
        return Err(Error::InequalityViolation { slack, variance: var });
    }
    Ok(slack)
}

pub fn bhatia_davis_slack(h: &DMatrix<Complex64>, psi: &BatteryState) -> Result<f64> {
    check_dim(h.nrows(), psi.dim())?;
    let spectrum = Spectrum::new(h)?;
    let mu = mean_energy(h, psi)?;
    let var = variance(h, psi)?;
    bhatia_davis_slack_from(&spectrum, mu, var)
}

/// `G(u) = ln⟨e^{iHu}⟩` on the principal branch; `None` near the branch point.
fn cumulant_generating(spectrum: &Spectrum, weights: &[f64], u: f64) -> Option<Complex64> {
    let z: Complex64 = weights
        .iter()
        .zip(spectrum.eigenvalues())
        .map(|(w, e)| Complex64::from_polar(*w, e * u))
        .sum();
    (z.norm() > 1e-8).then(|| z.ln())
}

/// Relative deviation `|−G″(0) − ΔH²| / ΔH²` from a central second difference
/// with step `h`; retried once at `h/2`. `0/0` counts as exact agreement.
pub fn cumulant_g2_check_with(spectrum: &Spectrum, psi: &BatteryState, step: f64) -> Result<f64> {
    check_dim(spectrum.dim(), psi.dim())?;
    let weights = spectrum.weights(psi.amplitudes());
    let (_, var) = spectrum.moments(psi.amplitudes());
    let mut h = step;
    for _ in 0..2 {
        let g = [-h, 0.0, h].map(|u| cumulant_generating(spectrum, &weights, u));
        if let [Some(gm), Some(g0), Some(gp)] = g {
            let g2 = (gp - 2.0 * g0 + gm) / (h * h);
            let dev = (-g2.re - var).abs();
            if is_zero_variance(var, spectrum.gap()) {
                let noise = 1e-8 * spectrum.gap().max(1.0).powi(2);
                return Ok(if dev <= noise { 0.0 } else { f64::INFINITY });
            }
            return Ok(dev / var);
        }
        h /= 2.0;
    }
    Err(Error::Numerical("characteristic function vanishes near u = 0".into()))
}

/// [`cumulant_g2_check_with`] at the default step `10⁻³ / max(1, ΔH)`.
pub fn cumulant_g2_check(spectrum: &Spectrum, psi: &BatteryState) -> Result<f64> {
    let (_, var) = spectrum.moments(psi.amplitudes());
    cumulant_g2_check_with(spectrum, psi, 1e-3 / var.sqrt().max(1.0))
}

/// Variance indistinguishable from roundoff in the eigenvectors.
pub fn is_zero_variance(var: f64, gap: f64) -> bool {
    var <= 1e-20 * gap.max(1.0).powi(2)
}

fn check_dim(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left, right })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charging::{ground_state, top_state};
    use crate::models::{build_geodesic, build_h0, build_parallel_drive};

    #[test]
    fn gaps() {
        assert!((spectral_gap(&build_h0(2, 1.0).to_dense().unwrap()).unwrap() - 4.0).abs() < 1e-12);
        let drive = build_parallel_drive(3, 1.0).to_dense().unwrap();
        assert!((spectral_gap(&drive).unwrap() - 6.0).abs() < 1e-12);
        let h0 = build_h0(3, 1.0);
        let geo = build_geodesic(&h0, 1.0, &ground_state(3), &top_state(3)).unwrap();
        assert!((spectral_gap(&geo).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn variance_oracles() {
        for n in 1..=5 {
            let g = ground_state(n);
            let v = variance(&build_parallel_drive(n, 0.7), &g).unwrap();
            assert!((v - n as f64 * 0.49).abs() < 1e-12);
            assert!(variance(&build_h0(n, 1.0), &g).unwrap() < 1e-24);
            let geo = build_geodesic(&build_h0(n, 1.0), 0.5, &g, &top_state(n)).unwrap();
            let expected = (n as f64 * 0.5).powi(2);
            assert!((variance(&geo, &g).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn moments_agree_with_direct_variance() {
        let h = build_parallel_drive(3, 1.3);
        let s = Spectrum::new(&h.to_dense().unwrap()).unwrap();
        let g = ground_state(3);
        let (mu, var) = s.moments(g.amplitudes());
        assert!(mu.abs() < 1e-12);
        assert!((var - variance(&h, &g).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn bhatia_davis_cases() {
        let g = ground_state(3);
        let h0 = build_h0(3, 1.0);
        assert!(bhatia_davis_slack(&h0.to_dense().unwrap(), &g).unwrap().abs() < 1e-12);
        let geo = build_geodesic(&h0, 1.0, &g, &top_state(3)).unwrap();
        assert!(bhatia_davis_slack(&geo, &g).unwrap().abs() < 1e-9);
    }

    #[test]
    fn bhatia_davis_violation_is_reported() {
        let s = Spectrum::new(&build_h0(1, 1.0).to_dense().unwrap()).unwrap();
        let err = bhatia_davis_slack_from(&s, 1.0, 2.0).unwrap_err();
        assert!(matches!(err, Error::InequalityViolation { .. }));
    }

    #[test]
    fn cumulant_matches_variance() {
        let h = build_parallel_drive(3, 1.0).to_dense().unwrap();
        let s = Spectrum::new(&h).unwrap();
        assert!(cumulant_g2_check(&s, &ground_state(3)).unwrap() <= 1e-4);
        let s0 = Spectrum::new(&build_h0(3, 1.0).to_dense().unwrap()).unwrap();
        assert_eq!(cumulant_g2_check(&s0, &ground_state(3)).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let h = build_parallel_drive(2, 1.0);
        assert!(matches!(variance(&h, &ground_state(3)), Err(Error::DimensionMismatch { .. })));
    }
}
