//! Power-law exponents from ensemble aggregates, and the predicted values
//! they are checked against.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ensemble::{EnsembleAggregate, Quantity};
use crate::error::{Error, Result};
use crate::models::{theta, Family};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub intercept: f64,
    pub exponent_stderr: f64,
    pub r_squared: f64,
    pub n_points: usize,
    /// Weighted by the supplied standard errors.
    pub weighted: bool,
}

/// Least squares of `ln value` on `ln N` over `(N, value, stderr)` points.
///
/// When every standard error is positive the fit is weighted by
/// `(value/stderr)²`, the inverse log-space variance, and the exponent error
/// follows from those weights. Otherwise the fit is unweighted and the error
/// comes from the residuals.
pub fn fit_power_law(points: &[(f64, f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 points, got {}", points.len())));
    }
    for &(n, v, se) in points {
        if !(n > 0.0 && v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("power-law fit needs N > 0 and value > 0, got ({n}, {v})")));
        }
        if se.is_nan() || se < 0.0 {
            return Err(Error::Domain(format!("standard error must be ≥ 0, got {se}")));
        }
    }
    let weighted = points.iter().all(|&(_, _, se)| se > 0.0 && se.is_finite());
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let ws: Vec<f64> = if weighted {
        points.iter().map(|&(_, v, se)| (v / se).powi(2)).collect()
    } else {
        vec![1.0; points.len()]
    };

    let s: f64 = ws.iter().sum();
    let sx: f64 = ws.iter().zip(&xs).map(|(w, x)| w * x).sum();
    let sy: f64 = ws.iter().zip(&ys).map(|(w, y)| w * y).sum();
    let (xm, ym) = (sx / s, sy / s);
    let sxx: f64 = ws.iter().zip(&xs).map(|(w, x)| w * (x - xm).powi(2)).sum();
    let sxy: f64 = ws.iter().zip(&xs).zip(&ys).map(|((w, x), y)| w * (x - xm) * (y - ym)).sum();
    if sxx <= 0.0 {
        return Err(Error::Domain("all points share the same N".into()));
    }
    let exponent = sxy / sxx;
    let intercept = ym - exponent * xm;
    let rss: f64 = ws
        .iter()
        .zip(&xs)
        .zip(&ys)
        .map(|((w, x), y)| w * (y - intercept - exponent * x).powi(2))
        .sum();
    let tss: f64 = ws.iter().zip(&ys).map(|(w, y)| w * (y - ym).powi(2)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    let exponent_stderr = if weighted {
        (1.0 / sxx).sqrt()
    } else {
        (rss / (points.len() - 2) as f64 / sxx).sqrt()
    };
    Ok(ScalingFit { exponent, intercept, exponent_stderr, r_squared, n_points: points.len(), weighted })
}

fn check_params(q: usize, alpha: f64) -> Result<()> {
    if q < 2 || !q.is_multiple_of(2) {
        return Err(Error::Domain(format!("q must be even and ≥ 2, got {q}")));
    }
    if !(alpha.is_finite() && (0.0..=q as f64).contains(&alpha)) {
        return Err(Error::Domain(format!("alpha must lie in [0, q], got {alpha}")));
    }
    Ok(())
}

fn x_of(q: usize, alpha: f64) -> f64 {
    1.0 - 2.0 * alpha / q as f64
}

/// Predicted exponent of `quantity` for rescaled sparse `q`-body couplings.
///
/// * advantage: `(α−q)/2 + 1` for `α ≥ q/2`, `1 − α/2` below
/// * variance: `qxθ(x) + 2 + α − q`
/// * connection count: `α`
/// * `Λ₂`: `−(x+1)`
pub fn predicted_exponent(quantity: Quantity, q: usize, alpha: f64) -> Result<f64> {
    check_params(q, alpha)?;
    let qf = q as f64;
    let x = x_of(q, alpha);
    match quantity {
        Quantity::Advantage => Ok(if alpha >= qf / 2.0 { (alpha - qf) / 2.0 + 1.0 } else { 1.0 - alpha / 2.0 }),
        Quantity::Variance => Ok(qf * x * theta(x) + 2.0 + alpha - qf),
        Quantity::ConnectionCount => Ok(alpha),
        Quantity::Lambda2 => Ok(-(x + 1.0)),
        other => Err(Error::Unsupported(format!("no exponent prediction for {other}"))),
    }
}

/// Exponent of the advantage class `l ∈ 1..=q/2`: `qxθ(x)/2 + 1 + (α−q)(q−l)/q`.
pub fn class_exponent(l: usize, q: usize, alpha: f64) -> Result<f64> {
    check_params(q, alpha)?;
    if l == 0 || l > q / 2 {
        return Err(Error::Domain(format!("class l must lie in 1..={}, got {l}", q / 2)));
    }
    let qf = q as f64;
    let x = x_of(q, alpha);
    Ok(qf * x * theta(x) / 2.0 + 1.0 + (alpha - qf) * (qf - l as f64) / qf)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub family: Family,
    pub quantity: Quantity,
    pub q: usize,
    pub alpha: f64,
    pub exponent: f64,
}

/// The exponent expected for `quantity` in `family`, if there is one.
pub fn family_prediction(family: Family, quantity: Quantity, q: usize, alpha: f64) -> Result<Option<Prediction>> {
    let fixed = |e: f64| Some(e);
    let exponent = match (family, quantity) {
        (Family::ParallelDrive, Quantity::Variance) => fixed(1.0),
        (Family::ParallelDrive, Quantity::Advantage) => fixed(0.0),
        (Family::CleanQuadratic, Quantity::Variance) => fixed(1.0),
        (Family::DisorderedQuadratic, Quantity::Variance) => fixed(2.0),
        (Family::DisorderedQuadratic, Quantity::ConnectionCount) => fixed(2.0),
        (Family::Geodesic, Quantity::Variance) => fixed(2.0),
        (Family::Geodesic, Quantity::Advantage) => fixed(1.0),
        (Family::SparseSyk, Quantity::Variance) => {
            check_params(q, alpha)?;
            fixed(alpha - q as f64 + 1.0)
        }
        (Family::SparseSyk, Quantity::ConnectionCount) => Some(predicted_exponent(quantity, q, alpha)?),
        (Family::RescaledSparseSyk, Quantity::Variance | Quantity::Advantage | Quantity::ConnectionCount) => {
            Some(predicted_exponent(quantity, q, alpha)?)
        }
        (Family::SimplifiedVk, Quantity::Variance | Quantity::Advantage | Quantity::Lambda2) => {
            Some(predicted_exponent(quantity, q, alpha)?)
        }
        // retained pairs: p₁ · C(2N, 2)
        (Family::SimplifiedVk, Quantity::ConnectionCount) => {
            check_params(q, alpha)?;
            fixed(1.0 - x_of(q, alpha))
        }
        _ => None,
    };
    Ok(exponent.map(|exponent| Prediction { family, quantity, q, alpha, exponent }))
}

/// How the advantage was averaged over disorder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    Mean,
    MeanOfRatios,
    RatioOfMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub family: Family,
    pub quantity: Quantity,
    pub convention: Convention,
    pub q: usize,
    pub alpha: f64,
    pub predicted: f64,
    pub fitted: f64,
    pub stderr: f64,
    pub n_points: usize,
    pub tolerance: f64,
    /// `max(tolerance, 3·stderr)`.
    pub allowance: f64,
    pub deviation: f64,
    pub pass: bool,
}

pub fn compare(fit: &ScalingFit, pred: &Prediction, tolerance: f64) -> Verdict {
    compare_as(fit, pred, tolerance, Convention::Mean)
}

pub fn compare_as(fit: &ScalingFit, pred: &Prediction, tolerance: f64, convention: Convention) -> Verdict {
    let allowance = tolerance.max(3.0 * fit.exponent_stderr);
    let deviation = (fit.exponent - pred.exponent).abs();
    Verdict {
        family: pred.family,
        quantity: pred.quantity,
        convention,
        q: pred.q,
        alpha: pred.alpha,
        predicted: pred.exponent,
        fitted: fit.exponent,
        stderr: fit.exponent_stderr,
        n_points: fit.n_points,
        tolerance,
        allowance,
        deviation,
        pass: deviation <= allowance,
    }
}

/// Fits every predicted quantity of an aggregate; the advantage is fitted
/// under both averaging conventions.
pub fn fit_aggregate(
    aggregate: &EnsembleAggregate,
    family: Family,
    q: usize,
    alpha: f64,
    quantities: &[Quantity],
    tolerance: f64,
) -> Result<Vec<(ScalingFit, Verdict)>> {
    let mut out = Vec::new();
    for &quantity in quantities {
        let Some(pred) = family_prediction(family, quantity, q, alpha)? else {
            continue;
        };
        let series = if quantity == Quantity::Advantage {
            vec![
                (Convention::MeanOfRatios, aggregate.points(quantity)),
                (Convention::RatioOfMeans, aggregate.ratio_of_means_points()),
            ]
        } else {
            vec![(Convention::Mean, aggregate.points(quantity))]
        };
        for (convention, points) in series {
            let fit = fit_power_law(&points)?;
            out.push((fit, compare_as(&fit, &pred, tolerance, convention)));
        }
    }
    Ok(out)
}

pub fn write_verdicts_csv<W: Write>(out: W, verdicts: &[Verdict]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for v in verdicts {
        w.serialize(v).map_err(|e| Error::Numerical(format!("csv output failed: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(e: f64) -> Vec<(f64, f64, f64)> {
        (3..=8).map(|n| (n as f64, 1.7 * (n as f64).powf(e), 0.0)).collect()
    }

    #[test]
    fn exact_monomials() {
        let fit = fit_power_law(&exact(2.0)).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-10);
        assert!(fit.exponent_stderr < 1e-10);
        assert!(!fit.weighted);
        let flat: Vec<_> = (3..=8).map(|n| (n as f64, 7.0, 0.0)).collect();
        assert!(fit_power_law(&flat).unwrap().exponent.abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        assert!(fit_power_law(&exact(1.0)[..2]).is_err());
        let mut pts = exact(1.0);
        pts[1].1 = 0.0;
        assert!(matches!(fit_power_law(&pts), Err(Error::Domain(_))));
    }

    #[test]
    fn weighted_fit_ignores_scale() {
        let pts: Vec<_> = (3..=8).map(|n| (n as f64, (n as f64).powi(2) * (1.0 + 0.01 * n as f64), 0.1 * n as f64)).collect();
        let scaled: Vec<_> = pts.iter().map(|&(n, v, s)| (n, 5.0 * v, 5.0 * s)).collect();
        let (a, b) = (fit_power_law(&pts).unwrap(), fit_power_law(&scaled).unwrap());
        assert!(a.weighted);
        assert!((a.exponent - b.exponent).abs() < 1e-12);
        assert!((a.intercept + 5f64.ln() - b.intercept).abs() < 1e-12);
    }

    #[test]
    fn advantage_predictions() {
        assert_eq!(predicted_exponent(Quantity::Advantage, 4, 4.0).unwrap(), 1.0);
        assert_eq!(predicted_exponent(Quantity::Advantage, 4, 2.0).unwrap(), 0.0);
        assert_eq!(predicted_exponent(Quantity::Advantage, 4, 0.0).unwrap(), 1.0);
        assert_eq!(predicted_exponent(Quantity::Advantage, 4, 3.0).unwrap(), 0.5);
        assert!(predicted_exponent(Quantity::Advantage, 3, 1.0).is_err());
        assert!(predicted_exponent(Quantity::Advantage, 4, 5.0).is_err());
    }

    #[test]
    fn branches_meet_at_half_q() {
        for q in [2usize, 4, 6] {
            let a = q as f64 / 2.0;
            let upper = (a - q as f64) / 2.0 + 1.0;
            let lower = 1.0 - a / 2.0;
            assert_eq!(upper, lower);
            assert_eq!(predicted_exponent(Quantity::Advantage, q, a).unwrap(), 1.0 - q as f64 / 4.0);
        }
    }

    #[test]
    fn variance_predictions() {
        assert_eq!(predicted_exponent(Quantity::Variance, 4, 4.0).unwrap(), 2.0);
        assert_eq!(predicted_exponent(Quantity::Variance, 4, 3.0).unwrap(), 1.0);
        assert_eq!(predicted_exponent(Quantity::Variance, 2, 1.0).unwrap(), 1.0);
        assert_eq!(predicted_exponent(Quantity::Variance, 2, 2.0).unwrap(), 2.0);
        assert_eq!(predicted_exponent(Quantity::ConnectionCount, 4, 3.0).unwrap(), 3.0);
        assert_eq!(predicted_exponent(Quantity::Lambda2, 2, 1.0).unwrap(), -1.0);
        assert_eq!(predicted_exponent(Quantity::Lambda2, 4, 3.0).unwrap(), -0.5);
    }

    #[test]
    fn class_exponents() {
        // l = q/2 recovers the advantage branch for α ≥ q/2
        for alpha in [2.0, 3.0, 4.0] {
            let top = class_exponent(2, 4, alpha).unwrap();
            assert_eq!(top, predicted_exponent(Quantity::Advantage, 4, alpha).unwrap());
        }
        assert!(class_exponent(3, 4, 4.0).is_err());
    }

    #[test]
    fn verdicts() {
        let pred = Prediction { family: Family::RescaledSparseSyk, quantity: Quantity::Variance, q: 2, alpha: 2.0, exponent: 2.0 };
        let fit = |e: f64, s: f64| ScalingFit { exponent: e, intercept: 0.0, exponent_stderr: s, r_squared: 1.0, n_points: 6, weighted: true };
        assert!(compare(&fit(1.95, 0.05), &pred, 0.2).pass);
        assert!(!compare(&fit(1.0, 0.05), &pred, 0.2).pass);
        let adv = Prediction { quantity: Quantity::Advantage, q: 4, alpha: 3.0, exponent: 0.5, ..pred };
        assert!(compare(&fit(0.45, 0.2), &adv, 0.3).pass);
    }

    #[test]
    fn family_table() {
        let p = family_prediction(Family::DisorderedQuadratic, Quantity::Variance, 2, 2.0).unwrap().unwrap();
        assert_eq!(p.exponent, 2.0);
        assert!(family_prediction(Family::Onsite, Quantity::Variance, 2, 2.0).unwrap().is_none());
        let p = family_prediction(Family::SparseSyk, Quantity::Variance, 4, 4.0).unwrap().unwrap();
        assert_eq!(p.exponent, 1.0);
    }
}
