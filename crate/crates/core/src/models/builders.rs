use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::disorder::{disorder_rng, DisorderRealization};
use super::{theta, Family, ModelSpec};
use crate::algebra::{inner, majorana, majorana_product, OperatorSum, PauliTerm};
use crate::charging::BatteryState;
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn expect_family(spec: &ModelSpec, allowed: &[Family]) -> Result<()> {
    spec.validate()?;
    if allowed.contains(&spec.family()) {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!(
            "builder expects one of {allowed:?}, got {}",
            spec.family()
        )))
    }
}

/// `H₀ = Σᵢ ε₀(σʸᵢ + 1)`.
pub fn build_h0(n: usize, eps0: f64) -> OperatorSum {
    let mut terms = vec![PauliTerm::identity(n).scaled(Complex64::new(n as f64 * eps0, 0.0))];
    for cell in 1..=n {
        terms.push(PauliTerm::single('y', cell, n).expect("cell in range").scaled(eps0.into()));
    }
    OperatorSum::from_terms(n, terms).expect("same register")
}

/// `λ₀ Σᵢ σˣᵢ`.
pub fn build_parallel_drive(n: usize, lambda0: f64) -> OperatorSum {
    let terms = (1..=n).map(|cell| PauliTerm::single('x', cell, n).expect("cell in range").scaled(lambda0.into()));
    OperatorSum::from_terms(n, terms).expect("same register")
}

/// `i c γ_a γ_b`.
fn pair_term(a: usize, b: usize, c: f64, n: usize) -> PauliTerm {
    majorana_product(&[a, b], n).expect("labels in range").scaled(I * c)
}

/// `iJ₀ Σ_{a>b} γ_a γ_b` over all `2N` Majoranas, `J₀ = 1/√N`.
pub fn build_clean_quadratic(n: usize) -> OperatorSum {
    let j0 = 1.0 / (n as f64).sqrt();
    let terms = (1..=2 * n).tuple_combinations().map(|(b, a)| pair_term(a, b, j0, n));
    OperatorSum::from_terms(n, terms).expect("same register")
}

/// `i Σ_{a>b} J_ab γ_a γ_b` with independent standard-normal `J_ab`.
/// The realization stores `J_ab` under the ascending key `[b, a]`.
pub fn build_disordered_quadratic(spec: &ModelSpec, seed: u64) -> Result<(OperatorSum, DisorderRealization)> {
    expect_family(spec, &[Family::DisorderedQuadratic])?;
    let n = spec.n;
    let mut rng = disorder_rng(seed);
    let mut real = DisorderRealization::new(seed);
    let mut terms = Vec::new();
    for (b, a) in (1..=2 * n).tuple_combinations() {
        let jab: f64 = rng.sample(StandardNormal);
        real.insert(vec![b, a], jab);
        terms.push(pair_term(a, b, jab, n));
    }
    Ok((OperatorSum::from_terms(n, terms)?, real))
}

/// Retention probability of a `q`-tuple, `p = min(1, N^{α−q})`.
pub fn retention_probability(n: usize, q: usize, alpha: f64) -> f64 {
    (n as f64).powf(alpha - q as f64).min(1.0)
}

/// Sparse SYK: `i^{q/2} Σ_{a₁<…<a_q} x j γ_{a₁}⋯γ_{a_q}`.
///
/// Each ordered tuple is kept with probability [`retention_probability`];
/// kept couplings are Gaussian with variance `j²(q−1)!/N^{q−1}`. An empty
/// mask yields the zero operator and is left to the caller to flag.
pub fn build_sparse_syk(spec: &ModelSpec, seed: u64) -> Result<(OperatorSum, DisorderRealization)> {
    expect_family(spec, &[Family::SparseSyk, Family::RescaledSparseSyk])?;
    let n = spec.n;
    let q = spec.q();
    let p = retention_probability(n, q, spec.alpha());
    let fact: f64 = (1..q).map(|k| k as f64).product();
    let sd = spec.params.j * (fact / (n as f64).powi(q as i32 - 1)).sqrt();
    let phase = I.powu(q as u32 / 2);

    let mut rng = disorder_rng(seed);
    let mut real = DisorderRealization::new(seed);
    let mut terms = Vec::new();
    for tuple in (1..=2 * n).combinations(q) {
        let u: f64 = rng.random();
        if u >= p {
            continue;
        }
        let z: f64 = rng.sample(StandardNormal);
        let jv = sd * z;
        terms.push(majorana_product(&tuple, n)?.scaled(phase * jv));
        real.insert(tuple, jv);
    }
    Ok((OperatorSum::from_terms(n, terms)?, real))
}

/// Extensivity factor `M`: `N^{q x θ(x)/2 + 1/2}` with `x = 1 − 2α/q`, and
/// `N^{1/2 + 1 − α}` for `q = 2, α < 1`.
pub fn rescale_factor(spec: &ModelSpec) -> f64 {
    let n = spec.n as f64;
    let q = spec.q() as f64;
    let alpha = spec.alpha();
    if spec.q() == 2 && alpha < 1.0 {
        return n.powf(0.5 + 1.0 - alpha);
    }
    let x = spec.x();
    n.powf(q * x * theta(x) / 2.0 + 0.5)
}

pub fn rescale_syk(h: &OperatorSum, spec: &ModelSpec) -> OperatorSum {
    h.scale(rescale_factor(spec))
}

/// `p₁ = min(1, N^{−(x+1)})` for the pair mask of the simplified family.
pub fn simplified_pair_probability(n: usize, q: usize, alpha: f64) -> f64 {
    let x = 1.0 - 2.0 * alpha / q as f64;
    (n as f64).powf(-(x + 1.0)).min(1.0)
}

/// `H₁ = (JV)^k` with `k = q/2`, `J = N^{−(k−1)/k}` and
/// `V = N^{xθ(x)} (i Σ_{a≠b} y_ab λ_ab γ_a γ_b + wN)`.
///
/// `y` is drawn per unordered pair and `λ_ba = −λ_ab`, so the ordered double
/// sum equals `2i Σ_{a<b} y λ γ_a γ_b`. `w = p₁`.
pub fn build_simplified(spec: &ModelSpec, seed: u64) -> Result<(OperatorSum, DisorderRealization)> {
    expect_family(spec, &[Family::SimplifiedVk])?;
    let n = spec.n;
    let nf = n as f64;
    let q = spec.q();
    let k = (q / 2) as u32;
    let x = spec.x();
    let p1 = simplified_pair_probability(n, q, spec.alpha());
    let w = p1;
    let coupling = nf.powf(-((k - 1) as f64) / k as f64);
    let prefactor = nf.powf(x * theta(x));

    let mut rng = disorder_rng(seed);
    let mut real = DisorderRealization::new(seed);
    real.w = Some(w);
    let mut terms = vec![PauliTerm::identity(n).scaled((w * nf).into())];
    for (a, b) in (1..=2 * n).tuple_combinations() {
        let u: f64 = rng.random();
        if u >= p1 {
            continue;
        }
        let lam: f64 = rng.sample(StandardNormal);
        real.insert(vec![a, b], lam);
        terms.push(pair_term(a, b, 2.0 * lam, n));
    }
    let v = OperatorSum::from_terms(n, terms)?;
    let jv = v.scale(coupling * prefactor);
    Ok((jv.pow(k), real))
}

/// `Nλ(|top⟩⟨ground| + |ground⟩⟨top|)` on the register of `h0`.
pub fn build_geodesic(
    h0: &OperatorSum,
    lambda: f64,
    ground: &BatteryState,
    top: &BatteryState,
) -> Result<DMatrix<Complex64>> {
    let dim = h0.dim();
    if ground.dim() != dim || top.dim() != dim {
        return Err(Error::DimensionMismatch { left: dim, right: ground.dim().max(top.dim()) });
    }
    for (name, s) in [("ground", ground), ("top", top)] {
        let norm = s.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Geometry(format!("{name} state has norm {norm}")));
        }
    }
    let overlap = inner(ground.amplitudes(), top.amplitudes()).norm();
    if overlap > 1e-10 {
        return Err(Error::Geometry(format!("ground and top overlap by {overlap:e}")));
    }
    let g = DVector::from_column_slice(ground.amplitudes());
    let t = DVector::from_column_slice(top.amplitudes());
    let scale = Complex64::new(h0.n_cells() as f64 * lambda, 0.0);
    Ok((&t * g.adjoint() + &g * t.adjoint()) * scale)
}

/// Diagnostic quadratic Hamiltonian `Σᵢ λᵢ(i χ_{2i} χ_{2i−1} − 1)` with
/// `χ_a = Σ_b W_ab γ_b` for a Haar-random orthogonal `W`.
///
/// Returns the operator together with the `λᵢ`; its spectrum is
/// `{Σᵢ λᵢ(sᵢ − 1) : sᵢ = ±1}`.
pub fn build_rotated_quadratic(n: usize, seed: u64) -> Result<(OperatorSum, Vec<f64>)> {
    let size = 2 * n;
    let mut rng = disorder_rng(seed);
    let gauss = DMatrix::<f64>::from_fn(size, size, |_, _| rng.sample(StandardNormal));
    let qr = gauss.qr();
    let (mut w, r) = (qr.q(), qr.r());
    for col in 0..size {
        if r[(col, col)] < 0.0 {
            w.column_mut(col).neg_mut();
        }
    }
    let lambdas: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let gammas: Vec<PauliTerm> = (1..=size).map(|m| majorana(m, n)).collect::<Result<_>>()?;
    let chi = |row: usize| -> Result<OperatorSum> {
        let terms = (0..size).map(|b| gammas[b].scaled(w[(row, b)].into()));
        OperatorSum::from_terms(n, terms)
    };
    let mut out = OperatorSum::zero(n);
    for (i, &lam) in lambdas.iter().enumerate() {
        // rows 2i+1 and 2i hold χ_{2(i+1)} and χ_{2(i+1)−1}
        let pair = chi(2 * i + 1)?.multiply(&chi(2 * i)?)?;
        for t in pair.terms() {
            out.add_term(t.scaled(I * lam));
        }
        out.add_term(PauliTerm::identity(n).scaled((-lam).into()));
    }
    out.prune(crate::algebra::PRUNE_THRESHOLD);
    Ok((out, lambdas))
}

/// Number of retained couplings, `|mask|`.
pub fn connection_count(real: &DisorderRealization) -> usize {
    real.mask.len()
}
