//! Charging-Hamiltonian families and their seeded disorder.

mod builders;
mod disorder;

pub use builders::{
    build_clean_quadratic, build_disordered_quadratic, build_geodesic, build_h0,
    build_parallel_drive, build_rotated_quadratic, build_simplified, build_sparse_syk,
    connection_count, rescale_factor, rescale_syk, retention_probability, simplified_pair_probability,
};
pub use disorder::{disorder_rng, DisorderRealization};

use std::borrow::Cow;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{LinearOperator, OperatorSum};
use crate::charging::{ground_state, top_state};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `H₁ = H₀`; commutes with the battery and never charges it.
    Onsite,
    /// `λ₀ Σ σˣᵢ`.
    ParallelDrive,
    /// `iJ₀ Σ_{a>b} γ_a γ_b` with `J₀ = 1/√N`.
    CleanQuadratic,
    /// `i Σ_{a>b} J_ab γ_a γ_b`, standard-normal `J_ab`.
    DisorderedQuadratic,
    /// Sparse `q`-body SYK.
    SparseSyk,
    /// Sparse SYK multiplied by the extensivity factor `M`.
    RescaledSparseSyk,
    /// `(JV)^{q/2}` with quadratic `V`.
    SimplifiedVk,
    /// `Nλ(|E_max⟩⟨E_min| + h.c.)`.
    Geodesic,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Onsite,
        Family::ParallelDrive,
        Family::CleanQuadratic,
        Family::DisorderedQuadratic,
        Family::SparseSyk,
        Family::RescaledSparseSyk,
        Family::SimplifiedVk,
        Family::Geodesic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Onsite => "onsite",
            Family::ParallelDrive => "parallel_drive",
            Family::CleanQuadratic => "clean_quadratic",
            Family::DisorderedQuadratic => "disordered_quadratic",
            Family::SparseSyk => "sparse_syk",
            Family::RescaledSparseSyk => "rescaled_sparse_syk",
            Family::SimplifiedVk => "simplified_vk",
            Family::Geodesic => "geodesic",
        }
    }

    pub fn uses_q(self) -> bool {
        matches!(self, Family::SparseSyk | Family::RescaledSparseSyk | Family::SimplifiedVk)
    }

    pub fn is_sparse(self) -> bool {
        self.uses_q()
    }

    pub fn is_disordered(self) -> bool {
        matches!(
            self,
            Family::DisorderedQuadratic | Family::SparseSyk | Family::RescaledSparseSyk | Family::SimplifiedVk
        )
    }

    /// Built in the Majorana string algebra, as opposed to a dense matrix.
    pub fn is_quadratic(self) -> bool {
        matches!(self, Family::CleanQuadratic | Family::DisorderedQuadratic)
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_q() -> usize {
    2
}

fn one() -> f64 {
    1.0
}

/// Everything about a Hamiltonian family except the register size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub family: Family,
    /// Interaction order; even, `≥ 2`.
    #[serde(default = "default_q")]
    pub q: usize,
    /// Connectivity exponent in `[0, q]`; defaults to `q`.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "one")]
    pub eps0: f64,
    #[serde(default = "one")]
    pub lambda0: f64,
    #[serde(default = "one")]
    pub j: f64,
    #[serde(default = "one")]
    pub geodesic_lambda: f64,
}

impl ModelParams {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            q: 2,
            alpha: None,
            eps0: 1.0,
            lambda0: 1.0,
            j: 1.0,
            geodesic_lambda: 1.0,
        }
    }

    pub fn with_q_alpha(mut self, q: usize, alpha: f64) -> Self {
        self.q = q;
        self.alpha = Some(alpha);
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(self.q as f64)
    }

    pub fn at(&self, n: usize) -> ModelSpec {
        ModelSpec { n, params: self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eps0", self.eps0),
            ("lambda0", self.lambda0),
            ("j", self.j),
            ("geodesic_lambda", self.geodesic_lambda),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidSpec(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if self.family.uses_q() {
            if self.q < 2 || !self.q.is_multiple_of(2) {
                return Err(Error::InvalidSpec(format!("q must be even and >= 2, got {}", self.q)));
            }
            let a = self.alpha();
            if !(a.is_finite() && (0.0..=self.q as f64).contains(&a)) {
                return Err(Error::InvalidSpec(format!("alpha must lie in [0, q], got {a}")));
            }
        }
        Ok(())
    }
}

/// A fully specified family member: parameters plus register size `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub n: usize,
    pub params: ModelParams,
}

impl ModelSpec {
    pub fn family(&self) -> Family {
        self.params.family
    }

    pub fn q(&self) -> usize {
        self.params.q
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha()
    }

    /// `x = 1 − 2α/q`.
    pub fn x(&self) -> f64 {
        1.0 - 2.0 * self.alpha() / self.q() as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > 64 {
            return Err(Error::InvalidSpec(format!("n must lie in 1..=64, got {}", self.n)));
        }
        self.params.validate()?;
        if self.family().uses_q() && 2 * self.n < self.q() {
            return Err(Error::InvalidSpec(format!(
                "need 2n >= q Majoranas, got n={} q={}",
                self.n,
                self.q()
            )));
        }
        Ok(())
    }
}

/// Heaviside step with `θ(0) = 1`.
pub fn theta(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub enum Hamiltonian {
    Pauli(OperatorSum),
    Dense(DMatrix<Complex64>),
}

impl Hamiltonian {
    pub fn as_pauli(&self) -> Option<&OperatorSum> {
        match self {
            Hamiltonian::Pauli(op) => Some(op),
            Hamiltonian::Dense(_) => None,
        }
    }

    pub fn dense(&self, cap: usize) -> Result<Cow<'_, DMatrix<Complex64>>> {
        match self {
            Hamiltonian::Pauli(op) => Ok(Cow::Owned(op.to_dense_with_cap(cap)?)),
            Hamiltonian::Dense(m) => Ok(Cow::Borrowed(m)),
        }
    }
}

impl LinearOperator for Hamiltonian {
    fn dim(&self) -> usize {
        match self {
            Hamiltonian::Pauli(op) => op.dim(),
            Hamiltonian::Dense(m) => m.nrows(),
        }
    }

    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        match self {
            Hamiltonian::Pauli(op) => op.apply(v),
            Hamiltonian::Dense(m) => m.apply(v),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub spec: ModelSpec,
    pub seed: u64,
    pub hamiltonian: Hamiltonian,
    pub realization: Option<DisorderRealization>,
}

impl BuiltModel {
    /// Empty sparsity mask: the Hamiltonian is identically zero.
    pub fn is_empty_mask(&self) -> bool {
        self.realization
            .as_ref()
            .is_some_and(|r| self.spec.family().is_sparse() && r.mask.is_empty())
    }
}

/// Builds the charging Hamiltonian of `spec`; deterministic in `(spec, seed)`.
pub fn build(spec: &ModelSpec, seed: u64) -> Result<BuiltModel> {
    spec.validate()?;
    let p = &spec.params;
    let n = spec.n;
    let (hamiltonian, realization) = match p.family {
        Family::Onsite => (Hamiltonian::Pauli(build_h0(n, p.eps0)), None),
        Family::ParallelDrive => (Hamiltonian::Pauli(build_parallel_drive(n, p.lambda0)), None),
        Family::CleanQuadratic => (Hamiltonian::Pauli(build_clean_quadratic(n)), None),
        Family::DisorderedQuadratic => {
            let (h, r) = build_disordered_quadratic(spec, seed)?;
            (Hamiltonian::Pauli(h), Some(r))
        }
        Family::SparseSyk => {
            let (h, r) = build_sparse_syk(spec, seed)?;
            (Hamiltonian::Pauli(h), Some(r))
        }
        Family::RescaledSparseSyk => {
            let (h, r) = build_sparse_syk(spec, seed)?;
            (Hamiltonian::Pauli(rescale_syk(&h, spec)), Some(r))
        }
        Family::SimplifiedVk => {
            let (h, r) = build_simplified(spec, seed)?;
            (Hamiltonian::Pauli(h), Some(r))
        }
        Family::Geodesic => {
            let h0 = build_h0(n, p.eps0);
            let m = build_geodesic(&h0, p.geodesic_lambda, &ground_state(n), &top_state(n))?;
            (Hamiltonian::Dense(m), None)
        }
    };
    Ok(BuiltModel { spec: spec.clone(), seed, hamiltonian, realization })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(Family::SparseSyk).with_q_alpha(3, 1.0).validate().is_err());
        assert!(ModelParams::new(Family::SparseSyk).with_q_alpha(4, 5.0).validate().is_err());
        assert!(ModelParams::new(Family::SparseSyk).with_q_alpha(4, 2.0).validate().is_ok());
        let mut p = ModelParams::new(Family::ParallelDrive);
        p.lambda0 = 0.0;
        assert!(p.validate().is_err());
        assert!(ModelParams::new(Family::SparseSyk).with_q_alpha(4, 4.0).at(1).validate().is_err());
    }

    #[test]
    fn alpha_defaults_to_q() {
        let mut p = ModelParams::new(Family::SparseSyk);
        p.q = 4;
        assert_eq!(p.alpha(), 4.0);
        assert_eq!(p.at(3).x(), -1.0);
    }

    #[test]
    fn theta_is_one_at_zero() {
        assert_eq!(theta(0.0), 1.0);
        assert_eq!(theta(-1e-12), 0.0);
    }

    #[test]
    fn family_names_round_trip_through_serde() {
        for f in Family::ALL {
            let s = serde_json::to_string(&f).unwrap();
            assert_eq!(s, format!("\"{}\"", f.name()));
            let back: Family = serde_json::from_str(&s).unwrap();
            assert_eq!(back, f);
        }
    }

    #[test]
    fn unknown_param_keys_rejected() {
        let r: std::result::Result<ModelParams, _> =
            serde_json::from_str(r#"{"family":"onsite","bogus":1}"#);
        assert!(r.is_err());
    }
}
