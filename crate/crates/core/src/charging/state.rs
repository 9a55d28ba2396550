use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::inner;
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;

/// Normalized state vector on the `2^N` computational basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    amplitudes: Vec<Complex64>,
}

impl BatteryState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::Domain(format!("state length {dim} is not a power of two")));
        }
        let norm = inner(&amplitudes, &amplitudes).re.sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Domain(format!("state norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes `amplitudes` first.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = inner(&amplitudes, &amplitudes).re.sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Numerical(format!("cannot normalize a vector of norm {norm}")));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Self::new(amplitudes)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn n_cells(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn norm(&self) -> f64 {
        inner(&self.amplitudes, &self.amplitudes).re.sqrt()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &BatteryState) -> f64 {
        inner(&self.amplitudes, &other.amplitudes).norm_sqr()
    }
}

/// Product of the per-cell vector `(1, phase)/√2`.
fn product_state(n: usize, phase: Complex64) -> BatteryState {
    let dim = 1usize << n;
    let scale = (0.5f64).powf(n as f64 / 2.0);
    let amplitudes = (0..dim)
        .map(|r| phase.powu(r.count_ones()) * scale)
        .collect();
    BatteryState { amplitudes }
}

/// `|0⟩^{⊗N}`: every cell in the `σʸ = −1` eigenvector `(1, −i)/√2`, so `H₀|0⟩ = 0`.
pub fn ground_state(n: usize) -> BatteryState {
    product_state(n, Complex64::new(0.0, -1.0))
}

/// Highest state of `H₀`: every cell in `(1, i)/√2`, energy `2Nε₀`.
pub fn top_state(n: usize) -> BatteryState {
    product_state(n, Complex64::new(0.0, 1.0))
}
