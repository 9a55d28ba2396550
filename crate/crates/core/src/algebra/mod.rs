//! Pauli-string and Majorana algebra on an `n`-cell qubit register.

mod majorana;
mod pauli;

pub use majorana::{
    anticommutation_table, anticommutation_table_with, jw_majorana, majorana, majorana_product,
    MajoranaIndex, MajoranaMap,
};
pub use pauli::{OperatorSum, PauliTerm, DEFAULT_DENSE_CAP, PRUNE_THRESHOLD};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Anything that can act on a state vector of the `2^n` computational basis.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, v: &[Complex64]) -> Vec<Complex64>;
}

impl LinearOperator for OperatorSum {
    fn dim(&self) -> usize {
        OperatorSum::dim(self)
    }

    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        OperatorSum::apply(self, v)
    }
}

impl LinearOperator for DMatrix<Complex64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let out: DVector<Complex64> = self * DVector::from_column_slice(v);
        out.data.into()
    }
}

/// `⟨a|b⟩`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Largest entry-wise deviation between a dense matrix and its adjoint.
pub fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}
