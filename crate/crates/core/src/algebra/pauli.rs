//! Weighted Pauli strings and their canonical linear combinations.
//!
//! A string on `n` cells is stored as two bitmasks. Bit `k` of a mask refers
//! to cell `k + 1`. A cell whose bit is set only in `x_mask` carries `X`, only
//! in `z_mask` carries `Z`, and in both carries `Y`. The stored string is the
//! literal tensor product of `{I, X, Y, Z}`; since `Y = iXZ`, the phase that
//! relates the literal string to the ordered product `X^x Z^z` lives entirely
//! in the coefficient, so every string has exactly one key `(x_mask, z_mask)`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coefficients with magnitude below this are dropped from an [`OperatorSum`].
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Largest register that [`OperatorSum::to_dense`] will materialize by default.
pub const DEFAULT_DENSE_CAP: usize = 12;

/// Multiplies `c` by `i^power`.
#[inline]
pub(crate) fn times_i_pow(c: Complex64, power: u32) -> Complex64 {
    match power & 3 {
        0 => c,
        1 => Complex64::new(-c.im, c.re),
        2 => -c,
        _ => Complex64::new(c.im, -c.re),
    }
}

#[inline]
fn y_count(x: u64, z: u64) -> u32 {
    (x & z).count_ones()
}

/// Reverses the low `n` bits so that cell 1 becomes the most significant
/// bit of a computational-basis index.
#[inline]
pub(crate) fn to_basis_order(mask: u64, n: usize) -> u64 {
    if n == 0 {
        0
    } else {
        mask.reverse_bits() >> (64 - n)
    }
}

/// Sign `(-1)^s` and phase power `p` such that `S(xa,za)·S(xb,zb) = i^p S(xa^xb, za^zb)`
/// for literal strings `S`.
#[inline]
fn product_phase(xa: u64, za: u64, xb: u64, zb: u64) -> u32 {
    let xr = xa ^ xb;
    let zr = za ^ zb;
    let raw = y_count(xa, za) + y_count(xb, zb) + 2 * (za & xb).count_ones();
    // subtract ny(result) modulo 4
    (raw + 4 - (y_count(xr, zr) & 3)) & 3
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliTerm {
    pub coeff: Complex64,
    pub x_mask: u64,
    pub z_mask: u64,
    pub n_cells: usize,
}

impl PauliTerm {
    pub fn new(coeff: Complex64, x_mask: u64, z_mask: u64, n_cells: usize) -> Self {
        debug_assert!(n_cells <= 64);
        debug_assert!(n_cells == 64 || (x_mask | z_mask) >> n_cells == 0);
        Self { coeff, x_mask, z_mask, n_cells }
    }

    pub fn identity(n_cells: usize) -> Self {
        Self::new(Complex64::new(1.0, 0.0), 0, 0, n_cells)
    }

    /// Single-cell Pauli factor; `cell` is 1-based, `axis` one of `'x'`, `'y'`, `'z'`.
    pub fn single(axis: char, cell: usize, n_cells: usize) -> Result<Self> {
        if cell == 0 || cell > n_cells {
            return Err(Error::CellOutOfRange { index: cell, n_cells });
        }
        let bit = 1u64 << (cell - 1);
        let (x, z) = match axis {
            'x' | 'X' => (bit, 0),
            'y' | 'Y' => (bit, bit),
            'z' | 'Z' => (0, bit),
            other => return Err(Error::Domain(format!("unknown Pauli axis {other:?}"))),
        };
        Ok(Self::new(Complex64::new(1.0, 0.0), x, z, n_cells))
    }

    pub fn key(&self) -> (u64, u64) {
        (self.x_mask, self.z_mask)
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        self.coeff *= factor;
        self
    }

    /// Operator product `self · other`, phase tracked exactly.
    pub fn multiply(&self, other: &PauliTerm) -> Result<PauliTerm> {
        if self.n_cells != other.n_cells {
            return Err(Error::DimensionMismatch { left: self.n_cells, right: other.n_cells });
        }
        Ok(self.multiply_unchecked(other))
    }

    #[inline]
    pub(crate) fn multiply_unchecked(&self, other: &PauliTerm) -> PauliTerm {
        let power = product_phase(self.x_mask, self.z_mask, other.x_mask, other.z_mask);
        PauliTerm {
            coeff: times_i_pow(self.coeff * other.coeff, power),
            x_mask: self.x_mask ^ other.x_mask,
            z_mask: self.z_mask ^ other.z_mask,
            n_cells: self.n_cells,
        }
    }

    /// Whether the two strings commute (coefficients ignored).
    pub fn commutes_with(&self, other: &PauliTerm) -> bool {
        let sym = (self.x_mask & other.z_mask).count_ones() + (self.z_mask & other.x_mask).count_ones();
        sym.is_multiple_of(2)
    }

    /// Letter at a 1-based cell.
    pub fn letter(&self, cell: usize) -> char {
        let bit = 1u64 << (cell - 1);
        match (self.x_mask & bit != 0, self.z_mask & bit != 0) {
            (false, false) => 'I',
            (true, false) => 'X',
            (true, true) => 'Y',
            (false, true) => 'Z',
        }
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        OperatorSum::from_term(*self).to_dense()
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:+}{:+}i) ", self.coeff.re, self.coeff.im)?;
        for cell in 1..=self.n_cells {
            write!(f, "{}", self.letter(cell))?;
        }
        Ok(())
    }
}

/// Canonical sum of Pauli strings keyed by `(x_mask, z_mask)`.
///
/// Iteration order is the key order, which keeps every derived quantity
/// bit-reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSum {
    n_cells: usize,
    terms: BTreeMap<(u64, u64), Complex64>,
}

impl OperatorSum {
    pub fn zero(n_cells: usize) -> Self {
        assert!((1..=64).contains(&n_cells), "register must hold 1..=64 cells");
        Self { n_cells, terms: BTreeMap::new() }
    }

    pub fn identity(n_cells: usize, coeff: f64) -> Self {
        let mut op = Self::zero(n_cells);
        op.add_term(PauliTerm::identity(n_cells).scaled(Complex64::new(coeff, 0.0)));
        op
    }

    pub fn from_term(term: PauliTerm) -> Self {
        let mut op = Self::zero(term.n_cells);
        op.add_term(term);
        op
    }

    pub fn from_terms(n_cells: usize, terms: impl IntoIterator<Item = PauliTerm>) -> Result<Self> {
        let mut op = Self::zero(n_cells);
        for t in terms {
            if t.n_cells != n_cells {
                return Err(Error::DimensionMismatch { left: n_cells, right: t.n_cells });
            }
            op.accumulate(t);
        }
        op.prune(PRUNE_THRESHOLD);
        Ok(op)
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_cells
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, x_mask: u64, z_mask: u64) -> Complex64 {
        self.terms.get(&(x_mask, z_mask)).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = PauliTerm> + '_ {
        self.terms
            .iter()
            .map(move |(&(x, z), &c)| PauliTerm::new(c, x, z, self.n_cells))
    }

    /// Adds a term and prunes the slot if it cancels.
    pub fn add_term(&mut self, term: PauliTerm) {
        assert_eq!(term.n_cells, self.n_cells, "register size mismatch");
        let slot = self.terms.entry(term.key()).or_default();
        *slot += term.coeff;
        if slot.norm() < PRUNE_THRESHOLD {
            self.terms.remove(&term.key());
        }
    }

    /// Adds without pruning; callers prune once at the end.
    fn accumulate(&mut self, term: PauliTerm) {
        *self.terms.entry(term.key()).or_default() += term.coeff;
    }

    pub fn prune(&mut self, threshold: f64) {
        self.terms.retain(|_, c| c.norm() >= threshold);
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= factor;
        }
        out.prune(PRUNE_THRESHOLD);
        out
    }

    /// Canonical merge of `Σ_k s_k · op_k`.
    pub fn combine(ops: &[(f64, &OperatorSum)]) -> Result<Self> {
        let Some((_, first)) = ops.first() else {
            return Err(Error::Domain("combine needs at least one operand".into()));
        };
        let n = first.n_cells;
        let mut out = Self::zero(n);
        for (s, op) in ops {
            if op.n_cells != n {
                return Err(Error::DimensionMismatch { left: n, right: op.n_cells });
            }
            for t in op.terms() {
                out.accumulate(t.scaled(Complex64::new(*s, 0.0)));
            }
        }
        out.prune(PRUNE_THRESHOLD);
        Ok(out)
    }

    /// Operator product `self · other` in the string algebra.
    pub fn multiply(&self, other: &OperatorSum) -> Result<Self> {
        if self.n_cells != other.n_cells {
            return Err(Error::DimensionMismatch { left: self.n_cells, right: other.n_cells });
        }
        let mut out = Self::zero(self.n_cells);
        for a in self.terms() {
            for b in other.terms() {
                out.accumulate(a.multiply_unchecked(&b));
            }
        }
        out.prune(PRUNE_THRESHOLD);
        Ok(out)
    }

    /// `self^k` by repeated multiplication; `k = 0` gives the identity.
    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.n_cells, 1.0);
        for _ in 0..k {
            out = out.multiply(self).expect("same register");
        }
        out
    }

    /// Every literal Pauli string is Hermitian, so the sum is Hermitian iff
    /// all coefficients are real.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `Tr(op) / 2^n`, the identity coefficient.
    pub fn normalized_trace(&self) -> Complex64 {
        self.coeff(0, 0)
    }

    /// `H|v⟩` without forming the matrix. `v` is indexed in the
    /// computational basis with cell 1 as the most significant bit.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let dim = self.dim();
        assert_eq!(v.len(), dim, "vector length must be 2^n");
        let mut out = vec![Complex64::default(); dim];
        for t in self.terms() {
            let xb = to_basis_order(t.x_mask, self.n_cells) as usize;
            let zb = to_basis_order(t.z_mask, self.n_cells) as usize;
            let base = times_i_pow(t.coeff, y_count(t.x_mask, t.z_mask));
            for (r, amp) in v.iter().enumerate() {
                let c = if (zb & r).count_ones().is_multiple_of(2) { base } else { -base };
                out[r ^ xb] += c * amp;
            }
        }
        out
    }

    /// `⟨v|H|v⟩`.
    pub fn expectation(&self, v: &[Complex64]) -> Complex64 {
        let hv = self.apply(v);
        v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        self.to_dense_with_cap(DEFAULT_DENSE_CAP)
    }

    /// Sum of Kronecker products, cell 1 as the most significant factor.
    pub fn to_dense_with_cap(&self, cap: usize) -> Result<DMatrix<Complex64>> {
        if self.n_cells > cap {
            return Err(Error::ResourceLimit { n_cells: self.n_cells, cap });
        }
        let dim = self.dim();
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for t in self.terms() {
            let xb = to_basis_order(t.x_mask, self.n_cells) as usize;
            let zb = to_basis_order(t.z_mask, self.n_cells) as usize;
            let base = times_i_pow(t.coeff, y_count(t.x_mask, t.z_mask));
            for col in 0..dim {
                let c = if (zb & col).count_ones().is_multiple_of(2) { base } else { -base };
                m[(col ^ xb, col)] += c;
            }
        }
        Ok(m)
    }
}

impl fmt::Display for OperatorSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sx() -> PauliTerm {
        PauliTerm::single('x', 1, 1).unwrap()
    }
    fn sy() -> PauliTerm {
        PauliTerm::single('y', 1, 1).unwrap()
    }
    fn sz() -> PauliTerm {
        PauliTerm::single('z', 1, 1).unwrap()
    }

    #[test]
    fn x_squared_is_identity() {
        let p = sx().multiply(&sx()).unwrap();
        assert!(p.is_identity());
        assert_eq!(p.coeff, c(1.0, 0.0));
    }

    #[test]
    fn x_times_y_is_i_z() {
        let p = sx().multiply(&sy()).unwrap();
        assert_eq!(p.key(), sz().key());
        assert_eq!(p.coeff, c(0.0, 1.0));
        let q = sy().multiply(&sx()).unwrap();
        assert_eq!(q.coeff, c(0.0, -1.0));
    }

    #[test]
    fn y_and_z_cycle() {
        // YZ = iX, ZX = iY
        let yz = sy().multiply(&sz()).unwrap();
        assert_eq!((yz.key(), yz.coeff), (sx().key(), c(0.0, 1.0)));
        let zx = sz().multiply(&sx()).unwrap();
        assert_eq!((zx.key(), zx.coeff), (sy().key(), c(0.0, 1.0)));
    }

    #[test]
    fn mismatched_registers_error() {
        let a = PauliTerm::identity(2);
        let b = PauliTerm::identity(3);
        assert!(matches!(a.multiply(&b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dense_y_matches_definition() {
        let m = sy().to_dense().unwrap();
        assert_eq!(m[(0, 0)], c(0.0, 0.0));
        assert_eq!(m[(0, 1)], c(0.0, -1.0));
        assert_eq!(m[(1, 0)], c(0.0, 1.0));
        assert_eq!(m[(1, 1)], c(0.0, 0.0));
    }

    #[test]
    fn dense_identity() {
        let m = OperatorSum::identity(1, 1.0).to_dense().unwrap();
        assert_eq!(m, DMatrix::identity(2, 2));
    }

    #[test]
    fn cell_one_is_most_significant() {
        // Z on cell 1 of two cells = diag(1,1,-1,-1)
        let z1 = PauliTerm::single('z', 1, 2).unwrap().to_dense().unwrap();
        let d: Vec<f64> = (0..4).map(|k| z1[(k, k)].re).collect();
        assert_eq!(d, vec![1.0, 1.0, -1.0, -1.0]);
        let z2 = PauliTerm::single('z', 2, 2).unwrap().to_dense().unwrap();
        let d: Vec<f64> = (0..4).map(|k| z2[(k, k)].re).collect();
        assert_eq!(d, vec![1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn dense_cap_is_enforced() {
        let op = OperatorSum::identity(13, 1.0);
        assert!(matches!(op.to_dense(), Err(Error::ResourceLimit { n_cells: 13, cap: 12 })));
        assert!(OperatorSum::identity(3, 1.0).to_dense_with_cap(2).is_err());
    }

    #[test]
    fn combine_cancels_and_doubles() {
        let x = OperatorSum::from_term(sx());
        assert!(OperatorSum::combine(&[(1.0, &x), (-1.0, &x)]).unwrap().is_empty());
        let two = OperatorSum::combine(&[(1.0, &x), (1.0, &x)]).unwrap();
        assert_eq!(two.len(), 1);
        assert_eq!(two.coeff(1, 0), c(2.0, 0.0));
    }

    #[test]
    fn combine_rejects_mismatched_registers() {
        let a = OperatorSum::identity(1, 1.0);
        let b = OperatorSum::identity(2, 1.0);
        assert!(matches!(
            OperatorSum::combine(&[(1.0, &a), (1.0, &b)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn prune_drops_dust() {
        let mut op = OperatorSum::zero(1);
        op.add_term(sx().scaled(c(1e-15, 0.0)));
        assert!(op.is_empty());
        op.add_term(sx().scaled(c(1e-13, 0.0)));
        assert_eq!(op.len(), 1);
    }

    #[test]
    fn apply_matches_dense() {
        let op = OperatorSum::from_terms(
            2,
            [
                PauliTerm::new(c(0.3, 0.0), 0b11, 0b01, 2),
                PauliTerm::new(c(-1.2, 0.5), 0b10, 0b10, 2),
                PauliTerm::new(c(0.7, 0.0), 0, 0b11, 2),
            ],
        )
        .unwrap();
        let v: Vec<Complex64> = (0..4).map(|k| c(k as f64 + 1.0, 0.5 - k as f64)).collect();
        let dense = op.to_dense().unwrap() * nalgebra::DVector::from_vec(v.clone());
        let applied = op.apply(&v);
        for (a, b) in dense.iter().zip(&applied) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn pow_zero_is_identity() {
        let x = OperatorSum::from_term(sx());
        assert_eq!(x.pow(0), OperatorSum::identity(1, 1.0));
        assert_eq!(x.pow(2), OperatorSum::identity(1, 1.0));
    }

    #[test]
    fn display_lists_letters() {
        let t = PauliTerm::new(c(1.0, 0.0), 0b011, 0b110, 3);
        assert!(t.to_string().ends_with("XYZ"));
    }
}
