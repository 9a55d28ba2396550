//! Majorana operators on an `n`-cell register through the Jordan-Wigner map.
//!
//! `γ_{2l}   = Z_1 ⋯ Z_{l-1} X_l`
//! `γ_{2l-1} = Z_1 ⋯ Z_{l-1} Y_l`

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::pauli::{OperatorSum, PauliTerm};
use crate::error::{Error, Result};

/// 1-based Majorana label `m ∈ [1, 2n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MajoranaIndex(usize);

impl MajoranaIndex {
    pub fn new(m: usize, n_cells: usize) -> Result<Self> {
        if m == 0 || m > 2 * n_cells {
            return Err(Error::IndexOutOfRange { index: m, max: 2 * n_cells });
        }
        Ok(Self(m))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Cell `l` that carries the non-`Z` factor.
    pub fn cell(self) -> usize {
        self.0.div_ceil(2)
    }

    /// `X`-type (even label) versus `Y`-type (odd label).
    pub fn is_x_type(self) -> bool {
        self.0.is_multiple_of(2)
    }
}

/// A map from Majorana labels to Pauli strings. Lets the verification suite
/// swap in a deliberately broken map.
pub type MajoranaMap = dyn Fn(MajoranaIndex, usize) -> PauliTerm + Sync;

/// Jordan-Wigner image of `γ_m`, unit coefficient.
pub fn jw_majorana(m: MajoranaIndex, n_cells: usize) -> PauliTerm {
    let l = m.cell();
    debug_assert!(l <= n_cells);
    let string = (1u64 << (l - 1)) - 1;
    let site = 1u64 << (l - 1);
    let (x, z) = if m.is_x_type() { (site, string) } else { (site, string | site) };
    PauliTerm::new(Complex64::new(1.0, 0.0), x, z, n_cells)
}

/// Checked form of [`jw_majorana`] taking a raw label.
pub fn majorana(m: usize, n_cells: usize) -> Result<PauliTerm> {
    Ok(jw_majorana(MajoranaIndex::new(m, n_cells)?, n_cells))
}

/// Ordered product `γ_{m_1} γ_{m_2} ⋯` as a single string.
pub fn majorana_product(labels: &[usize], n_cells: usize) -> Result<PauliTerm> {
    let mut acc = PauliTerm::identity(n_cells);
    for &m in labels {
        acc = acc.multiply_unchecked(&majorana(m, n_cells)?);
    }
    Ok(acc)
}

/// `{γ_m, γ_n} = s·I`; returns the `2n × 2n` table of `s`.
pub fn anticommutation_table(n_cells: usize) -> Result<DMatrix<f64>> {
    anticommutation_table_with(n_cells, &jw_majorana)
}

pub fn anticommutation_table_with(n_cells: usize, map: &MajoranaMap) -> Result<DMatrix<f64>> {
    if n_cells == 0 {
        return Err(Error::Domain("need at least one cell".into()));
    }
    let size = 2 * n_cells;
    let gammas: Vec<PauliTerm> = (1..=size)
        .map(|m| map(MajoranaIndex(m), n_cells))
        .collect();
    let mut table = DMatrix::zeros(size, size);
    for a in 0..size {
        for b in 0..size {
            let ab = gammas[a].multiply(&gammas[b])?;
            let ba = gammas[b].multiply(&gammas[a])?;
            let anti = OperatorSum::from_terms(n_cells, [ab, ba])?;
            let s = match anti.len() {
                0 => Complex64::default(),
                1 if anti.coeff(0, 0) != Complex64::default() => anti.coeff(0, 0),
                _ => {
                    return Err(Error::AlgebraViolation(format!(
                        "{{γ_{}, γ_{}}} is not proportional to the identity",
                        a + 1,
                        b + 1
                    )))
                }
            };
            if s.im.abs() > 1e-12 {
                return Err(Error::AlgebraViolation(format!(
                    "{{γ_{}, γ_{}}} has complex scalar {s}",
                    a + 1,
                    b + 1
                )));
            }
            table[(a, b)] = s.re;
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_cell_majoranas() {
        let g1 = majorana(1, 1).unwrap();
        assert_eq!(g1.key(), PauliTerm::single('y', 1, 1).unwrap().key());
        assert_eq!(g1.coeff, Complex64::new(1.0, 0.0));
        let g2 = majorana(2, 1).unwrap();
        assert_eq!(g2.key(), PauliTerm::single('x', 1, 1).unwrap().key());
    }

    #[test]
    fn gamma3_has_one_z() {
        let g3 = majorana(3, 2).unwrap();
        assert_eq!(g3.letter(1), 'Z');
        assert_eq!(g3.letter(2), 'Y');
        assert_eq!(g3.coeff, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn out_of_range_labels() {
        assert!(matches!(majorana(0, 2), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(majorana(5, 2), Err(Error::IndexOutOfRange { index: 5, max: 4 })));
    }

    #[test]
    fn gamma1_gamma2_is_minus_i_z() {
        // dense oracle: Y·X = [[0,-i],[i,0]]·[[0,1],[1,0]] = [[-i,0],[0,i]] = -iZ
        let p = majorana_product(&[1, 2], 1).unwrap();
        assert_eq!(p.key(), (0, 1));
        assert_eq!(p.coeff, Complex64::new(0.0, -1.0));
    }

    #[test]
    fn table_entries() {
        let t = anticommutation_table(2).unwrap();
        assert_eq!(t[(0, 0)], 2.0);
        assert_eq!(t[(0, 2)], 0.0);
        let t3 = anticommutation_table(3).unwrap();
        assert_eq!(t3, DMatrix::identity(6, 6) * 2.0);
    }

    #[test]
    fn broken_map_is_caught() {
        // drop the Jordan-Wigner string: γ's on different cells then commute
        let broken = |m: MajoranaIndex, n: usize| {
            let mut t = jw_majorana(m, n);
            t.z_mask &= 1u64 << (m.cell() - 1);
            t
        };
        let table = anticommutation_table_with(2, &broken).unwrap_or_else(|_| DMatrix::zeros(4, 4));
        assert_ne!(table, DMatrix::identity(4, 4) * 2.0);
    }
}
