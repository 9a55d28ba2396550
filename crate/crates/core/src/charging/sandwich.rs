use nalgebra::DMatrix;
use num_complex::Complex64;

use super::state::BatteryState;
use crate::algebra::{inner, majorana, LinearOperator, OperatorSum, PauliTerm};
use crate::error::{Error, Result};
use crate::models::DisorderRealization;

fn check_cell(i: usize, n: usize) -> Result<()> {
    if i == 0 || i > n {
        return Err(Error::CellOutOfRange { index: i, n_cells: n });
    }
    Ok(())
}

/// `hᵢ = ε₀(σʸᵢ + 1)`.
pub fn cell_hamiltonian(i: usize, eps0: f64, n: usize) -> Result<OperatorSum> {
    check_cell(i, n)?;
    OperatorSum::from_terms(
        n,
        [
            PauliTerm::single('y', i, n)?.scaled(eps0.into()),
            PauliTerm::identity(n).scaled(eps0.into()),
        ],
    )
}

/// `⟨ψ|H₁ hᵢ H₁|ψ⟩`.
pub fn sandwich_moment(h1: &impl LinearOperator, i: usize, eps0: f64, psi: &BatteryState) -> Result<f64> {
    let n = psi.n_cells();
    if h1.dim() != psi.dim() {
        return Err(Error::DimensionMismatch { left: h1.dim(), right: psi.dim() });
    }
    let hi = cell_hamiltonian(i, eps0, n)?;
    let phi = h1.apply(psi.amplitudes());
    let value = inner(&phi, &hi.apply(&phi));
    if value.im.abs() > 1e-10 * value.norm().max(1.0) {
        return Err(Error::Numerical(format!("sandwich moment has imaginary part {}", value.im)));
    }
    Ok(value.re)
}

/// Terms of `h1` that anticommute with `σʸᵢ`, i.e. carry `X` or `Z` on cell `i`,
/// together with their number `Nᵢ`.
pub fn anticommuting_block(h1: &OperatorSum, i: usize) -> Result<(OperatorSum, usize)> {
    let n = h1.n_cells();
    check_cell(i, n)?;
    let bit = 1u64 << (i - 1);
    let block = OperatorSum::from_terms(n, h1.terms().filter(|t| (t.x_mask ^ t.z_mask) & bit != 0))?;
    let count = block.len();
    Ok((block, count))
}

/// `2ε₀⟨ψ|H₁ H_{1,i}|ψ⟩`, the right-hand side of the sandwich identity.
pub fn block_moment(h1: &OperatorSum, i: usize, eps0: f64, psi: &BatteryState) -> Result<f64> {
    let (block, _) = anticommuting_block(h1, i)?;
    let value = inner(&h1.apply(psi.amplitudes()), &block.apply(psi.amplitudes()));
    Ok(2.0 * eps0 * value.re)
}

/// Fraction of cells with `⟨H₁hᵢH₁⟩ ≥ SANDWICH_THRESHOLD · 2ε₀ΔH₁²`.
pub fn sandwich_fraction(h1: &impl LinearOperator, eps0: f64, psi: &BatteryState, variance: f64) -> Result<f64> {
    let n = psi.n_cells();
    let scale = 2.0 * eps0 * variance;
    if !(scale > 0.0) {
        return Err(Error::Degenerate("sandwich fraction needs a nonzero variance".into()));
    }
    let mut hits = 0usize;
    for i in 1..=n {
        if sandwich_moment(h1, i, eps0, psi)? >= SANDWICH_THRESHOLD * scale {
            hits += 1;
        }
    }
    Ok(hits as f64 / n as f64)
}

pub const SANDWICH_THRESHOLD: f64 = 0.25;

/// Real part `A` of the Majorana correlation matrix `C_ij = i⟨γᵢγⱼ⟩`.
///
/// Off the diagonal `C = A` is real and antisymmetric. On the diagonal
/// `C_ii = i⟨γᵢ²⟩ = i`, which is not stored: `C = A + i·I`.
pub fn correlation_matrix(psi: &BatteryState) -> Result<DMatrix<f64>> {
    let n = psi.n_cells();
    let size = 2 * n;
    let applied: Vec<Vec<Complex64>> = (1..=size)
        .map(|m| Ok(OperatorSum::from_term(majorana(m, n)?).apply(psi.amplitudes())))
        .collect::<Result<_>>()?;
    let mut a = DMatrix::zeros(size, size);
    for r in 0..size {
        for c in 0..size {
            if r == c {
                continue;
            }
            // ⟨γ_r γ_c⟩ = ⟨γ_r ψ | γ_c ψ⟩ since γ_r is Hermitian
            let value = Complex64::new(0.0, 1.0) * inner(&applied[r], &applied[c]);
            if value.im.abs() > 1e-10 {
                return Err(Error::Numerical(format!(
                    "correlator C_{},{} has imaginary part {}",
                    r + 1,
                    c + 1,
                    value.im
                )));
            }
            a[(r, c)] = value.re;
        }
    }
    Ok(a)
}

/// Antisymmetric coupling `y_ab λ_ab` for ordered labels, from the ascending key.
fn masked_coupling(real: &DisorderRealization, a: usize, b: usize) -> f64 {
    if a < b {
        real.coupling(&[a, b]).unwrap_or(0.0)
    } else {
        -real.coupling(&[b, a]).unwrap_or(0.0)
    }
}

/// `Λₙ = N⁻ⁿ Σ y λ ⋯ C_{i₁j₂}C_{i₂j₁} ⋯ C_{i_{n−1}jₙ}C_{iₙj_{n−1}}`, summed
/// by brute force over ordered masked pairs `(i_k, j_k)`, `i_k ≠ j_k`.
///
/// `a` is the real part returned by [`correlation_matrix`]; the diagonal
/// `C_ii = i` is restored here. Cost grows as `|mask|ⁿ`, so `n ≤ 4`.
pub fn lambda_n(real: &DisorderRealization, a: &DMatrix<f64>, n_cells: usize, n: usize) -> Result<f64> {
    if n > 4 {
        return Err(Error::Unsupported(format!("Λ_{n} is too costly to evaluate by brute force")));
    }
    if n != 2 && n != 4 {
        return Err(Error::Domain(format!("Λ_n is defined for n ∈ {{2, 4}}, got {n}")));
    }
    let size = 2 * n_cells;
    if a.nrows() != size || a.ncols() != size {
        return Err(Error::DimensionMismatch { left: a.nrows(), right: size });
    }
    let c = |r: usize, s: usize| -> Complex64 {
        if r == s {
            Complex64::new(0.0, 1.0)
        } else {
            Complex64::new(a[(r - 1, s - 1)], 0.0)
        }
    };
    let pairs: Vec<(usize, usize, f64)> = real
        .mask
        .iter()
        .flat_map(|key| [(key[0], key[1]), (key[1], key[0])])
        .map(|(i, j)| (i, j, masked_coupling(real, i, j)))
        .collect();

    let mut total = Complex64::default();
    if n == 2 {
        for &(i1, j1, l1) in &pairs {
            for &(i2, j2, l2) in &pairs {
                total += l1 * l2 * c(i1, j2) * c(i2, j1);
            }
        }
    } else {
        for &(i1, j1, l1) in &pairs {
            for &(i2, j2, l2) in &pairs {
                let first = l1 * l2 * c(i1, j2) * c(i2, j1);
                for &(i3, j3, l3) in &pairs {
                    for &(i4, j4, l4) in &pairs {
                        total += first * l3 * l4 * c(i3, j4) * c(i4, j3);
                    }
                }
            }
        }
    }
    let value = total / (n_cells as f64).powi(n as i32);
    if value.im.abs() > 1e-10 * value.norm().max(1.0) {
        return Err(Error::Numerical(format!("Λ_{n} has imaginary part {}", value.im)));
    }
    Ok(value.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charging::{ground_state, top_state};
    use crate::models::{build_disordered_quadratic, build_geodesic, build_h0, build_parallel_drive, Family, ModelParams};

    #[test]
    fn onsite_drive_has_no_sandwich() {
        let h0 = build_h0(3, 1.0);
        for i in 1..=3 {
            assert!(sandwich_moment(&h0, i, 1.0, &ground_state(3)).unwrap().abs() < 1e-12);
        }
        assert!(sandwich_moment(&h0, 4, 1.0, &ground_state(3)).is_err());
    }

    #[test]
    fn sandwich_identity_on_quadratic() {
        let spec = ModelParams::new(Family::DisorderedQuadratic).at(4);
        let (h1, _) = build_disordered_quadratic(&spec, 17).unwrap();
        let g = ground_state(4);
        for i in 1..=4 {
            let lhs = sandwich_moment(&h1, i, 0.6, &g).unwrap();
            let rhs = block_moment(&h1, i, 0.6, &g).unwrap();
            assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0), "cell {i}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn geodesic_sandwich() {
        let n = 3;
        let lambda = 0.8;
        let top = top_state(n);
        let h1 = build_geodesic(&build_h0(n, 1.0), lambda, &ground_state(n), &top).unwrap();
        let hi = cell_hamiltonian(2, 1.0, n).unwrap();
        let expected = (n as f64 * lambda).powi(2) * hi.expectation(top.amplitudes()).re;
        let got = sandwich_moment(&h1, 2, 1.0, &ground_state(n)).unwrap();
        assert!((got - expected).abs() < 1e-10);
    }

    #[test]
    fn parallel_block_is_one_term() {
        let drive = build_parallel_drive(4, 1.0);
        for i in 1..=4 {
            let (block, count) = anticommuting_block(&drive, i).unwrap();
            assert_eq!(count, 1);
            assert_eq!(block.terms().next().unwrap().letter(i), 'X');
        }
        assert!(anticommuting_block(&drive, 0).is_err());
    }

    #[test]
    fn string_through_cell_anticommutes() {
        // γ_{2l}γ_{2k} with l < i < k carries Z on cell i
        let n = 4;
        let term = crate::algebra::majorana_product(&[2, 8], n).unwrap();
        let op = OperatorSum::from_term(term);
        assert_eq!(anticommuting_block(&op, 2).unwrap().1, 1);
        assert_eq!(anticommuting_block(&op, 3).unwrap().1, 1);
    }

    #[test]
    fn ground_state_correlations() {
        let a = correlation_matrix(&ground_state(1)).unwrap();
        assert!(a[(0, 1)].abs() < 1e-12);
        let a = correlation_matrix(&ground_state(3)).unwrap();
        assert!((&a + a.transpose()).iter().all(|v| v.abs() < 1e-10));
        for r in 0..6 {
            for c in 0..6 {
                // only the bond pairs (2l, 2l+1) are correlated
                let bond = (r % 2 == 1 && c == r + 1) || (c % 2 == 1 && r == c + 1);
                assert_eq!(a[(r, c)].abs() > 0.5, bond, "({r},{c})");
            }
        }
        assert!((a[(1, 2)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_vanishes_without_couplings() {
        let a = correlation_matrix(&ground_state(2)).unwrap();
        let mut real = DisorderRealization::new(0);
        assert_eq!(lambda_n(&real, &a, 2, 2).unwrap(), 0.0);
        real.insert(vec![1, 3], 0.0);
        assert_eq!(lambda_n(&real, &a, 2, 2).unwrap(), 0.0);
        assert!(matches!(lambda_n(&real, &a, 2, 6), Err(Error::Unsupported(_))));
        assert!(matches!(lambda_n(&real, &a, 2, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn lambda_single_pair_by_hand() {
        // one pair (2,3) gives ordered pairs (2,3,λ) and (3,2,−λ):
        // λ²(C₂₃C₂₃ − C₂₂C₃₃ − C₃₃C₂₂ + C₃₂C₃₂) with C_ii = i
        let n = 2;
        let a = correlation_matrix(&ground_state(n)).unwrap();
        let lam = 1.7;
        let mut real = DisorderRealization::new(0);
        real.insert(vec![2, 3], lam);
        let c23 = a[(1, 2)];
        let expected = lam * lam * (2.0 * c23 * c23 + 2.0) / (n * n) as f64;
        assert!((lambda_n(&real, &a, n, 2).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn lambda_four_factorizes() {
        let n = 2;
        let a = correlation_matrix(&ground_state(n)).unwrap();
        let mut real = DisorderRealization::new(0);
        real.insert(vec![1, 2], 0.4);
        real.insert(vec![2, 3], -1.1);
        real.insert(vec![1, 4], 0.9);
        let l2 = lambda_n(&real, &a, n, 2).unwrap();
        let l4 = lambda_n(&real, &a, n, 4).unwrap();
        assert!((l4 - l2 * l2).abs() < 1e-10);
    }
}
