use qbattery::models::{build, connection_count, retention_probability, Family, ModelParams};

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[test]
fn mean_connection_count_matches_retention_rule() {
    let (q, alpha) = (4, 3.0);
    let params = ModelParams::new(Family::SparseSyk).with_q_alpha(q, alpha);
    for n in [4usize, 5, 6] {
        let draws = 400;
        let counts: Vec<f64> = (0..draws)
            .map(|s| connection_count(build(&params.at(n), s).unwrap().realization.as_ref().unwrap()) as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / draws as f64;
        let p = retention_probability(n, q, alpha);
        let tuples = binomial(2 * n as u64, q as u64);
        let exact = p * tuples;
        let sd = (tuples * p * (1.0 - p) / draws as f64).sqrt();
        assert!((mean - exact).abs() < 5.0 * sd, "N={n}: mean {mean} vs {exact} ± {sd}");
    }
}

#[test]
fn syk_coupling_variance_follows_normalization() {
    let (q, n) = (4usize, 4usize);
    let params = ModelParams::new(Family::SparseSyk).with_q_alpha(q, q as f64);
    let values: Vec<f64> = (0..20)
        .flat_map(|s| build(&params.at(n), s).unwrap().realization.unwrap().couplings.into_values())
        .collect();
    let var = values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64;
    let expected = 6.0 / (n as f64).powi(3);
    // 20 · 70 draws: relative error of the sample variance is about 4%
    assert!((var / expected - 1.0).abs() < 0.2, "variance {var} vs {expected}");
}

#[test]
fn empty_masks_give_the_zero_operator() {
    let params = ModelParams::new(Family::SparseSyk).with_q_alpha(4, 0.0);
    let empty = (0..200u64).map(|s| build(&params.at(3), s).unwrap()).find(|m| m.is_empty_mask()).unwrap();
    let dense = empty.hamiltonian.dense(12).unwrap();
    assert!(dense.iter().all(|z| z.norm() == 0.0));
}
