use qbattery::ensemble::{derive_seed, run_sweep, write_records, Quantity, RunOptions, SweepPlan};
use qbattery::models::{Family, ModelParams};

fn plan(family: Family, q: usize, alpha: f64, quantities: &[Quantity]) -> SweepPlan {
    SweepPlan::new(ModelParams::new(family).with_q_alpha(q, alpha), vec![3, 4, 5], 8, 0xC0FFEE).with_quantities(quantities)
}

fn bytes(plan: &SweepPlan, workers: usize) -> Vec<u8> {
    let outcome = run_sweep(plan, &RunOptions { workers, ..RunOptions::default() }).unwrap();
    let mut buf = Vec::new();
    write_records(&mut buf, &outcome.records).unwrap();
    buf
}

#[test]
fn worker_count_does_not_change_records() {
    let p = plan(Family::RescaledSparseSyk, 4, 3.0, &[Quantity::Variance, Quantity::Advantage, Quantity::SandwichFraction]);
    let one = bytes(&p, 1);
    assert_eq!(one, bytes(&p, 3));
    assert_eq!(one, bytes(&p, 8));
}

#[test]
fn records_are_ordered_and_seeded_by_index() {
    let p = plan(Family::DisorderedQuadratic, 2, 2.0, &[Quantity::Variance]);
    let outcome = run_sweep(&p, &RunOptions::default()).unwrap();
    let mut k = 0;
    for &n in &p.n_values {
        for r in 0..p.realizations {
            let rec = &outcome.records[k];
            assert_eq!((rec.n, rec.realization), (n, r));
            assert_eq!(rec.seed, derive_seed(p.master_seed, n, r));
            k += 1;
        }
    }
}

#[test]
fn extending_a_sweep_keeps_earlier_realizations() {
    let small = plan(Family::SparseSyk, 4, 2.0, &[Quantity::Variance]);
    let mut large = small.clone();
    large.realizations = 12;
    large.n_values.push(6);
    let a = run_sweep(&small, &RunOptions::default()).unwrap();
    let b = run_sweep(&large, &RunOptions::default()).unwrap();
    for rec in &a.records {
        let twin = b.records.iter().find(|r| r.n == rec.n && r.realization == rec.realization).unwrap();
        assert_eq!(rec, twin);
    }
}

#[test]
fn degenerate_draws_are_counted_not_averaged() {
    // α = 0 at q = 4 leaves most masks empty at N = 3
    let p = SweepPlan::new(ModelParams::new(Family::SparseSyk).with_q_alpha(4, 0.0), vec![3, 4, 5], 40, 1)
        .with_quantities(&[Quantity::Variance, Quantity::Advantage]);
    let outcome = run_sweep(&p, &RunOptions::default()).unwrap();
    let empty = outcome.records.iter().filter(|r| r.n == 3 && r.degenerate).count();
    assert!(empty > 0);
    let adv = outcome.aggregate.row(3, Quantity::Advantage).unwrap();
    assert_eq!(adv.degenerate, empty);
    assert_eq!(adv.samples + adv.degenerate, 40);
    let var = outcome.aggregate.row(3, Quantity::Variance).unwrap();
    assert_eq!(var.samples, 40);
    for rec in outcome.records.iter().filter(|r| r.degenerate) {
        assert!(rec.advantage.is_none());
        assert!(rec.variance.unwrap() < 1e-20);
    }
}

#[test]
fn invalid_plans_are_rejected_before_running() {
    let mut p = plan(Family::Geodesic, 2, 2.0, &[Quantity::Variance]);
    p.n_values = vec![4, 3];
    assert!(run_sweep(&p, &RunOptions::default()).is_err());
    let p = plan(Family::Geodesic, 2, 2.0, &[Quantity::Lambda2]);
    assert!(run_sweep(&p, &RunOptions::default()).is_err());
    let p = plan(Family::Geodesic, 2, 2.0, &[Quantity::Variance]);
    assert!(run_sweep(&p, &RunOptions { dense_cap: 4, ..RunOptions::default() }).is_err());
}
