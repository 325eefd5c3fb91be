mod common;

use common::*;
use stratdiff::generators::make_gk;
use stratdiff::heuristics::{greedy_sequence, strategy_a_gk};
use stratdiff::simulate::{simulate_sequence, simulate_sequence_with_workers};

#[test]
fn sample_means_are_unbiased() {
    // |mean - analytic| <= 4 s.e. should fail far less than 1% of the time
    let g = make_gk(2).unwrap();
    let seq = strategy_a_gk(2).unwrap().nodes().to_vec();
    let misses = (0..100)
        .filter(|&s| {
            let r = simulate_sequence(&g, &seq, 2000, s).unwrap();
            (r.mean - r.analytic).abs() > 4.0 * r.std_error
        })
        .count();
    assert!(misses <= 1, "{misses} of 100 outside 4 s.e.");
}

#[test]
fn weighted_instances_match_analytic_time() {
    for seed in 0..10 {
        let inst = random_weighted_instance(seed, 7);
        let seq = greedy_sequence(&inst);
        if seq.infeasible {
            continue;
        }
        let r = simulate_sequence(&inst, seq.nodes(), 20_000, seed).unwrap();
        assert!(close(r.analytic, seq.total_time));
        assert!((r.mean - r.analytic).abs() <= 4.0 * r.std_error + TOL, "seed {seed}: {r:?}");
        assert!(r.min >= (inst.z - 1) as f64);
    }
}

#[test]
fn fixed_seed_and_workers_reproduce() {
    let g = make_gk(3).unwrap();
    let seq = strategy_a_gk(3).unwrap().nodes().to_vec();
    for workers in [1, 2, 5] {
        let a = simulate_sequence_with_workers(&g, &seq, 3001, 8, workers).unwrap();
        assert_eq!(a, simulate_sequence_with_workers(&g, &seq, 3001, 8, workers).unwrap());
        assert_eq!(a.trials, 3001);
    }
    assert_ne!(simulate_sequence(&g, &seq, 1000, 1).unwrap(), simulate_sequence(&g, &seq, 1000, 2).unwrap());
}
