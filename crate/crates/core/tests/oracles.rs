//! Library results against the independent reference implementations in
//! `common`.

mod common;

use std::collections::BTreeMap;

use common::*;
use max2csp::exact::{brute_force, DEFAULT_BUDGET};
use max2csp::gaussian::{inv_tail, tail};
use max2csp::instances::example_instance;
use max2csp::rounding::{target_probs, thresholds};
use max2csp::sdp::{embed, feasibility, VectorSolution};

#[test]
fn tail_matches_simpson() {
    for k in 0..=110 {
        let t = -3.0 + 0.1 * k as f64;
        let (got, want) = (tail(t), tail_simpson(t));
        assert!((got - want).abs() <= 1e-9 * want, "t={t}: {got} vs {want}");
    }
}

#[test]
fn inv_tail_matches_bisection() {
    for p in [1e-15, 1e-9, 1e-4, 0.01, 1.0 / 64.0, 0.1, 0.25, 0.375, 0.5, 0.7, 0.99] {
        let got = inv_tail(p).unwrap();
        let want = inv_tail_bisect(p, tail);
        assert!((got - want).abs() < 1e-9, "p={p}: {got} vs {want}");
    }
}

#[test]
fn thresholds_invert_targets() {
    let p: Vec<f64> = (0..50).map(|k| 1.0 / 128.0 + k as f64 * 0.009).collect();
    for (t, &p) in thresholds(&p).unwrap().iter().zip(&p) {
        assert!((tail(*t) - p).abs() <= 1e-9);
    }
}

#[test]
fn brute_force_matches_enumeration() {
    for seed in 0..120 {
        let inst = random_small_instance(seed, 6, 4);
        let (want, _) = exhaustive_opt(&inst);
        let got = brute_force(&inst, DEFAULT_BUDGET).unwrap();
        assert_eq!(got.value, want, "seed {seed}");
        let w: Vec<usize> = got.witness.values().iter().map(|v| v.unwrap()).collect();
        assert_eq!(score_direct(&inst, &w), want);
    }
}

#[test]
fn example_instance_values() {
    let inst = example_instance();
    assert_eq!((inst.n(), inst.domain(), inst.constraints().len()), (3, 3, 5));

    // canonical (low var, its value, high var, its value) keys
    let mut keys = BTreeMap::new();
    for c in inst.constraints() {
        for &(a, b) in &c.rel {
            let key = if c.i < c.j { (c.i, a, c.j, b) } else { (c.j, b, c.i, a) };
            *keys.entry(key).or_insert(0.0) += c.weight;
        }
    }
    let atomic = inst.normalize();
    assert_eq!(atomic.atoms().len(), keys.len());
    assert_eq!(keys.len(), 17);

    let (opt, _) = exhaustive_opt(&inst);
    assert_eq!(opt, 4.0);
    assert_eq!(brute_force(&inst, DEFAULT_BUDGET).unwrap().value, 4.0);
    assert_eq!(inst.score(&full(&[0, 0, 0])).unwrap(), score_direct(&inst, &[0, 0, 0]));
    assert_eq!(score_direct(&inst, &[0, 0, 0]), 2.0);
    assert_eq!(score_direct(&inst, &[0, 1, 1]), 3.0);
}

#[test]
fn target_probability_endpoints() {
    let mut sol = VectorSolution::zeros(1, 4, 2);
    sol.vector_mut(0, 1)[0] = 1.0;
    let p = target_probs(&sol);
    assert_eq!(p[0], 1.0 / 8.0);
    assert_eq!(p[1], 3.0 / 8.0);
}

#[test]
fn embedded_assignments_score_exactly() {
    for seed in 0..40 {
        let inst = random_small_instance(1000 + seed, 6, 4);
        let atomic = inst.normalize();
        for z in all_assignments(inst.n(), inst.domain()).step_by(7) {
            let sol = embed(&full(&z), &atomic).unwrap();
            let rep = feasibility(&sol, &atomic).unwrap();
            assert!(rep.is_feasible(1e-12));
            assert!((rep.objective - score_direct(&inst, &z)).abs() < 1e-9);
        }
    }
}
