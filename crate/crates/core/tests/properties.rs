mod common;

use common::*;
use max2csp::exact::{brute_force, DEFAULT_BUDGET};
use max2csp::gaussian::{inv_tail, tail};
use max2csp::instances::{parse, serialize, Assignment};
use max2csp::rounding::{best_of, round_once, target_probs, thresholds, trial_rng, Fallback};
use max2csp::sdp::{self, embed, feasibility, solve, SolverConfig};
use proptest::prelude::*;

fn small_instance() -> impl Strategy<Value = max2csp::instances::Instance> {
    any::<u64>().prop_map(|s| random_small_instance(s, 6, 4))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_preserves_every_score(inst in small_instance()) {
        let atomic = inst.normalize();
        for z in all_assignments(inst.n(), inst.domain()) {
            let a = full(&z);
            prop_assert_eq!(inst.score(&a).unwrap(), atomic.score(&a).unwrap());
        }
    }

    #[test]
    fn atoms_are_canonical_and_positive(inst in small_instance()) {
        let atomic = inst.normalize();
        let total: f64 = atomic.atoms().iter().map(|t| t.weight).sum();
        prop_assert!((total - atomic.total_weight()).abs() < 1e-12);
        for w in atomic.atoms().windows(2) {
            prop_assert!((w[0].i, w[0].a, w[0].j, w[0].b) < (w[1].i, w[1].a, w[1].j, w[1].b));
        }
        for t in atomic.atoms() {
            prop_assert!(t.i < t.j && t.weight > 0.0);
        }
    }

    #[test]
    fn partial_assignments_ignore_touched_constraints(inst in small_instance(), drop in 0usize..6) {
        let n = inst.n();
        let mut z = Assignment::full(vec![0; n]);
        z.set(drop % n, None);
        let kept: f64 = inst.constraints().iter()
            .filter(|c| c.i != drop % n && c.j != drop % n && c.rel.contains(&(0, 0)))
            .map(|c| c.weight).sum();
        prop_assert_eq!(inst.score(&z).unwrap(), kept);
        prop_assert_eq!(inst.normalize().score(&z).unwrap(), kept);
    }

    #[test]
    fn instance_file_round_trips(inst in small_instance()) {
        prop_assert_eq!(parse(&serialize(&inst)).unwrap(), inst);
    }

    #[test]
    fn embed_objective_is_score(inst in small_instance(), k in any::<usize>()) {
        let atomic = inst.normalize();
        let z = all_assignments(inst.n(), inst.domain()).nth(k % inst.domain().pow(inst.n() as u32)).unwrap();
        let rep = feasibility(&embed(&full(&z), &atomic).unwrap(), &atomic).unwrap();
        prop_assert!(rep.is_feasible(0.0));
        prop_assert_eq!(rep.objective, score_direct(&inst, &z));
    }

    #[test]
    fn inv_tail_inverts(p in 1e-12f64..0.999) {
        let t = inv_tail(p).unwrap();
        prop_assert!((tail(t) - p).abs() <= 1e-9 * p.max(1e-3));
    }

    #[test]
    fn rounding_state_invariants(inst in small_instance(), seed in any::<u64>()) {
        let atomic = inst.normalize();
        prop_assume!(!atomic.is_empty());
        let (n, r) = (inst.n(), inst.domain());
        let z = all_assignments(n, r).nth(seed as usize % r.pow(n as u32)).unwrap();
        let sol = embed(&full(&z), &atomic).unwrap().lifted(4);
        let p = target_probs(&sol);
        let rf = r as f64;
        for &x in &p {
            prop_assert!(x >= 0.5 / rf - 1e-15 && x <= 1.0 / rf.sqrt() + 0.5 / rf + 1e-15);
        }
        let t = thresholds(&p).unwrap();
        let (out, state) = round_once(&sol, Fallback::Uniform, &mut trial_rng(seed, 0)).unwrap();
        prop_assert_eq!(&state.t, &t);
        prop_assert!(out.is_complete());
        for (i, list) in state.shortlists.iter().enumerate() {
            for &a in list {
                let norm = sol.norm(i, a);
                if norm >= max2csp::rounding::EPS_ZERO {
                    let proj: f64 = sol.vector(i, a).iter().zip(&state.g).map(|(x, g)| x * g).sum();
                    prop_assert!(proj >= norm * t[i * r + a]);
                }
            }
            let v = out.get(i).unwrap();
            if !list.is_empty() {
                prop_assert!(list.contains(&v));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn relaxation_is_sound(seed in any::<u64>()) {
        let inst = random_small_instance(seed, 5, 3);
        let atomic = inst.normalize();
        prop_assume!(!atomic.is_empty());
        let solved = solve(&atomic, &SolverConfig { seed, ..Default::default() }).unwrap();
        let opt = brute_force(&inst, DEFAULT_BUDGET).unwrap().value;
        prop_assert!(solved.report.objective <= atomic.total_weight() + 1e-6);
        if solved.converged {
            prop_assert!(solved.report.objective >= opt - 1e-3, "{} < {}", solved.report.objective, opt);
            prop_assert!(solved.report.is_feasible(1e-6));
        }
    }

    #[test]
    fn best_of_dominates_single_trial(seed in any::<u64>()) {
        let inst = random_small_instance(seed, 5, 3);
        let atomic = inst.normalize();
        prop_assume!(!atomic.is_empty());
        let sol = solve(&atomic, &SolverConfig { seed, max_outer: 10, ..Default::default() }).unwrap().solution;
        let (z, stats) = best_of(&sol, &atomic, 64, seed, Fallback::Uniform).unwrap();
        prop_assert!(stats.max >= stats.mean - 1e-12);
        prop_assert_eq!(atomic.score(&z).unwrap(), stats.max);
        let (z1, _) = best_of(&sol, &atomic, 1, seed, Fallback::Uniform).unwrap();
        let (z0, _) = round_once(&sol, Fallback::Uniform, &mut trial_rng(seed, 0)).unwrap();
        prop_assert_eq!(z1, z0);
        prop_assert!(sdp::objective(&sol, &atomic).unwrap() <= atomic.total_weight() + 1e-6);
    }
}
