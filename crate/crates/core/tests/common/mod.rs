//! Reference implementations used only by tests. Each one is written
//! independently of the library code it checks.

#![allow(dead_code)]

use max2csp::instances::{Assignment, Constraint, Instance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `Pr[N > t]` by composite Simpson integration of the density over
/// `[t, t + 40]`; the remaining mass is far below f64 resolution.
pub fn tail_simpson(t: f64) -> f64 {
    let steps = 200_000;
    let h = 40.0 / steps as f64;
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = phi(t) + phi(t + 40.0);
    for k in 1..steps {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * phi(t + k as f64 * h);
    }
    acc * h / 3.0
}

/// Inverse of `tail` by bisection on `[-40, 40]`.
pub fn inv_tail_bisect(p: f64, tail: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Every full assignment over `n` variables with values `0..r`, in
/// lexicographic order.
pub fn all_assignments(n: usize, r: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = r.pow(n as u32);
    (0..total).map(move |mut k| {
        let mut z = vec![0; n];
        for v in z.iter_mut().rev() {
            *v = k % r;
            k /= r;
        }
        z
    })
}

/// Score by scanning the constraint list directly.
pub fn score_direct(inst: &Instance, z: &[usize]) -> f64 {
    inst.constraints().iter().filter(|c| c.rel.contains(&(z[c.i], z[c.j]))).map(|c| c.weight).sum()
}

/// Unpruned enumeration: the best score and the first assignment reaching it.
pub fn exhaustive_opt(inst: &Instance) -> (f64, Vec<usize>) {
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for z in all_assignments(inst.n(), inst.domain()) {
        let s = score_direct(inst, &z);
        if s > best.0 {
            best = (s, z);
        }
    }
    best
}

/// A random small instance with arbitrary relations, duplicate
/// constraints, reversed orientations and empty relations all allowed.
pub fn random_small_instance(seed: u64, max_n: usize, max_r: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_n);
    let r = rng.random_range(2..=max_r);
    let m = rng.random_range(1..=2 * n);
    let constraints = (0..m)
        .map(|_| {
            let i = rng.random_range(0..n);
            let j = (i + rng.random_range(1..n)) % n;
            let density = rng.random::<f64>();
            let rel: Vec<(usize, usize)> =
                (0..r).flat_map(|a| (0..r).map(move |b| (a, b))).filter(|_| rng.random::<f64>() < density).collect();
            let weight = [1.0, 0.5, 2.0, 0.25][rng.random_range(0..4)];
            Constraint::new(i, j, rel, weight)
        })
        .collect();
    Instance::new(n, r, constraints).expect("generated instance is valid")
}

pub fn full(z: &[usize]) -> Assignment {
    Assignment::full(z.iter().copied())
}
