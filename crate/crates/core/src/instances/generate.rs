//! Seeded benchmark families.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Assignment, Constraint, Instance};
use crate::error::{Error, Result};

fn check_sizes(n: usize, r: usize, m: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInstance(format!("generators need n >= 2, got {n}")));
    }
    if r < 2 {
        return Err(Error::InvalidInstance(format!("generators need R >= 2, got {r}")));
    }
    if m < 1 {
        return Err(Error::InvalidInstance("generators need m >= 1".into()));
    }
    Ok(())
}

fn random_pair(rng: &mut impl Rng, n: usize) -> (usize, usize) {
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

/// Random Max 2LIN-R: each constraint reads `X_i - X_j = b (mod R)`.
pub fn gen_2lin(n: usize, r: usize, m: usize, seed: u64) -> Result<Instance> {
    check_sizes(n, r, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let constraints = (0..m)
        .map(|_| {
            let (i, j) = random_pair(&mut rng, n);
            let shift = rng.random_range(0..r);
            Constraint::new(i, j, (0..r).map(|a| (a, (a + r - shift) % r)), 1.0)
        })
        .collect();
    Instance::new(n, r, constraints)
}

/// Random Unique Game: every relation is `X_i = pi(X_j)` for a permutation
/// `pi`. With `planted`, each permutation is adjusted to agree with a hidden
/// assignment so the whole instance is satisfiable.
pub fn gen_unique_game(n: usize, r: usize, m: usize, seed: u64, planted: bool) -> Result<Instance> {
    check_sizes(n, r, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hidden = draw_hidden(&mut rng, n, r);
    let constraints = (0..m)
        .map(|_| {
            let (i, j) = random_pair(&mut rng, n);
            let mut perm: Vec<usize> = (0..r).collect();
            perm.shuffle(&mut rng);
            if planted {
                let pos = perm.iter().position(|&v| v == hidden[i]).expect("perm covers domain");
                perm.swap(pos, hidden[j]);
            }
            Constraint::new(i, j, (0..r).map(|b| (perm[b], b)), 1.0)
        })
        .collect();
    Instance::new(n, r, constraints)
}

fn draw_hidden(rng: &mut impl Rng, n: usize, r: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..r)).collect()
}

/// The hidden assignment [`gen_unique_game`] plants for the same `n`, `R`
/// and seed. It satisfies every constraint of the planted instance.
pub fn unique_game_planted(n: usize, r: usize, seed: u64) -> Assignment {
    Assignment::full(draw_hidden(&mut ChaCha8Rng::seed_from_u64(seed), n, r))
}

/// Random general 2CSP: each of the R^2 pairs enters a relation
/// independently with probability `density`.
pub fn gen_random_2csp(n: usize, r: usize, m: usize, density: f64, seed: u64) -> Result<Instance> {
    check_sizes(n, r, m)?;
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidInstance(format!("density must lie in (0, 1], got {density}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let constraints = (0..m)
        .map(|_| {
            let (i, j) = random_pair(&mut rng, n);
            let rel: Vec<(usize, usize)> = (0..r)
                .flat_map(|a| (0..r).map(move |b| (a, b)))
                .filter(|_| rng.random_bool(density))
                .collect();
            Constraint::new(i, j, rel, 1.0)
        })
        .collect();
    Instance::new(n, r, constraints)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lin_sizes_and_relation_counts() {
        let inst = gen_2lin(4, 3, 10, 7).unwrap();
        assert_eq!(inst.constraints().len(), 10);
        for c in inst.constraints() {
            assert_eq!(c.rel.len(), 3);
            assert_ne!(c.i, c.j);
            let shift = (c.rel.iter().next().unwrap().0 + 3 - c.rel.iter().next().unwrap().1) % 3;
            assert!(c.rel.iter().all(|&(a, b)| (a + 3 - b) % 3 == shift));
        }
    }

    #[test]
    fn lin_single_pair() {
        let inst = gen_2lin(2, 2, 1, 0).unwrap();
        let c = &inst.constraints()[0];
        assert!((c.i, c.j) == (0, 1) || (c.i, c.j) == (1, 0));
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(gen_2lin(6, 4, 12, 99).unwrap(), gen_2lin(6, 4, 12, 99).unwrap());
        assert_eq!(gen_unique_game(6, 4, 12, 99, true).unwrap(), gen_unique_game(6, 4, 12, 99, true).unwrap());
        assert_eq!(gen_random_2csp(6, 4, 12, 0.3, 99).unwrap(), gen_random_2csp(6, 4, 12, 0.3, 99).unwrap());
    }

    #[test]
    fn distinct_seeds_differ() {
        let differ = (0..50u64).filter(|&s| gen_2lin(8, 4, 10, s).unwrap() != gen_2lin(8, 4, 10, s + 1000).unwrap()).count();
        assert_eq!(differ, 50);
    }

    #[test]
    fn unique_game_relations_are_bijections() {
        let inst = gen_unique_game(7, 5, 20, 3, false).unwrap();
        for c in inst.constraints() {
            assert_eq!(c.rel.len(), 5);
            let lefts: std::collections::BTreeSet<_> = c.rel.iter().map(|p| p.0).collect();
            let rights: std::collections::BTreeSet<_> = c.rel.iter().map(|p| p.1).collect();
            assert_eq!(lefts.len(), 5);
            assert_eq!(rights.len(), 5);
        }
    }

    #[test]
    fn planted_unique_game_is_satisfiable() {
        for seed in 0..10 {
            let inst = gen_unique_game(5, 3, 12, seed, true).unwrap();
            // Regenerate the hidden assignment from the same stream prefix.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let hidden: Vec<usize> = (0..5).map(|_| rng.random_range(0..3)).collect();
            assert_eq!(inst.score(&Assignment::full(hidden)).unwrap(), inst.total_weight());
        }
    }

    #[test]
    fn full_density_accepts_everything() {
        let inst = gen_random_2csp(5, 3, 8, 1.0, 1).unwrap();
        assert!(inst.constraints().iter().all(|c| c.rel.len() == 9));
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(gen_2lin(1, 3, 1, 0).is_err());
        assert!(gen_2lin(3, 3, 0, 0).is_err());
        assert!(gen_unique_game(3, 1, 2, 0, false).is_err());
        assert!(gen_random_2csp(3, 3, 2, 0.0, 0).is_err());
        assert!(gen_random_2csp(3, 3, 2, 1.5, 0).is_err());
        assert!(gen_random_2csp(3, 3, 2, f64::NAN, 0).is_err());
    }
}
