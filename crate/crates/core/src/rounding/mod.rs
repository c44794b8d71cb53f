//! Gaussian shortlist rounding and the norm-proportional baseline.
//!
//! One Gaussian vector `g` is shared by all variables in a trial. Value `a`
//! enters the shortlist of variable `i` when `<x_{i,a}, g>` clears
//! `|x_{i,a}| t_{i,a}`, where `t_{i,a}` is the upper-tail quantile of the
//! target probability `p_{i,a} = (|x_{i,a}| / sqrt(R) + 1/R) / 2`. The
//! assignment picks uniformly from each shortlist.

mod probe;

use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

pub use probe::{marginal_counts, pair_geometry, pair_prob_estimate, probe_atoms, PairEstimate, PairGeometry, ProbeReport};

use crate::error::{Error, Result};
use crate::gaussian::inv_tail;
use crate::instances::{Assignment, AtomicInstance};
use crate::sdp::VectorSolution;

/// Labels shorter than this are treated as zero vectors.
pub const EPS_ZERO: f64 = 1e-9;

/// Trials per parallel work unit; reductions run over units in order.
const CHUNK: usize = 1024;

/// What to do with a variable whose shortlist came up empty.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Fallback {
    /// Uniform value from the whole domain.
    #[default]
    Uniform,
    /// Leave the variable unassigned.
    None,
}

impl std::str::FromStr for Fallback {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "none" => Ok(Self::None),
            _ => Err(Error::Config(format!("unknown fallback policy `{s}`"))),
        }
    }
}

/// Row-major `n x R` matrix of target probabilities.
pub fn target_probs(sol: &VectorSolution) -> Vec<f64> {
    let r = sol.domain() as f64;
    (0..sol.n())
        .flat_map(|i| (0..sol.domain()).map(move |a| (i, a)))
        .map(|(i, a)| 0.5 * (sol.norm(i, a) / r.sqrt() + 1.0 / r))
        .collect()
}

pub fn thresholds(p: &[f64]) -> Result<Vec<f64>> {
    p.iter().map(|&p| inv_tail(p)).collect()
}

/// Shortlists for one Gaussian draw. Zero-norm labels skip the projection
/// test and enter by a coin of probability `p_{i,a}` drawn from `aux`.
pub fn shortlists(sol: &VectorSolution, p: &[f64], t: &[f64], g: &[f64], aux: &mut impl Rng) -> Result<Vec<Vec<usize>>> {
    if g.len() != sol.dim() {
        return Err(Error::Shape(format!("g has length {}, solution dim is {}", g.len(), sol.dim())));
    }
    let cells = sol.n() * sol.domain();
    if p.len() != cells || t.len() != cells {
        return Err(Error::Shape(format!("expected {cells} probabilities and thresholds")));
    }
    let norms: Vec<f64> = sol.data().chunks(sol.dim()).map(|x| crate::sdp::dot(x, x).sqrt()).collect();
    Ok(lists_with_norms(sol, &norms, p, t, g, aux))
}

fn lists_with_norms(
    sol: &VectorSolution,
    norms: &[f64],
    p: &[f64],
    t: &[f64],
    g: &[f64],
    aux: &mut impl Rng,
) -> Vec<Vec<usize>> {
    let r = sol.domain();
    (0..sol.n())
        .map(|i| {
            (0..r)
                .filter(|&a| {
                    let k = i * r + a;
                    if norms[k] < EPS_ZERO {
                        aux.random_bool(p[k])
                    } else {
                        crate::sdp::dot(sol.vector(i, a), g) >= norms[k] * t[k]
                    }
                })
                .collect()
        })
        .collect()
}

/// Uniform choice from each shortlist.
pub fn select(lists: &[Vec<usize>], r: usize, fallback: Fallback, rng: &mut impl Rng) -> Assignment {
    Assignment::from_options(
        lists
            .iter()
            .map(|l| match (l.len(), fallback) {
                (0, Fallback::Uniform) => Some(rng.random_range(0..r)),
                (0, Fallback::None) => None,
                (k, _) => Some(l[rng.random_range(0..k)]),
            })
            .collect(),
    )
}

/// Everything one trial saw, for diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundingState {
    pub n: usize,
    pub r: usize,
    pub p: Vec<f64>,
    pub t: Vec<f64>,
    pub g: Vec<f64>,
    pub shortlists: Vec<Vec<usize>>,
}

impl RoundingState {
    /// `ROUND 1 n R dim`, then `p`, `t` rows per variable, the `g` line and
    /// one `L` line per shortlist.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ROUND 1 {} {} {}", self.n, self.r, self.g.len());
        for (tag, m) in [("p", &self.p), ("t", &self.t)] {
            for (i, row) in m.chunks(self.r).enumerate() {
                let _ = write!(out, "{tag} {i}");
                row.iter().for_each(|x| {
                    let _ = write!(out, " {x}");
                });
                out.push('\n');
            }
        }
        out.push('g');
        self.g.iter().for_each(|x| {
            let _ = write!(out, " {x}");
        });
        out.push('\n');
        for (i, l) in self.shortlists.iter().enumerate() {
            let _ = write!(out, "L {i}");
            l.iter().for_each(|a| {
                let _ = write!(out, " {a}");
            });
            out.push('\n');
        }
        out
    }
}

/// Precomputed probabilities and thresholds for repeated trials on one
/// solution.
#[derive(Clone, Debug)]
pub struct Rounder<'a> {
    sol: &'a VectorSolution,
    norms: Vec<f64>,
    p: Vec<f64>,
    t: Vec<f64>,
    fallback: Fallback,
}

impl<'a> Rounder<'a> {
    pub fn new(sol: &'a VectorSolution, fallback: Fallback) -> Result<Self> {
        let p = target_probs(sol);
        let t = thresholds(&p)?;
        let norms = sol.data().chunks(sol.dim()).map(|x| crate::sdp::dot(x, x).sqrt()).collect();
        Ok(Self { sol, norms, p, t, fallback })
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.t
    }

    pub fn solution(&self) -> &VectorSolution {
        self.sol
    }

    /// One Gaussian draw and its shortlists. The coin and selection seeds
    /// come off `rng` before `g`, so `g` is the same for a given `rng` state
    /// whatever the coins do.
    pub fn draw(&self, rng: &mut impl Rng) -> (Vec<f64>, Vec<Vec<usize>>, ChaCha8Rng) {
        let aux_seed: u64 = rng.random();
        let select_seed: u64 = rng.random();
        let g: Vec<f64> = (0..self.sol.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let mut aux = ChaCha8Rng::seed_from_u64(aux_seed);
        let lists = lists_with_norms(self.sol, &self.norms, &self.p, &self.t, &g, &mut aux);
        (g, lists, ChaCha8Rng::seed_from_u64(select_seed))
    }

    /// The assignment and shortlists of one trial, without the full state.
    pub fn round_lists(&self, rng: &mut impl Rng) -> (Assignment, Vec<Vec<usize>>) {
        let (_, lists, mut sel) = self.draw(rng);
        (select(&lists, self.sol.domain(), self.fallback, &mut sel), lists)
    }

    pub fn round(&self, rng: &mut impl Rng) -> (Assignment, RoundingState) {
        let (g, lists, mut sel) = self.draw(rng);
        let z = select(&lists, self.sol.domain(), self.fallback, &mut sel);
        let state = RoundingState {
            n: self.sol.n(),
            r: self.sol.domain(),
            p: self.p.clone(),
            t: self.t.clone(),
            g,
            shortlists: lists,
        };
        (z, state)
    }
}

pub fn round_once(sol: &VectorSolution, fallback: Fallback, rng: &mut impl Rng) -> Result<(Assignment, RoundingState)> {
    Ok(Rounder::new(sol, fallback)?.round(rng))
}

/// Independent stream for trial `k` under a master seed.
pub fn trial_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundingStats {
    pub trials: usize,
    pub mean: f64,
    /// Standard error of `mean`.
    pub sigma: f64,
    pub max: f64,
    /// `histogram[k]` counts variable-trials with `|L_i| = k`.
    pub histogram: Vec<u64>,
}

impl RoundingStats {
    pub fn mean_shortlist_size(&self) -> f64 {
        let total: u64 = self.histogram.iter().sum();
        let weighted: f64 = self.histogram.iter().enumerate().map(|(k, &c)| k as f64 * c as f64).sum();
        weighted / total.max(1) as f64
    }

    pub fn empty_rate(&self) -> f64 {
        let total: u64 = self.histogram.iter().sum();
        self.histogram.first().copied().unwrap_or(0) as f64 / total.max(1) as f64
    }
}

/// Running score moments over trials, merged chunk by chunk in index order.
#[derive(Clone, Default)]
struct Moments {
    count: usize,
    sum: f64,
    sum_sq: f64,
    best: Option<(f64, usize, Assignment)>,
}

impl Moments {
    fn push(&mut self, k: usize, score: f64, z: impl FnOnce() -> Assignment) {
        self.count += 1;
        self.sum += score;
        self.sum_sq += score * score;
        if self.best.as_ref().is_none_or(|(b, _, _)| score > *b) {
            self.best = Some((score, k, z()));
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        if let Some(o) = other.best {
            if self.best.as_ref().is_none_or(|(b, _, _)| o.0 > *b) {
                self.best = Some(o);
            }
        }
        self
    }

    fn mean_sigma(&self) -> (f64, f64) {
        let n = self.count as f64;
        let mean = self.sum / n;
        let var = if self.count > 1 { ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        (mean, (var / n).sqrt())
    }
}

fn chunked<T: Send>(trials: usize, f: impl Fn(std::ops::Range<usize>) -> T + Sync) -> Vec<T> {
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks).into_par_iter().map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(trials))).collect()
}

/// Best assignment over `trials` independent roundings; trial `k` uses
/// [`trial_rng`]`(seed, k)`. Ties go to the earliest trial.
pub fn best_of(
    sol: &VectorSolution,
    atomic: &AtomicInstance,
    trials: usize,
    seed: u64,
    fallback: Fallback,
) -> Result<(Assignment, RoundingStats)> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let rounder = Rounder::new(sol, fallback)?;
    let r = sol.domain();
    let parts = chunked(trials, |range| {
        let mut m = Moments::default();
        let mut hist = vec![0u64; r + 1];
        for k in range {
            let (z, lists) = rounder.round_lists(&mut trial_rng(seed, k as u64));
            lists.iter().for_each(|l| hist[l.len()] += 1);
            let s = atomic.score_unchecked(&z);
            m.push(k, s, || z);
        }
        (m, hist)
    });
    let mut hist = vec![0u64; r + 1];
    let mut moments = Moments::default();
    for (m, h) in parts {
        hist.iter_mut().zip(h).for_each(|(a, b)| *a += b);
        moments = moments.merge(m);
    }
    let (mean, sigma) = moments.mean_sigma();
    let (max, _, z) = moments.best.expect("at least one trial");
    Ok((z, RoundingStats { trials, mean, sigma, max, histogram: hist }))
}

/// Independent per-variable draw with `Pr[Z_i = a]` proportional to
/// `|x_{i,a}|`; uniform when every norm of the variable is below
/// [`EPS_ZERO`].
pub fn naive_round(sol: &VectorSolution, rng: &mut impl Rng) -> Assignment {
    let r = sol.domain();
    let mut norms = vec![0.0; r];
    Assignment::from_options(
        (0..sol.n())
            .map(|i| {
                (0..r).for_each(|a| norms[a] = sol.norm(i, a));
                let total: f64 = norms.iter().sum();
                if total < EPS_ZERO {
                    return Some(rng.random_range(0..r));
                }
                let mut u = rng.random::<f64>() * total;
                for (a, &w) in norms.iter().enumerate() {
                    if u < w {
                        return Some(a);
                    }
                    u -= w;
                }
                norms.iter().rposition(|&w| w > 0.0)
            })
            .collect(),
    )
}

/// Mean score of [`naive_round`] over `trials` draws, with its standard error.
pub fn naive_stats(sol: &VectorSolution, atomic: &AtomicInstance, trials: usize, seed: u64) -> Result<RoundingStats> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let parts = chunked(trials, |range| {
        let mut m = Moments::default();
        for k in range {
            let z = naive_round(sol, &mut trial_rng(seed, k as u64));
            m.push(k, atomic.score_unchecked(&z), || z.clone());
        }
        m
    });
    let moments = parts.into_iter().fold(Moments::default(), Moments::merge);
    let (mean, sigma) = moments.mean_sigma();
    Ok(RoundingStats { trials, mean, sigma, max: moments.best.map_or(0.0, |b| b.0), histogram: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::tail;
    use crate::instances::{example_instance, Atom};
    use crate::sdp::embed;

    fn three_sigma(freq: f64, p: f64, n: usize) -> bool {
        (freq - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt()
    }

    #[test]
    fn target_prob_values() {
        let mut sol = VectorSolution::zeros(1, 4, 2);
        sol.vector_mut(0, 1)[0] = 1.0;
        let p = target_probs(&sol);
        assert_eq!(p[0], 1.0 / 8.0);
        assert_eq!(p[1], 3.0 / 8.0);
    }

    #[test]
    fn threshold_inverse() {
        assert_eq!(thresholds(&[0.5]).unwrap()[0].abs(), 0.0);
        let p = [0.3, 0.01, 1.0 / 32.0];
        for (t, p) in thresholds(&p).unwrap().iter().zip(p) {
            assert!((tail(*t) - p).abs() < 1e-9);
        }
        assert!(thresholds(&[0.0]).is_err());
    }

    #[test]
    fn aligned_gaussian_shortlists() {
        let mut sol = VectorSolution::zeros(1, 4, 3);
        sol.vector_mut(0, 0).copy_from_slice(&[0.6, 0.0, 0.0]);
        sol.vector_mut(0, 1).copy_from_slice(&[0.0, 0.8, 0.0]);
        let p = target_probs(&sol);
        let t = thresholds(&p).unwrap();
        assert!(t[1] > 0.0);
        let mut aux = ChaCha8Rng::seed_from_u64(0);
        let l = shortlists(&sol, &p, &t, &[1e6, 0.0, 0.0], &mut aux).unwrap();
        assert!(l[0].contains(&0) && !l[0].contains(&1));
        assert!(shortlists(&sol, &p, &t, &[1.0], &mut aux).is_err());
    }

    #[test]
    fn select_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = select(&[vec![2], vec![], vec![]], 3, Fallback::None, &mut rng);
        assert_eq!(z.values(), &[Some(2), None, None]);
        let z = select(&[vec![], vec![1]], 3, Fallback::Uniform, &mut rng);
        assert!(z.is_complete());
        let n = 20_000;
        let hits = (0..n).filter(|_| select(&[vec![0, 2]], 3, Fallback::None, &mut rng).get(0) == Some(0)).count();
        assert!(three_sigma(hits as f64 / n as f64, 0.5, n));
    }

    #[test]
    fn naive_on_embedding_is_exact() {
        let atomic = example_instance().normalize();
        let z = Assignment::full([1, 0, 0]);
        let sol = embed(&z, &atomic).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            assert_eq!(naive_round(&sol, &mut rng), z);
        }
    }

    #[test]
    fn naive_frequencies_follow_norms() {
        let mut sol = VectorSolution::zeros(1, 3, 3);
        sol.vector_mut(0, 0)[0] = 0.6;
        sol.vector_mut(0, 2)[1] = 0.8;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 50_000;
        let hits = (0..n).filter(|_| naive_round(&sol, &mut rng).get(0) == Some(0)).count();
        assert!(three_sigma(hits as f64 / n as f64, 0.6 / 1.4, n));
        let zero = VectorSolution::zeros(2, 3, 1);
        assert!(naive_round(&zero, &mut rng).is_complete());
    }

    #[test]
    fn dim_one_rounding_matches_direct_rule() {
        let atomic = example_instance().normalize();
        let z = Assignment::full([1, 0, 0]);
        let sol = embed(&z, &atomic).unwrap();
        let rounder = Rounder::new(&sol, Fallback::Uniform).unwrap();
        let pz = rounder.probs()[1];
        let n = 20_000;
        let mut exact = 0;
        for k in 0..n {
            let mut rng = trial_rng(9, k);
            let (out, state) = rounder.round(&mut rng);
            // replay the dimension-one rule on the same g
            let passes = state.g[0] >= rounder.thresholds()[1];
            for i in 0..3 {
                assert_eq!(state.shortlists[i].contains(&z.get(i).unwrap()), passes);
            }
            exact += usize::from(out == z);
        }
        assert!(exact as f64 / n as f64 >= pz.powi(3) - 3.0 * (pz.powi(3) / n as f64).sqrt());
    }

    #[test]
    fn best_of_single_trial_equals_round_once() {
        let atomic = AtomicInstance::from_atoms(3, 3, [Atom { i: 0, a: 1, j: 2, b: 0, weight: 1.0 }]).unwrap();
        let sol = crate::sdp::solve(&atomic, &Default::default()).unwrap().solution;
        let (z1, _) = best_of(&sol, &atomic, 1, 4, Fallback::Uniform).unwrap();
        let (z2, _) = round_once(&sol, Fallback::Uniform, &mut trial_rng(4, 0)).unwrap();
        assert_eq!(z1, z2);
        let (_, stats) = best_of(&sol, &atomic, 500, 4, Fallback::Uniform).unwrap();
        assert!(stats.max >= stats.mean);
        assert_eq!(stats.histogram.iter().sum::<u64>(), 1500);
        assert!(best_of(&sol, &atomic, 0, 4, Fallback::Uniform).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let atomic = example_instance().normalize();
        let sol = crate::sdp::solve(&atomic, &Default::default()).unwrap().solution;
        let a = best_of(&sol, &atomic, 3000, 8, Fallback::Uniform).unwrap();
        let b = best_of(&sol, &atomic, 3000, 8, Fallback::Uniform).unwrap();
        assert_eq!(a, b);
        let (_, s1) = round_once(&sol, Fallback::None, &mut trial_rng(1, 1)).unwrap();
        let (_, s2) = round_once(&sol, Fallback::None, &mut trial_rng(1, 1)).unwrap();
        assert_eq!(s1.dump(), s2.dump());
        assert!(s1.dump().starts_with("ROUND 1 3 3 "));
    }

    #[test]
    fn shortlist_mean_beats_one_over_r() {
        let atomic = example_instance().normalize();
        let sol = crate::sdp::solve(&atomic, &Default::default()).unwrap().solution;
        let obj = crate::sdp::objective(&sol, &atomic).unwrap();
        let (_, stats) = best_of(&sol, &atomic, 20_000, 3, Fallback::Uniform).unwrap();
        assert!(stats.mean >= obj / 3.0 - 3.0 * stats.sigma, "{} vs {}", stats.mean, obj / 3.0);
        let naive = naive_stats(&sol, &atomic, 20_000, 3).unwrap();
        assert!(naive.mean >= obj / 3.0 - 3.0 * naive.sigma);
    }
}
