//! Monte-Carlo measurements of shortlist membership: marginals, pair
//! probabilities and the per-atom constants behind the rounding analysis.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use super::{chunked, target_probs, thresholds, trial_rng, Fallback, Rounder, EPS_ZERO};
use crate::error::{Error, Result};
use crate::instances::AtomicInstance;
use crate::sdp::{dot, VectorSolution};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairGeometry {
    pub inner: f64,
    pub norm_ia: f64,
    pub norm_jb: f64,
    /// `inner / (norm_ia * norm_jb)` clamped to `[0, 1]`; 0 when either
    /// norm is below [`EPS_ZERO`].
    pub cos_theta: f64,
}

pub fn pair_geometry(sol: &VectorSolution, i: usize, a: usize, j: usize, b: usize) -> PairGeometry {
    let (x, y) = (sol.vector(i, a), sol.vector(j, b));
    let (inner, norm_ia, norm_jb) = (dot(x, y), dot(x, x).sqrt(), dot(y, y).sqrt());
    let cos_theta =
        if norm_ia < EPS_ZERO || norm_jb < EPS_ZERO { 0.0 } else { (inner / (norm_ia * norm_jb)).clamp(0.0, 1.0) };
    PairGeometry { inner, norm_ia, norm_jb, cos_theta }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairEstimate {
    pub estimate: f64,
    /// Binomial standard error of `estimate`.
    pub sigma: f64,
    pub samples: usize,
    pub p_ia: f64,
    pub p_jb: f64,
}

/// Estimate `Pr[a in L_i and b in L_j]` over `samples` Gaussian draws.
pub fn pair_prob_estimate(
    sol: &VectorSolution,
    (i, a): (usize, usize),
    (j, b): (usize, usize),
    samples: usize,
    rng: &mut impl Rng,
) -> Result<PairEstimate> {
    if samples < 1000 {
        return Err(Error::Config(format!("need at least 1000 samples, got {samples}")));
    }
    if i == j {
        return Err(Error::Config("pair estimate needs two distinct variables".into()));
    }
    if i >= sol.n() || j >= sol.n() || a >= sol.domain() || b >= sol.domain() {
        return Err(Error::Shape(format!("label ({i},{a}) or ({j},{b}) out of range")));
    }
    let r = sol.domain();
    let p = target_probs(sol);
    let t = thresholds(&p)?;
    let (p_ia, p_jb) = (p[i * r + a], p[j * r + b]);
    let (x, y) = (sol.vector(i, a), sol.vector(j, b));
    let (nx, ny) = (dot(x, x).sqrt(), dot(y, y).sqrt());
    let mut aux = ChaCha8Rng::seed_from_u64(rng.random());
    let mut g = vec![0.0; sol.dim()];
    let mut hits = 0usize;
    for _ in 0..samples {
        g.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let mut member = |v: &[f64], norm: f64, p: f64, t: f64| {
            if norm < EPS_ZERO {
                aux.random_bool(p)
            } else {
                dot(v, &g) >= norm * t
            }
        };
        let in_i = member(x, nx, p_ia, t[i * r + a]);
        let in_j = member(y, ny, p_jb, t[j * r + b]);
        hits += usize::from(in_i && in_j);
    }
    let estimate = hits as f64 / samples as f64;
    Ok(PairEstimate { estimate, sigma: (estimate * (1.0 - estimate) / samples as f64).sqrt(), samples, p_ia, p_jb })
}

/// How many of `trials` shortlists contained each label, row-major `n x R`.
/// Trial `k` draws exactly as in [`super::best_of`].
pub fn marginal_counts(sol: &VectorSolution, trials: usize, seed: u64) -> Result<Vec<u64>> {
    let rounder = Rounder::new(sol, Fallback::Uniform)?;
    let (n, r) = (sol.n(), sol.domain());
    let parts = chunked(trials, |range| {
        let mut counts = vec![0u64; n * r];
        for k in range {
            let (_, lists, _) = rounder.draw(&mut trial_rng(seed, k as u64));
            for (i, l) in lists.iter().enumerate() {
                l.iter().for_each(|&a| counts[i * r + a] += 1);
            }
        }
        counts
    });
    let mut counts = vec![0u64; n * r];
    for part in parts {
        counts.iter_mut().zip(part).for_each(|(c, p)| *c += p);
    }
    Ok(counts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeReport {
    pub trials: usize,
    /// Shortlist size cap in the conditional estimate.
    pub u: usize,
    /// Atoms with `<x_{i,a}, x_{j,b}> >= min_inner`.
    pub atoms_probed: usize,
    /// Smallest `Pr[a in L_i and b in L_j] R / (ln R <x_{i,a}, x_{j,b}>)`.
    pub min_c: f64,
    /// Smallest `Pr[|L_i| <= U and |L_j| <= U | a in L_i and b in L_j]`
    /// over probed atoms that were jointly hit at least once.
    pub min_conditional: f64,
    /// Probed atoms never jointly hit; excluded from `min_conditional`.
    pub never_hit: usize,
}

/// One pass of `trials` shortlist draws, scored against every atom whose
/// vectors have inner product at least `min_inner`.
pub fn probe_atoms(
    sol: &VectorSolution,
    atomic: &AtomicInstance,
    trials: usize,
    seed: u64,
    u: usize,
    min_inner: f64,
) -> Result<ProbeReport> {
    let r = sol.domain();
    let probed: Vec<(usize, usize, usize, usize, f64)> = atomic
        .atoms()
        .iter()
        .map(|t| (t.i, t.a, t.j, t.b, sol.inner(t.i, t.a, t.j, t.b)))
        .filter(|&(.., ip)| ip >= min_inner)
        .collect();
    let rounder = Rounder::new(sol, Fallback::Uniform)?;
    let parts = chunked(trials, |range| {
        let mut joint = vec![0u64; probed.len()];
        let mut small = vec![0u64; probed.len()];
        let mut member = vec![false; sol.n() * r];
        for k in range {
            let (_, lists, _) = rounder.draw(&mut trial_rng(seed, k as u64));
            member.iter_mut().for_each(|m| *m = false);
            for (i, l) in lists.iter().enumerate() {
                l.iter().for_each(|&a| member[i * r + a] = true);
            }
            for (q, &(i, a, j, b, _)) in probed.iter().enumerate() {
                if member[i * r + a] && member[j * r + b] {
                    joint[q] += 1;
                    if lists[i].len() <= u && lists[j].len() <= u {
                        small[q] += 1;
                    }
                }
            }
        }
        (joint, small)
    });
    let mut joint = vec![0u64; probed.len()];
    let mut small = vec![0u64; probed.len()];
    for (j, s) in parts {
        joint.iter_mut().zip(j).for_each(|(x, y)| *x += y);
        small.iter_mut().zip(s).for_each(|(x, y)| *x += y);
    }
    let ln_r = (r as f64).ln();
    let mut min_c = f64::INFINITY;
    let mut min_conditional = f64::INFINITY;
    let mut never_hit = 0;
    for (q, &(.., ip)) in probed.iter().enumerate() {
        let freq = joint[q] as f64 / trials as f64;
        min_c = min_c.min(freq * r as f64 / (ln_r * ip));
        if joint[q] == 0 {
            never_hit += 1;
        } else {
            min_conditional = min_conditional.min(small[q] as f64 / joint[q] as f64);
        }
    }
    Ok(ProbeReport { trials, u, atoms_probed: probed.len(), min_c, min_conditional, never_hit })
}
