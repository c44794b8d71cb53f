//! Margins and Monte-Carlo estimates for the Gaussian tail inequalities.
//!
//! Every deterministic check returns a margin that is nonnegative exactly
//! when the inequality holds at the probed point.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{inv_tail, tail, C_ADV};
use crate::error::{Error, Result};

/// A threshold `t` and a shrink factor `alpha`: the probe point is `(1 - alpha) t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChangeBoundProbe {
    t: f64,
    alpha: f64,
}

impl ChangeBoundProbe {
    pub fn new(t: f64, alpha: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("probe threshold must be positive, got {t}")));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        Ok(Self { t, alpha })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn shrunk_tail(&self) -> f64 {
        tail((1.0 - self.alpha) * self.t)
    }
}

/// `(ln(1/p(t)) - t^2/2, t^2 - ln(1/p(t)))`.
pub fn check_ln_p_bound(t: f64) -> (f64, f64) {
    let l = -tail(t).ln();
    (l - 0.5 * t * t, t * t - l)
}

/// `p((1-a)t) - a p(t) ln(1/p(t))`.
pub fn check_lower_change(probe: ChangeBoundProbe) -> f64 {
    let p = tail(probe.t);
    probe.shrunk_tail() - probe.alpha * p * (-p.ln())
}

/// `p(t)^(1-3a) - p((1-a)t)`.
pub fn check_upper_power(probe: ChangeBoundProbe) -> f64 {
    let p = tail(probe.t);
    p.powf(1.0 - 3.0 * probe.alpha) - probe.shrunk_tail()
}

/// `p((1 - 1/t^2) t) / p(t)`, the constant hidden in the small-shrink
/// corollary. Combining the power bound with `ln(1/p(t)) <= t^2` caps it at `e^3`.
pub fn check_shrink_ratio(t: f64) -> f64 {
    let alpha = 1.0 / (t * t);
    tail((1.0 - alpha) * t) / tail(t)
}

/// Thresholds `t_b` and nonnegative advantages `s_b` for the multiple-threshold bound.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdProfile {
    thresholds: Vec<f64>,
    advantages: Vec<f64>,
}

impl ThresholdProfile {
    pub fn new(thresholds: Vec<f64>, advantages: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() || thresholds.len() != advantages.len() {
            return Err(Error::Domain(format!(
                "profile needs matching nonempty lists, got {} thresholds and {} advantages",
                thresholds.len(),
                advantages.len()
            )));
        }
        if let Some(t) = thresholds.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::Domain(format!("thresholds must be positive, got {t}")));
        }
        if let Some(s) = advantages.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(Error::Domain(format!("advantages must be nonnegative, got {s}")));
        }
        let mass: f64 = thresholds.iter().map(|&t| tail(t)).sum();
        if mass > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("threshold tails sum to {mass} > 1")));
        }
        Ok(Self { thresholds, advantages })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn advantages(&self) -> &[f64] {
        &self.advantages
    }

    /// `s^2 = sum_b s_b^2`.
    pub fn s2(&self) -> f64 {
        self.advantages.iter().map(|s| s * s).sum()
    }

    pub fn t_min(&self) -> f64 {
        self.thresholds.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn t_max(&self) -> f64 {
        self.thresholds.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Returns `(lhs, rhs)` with `lhs = sum_b p(t_b - s_b)` and
///
/// ```text
/// rhs = C_ADV * ( sum_b p(t_b) + s^2 / t_min^2 * (1/l + p(t_min) t_max^4 / p(t_max)^(3l)) )
/// ```
///
/// The `sum_b p(t_b)` term covers advantages too small to move any
/// threshold; without it the bound fails as `s -> 0`.
pub fn check_threshold_advantage(profile: &ThresholdProfile, ell: f64) -> Result<(f64, f64)> {
    if !(ell > 0.0 && ell < 1.0) {
        return Err(Error::Domain(format!("ell must lie in (0, 1), got {ell}")));
    }
    let lhs: f64 = profile.thresholds.iter().zip(&profile.advantages).map(|(&t, &s)| tail(t - s)).sum();
    let base: f64 = profile.thresholds.iter().map(|&t| tail(t)).sum();
    let (t_min, t_max) = (profile.t_min(), profile.t_max());
    let inner = 1.0 / ell + tail(t_min) * t_max.powi(4) / tail(t_max).powf(3.0 * ell);
    let rhs = C_ADV * (base + profile.s2() / (t_min * t_min) * inner);
    Ok((lhs, rhs))
}

/// Draw a profile shaped like the rounding's: thresholds come from target
/// probabilities `(|x_b|/sqrt(R) + 1/R) / 2` for a random unit-mass norm
/// vector, advantages from projecting a vector of norm up to
/// `20 sqrt(ln R)` onto orthonormal directions.
pub fn sample_threshold_profile(r: usize, rng: &mut impl Rng) -> ThresholdProfile {
    let rf = r as f64;
    let sharpness = [1.0, 2.0, 4.0, 8.0][rng.random_range(0..4)];
    let mut w: Vec<f64> = (0..r).map(|_| rng.sample::<f64, _>(StandardNormal).abs().powf(sharpness)).collect();
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    w.iter_mut().for_each(|x| *x /= norm);
    let thresholds: Vec<f64> = w
        .iter()
        .map(|&x| inv_tail(0.5 * (x / rf.sqrt() + 1.0 / rf)).expect("target probability in (0, 1)"))
        .collect();

    let support = rng.random_range(1..=r);
    let mut dir = vec![0.0; r];
    for d in dir.iter_mut().take(support) {
        *d = rng.sample::<f64, _>(StandardNormal).abs();
    }
    // spread the support over random positions
    for k in (1..r).rev() {
        dir.swap(k, rng.random_range(0..=k));
    }
    let dn = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    let radius = 20.0 * rf.ln().sqrt() * rng.random::<f64>().powi(2);
    let advantages = dir.iter().map(|&d| radius * d / dn).collect();
    ThresholdProfile::new(thresholds, advantages).expect("sampled profile is valid")
}

/// A Monte-Carlo estimate compared against a bound with a three-sigma band.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarloCheck {
    pub estimate: f64,
    pub bound: f64,
    pub sigma: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Empirical `Pr[<g,u> > level]` against `tail(level)` for a Gaussian `g`
/// in the ambient space of the unit vector `u`.
pub fn check_projection_tail(u: &[f64], level: f64, samples: usize, rng: &mut impl Rng) -> Result<MonteCarloCheck> {
    check_unit(u)?;
    if samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let hits = (0..samples)
        .filter(|_| u.iter().map(|&c| c * rng.sample::<f64, _>(StandardNormal)).sum::<f64>() > level)
        .count();
    let estimate = hits as f64 / samples as f64;
    let bound = tail(level);
    let sigma = (bound * (1.0 - bound) / samples as f64).sqrt();
    Ok(MonteCarloCheck { estimate, bound, sigma, samples, pass: (estimate - bound).abs() <= 3.0 * sigma })
}

/// Sample variance of `<g,u>` for a Gaussian `g` in a random `sub_dim`
/// subspace of `R^dim` and a random unit `u`; passes when it is at most
/// `1 + 3 sigma`.
pub fn check_subspace_variance(dim: usize, sub_dim: usize, samples: usize, rng: &mut impl Rng) -> Result<MonteCarloCheck> {
    if sub_dim == 0 || sub_dim > dim || samples < 2 {
        return Err(Error::Domain(format!("bad subspace check sizes dim={dim} sub_dim={sub_dim} samples={samples}")));
    }
    let basis = random_orthonormal(dim, sub_dim, rng);
    let mut u: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    normalize(&mut u);
    let coeffs: Vec<f64> = basis.iter().map(|v| dot(v, &u)).collect();
    let (mut mean, mut m2) = (0.0, 0.0);
    for k in 0..samples {
        let x: f64 = coeffs.iter().map(|&c| c * rng.sample::<f64, _>(StandardNormal)).sum();
        let d = x - mean;
        mean += d / (k + 1) as f64;
        m2 += d * (x - mean);
    }
    let estimate = m2 / (samples - 1) as f64;
    let sigma = (2.0 / (samples - 1) as f64).sqrt();
    Ok(MonteCarloCheck { estimate, bound: 1.0, sigma, samples, pass: estimate <= 1.0 + 3.0 * sigma })
}

/// Monte-Carlo report on the two-vector wedge event `<g,u> > t1 and <g,v> > t2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WedgeReport {
    pub samples: usize,
    /// Number of draws in the wedge.
    pub joint_events: usize,
    pub joint_estimate: f64,
    /// `p(t1) p(t2)`.
    pub joint_lower_bound: f64,
    pub joint_sigma: f64,
    /// `Pr[ |g_par| > 10 t1 | wedge ]`, with `g_par` the projection onto span{u, v}.
    pub norm_exceed: f64,
    /// `Pr[ max coordinate of g_par > 5 t1 | wedge ]` in the basis (u, v - <u,v>u).
    pub max_coord_exceed: f64,
    pub conditional_sigma: f64,
    pub lower_bound_pass: bool,
    pub norm_pass: bool,
    pub max_coord_pass: bool,
}

pub fn check_wedge_bounds(
    u: &[f64],
    v: &[f64],
    t1: f64,
    t2: f64,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<WedgeReport> {
    if u.len() != v.len() {
        return Err(Error::Domain("wedge vectors differ in dimension".into()));
    }
    check_unit(u)?;
    check_unit(v)?;
    let cos = dot(u, v);
    if cos < 0.0 {
        return Err(Error::Domain(format!("wedge vectors need <u,v> >= 0, got {cos}")));
    }
    if !(t1 >= 1.0 && t1 <= t2 && t2 <= 4.0 * t1) {
        return Err(Error::Domain(format!("wedge thresholds need 1 <= t1 <= t2 <= 4 t1, got {t1}, {t2}")));
    }
    if samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    // Orthonormal basis (e1, e2) of span{u, v}; e2 is absent when v is parallel to u.
    let mut e2: Vec<f64> = v.iter().zip(u).map(|(&vi, &ui)| vi - cos * ui).collect();
    let e2_norm = dot(&e2, &e2).sqrt();
    let has_e2 = e2_norm > 1e-12;
    if has_e2 {
        e2.iter_mut().for_each(|x| *x /= e2_norm);
    }

    let mut g = vec![0.0; u.len()];
    let (mut joint, mut norm_hits, mut coord_hits) = (0usize, 0usize, 0usize);
    for _ in 0..samples {
        g.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
        if dot(&g, u) > t1 && dot(&g, v) > t2 {
            joint += 1;
            let c1 = dot(&g, u);
            let c2 = if has_e2 { dot(&g, &e2) } else { 0.0 };
            if (c1 * c1 + c2 * c2).sqrt() > 10.0 * t1 {
                norm_hits += 1;
            }
            if c1.max(c2) > 5.0 * t1 {
                coord_hits += 1;
            }
        }
    }
    let n = samples as f64;
    let joint_estimate = joint as f64 / n;
    let joint_lower_bound = tail(t1) * tail(t2);
    let joint_sigma = (joint_lower_bound * (1.0 - joint_lower_bound) / n).sqrt();
    let (norm_exceed, max_coord_exceed, conditional_sigma) = if joint == 0 {
        (0.0, 0.0, f64::INFINITY)
    } else {
        let j = joint as f64;
        (norm_hits as f64 / j, coord_hits as f64 / j, (0.25 / j).sqrt())
    };
    Ok(WedgeReport {
        samples,
        joint_events: joint,
        joint_estimate,
        joint_lower_bound,
        joint_sigma,
        norm_exceed,
        max_coord_exceed,
        conditional_sigma,
        lower_bound_pass: joint_estimate >= joint_lower_bound - 3.0 * joint_sigma,
        norm_pass: norm_exceed <= 0.5 + 3.0 * conditional_sigma,
        max_coord_pass: max_coord_exceed <= 0.5 + 3.0 * conditional_sigma,
    })
}

fn check_unit(u: &[f64]) -> Result<()> {
    let norm = dot(u, u).sqrt();
    if u.is_empty() || (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("expected a unit vector, norm is {norm}")));
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// `k` orthonormal vectors in `R^dim` by Gram-Schmidt on Gaussian draws.
pub(crate) fn random_orthonormal(dim: usize, k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        for b in &basis {
            let c = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let n = dot(&v, &v).sqrt();
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis
}
