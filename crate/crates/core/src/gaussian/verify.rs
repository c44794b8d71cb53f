//! Grid and Monte-Carlo sweeps over all the Gaussian inequalities.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::claims::{self, dot, normalize};
use super::{tail, tail_bounds, ChangeBoundProbe, T0};

/// Grid margins may dip this far below zero from rounding alone.
pub const MARGIN_SLACK: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Monte-Carlo samples per wedge pair and per projection check.
    pub samples: usize,
    pub wedge_pairs: usize,
    /// Profiles per domain size for the multiple-threshold bound.
    pub profiles: usize,
    pub profile_domains: Vec<usize>,
    pub ell: f64,
    pub t_step: f64,
    pub alpha_step: f64,
    pub t_hi: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 200_000,
            wedge_pairs: 50,
            profiles: 1000,
            profile_domains: vec![8, 16, 64],
            ell: 0.1,
            t_step: 0.01,
            alpha_step: 0.02,
            t_hi: 8.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClaimReport {
    pub id: String,
    pub grid: usize,
    pub min_margin: f64,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for ClaimReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<16} grid={:<7} min_margin={:+.6e} {}",
            self.id,
            self.grid,
            self.min_margin,
            if self.pass { "PASS" } else { "FAIL" }
        )?;
        if !self.detail.is_empty() {
            write!(f, "  {}", self.detail)?;
        }
        Ok(())
    }
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

fn grid_report(id: &str, margins: impl Iterator<Item = f64>, detail: String) -> ClaimReport {
    let (count, min) = margins.fold((0usize, f64::INFINITY), |(c, m), x| (c + 1, m.min(x)));
    ClaimReport { id: id.into(), grid: count, min_margin: min, pass: min >= -MARGIN_SLACK, detail }
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Run every check. Grid margins for the tail sandwich and the change
/// bounds are relative to the probability involved, so far-tail failures
/// are not hidden by tiny absolute values.
pub fn verify_all(cfg: &VerifyConfig) -> Vec<ClaimReport> {
    let ts = grid(T0, cfg.t_hi, cfg.t_step);
    let alphas = grid(0.0, 1.0, cfg.alpha_step);
    let mut out = Vec::new();

    let sandwich = grid(0.5, cfg.t_hi, cfg.t_step);
    out.push(grid_report(
        "tail-sandwich",
        sandwich.iter().map(|&t| {
            let b = tail_bounds(t).expect("t > 0");
            let p = tail(t);
            ((p - b.lower) / p).min((b.upper - p) / p)
        }),
        format!("t in [0.5, {}]", cfg.t_hi),
    ));

    out.push(grid_report(
        "ln-tail",
        ts.iter().map(|&t| {
            let (a, b) = claims::check_ln_p_bound(t);
            a.min(b)
        }),
        format!("t in [{T0}, {}]", cfg.t_hi),
    ));

    let probes: Vec<ChangeBoundProbe> = ts
        .iter()
        .flat_map(|&t| alphas.iter().map(move |&a| ChangeBoundProbe::new(t, a).expect("valid probe")))
        .collect();
    out.push(grid_report(
        "lower-change",
        probes.iter().map(|&pr| claims::check_lower_change(pr) / tail((1.0 - pr.alpha()) * pr.t())),
        format!("t in [{T0}, {}], alpha step {}", cfg.t_hi, cfg.alpha_step),
    ));
    out.push(grid_report(
        "upper-power",
        probes.iter().map(|&pr| claims::check_upper_power(pr) / tail(pr.t()).powf(1.0 - 3.0 * pr.alpha())),
        format!("t in [{T0}, {}], alpha step {}", cfg.t_hi, cfg.alpha_step),
    ));

    let cap = 3f64.exp();
    let sup = ts.iter().map(|&t| claims::check_shrink_ratio(t)).fold(0.0, f64::max);
    out.push(grid_report(
        "shrink-ratio",
        ts.iter().map(|&t| (cap - claims::check_shrink_ratio(t)) / cap),
        format!("alpha = 1/t^2, sup p((1-alpha)t)/p(t) = {sup:.4} (cap e^3)"),
    ));

    out.extend(wedge_reports(cfg));
    out.push(projection_report(cfg));
    out.push(subspace_report(cfg));
    out.extend(advantage_reports(cfg));
    out
}

struct WedgeCase {
    u: Vec<f64>,
    v: Vec<f64>,
    t1: f64,
    t2: f64,
}

/// Random pair with nonnegative inner product and thresholds chosen so the
/// wedge is hit often enough for the conditional estimates to mean something.
fn random_wedge_case(rng: &mut impl Rng) -> WedgeCase {
    let dim = rng.random_range(2..=6);
    let mut u: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    normalize(&mut u);
    normalize(&mut v);
    if dot(&u, &v) < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let t1: f64 = rng.random_range(1.0..1.5);
    let t2 = rng.random_range(t1..(4.0 * t1).min(2.5));
    WedgeCase { u, v, t1, t2 }
}

fn wedge_reports(cfg: &VerifyConfig) -> Vec<ClaimReport> {
    let reports: Vec<claims::WedgeReport> = (0..cfg.wedge_pairs)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(cfg.seed ^ 0x11, k as u64);
            let case = random_wedge_case(&mut rng);
            claims::check_wedge_bounds(&case.u, &case.v, case.t1, case.t2, cfg.samples, &mut rng)
                .expect("generated wedge case is valid")
        })
        .collect();
    let min_events = reports.iter().map(|r| r.joint_events).min().unwrap_or(0);
    let n = reports.len();
    let lower = reports.iter().map(|r| (r.joint_estimate - r.joint_lower_bound + 3.0 * r.joint_sigma) / r.joint_lower_bound);
    let norm = reports.iter().map(|r| 0.5 + 3.0 * r.conditional_sigma - r.norm_exceed);
    let coord = reports.iter().map(|r| 0.5 + 3.0 * r.conditional_sigma - r.max_coord_exceed);
    vec![
        grid_report("wedge-lower", lower, format!("{n} pairs x {} samples, 3-sigma", cfg.samples)),
        grid_report("wedge-coord", coord, format!("1 <= t1 <= t2 <= 4 t1, min wedge hits {min_events}")),
        grid_report("wedge-norm", norm, format!("tested on t2 <= 4 t1, min wedge hits {min_events}")),
    ]
}

fn projection_report(cfg: &VerifyConfig) -> ClaimReport {
    let checks: Vec<claims::MonteCarloCheck> = (0..10u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(cfg.seed ^ 0x22, k);
            let dim = rng.random_range(1..=8);
            let mut u: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            normalize(&mut u);
            claims::check_projection_tail(&u, 1.0, cfg.samples, &mut rng).expect("unit vector")
        })
        .collect();
    let min = checks.iter().map(|c| 3.0 * c.sigma - (c.estimate - c.bound).abs()).fold(f64::INFINITY, f64::min);
    ClaimReport {
        id: "projection-tail".into(),
        grid: checks.len(),
        min_margin: min,
        pass: checks.iter().all(|c| c.pass),
        detail: "Pr[<g,u> > 1] vs p(1), 3-sigma".into(),
    }
}

fn subspace_report(cfg: &VerifyConfig) -> ClaimReport {
    let checks: Vec<claims::MonteCarloCheck> = (0..10u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(cfg.seed ^ 0x33, k);
            let dim = rng.random_range(2..=10);
            let sub = rng.random_range(1..=dim);
            claims::check_subspace_variance(dim, sub, cfg.samples, &mut rng).expect("valid sizes")
        })
        .collect();
    let min = checks.iter().map(|c| 1.0 + 3.0 * c.sigma - c.estimate).fold(f64::INFINITY, f64::min);
    ClaimReport {
        id: "subspace-var".into(),
        grid: checks.len(),
        min_margin: min,
        pass: checks.iter().all(|c| c.pass),
        detail: "projected variance <= 1 + 3-sigma".into(),
    }
}

fn advantage_reports(cfg: &VerifyConfig) -> Vec<ClaimReport> {
    cfg.profile_domains
        .iter()
        .map(|&r| {
            let margins: Vec<f64> = (0..cfg.profiles)
                .into_par_iter()
                .map(|k| {
                    let mut rng = stream(cfg.seed ^ 0x44 ^ ((r as u64) << 32), k as u64);
                    let prof = claims::sample_threshold_profile(r, &mut rng);
                    let (lhs, rhs) = claims::check_threshold_advantage(&prof, cfg.ell).expect("ell in (0, 1)");
                    (rhs - lhs) / rhs
                })
                .collect();
            grid_report(
                &format!("advantage/R{r}"),
                margins.into_iter(),
                format!("ell = {}, C_ADV = {}", cfg.ell, super::C_ADV),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_endpoints() {
        let g = grid(2.0, 8.0, 0.01);
        assert_eq!(g.len(), 601);
        assert_eq!(g[0], 2.0);
        assert!((g[600] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_claims_pass_from_t0() {
        let cfg = VerifyConfig { wedge_pairs: 2, samples: 20_000, profiles: 20, ..Default::default() };
        let reports = verify_all(&cfg);
        for id in ["tail-sandwich", "ln-tail", "lower-change", "upper-power", "shrink-ratio"] {
            let r = reports.iter().find(|r| r.id == id).unwrap();
            assert!(r.pass, "{r}");
        }
    }

    #[test]
    fn report_line_format() {
        let r = ClaimReport { id: "ln-tail".into(), grid: 601, min_margin: 0.25, pass: true, detail: String::new() };
        assert_eq!(r.to_string(), "ln-tail          grid=601     min_margin=+2.500000e-1 PASS");
    }
}
