//! Standard normal tail numerics and numerical checks of the Gaussian
//! inequalities the rounding analysis relies on.
//!
//! `tail(t) = Pr[N > t]` is evaluated through `erfc`, and `inv_tail` starts
//! from Acklam's rational approximation and polishes with Halley steps on
//! `tail` itself, so the pair is consistent to roughly machine precision.

mod claims;
mod verify;

use rand::Rng;
use rand_distr::StandardNormal;

pub use claims::{
    check_shrink_ratio, check_ln_p_bound, check_lower_change, check_projection_tail, check_subspace_variance,
    check_threshold_advantage, check_upper_power, check_wedge_bounds, sample_threshold_profile, ChangeBoundProbe,
    MonteCarloCheck, ThresholdProfile, WedgeReport,
};
pub use verify::{verify_all, ClaimReport, VerifyConfig};

use crate::error::{Error, Result};

/// Smallest threshold at which the change-of-probability bounds are checked.
/// Every grid point from here up to 8 passes; see the `verify` tests.
pub const T0: f64 = 2.0;

/// Explicit constant standing in for the `O(.)` of the multiple-threshold
/// advantage bound. `examples/calibrate_advantage.rs` finds a worst ratio
/// of about 1.006 with the constant at 1 (R from 4 to 128, l from 0.02 to
/// 0.9); 2 leaves room for unseen profiles.
pub const C_ADV: f64 = 2.0;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn density(t: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * t * t).exp()
}

/// Upper-tail probability `Pr[N > t]` of a standard normal.
#[inline]
pub fn tail(t: f64) -> f64 {
    0.5 * libm::erfc(t * std::f64::consts::FRAC_1_SQRT_2)
}

/// Acklam's approximation of the lower-tail quantile, relative error ~1e-9.
fn acklam_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00, 3.754408661907416e+00];
    const P_LOW: f64 = 0.02425;

    let tail_branch = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail_branch((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail_branch((-2.0 * (1.0 - p).ln()).sqrt())
    }
}

/// The threshold `t` with `tail(t) = p`.
pub fn inv_tail(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("inv_tail needs p in (0, 1), got {p}")));
    }
    let mut t = -acklam_quantile(p);
    for _ in 0..4 {
        let u = (tail(t) - p) / density(t);
        if !u.is_finite() {
            break;
        }
        let step = u / (1.0 - 0.5 * t * u);
        t += step;
        if step.abs() <= 1e-16 * t.abs().max(1.0) {
            break;
        }
    }
    Ok(t)
}

/// The closed-form sandwich around `tail(t)` for `t > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailBounds {
    pub lower: f64,
    pub upper: f64,
}

pub fn tail_bounds(t: f64) -> Result<TailBounds> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("tail_bounds needs t > 0, got {t}")));
    }
    let e = density(t);
    Ok(TailBounds { lower: t / (t * t + 1.0) * e, upper: e / t })
}

/// `dim` independent standard normal draws.
pub fn sample_gaussian_vector(dim: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::Domain("Gaussian vector dimension must be positive".into()));
    }
    Ok((0..dim).map(|_| rng.sample(StandardNormal)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tail_at_zero_is_half() {
        assert_eq!(tail(0.0), 0.5);
        assert_eq!(inv_tail(0.5).unwrap(), 0.0);
    }

    #[test]
    fn tail_inside_bounds_at_two() {
        let b = tail_bounds(2.0).unwrap();
        let p = tail(2.0);
        assert!(b.lower <= p && p <= b.upper);
        assert!(tail_bounds(1.0).unwrap().lower > 0.0);
    }

    #[test]
    fn bound_ratio_tightens() {
        let b = tail_bounds(8.0).unwrap();
        assert!(b.upper / b.lower <= 1.1);
        assert!(b.upper / b.lower > 1.0);
    }

    #[test]
    fn tail_bounds_rejects_nonpositive() {
        assert!(tail_bounds(0.0).is_err());
        assert!(tail_bounds(-1.0).is_err());
        assert!(tail_bounds(f64::NAN).is_err());
    }

    #[test]
    fn inverse_identity() {
        assert!((inv_tail(tail(2.3)).unwrap() - 2.3).abs() < 1e-9);
        for &p in &[1e-12, 1e-8, 1e-3, 0.01, 0.1, 0.3, 0.5, 0.7, 0.99, 1.0 - 1e-12] {
            let t = inv_tail(p).unwrap();
            assert!((tail(t) - p).abs() <= 1e-12 * p, "p = {p}: tail = {}", tail(t));
        }
    }

    #[test]
    fn inv_tail_domain() {
        for p in [0.0, 1.0, -0.1, 1.1, f64::NAN] {
            assert!(inv_tail(p).is_err());
        }
    }

    #[test]
    fn sample_vector_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_gaussian_vector(7, &mut rng).unwrap().len(), 7);
        assert!(sample_gaussian_vector(0, &mut rng).is_err());
        let a = sample_gaussian_vector(5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_gaussian_vector(5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }
}
