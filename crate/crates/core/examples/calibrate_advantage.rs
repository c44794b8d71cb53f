//! Worst observed `lhs / rhs` of the multiple-threshold advantage bound with
//! the constant set to 1, over many sampled profiles.
//!
//! Seeds here are disjoint from the ones `verify-gaussian` uses, so the
//! frozen constant is checked on fresh profiles.
//!
//! cargo run --release --example calibrate_advantage -- [profiles] [ell]

use max2csp::gaussian::{check_threshold_advantage, sample_threshold_profile, C_ADV};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut args = std::env::args().skip(1);
    let profiles: u64 = args.next().map_or(20_000, |s| s.parse().expect("profiles"));
    let ell: f64 = args.next().map_or(0.1, |s| s.parse().expect("ell"));
    let mut worst = 0.0f64;
    for r in [4usize, 8, 16, 32, 64, 128] {
        let mut rng = ChaCha8Rng::seed_from_u64(0xca1b_0000 + r as u64);
        let mut local = 0.0f64;
        for _ in 0..profiles {
            let prof = sample_threshold_profile(r, &mut rng);
            let (lhs, rhs) = check_threshold_advantage(&prof, ell).unwrap();
            local = local.max(lhs / (rhs / C_ADV));
        }
        println!("R={r:<4} max lhs/rhs = {local:.6}");
        worst = worst.max(local);
    }
    println!("worst = {worst:.6}, current C_ADV = {C_ADV}");
}
