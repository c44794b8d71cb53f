//! Experiment pipeline: generate, solve, round, compare, write CSV.

mod config;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;

pub use config::{ExperimentConfig, Generator, InstanceSpec};

use crate::error::{Error, Result};
use crate::exact::brute_force;
use crate::instances::{
    example_instance, gen_2lin, gen_random_2csp, gen_unique_game, unique_game_planted, Assignment, AtomicInstance,
    Instance,
};
use crate::rounding::{best_of, naive_stats, trial_rng};
use crate::sdp::{solve_with_hints, Solved};

/// Child seed `k` of `seed`.
pub fn derive_seed(seed: u64, k: u64) -> u64 {
    trial_rng(seed, k).next_u64()
}

/// One generated member of a suite.
#[derive(Clone, Debug)]
pub struct SuiteInstance {
    pub id: usize,
    pub seed: u64,
    pub generator: Generator,
    pub instance: Instance,
    /// Known good assignment handed to the solver (planted games).
    pub hint: Option<Assignment>,
}

/// Expand the instance specs in order; instance `k` gets seed
/// `derive_seed(cfg.seed, k)`.
pub fn build_instances(cfg: &ExperimentConfig) -> Result<Vec<SuiteInstance>> {
    let mut out = Vec::new();
    for spec in &cfg.instances {
        for _ in 0..spec.count {
            let id = out.len();
            let seed = derive_seed(cfg.seed, id as u64);
            let (n, r, m) = (spec.n, spec.r, spec.m);
            let (instance, hint) = match spec.generator {
                Generator::Lin => (gen_2lin(n, r, m, seed)?, None),
                Generator::UniqueGame { planted } => {
                    (gen_unique_game(n, r, m, seed, planted)?, planted.then(|| unique_game_planted(n, r, seed)))
                }
                Generator::Random { density } => (gen_random_2csp(n, r, m, density, seed)?, None),
                Generator::Example => (example_instance(), None),
            };
            out.push(SuiteInstance { id, seed, generator: spec.generator, instance, hint });
        }
    }
    Ok(out)
}

/// Normalize and solve with the suite's solver settings, seeded per instance.
pub fn solve_instance(inst: &SuiteInstance, cfg: &ExperimentConfig) -> Result<(AtomicInstance, Solved)> {
    let atomic = inst.instance.normalize();
    let solver = crate::sdp::SolverConfig { seed: derive_seed(inst.seed, 0), ..cfg.solver.clone() };
    let hints: Vec<Assignment> = inst.hint.iter().cloned().collect();
    let solved = solve_with_hints(&atomic, &solver, &hints)?;
    Ok((atomic, solved))
}

/// One CSV row. Field order is the column order.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub suite: String,
    pub instance_id: usize,
    pub seed: u64,
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub atom_count: usize,
    pub opt_exact: Option<f64>,
    pub sdp_value: f64,
    pub sdp_converged: bool,
    pub naive_mean: f64,
    pub shortlist_mean: f64,
    pub shortlist_best: f64,
    pub ratio_naive: Option<f64>,
    pub ratio_shortlist: Option<f64>,
    pub measured_kappa: Option<f64>,
    pub mean_shortlist_size: f64,
    pub empty_shortlist_rate: f64,
    pub wall_ms: Option<u128>,
}

pub const CSV_HEADER: [&str; 19] = [
    "suite",
    "instance_id",
    "seed",
    "n",
    "R",
    "m",
    "atom_count",
    "opt_exact",
    "sdp_value",
    "sdp_converged",
    "naive_mean",
    "shortlist_mean",
    "shortlist_best",
    "ratio_naive",
    "ratio_shortlist",
    "measured_kappa",
    "mean_shortlist_size",
    "empty_shortlist_rate",
    "wall_ms",
];

impl ExperimentRecord {
    fn fields(&self) -> [String; 19] {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        [
            self.suite.clone(),
            self.instance_id.to_string(),
            self.seed.to_string(),
            self.n.to_string(),
            self.r.to_string(),
            self.m.to_string(),
            self.atom_count.to_string(),
            opt(self.opt_exact),
            self.sdp_value.to_string(),
            self.sdp_converged.to_string(),
            self.naive_mean.to_string(),
            self.shortlist_mean.to_string(),
            self.shortlist_best.to_string(),
            opt(self.ratio_naive),
            opt(self.ratio_shortlist),
            opt(self.measured_kappa),
            self.mean_shortlist_size.to_string(),
            self.empty_shortlist_rate.to_string(),
            self.wall_ms.map_or_else(String::new, |x| x.to_string()),
        ]
    }
}

/// Solve, round both ways and compare for a single suite member.
pub fn run_instance(inst: &SuiteInstance, cfg: &ExperimentConfig, timing: bool) -> Result<ExperimentRecord> {
    let start = Instant::now();
    let opt_exact = match brute_force(&inst.instance, cfg.budget) {
        Ok(res) => Some(res.value),
        Err(Error::BudgetExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    let (atomic, solved) = solve_instance(inst, cfg)?;
    let sdp_value = solved.report.objective;
    let naive = naive_stats(&solved.solution, &atomic, cfg.trials, derive_seed(inst.seed, 1))?;
    let (_, short) = best_of(&solved.solution, &atomic, cfg.trials, derive_seed(inst.seed, 2), cfg.fallback)?;
    let ratio = |x: f64| (sdp_value > 0.0).then(|| x / sdp_value);
    let r = inst.instance.domain();
    let ratio_shortlist = ratio(short.mean);
    Ok(ExperimentRecord {
        suite: cfg.suite.clone(),
        instance_id: inst.id,
        seed: inst.seed,
        n: inst.instance.n(),
        r,
        m: inst.instance.constraints().len(),
        atom_count: atomic.atoms().len(),
        opt_exact,
        sdp_value,
        sdp_converged: solved.converged,
        naive_mean: naive.mean,
        shortlist_mean: short.mean,
        shortlist_best: short.max,
        ratio_naive: ratio(naive.mean),
        ratio_shortlist,
        measured_kappa: ratio_shortlist.map(|q| q * r as f64 / (r as f64).ln()),
        mean_shortlist_size: short.mean_shortlist_size(),
        empty_shortlist_rate: short.empty_rate(),
        wall_ms: timing.then(|| start.elapsed().as_millis()),
    })
}

/// Every record of the suite in instance order. With `timing` off the
/// `wall_ms` column stays blank so reruns are byte-identical.
pub fn run_experiment(cfg: &ExperimentConfig, timing: bool) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let instances = build_instances(cfg)?;
    let run = || instances.par_iter().map(|inst| run_instance(inst, cfg, timing)).collect::<Result<Vec<_>>>();
    if cfg.threads == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(run)
    }
}

pub fn write_records(out: impl Write, records: &[ExperimentRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for rec in records {
        w.write_record(rec.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_csv_atomic(path: &Path, records: &[ExperimentRecord]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    write_records(&mut tmp, records)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
