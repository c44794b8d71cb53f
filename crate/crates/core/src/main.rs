use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use max2csp::exact::{brute_force, DEFAULT_BUDGET};
use max2csp::gaussian::{verify_all, VerifyConfig};
use max2csp::harness::{derive_seed, run_experiment, write_csv_atomic, write_records, ExperimentConfig};
use max2csp::instances::{self, Instance};
use max2csp::rounding::{best_of, naive_stats, probe_atoms, round_once, trial_rng, Fallback};
use max2csp::sdp::{self, NonnegScope, SolverConfig};
use max2csp::{Error, Result};

#[derive(Parser)]
#[command(name = "max2csp", version, about = "SDP rounding experiments for Max 2CSP-R")]
struct Cli {
    /// Worker threads (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    #[value(name = "2lin")]
    Lin,
    Ug,
    Random,
    Example,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a generated instance file.
    Gen {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long = "domain", short = 'R', default_value_t = 4)]
        r: usize,
        #[arg(long, default_value_t = 20)]
        m: usize,
        #[arg(long, default_value_t = 0.3)]
        density: f64,
        /// Plant a satisfying assignment (unique games only).
        #[arg(long)]
        planted: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the relaxation; prints the feasibility report and the solution.
    Solve {
        instance: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        max_outer: Option<usize>,
        #[arg(long, default_value = "edge-pairs")]
        nonneg: String,
        /// Solution file; the solution goes to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Round a solution file and score the result.
    Round {
        instance: PathBuf,
        solution: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "uniform")]
        fallback: String,
        /// Print the state of trial 0 in the `ROUND 1` format.
        #[arg(long)]
        dump_state: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Joint shortlist frequencies and small-shortlist rates on atoms.
    Probe {
        instance: PathBuf,
        solution: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Shortlist size cap.
        #[arg(long, default_value_t = 20)]
        u: usize,
        /// Skip atoms whose vectors have a smaller inner product.
        #[arg(long, default_value_t = 1e-3)]
        min_inner: f64,
    },
    /// Exact optimum by branch and bound.
    Exact {
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Run an experiment file and write its CSV.
    Experiment {
        config: PathBuf,
        /// CSV path, `-` for stdout; overrides the file's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        budget: Option<u64>,
        /// Fill the wall_ms column (output is then no longer reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Check the Gaussian tail inequalities; exits 2 if any fails.
    VerifyGaussian {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Monte-Carlo samples per check.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_instance(path: &Path) -> Result<Instance> {
    instances::parse(&fs::read_to_string(path)?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Exit status for a completed command: 0, or 2 when a check failed.
fn run(cli: Cli) -> Result<u8> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match cli.cmd {
        Cmd::Gen { family, n, r, m, density, planted, seed, out } => {
            let inst = match family {
                Family::Lin => instances::gen_2lin(n, r, m, seed)?,
                Family::Ug => instances::gen_unique_game(n, r, m, seed, planted)?,
                Family::Random => instances::gen_random_2csp(n, r, m, density, seed)?,
                Family::Example => instances::example_instance(),
            };
            emit(out.as_deref(), &instances::serialize(&inst))?;
        }
        Cmd::Solve { instance, seed, dim, max_outer, nonneg, out } => {
            let atomic = read_instance(&instance)?.normalize();
            let mut cfg = SolverConfig { seed, dim, nonneg: nonneg.parse::<NonnegScope>()?, ..Default::default() };
            if let Some(k) = max_outer {
                cfg.max_outer = k;
            }
            let solved = sdp::solve(&atomic, &cfg)?;
            let mut text = format!(
                "# {}\n# converged {} outer_rounds {} from_integral {} integral_objective {}\n",
                solved.report, solved.converged, solved.outer_rounds, solved.from_integral, solved.integral_objective
            );
            let body = sdp::write_solution(&solved.solution);
            match out {
                Some(p) => {
                    fs::write(p, body)?;
                    emit(None, &text)?;
                }
                None => {
                    text.push_str(&body);
                    emit(None, &text)?;
                }
            }
        }
        Cmd::Round { instance, solution, trials, seed, fallback, dump_state, out } => {
            let atomic = read_instance(&instance)?.normalize();
            let sol = sdp::parse_solution(&fs::read_to_string(solution)?)?;
            let fallback: Fallback = fallback.parse()?;
            let objective = sdp::objective(&sol, &atomic)?;
            let (z, stats) = best_of(&sol, &atomic, trials, seed, fallback)?;
            let naive = naive_stats(&sol, &atomic, trials, derive_seed(seed, 1))?;
            let mut text = format!(
                "SCORE {}\nASSIGNMENT {z}\nsdp_objective {objective}\nshortlist_mean {} sigma {} best {}\nnaive_mean {} sigma {}\nmean_shortlist_size {} empty_rate {}\n",
                atomic.score(&z)?,
                stats.mean,
                stats.sigma,
                stats.max,
                naive.mean,
                naive.sigma,
                stats.mean_shortlist_size(),
                stats.empty_rate()
            );
            if dump_state {
                let (_, state) = round_once(&sol, fallback, &mut trial_rng(seed, 0))?;
                text.push_str(&state.dump());
            }
            emit(out.as_deref(), &text)?;
        }
        Cmd::Probe { instance, solution, trials, seed, u, min_inner } => {
            let atomic = read_instance(&instance)?.normalize();
            let sol = sdp::parse_solution(&fs::read_to_string(solution)?)?;
            let rep = probe_atoms(&sol, &atomic, trials, seed, u, min_inner)?;
            emit(
                None,
                &format!(
                    "trials {}\nU {}\natoms_probed {}\nnever_hit {}\nmin_c {}\nmin_conditional {}\n",
                    rep.trials, rep.u, rep.atoms_probed, rep.never_hit, rep.min_c, rep.min_conditional
                ),
            )?;
        }
        Cmd::Exact { instance, budget } => {
            let res = brute_force(&read_instance(&instance)?, budget)?;
            emit(None, &format!("OPT {}\nWITNESS {}\n", res.value, res.witness))?;
        }
        Cmd::Experiment { config, out, seed, trials, budget, timing } => {
            let mut cfg = ExperimentConfig::parse(&fs::read_to_string(config)?)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(b) = budget {
                cfg.budget = b;
            }
            if cli.threads > 0 {
                cfg.threads = cli.threads;
            }
            let records = run_experiment(&cfg, timing)?;
            match out.or(cfg.out) {
                Some(p) if p.as_os_str() != "-" => write_csv_atomic(&p, &records)?,
                _ => write_records(io::stdout().lock(), &records)?,
            }
        }
        Cmd::VerifyGaussian { seed, samples, out } => {
            let mut cfg = VerifyConfig { seed, ..Default::default() };
            if let Some(s) = samples {
                cfg.samples = s;
            }
            let reports = verify_all(&cfg);
            let text: String = reports.iter().map(|r| format!("{r}\n")).collect();
            emit(out.as_deref(), &text)?;
            if reports.iter().any(|r| !r.pass) {
                return Ok(2);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
