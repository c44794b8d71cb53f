//! Line-oriented experiment description.
//!
//! ```text
//! EXP 1
//! suite lin-small
//! seed 7
//! trials 10000
//! budget 100000000
//! solver max_outer 40
//! instance 2lin n 30 R 8 m 120 count 3
//! instance ug n 10 R 4 m 20 planted 1
//! instance random n 30 R 8 m 120 density 0.3
//! instance example
//! out results.csv
//! ```

use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exact::DEFAULT_BUDGET;
use crate::rounding::Fallback;
use crate::sdp::SolverConfig;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Generator {
    Lin,
    UniqueGame { planted: bool },
    Random { density: f64 },
    /// The fixed three-variable reference instance.
    Example,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceSpec {
    pub generator: Generator,
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub suite: String,
    pub seed: u64,
    /// Rounding trials per instance, for both roundings.
    pub trials: usize,
    /// Brute force is skipped when `R^n` exceeds this.
    pub budget: u64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub solver: SolverConfig,
    pub fallback: Fallback,
    pub instances: Vec<InstanceSpec>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            suite: "default".into(),
            seed: 0,
            trials: 10_000,
            budget: DEFAULT_BUDGET,
            threads: 0,
            solver: SolverConfig::default(),
            fallback: Fallback::Uniform,
            instances: Vec::new(),
            out: None,
        }
    }
}

fn value<T: FromStr>(line: usize, key: &str, raw: Option<&str>) -> Result<T> {
    let raw = raw.ok_or_else(|| Error::parse(line, format!("`{key}` needs a value")))?;
    raw.parse().map_err(|_| Error::parse(line, format!("bad value `{raw}` for `{key}`")))
}

fn set_solver(cfg: &mut SolverConfig, line: usize, key: &str, raw: Option<&str>) -> Result<()> {
    match key {
        "dim" => cfg.dim = Some(value(line, key, raw)?),
        "max_outer" => cfg.max_outer = value(line, key, raw)?,
        "max_inner" => cfg.max_inner = value(line, key, raw)?,
        "penalty_init" => cfg.penalty_init = value(line, key, raw)?,
        "penalty_growth" => cfg.penalty_growth = value(line, key, raw)?,
        "tol_feas" => cfg.tol_feas = value(line, key, raw)?,
        "tol_obj" => cfg.tol_obj = value(line, key, raw)?,
        "random_assignments" => cfg.random_assignments = value(line, key, raw)?,
        "nonneg" => cfg.nonneg = value(line, key, raw)?,
        _ => return Err(Error::parse(line, format!("unknown solver key `{key}`"))),
    }
    Ok(())
}

fn parse_instance(line: usize, toks: &[&str]) -> Result<InstanceSpec> {
    let gen = toks.first().ok_or_else(|| Error::parse(line, "`instance` needs a generator"))?;
    let (mut n, mut r, mut m, mut count) = (None, None, None, 1usize);
    let (mut density, mut planted) = (0.3, true);
    let mut rest = toks[1..].iter();
    while let Some(&key) = rest.next() {
        let raw = rest.next().copied();
        match key {
            "n" => n = Some(value(line, key, raw)?),
            "R" => r = Some(value(line, key, raw)?),
            "m" => m = Some(value(line, key, raw)?),
            "count" => count = value(line, key, raw)?,
            "density" => density = value(line, key, raw)?,
            "planted" => planted = value::<u8>(line, key, raw)? != 0,
            _ => return Err(Error::parse(line, format!("unknown instance key `{key}`"))),
        }
    }
    if count == 0 {
        return Err(Error::parse(line, "count must be positive"));
    }
    let generator = match *gen {
        "example" => return Ok(InstanceSpec { generator: Generator::Example, n: 3, r: 3, m: 5, count }),
        "2lin" => Generator::Lin,
        "ug" => Generator::UniqueGame { planted },
        "random" => Generator::Random { density },
        other => return Err(Error::parse(line, format!("unknown generator `{other}`"))),
    };
    let need = |v: Option<usize>, k: &str| v.ok_or_else(|| Error::parse(line, format!("`{gen}` needs `{k}`")));
    Ok(InstanceSpec { generator, n: need(n, "n")?, r: need(r, "R")?, m: need(m, "m")?, count })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, "EXP 1")) => {}
            Some((ln, other)) => return Err(Error::parse(ln, format!("expected `EXP 1`, found `{other}`"))),
            None => return Err(Error::parse(1, "empty experiment file")),
        }
        let mut cfg = Self::default();
        for (ln, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let arg = toks.get(1).copied();
            let single = |n: usize| {
                if toks.len() == n {
                    Ok(())
                } else {
                    Err(Error::parse(ln, format!("`{}` takes {} argument(s)", toks[0], n - 1)))
                }
            };
            match toks[0] {
                "suite" => {
                    single(2)?;
                    cfg.suite = toks[1].to_string();
                }
                "seed" => {
                    single(2)?;
                    cfg.seed = value(ln, "seed", arg)?;
                }
                "trials" => {
                    single(2)?;
                    cfg.trials = value(ln, "trials", arg)?;
                }
                "budget" => {
                    single(2)?;
                    cfg.budget = value(ln, "budget", arg)?;
                }
                "threads" => {
                    single(2)?;
                    cfg.threads = value(ln, "threads", arg)?;
                }
                "fallback" => {
                    single(2)?;
                    cfg.fallback = value(ln, "fallback", arg)?;
                }
                "out" => {
                    single(2)?;
                    cfg.out = Some(PathBuf::from(toks[1]));
                }
                "solver" => {
                    single(3)?;
                    set_solver(&mut cfg.solver, ln, toks[1], toks.get(2).copied())?;
                }
                "instance" => cfg.instances.push(parse_instance(ln, &toks[1..])?),
                other => return Err(Error::parse(ln, format!("unknown directive `{other}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if self.suite.contains(',') || self.suite.is_empty() {
            return Err(Error::Config("suite name must be non-empty without commas".into()));
        }
        self.solver.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_directives() {
        let text = "EXP 1\n# comment\nsuite s1\nseed 9\ntrials 50\nbudget 1000\nthreads 2\nfallback none\n\
                    solver max_outer 12\nsolver nonneg atoms\ninstance 2lin n 5 R 3 m 7 count 2\n\
                    instance ug n 4 R 2 m 3 planted 0\ninstance random n 4 R 3 m 5 density 0.5\n\
                    instance example\nout x.csv  # trailing\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.suite, "s1");
        assert_eq!((cfg.seed, cfg.trials, cfg.budget, cfg.threads), (9, 50, 1000, 2));
        assert_eq!(cfg.fallback, Fallback::None);
        assert_eq!(cfg.solver.max_outer, 12);
        assert_eq!(cfg.solver.nonneg, crate::sdp::NonnegScope::Atoms);
        assert_eq!(cfg.instances.len(), 4);
        assert_eq!(cfg.instances[0], InstanceSpec { generator: Generator::Lin, n: 5, r: 3, m: 7, count: 2 });
        assert_eq!(cfg.instances[1].generator, Generator::UniqueGame { planted: false });
        assert_eq!(cfg.instances[2].generator, Generator::Random { density: 0.5 });
        assert_eq!(cfg.instances[3].generator, Generator::Example);
        assert_eq!(cfg.out, Some(PathBuf::from("x.csv")));
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "",
            "EXP 2\n",
            "EXP 1\nbogus 1\n",
            "EXP 1\nseed x\n",
            "EXP 1\nseed 1 2\n",
            "EXP 1\ninstance 2lin n 3 R 2\n",
            "EXP 1\ninstance foo n 3 R 2 m 1\n",
            "EXP 1\ninstance 2lin n 3 R 2 m 1 count 0\n",
            "EXP 1\nsolver tol_feas 0\n",
            "EXP 1\nsolver nope 1\n",
            "EXP 1\ntrials 0\n",
        ] {
            assert!(ExperimentConfig::parse(text).is_err(), "{text:?}");
        }
    }
}
