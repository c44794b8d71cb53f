//! Low-rank factorized solver. Each variable block (its `R` vectors) is
//! kept orthogonal with unit total mass by a Gram-Schmidt retraction after
//! every step; nonnegativity across constrained pairs goes through an
//! augmented Lagrangian with a hinge penalty.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{dot, embed, feasibility, FeasibilityReport, VectorSolution};
use crate::error::{Error, Result};
use crate::instances::{Assignment, AtomicInstance};

/// Which cross-variable inner products are held nonnegative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NonnegScope {
    /// Only pairs that appear as atoms.
    Atoms,
    /// Every value pair of every constrained variable pair. This keeps each
    /// constraint's contribution at most its weight.
    EdgePairs,
}

impl std::str::FromStr for NonnegScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "atoms" => Ok(Self::Atoms),
            "edge-pairs" | "edges" => Ok(Self::EdgePairs),
            _ => Err(Error::Config(format!("unknown nonnegativity scope `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Factorization rank; `None` picks `min(nR, 50)`.
    pub dim: Option<usize>,
    pub max_outer: usize,
    pub max_inner: usize,
    pub penalty_init: f64,
    pub penalty_growth: f64,
    pub tol_feas: f64,
    pub tol_obj: f64,
    pub seed: u64,
    pub nonneg: NonnegScope,
    /// Random assignments (each polished by 1-opt) tried as integral
    /// lower bounds.
    pub random_assignments: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dim: None,
            max_outer: 40,
            max_inner: 300,
            penalty_init: 10.0,
            penalty_growth: 2.0,
            tol_feas: super::DEFAULT_TOL_FEAS,
            tol_obj: 1e-6,
            seed: 0,
            nonneg: NonnegScope::EdgePairs,
            random_assignments: 100,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if matches!(self.dim, Some(d) if d < 2) {
            return Err(Error::Config("dim must be at least 2".into()));
        }
        if !(self.tol_feas > 0.0 && self.tol_obj > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(self.penalty_init > 0.0 && self.penalty_init.is_finite()) {
            return Err(Error::Config("penalty_init must be positive".into()));
        }
        if !(self.penalty_growth > 1.0 && self.penalty_growth.is_finite()) {
            return Err(Error::Config("penalty_growth must exceed 1".into()));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::Config("max_outer and max_inner must be positive".into()));
        }
        Ok(())
    }

    /// The configured rank, or `min(nR, max(50, R))` by default. The
    /// factorization needs at least `R` dimensions.
    pub fn dim_for(&self, n: usize, r: usize) -> usize {
        self.dim.unwrap_or_else(|| (n * r).min(50.max(r)))
    }
}

#[derive(Clone, Debug)]
pub struct Solved {
    pub solution: VectorSolution,
    pub report: FeasibilityReport,
    /// The relaxation run met both tolerances within `max_outer` rounds:
    /// violations at most `tol_feas` and an objective that moved by at most
    /// `tol_obj` (relative, once above 1) over the last round.
    pub converged: bool,
    pub outer_rounds: usize,
    /// The returned point is an integral embedding that beat the relaxation.
    pub from_integral: bool,
    /// Objective of the best integral embedding found or supplied.
    pub integral_objective: f64,
}

pub fn solve(atomic: &AtomicInstance, cfg: &SolverConfig) -> Result<Solved> {
    solve_with_hints(atomic, cfg, &[])
}

/// As [`solve`], also treating each hint (e.g. a planted assignment) as an
/// integral lower bound and a warm start.
pub fn solve_with_hints(atomic: &AtomicInstance, cfg: &SolverConfig, hints: &[Assignment]) -> Result<Solved> {
    cfg.validate()?;
    if atomic.is_empty() {
        return Err(Error::InvalidInstance("no atoms to optimize".into()));
    }
    let (n, r) = (atomic.n(), atomic.domain());
    let dim = cfg.dim_for(n, r);
    if dim < r {
        return Err(Error::Config(format!("dim {dim} is below the domain size {r}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let search = LocalSearch::new(atomic);
    let mut best_z = None::<(Assignment, f64)>;
    let mut consider = |z: Assignment| {
        let s = atomic.score_unchecked(&z);
        if best_z.as_ref().is_none_or(|(_, b)| s > *b) {
            best_z = Some((z, s));
        }
    };
    for _ in 0..cfg.random_assignments {
        let mut z: Vec<usize> = (0..n).map(|_| rng.random_range(0..r)).collect();
        search.improve(&mut z);
        consider(Assignment::full(z));
    }
    for h in hints {
        h.check(n, r)?;
        let mut z: Vec<usize> = (0..n).map(|i| h.get(i).ok_or(Error::Unassigned(i))).collect::<Result<_>>()?;
        consider(Assignment::full(z.clone()));
        search.improve(&mut z);
        consider(Assignment::full(z));
    }
    let (int_z, int_obj) = best_z.unwrap_or_else(|| (Assignment::full(vec![0; n]), 0.0));

    let problem = Problem::new(atomic, dim, cfg.nonneg);

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cold = random_point(n, r, dim, &mut init_rng);
    init_rng.set_stream(2);
    let zs: Vec<usize> = int_z.values().iter().map(|v| v.expect("full assignment")).collect();
    let warm = integral_point(&zs, r, dim, &mut init_rng);

    let feasible = |o: &RunOutcome| o.max_violation <= cfg.tol_feas;
    let beats_integral = |o: &RunOutcome| feasible(o) && o.objective > int_obj + cfg.tol_obj;
    let mut pick = problem.run(cold, cfg);
    if !beats_integral(&pick) {
        let second = problem.run(warm, cfg);
        if (feasible(&second), second.objective) > (feasible(&pick), pick.objective) {
            pick = second;
        }
    }

    let use_relaxation = beats_integral(&pick);
    let solution = if use_relaxation { pick.solution } else { embed(&int_z, atomic)?.lifted(dim) };
    let report = feasibility(&solution, atomic)?;
    Ok(Solved {
        solution,
        report,
        converged: pick.converged,
        outer_rounds: pick.outer_rounds,
        from_integral: !use_relaxation,
        integral_objective: int_obj,
    })
}

/// Factored iterate: `x_{i,a} = s_{i,a} q_{i,a}`, the rows `q_{i,.}` of
/// each block orthonormal and each `s_{i,.}` a unit vector. Any such point
/// meets the per-variable constraints exactly.
#[derive(Clone, Debug)]
struct Point {
    q: Vec<f64>,
    s: Vec<f64>,
}

impl Point {
    fn to_solution(&self, n: usize, r: usize, dim: usize) -> VectorSolution {
        let mut x = VectorSolution::zeros(n, r, dim);
        self.write_vectors(&mut x.data, dim);
        x
    }

    fn write_vectors(&self, out: &mut [f64], dim: usize) {
        for ((dst, q), s) in out.chunks_mut(dim).zip(self.q.chunks(dim)).zip(&self.s) {
            dst.iter_mut().zip(q).for_each(|(d, q)| *d = s * q);
        }
    }
}

/// Gram-Schmidt over the rows of one `r x dim` block, visiting rows in
/// `order`; needs `r <= dim`. A row that collapses is replaced by the
/// coordinate direction with the largest residual.
pub(crate) fn orthonormalize_block(block: &mut [f64], r: usize, dim: usize, order: impl Iterator<Item = usize>) {
    debug_assert!(r <= dim);
    let mut done: Vec<usize> = Vec::with_capacity(r);
    let mut row = vec![0.0; dim];
    let residual = |row: &mut [f64], block: &[f64], done: &[usize]| {
        for _ in 0..2 {
            for &p in done {
                let prev = &block[p * dim..(p + 1) * dim];
                let c = dot(row, prev);
                row.iter_mut().zip(prev).for_each(|(x, y)| *x -= c * y);
            }
        }
        dot(row, row).sqrt()
    };
    for k in order {
        row.copy_from_slice(&block[k * dim..(k + 1) * dim]);
        let scale = dot(&row, &row).sqrt();
        let mut len = residual(&mut row, block, &done);
        if !(len > 1e-8 * scale.max(1e-300)) {
            let mut best = (0.0, vec![0.0; dim]);
            for e in 0..dim {
                let mut cand = vec![0.0; dim];
                cand[e] = 1.0;
                let l = residual(&mut cand, block, &done);
                if l > best.0 {
                    best = (l, cand);
                }
            }
            (len, row) = (best.0, best.1);
        }
        row.iter_mut().for_each(|x| *x /= len);
        block[k * dim..(k + 1) * dim].copy_from_slice(&row);
        done.push(k);
    }
}

fn random_point(n: usize, r: usize, dim: usize, rng: &mut impl Rng) -> Point {
    let mut q: Vec<f64> = (0..n * r * dim).map(|_| rng.sample(StandardNormal)).collect();
    let mut s: Vec<f64> = (0..n * r).map(|_| rng.sample(StandardNormal)).collect();
    q.chunks_mut(r * dim).for_each(|b| orthonormalize_block(b, r, dim, 0..r));
    s.chunks_mut(r).for_each(normalize_unit);
    Point { q, s }
}

/// Near the embedding of `z`: every `q_{i,z_i}` is the first coordinate
/// direction and `s_i` is the indicator of `z_i`, both lightly perturbed.
fn integral_point(z: &[usize], r: usize, dim: usize, rng: &mut impl Rng) -> Point {
    let n = z.len();
    let mut q: Vec<f64> = (0..n * r * dim).map(|_| rng.sample(StandardNormal)).collect();
    let mut s: Vec<f64> = (0..n * r).map(|_| 1e-2 * rng.sample::<f64, _>(StandardNormal)).collect();
    for (i, &zi) in z.iter().enumerate() {
        let block = &mut q[i * r * dim..(i + 1) * r * dim];
        let row = &mut block[zi * dim..(zi + 1) * dim];
        row.iter_mut().for_each(|x| *x *= 1e-2);
        row[0] = 1.0;
        orthonormalize_block(block, r, dim, std::iter::once(zi).chain((0..r).filter(|&a| a != zi)));
        s[i * r + zi] += 1.0;
        normalize_unit(&mut s[i * r..(i + 1) * r]);
    }
    Point { q, s }
}

fn normalize_unit(v: &mut [f64]) {
    let len = dot(v, v).sqrt();
    if len > 0.0 {
        v.iter_mut().for_each(|x| *x /= len);
    } else {
        v[0] = 1.0;
    }
}

/// Greedy single-variable moves until no move gains.
struct LocalSearch {
    r: usize,
    /// Per variable: (own value, other variable, other value, weight).
    incident: Vec<Vec<(usize, usize, usize, f64)>>,
}

impl LocalSearch {
    fn new(atomic: &AtomicInstance) -> Self {
        let mut incident = vec![Vec::new(); atomic.n()];
        for t in atomic.atoms() {
            incident[t.i].push((t.a, t.j, t.b, t.weight));
            incident[t.j].push((t.b, t.i, t.a, t.weight));
        }
        Self { r: atomic.domain(), incident }
    }

    fn improve(&self, z: &mut [usize]) {
        let mut gain = vec![0.0; self.r];
        for _ in 0..100 {
            let mut moved = false;
            for i in 0..z.len() {
                gain.iter_mut().for_each(|g| *g = 0.0);
                for &(mine, other, theirs, w) in &self.incident[i] {
                    if z[other] == theirs {
                        gain[mine] += w;
                    }
                }
                let best = (0..self.r).fold(z[i], |b, v| if gain[v] > gain[b] + 1e-12 { v } else { b });
                if best != z[i] {
                    z[i] = best;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
    }
}

/// Dense `R x R` data for one constrained variable pair.
struct EdgeBlock {
    i: usize,
    j: usize,
    weight: Vec<f64>,
    constrained: Vec<bool>,
}

struct Problem {
    n: usize,
    r: usize,
    dim: usize,
    edges: Vec<EdgeBlock>,
}

struct RunOutcome {
    solution: VectorSolution,
    objective: f64,
    max_violation: f64,
    converged: bool,
    outer_rounds: usize,
}

/// Values of the augmented Lagrangian pieces at one point.
#[derive(Clone, Copy)]
struct Eval {
    lagrangian: f64,
    objective: f64,
    max_violation: f64,
}

/// Scratch buffers for one run.
struct Work {
    x: Vec<f64>,
    c: Vec<f64>,
    lambda: Vec<f64>,
    gx: Vec<f64>,
    gq: Vec<f64>,
    gs: Vec<f64>,
}

impl Problem {
    fn new(atomic: &AtomicInstance, dim: usize, scope: NonnegScope) -> Self {
        let r = atomic.domain();
        let mut edges: Vec<EdgeBlock> = atomic
            .edges()
            .into_iter()
            .map(|(i, j)| EdgeBlock {
                i,
                j,
                weight: vec![0.0; r * r],
                constrained: vec![scope == NonnegScope::EdgePairs; r * r],
            })
            .collect();
        for t in atomic.atoms() {
            let k = edges.binary_search_by(|e| (e.i, e.j).cmp(&(t.i, t.j))).expect("atom edge listed");
            edges[k].weight[t.a * r + t.b] += t.weight;
            edges[k].constrained[t.a * r + t.b] = true;
        }
        Self { n: atomic.n(), r, dim, edges }
    }

    fn work(&self) -> Work {
        let cells = self.edges.len() * self.r * self.r;
        let vecs = self.n * self.r * self.dim;
        Work {
            x: vec![0.0; vecs],
            c: vec![0.0; cells],
            lambda: vec![0.0; cells],
            gx: vec![0.0; vecs],
            gq: vec![0.0; vecs],
            gs: vec![0.0; self.n * self.r],
        }
    }

    /// Fill `w.x` and the edge inner products `w.c` (`[edge][a * r + b]`)
    /// for `pt`, and evaluate.
    fn evaluate(&self, pt: &Point, w: &mut Work, rho: f64) -> Eval {
        let (r, dim, rr) = (self.r, self.dim, self.r * self.r);
        pt.write_vectors(&mut w.x, dim);
        let (mut objective, mut penalty, mut max_violation) = (0.0, 0.0, 0.0f64);
        for (k, e) in self.edges.iter().enumerate() {
            for a in 0..r {
                let xa = &w.x[(e.i * r + a) * dim..][..dim];
                for b in 0..r {
                    let p = a * r + b;
                    let c = dot(xa, &w.x[(e.j * r + b) * dim..][..dim]);
                    w.c[k * rr + p] = c;
                    objective += e.weight[p] * c;
                    if e.constrained[p] {
                        let l = w.lambda[k * rr + p];
                        let h = (l - rho * c).max(0.0);
                        penalty += (h * h - l * l) / (2.0 * rho);
                        max_violation = max_violation.max(-c);
                    }
                }
            }
        }
        Eval { lagrangian: objective - penalty, objective, max_violation }
    }

    /// Riemannian gradient of the Lagrangian at `pt` into `w.gq`, `w.gs`,
    /// using the inner products left in `w` by [`Self::evaluate`]. Returns
    /// its squared norm.
    fn gradient(&self, pt: &Point, w: &mut Work, rho: f64) -> f64 {
        let (r, dim, rr) = (self.r, self.dim, self.r * self.r);
        w.gx.iter_mut().for_each(|v| *v = 0.0);
        for (k, e) in self.edges.iter().enumerate() {
            for a in 0..r {
                for b in 0..r {
                    let p = a * r + b;
                    let mut coef = e.weight[p];
                    if e.constrained[p] {
                        coef += (w.lambda[k * rr + p] - rho * w.c[k * rr + p]).max(0.0);
                    }
                    if coef == 0.0 {
                        continue;
                    }
                    let (oi, oj) = ((e.i * r + a) * dim, (e.j * r + b) * dim);
                    for d in 0..dim {
                        w.gx[oi + d] += coef * w.x[oj + d];
                        w.gx[oj + d] += coef * w.x[oi + d];
                    }
                }
            }
        }

        let mut norm2 = 0.0;
        let mut m = vec![0.0; rr];
        for i in 0..self.n {
            let span = i * r * dim..(i + 1) * r * dim;
            let (q, gx) = (&pt.q[span.clone()], &w.gx[span.clone()]);
            let s = &pt.s[i * r..(i + 1) * r];
            let gs = &mut w.gs[i * r..(i + 1) * r];
            for a in 0..r {
                gs[a] = dot(&gx[a * dim..][..dim], &q[a * dim..][..dim]);
            }
            let radial = dot(gs, s);
            gs.iter_mut().zip(s).for_each(|(g, s)| *g -= radial * s);
            norm2 += dot(gs, gs);

            // Euclidean part s_a * gx_a, then remove sym(xi Q^T) Q
            let gq = &mut w.gq[span];
            for a in 0..r {
                for d in 0..dim {
                    gq[a * dim + d] = s[a] * gx[a * dim + d];
                }
            }
            for a in 0..r {
                for b in 0..r {
                    m[a * r + b] = dot(&gq[a * dim..][..dim], &q[b * dim..][..dim]);
                }
            }
            for a in 0..r {
                for b in 0..r {
                    let sym = 0.5 * (m[a * r + b] + m[b * r + a]);
                    if sym != 0.0 {
                        for d in 0..dim {
                            gq[a * dim + d] -= sym * q[b * dim + d];
                        }
                    }
                }
            }
            norm2 += dot(gq, gq);
        }
        norm2
    }

    fn step(&self, pt: &Point, w: &Work, eta: f64, out: &mut Point) {
        let (r, dim) = (self.r, self.dim);
        out.q.iter_mut().zip(&pt.q).zip(&w.gq).for_each(|((o, q), g)| *o = q + eta * g);
        out.s.iter_mut().zip(&pt.s).zip(&w.gs).for_each(|((o, s), g)| *o = s + eta * g);
        for block in out.q.chunks_mut(r * dim) {
            orthonormalize_block(block, r, dim, 0..r);
        }
        for s in out.s.chunks_mut(r) {
            normalize_unit(s);
        }
    }

    /// Riemannian ascent with Barzilai-Borwein steps and a nonmonotone
    /// Armijo test, inside an augmented-Lagrangian loop.
    fn run(&self, mut pt: Point, cfg: &SolverConfig) -> RunOutcome {
        const MEMORY: usize = 8;
        let mut w = self.work();
        let mut trial_w = self.work();
        let mut trial = pt.clone();
        let mut rho = cfg.penalty_init;
        let mut prev_obj = f64::NEG_INFINITY;
        let mut prev_violation = f64::INFINITY;
        let mut converged = false;
        let mut rounds = 0;
        let mut inner_tol = 1e-2;
        let rr = self.r * self.r;

        let mut cur = self.evaluate(&pt, &mut w, rho);
        for outer in 0..cfg.max_outer {
            rounds = outer + 1;
            let mut history = std::collections::VecDeque::from([cur.lagrangian]);
            let mut eta = 1e-2 / rho.sqrt();
            let mut prev: Option<(Point, Vec<f64>, Vec<f64>)> = None;
            let mut g2 = self.gradient(&pt, &mut w, rho);
            let mut stationary = false;
            for _ in 0..cfg.max_inner {
                if g2.sqrt() <= inner_tol {
                    stationary = true;
                    break;
                }
                if let Some((pp, pgq, pgs)) = &prev {
                    let (mut ss, mut sy) = (0.0, 0.0);
                    for ((x, px), (g, pg)) in pt.q.iter().zip(&pp.q).zip(w.gq.iter().zip(pgq)) {
                        ss += (x - px) * (x - px);
                        sy += (x - px) * (g - pg);
                    }
                    for ((x, px), (g, pg)) in pt.s.iter().zip(&pp.s).zip(w.gs.iter().zip(pgs)) {
                        ss += (x - px) * (x - px);
                        sy += (x - px) * (g - pg);
                    }
                    if sy < 0.0 {
                        eta = (ss / -sy).clamp(1e-8, 1e2);
                    } else {
                        eta = (eta * 2.0).min(1e2);
                    }
                }
                let reference = history.iter().cloned().fold(f64::INFINITY, f64::min);
                let mut accepted = false;
                while eta > 1e-14 {
                    self.step(&pt, &w, eta, &mut trial);
                    trial_w.lambda.copy_from_slice(&w.lambda);
                    let next = self.evaluate(&trial, &mut trial_w, rho);
                    if next.lagrangian >= reference + 1e-4 * eta * g2 {
                        let old = std::mem::replace(&mut pt, trial.clone());
                        let (old_gq, old_gs) = (w.gq.clone(), w.gs.clone());
                        std::mem::swap(&mut w, &mut trial_w);
                        prev = Some((old, old_gq, old_gs));
                        cur = next;
                        accepted = true;
                        break;
                    }
                    eta *= 0.5;
                }
                if !accepted {
                    stationary = true;
                    break;
                }
                history.push_back(cur.lagrangian);
                if history.len() > MEMORY {
                    history.pop_front();
                }
                g2 = self.gradient(&pt, &mut w, rho);
            }

            let settled = (cur.objective - prev_obj).abs() <= cfg.tol_obj * cur.objective.abs().max(1.0);
            if cur.max_violation <= cfg.tol_feas && (settled || (stationary && inner_tol <= 1e-6)) {
                converged = true;
                break;
            }
            prev_obj = cur.objective;
            for (k, e) in self.edges.iter().enumerate() {
                for p in 0..rr {
                    let idx = k * rr + p;
                    w.lambda[idx] = if e.constrained[p] { (w.lambda[idx] - rho * w.c[idx]).max(0.0) } else { 0.0 };
                }
            }
            if cur.max_violation > cfg.tol_feas && cur.max_violation > 0.25 * prev_violation {
                rho *= cfg.penalty_growth;
            }
            prev_violation = cur.max_violation;
            inner_tol = (inner_tol * 0.25).max(1e-6);
            cur = self.evaluate(&pt, &mut w, rho);
        }
        RunOutcome {
            solution: pt.to_solution(self.n, self.r, self.dim),
            objective: cur.objective,
            max_violation: cur.max_violation,
            converged,
            outer_rounds: rounds,
        }
    }
}
