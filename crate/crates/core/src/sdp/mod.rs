//! The vector-program relaxation: one vector `x_{i,a}` per variable and
//! value, unit total mass and mutual orthogonality within each variable,
//! nonnegative inner products across constrained pairs. The objective sums
//! `w * <x_{i,a}, x_{j,b}>` over atoms.

mod solver;

use std::fmt::Write;

pub use solver::{solve, solve_with_hints, NonnegScope, Solved, SolverConfig};

use crate::error::{Error, Result};
use crate::instances::{Assignment, AtomicInstance};

pub const DEFAULT_TOL_FEAS: f64 = 1e-6;

/// Row-major storage: the vector for `(i, a)` occupies
/// `data[(i * r + a) * dim..][..dim]`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorSolution {
    n: usize,
    r: usize,
    dim: usize,
    data: Vec<f64>,
}

impl VectorSolution {
    pub fn zeros(n: usize, r: usize, dim: usize) -> Self {
        Self { n, r, dim, data: vec![0.0; n * r * dim] }
    }

    pub fn from_data(n: usize, r: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != n * r * dim {
            return Err(Error::Shape(format!("expected {} entries for n={n} R={r} dim={dim}, got {}", n * r * dim, data.len())));
        }
        Ok(Self { n, r, dim, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> usize {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn vector(&self, i: usize, a: usize) -> &[f64] {
        let off = (i * self.r + a) * self.dim;
        &self.data[off..off + self.dim]
    }

    #[inline]
    pub fn vector_mut(&mut self, i: usize, a: usize) -> &mut [f64] {
        let off = (i * self.r + a) * self.dim;
        &mut self.data[off..off + self.dim]
    }

    #[inline]
    pub fn inner(&self, i: usize, a: usize, j: usize, b: usize) -> f64 {
        dot(self.vector(i, a), self.vector(j, b))
    }

    #[inline]
    pub fn norm(&self, i: usize, a: usize) -> f64 {
        let v = self.vector(i, a);
        dot(v, v).sqrt()
    }

    /// Copy into a higher dimension, padding with zeros.
    pub fn lifted(&self, dim: usize) -> Self {
        assert!(dim >= self.dim, "cannot lift to a smaller dimension");
        let mut out = Self::zeros(self.n, self.r, dim);
        for (dst, src) in out.data.chunks_mut(dim).zip(self.data.chunks(self.dim)) {
            dst[..self.dim].copy_from_slice(src);
        }
        out
    }

    fn check_shape(&self, atomic: &AtomicInstance) -> Result<()> {
        if self.n != atomic.n() || self.r != atomic.domain() {
            return Err(Error::Shape(format!(
                "solution is n={} R={}, instance is n={} R={}",
                self.n,
                self.r,
                atomic.n(),
                atomic.domain()
            )));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a4, b4) = (a[..n].chunks_exact(4), b[..n].chunks_exact(4));
    let tail: f64 = a4.remainder().iter().zip(b4.remainder()).map(|(x, y)| x * y).sum();
    let mut acc = [0.0; 4];
    for (x, y) in a4.zip(b4) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// The one-dimensional feasible point encoding a full assignment:
/// `x_{i,z_i} = 1`, every other vector zero.
pub fn embed(z: &Assignment, atomic: &AtomicInstance) -> Result<VectorSolution> {
    z.check(atomic.n(), atomic.domain())?;
    let mut sol = VectorSolution::zeros(atomic.n(), atomic.domain(), 1);
    for i in 0..atomic.n() {
        let a = z.get(i).ok_or(Error::Unassigned(i))?;
        sol.vector_mut(i, a)[0] = 1.0;
    }
    Ok(sol)
}

/// `sum over atoms of w * <x_{i,a}, x_{j,b}>`.
pub fn objective(sol: &VectorSolution, atomic: &AtomicInstance) -> Result<f64> {
    sol.check_shape(atomic)?;
    Ok(atomic.atoms().iter().map(|t| t.weight * sol.inner(t.i, t.a, t.j, t.b)).sum())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeasibilityReport {
    /// `max_i | sum_a |x_{i,a}|^2 - 1 |`
    pub max_norm_violation: f64,
    /// `max_i max_{a != b} |<x_{i,a}, x_{i,b}>|`
    pub max_ortho_violation: f64,
    /// Smallest inner product over atom pairs (0 for an atom-free instance).
    pub min_constraint_pair_inner: f64,
    /// Smallest inner product over all value pairs of constrained variable pairs.
    pub min_edge_pair_inner: f64,
    pub objective: f64,
}

impl FeasibilityReport {
    /// Whether all three constraint families hold within `tol`, with
    /// nonnegativity judged on atom pairs.
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.max_norm_violation <= tol && self.max_ortho_violation <= tol && self.min_constraint_pair_inner >= -tol
    }
}

impl std::fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "objective {} norm_violation {:e} ortho_violation {:e} min_atom_inner {:e} min_edge_inner {:e}",
            self.objective,
            self.max_norm_violation,
            self.max_ortho_violation,
            self.min_constraint_pair_inner,
            self.min_edge_pair_inner
        )
    }
}

/// Worst violation of each constraint family and the objective value.
pub fn feasibility(sol: &VectorSolution, atomic: &AtomicInstance) -> Result<FeasibilityReport> {
    sol.check_shape(atomic)?;
    let (n, r) = (sol.n, sol.r);
    let mut max_norm_violation: f64 = 0.0;
    let mut max_ortho_violation: f64 = 0.0;
    for i in 0..n {
        let mass: f64 = (0..r).map(|a| sol.norm(i, a).powi(2)).sum();
        max_norm_violation = max_norm_violation.max((mass - 1.0).abs());
        for a in 0..r {
            for b in a + 1..r {
                max_ortho_violation = max_ortho_violation.max(sol.inner(i, a, i, b).abs());
            }
        }
    }
    let min_constraint_pair_inner =
        atomic.atoms().iter().map(|t| sol.inner(t.i, t.a, t.j, t.b)).fold(f64::INFINITY, f64::min);
    let min_edge_pair_inner = atomic
        .edges()
        .into_iter()
        .flat_map(|(i, j)| (0..r).flat_map(move |a| (0..r).map(move |b| (i, a, j, b))))
        .map(|(i, a, j, b)| sol.inner(i, a, j, b))
        .fold(f64::INFINITY, f64::min);
    let finite_or_zero = |x: f64| if x.is_finite() { x } else { 0.0 };
    Ok(FeasibilityReport {
        max_norm_violation,
        max_ortho_violation,
        min_constraint_pair_inner: finite_or_zero(min_constraint_pair_inner),
        min_edge_pair_inner: finite_or_zero(min_edge_pair_inner),
        objective: objective(sol, atomic)?,
    })
}

/// `SDPSOL 1 n R dim` followed by one `V i a x_1 .. x_dim` line per vector.
pub fn write_solution(sol: &VectorSolution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "SDPSOL 1 {} {} {}", sol.n, sol.r, sol.dim);
    for i in 0..sol.n {
        for a in 0..sol.r {
            let _ = write!(out, "V {i} {a}");
            for x in sol.vector(i, a) {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn parse_solution(text: &str) -> Result<VectorSolution> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (ln, header) = lines.next().ok_or_else(|| Error::parse(1, "empty solution file"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 5 || toks[0] != "SDPSOL" || toks[1] != "1" {
        return Err(Error::parse(ln, format!("expected `SDPSOL 1 n R dim`, found `{header}`")));
    }
    let num = |s: &str, what: &str| s.parse::<usize>().map_err(|_| Error::parse(ln, format!("bad {what} `{s}`")));
    let (n, r, dim) = (num(toks[2], "n")?, num(toks[3], "R")?, num(toks[4], "dim")?);
    if n == 0 || r < 2 || dim == 0 {
        return Err(Error::parse(ln, "need n >= 1, R >= 2, dim >= 1"));
    }
    let mut sol = VectorSolution::zeros(n, r, dim);
    let mut seen = vec![false; n * r];
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 + dim || toks[0] != "V" {
            return Err(Error::parse(ln, format!("expected `V i a` and {dim} reals")));
        }
        let idx = |s: &str| s.parse::<usize>().map_err(|_| Error::parse(ln, format!("bad index `{s}`")));
        let (i, a) = (idx(toks[1])?, idx(toks[2])?);
        if i >= n || a >= r {
            return Err(Error::parse(ln, format!("index ({i},{a}) out of range")));
        }
        if std::mem::replace(&mut seen[i * r + a], true) {
            return Err(Error::parse(ln, format!("duplicate vector ({i},{a})")));
        }
        for (dst, s) in sol.vector_mut(i, a).iter_mut().zip(&toks[3..]) {
            *dst = s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::parse(ln, format!("bad real `{s}`")))?;
        }
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(Error::parse(0, format!("missing vector ({},{})", k / r, k % r)));
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{example_instance, Atom};

    #[test]
    fn embed_scores_and_is_feasible() {
        let inst = example_instance();
        let atomic = inst.normalize();
        for z in [[0, 1, 1], [1, 0, 0], [2, 2, 2]] {
            let z = Assignment::full(z);
            let sol = embed(&z, &atomic).unwrap();
            assert_eq!(sol.dim(), 1);
            let rep = feasibility(&sol, &atomic).unwrap();
            assert_eq!(rep.max_norm_violation, 0.0);
            assert_eq!(rep.max_ortho_violation, 0.0);
            assert!(rep.min_constraint_pair_inner >= 0.0);
            assert_eq!(rep.objective, inst.score(&z).unwrap());
        }
    }

    #[test]
    fn embed_rejects_unassigned() {
        let atomic = example_instance().normalize();
        let z = Assignment::from_options(vec![Some(0), None, Some(1)]);
        assert!(matches!(embed(&z, &atomic), Err(Error::Unassigned(1))));
    }

    #[test]
    fn objective_of_isolated_mass_is_zero() {
        let atomic = example_instance().normalize();
        let mut sol = VectorSolution::zeros(3, 3, 2);
        sol.vector_mut(1, 2)[0] = 1.0;
        assert_eq!(objective(&sol, &atomic).unwrap(), 0.0);
    }

    #[test]
    fn shape_mismatch() {
        let atomic = example_instance().normalize();
        let sol = VectorSolution::zeros(4, 3, 2);
        assert!(objective(&sol, &atomic).is_err());
        assert!(feasibility(&sol, &atomic).is_err());
        assert!(VectorSolution::from_data(2, 2, 2, vec![0.0; 7]).is_err());
    }

    #[test]
    fn perturbation_is_detected() {
        let atomic = AtomicInstance::from_atoms(2, 2, [Atom { i: 0, a: 0, j: 1, b: 1, weight: 1.0 }]).unwrap();
        let mut sol = embed(&Assignment::full([0, 1]), &atomic).unwrap().lifted(3);
        sol.vector_mut(0, 0)[0] += 1e-3;
        let rep = feasibility(&sol, &atomic).unwrap();
        // (1 + 1e-3)^2 - 1
        assert!((rep.max_norm_violation - 2.001e-3).abs() < 1e-12);
        assert!(rep.max_norm_violation > 1e-4);
    }

    #[test]
    fn solution_file_round_trip() {
        let mut sol = VectorSolution::zeros(2, 2, 3);
        sol.vector_mut(0, 1).copy_from_slice(&[0.1, -2.5e-17, 1.0 / 3.0]);
        sol.vector_mut(1, 0)[2] = -0.75;
        let text = write_solution(&sol);
        assert!(text.starts_with("SDPSOL 1 2 2 3\nV 0 0 0 0 0\n"));
        assert_eq!(parse_solution(&text).unwrap(), sol);
    }

    #[test]
    fn solution_file_errors() {
        assert!(parse_solution("").is_err());
        assert!(parse_solution("SDPSOL 1 1 2 1\nV 0 0 1\n").is_err());
        assert!(parse_solution("SDPSOL 1 1 2 1\nV 0 0 1\nV 0 0 1\n").is_err());
        assert!(parse_solution("SDPSOL 1 1 2 1\nV 0 0 1\nV 0 2 1\n").is_err());
        assert!(parse_solution("SDPSOL 1 1 2 1\nV 0 0 1\nV 0 1 nan\n").is_err());
        assert!(parse_solution("SDPSOL 1 1 2 2\nV 0 0 1\nV 0 1 1\n").is_err());
        assert!(parse_solution("SDPSOL 1 1 2 1\nV 0 0 1\nV 0 1 0\n").is_ok());
    }
}
