//! Max 2CSP-R instances, their atomic normal form, and assignments.
//!
//! An [`Instance`] holds weighted binary constraints whose relations are
//! arbitrary sets of value pairs. [`Instance::normalize`] rewrites every
//! constraint with `s` satisfying pairs into `s` atoms of the form
//! `(X_i = a) AND (X_j = b)`, which is the shape the vector relaxation and
//! the rounding work with.

mod format;
mod generate;

use std::collections::{BTreeMap, BTreeSet};

pub use format::{parse, serialize};
pub use generate::{gen_2lin, gen_random_2csp, gen_unique_game, unique_game_planted};

use crate::error::{Error, Result};

/// A weighted binary constraint: satisfied when `(X_i, X_j)` is in `rel`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub i: usize,
    pub j: usize,
    pub rel: BTreeSet<(usize, usize)>,
    pub weight: f64,
}

impl Constraint {
    pub fn new(i: usize, j: usize, rel: impl IntoIterator<Item = (usize, usize)>, weight: f64) -> Self {
        Self { i, j, rel: rel.into_iter().collect(), weight }
    }

    #[inline]
    pub fn satisfied_by(&self, a: usize, b: usize) -> bool {
        self.rel.contains(&(a, b))
    }
}

/// A validated Max 2CSP-R instance over values `0..r`.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    n: usize,
    r: usize,
    constraints: Vec<Constraint>,
}

impl Instance {
    pub fn new(n: usize, r: usize, constraints: Vec<Constraint>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance("n must be at least 1".into()));
        }
        if r < 2 {
            return Err(Error::InvalidInstance(format!("R must be at least 2, got {r}")));
        }
        for (k, c) in constraints.iter().enumerate() {
            if c.i >= n || c.j >= n {
                return Err(Error::InvalidInstance(format!(
                    "constraint {k} references variable outside 0..{n}"
                )));
            }
            if c.i == c.j {
                return Err(Error::InvalidInstance(format!("constraint {k} is a self-loop on {}", c.i)));
            }
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(Error::InvalidInstance(format!("constraint {k} has invalid weight {}", c.weight)));
            }
            if let Some(&(a, b)) = c.rel.iter().find(|&&(a, b)| a >= r || b >= r) {
                return Err(Error::InvalidInstance(format!(
                    "constraint {k} has pair ({a},{b}) outside 0..{r}"
                )));
            }
        }
        Ok(Self { n, r, constraints })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Domain size R.
    pub fn domain(&self) -> usize {
        self.r
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn total_weight(&self) -> f64 {
        self.constraints.iter().map(|c| c.weight).sum()
    }

    /// Total weight of constraints satisfied by `z`. Constraints touching an
    /// unassigned variable contribute nothing.
    pub fn score(&self, z: &Assignment) -> Result<f64> {
        z.check(self.n, self.r)?;
        Ok(self
            .constraints
            .iter()
            .filter(|c| match (z.get(c.i), z.get(c.j)) {
                (Some(a), Some(b)) => c.satisfied_by(a, b),
                _ => false,
            })
            .map(|c| c.weight)
            .sum())
    }

    /// Rewrite into weighted atoms, merging atoms on the same
    /// `(i, a, j, b)`. Atoms are oriented so that `i < j`.
    pub fn normalize(&self) -> AtomicInstance {
        let mut merged: BTreeMap<(usize, usize, usize, usize), f64> = BTreeMap::new();
        for c in &self.constraints {
            if c.weight == 0.0 {
                continue;
            }
            for &(a, b) in &c.rel {
                let key = if c.i < c.j { (c.i, a, c.j, b) } else { (c.j, b, c.i, a) };
                *merged.entry(key).or_insert(0.0) += c.weight;
            }
        }
        let atoms: Vec<Atom> = merged
            .into_iter()
            .map(|((i, a, j, b), weight)| Atom { i, a, j, b, weight })
            .collect();
        let total_weight = atoms.iter().map(|t| t.weight).sum();
        AtomicInstance { n: self.n, r: self.r, atoms, total_weight }
    }
}

/// The single-pair constraint `(X_i = a) AND (X_j = b)` with a positive weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub i: usize,
    pub a: usize,
    pub j: usize,
    pub b: usize,
    pub weight: f64,
}

/// An instance in atomic normal form.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicInstance {
    n: usize,
    r: usize,
    atoms: Vec<Atom>,
    total_weight: f64,
}

impl AtomicInstance {
    /// Build from raw atoms, merging duplicates the same way
    /// [`Instance::normalize`] does. Zero-weight atoms are dropped.
    pub fn from_atoms(n: usize, r: usize, atoms: impl IntoIterator<Item = Atom>) -> Result<Self> {
        let constraints = atoms
            .into_iter()
            .map(|t| Constraint::new(t.i, t.j, [(t.a, t.b)], t.weight))
            .collect();
        Ok(Instance::new(n, r, constraints)?.normalize())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> usize {
        self.r
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn score(&self, z: &Assignment) -> Result<f64> {
        z.check(self.n, self.r)?;
        Ok(self.score_unchecked(z))
    }

    pub(crate) fn score_unchecked(&self, z: &Assignment) -> f64 {
        self.atoms
            .iter()
            .filter(|t| z.get(t.i) == Some(t.a) && z.get(t.j) == Some(t.b))
            .map(|t| t.weight)
            .sum()
    }

    /// Distinct variable pairs `(i, j)`, `i < j`, that carry at least one atom.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let set: BTreeSet<(usize, usize)> = self.atoms.iter().map(|t| (t.i, t.j)).collect();
        set.into_iter().collect()
    }
}

/// One value per variable, or `None` when the variable is unassigned.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment(Vec<Option<usize>>);

impl Assignment {
    pub fn full(values: impl IntoIterator<Item = usize>) -> Self {
        Self(values.into_iter().map(Some).collect())
    }

    pub fn unassigned(n: usize) -> Self {
        Self(vec![None; n])
    }

    pub fn from_options(values: Vec<Option<usize>>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> Option<usize> {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: Option<usize>) {
        self.0[i] = value;
    }

    pub fn values(&self) -> &[Option<usize>] {
        &self.0
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(Option::is_some)
    }

    pub fn assigned_count(&self) -> usize {
        self.0.iter().filter(|v| v.is_some()).count()
    }

    pub(crate) fn check(&self, n: usize, r: usize) -> Result<()> {
        if self.0.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: self.0.len() });
        }
        if let Some((i, v)) = self.0.iter().enumerate().find_map(|(i, v)| v.filter(|&v| v >= r).map(|v| (i, v))) {
            return Err(Error::Domain(format!("variable {i} has value {v} outside 0..{r}")));
        }
        Ok(())
    }
}

impl std::fmt::Display for Assignment {
    /// Space-separated values, `-` for unassigned.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            match v {
                Some(v) => write!(f, "{v}")?,
                None => f.write_str("-")?,
            }
        }
        Ok(())
    }
}

/// The three-variable, five-constraint Max 2CSP-3 instance used as the
/// running example: `X1 != X3`, `X1 + X2 = 1 (mod 3)`, `X2 = 0 or X1 = 1`,
/// `X2 = X3`, `X1 + X3 = 2 (mod 3)`, all with unit weight.
pub fn example_instance() -> Instance {
    let r = 3;
    let pairs = |f: &dyn Fn(usize, usize) -> bool| -> Vec<(usize, usize)> {
        (0..r).flat_map(|a| (0..r).map(move |b| (a, b))).filter(|&(a, b)| f(a, b)).collect()
    };
    let constraints = vec![
        Constraint::new(0, 2, pairs(&|a, b| a != b), 1.0),
        Constraint::new(0, 1, pairs(&|a, b| (a + b) % r == 1), 1.0),
        Constraint::new(0, 1, pairs(&|a, b| b == 0 || a == 1), 1.0),
        Constraint::new(1, 2, pairs(&|a, b| a == b), 1.0),
        Constraint::new(0, 2, pairs(&|a, b| (a + b) % r == 2), 1.0),
    ];
    Instance::new(3, r, constraints).expect("example instance is valid")
}
