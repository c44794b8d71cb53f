//! Exact optimum by exhaustive branch-and-bound, for desk-scale instances.

use crate::error::{Error, Result};
use crate::instances::{Assignment, Instance};

pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactResult {
    pub value: f64,
    pub witness: Assignment,
    /// Search nodes (partial assignments) expanded.
    pub explored: u64,
}

/// A constraint as seen from the variable that decides it: the other
/// endpoint was placed earlier in the search order.
struct Decided {
    other: usize,
    weight: f64,
    /// `table[mine * r + theirs]`
    table: Vec<bool>,
}

struct Search<'a> {
    r: usize,
    order: Vec<usize>,
    /// Constraints decided when `order[k]` is assigned.
    decided_at: Vec<Vec<Decided>>,
    values: Vec<Option<usize>>,
    best: f64,
    best_values: Vec<Option<usize>>,
    explored: u64,
    inst: &'a Instance,
}

impl Search<'_> {
    fn gain(&self, k: usize, v: usize) -> f64 {
        self.decided_at[k]
            .iter()
            .filter(|d| d.table[v * self.r + self.values[d.other].expect("earlier variable assigned")])
            .map(|d| d.weight)
            .sum()
    }

    /// Optimistic completion value from position `k` on: each later
    /// variable takes its best value against assigned neighbours and is
    /// credited in full for constraints whose other end is still open.
    fn bound(&self, k: usize) -> f64 {
        (k..self.order.len())
            .map(|p| {
                (0..self.r)
                    .map(|v| {
                        self.decided_at[p]
                            .iter()
                            .filter(|d| match self.values[d.other] {
                                Some(w) => d.table[v * self.r + w],
                                None => true,
                            })
                            .map(|d| d.weight)
                            .sum::<f64>()
                    })
                    .fold(0.0, f64::max)
            })
            .sum()
    }

    fn run(&mut self, k: usize, current: f64) {
        self.explored += 1;
        if k == self.order.len() {
            if current > self.best {
                self.best = current;
                self.best_values.clone_from(&self.values);
            }
            return;
        }
        if current + self.bound(k) <= self.best {
            return;
        }
        let var = self.order[k];
        let mut gains: Vec<(usize, f64)> = (0..self.r).map(|v| (v, self.gain(k, v))).collect();
        gains.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (v, g) in gains {
            self.values[var] = Some(v);
            self.run(k + 1, current + g);
        }
        self.values[var] = None;
    }
}

/// Maximum total satisfied weight over all `R^n` assignments.
///
/// Fails without a partial answer when `R^n > budget`.
pub fn brute_force(inst: &Instance, budget: u64) -> Result<ExactResult> {
    let (n, r) = (inst.n(), inst.domain());
    let space = (r as f64).powi(n as i32);
    if space > budget as f64 {
        return Err(Error::BudgetExceeded { space, budget });
    }

    let mut incident = vec![0.0; n];
    for c in inst.constraints() {
        incident[c.i] += c.weight;
        incident[c.j] += c.weight;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| incident[b].total_cmp(&incident[a]).then(a.cmp(&b)));
    let mut position = vec![0; n];
    for (k, &v) in order.iter().enumerate() {
        position[v] = k;
    }

    let mut decided_at: Vec<Vec<Decided>> = (0..n).map(|_| Vec::new()).collect();
    for c in inst.constraints().iter().filter(|c| c.weight > 0.0 && !c.rel.is_empty()) {
        let (late, other, late_is_i) =
            if position[c.i] > position[c.j] { (c.i, c.j, true) } else { (c.j, c.i, false) };
        let mut table = vec![false; r * r];
        for &(a, b) in &c.rel {
            let (mine, theirs) = if late_is_i { (a, b) } else { (b, a) };
            table[mine * r + theirs] = true;
        }
        decided_at[position[late]].push(Decided { other, weight: c.weight, table });
    }

    let mut search = Search {
        r,
        order,
        decided_at,
        values: vec![None; n],
        best: f64::NEG_INFINITY,
        best_values: vec![Some(0); n],
        explored: 0,
        inst,
    };
    search.run(0, 0.0);

    let witness = Assignment::from_options(search.best_values);
    let value = search.inst.score(&witness)?;
    Ok(ExactResult { value, witness, explored: search.explored })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{example_instance, Constraint};

    #[test]
    fn example_optimum() {
        let res = brute_force(&example_instance(), DEFAULT_BUDGET).unwrap();
        assert_eq!(res.value, 4.0);
        assert_eq!(example_instance().score(&res.witness).unwrap(), 4.0);
    }

    #[test]
    fn single_constraint() {
        let inst = Instance::new(3, 4, vec![Constraint::new(2, 0, [(3, 1)], 2.5)]).unwrap();
        let res = brute_force(&inst, DEFAULT_BUDGET).unwrap();
        assert_eq!(res.value, 2.5);
        assert_eq!(res.witness.get(2), Some(3));
        assert_eq!(res.witness.get(0), Some(1));
    }

    #[test]
    fn no_constraints() {
        let inst = Instance::new(2, 3, vec![]).unwrap();
        let res = brute_force(&inst, DEFAULT_BUDGET).unwrap();
        assert_eq!(res.value, 0.0);
        assert!(res.witness.is_complete());
    }

    #[test]
    fn budget_guard() {
        let inst = Instance::new(10, 4, vec![]).unwrap();
        assert!(matches!(brute_force(&inst, 1000), Err(Error::BudgetExceeded { .. })));
        assert!(brute_force(&inst, 1 << 20).is_ok());
    }
}
