//! The fixed-endpoint recurrence: cover `[a, b]` of the deformed curve onto
//! `[d, e]` of the ideal curve with exactly `k'` cuts and full coverage.

use std::collections::HashMap;

use crate::dissimilarity::{Cost, CostOracle};
use crate::error::{Error, Result};

use super::Assignment;

/// Stored value and first transition `(cut, clamp end)` of a state.
type Entry = (Cost, Option<(usize, usize)>);

/// Optimal value and assignment of one constrained subproblem.
#[derive(Clone, Debug, PartialEq)]
pub struct Constrained {
    pub value: Cost,
    pub cuts: Vec<usize>,
    pub clamps: Vec<(usize, usize)>,
}

/// Memoized recursion with the right ends `b` and `e` held fixed; states
/// are `(p, q, cuts_left)`.
pub struct ConstrainedSolver<'a> {
    oracle: &'a CostOracle,
    b: usize,
    e: usize,
    memo: HashMap<(usize, usize, usize), Entry>,
}

impl<'a> ConstrainedSolver<'a> {
    pub fn new(oracle: &'a CostOracle, b: usize, e: usize) -> Result<Self> {
        let (n, m) = (oracle.deformed().len(), oracle.ideal().len());
        if b >= n || e >= m {
            return Err(Error::IndexOutOfRange(format!("right ends ({b}, {e})")));
        }
        Ok(Self {
            oracle,
            b,
            e,
            memo: HashMap::new(),
        })
    }

    fn feasible(&self, p: usize, q: usize, k: usize) -> bool {
        p < self.b && q < self.e && self.b - p > k && self.e - q > k
    }

    /// Value of the subproblem starting at `(p, q)` with `k` cuts left.
    pub fn solve(&mut self, p: usize, q: usize, k: usize) -> Result<Cost> {
        if !self.feasible(p, q, k) {
            return Err(Error::InfeasibleParameters(format!(
                "[{p}, {}] x [{q}, {}] cannot hold {k} cuts",
                self.b, self.e
            )));
        }
        self.value(p, q, k)
    }

    fn value(&mut self, p: usize, q: usize, k: usize) -> Result<Cost> {
        if let Some(&(v, _)) = self.memo.get(&(p, q, k)) {
            return Ok(v);
        }
        let entry = if k == 0 {
            (self.oracle.query(p, self.b, q, self.e)?, None)
        } else {
            let mut best = Cost::INFINITY;
            let mut arg = None;
            for p2 in p + 1..=self.b - k {
                for q2 in q + 1..=self.e - k {
                    let c = self.oracle.query(p, p2, q, q2)?;
                    if !c.is_finite() {
                        continue;
                    }
                    let cand = c + self.value(p2, q2, k - 1)?;
                    if cand < best {
                        best = cand;
                        arg = Some((p2, q2));
                    }
                }
            }
            (best, arg)
        };
        self.memo.insert((p, q, k), entry);
        Ok(entry.0)
    }

    /// Stored value, if the state has been solved.
    pub fn stored(&self, p: usize, q: usize, k: usize) -> Option<Cost> {
        self.memo.get(&(p, q, k)).map(|&(v, _)| v)
    }

    /// All memoized states.
    pub fn states(&self) -> Vec<(usize, usize, usize)> {
        let mut s: Vec<_> = self.memo.keys().copied().collect();
        s.sort_unstable();
        s
    }

    /// Re-derives a state's value from its transitions, reading successor
    /// values from the memo (solving them if absent).
    pub fn recompute(&mut self, p: usize, q: usize, k: usize) -> Result<Cost> {
        if k == 0 {
            return self.oracle.query(p, self.b, q, self.e);
        }
        let mut best = Cost::INFINITY;
        for p2 in p + 1..=self.b - k {
            for q2 in q + 1..=self.e - k {
                let cand = self.oracle.query(p, p2, q, q2)? + self.value(p2, q2, k - 1)?;
                if cand < best {
                    best = cand;
                }
            }
        }
        Ok(best)
    }

    /// Follows the stored choices from `(p, q, k)`.
    pub fn assignment(&self, p: usize, q: usize, k: usize) -> Option<Assignment> {
        let (mut p, mut q) = (p, q);
        let mut cuts = Vec::new();
        let mut clamps = Vec::new();
        for left in (1..=k).rev() {
            let &(v, arg) = self.memo.get(&(p, q, left))?;
            if !v.is_finite() {
                return None;
            }
            let (p2, q2) = arg?;
            cuts.push(p2);
            clamps.push((q, q2));
            p = p2;
            q = q2;
        }
        clamps.push((q, self.e));
        Some((cuts, clamps))
    }
}

/// Solves `[a, b]` onto `[d, e]` with exactly `k_prime` cuts.
pub fn solve_constrained(
    oracle: &CostOracle,
    a: usize,
    b: usize,
    d: usize,
    e: usize,
    k_prime: usize,
) -> Result<Constrained> {
    if a >= b || d >= e || b - a < k_prime + 1 || e - d < k_prime + 1 {
        return Err(Error::InfeasibleParameters(format!(
            "[{a}, {b}] x [{d}, {e}] cannot hold {k_prime} cuts"
        )));
    }
    let mut solver = ConstrainedSolver::new(oracle, b, e)?;
    let value = solver.solve(a, d, k_prime)?;
    let (cuts, clamps) = solver.assignment(a, d, k_prime).unwrap_or_default();
    Ok(Constrained {
        value,
        cuts,
        clamps,
    })
}
