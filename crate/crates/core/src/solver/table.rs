//! Layered suffix table shared by all cut counts of a sweep.
//!
//! `V[k'][p][q]` is the cheapest way to cover the deformed suffix starting at
//! `P_p` with exactly `k'` more cuts, its first piece clamped at `Q_q` and the
//! right end `e` free (paying `delta` per interval after `e`). Every
//! transition `(p, q) -> (p', q')` costs the same `c(p, p', q, q')` in every
//! layer, so each piece/span pair is evaluated at most once per table.

use crate::dissimilarity::{Bounded, Cost, CostOracle, MatchConfig};
use crate::error::Result;

use super::{evaluate_assignment, Assignment, Outcome};

const NONE: u32 = u32::MAX;

/// Work counters for a table build.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TableStats {
    /// Transitions passing the index and chord-gate filters.
    pub candidates: u64,
    /// Candidates skipped by the signed-area lower bound.
    pub bounded: u64,
    /// Candidates whose area computation stopped early.
    pub aborted: u64,
    /// Candidates with a fully computed area.
    pub evaluated: u64,
}

#[derive(Debug)]
pub struct SuffixTable {
    n: usize,
    m: usize,
    layers: usize,
    delta: f64,
    value: Vec<f64>,
    // layer 0: the right clamp e; above: p' * m + q'
    next: Vec<u32>,
    stats: TableStats,
}

/// Widens a pruning threshold so rounding never discards an improvement.
#[inline]
fn loosen(t: f64) -> f64 {
    t + 1e-12 * t.abs() + 1e-12
}

struct Builder<'a> {
    oracle: &'a CostOracle,
    cfg: MatchConfig,
    chord_f: Vec<f64>,
    chord_g: Vec<f64>,
    t: SuffixTable,
    best: Vec<f64>,
    arg: Vec<u32>,
    stats: TableStats,
}

impl Builder<'_> {
    /// Last piece: the whole suffix from `p` onto `(q, e)`.
    fn try_end(&mut self, p: usize, q: usize, e: usize) {
        let (n, m) = (self.t.n, self.t.m);
        if !self
            .cfg
            .accepts(self.chord_f[p * n + n - 1], self.chord_g[q * m + e])
        {
            return;
        }
        self.stats.candidates += 1;
        let pen = self.t.delta * (m - 1 - e) as f64;
        let th = loosen(self.best[0] - pen);
        if th < 0.0 {
            return;
        }
        if self.oracle.lower_bound(p, n - 1, q, e) > th {
            self.stats.bounded += 1;
            return;
        }
        match self.oracle.evaluate_bounded(p, n - 1, q, e, th) {
            Bounded::Cost(c) => {
                self.stats.evaluated += 1;
                let cand = c.value() + pen;
                let e = e as u32;
                if cand < self.best[0] || (cand == self.best[0] && e < self.arg[0]) {
                    self.best[0] = cand;
                    self.arg[0] = e;
                }
            }
            Bounded::Exceeds => self.stats.aborted += 1,
        }
    }

    /// A piece `[p, p2]` on `(q, q2)` followed by the stored suffix at
    /// `(p2, q2)`, for every layer up to `top` that the target can feed.
    fn try_target(&mut self, p: usize, q: usize, p2: usize, q2: usize, top: usize) {
        let (n, m) = (self.t.n, self.t.m);
        let lay = top.min(n - 1 - p2).min(m - 1 - q2);
        if lay < 1 {
            return;
        }
        let base = self.t.at(0, p2, q2);
        let below = &self.t.value[base..base + lay];
        let mut th = f64::NEG_INFINITY;
        // unreachable targets give -inf or NaN and never raise the threshold
        for (&b, &v) in self.best[1..=lay].iter().zip(below) {
            let d = b - v;
            if d > th {
                th = d;
            }
        }
        if th == f64::NEG_INFINITY {
            return;
        }
        self.stats.candidates += 1;
        let th = loosen(th);
        if th < 0.0 {
            return;
        }
        if self.oracle.lower_bound(p, p2, q, q2) > th {
            self.stats.bounded += 1;
            return;
        }
        let c = match self.oracle.evaluate_bounded(p, p2, q, q2, th) {
            Bounded::Cost(c) => c.value(),
            Bounded::Exceeds => {
                self.stats.aborted += 1;
                return;
            }
        };
        self.stats.evaluated += 1;
        let target = (p2 * m + q2) as u32;
        for (k, &v) in (1..=lay).zip(below) {
            let cand = c + v;
            if cand < self.best[k] || (cand == self.best[k] && target < self.arg[k]) {
                self.best[k] = cand;
                self.arg[k] = target;
            }
        }
    }
}

impl SuffixTable {
    #[inline]
    fn at(&self, layer: usize, p: usize, q: usize) -> usize {
        (p * self.m + q) * self.layers + layer
    }

    pub fn build(oracle: &CostOracle, delta: f64, k_max: usize) -> Self {
        let n = oracle.deformed().len();
        let m = oracle.ideal().len();
        let layers = k_max + 1;
        let mut b = Builder {
            oracle,
            cfg: *oracle.config(),
            chord_f: (0..n * n).map(|x| oracle.chord_f(x / n, x % n)).collect(),
            chord_g: (0..m * m).map(|x| oracle.chord_g(x / m, x % m)).collect(),
            t: SuffixTable {
                n,
                m,
                layers,
                delta,
                value: vec![f64::INFINITY; layers * n * m],
                next: vec![NONE; layers * n * m],
                stats: TableStats::default(),
            },
            best: vec![f64::INFINITY; layers],
            arg: vec![NONE; layers],
            stats: TableStats::default(),
        };

        for p in (0..n - 1).rev() {
            let top_p = k_max.min(n - 2 - p);
            for q in 0..m - 1 {
                let top = top_p.min(m - 2 - q);
                b.best[..=top].fill(f64::INFINITY);
                b.arg[..=top].fill(NONE);

                // Warm start from the choices of the neighbouring states so
                // the thresholds are tight before the full scan.
                if p + 1 < n - 1 {
                    let e = b.t.next[b.t.at(0, p + 1, q)];
                    if e != NONE {
                        b.try_end(p, q, e as usize);
                    }
                    for k in 1..=top.min(n - 3 - p) {
                        let t = b.t.next[b.t.at(k, p + 1, q)];
                        if t != NONE {
                            b.try_target(p, q, t as usize / m, t as usize % m, top);
                        }
                    }
                }

                for e in q + 1..m {
                    b.try_end(p, q, e);
                }
                if top >= 1 {
                    for p2 in p + 1..=n - 2 {
                        let top_p2 = top.min(n - 1 - p2);
                        let cf = b.chord_f[p * n + p2];
                        for q2 in q + 1..=m - 2 {
                            if top_p2.min(m - 1 - q2) < 1 {
                                break;
                            }
                            if b.cfg.accepts(cf, b.chord_g[q * m + q2]) {
                                b.try_target(p, q, p2, q2, top);
                            }
                        }
                    }
                }

                for k in 0..=top {
                    let i = b.t.at(k, p, q);
                    b.t.value[i] = b.best[k];
                    b.t.next[i] = b.arg[k];
                }
            }
        }
        b.t.stats = b.stats;
        b.t
    }

    pub fn stats(&self) -> TableStats {
        self.stats
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    /// Stored `V[layer][p][q]`.
    pub fn value(&self, layer: usize, p: usize, q: usize) -> Cost {
        let v = self.value[self.at(layer, p, q)];
        if v.is_finite() {
            Cost::finite(v)
        } else {
            Cost::INFINITY
        }
    }

    /// Recomputes `V[layer][p][q]` from its definition using memoized
    /// oracle queries and the stored values of the layer below.
    pub fn recompute(&self, oracle: &CostOracle, layer: usize, p: usize, q: usize) -> Result<Cost> {
        let (n, m) = (self.n, self.m);
        let mut best = f64::INFINITY;
        if layer == 0 {
            for e in q + 1..m {
                let c = oracle.query(p, n - 1, q, e)?.value();
                best = best.min(c + self.delta * (m - 1 - e) as f64);
            }
        } else {
            for p2 in p + 1..=n - 2 {
                for q2 in q + 1..=m - 2 {
                    if n - 2 - p2 < layer - 1 || m - 2 - q2 < layer - 1 {
                        continue;
                    }
                    let c = oracle.query(p, p2, q, q2)?.value();
                    best = best.min(c + self.value[self.at(layer - 1, p2, q2)]);
                }
            }
        }
        Ok(if best.is_finite() {
            Cost::finite(best)
        } else {
            Cost::INFINITY
        })
    }

    /// States `(layer, p, q)` that satisfy the point-count requirements.
    pub fn states(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let (n, m) = (self.n, self.m);
        (0..self.layers).flat_map(move |k| {
            (0..n - 1).flat_map(move |p| {
                (0..m - 1)
                    .filter(move |&q| k <= n - 2 - p && k <= m - 2 - q)
                    .map(move |q| (k, p, q))
            })
        })
    }

    /// Optimal left clamp for exactly `k` cuts, with its objective.
    fn best_start(&self, k: usize) -> Option<usize> {
        let mut best = f64::INFINITY;
        let mut arg = None;
        for l0 in 0..self.m - 1 {
            let cand = self.delta * l0 as f64 + self.value[self.at(k, 0, l0)];
            if cand < best {
                best = cand;
                arg = Some(l0);
            }
        }
        arg
    }

    /// Cuts and clamps of the optimal plan with exactly `k` cuts.
    pub fn assignment(&self, k: usize) -> Option<Assignment> {
        if k >= self.layers || k + 2 > self.n {
            return None;
        }
        let mut q = self.best_start(k)?;
        let mut p = 0;
        let mut cuts = Vec::with_capacity(k);
        let mut clamps = Vec::with_capacity(k + 1);
        for layer in (1..=k).rev() {
            let t = self.next[self.at(layer, p, q)] as usize;
            let (p2, q2) = (t / self.m, t % self.m);
            cuts.push(p2);
            clamps.push((q, q2));
            p = p2;
            q = q2;
        }
        let e = self.next[self.at(0, p, q)] as usize;
        clamps.push((q, e));
        Some((cuts, clamps))
    }

    /// The optimal plan for exactly `k` cuts, costs recomputed through the
    /// memoized oracle.
    pub fn outcome(&self, oracle: &CostOracle, k: usize) -> Result<Outcome> {
        match self.assignment(k) {
            Some((cuts, clamps)) => evaluate_assignment(oracle, self.delta, &cuts, &clamps),
            None => Ok(Outcome::Infeasible),
        }
    }
}
