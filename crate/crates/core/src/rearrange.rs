//! Refitting with rearrangement at desk scale.
//!
//! Pieces may be placed anywhere on the ideal curve, in any order and either
//! way round. The module holds an exhaustive solver for tiny instances and
//! the reduction from 3-Partition that makes the general problem hard, with
//! exact integer tools to check the reduction on generated instances.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dissimilarity::{Cost, CostOracle};
use crate::error::{Error, Result};
use crate::solver::{evaluate_assignment, Outcome, RefitInstance};

/// Integer lattice point.
pub type IntPoint = (i64, i64);

pub const PARTITION_MAX_ELEMENTS: usize = 15;
pub const REARRANGE_MAX_POINTS: usize = 8;
pub const REARRANGE_MAX_CUTS: usize = 3;

/// A 3-Partition instance: `3m` positive sizes that should split into `m`
/// groups of sum `B`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreePartitionInstance {
    sizes: Vec<u64>,
    m: usize,
    b: u64,
    strict: bool,
}

impl ThreePartitionInstance {
    /// With `strict`, every size must lie strictly between `B/4` and `B/2`.
    pub fn new(sizes: Vec<u64>, strict: bool) -> Result<Self> {
        if sizes.is_empty() || sizes.len() % 3 != 0 {
            return Err(Error::InvalidInstance(format!(
                "need 3m sizes with m >= 1, got {}",
                sizes.len()
            )));
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidInstance(format!("size {i} is zero")));
        }
        let m = sizes.len() / 3;
        let total: u64 = sizes.iter().sum();
        if total % m as u64 != 0 {
            return Err(Error::InvalidInstance(format!(
                "sizes sum to {total}, not a multiple of m = {m}"
            )));
        }
        let b = total / m as u64;
        if strict {
            // B/4 < s < B/2 in integers
            if let Some(i) = sizes.iter().position(|&s| !(4 * s > b && 2 * s < b)) {
                return Err(Error::InvalidInstance(format!(
                    "size {i} = {} is outside ({b}/4, {b}/2)",
                    sizes[i]
                )));
            }
        }
        Ok(Self {
            sizes,
            m,
            b,
            strict,
        })
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn strict(&self) -> bool {
        self.strict
    }

    /// Whether the sizes satisfy `B/4 < s < B/2`, whatever the flag says.
    pub fn satisfies_strict(&self) -> bool {
        self.sizes.iter().all(|&s| 4 * s > self.b && 2 * s < self.b)
    }
}

/// Draws a strict instance with `m` groups and sizes in `(b/4, b/2)`,
/// rejecting draws whose total is not `m * B` for a `B` keeping them strict.
pub fn random_strict_instance(
    rng: &mut impl Rng,
    m: usize,
    b: u64,
) -> Result<ThreePartitionInstance> {
    let (lo, hi) = (b / 4 + 1, (b - 1) / 2);
    if m == 0 || lo > hi {
        return Err(Error::InfeasibleParameters(format!(
            "no integer strictly between {b}/4 and {b}/2"
        )));
    }
    loop {
        let sizes: Vec<u64> = (0..3 * m).map(|_| rng.random_range(lo..=hi)).collect();
        if let Ok(tp) = ThreePartitionInstance::new(sizes, true) {
            return Ok(tp);
        }
    }
}

/// Draws a strict instance built from `m` triples that each sum to `b`,
/// shuffled, so the answer is yes.
pub fn random_strict_yes_instance(
    rng: &mut impl Rng,
    m: usize,
    b: u64,
) -> Result<ThreePartitionInstance> {
    let (lo, hi) = (b / 4 + 1, (b - 1) / 2);
    let triples: Vec<[u64; 3]> = (lo..=hi)
        .flat_map(|x| (x..=hi).map(move |y| (x, y)))
        .filter_map(|(x, y)| {
            let z = b.checked_sub(x + y)?;
            (y <= z && z <= hi).then_some([x, y, z])
        })
        .collect();
    if m == 0 || triples.is_empty() {
        return Err(Error::InfeasibleParameters(format!(
            "no strict triple sums to {b}"
        )));
    }
    let mut sizes: Vec<u64> = (0..m)
        .flat_map(|_| triples[rng.random_range(0..triples.len())])
        .collect();
    for i in (1..sizes.len()).rev() {
        sizes.swap(i, rng.random_range(0..=i));
    }
    ThreePartitionInstance::new(sizes, true)
}

/// Whether the sizes split into `m` groups of sum `B`.
pub fn solve_3partition(tp: &ThreePartitionInstance) -> Result<bool> {
    if tp.sizes.len() > PARTITION_MAX_ELEMENTS {
        return Err(Error::SizeGuard(format!(
            "{} elements; the exhaustive search takes at most {PARTITION_MAX_ELEMENTS}",
            tp.sizes.len()
        )));
    }
    let mut sizes = tp.sizes.clone();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let mut used = vec![false; sizes.len()];
    Ok(fill_groups(&sizes, &mut used, tp.m, tp.b, tp.b, 0))
}

/// Fills groups one at a time; within a group, elements are taken in
/// decreasing order and equal sizes are tried once.
fn fill_groups(
    sizes: &[u64],
    used: &mut [bool],
    groups: usize,
    b: u64,
    room: u64,
    from: usize,
) -> bool {
    if room == 0 {
        return groups == 1 || fill_groups(sizes, used, groups - 1, b, b, 0);
    }
    let mut last = None;
    for i in from..sizes.len() {
        if used[i] || sizes[i] > room || last == Some(sizes[i]) {
            continue;
        }
        last = Some(sizes[i]);
        used[i] = true;
        let ok = fill_groups(sizes, used, groups, b, room - sizes[i], i + 1);
        used[i] = false;
        if ok {
            return true;
        }
        if room == b {
            // the group's largest free element must go somewhere
            return false;
        }
    }
    false
}

/// The refitting instance built from a 3-Partition instance: a flat deformed
/// curve split into one segment per element followed by `m - 1` peaks, and
/// an ideal curve of `m` unit-spaced flat buckets of length `B` separated by
/// peaks of the same shape.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReducedInstance {
    pub deformed: Vec<IntPoint>,
    pub ideal: Vec<IntPoint>,
    pub k: usize,
    /// Element `i` is the deformed segment `[element_segments[i], element_segments[i] + 1]`.
    pub element_segments: Vec<usize>,
    pub prefix_sums: Vec<i64>,
    pub b: i64,
    pub m: usize,
    pub delta: i64,
}

pub fn reduce(tp: &ThreePartitionInstance) -> Result<ReducedInstance> {
    let m = tp.m;
    let b = i64::try_from(tp.b).map_err(|_| Error::InvalidInstance("B too large".into()))?;
    let mut prefix_sums = Vec::with_capacity(tp.sizes.len() + 1);
    prefix_sums.push(0i64);
    for &s in &tp.sizes {
        let s = i64::try_from(s).map_err(|_| Error::InvalidInstance("size too large".into()))?;
        prefix_sums.push(prefix_sums.last().unwrap() + s);
    }
    let total = *prefix_sums.last().unwrap();

    let mut deformed: Vec<IntPoint> = prefix_sums.iter().map(|&s| (s, 0)).collect();
    for i in 0..m as i64 - 1 {
        deformed.push((total + 2 * i + 1, 2 * b));
        deformed.push((total + 2 * i + 2, 0));
    }

    let mut ideal = Vec::new();
    for i in 0..m as i64 {
        let start = (b + 2) * i;
        ideal.extend((start..=start + b).map(|x| (x, 0)));
        if i + 1 < m as i64 {
            ideal.push((start + b + 1, 2 * b));
        }
    }

    let k = deformed.len() - 2;
    debug_assert_eq!(k, (3 * m + 1) + 2 * (m - 1) - 2);
    Ok(ReducedInstance {
        deformed,
        ideal,
        k,
        element_segments: (0..3 * m).collect(),
        prefix_sums,
        b,
        m,
        delta: 1,
    })
}

/// Drops repeated points and interior vertices where the polyline goes
/// straight on.
fn simplify(poly: &[IntPoint]) -> Vec<IntPoint> {
    let mut out: Vec<IntPoint> = Vec::with_capacity(poly.len());
    for &p in poly {
        if out.last() == Some(&p) {
            continue;
        }
        if out.len() >= 2 {
            let (a, b) = (out[out.len() - 2], out[out.len() - 1]);
            let (u, v) = (sub(b, a), sub(p, b));
            if cross(u, v) == 0 && dot(u, v) > 0 {
                out.pop();
            }
        }
        out.push(p);
    }
    out
}

fn sub(a: IntPoint, b: IntPoint) -> (i128, i128) {
    (a.0 as i128 - b.0 as i128, a.1 as i128 - b.1 as i128)
}

fn cross(u: (i128, i128), v: (i128, i128)) -> i128 {
    u.0 * v.1 - u.1 * v.0
}

fn dot(u: (i128, i128), v: (i128, i128)) -> i128 {
    u.0 * v.0 + u.1 * v.1
}

/// 0 when some rotation plus translation maps `piece` onto `span`, first
/// point to first point; 1 otherwise. Exact.
pub fn congruence_cost(piece: &[IntPoint], span: &[IntPoint]) -> u8 {
    let (a, b) = (simplify(piece), simplify(span));
    if a.len() != b.len() || a.len() < 2 {
        return 1;
    }
    let edges = |p: &[IntPoint]| p.windows(2).map(|w| sub(w[1], w[0])).collect::<Vec<_>>();
    let (ea, eb) = (edges(&a), edges(&b));
    let same_lengths = ea.iter().zip(&eb).all(|(&u, &v)| dot(u, u) == dot(v, v));
    let same_turns = ea
        .windows(2)
        .zip(eb.windows(2))
        .all(|(u, v)| cross(u[0], u[1]) == cross(v[0], v[1]) && dot(u[0], u[1]) == dot(v[0], v[1]));
    u8::from(!(same_lengths && same_turns))
}

/// Cost of placing deformed piece `[i, j]` on ideal span `(l, r)`; `l > r`
/// places the piece flipped.
pub trait PieceCost {
    fn deformed_len(&self) -> usize;
    fn ideal_len(&self) -> usize;
    fn piece_cost(&self, i: usize, j: usize, l: usize, r: usize) -> Cost;
}

impl PieceCost for CostOracle {
    fn deformed_len(&self) -> usize {
        self.deformed().len()
    }

    fn ideal_len(&self) -> usize {
        self.ideal().len()
    }

    fn piece_cost(&self, i: usize, j: usize, l: usize, r: usize) -> Cost {
        self.query(i, j, l, r)
            .expect("indices checked by the caller")
    }
}

/// [`congruence_cost`] on integer curves.
#[derive(Clone, Copy, Debug)]
pub struct CongruenceCost<'a> {
    pub deformed: &'a [IntPoint],
    pub ideal: &'a [IntPoint],
}

impl PieceCost for CongruenceCost<'_> {
    fn deformed_len(&self) -> usize {
        self.deformed.len()
    }

    fn ideal_len(&self) -> usize {
        self.ideal.len()
    }

    fn piece_cost(&self, i: usize, j: usize, l: usize, r: usize) -> Cost {
        let span: Vec<IntPoint> = if l < r {
            self.ideal[l..=r].to_vec()
        } else {
            self.ideal[r..=l].iter().rev().copied().collect()
        };
        Cost::finite(f64::from(congruence_cost(&self.deformed[i..=j], &span)))
    }
}

/// Best rearranged placement found by [`rearrangement_search`].
#[derive(Clone, Debug, PartialEq)]
pub struct Rearranged {
    pub objective: f64,
    pub cuts: Vec<usize>,
    pub clamps: Vec<(usize, usize)>,
}

/// Exhaustive optimum with rearrangement and flips over every cut set and
/// every clamp pair per piece. `None` when no placement has finite cost.
pub fn rearrangement_search(
    cost: &impl PieceCost,
    k: usize,
    delta: f64,
) -> Result<Option<Rearranged>> {
    let (n, m) = (cost.deformed_len(), cost.ideal_len());
    if n > REARRANGE_MAX_POINTS || m > REARRANGE_MAX_POINTS || k > REARRANGE_MAX_CUTS {
        return Err(Error::SizeGuard(format!(
            "|P| = {n}, |Q| = {m}, k = {k}; limits are {REARRANGE_MAX_POINTS} points and {REARRANGE_MAX_CUTS} cuts"
        )));
    }
    if k + 2 > n || m < 2 {
        return Err(Error::InfeasibleParameters(format!(
            "{k} cuts on {n} deformed and {m} ideal points"
        )));
    }
    let spans: Vec<(usize, usize)> = (0..m)
        .flat_map(|l| (0..m).filter(move |&r| r != l).map(move |r| (l, r)))
        .collect();
    let full = (1u32 << (m - 1)) - 1;
    let span_mask = |(l, r): (usize, usize)| ((1u32 << l.max(r)) - 1) & !((1u32 << l.min(r)) - 1);

    let mut best: Option<Rearranged> = None;
    crate::solver::for_each_increasing(k, 1, n - 1, &mut |cuts| {
        let mut bounds = vec![0];
        bounds.extend_from_slice(cuts);
        bounds.push(n - 1);

        // layer[mask] = cheapest placement of the pieces so far covering `mask`
        let states = 1usize << (m - 1);
        let mut layers = vec![vec![(f64::INFINITY, usize::MAX); states]];
        layers[0][0] = (0.0, usize::MAX);
        for w in bounds.windows(2) {
            let prev = layers.last().unwrap();
            let mut next = vec![(f64::INFINITY, usize::MAX); states];
            for (si, &(l, r)) in spans.iter().enumerate() {
                let Some(c) = cost.piece_cost(w[0], w[1], l, r).as_finite() else {
                    continue;
                };
                let add = span_mask((l, r));
                for (mask, &(v, _)) in prev.iter().enumerate() {
                    let to = mask | add as usize;
                    if v + c < next[to].0 {
                        next[to] = (v + c, mask * spans.len() + si);
                    }
                }
            }
            layers.push(next);
        }

        let last = layers.last().unwrap();
        let Some((mask, total)) = (0..states)
            .filter(|&s| last[s].0.is_finite())
            .map(|s| {
                (
                    s,
                    last[s].0 + delta * (full & !(s as u32)).count_ones() as f64,
                )
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
        else {
            return;
        };
        if best.as_ref().is_some_and(|b| b.objective <= total) {
            return;
        }
        let mut clamps = Vec::with_capacity(k + 1);
        let mut s = mask;
        for layer in layers[1..].iter().rev() {
            let code = layer[s].1;
            clamps.push(spans[code % spans.len()]);
            s = code / spans.len();
        }
        clamps.reverse();
        best = Some(Rearranged {
            objective: total,
            cuts: cuts.to_vec(),
            clamps,
        });
    });
    Ok(best)
}

/// Exhaustive optimum of a tiny instance with rearrangement and flips.
pub fn brute_force_rearrangement(inst: &RefitInstance) -> Result<Outcome> {
    let oracle = inst.oracle();
    match rearrangement_search(&oracle, inst.k(), inst.delta())? {
        Some(r) => evaluate_assignment(&oracle, inst.delta(), &r.cuts, &r.clamps),
        None => Ok(Outcome::Infeasible),
    }
}

/// Whether the reduced instance, cut at every point, has a placement with
/// zero cost and nothing uncovered.
///
/// Each piece has zero cost only on spans with as many intervals as the
/// piece has length in the construction, and those counts add up to the
/// ideal's interval count, so a zero-cost cover is an end-to-end tiling.
/// The search tiles the ideal from the left, forcing peaks onto peaks and
/// packing element segments into buckets; pieces of equal shape are tried
/// once per position.
pub fn zero_cost_decision(ri: &ReducedInstance) -> bool {
    let pieces: Vec<[IntPoint; 2]> = ri.deformed.windows(2).map(|w| [w[0], w[1]]).collect();
    if pieces.len() > 64 || pieces.len() != ri.k + 1 {
        return false;
    }
    let m = ri.ideal.len();
    // zero-cost spans starting at each ideal index, per piece
    let options: Vec<Vec<Vec<usize>>> = (0..m)
        .map(|l| {
            pieces
                .iter()
                .map(|pc| {
                    (l + 1..m)
                        .filter(|&r| {
                            let span = &ri.ideal[l..=r];
                            let flipped = [pc[1], pc[0]];
                            congruence_cost(pc, span) == 0 || congruence_cost(&flipped, span) == 0
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let shape = |pc: &[IntPoint; 2]| {
        let d = sub(pc[1], pc[0]);
        dot(d, d)
    };
    let shapes: Vec<i128> = pieces.iter().map(shape).collect();

    fn tile(
        at: usize,
        used: u64,
        options: &[Vec<Vec<usize>>],
        shapes: &[i128],
        failed: &mut HashSet<(usize, u64)>,
    ) -> bool {
        let all = if shapes.len() == 64 {
            u64::MAX
        } else {
            (1u64 << shapes.len()) - 1
        };
        if at == options.len() - 1 {
            return used == all;
        }
        if used == all || failed.contains(&(at, used)) {
            return false;
        }
        let mut tried: Vec<(i128, usize)> = Vec::new();
        for (i, ends) in options[at].iter().enumerate() {
            if used >> i & 1 == 1 {
                continue;
            }
            for &r in ends {
                if tried.contains(&(shapes[i], r)) {
                    continue;
                }
                tried.push((shapes[i], r));
                if tile(r, used | 1 << i, options, shapes, failed) {
                    return true;
                }
            }
        }
        failed.insert((at, used));
        false
    }
    tile(0, 0, &options, &shapes, &mut HashSet::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissimilarity::MatchConfig;
    use crate::geometry::{FunctionCurve, Point2};
    use crate::solver::{brute_force, Mode};
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn tp(sizes: &[u64], strict: bool) -> ThreePartitionInstance {
        ThreePartitionInstance::new(sizes.to_vec(), strict).unwrap()
    }

    #[test]
    fn worked_example_reduction() {
        let ri = reduce(&tp(&[1, 2, 2, 4, 2, 3], false)).unwrap();
        assert_eq!(ri.b, 7);
        assert_eq!(ri.prefix_sums, vec![0, 1, 3, 5, 9, 11, 14]);
        assert_eq!(
            ri.deformed,
            vec![
                (0, 0),
                (1, 0),
                (3, 0),
                (5, 0),
                (9, 0),
                (11, 0),
                (14, 0),
                (15, 14),
                (16, 0)
            ]
        );
        let mut expected: Vec<IntPoint> = (0..=7).map(|x| (x, 0)).collect();
        expected.push((8, 14));
        expected.extend((9..=16).map(|x| (x, 0)));
        assert_eq!(ri.ideal, expected);
        assert_eq!(ri.k, 7);
        assert_eq!(ri.k, ri.deformed.len() - 2);
        assert!(zero_cost_decision(&ri));
        assert!(solve_3partition(&tp(&[1, 2, 2, 4, 2, 3], false)).unwrap());
    }

    #[test]
    fn single_group_has_no_peaks() {
        let ri = reduce(&tp(&[1, 2, 3], false)).unwrap();
        assert_eq!(ri.deformed, vec![(0, 0), (1, 0), (3, 0), (6, 0)]);
        assert_eq!(ri.ideal, (0..=6).map(|x| (x, 0)).collect::<Vec<_>>());
        assert_eq!(ri.k, 2);
        assert!(zero_cost_decision(&ri));
    }

    #[test]
    fn strict_symmetric_reduction() {
        let t = tp(&[4, 4, 4, 4, 4, 4], true);
        assert_eq!(t.b(), 12);
        let ri = reduce(&t).unwrap();
        let peaks: Vec<_> = ri.ideal.iter().filter(|p| p.1 != 0).collect();
        assert_eq!(peaks, vec![&(13, 24)]);
        assert!(ri.ideal.contains(&(12, 0)) && ri.ideal.contains(&(14, 0)));
        assert_eq!(ri.ideal.first(), Some(&(0, 0)));
        assert_eq!(ri.ideal.last(), Some(&(26, 0)));
        assert_eq!(ri.ideal.len(), 13 + 13 + 1);
        assert!(solve_3partition(&t).unwrap());
        assert!(zero_cost_decision(&ri));
    }

    #[test]
    fn invalid_instances() {
        assert!(ThreePartitionInstance::new(vec![1, 2], false).is_err());
        assert!(ThreePartitionInstance::new(vec![], false).is_err());
        assert!(ThreePartitionInstance::new(vec![1, 0, 2], false).is_err());
        // sum 15 over m = 2
        assert!(ThreePartitionInstance::new(vec![1, 2, 3, 4, 2, 3], false).is_err());
        assert!(ThreePartitionInstance::new(vec![1, 2, 2, 4, 2, 3], true).is_err());
    }

    #[test]
    fn no_instance() {
        let t = tp(&[4, 4, 4, 4, 4, 6], false);
        assert_eq!(t.b(), 13);
        assert!(!solve_3partition(&t).unwrap());
        assert!(!zero_cost_decision(&reduce(&t).unwrap()));
    }

    #[test]
    fn partition_guard() {
        let t = tp(&[1; 18], false);
        assert!(matches!(solve_3partition(&t), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn congruence_examples() {
        assert_eq!(congruence_cost(&[(0, 0), (1, 0)], &[(5, 3), (6, 3)]), 0);
        assert_eq!(congruence_cost(&[(0, 0), (2, 0)], &[(0, 0), (3, 0)]), 1);
        let peak = [(0, 0), (1, 14), (2, 0)];
        assert_eq!(congruence_cost(&peak, &[(7, 0), (8, 14), (9, 0)]), 0);
        // rotation by a right angle
        assert_eq!(congruence_cost(&[(0, 0), (3, 4)], &[(0, 0), (-4, 3)]), 0);
        assert_eq!(congruence_cost(&[(0, 0), (3, 4)], &[(0, 0), (5, 0)]), 0);
        // a collinear interior point does not matter
        assert_eq!(
            congruence_cost(&[(0, 0), (2, 0)], &[(0, 0), (1, 0), (2, 0)]),
            0
        );
        // mirror images are not congruent without reflection
        assert_eq!(
            congruence_cost(&[(0, 0), (1, 1), (2, 0)], &[(0, 0), (1, -1), (2, 0)]),
            1
        );
        assert_eq!(
            congruence_cost(&[(0, 0), (1, 1), (3, 0)], &[(0, 0), (2, 1), (3, 0)]),
            1
        );
        // a backtracking span is not straight
        assert_eq!(
            congruence_cost(&[(0, 0), (1, 0)], &[(0, 0), (2, 0), (1, 0)]),
            1
        );
    }

    #[test]
    fn iff_on_random_strict_instances() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        let (mut yes, mut no) = (0, 0);
        for trial in 0..40 {
            let m = 1 + trial % 3;
            let b = rng.random_range(9..=20);
            let t = if trial % 2 == 0 {
                random_strict_instance(&mut rng, m, b).unwrap()
            } else {
                random_strict_yes_instance(&mut rng, m, b).unwrap()
            };
            assert!(t.satisfies_strict());
            let expect = solve_3partition(&t).unwrap();
            assert_eq!(
                zero_cost_decision(&reduce(&t).unwrap()),
                expect,
                "{:?}",
                t.sizes()
            );
            if expect {
                yes += 1
            } else {
                no += 1
            }
        }
        assert!(yes > 0 && no > 0);
    }

    fn curve(pts: &[(f64, f64)]) -> FunctionCurve {
        FunctionCurve::new(pts.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    fn random_curve(rng: &mut impl Rng, n: usize) -> FunctionCurve {
        let mut x = 0.0;
        curve(
            &(0..n)
                .map(|_| {
                    x += rng.random_range(0.5..2.0);
                    (x, rng.random_range(-1.0..1.0))
                })
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn identity_costs_nothing() {
        let c = curve(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.5), (3.0, 2.0)]);
        let inst = RefitInstance::new(
            c.clone(),
            c,
            0,
            1.0,
            MatchConfig::new(0.3).unwrap(),
            Mode::Rearrangement,
        )
        .unwrap();
        assert_eq!(
            brute_force_rearrangement(&inst).unwrap().objective(),
            Cost::ZERO
        );
    }

    #[test]
    fn never_worse_than_ordered_and_sometimes_better() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
        let mut strictly_better = 0;
        for _ in 0..60 {
            let n = rng.random_range(3..=6);
            let m = rng.random_range(3..=6);
            let k = rng.random_range(0..=(n - 2).min(2));
            let (f, g) = (random_curve(&mut rng, n), random_curve(&mut rng, m));
            let delta = [0.0, 0.5][rng.random_range(0..2)];
            let cfg = MatchConfig::new(1.0).unwrap();
            let ordered =
                RefitInstance::new(f.clone(), g.clone(), k, delta, cfg, Mode::NoRearrangement)
                    .unwrap();
            let free = RefitInstance::new(f, g, k, delta, cfg, Mode::Rearrangement).unwrap();
            let a = brute_force(&ordered).unwrap().objective();
            let b = brute_force_rearrangement(&free).unwrap().objective();
            assert!(b <= a, "{b} > {a}");
            if b.value() < a.value() - 1e-9 {
                strictly_better += 1;
            }
        }
        assert!(strictly_better > 0);
    }

    #[test]
    fn flipping_helps() {
        // the ideal is the piece turned half way round
        let f = curve(&[(0.0, 0.0), (1.0, 0.0), (2.0, 1.0)]);
        let g = curve(&[(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)]);
        let cfg = MatchConfig::new(0.3).unwrap();
        let free =
            RefitInstance::new(f.clone(), g.clone(), 0, 0.0, cfg, Mode::Rearrangement).unwrap();
        let ordered = RefitInstance::new(f, g, 0, 0.0, cfg, Mode::NoRearrangement).unwrap();
        let b = brute_force_rearrangement(&free).unwrap();
        assert!(b.objective().value() < 1e-12);
        assert_eq!(b.plan().unwrap().clamps, vec![(2, 0)]);
        assert!(brute_force(&ordered).unwrap().objective().value() > 0.1);
    }

    #[test]
    fn congruence_brute_force_agrees_on_single_bucket() {
        // one group: 4 deformed points, B + 1 ideal points
        for sizes in [[1u64, 2, 3], [2, 2, 2], [1, 1, 5], [3, 3, 1]] {
            let t = tp(&sizes, false);
            let ri = reduce(&t).unwrap();
            let cost = CongruenceCost {
                deformed: &ri.deformed,
                ideal: &ri.ideal,
            };
            let best = rearrangement_search(&cost, ri.k, ri.delta as f64)
                .unwrap()
                .unwrap();
            assert_eq!(best.objective == 0.0, zero_cost_decision(&ri));
            assert_eq!(best.objective, 0.0);
        }
    }

    #[test]
    fn rearrangement_guard() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        let f = random_curve(&mut rng, 9);
        let g = random_curve(&mut rng, 5);
        let inst =
            RefitInstance::new(f, g, 1, 0.0, MatchConfig::default(), Mode::Rearrangement).unwrap();
        assert!(matches!(
            brute_force_rearrangement(&inst),
            Err(Error::SizeGuard(_))
        ));
    }
}
