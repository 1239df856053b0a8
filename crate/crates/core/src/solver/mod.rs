//! Cut planning: instances, plans, the exact solver and its oracles.

mod brute;
mod constrained;
mod table;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub(crate) use brute::for_each_increasing;
pub use brute::{brute_force, BRUTE_MAX_CUTS, BRUTE_MAX_POINTS};
pub use constrained::{solve_constrained, Constrained, ConstrainedSolver};
pub use table::{SuffixTable, TableStats};

use crate::dissimilarity::{Cost, CostOracle, MatchConfig};
use crate::error::{Error, Result};
use crate::geometry::{align_endpoints, FunctionCurve, Point2, Polyline};

/// Whether pieces must keep their order and orientation on the ideal curve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    NoRearrangement,
    Rearrangement,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::NoRearrangement => "no_rearrangement",
            Mode::Rearrangement => "rearrangement",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no_rearrangement" | "no-rearrangement" => Ok(Mode::NoRearrangement),
            "rearrangement" => Ok(Mode::Rearrangement),
            _ => Err(Error::Validation {
                field: "mode".into(),
                message: format!("expected no_rearrangement or rearrangement, got {s:?}"),
            }),
        }
    }
}

/// One planning problem: cut the deformed curve `k` times and place the
/// pieces on the ideal curve.
#[derive(Clone, Debug)]
pub struct RefitInstance {
    deformed: FunctionCurve,
    ideal: FunctionCurve,
    k: usize,
    delta: f64,
    config: MatchConfig,
    mode: Mode,
}

impl RefitInstance {
    pub fn new(
        deformed: FunctionCurve,
        ideal: FunctionCurve,
        k: usize,
        delta: f64,
        config: MatchConfig,
        mode: Mode,
    ) -> Result<Self> {
        if k + 2 > deformed.len() {
            return Err(Error::Validation {
                field: "k".into(),
                message: format!(
                    "{k} cuts need at least {} deformed points, the curve has {}",
                    k + 2,
                    deformed.len()
                ),
            });
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::Validation {
                field: "delta".into(),
                message: format!("must be a finite value >= 0, got {delta}"),
            });
        }
        Ok(Self {
            deformed,
            ideal,
            k,
            delta,
            config,
            mode,
        })
    }

    pub fn deformed(&self) -> &FunctionCurve {
        &self.deformed
    }

    pub fn ideal(&self) -> &FunctionCurve {
        &self.ideal
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn config(&self) -> &MatchConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// The same instance with a different cut count.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        Self::new(
            self.deformed.clone(),
            self.ideal.clone(),
            k,
            self.delta,
            self.config,
            self.mode,
        )
    }

    pub fn oracle(&self) -> CostOracle {
        CostOracle::new(self.deformed.clone(), self.ideal.clone(), self.config)
    }
}

/// A complete assignment of cuts and clamps with its costs.
#[derive(Clone, Debug, PartialEq)]
pub struct RefitPlan {
    /// Interior indices into the deformed curve, strictly increasing.
    pub cuts: Vec<usize>,
    /// `(left, right)` clamp indices into the ideal curve, one per piece.
    pub clamps: Vec<(usize, usize)>,
    pub piece_costs: Vec<f64>,
    pub uncovered: usize,
    pub objective: f64,
}

impl RefitPlan {
    pub fn k(&self) -> usize {
        self.cuts.len()
    }

    /// Sum of piece costs: the area left between result and ideal.
    pub fn area(&self) -> f64 {
        self.piece_costs.iter().sum()
    }

    /// Piece boundaries on the deformed curve: `0, cuts.., n - 1`.
    pub fn boundaries(&self, n: usize) -> Vec<usize> {
        let mut b = Vec::with_capacity(self.cuts.len() + 2);
        b.push(0);
        b.extend_from_slice(&self.cuts);
        b.push(n - 1);
        b
    }
}

/// Result of a solve: an optimal plan, or proof that every plan costs
/// infinity.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Optimal(RefitPlan),
    Infeasible,
}

impl Outcome {
    pub fn objective(&self) -> Cost {
        match self {
            Outcome::Optimal(p) => Cost::finite(p.objective),
            Outcome::Infeasible => Cost::INFINITY,
        }
    }

    pub fn plan(&self) -> Option<&RefitPlan> {
        match self {
            Outcome::Optimal(p) => Some(p),
            Outcome::Infeasible => None,
        }
    }

    pub fn into_plan(self) -> Option<RefitPlan> {
        match self {
            Outcome::Optimal(p) => Some(p),
            Outcome::Infeasible => None,
        }
    }
}

/// One row of a cut-count sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepEntry {
    pub k: usize,
    pub outcome: Outcome,
    /// Best objective over all cut counts up to and including `k`.
    pub best_at_most: Cost,
}

/// Intervals of the ideal curve before `l0` and after `rk`.
/// Cut indices and clamp pairs of a plan, before costing.
pub type Assignment = (Vec<usize>, Vec<(usize, usize)>);

pub fn count_uncovered(ideal: &FunctionCurve, l0: usize, rk: usize) -> usize {
    debug_assert!(l0 <= rk && rk < ideal.len());
    l0 + (ideal.len() - 1 - rk)
}

/// Intervals `[q_j, q_{j+1}]` not inside any clamp span `[min, max]`.
pub fn uncovered_intervals(m: usize, clamps: &[(usize, usize)]) -> usize {
    let mut covered = vec![false; m.saturating_sub(1)];
    for &(l, r) in clamps {
        for c in &mut covered[l.min(r)..l.max(r)] {
            *c = true;
        }
    }
    covered.iter().filter(|&&c| !c).count()
}

/// Builds the plan for a given assignment, querying the oracle for every
/// piece. Returns [`Outcome::Infeasible`] if any piece is gated out.
pub fn evaluate_assignment(
    oracle: &CostOracle,
    delta: f64,
    cuts: &[usize],
    clamps: &[(usize, usize)],
) -> Result<Outcome> {
    let n = oracle.deformed().len();
    let m = oracle.ideal().len();
    if clamps.len() != cuts.len() + 1 {
        return Err(Error::InvalidInstance(format!(
            "{} cuts need {} clamp pairs, got {}",
            cuts.len(),
            cuts.len() + 1,
            clamps.len()
        )));
    }
    if cuts.iter().any(|&c| c == 0 || c >= n - 1) || cuts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInstance(format!(
            "cuts {cuts:?} must be strictly increasing interior indices below {}",
            n - 1
        )));
    }
    let mut bounds = Vec::with_capacity(cuts.len() + 2);
    bounds.push(0);
    bounds.extend_from_slice(cuts);
    bounds.push(n - 1);

    let mut piece_costs = Vec::with_capacity(clamps.len());
    for (w, &(l, r)) in bounds.windows(2).zip(clamps) {
        let c = oracle.query(w[0], w[1], l, r)?;
        match c.as_finite() {
            Some(v) => piece_costs.push(v),
            None => return Ok(Outcome::Infeasible),
        }
    }
    let uncovered = uncovered_intervals(m, clamps);
    let objective = piece_costs.iter().sum::<f64>() + delta * uncovered as f64;
    Ok(Outcome::Optimal(RefitPlan {
        cuts: cuts.to_vec(),
        clamps: clamps.to_vec(),
        piece_costs,
        uncovered,
        objective,
    }))
}

/// Checks a plan's structure against the instance and recomputes its
/// objective from scratch.
pub fn validate_plan(inst: &RefitInstance, plan: &RefitPlan) -> Result<()> {
    let invalid = |field: &str, message: String| Error::Validation {
        field: field.into(),
        message,
    };
    if plan.cuts.len() != inst.k() {
        return Err(invalid(
            "cuts",
            format!("expected {} cuts, got {}", inst.k(), plan.cuts.len()),
        ));
    }
    let m = inst.ideal().len();
    if let Some(&(l, r)) = plan
        .clamps
        .iter()
        .find(|&&(l, r)| l >= m || r >= m || l == r)
    {
        return Err(invalid(
            "clamps",
            format!("({l}, {r}) is not a valid span on {m} ideal points"),
        ));
    }
    if inst.mode() == Mode::NoRearrangement {
        if let Some(i) = plan.clamps.iter().position(|&(l, r)| l > r) {
            return Err(invalid("clamps", format!("piece {i} is flipped")));
        }
        if let Some(i) = plan.clamps.windows(2).position(|w| w[0].1 != w[1].0) {
            return Err(invalid(
                "clamps",
                format!("piece {} does not start where piece {i} ends", i + 1),
            ));
        }
    }
    let fresh = match evaluate_assignment(&inst.oracle(), inst.delta(), &plan.cuts, &plan.clamps)? {
        Outcome::Optimal(p) => p,
        Outcome::Infeasible => {
            return Err(invalid("clamps", "a piece fails the match gate".into()));
        }
    };
    if fresh.uncovered != plan.uncovered {
        return Err(invalid(
            "uncovered",
            format!("stored {}, recomputed {}", plan.uncovered, fresh.uncovered),
        ));
    }
    let tol = 1e-9 * fresh.objective.abs().max(1.0);
    if (fresh.objective - plan.objective).abs() > tol {
        return Err(invalid(
            "objective",
            format!("stored {}, recomputed {}", plan.objective, fresh.objective),
        ));
    }
    if let Some(i) = (0..fresh.piece_costs.len()).find(|&i| {
        (fresh.piece_costs[i] - plan.piece_costs.get(i).copied().unwrap_or(f64::NAN)).abs() > tol
    }) {
        return Err(invalid("pieceCosts", format!("entry {i} does not match")));
    }
    Ok(())
}

fn require_no_rearrangement(inst: &RefitInstance) -> Result<()> {
    if inst.mode() != Mode::NoRearrangement {
        return Err(Error::InvalidInstance(
            "the exact solver handles the no-rearrangement mode only".into(),
        ));
    }
    Ok(())
}

/// Optimal plan with exactly `inst.k()` cuts.
pub fn solve_exact_k(inst: &RefitInstance) -> Result<Outcome> {
    require_no_rearrangement(inst)?;
    let oracle = inst.oracle();
    let table = SuffixTable::build(&oracle, inst.delta(), inst.k());
    table.outcome(&oracle, inst.k())
}

/// Optimal plans for every cut count `0..=k_max`.
pub fn sweep(inst: &RefitInstance, k_max: usize) -> Result<Vec<SweepEntry>> {
    let mut out = Vec::with_capacity(k_max + 1);
    sweep_with(inst, k_max, |e| out.push(e))?;
    Ok(out)
}

/// Like [`sweep`], handing each row to `emit` in increasing `k`.
pub fn sweep_with(
    inst: &RefitInstance,
    k_max: usize,
    mut emit: impl FnMut(SweepEntry),
) -> Result<TableStats> {
    require_no_rearrangement(inst)?;
    let inst = inst.with_k(k_max)?;
    let oracle = inst.oracle();
    let table = SuffixTable::build(&oracle, inst.delta(), k_max);
    let mut best = Cost::INFINITY;
    for k in 0..=k_max {
        let outcome = table.outcome(&oracle, k)?;
        if outcome.objective() < best {
            best = outcome.objective();
        }
        emit(SweepEntry {
            k,
            outcome,
            best_at_most: best,
        });
    }
    Ok(table.stats())
}

/// Every piece mapped onto its clamp span, in piece order.
pub fn render_pieces(inst: &RefitInstance, plan: &RefitPlan) -> Result<Vec<Polyline>> {
    let n = inst.deformed().len();
    let q = inst.ideal().points();
    if plan.clamps.len() != plan.cuts.len() + 1 {
        return Err(Error::InvalidInstance(
            "clamp count does not match cuts".into(),
        ));
    }
    plan.boundaries(n)
        .windows(2)
        .zip(&plan.clamps)
        .map(|(w, &(l, r))| {
            let piece = inst.deformed().sub_polyline(w[0], w[1])?;
            let (tl, tr) = (
                *q.get(l)
                    .ok_or_else(|| Error::IndexOutOfRange(format!("clamp {l}")))?,
                *q.get(r)
                    .ok_or_else(|| Error::IndexOutOfRange(format!("clamp {r}")))?,
            );
            align_endpoints(&piece, tl, tr)
        })
        .collect()
}

/// The reshaped curve: every piece mapped onto its clamp span, joined.
pub fn render_result(inst: &RefitInstance, plan: &RefitPlan) -> Result<Polyline> {
    let mut out: Vec<Point2> = Vec::new();
    for mapped in render_pieces(inst, plan)? {
        let pts = mapped.points();
        let skip = usize::from(out.last() == Some(&pts[0]));
        out.extend_from_slice(&pts[skip..]);
    }
    Polyline::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(pts: &[(f64, f64)]) -> FunctionCurve {
        FunctionCurve::new(pts.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    fn bumpy() -> FunctionCurve {
        curve(&[
            (0.0, 0.0),
            (1.0, 1.5),
            (2.0, 0.5),
            (3.0, 2.0),
            (4.0, 1.0),
            (5.0, 2.5),
            (6.0, 0.0),
        ])
    }

    #[test]
    fn uncovered_examples() {
        let q5 = curve(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0)]);
        assert_eq!(count_uncovered(&q5, 0, 4), 0);
        assert_eq!(count_uncovered(&q5, 1, 3), 2);
        assert_eq!(count_uncovered(&q5, 0, 2), 2);
        assert_eq!(uncovered_intervals(5, &[(3, 1)]), 2);
        assert_eq!(uncovered_intervals(5, &[(0, 1), (3, 4)]), 2);
    }

    #[test]
    fn identity_k0() {
        let c = bumpy();
        let inst = RefitInstance::new(
            c.clone(),
            c,
            0,
            0.0,
            MatchConfig::default(),
            Mode::NoRearrangement,
        )
        .unwrap();
        let plan = solve_exact_k(&inst).unwrap().into_plan().unwrap();
        assert_eq!(plan.objective, 0.0);
        assert_eq!(plan.clamps, vec![(0, 6)]);
        validate_plan(&inst, &plan).unwrap();
        let rendered = render_result(&inst, &plan).unwrap();
        assert_eq!(rendered.points(), inst.ideal().points());
    }

    #[test]
    fn identity_any_k_costs_zero() {
        let c = bumpy();
        for k in 0..=5 {
            let inst = RefitInstance::new(
                c.clone(),
                c.clone(),
                k,
                0.7,
                MatchConfig::default(),
                Mode::NoRearrangement,
            )
            .unwrap();
            let plan = solve_exact_k(&inst).unwrap().into_plan().unwrap();
            assert_eq!(plan.objective, 0.0, "k = {k}");
            assert_eq!(plan.cuts.len(), k);
        }
    }

    #[test]
    fn rejects_too_many_cuts_and_bad_delta() {
        let c = bumpy();
        let cfg = MatchConfig::default();
        assert!(
            RefitInstance::new(c.clone(), c.clone(), 6, 0.0, cfg, Mode::NoRearrangement).is_err()
        );
        assert!(
            RefitInstance::new(c.clone(), c.clone(), 1, -1.0, cfg, Mode::NoRearrangement).is_err()
        );
        assert!(RefitInstance::new(c.clone(), c, 1, f64::NAN, cfg, Mode::NoRearrangement).is_err());
    }

    #[test]
    fn too_few_ideal_points_is_infeasible() {
        let p = bumpy();
        let q = curve(&[(0.0, 0.0), (3.0, 1.0), (6.0, 0.0)]);
        let inst = RefitInstance::new(
            p,
            q,
            2,
            0.0,
            MatchConfig::new(1.0).unwrap(),
            Mode::NoRearrangement,
        )
        .unwrap();
        assert_eq!(solve_exact_k(&inst).unwrap(), Outcome::Infeasible);
    }

    #[test]
    fn gate_makes_everything_infeasible() {
        let p = bumpy();
        let q = curve(&[(0.0, 0.0), (30.0, 1.0), (60.0, 0.0), (90.0, 2.0)]);
        let inst = RefitInstance::new(
            p,
            q,
            1,
            0.0,
            MatchConfig::new(0.0).unwrap(),
            Mode::NoRearrangement,
        )
        .unwrap();
        assert_eq!(solve_exact_k(&inst).unwrap(), Outcome::Infeasible);
        assert_eq!(brute_force(&inst).unwrap(), Outcome::Infeasible);
    }

    #[test]
    fn sweep_series_is_non_increasing() {
        let p = bumpy();
        let q = curve(&[
            (0.0, 0.5),
            (1.2, 1.0),
            (2.0, 1.4),
            (2.9, 1.0),
            (4.1, 1.8),
            (5.0, 1.2),
            (6.2, 0.3),
        ]);
        let inst = RefitInstance::new(
            p,
            q,
            0,
            0.25,
            MatchConfig::new(1.0).unwrap(),
            Mode::NoRearrangement,
        )
        .unwrap();
        let rows = sweep(&inst, 5).unwrap();
        assert_eq!(rows.len(), 6);
        for w in rows.windows(2) {
            assert!(w[1].best_at_most <= w[0].best_at_most);
        }
        for row in &rows {
            let single = solve_exact_k(&inst.with_k(row.k).unwrap()).unwrap();
            assert_eq!(single, row.outcome);
        }
    }

    #[test]
    fn render_single_piece_is_alignment() {
        let p = bumpy();
        let q = curve(&[(0.0, 0.0), (2.0, 1.0), (5.0, 0.5), (7.0, 0.0)]);
        let inst = RefitInstance::new(
            p.clone(),
            q.clone(),
            0,
            0.0,
            MatchConfig::new(1.0).unwrap(),
            Mode::NoRearrangement,
        )
        .unwrap();
        let plan = solve_exact_k(&inst).unwrap().into_plan().unwrap();
        let rendered = render_result(&inst, &plan).unwrap();
        let (l, r) = plan.clamps[0];
        let want = align_endpoints(&p.to_polyline(), q.points()[l], q.points()[r]).unwrap();
        assert_eq!(rendered, want);
    }

    #[test]
    fn validate_plan_catches_tampering() {
        let p = bumpy();
        let q = curve(&[(0.0, 0.0), (2.0, 1.0), (4.0, 1.5), (5.0, 0.5), (7.0, 0.0)]);
        let inst = RefitInstance::new(
            p,
            q,
            1,
            0.5,
            MatchConfig::new(1.0).unwrap(),
            Mode::NoRearrangement,
        )
        .unwrap();
        let plan = solve_exact_k(&inst).unwrap().into_plan().unwrap();
        validate_plan(&inst, &plan).unwrap();

        let mut bad = plan.clone();
        bad.objective += 1.0;
        assert!(validate_plan(&inst, &bad).is_err());

        let mut bad = plan.clone();
        bad.clamps[1].0 = (bad.clamps[0].1 + 1).min(3);
        if bad.clamps[1].0 != plan.clamps[0].1 {
            assert!(validate_plan(&inst, &bad).is_err());
        }
    }
}
