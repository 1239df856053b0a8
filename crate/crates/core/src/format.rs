//! Case and plan files.
//!
//! Both are JSON documents tagged with `formatVersion` "1". Numbers are
//! written in shortest round-trip form, so coordinates and costs reload
//! bit for bit. Ids are content hashes: a case id hashes the curves and
//! metadata, a plan id hashes its case id and solve parameters.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dissimilarity::{Cost, MatchConfig};
use crate::error::{Error, Result};
use crate::geometry::{FunctionCurve, Point2};
use crate::rearrange::brute_force_rearrangement;
use crate::solver::{
    solve_exact_k, sweep_with, uncovered_intervals, Mode, Outcome, RefitInstance, RefitPlan,
};
use crate::synth::{Bucket, SynthCase};

pub const FORMAT_VERSION: &str = "1";

/// Free-form case description. Unknown keys are kept as they are.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bucket: Option<Bucket>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_units")]
    pub units: String,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

fn default_units() -> String {
    "mm".into()
}

impl Default for CaseMetadata {
    fn default() -> Self {
        Self {
            bucket: None,
            seed: None,
            units: default_units(),
            extra: BTreeMap::new(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CaseDoc {
    format_version: String,
    deformed: Vec<Point2>,
    ideal: Vec<Point2>,
    #[serde(default)]
    metadata: CaseMetadata,
}

/// A validated case: a deformed curve, its ideal, and metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub deformed: FunctionCurve,
    pub ideal: FunctionCurve,
    pub metadata: CaseMetadata,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct VersionProbe {
    format_version: Option<serde_json::Value>,
}

fn parse_error(context: &str, e: serde_json::Error) -> Error {
    Error::Parse {
        context: format!("{context} (line {}, column {})", e.line(), e.column()),
        message: e.to_string(),
    }
}

/// Rejects documents whose `formatVersion` is missing or unknown before
/// looking at anything else.
fn check_version(text: &str, context: &str) -> Result<()> {
    let probe: VersionProbe = serde_json::from_str(text).map_err(|e| parse_error(context, e))?;
    match probe.format_version {
        Some(serde_json::Value::String(v)) if v == FORMAT_VERSION => Ok(()),
        Some(serde_json::Value::String(v)) => Err(Error::UnsupportedVersion(v)),
        Some(other) => Err(Error::UnsupportedVersion(other.to_string())),
        None => Err(Error::Validation {
            field: "formatVersion".into(),
            message: "missing".into(),
        }),
    }
}

fn curve_field(field: &str, points: Vec<Point2>) -> Result<FunctionCurve> {
    FunctionCurve::new(points).map_err(|e| Error::Validation {
        field: field.into(),
        message: e.to_string(),
    })
}

fn hash_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(&h.finalize()[..16])
}

impl Case {
    pub fn new(deformed: FunctionCurve, ideal: FunctionCurve, metadata: CaseMetadata) -> Self {
        Self {
            deformed,
            ideal,
            metadata,
        }
    }

    pub fn from_synth(case: &SynthCase) -> Self {
        Self::new(
            case.deformed.clone(),
            case.ideal.clone(),
            CaseMetadata {
                bucket: Some(case.spec.bucket),
                seed: Some(case.spec.seed),
                units: default_units(),
                extra: BTreeMap::new(),
            },
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        check_version(text, "case")?;
        let doc: CaseDoc = serde_json::from_str(text).map_err(|e| parse_error("case", e))?;
        Ok(Self {
            deformed: curve_field("deformed", doc.deformed)?,
            ideal: curve_field("ideal", doc.ideal)?,
            metadata: doc.metadata,
        })
    }

    pub fn to_json(&self) -> String {
        let doc = CaseDoc {
            format_version: FORMAT_VERSION.into(),
            deformed: self.deformed.points().to_vec(),
            ideal: self.ideal.points().to_vec(),
            metadata: self.metadata.clone(),
        };
        serde_json::to_string(&doc).expect("case serializes")
    }

    /// Content hash of the case document.
    pub fn id(&self) -> String {
        hash_hex(&[self.to_json().as_bytes()])
    }

    pub fn instance(&self, params: &SolveParams) -> Result<RefitInstance> {
        params.validate()?;
        RefitInstance::new(
            self.deformed.clone(),
            self.ideal.clone(),
            params.k,
            params.delta,
            MatchConfig::new(params.alpha)?,
            params.mode,
        )
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("file");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(io)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_case(path: &Path) -> Result<Case> {
    Case::from_json(&read(path)?)
}

pub fn save_case(case: &Case, path: &Path) -> Result<()> {
    write_atomic(path, case.to_json().as_bytes())
}

/// Parameters of a single solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveParams {
    pub k: usize,
    pub delta: f64,
    pub alpha: f64,
    #[serde(default)]
    pub mode: Mode,
}

impl SolveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::Validation {
                field: "delta".into(),
                message: format!("must be a finite value >= 0, got {}", self.delta),
            });
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Validation {
                field: "alpha".into(),
                message: format!("must lie in [0, 1], got {}", self.alpha),
            });
        }
        Ok(())
    }

    fn canonical(&self) -> String {
        serde_json::to_string(self).expect("params serialize")
    }
}

/// A solved plan as stored and exchanged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PlanFile {
    pub format_version: String,
    pub id: String,
    pub case_id: String,
    pub params: SolveParams,
    /// Deformed-curve indices of the cuts.
    pub cuts: Vec<usize>,
    pub cut_points: Vec<Point2>,
    /// Ideal-curve index pairs, one per piece; left above right means flipped.
    pub clamps: Vec<(usize, usize)>,
    pub clamp_points: Vec<(Point2, Point2)>,
    pub piece_costs: Vec<f64>,
    pub uncovered: usize,
    pub objective: f64,
    pub solve_millis: f64,
}

/// Plan id for solving `case_id` with `params`.
pub fn plan_id(case_id: &str, params: &SolveParams) -> String {
    hash_hex(&[case_id.as_bytes(), params.canonical().as_bytes()])
}

impl PlanFile {
    pub fn new(case: &Case, params: SolveParams, plan: &RefitPlan, solve_millis: f64) -> Self {
        let case_id = case.id();
        let (p, q) = (case.deformed.points(), case.ideal.points());
        Self {
            format_version: FORMAT_VERSION.into(),
            id: plan_id(&case_id, &params),
            case_id,
            params,
            cut_points: plan.cuts.iter().map(|&c| p[c]).collect(),
            cuts: plan.cuts.clone(),
            clamp_points: plan.clamps.iter().map(|&(l, r)| (q[l], q[r])).collect(),
            clamps: plan.clamps.clone(),
            piece_costs: plan.piece_costs.clone(),
            uncovered: plan.uncovered,
            objective: plan.objective,
            solve_millis,
        }
    }

    pub fn to_refit_plan(&self) -> RefitPlan {
        RefitPlan {
            cuts: self.cuts.clone(),
            clamps: self.clamps.clone(),
            piece_costs: self.piece_costs.clone(),
            uncovered: self.uncovered,
            objective: self.objective,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        check_version(text, "plan")?;
        let plan: PlanFile = serde_json::from_str(text).map_err(|e| parse_error("plan", e))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plan serializes")
    }

    /// Internal consistency: counts match `k` and the objective is the sum
    /// of its parts.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| Error::Validation {
            field: field.into(),
            message,
        };
        self.params.validate()?;
        let k = self.params.k;
        if self.cuts.len() != k || self.cut_points.len() != k {
            return Err(bad("cuts", format!("expected {k} cuts")));
        }
        if let Some(i) = self.cuts.windows(2).position(|w| w[0] >= w[1]) {
            return Err(bad("cuts", format!("cut {} is not above cut {i}", i + 1)));
        }
        if self.clamps.len() != k + 1 || self.clamp_points.len() != k + 1 {
            return Err(bad("clamps", format!("expected {} clamp pairs", k + 1)));
        }
        if let Some(i) = self.clamps.iter().position(|&(l, r)| l == r) {
            return Err(bad("clamps", format!("clamp pair {i} is empty")));
        }
        if self.params.mode == Mode::NoRearrangement {
            if let Some(i) = self.clamps.iter().position(|&(l, r)| l > r) {
                return Err(bad("clamps", format!("clamp pair {i} is reversed")));
            }
            if let Some(i) = self.clamps.windows(2).position(|w| w[0].1 != w[1].0) {
                return Err(bad(
                    "clamps",
                    format!("clamp pairs {i} and {} do not meet", i + 1),
                ));
            }
        }
        if self.piece_costs.len() != k + 1 {
            return Err(bad("pieceCosts", format!("expected {} costs", k + 1)));
        }
        if let Some(i) = self
            .piece_costs
            .iter()
            .position(|c| !(c.is_finite() && *c >= 0.0))
        {
            return Err(bad(
                "pieceCosts",
                format!("cost {i} is not a finite value >= 0"),
            ));
        }
        let total =
            self.piece_costs.iter().sum::<f64>() + self.params.delta * self.uncovered as f64;
        if (total - self.objective).abs() > 1e-9 * total.abs().max(1.0) {
            return Err(bad(
                "objective",
                format!("{} differs from the recomputed {total}", self.objective),
            ));
        }
        Ok(())
    }

    /// Consistency against the case it claims to solve.
    pub fn validate_for(&self, case: &Case) -> Result<()> {
        self.validate()?;
        let bad = |field: &str, message: String| Error::Validation {
            field: field.into(),
            message,
        };
        if self.case_id != case.id() {
            return Err(bad("caseId", "does not match the case".into()));
        }
        let (p, q) = (case.deformed.points(), case.ideal.points());
        for (i, (&c, &pt)) in self.cuts.iter().zip(&self.cut_points).enumerate() {
            if c == 0 || c + 1 >= p.len() || p[c] != pt {
                return Err(bad(
                    "cuts",
                    format!("cut {i} does not name an interior deformed point"),
                ));
            }
        }
        for (i, (&(l, r), &(pl, pr))) in self.clamps.iter().zip(&self.clamp_points).enumerate() {
            if l >= q.len() || r >= q.len() || q[l] != pl || q[r] != pr {
                return Err(bad(
                    "clamps",
                    format!("clamp pair {i} does not name ideal points"),
                ));
            }
        }
        let uncovered = uncovered_intervals(q.len(), &self.clamps);
        if uncovered != self.uncovered {
            return Err(bad(
                "uncovered",
                format!("{} stored, {uncovered} recomputed", self.uncovered),
            ));
        }
        Ok(())
    }
}

pub fn load_plan(path: &Path) -> Result<PlanFile> {
    PlanFile::from_json(&read(path)?)
}

pub fn save_plan(plan: &PlanFile, path: &Path) -> Result<()> {
    write_atomic(path, plan.to_json().as_bytes())
}

/// Result of solving a case: a plan, or no plan of finite cost.
#[derive(Clone, Debug, PartialEq)]
pub enum Solved {
    Plan(PlanFile),
    Infeasible {
        case_id: String,
        params: SolveParams,
    },
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Solves a case with exactly `params.k` cuts. The rearrangement mode runs
/// the exhaustive search and is limited to tiny cases.
pub fn solve_case(case: &Case, params: SolveParams) -> Result<Solved> {
    let inst = case.instance(&params)?;
    let start = Instant::now();
    let outcome = match params.mode {
        Mode::NoRearrangement => solve_exact_k(&inst)?,
        Mode::Rearrangement => brute_force_rearrangement(&inst)?,
    };
    let ms = millis(start);
    Ok(match outcome {
        Outcome::Optimal(plan) => Solved::Plan(PlanFile::new(case, params, &plan, ms)),
        Outcome::Infeasible => Solved::Infeasible {
            case_id: case.id(),
            params,
        },
    })
}

/// Parameters of a sweep over cut counts `0..=kmax`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepParams {
    pub kmax: usize,
    pub delta: f64,
    pub alpha: f64,
    #[serde(default)]
    pub mode: Mode,
}

impl SweepParams {
    pub fn at(&self, k: usize) -> SolveParams {
        SolveParams {
            k,
            delta: self.delta,
            alpha: self.alpha,
            mode: self.mode,
        }
    }
}

/// One streamed sweep row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRecord {
    pub k: usize,
    pub feasible: bool,
    /// Objective with exactly `k` cuts; absent when infeasible.
    pub objective: Option<f64>,
    /// Best objective with at most `k` cuts; absent while none is finite.
    pub best_at_most: Option<f64>,
    pub plan: Option<PlanFile>,
}

/// Solves every cut count up to `kmax`, handing rows to `emit` in order of
/// `k`. Cut counts the deformed curve cannot hold are reported infeasible.
pub fn sweep_case(
    case: &Case,
    params: SweepParams,
    mut emit: impl FnMut(SweepRecord),
) -> Result<()> {
    let max_cuts = case.deformed.len() - 2;
    let solvable = params.kmax.min(max_cuts);
    let mut best = Cost::INFINITY;
    let mut push = |k: usize, plan: Option<PlanFile>, emit: &mut dyn FnMut(SweepRecord)| {
        let objective = plan
            .as_ref()
            .map(|p| Cost::finite(p.objective))
            .unwrap_or(Cost::INFINITY);
        if objective < best {
            best = objective;
        }
        emit(SweepRecord {
            k,
            feasible: plan.is_some(),
            objective: objective.as_finite(),
            best_at_most: best.as_finite(),
            plan,
        });
    };
    match params.mode {
        Mode::NoRearrangement => {
            let inst = case.instance(&params.at(solvable))?;
            let start = Instant::now();
            let mut rows = Vec::with_capacity(solvable + 1);
            sweep_with(&inst, solvable, |e| rows.push(e))?;
            let ms = millis(start);
            for e in rows {
                let plan = e
                    .outcome
                    .plan()
                    .map(|p| PlanFile::new(case, params.at(e.k), p, ms));
                push(e.k, plan, &mut emit);
            }
        }
        Mode::Rearrangement => {
            for k in 0..=solvable {
                let plan = match solve_case(case, params.at(k))? {
                    Solved::Plan(p) => Some(p),
                    Solved::Infeasible { .. } => None,
                };
                push(k, plan, &mut emit);
            }
        }
    }
    for k in solvable + 1..=params.kmax {
        push(k, None, &mut emit);
    }
    Ok(())
}
