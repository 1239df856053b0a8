//! Synthetic deformed curves built from power-law pieces, the parabolic
//! ideal stand-in, and seeded generators for the three case buckets.
//!
//! Randomness comes from xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`). Reals are drawn as 53-bit
//! mantissas scaled onto the interval; integer choices go through `rand`'s
//! uniform integer sampler (widening multiply with rejection).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FunctionCurve, Point2};

pub const DEFAULT_SAMPLES: usize = 200;

/// Endpoint used by the metopic and sagittal buckets.
pub const CRANIAL_END: Point2 = Point2::new(49.3, 48.7);
/// Endpoint used by the extreme bucket.
pub const EXTREME_END: Point2 = Point2::new(50.0, 50.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bucket {
    Metopic,
    Sagittal,
    Extreme,
}

impl Bucket {
    pub const ALL: [Bucket; 3] = [Bucket::Metopic, Bucket::Sagittal, Bucket::Extreme];

    pub fn as_str(self) -> &'static str {
        match self {
            Bucket::Metopic => "metopic",
            Bucket::Sagittal => "sagittal",
            Bucket::Extreme => "extreme",
        }
    }

    /// Number of cases in the reference suite.
    pub fn suite_size(self) -> usize {
        match self {
            Bucket::Metopic | Bucket::Sagittal => 24,
            Bucket::Extreme => 20,
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Bucket {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "metopic" => Ok(Bucket::Metopic),
            "sagittal" => Ok(Bucket::Sagittal),
            "extreme" => Ok(Bucket::Extreme),
            _ => Err(Error::Validation {
                field: "bucket".into(),
                message: format!("expected metopic, sagittal or extreme, got {s:?}"),
            }),
        }
    }
}

/// A rational exponent `num / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Degree {
    num: i32,
    den: u32,
}

impl Degree {
    pub fn new(num: i32, den: u32) -> Result<Self> {
        if den == 0 {
            return Err(Error::Validation {
                field: "degree".into(),
                message: "zero denominator".into(),
            });
        }
        Ok(Self { num, den })
    }

    pub const fn int(d: i32) -> Self {
        Self { num: d, den: 1 }
    }

    pub fn is_integer(self) -> bool {
        self.num % self.den as i32 == 0
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `x^d`; fractional degrees need `x >= 0`.
    pub fn pow(self, x: f64) -> Result<f64> {
        if self.is_integer() {
            Ok(x.powi(self.num / self.den as i32))
        } else if x >= 0.0 {
            Ok(x.powf(self.as_f64()))
        } else {
            Err(Error::Validation {
                field: "degree".into(),
                message: format!(
                    "fractional degree {}/{} at negative x = {x}",
                    self.num, self.den
                ),
            })
        }
    }
}

/// `y = a x^d + b` on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerPiece {
    pub a: f64,
    pub b: f64,
    pub d: Degree,
    pub lo: f64,
    pub hi: f64,
}

impl PowerPiece {
    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.a * self.d.pow(x)? + self.b)
    }
}

/// The power piece through `p0` and `p1`.
pub fn fit_piece(p0: Point2, p1: Point2, d: Degree) -> Result<PowerPiece> {
    if p0.x >= p1.x {
        return Err(Error::InvalidCurve(format!(
            "piece endpoints must increase in x ({} >= {})",
            p0.x, p1.x
        )));
    }
    let (u0, u1) = (d.pow(p0.x)?, d.pow(p1.x)?);
    let den = u1 - u0;
    if den == 0.0 {
        return Err(Error::DegeneratePiece);
    }
    let a = (p1.y - p0.y) / den;
    Ok(PowerPiece {
        a,
        b: p0.y - a * u0,
        d,
        lo: p0.x,
        hi: p1.x,
    })
}

/// Split points `L`, one degree per gap, and the discretization size.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub points: Vec<Point2>,
    pub degrees: Vec<Degree>,
    pub bucket: Bucket,
    pub seed: u64,
    pub n_samples: usize,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| Error::Validation {
            field: "spec".into(),
            message,
        };
        if self.points.len() < 2 || self.degrees.len() + 1 != self.points.len() {
            return Err(bad(format!(
                "{} split points need {} degrees, got {}",
                self.points.len(),
                self.points.len().saturating_sub(1),
                self.degrees.len()
            )));
        }
        if self.points.windows(2).any(|w| w[0].x >= w[1].x) {
            return Err(bad("split points must increase in x".into()));
        }
        if !self.points.contains(&Point2::ORIGIN) {
            return Err(bad("split points must contain the origin".into()));
        }
        let (first, last) = (self.points[0], self.points[self.points.len() - 1]);
        if first != Point2::new(-last.x, last.y) {
            return Err(bad("end points must mirror each other".into()));
        }
        if self.n_samples < 2 {
            return Err(bad("at least 2 samples are needed".into()));
        }
        Ok(())
    }

    pub fn pieces(&self) -> Result<Vec<PowerPiece>> {
        self.validate()?;
        self.points
            .windows(2)
            .zip(&self.degrees)
            .map(|(w, &d)| fit_piece(w[0], w[1], d))
            .collect()
    }
}

/// Evaluates a fitted piecewise curve.
pub fn eval_pieces(pieces: &[PowerPiece], x: f64) -> Result<f64> {
    let (lo, hi) = (pieces[0].lo, pieces[pieces.len() - 1].hi);
    if !(lo..=hi).contains(&x) {
        return Err(Error::OutOfDomain { x, lo, hi });
    }
    let i = pieces.partition_point(|p| p.hi < x).min(pieces.len() - 1);
    pieces[i].eval(x)
}

/// `n` x-values evenly spaced on `[lo, hi]`, mirror-exact when `lo = -hi`.
fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let span = (n - 1) as f64;
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => mid + half * ((2 * i) as f64 - span) / span,
        })
        .collect()
}

/// Samples the spec's curve at `n_samples` evenly spaced x-values.
pub fn build_synthetic_curve(spec: &SynthSpec) -> Result<FunctionCurve> {
    let pieces = spec.pieces()?;
    let (lo, hi) = (spec.points[0].x, spec.points[spec.points.len() - 1].x);
    let points = uniform_grid(lo, hi, spec.n_samples)
        .into_iter()
        .map(|x| Ok(Point2::new(x, eval_pieces(&pieces, x)?)))
        .collect::<Result<Vec<_>>>()?;
    FunctionCurve::new(points)
}

/// The parabola `y = a x^2 + b x` through the origin and both end points of
/// `deformed`, sampled at [`DEFAULT_SAMPLES`] evenly spaced x-values with the
/// origin inserted when the grid misses it.
pub fn ideal_for(deformed: &FunctionCurve) -> Result<FunctionCurve> {
    ideal_with_samples(deformed, DEFAULT_SAMPLES)
}

pub fn ideal_with_samples(deformed: &FunctionCurve, n: usize) -> Result<FunctionCurve> {
    let pts = deformed.points();
    let (l, r) = (pts[0], pts[pts.len() - 1]);
    if l.x == 0.0 || r.x == 0.0 || !(l.x < 0.0 && r.x > 0.0) {
        return Err(Error::InvalidCurve(format!(
            "the ideal stand-in needs end points on both sides of x = 0, got x = {} and {}",
            l.x, r.x
        )));
    }
    // solve a x^2 + b x = y at both ends
    let det = l.x * r.x * (l.x - r.x);
    let a = (l.y * r.x - r.y * l.x) / det;
    let b = (r.y * l.x * l.x - l.y * r.x * r.x) / det;
    let mut points: Vec<Point2> = uniform_grid(l.x, r.x, n.max(2))
        .into_iter()
        .map(|x| Point2::new(x, (a * x + b) * x))
        .collect();
    let last = points.len() - 1;
    points[0] = l;
    points[last] = r;
    let at = points.partition_point(|p| p.x < 0.0);
    if points[at].x != 0.0 {
        points.insert(at, Point2::ORIGIN);
    } else {
        points[at].y = 0.0;
    }
    FunctionCurve::new(points)
}

/// Height of the ideal stand-in parabola at `x` for end points `(±x0, y0)`.
pub fn ideal_height(end: Point2, x: f64) -> f64 {
    end.y / (end.x * end.x) * x * x
}

fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn choose(rng: &mut impl Rng, options: &[i32]) -> Degree {
    Degree::int(options[rng.random_range(0..options.len())])
}

fn mirrored(end: Point2, inner: &[Point2], degrees: &[Degree]) -> (Vec<Point2>, Vec<Degree>) {
    let mut points = vec![Point2::new(-end.x, end.y)];
    points.extend(inner.iter().rev().map(|p| Point2::new(-p.x, p.y)));
    points.push(Point2::ORIGIN);
    points.extend_from_slice(inner);
    points.push(end);
    let mut ds: Vec<Degree> = degrees.iter().rev().copied().collect();
    ds.extend_from_slice(degrees);
    (points, ds)
}

/// One split point and two degrees, mirrored about the y-axis.
fn two_region(
    bucket: Bucket,
    seed: u64,
    xs: (f64, f64),
    ys: (f64, f64),
    d1: &[i32],
    d2: &[i32],
    accept: impl Fn(Point2) -> bool,
) -> SynthSpec {
    let mut r = rng(seed);
    loop {
        let split = Point2::new(uniform(&mut r, xs.0, xs.1), uniform(&mut r, ys.0, ys.1));
        let (a, b) = (choose(&mut r, d1), choose(&mut r, d2));
        if !accept(split) {
            continue;
        }
        let (points, degrees) = mirrored(CRANIAL_END, &[split], &[a, b]);
        let spec = SynthSpec {
            points,
            degrees,
            bucket,
            seed,
            n_samples: DEFAULT_SAMPLES,
        };
        if spec.pieces().is_ok() {
            return spec;
        }
    }
}

/// Split point in `[12.5, 25] x [2, 20]` above the ideal; degrees
/// `d1 in {1, 2}` next to the origin, `d2 in {2, 3}` outside.
pub fn gen_metopic(seed: u64) -> SynthSpec {
    two_region(
        Bucket::Metopic,
        seed,
        (12.5, 25.0),
        (2.0, 20.0),
        &[1, 2],
        &[2, 3],
        |p| p.y > ideal_height(CRANIAL_END, p.x),
    )
}

/// Split point in `[27, 55] x [0.5, 2]` below the ideal and inside the end
/// points; degrees `d1 in {1, 2}`, `d2 in {2, 4}`.
pub fn gen_sagittal(seed: u64) -> SynthSpec {
    two_region(
        Bucket::Sagittal,
        seed,
        (27.0, 55.0),
        (0.5, 2.0),
        &[1, 2],
        &[2, 4],
        |p| p.x < CRANIAL_END.x && p.y < ideal_height(CRANIAL_END, p.x),
    )
}

/// Five split points in `[1, 49]^2` sorted by x, six degrees in `1..=4`,
/// end points `(±50, 50)`.
pub fn gen_extreme(seed: u64) -> SynthSpec {
    let mut r = rng(seed);
    loop {
        let mut inner: Vec<Point2> = (0..5)
            .map(|_| Point2::new(uniform(&mut r, 1.0, 49.0), uniform(&mut r, 1.0, 49.0)))
            .collect();
        let degrees: Vec<Degree> = (0..6).map(|_| choose(&mut r, &[1, 2, 3, 4])).collect();
        inner.sort_by(|a, b| a.x.total_cmp(&b.x));
        if inner.windows(2).any(|w| w[0].x == w[1].x) {
            continue;
        }
        let (points, degrees) = mirrored(EXTREME_END, &inner, &degrees);
        let spec = SynthSpec {
            points,
            degrees,
            bucket: Bucket::Extreme,
            seed,
            n_samples: DEFAULT_SAMPLES,
        };
        if spec.pieces().is_ok() {
            return spec;
        }
    }
}

pub fn gen_spec(bucket: Bucket, seed: u64) -> SynthSpec {
    match bucket {
        Bucket::Metopic => gen_metopic(seed),
        Bucket::Sagittal => gen_sagittal(seed),
        Bucket::Extreme => gen_extreme(seed),
    }
}

/// A generated deformed curve with its ideal stand-in.
#[derive(Clone, Debug)]
pub struct SynthCase {
    pub spec: SynthSpec,
    pub deformed: FunctionCurve,
    pub ideal: FunctionCurve,
}

pub fn synth_case(bucket: Bucket, seed: u64) -> Result<SynthCase> {
    let spec = gen_spec(bucket, seed);
    let deformed = build_synthetic_curve(&spec)?;
    let ideal = ideal_for(&deformed)?;
    Ok(SynthCase {
        spec,
        deformed,
        ideal,
    })
}

/// `count` cases of a bucket; case `i` uses seed `seed + i`.
pub fn synth_bucket(bucket: Bucket, seed: u64, count: usize) -> Result<Vec<SynthCase>> {
    (0..count as u64)
        .map(|i| synth_case(bucket, seed.wrapping_add(i)))
        .collect()
}
