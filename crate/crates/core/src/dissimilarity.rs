//! The match gate, the area dissimilarity `d(f, g)`, and the memoized cost
//! oracle over sub-curves of the deformed and ideal curves.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::iter::Sum;
use std::ops::Add;
use std::sync::atomic::{AtomicU64, Ordering};

use dashmap::DashMap;

use crate::error::{Error, Result};
use crate::geometry::{
    align_endpoints, area_between, chord_length, rotate_to_horizontal, FunctionCurve, Point2,
    Polyline, GEOM_EPS,
};

/// A non-negative cost, or the infinite sentinel for gated-out placements.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Cost(f64);

impl Cost {
    pub const ZERO: Cost = Cost(0.0);
    pub const INFINITY: Cost = Cost(f64::INFINITY);

    /// Panics on NaN or negative input.
    pub fn finite(value: f64) -> Cost {
        assert!(value >= 0.0 && value.is_finite(), "invalid cost {value}");
        Cost(value)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn as_finite(self) -> Option<f64> {
        self.is_finite().then_some(self.0)
    }
}

impl Add for Cost {
    type Output = Cost;
    #[inline]
    fn add(self, rhs: Cost) -> Cost {
        Cost(self.0 + rhs.0)
    }
}

impl Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Cost {
        iter.fold(Cost::ZERO, Add::add)
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_finite() {
            fmt::Display::fmt(&self.0, f)
        } else {
            f.write_str("inf")
        }
    }
}

/// Chord-ratio tolerance for the match gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchConfig {
    alpha: f64,
}

impl MatchConfig {
    pub const DEFAULT_ALPHA: f64 = 0.3;

    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Validation {
                field: "alpha".into(),
                message: format!("must lie in [0, 1], got {alpha}"),
            });
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The gate `1 - alpha <= chord_g / chord_f <= 1 + alpha`.
    #[inline]
    pub fn accepts(&self, chord_f: f64, chord_g: f64) -> bool {
        let ratio = chord_g / chord_f;
        ratio >= 1.0 - self.alpha && ratio <= 1.0 + self.alpha
    }
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            alpha: Self::DEFAULT_ALPHA,
        }
    }
}

pub fn matches(f: &Polyline, g: &Polyline, cfg: &MatchConfig) -> Result<bool> {
    let cf = chord_length(f);
    if cf < GEOM_EPS {
        return Err(Error::DegenerateCurve);
    }
    Ok(cfg.accepts(cf, chord_length(g)))
}

/// `d(f, g)`: infinite unless the chords match, otherwise the area between
/// `g` rotated level about its left end and `f` fitted onto that.
pub fn dissimilarity(f: &Polyline, g: &Polyline, cfg: &MatchConfig) -> Result<Cost> {
    if chord_length(g) < GEOM_EPS {
        return Err(Error::DegenerateCurve);
    }
    if !matches(f, g, cfg)? {
        return Ok(Cost::INFINITY);
    }
    let g_tilde = rotate_to_horizontal(g)?;
    let f_tilde = align_endpoints(f, g_tilde.first(), g_tilde.last())?;
    Ok(Cost(area_between(&f_tilde, &g_tilde)?))
}

/// Result of an evaluation that may stop early.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bounded {
    Cost(Cost),
    /// The area exceeded the caller's bound; the exact value was not computed.
    Exceeds,
}

/// Evaluates `c(i, j, l, r) = d(f|[P_i, P_j], g|[Q_l, Q_r])`.
///
/// When `l > r` the ideal span is traversed from `Q_l` down to `Q_r`, i.e.
/// the piece is placed flipped.
pub struct CostOracle {
    deformed: FunctionCurve,
    ideal: FunctionCurve,
    config: MatchConfig,
    // prefix sums of cross(z_t, z_{t+1}) for O(1) signed-area bounds
    cross_f: Vec<f64>,
    cross_g: Vec<f64>,
    // edge direction angles, for choosing a sweep axis
    angles_f: AngleRanges,
    angles_g: AngleRanges,
    memo: DashMap<u64, Cost>,
    evaluations: AtomicU64,
}

impl fmt::Debug for CostOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostOracle")
            .field("deformed", &self.deformed.len())
            .field("ideal", &self.ideal.len())
            .field("config", &self.config)
            .field("memo", &self.memo.len())
            .finish()
    }
}

/// Range minimum and maximum of edge angles via sparse tables.
struct AngleRanges {
    min: Vec<Vec<f64>>,
    max: Vec<Vec<f64>>,
}

impl AngleRanges {
    fn new(points: &[Point2]) -> Self {
        let base: Vec<f64> = points
            .windows(2)
            .map(|w| {
                let d = w[1] - w[0];
                d.y.atan2(d.x)
            })
            .collect();
        let mut min = vec![base.clone()];
        let mut max = vec![base];
        let mut width = 1;
        while 2 * width <= min[0].len() {
            let (lo, hi) = (min.last().unwrap(), max.last().unwrap());
            let len = lo.len() - width;
            let next_lo = (0..len).map(|i| lo[i].min(lo[i + width])).collect();
            let next_hi = (0..len).map(|i| hi[i].max(hi[i + width])).collect();
            min.push(next_lo);
            max.push(next_hi);
            width *= 2;
        }
        Self { min, max }
    }

    /// Smallest and largest angle among edges `a..b` (exclusive end).
    #[inline]
    fn range(&self, a: usize, b: usize) -> (f64, f64) {
        let level = (usize::BITS - 1 - (b - a).leading_zeros()) as usize;
        let w = 1 << level;
        (
            self.min[level][a].min(self.min[level][b - w]),
            self.max[level][a].max(self.max[level][b - w]),
        )
    }
}

/// Directions `phi` along which a chain with edge angles in `[lo, hi]` is
/// strictly monotone, as an open interval.
#[inline]
fn monotone_cone(lo: f64, hi: f64) -> (f64, f64) {
    (hi - FRAC_PI_2, lo + FRAC_PI_2)
}

/// Wraps an angle into `(-PI, PI]`.
#[inline]
fn wrap(a: f64) -> f64 {
    if a > PI {
        a - TAU
    } else if a <= -PI {
        a + TAU
    } else {
        a
    }
}

fn prefix_cross(points: &[Point2]) -> Vec<f64> {
    let mut out = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in points.windows(2) {
        acc += w[0].cross(w[1]);
        out.push(acc);
    }
    out
}

impl CostOracle {
    pub fn new(deformed: FunctionCurve, ideal: FunctionCurve, config: MatchConfig) -> Self {
        assert!(
            deformed.len() < u16::MAX as usize && ideal.len() < u16::MAX as usize,
            "curves longer than 65534 points are not supported"
        );
        Self {
            cross_f: prefix_cross(deformed.points()),
            cross_g: prefix_cross(ideal.points()),
            angles_f: AngleRanges::new(deformed.points()),
            angles_g: AngleRanges::new(ideal.points()),
            deformed,
            ideal,
            config,
            memo: DashMap::new(),
            evaluations: AtomicU64::new(0),
        }
    }

    pub fn deformed(&self) -> &FunctionCurve {
        &self.deformed
    }

    pub fn ideal(&self) -> &FunctionCurve {
        &self.ideal
    }

    pub fn config(&self) -> &MatchConfig {
        &self.config
    }

    /// Number of area computations performed so far (gated-out queries and
    /// memo hits do not count).
    pub fn geometry_evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    fn check(&self, i: usize, j: usize, l: usize, r: usize) -> Result<()> {
        let (n, m) = (self.deformed.len(), self.ideal.len());
        if i >= j || j >= n {
            return Err(Error::IndexOutOfRange(format!(
                "piece [{i}, {j}] on a {n}-point deformed curve"
            )));
        }
        if l == r || l >= m || r >= m {
            return Err(Error::IndexOutOfRange(format!(
                "span ({l}, {r}) on a {m}-point ideal curve"
            )));
        }
        Ok(())
    }

    /// Memoized cost of placing piece `[i, j]` on span `(l, r)`.
    pub fn query(&self, i: usize, j: usize, l: usize, r: usize) -> Result<Cost> {
        self.check(i, j, l, r)?;
        let key = (i as u64) << 48 | (j as u64) << 32 | (l as u64) << 16 | r as u64;
        if let Some(c) = self.memo.get(&key) {
            return Ok(*c);
        }
        let c = self.evaluate(i, j, l, r);
        self.memo.entry(key).or_insert(c);
        Ok(c)
    }

    /// Unmemoized cost; indices must satisfy the `query` preconditions.
    pub fn evaluate(&self, i: usize, j: usize, l: usize, r: usize) -> Cost {
        match self.evaluate_bounded(i, j, l, r, f64::INFINITY) {
            Bounded::Cost(c) => c,
            Bounded::Exceeds => unreachable!("unbounded evaluation cannot exceed"),
        }
    }

    #[inline]
    pub fn chord_f(&self, i: usize, j: usize) -> f64 {
        let p = self.deformed.points();
        p[i].dist(p[j])
    }

    #[inline]
    pub fn chord_g(&self, l: usize, r: usize) -> f64 {
        let q = self.ideal.points();
        q[l].dist(q[r])
    }

    #[inline]
    pub fn passes_gate(&self, i: usize, j: usize, l: usize, r: usize) -> bool {
        self.config.accepts(self.chord_f(i, j), self.chord_g(l, r))
    }

    /// A lower bound on the cost from the signed areas enclosed by each
    /// sub-curve and its chord. Only meaningful when the gate passes.
    pub fn lower_bound(&self, i: usize, j: usize, l: usize, r: usize) -> f64 {
        let p = self.deformed.points();
        let q = self.ideal.points();
        let cf = self.chord_f(i, j);
        let cg = self.chord_g(l, r);
        let s2 = (cg / cf) * (cg / cf);
        let xf = p[i].cross(p[j]);
        let xg = q[l].cross(q[r]);
        let sf = s2 * ((self.cross_f[j] - self.cross_f[i]) - xf);
        let sg = (self.cross_g[r] - self.cross_g[l]) - xg;
        let slack = 1e-12
            * (s2 * (self.cross_f[j].abs() + self.cross_f[i].abs() + xf.abs())
                + self.cross_g[r].abs()
                + self.cross_g[l].abs()
                + xg.abs())
            + 1e-12;
        (0.5 * (sf - sg).abs() - slack).max(0.0)
    }

    /// Like [`evaluate`](Self::evaluate) but may stop as soon as the area is
    /// known to exceed `bound`.
    pub fn evaluate_bounded(&self, i: usize, j: usize, l: usize, r: usize, bound: f64) -> Bounded {
        debug_assert!(self.check(i, j, l, r).is_ok());
        let p = &self.deformed.points()[i..=j];
        let q = self.ideal.points();
        let cf = self.chord_f(i, j);
        let cg = self.chord_g(l, r);
        if !self.config.accepts(cf, cg) {
            return Bounded::Cost(Cost::INFINITY);
        }
        self.evaluations.fetch_add(1, Ordering::Relaxed);

        // local frame: the ideal span's left clamp at the origin, its chord on +x
        let (f0, g0) = (p[0], q[l]);
        let df = p[p.len() - 1] - f0;
        let dg = q[r] - g0;
        let a = df.conj() * (cg / (cf * cf));
        let rho = dg.conj() * (1.0 / cg);

        // Both aligned curves are rotated function graphs. Sweep along an
        // axis in which both are monotone; prefer the chord direction.
        let (flo, fhi) = self.angles_f.range(i, j);
        let turn_f = -df.y.atan2(df.x);
        let (glo, ghi) = self.angles_g.range(l.min(r), l.max(r));
        let turn_g = -dg.y.atan2(dg.x) + if l < r { 0.0 } else { PI };
        let (f_lo, f_hi) = monotone_cone(flo + turn_f, fhi + turn_f);
        let (g_lo, g_hi) = monotone_cone(glo + turn_g, ghi + turn_g);
        // the cones are near zero; re-center the ideal's if it wrapped
        let shift = wrap(0.5 * (g_lo + g_hi)) - 0.5 * (g_lo + g_hi);
        let lo = f_lo.max(g_lo + shift);
        let hi = f_hi.min(g_hi + shift);
        let axis = if lo < 0.0 && 0.0 < hi {
            Some(Point2::new(1.0, 0.0))
        } else if hi - lo > 1e-9 {
            let phi = 0.5 * (lo + hi);
            Some(Point2::new(phi.cos(), -phi.sin()))
        } else {
            None
        };

        let end = Point2::new(cg, 0.0);
        let nf = p.len();
        let ng = l.abs_diff(r) + 1;
        let g_at = move |t: usize| {
            let z = if l < r { q[l + t] } else { q[l - t] };
            match t {
                0 => Point2::ORIGIN,
                _ if t == ng - 1 => end,
                _ => rho.cmul(z - g0),
            }
        };

        if let Some(u) = axis {
            let (a, rho) = (u.cmul(a), u.cmul(rho));
            let end = u.cmul(end);
            let f_axis = p.iter().enumerate().map(move |(t, &z)| match t {
                0 => Point2::ORIGIN,
                _ if t == nf - 1 => end,
                _ => a.cmul(z - f0),
            });
            let g_axis = (0..ng).map(move |t| {
                let z = if l < r { q[l + t] } else { q[l - t] };
                match t {
                    0 => Point2::ORIGIN,
                    _ if t == ng - 1 => end,
                    _ => rho.cmul(z - g0),
                }
            });
            match graph_area(f_axis, g_axis, bound) {
                Sweep::Area(v) => return Bounded::Cost(Cost(v)),
                Sweep::Exceeds => return Bounded::Exceeds,
                Sweep::NotGraphs => {}
            }
        }

        let ft = Polyline::from_vec_unchecked(f_local_vec(p, a, end));
        let gt = Polyline::from_vec_unchecked((0..ng).map(g_at).collect());
        let v = area_between(&ft, &gt).expect("aligned endpoints coincide");
        if v > bound {
            Bounded::Exceeds
        } else {
            Bounded::Cost(Cost(v))
        }
    }
}

fn f_local_vec(p: &[Point2], a: Point2, end: Point2) -> Vec<Point2> {
    let n = p.len();
    p.iter()
        .enumerate()
        .map(|(t, &z)| match t {
            0 => Point2::ORIGIN,
            _ if t == n - 1 => end,
            _ => a.cmul(z - p[0]),
        })
        .collect()
}

enum Sweep {
    Area(f64),
    Exceeds,
    NotGraphs,
}

/// `integral |f - g| dx` for two polylines that both run from the origin to
/// the same end point with strictly increasing x. Gives up with `NotGraphs` as soon as
/// either is not a function graph.
fn graph_area(
    mut f: impl Iterator<Item = Point2>,
    mut g: impl Iterator<Item = Point2>,
    bound: f64,
) -> Sweep {
    let (Some(mut fa), Some(mut ga)) = (f.next(), g.next()) else {
        return Sweep::NotGraphs;
    };
    let (Some(mut fb), Some(mut gb)) = (f.next(), g.next()) else {
        return Sweep::NotGraphs;
    };
    if fb.x <= fa.x || gb.x <= ga.x {
        return Sweep::NotGraphs;
    }
    let mut x = fa.x;
    let mut d = fa.y - ga.y; // f - g at x
    let mut total = 0.0;
    loop {
        let x_next = fb.x.min(gb.x);
        let yf = if x_next == fb.x {
            fb.y
        } else {
            fa.y + (fb.y - fa.y) * (x_next - fa.x) / (fb.x - fa.x)
        };
        let yg = if x_next == gb.x {
            gb.y
        } else {
            ga.y + (gb.y - ga.y) * (x_next - ga.x) / (gb.x - ga.x)
        };
        let d_next = yf - yg;
        let w = x_next - x;
        total += if (d < 0.0 && d_next > 0.0) || (d > 0.0 && d_next < 0.0) {
            w * (d * d + d_next * d_next) / (2.0 * (d.abs() + d_next.abs()))
        } else {
            0.5 * w * (d.abs() + d_next.abs())
        };
        if total > bound {
            return Sweep::Exceeds;
        }
        x = x_next;
        d = d_next;

        let f_done = x_next == fb.x;
        let g_done = x_next == gb.x;
        if f_done {
            match f.next() {
                Some(nb) if nb.x > fb.x => {
                    fa = fb;
                    fb = nb;
                }
                Some(_) => return Sweep::NotGraphs,
                None => {
                    // f has ended at (c, 0); g must end there too
                    return if g_done && g.next().is_none() {
                        Sweep::Area(total)
                    } else {
                        Sweep::NotGraphs
                    };
                }
            }
        }
        if g_done {
            match g.next() {
                Some(nb) if nb.x > gb.x => {
                    ga = gb;
                    gb = nb;
                }
                Some(_) => return Sweep::NotGraphs,
                None => return Sweep::NotGraphs,
            }
        }
    }
}
