//! Planar primitives for piecewise-linear curves.
//!
//! Everything here works in millimetres with double precision. Predicates
//! (endpoint coincidence, segment contact) use the absolute tolerance
//! [`GEOM_EPS`].

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for geometric predicates, in millimetres.
pub const GEOM_EPS: f64 = 1e-9;

/// A point in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    #[inline]
    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Complex product, treating points as `x + iy`.
    #[inline]
    pub(crate) fn cmul(self, other: Point2) -> Point2 {
        Point2::new(
            self.x * other.x - self.y * other.y,
            self.x * other.y + self.y * other.x,
        )
    }

    #[inline]
    pub(crate) fn conj(self) -> Point2 {
        Point2::new(self.x, -self.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Point2::new(x, y)
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    #[inline]
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// An ordered open chain of at least two points.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    points: Vec<Point2>,
}

impl Polyline {
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidCurve(format!(
                "a polyline needs at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidCurve(format!("point {i} is not finite")));
        }
        if let Some(i) = points.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::InvalidCurve(format!(
                "points {i} and {} are identical",
                i + 1
            )));
        }
        Ok(Self { points })
    }

    pub(crate) fn from_vec_unchecked(points: Vec<Point2>) -> Self {
        debug_assert!(points.len() >= 2);
        Self { points }
    }

    #[inline]
    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point2> {
        self.points
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn first(&self) -> Point2 {
        self.points[0]
    }

    #[inline]
    pub fn last(&self) -> Point2 {
        self.points[self.points.len() - 1]
    }

    pub fn chord_length(&self) -> f64 {
        chord_length(self)
    }

    pub fn reversed(&self) -> Polyline {
        let mut points = self.points.clone();
        points.reverse();
        Polyline { points }
    }

    /// Applies `p -> translate + rot * p` (complex product) to every point.
    pub fn map_similarity(&self, rot: Point2, translate: Point2) -> Polyline {
        Polyline {
            points: self
                .points
                .iter()
                .map(|&p| translate + rot.cmul(p))
                .collect(),
        }
    }
}

/// The graph of a piecewise-linear function: strictly increasing x.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionCurve {
    points: Vec<Point2>,
}

impl FunctionCurve {
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidCurve(format!(
                "a function curve needs at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidCurve(format!("point {i} is not finite")));
        }
        if let Some(i) = points.windows(2).position(|w| w[1].x <= w[0].x) {
            return Err(Error::InvalidCurve(format!(
                "x-coordinates must be strictly increasing (index {})",
                i + 1
            )));
        }
        Ok(Self { points })
    }

    #[inline]
    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// The discretization: x-coordinates of the breakpoints.
    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.x)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.points[0].x, self.points[self.points.len() - 1].x)
    }

    /// Piecewise-linear interpolation at `x`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&x) {
            return Err(Error::OutOfDomain { x, lo, hi });
        }
        // first index whose x is >= the query
        let i = self.points.partition_point(|p| p.x < x);
        let b = self.points[i];
        if b.x == x || i == 0 {
            return Ok(b.y);
        }
        let a = self.points[i - 1];
        Ok(a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x))
    }

    pub fn to_polyline(&self) -> Polyline {
        Polyline::from_vec_unchecked(self.points.clone())
    }

    /// The sub-curve between breakpoints `i` and `j` (inclusive), in index
    /// order. When `i > j` the result runs backwards.
    pub fn sub_polyline(&self, i: usize, j: usize) -> Result<Polyline> {
        let n = self.points.len();
        if i >= n || j >= n || i == j {
            return Err(Error::IndexOutOfRange(format!(
                "sub-curve [{i}, {j}] of a {n}-point curve"
            )));
        }
        let points = if i < j {
            self.points[i..=j].to_vec()
        } else {
            self.points[j..=i].iter().rev().copied().collect()
        };
        Ok(Polyline::from_vec_unchecked(points))
    }
}

/// A closed, non-self-intersecting loop of vertices (last connects to first).
#[derive(Clone, Debug, PartialEq)]
pub struct SimplePolygon {
    vertices: Vec<Point2>,
}

impl SimplePolygon {
    /// Checks simplicity with a quadratic pairwise edge test.
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        let poly = Self { vertices };
        if poly.vertices.len() < 3 {
            return Err(Error::InvalidCurve("a polygon needs 3 vertices".into()));
        }
        if !poly.is_simple() {
            return Err(Error::InvalidCurve("polygon edges intersect".into()));
        }
        Ok(poly)
    }

    pub(crate) fn from_loop_unchecked(vertices: Vec<Point2>) -> Self {
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        shoelace_area(self)
    }

    /// True when no two non-adjacent edges touch and adjacent edges meet
    /// only at their shared vertex.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let edge = |i: usize| (self.vertices[i], self.vertices[(i + 1) % n]);
        for i in 0..n {
            for j in i + 1..n {
                let (a0, a1) = edge(i);
                let (b0, b1) = edge(j);
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                for c in segment_contacts(a0, a1, b0, b1) {
                    if !adjacent {
                        return false;
                    }
                    // adjacent edges may only share their common vertex
                    let shared = if j == i + 1 { a1 } else { a0 };
                    if c.point.dist(shared) > GEOM_EPS {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Euclidean distance between the first and last points.
pub fn chord_length(p: &Polyline) -> f64 {
    p.first().dist(p.last())
}

/// Rotates `g` rigidly about its first point so the last point lands at
/// `(first.x + chord, first.y)`.
pub fn rotate_to_horizontal(g: &Polyline) -> Result<Polyline> {
    let origin = g.first();
    let d = g.last() - origin;
    let chord = d.norm();
    if chord < GEOM_EPS {
        return Err(Error::DegenerateCurve);
    }
    let rot = d.conj() * (1.0 / chord);
    let n = g.len();
    let points = g
        .points()
        .iter()
        .enumerate()
        .map(|(k, &p)| match k {
            0 => origin,
            _ if k == n - 1 => Point2::new(origin.x + chord, origin.y),
            _ => origin + rot.cmul(p - origin),
        })
        .collect();
    Ok(Polyline::from_vec_unchecked(points))
}

/// Maps `f` by the orientation-preserving similarity that sends its first
/// point to `target_l` and its last point to `target_r`.
pub fn align_endpoints(f: &Polyline, target_l: Point2, target_r: Point2) -> Result<Polyline> {
    let origin = f.first();
    let df = f.last() - origin;
    let len2 = df.dot(df);
    if len2.sqrt() < GEOM_EPS {
        return Err(Error::DegenerateAlignment("source chord has zero length"));
    }
    let dt = target_r - target_l;
    if dt.norm() < GEOM_EPS {
        return Err(Error::DegenerateAlignment("target endpoints coincide"));
    }
    // complex quotient dt / df
    let a = dt.cmul(df.conj()) * (1.0 / len2);
    let n = f.len();
    let points = f
        .points()
        .iter()
        .enumerate()
        .map(|(k, &p)| match k {
            0 => target_l,
            _ if k == n - 1 => target_r,
            _ => target_l + a.cmul(p - origin),
        })
        .collect();
    Ok(Polyline::from_vec_unchecked(points))
}

/// Absolute area of a polygon by the shoelace formula.
pub fn shoelace_area(p: &SimplePolygon) -> f64 {
    loop_signed_area(p.vertices()).abs()
}

/// Signed area of the closed loop through `vertices` (counter-clockwise
/// positive). Coordinates are taken relative to the first vertex.
pub(crate) fn loop_signed_area(vertices: &[Point2]) -> f64 {
    if vertices.len() < 3 {
        return 0.0;
    }
    let o = vertices[0];
    let twice: f64 = vertices[1..]
        .windows(2)
        .map(|w| (w[0] - o).cross(w[1] - o))
        .sum();
    0.5 * twice
}

/// Splits the region enclosed by `f_tilde` followed by `g_tilde` reversed
/// into simple polygons.
///
/// The closed loop is noded at every edge contact (crossings, touching
/// vertices, and the ends of collinear overlaps), then cut into sub-loops at
/// every repeated vertex. Sub-loops with fewer than three vertices enclose
/// nothing and are dropped.
pub fn partition_between(f_tilde: &Polyline, g_tilde: &Polyline) -> Result<Vec<SimplePolygon>> {
    let gap = f_tilde
        .first()
        .dist(g_tilde.first())
        .max(f_tilde.last().dist(g_tilde.last()));
    if gap > GEOM_EPS {
        return Err(Error::EndpointMismatch { gap });
    }

    let mut ring: Vec<Point2> = f_tilde.points().to_vec();
    let g = g_tilde.points();
    ring.extend(g[1..g.len() - 1].iter().rev());
    if ring.len() < 3 {
        return Ok(Vec::new());
    }

    let noded = node_ring(&ring);
    Ok(split_at_repeats(&noded)
        .into_iter()
        .map(SimplePolygon::from_loop_unchecked)
        .collect())
}

/// Area enclosed between two polylines that share endpoints.
pub fn area_between(f_tilde: &Polyline, g_tilde: &Polyline) -> Result<f64> {
    Ok(partition_between(f_tilde, g_tilde)?
        .iter()
        .map(shoelace_area)
        .sum())
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Contact {
    /// parameter along the first segment, clamped to [0, 1]
    pub ta: f64,
    /// parameter along the second segment, clamped to [0, 1]
    pub tb: f64,
    pub point: Point2,
}

/// All points where segments `a0a1` and `b0b1` touch. Proper crossings give
/// one contact; collinear overlaps give the overlap's two ends.
pub(crate) fn segment_contacts(a0: Point2, a1: Point2, b0: Point2, b1: Point2) -> Vec<Contact> {
    let mut out = Vec::new();
    // bounding boxes
    if a0.x.min(a1.x) > b0.x.max(b1.x) + GEOM_EPS
        || b0.x.min(b1.x) > a0.x.max(a1.x) + GEOM_EPS
        || a0.y.min(a1.y) > b0.y.max(b1.y) + GEOM_EPS
        || b0.y.min(b1.y) > a0.y.max(a1.y) + GEOM_EPS
    {
        return out;
    }
    let da = a1 - a0;
    let db = b1 - b0;
    let la = da.norm();
    let lb = db.norm();
    if la == 0.0 || lb == 0.0 {
        return out;
    }
    let denom = da.cross(db);
    let w = b0 - a0;

    if denom.abs() <= 1e-12 * la * lb {
        // parallel: only collinear overlaps matter
        if (da.cross(w) / la).abs() > GEOM_EPS {
            return out;
        }
        for c in [a0, a1, b0, b1] {
            let ta = (c - a0).dot(da) / (la * la);
            let tb = (c - b0).dot(db) / (lb * lb);
            let on_a = ta * la >= -GEOM_EPS && (ta - 1.0) * la <= GEOM_EPS;
            let on_b = tb * lb >= -GEOM_EPS && (tb - 1.0) * lb <= GEOM_EPS;
            if on_a && on_b && !out.iter().any(|o: &Contact| o.point.dist(c) <= GEOM_EPS) {
                out.push(Contact {
                    ta: ta.clamp(0.0, 1.0),
                    tb: tb.clamp(0.0, 1.0),
                    point: c,
                });
            }
        }
        return out;
    }

    let ta = w.cross(db) / denom;
    let tb = w.cross(da) / denom;
    let tol_a = GEOM_EPS / la;
    let tol_b = GEOM_EPS / lb;
    if ta < -tol_a || ta > 1.0 + tol_a || tb < -tol_b || tb > 1.0 + tol_b {
        return out;
    }
    // prefer existing vertices over computed coordinates
    let point = if ta <= tol_a {
        a0
    } else if ta >= 1.0 - tol_a {
        a1
    } else if tb <= tol_b {
        b0
    } else if tb >= 1.0 - tol_b {
        b1
    } else {
        a0 + da * ta
    };
    out.push(Contact {
        ta: ta.clamp(0.0, 1.0),
        tb: tb.clamp(0.0, 1.0),
        point,
    });
    out
}

/// Inserts every edge-edge contact of the closed ring as a vertex and merges
/// vertices closer than [`GEOM_EPS`]. Returns vertex ids into a point table,
/// with consecutive repeats removed.
fn node_ring(ring: &[Point2]) -> (Vec<Point2>, Vec<usize>) {
    let n = ring.len();
    let edge = |i: usize| (ring[i], ring[(i + 1) % n]);
    let mut splits: Vec<Vec<(f64, Point2)>> = vec![Vec::new(); n];

    for i in 0..n {
        let (a0, a1) = edge(i);
        let la = a0.dist(a1);
        for j in i + 1..n {
            let (b0, b1) = edge(j);
            let lb = b0.dist(b1);
            for c in segment_contacts(a0, a1, b0, b1) {
                if c.ta * la > GEOM_EPS && (1.0 - c.ta) * la > GEOM_EPS {
                    splits[i].push((c.ta, c.point));
                }
                if c.tb * lb > GEOM_EPS && (1.0 - c.tb) * lb > GEOM_EPS {
                    splits[j].push((c.tb, c.point));
                }
            }
        }
    }

    let mut walk = Vec::with_capacity(n + splits.iter().map(Vec::len).sum::<usize>());
    for (i, s) in splits.iter_mut().enumerate() {
        walk.push(ring[i]);
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
        walk.extend(s.iter().map(|&(_, p)| p));
    }

    // cluster coincident points
    let mut table: Vec<Point2> = Vec::new();
    let mut ids: Vec<usize> = Vec::with_capacity(walk.len());
    for p in walk {
        let id = match table.iter().position(|q| q.dist(p) <= GEOM_EPS) {
            Some(id) => id,
            None => {
                table.push(p);
                table.len() - 1
            }
        };
        if ids.last() != Some(&id) {
            ids.push(id);
        }
    }
    while ids.len() > 1 && ids.first() == ids.last() {
        ids.pop();
    }
    (table, ids)
}

/// Cuts a closed vertex walk into loops without repeated vertices.
fn split_at_repeats((table, ids): &(Vec<Point2>, Vec<usize>)) -> Vec<Vec<Point2>> {
    let mut loops = Vec::new();
    if ids.is_empty() {
        return loops;
    }
    let mut stack: Vec<usize> = Vec::with_capacity(ids.len());
    let mut on_stack = vec![usize::MAX; table.len()];
    for &id in ids.iter().chain(std::iter::once(&ids[0])) {
        let at = on_stack[id];
        if at != usize::MAX {
            let sub: Vec<usize> = stack.drain(at + 1..).collect();
            for &s in &sub {
                on_stack[s] = usize::MAX;
            }
            if sub.len() >= 2 {
                let mut verts = Vec::with_capacity(sub.len() + 1);
                verts.push(table[id]);
                verts.extend(sub.iter().map(|&s| table[s]));
                loops.push(verts);
            }
        } else {
            on_stack[id] = stack.len();
            stack.push(id);
        }
    }
    loops
}
