//! Planar polyhedral algebra for rate regions in the `(R1, R2)` plane.
//!
//! A [`Region2D`] is a finite union of closed convex polygons lying in the
//! nonnegative quadrant, every one of them downward closed. Achievable rate
//! regions are open sets bounded by strict inequalities; everything here works
//! with their closures, so every constraint is a `<=`.
//!
//! Coordinates are plain `f64`. Predicates take explicit tolerances:
//! [`GEOM_TOL`] for point/edge tests, [`AREA_TOL`] for area comparisons and
//! [`INCLUSION_EPS`] as the default slack of [`Region2D::includes`].
//!
//! Downward closure makes every region the subgraph of a nonincreasing upper
//! profile `r2 = F(r1)`; areas, symmetric differences and inclusion tests are
//! all evaluated on those profiles, exactly, between breakpoints.

use std::fmt::Write as _;

use serde::Deserialize;

use crate::channel::fmt_float;
use crate::error::{Error, Result};

pub type Point = (f64, f64);

/// Point / edge tolerance.
pub const GEOM_TOL: f64 = 1e-12;
/// Area tolerance used for region equality checks.
pub const AREA_TOL: f64 = 1e-9;
/// Default slack of the inclusion test.
pub const INCLUSION_EPS: f64 = 1e-6;

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn dist(a: Point, b: Point) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn seg_dist(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0);
    dist(p, (a.0 + t * dx, a.1 + t * dy))
}

/// The constraint `a*R1 + b*R2 <= c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HalfPlane {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if a == 0.0 && b == 0.0 {
            return Err(Error::DegenerateHalfPlane);
        }
        Ok(Self { a, b, c })
    }

    /// `R1 <= c`
    pub fn r1_at_most(c: f64) -> Self {
        Self { a: 1.0, b: 0.0, c }
    }

    /// `R2 <= c`
    pub fn r2_at_most(c: f64) -> Self {
        Self { a: 0.0, b: 1.0, c }
    }

    /// `R1 + R2 <= c`
    pub fn sum_at_most(c: f64) -> Self {
        Self { a: 1.0, b: 1.0, c }
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.a * p.0 + self.b * p.1 - self.c
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.eval(p) <= tol * (1.0 + self.c.abs())
    }

    fn line_intersection(&self, o: &HalfPlane) -> Option<Point> {
        let det = self.a * o.b - self.b * o.a;
        if det.abs() < 1e-300 {
            return None;
        }
        Some(((self.c * o.b - self.b * o.c) / det, (self.a * o.c - self.c * o.a) / det))
    }
}

/// A closed convex polygon, vertices counterclockwise. Zero-area polygons
/// (a segment or a single point) are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    /// Convex hull of a point set (monotone chain), with near-duplicate and
    /// collinear points removed.
    pub fn hull(points: &[Point]) -> Self {
        let mut pts: Vec<Point> = points.to_vec();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut merged: Vec<Point> = Vec::with_capacity(pts.len());
        for p in pts {
            let dup = merged.iter().rev().take_while(|q| p.0 - q.0 <= GEOM_TOL).any(|q| dist(*q, p) <= GEOM_TOL);
            if !dup {
                merged.push(p);
            }
        }
        let pts = merged;
        if pts.len() <= 2 {
            return Self { vertices: pts };
        }
        let turn = |o: Point, a: Point, b: Point| cross(o, a, b) <= 1e-13 * dist(o, a) * dist(o, b);
        let mut lower: Vec<Point> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<Point> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        if lower.len() == 2 && dist(lower[0], lower[1]) <= GEOM_TOL {
            lower.pop();
        }
        Self { vertices: lower }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        let mut s = 0.0;
        for i in 0..n {
            let (p, q) = (self.vertices[i], self.vertices[(i + 1) % n]);
            s += p.0 * q.1 - q.0 * p.1;
        }
        0.5 * s.abs()
    }

    /// Half-planes whose intersection is this polygon.
    pub fn halfplanes(&self) -> Vec<HalfPlane> {
        let v = &self.vertices;
        match v.len() {
            0 => vec![],
            1 => {
                let p = v[0];
                vec![
                    HalfPlane { a: 1.0, b: 0.0, c: p.0 },
                    HalfPlane { a: -1.0, b: 0.0, c: -p.0 },
                    HalfPlane { a: 0.0, b: 1.0, c: p.1 },
                    HalfPlane { a: 0.0, b: -1.0, c: -p.1 },
                ]
            }
            2 => {
                let (p, q) = (v[0], v[1]);
                let (dx, dy) = (q.0 - p.0, q.1 - p.1);
                vec![
                    HalfPlane { a: dy, b: -dx, c: dy * p.0 - dx * p.1 },
                    HalfPlane { a: -dy, b: dx, c: -(dy * p.0 - dx * p.1) },
                    HalfPlane { a: dx, b: dy, c: dx * q.0 + dy * q.1 },
                    HalfPlane { a: -dx, b: -dy, c: -(dx * p.0 + dy * p.1) },
                ]
            }
            n => (0..n)
                .map(|i| {
                    let (p, q) = (v[i], v[(i + 1) % n]);
                    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
                    HalfPlane { a: dy, b: -dx, c: dy * p.0 - dx * p.1 }
                })
                .collect(),
        }
    }

    /// Sutherland-Hodgman clip against one half-plane.
    pub fn clip(&self, hp: &HalfPlane) -> Self {
        let v = &self.vertices;
        if v.is_empty() {
            return self.clone();
        }
        let scale = hp.a.abs() + hp.b.abs();
        let inside = |p: Point| hp.eval(p) <= GEOM_TOL * scale * (1.0 + p.0.abs() + p.1.abs());
        let mut out = Vec::with_capacity(v.len() + 1);
        let n = v.len();
        for i in 0..n {
            let cur = v[i];
            let prev = v[(i + n - 1) % n];
            let (ci, pi) = (inside(cur), inside(prev));
            if ci != pi {
                let (fp, fc) = (hp.eval(prev), hp.eval(cur));
                let t = fp / (fp - fc);
                if t.is_finite() {
                    out.push((prev.0 + t * (cur.0 - prev.0), prev.1 + t * (cur.1 - prev.1)));
                }
            }
            if ci {
                out.push(cur);
            }
        }
        Self::hull(&out)
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        let v = &self.vertices;
        match v.len() {
            0 => false,
            1 => dist(p, v[0]) <= tol,
            2 => seg_dist(p, v[0], v[1]) <= tol,
            n => (0..n).all(|i| {
                let (a, b) = (v[i], v[(i + 1) % n]);
                cross(a, b, p) >= -tol * dist(a, b)
            }),
        }
    }

    fn distance_to(&self, p: Point) -> f64 {
        let v = &self.vertices;
        if v.is_empty() {
            return f64::INFINITY;
        }
        if self.contains(p, 0.0) {
            return 0.0;
        }
        let n = v.len();
        (0..n).map(|i| seg_dist(p, v[i], v[(i + 1) % n])).fold(f64::INFINITY, f64::min)
    }

    fn down_closed(&self) -> Self {
        if self.vertices.is_empty() {
            return self.clone();
        }
        let mut pts = Vec::with_capacity(self.vertices.len() * 3 + 1);
        pts.push((0.0, 0.0));
        for &(x, y) in &self.vertices {
            let (x, y) = (clamp0(x), clamp0(y));
            pts.extend([(x, y), (x, 0.0), (0.0, y)]);
        }
        Self::hull(&pts)
    }

    fn shifted(&self, t: f64) -> Self {
        let pts: Vec<Point> = self.vertices.iter().map(|&(x, y)| (x + t, y + t)).collect();
        Self::hull(&pts).down_closed()
    }

    fn x_max(&self) -> f64 {
        self.vertices.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max)
    }

    fn y_max(&self) -> f64 {
        self.vertices.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn clamp0(v: f64) -> f64 {
    if v < 0.0 && v > -1e-9 {
        0.0
    } else {
        v
    }
}

/// Upper boundary of one downward-closed convex part: a concave,
/// nonincreasing chain sorted by `r1`, starting at `r1 = 0`.
#[derive(Debug, Clone)]
struct Chain {
    pts: Vec<Point>,
}

impl Chain {
    fn of(poly: &ConvexPolygon) -> Self {
        let mut v: Vec<Point> = poly.vertices.clone();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        v.dedup_by(|a, b| a.0 == b.0);
        let mut pts: Vec<Point> = Vec::new();
        for p in v {
            while pts.len() >= 2 && cross(pts[pts.len() - 2], pts[pts.len() - 1], p) >= 0.0 {
                pts.pop();
            }
            pts.push(p);
        }
        Self { pts }
    }

    fn x_max(&self) -> f64 {
        self.pts.last().map_or(f64::NEG_INFINITY, |p| p.0)
    }

    fn eval(&self, x: f64) -> f64 {
        let p = &self.pts;
        if x <= p[0].0 {
            return p[0].1;
        }
        let k = p.partition_point(|q| q.0 < x);
        if k >= p.len() {
            return p[p.len() - 1].1;
        }
        let (a, b) = (p[k - 1], p[k]);
        if b.0 == a.0 {
            return b.1.max(a.1);
        }
        a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
    }
}

/// Upper profile of a union of down-closed parts.
#[derive(Debug, Clone)]
struct Profile {
    chains: Vec<Chain>,
}

impl Profile {
    fn of(r: &Region2D) -> Self {
        Self { chains: r.parts.iter().map(Chain::of).collect() }
    }

    fn x_max(&self) -> f64 {
        self.chains.iter().map(Chain::x_max).fold(f64::NEG_INFINITY, f64::max)
    }

    fn breakpoints(&self, out: &mut Vec<f64>) {
        for c in &self.chains {
            out.extend(c.pts.iter().map(|p| p.0));
        }
    }

    /// Closed value at `x` (max over parts whose domain contains `x`).
    fn at(&self, x: f64) -> Option<f64> {
        self.chains
            .iter()
            .filter(|c| x <= c.x_max() + GEOM_TOL)
            .map(|c| c.eval(x))
            .reduce(f64::max)
    }

    /// Linear pieces active on the open interval `(lo, hi)`; each piece is
    /// `(value at lo, value at hi)`.
    fn pieces(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        self.chains
            .iter()
            .filter(|c| c.x_max() >= hi - GEOM_TOL * (1.0 + hi.abs()))
            .map(|c| (c.eval(lo), c.eval(hi)))
            .collect()
    }
}

fn sorted_unique(mut xs: Vec<f64>) -> Vec<f64> {
    xs.retain(|x| x.is_finite());
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
    xs
}

/// Crossing positions (as fractions of the interval) among linear pieces.
fn crossings(pieces: &[(f64, f64)], out: &mut Vec<f64>) {
    for i in 0..pieces.len() {
        for j in i + 1..pieces.len() {
            let d0 = pieces[i].0 - pieces[j].0;
            let d1 = pieces[i].1 - pieces[j].1;
            if d0 * d1 < 0.0 {
                out.push(d0 / (d0 - d1));
            }
        }
    }
}

fn max_piece(pieces: &[(f64, f64)], s: f64) -> f64 {
    pieces.iter().map(|p| p.0 + (p.1 - p.0) * s).fold(0.0, f64::max)
}

/// Evaluates two profiles on a common refinement where both are linear.
/// Calls `f(x0, x1, a0, a1, b0, b1)` for each subinterval.
fn walk_pair(a: &Profile, b: &Profile, mut f: impl FnMut(f64, f64, f64, f64, f64, f64)) {
    let mut xs = vec![0.0];
    a.breakpoints(&mut xs);
    b.breakpoints(&mut xs);
    let xs = sorted_unique(xs);
    for w in xs.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= 0.0 {
            continue;
        }
        let pa = a.pieces(lo, hi);
        let pb = b.pieces(lo, hi);
        let mut fr = vec![0.0, 1.0];
        crossings(&pa, &mut fr);
        crossings(&pb, &mut fr);
        // crossings of the two maxima, found on the refinement so far
        let fr0 = sorted_unique(fr.clone());
        for s in fr0.windows(2) {
            let d0 = max_piece(&pa, s[0]) - max_piece(&pb, s[0]);
            let d1 = max_piece(&pa, s[1]) - max_piece(&pb, s[1]);
            if d0 * d1 < 0.0 {
                fr.push(s[0] + (s[1] - s[0]) * d0 / (d0 - d1));
            }
        }
        let fr = sorted_unique(fr);
        for s in fr.windows(2) {
            let (x0, x1) = (lo + (hi - lo) * s[0], lo + (hi - lo) * s[1]);
            f(
                x0,
                x1,
                max_piece(&pa, s[0]),
                max_piece(&pa, s[1]),
                max_piece(&pb, s[0]),
                max_piece(&pb, s[1]),
            );
        }
    }
}

/// Finite union of downward-closed convex polygons in the nonnegative
/// quadrant. The empty region has no parts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Region2D {
    parts: Vec<ConvexPolygon>,
}

impl Region2D {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Downward-closes every part, then drops empty parts and parts covered
    /// by another part.
    pub fn from_parts(parts: Vec<ConvexPolygon>) -> Self {
        let closed: Vec<ConvexPolygon> = parts.iter().filter(|p| !p.is_empty()).map(|p| p.down_closed()).collect();
        let mut keep: Vec<ConvexPolygon> = Vec::new();
        for (i, p) in closed.iter().enumerate() {
            let covered = closed.iter().enumerate().any(|(j, q)| {
                j != i
                    && p.vertices.iter().all(|v| q.contains(*v, GEOM_TOL))
                    // of two mutually covering parts keep the first
                    && (j < i || !q.vertices.iter().all(|v| p.contains(*v, GEOM_TOL)))
            });
            if !covered {
                keep.push(p.clone());
            }
        }
        keep.sort_by(|a, b| {
            let key = |p: &ConvexPolygon| p.vertices.iter().flat_map(|v| [v.0, v.1]).collect::<Vec<f64>>();
            key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal)
        });
        Self { parts: keep }
    }

    /// Downward closure of the listed points' convex hull.
    pub fn from_points(points: &[Point]) -> Self {
        if points.is_empty() {
            return Self::empty();
        }
        Self::from_parts(vec![ConvexPolygon::hull(points)])
    }

    /// The rectangle `[0, r1] x [0, r2]`.
    pub fn rectangle(r1: f64, r2: f64) -> Self {
        Self::from_points(&[(r1, r2)])
    }

    /// Intersection of the half-planes with the nonnegative quadrant.
    ///
    /// The result is downward closed by construction; with nonnegative
    /// normals (every rate constraint) that closure changes nothing.
    pub fn from_halfplanes(hps: &[HalfPlane]) -> Result<Self> {
        for h in hps {
            if h.a == 0.0 && h.b == 0.0 {
                return Err(Error::DegenerateHalfPlane);
            }
            if !(h.a.is_finite() && h.b.is_finite() && h.c.is_finite()) {
                return Err(Error::OutOfRange(format!("non-finite half-plane {h:?}")));
            }
        }
        let mut all: Vec<HalfPlane> = hps.to_vec();
        all.push(HalfPlane { a: -1.0, b: 0.0, c: 0.0 });
        all.push(HalfPlane { a: 0.0, b: -1.0, c: 0.0 });

        // every vertex of the feasible set is a feasible pairwise line
        // intersection, and a nonempty subset of the quadrant has a vertex
        let mut bound: f64 = 0.0;
        let mut feasible = false;
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                if let Some(p) = all[i].line_intersection(&all[j]) {
                    if p.0.is_finite() && p.1.is_finite() && all.iter().all(|h| h.contains(p, 1e-9)) {
                        feasible = true;
                        bound = bound.max(p.0.abs()).max(p.1.abs());
                    }
                }
            }
        }
        if !feasible {
            return Ok(Self::empty());
        }

        // recession cone of {r >= 0, a.r <= c}: its extreme rays are the axes
        // and the in-quadrant directions of mixed-sign normals
        let mut rays = vec![(1.0, 0.0), (0.0, 1.0)];
        for h in hps {
            if h.a * h.b < 0.0 {
                rays.push((h.b.abs(), h.a.abs()));
            }
        }
        let unbounded = rays.iter().any(|d| {
            hps.iter().all(|h| h.a * d.0 + h.b * d.1 <= 1e-15 * (h.a.abs() + h.b.abs()))
        });
        if unbounded {
            return Err(Error::Unbounded);
        }
        let bound = 2.0 * bound + 1.0;
        let mut poly = ConvexPolygon::hull(&[(0.0, 0.0), (bound, 0.0), (bound, bound), (0.0, bound)]);
        for h in &all {
            poly = poly.clip(h);
            if poly.is_empty() {
                return Ok(Self::empty());
            }
        }
        Ok(Self::from_parts(vec![poly]))
    }

    pub fn parts(&self) -> &[ConvexPolygon] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// All vertices of all parts.
    pub fn vertices(&self) -> impl Iterator<Item = Point> + '_ {
        self.parts.iter().flat_map(|p| p.vertices.iter().copied())
    }

    pub fn contains(&self, p: Point) -> bool {
        self.parts.iter().any(|q| q.contains(p, GEOM_TOL))
    }

    pub fn union(&self, other: &Region2D) -> Region2D {
        let mut parts = self.parts.clone();
        parts.extend(other.parts.iter().cloned());
        Self::from_parts(parts)
    }

    pub fn intersect(&self, other: &Region2D) -> Region2D {
        let mut parts = Vec::new();
        for p in &self.parts {
            for q in &other.parts {
                let mut c = p.clone();
                for h in q.halfplanes() {
                    c = c.clip(&h);
                    if c.is_empty() {
                        break;
                    }
                }
                if !c.is_empty() {
                    parts.push(c);
                }
            }
        }
        Self::from_parts(parts)
    }

    /// Convex hull of all parts of all regions, as a single-part region.
    pub fn convex_hull(rs: &[&Region2D]) -> Region2D {
        let pts: Vec<Point> = rs.iter().flat_map(|r| r.vertices()).collect();
        Self::from_points(&pts)
    }

    /// Region with `R1` and `R2` exchanged.
    pub fn swap_axes(&self) -> Region2D {
        let parts = self
            .parts
            .iter()
            .map(|p| ConvexPolygon::hull(&p.vertices.iter().map(|&(x, y)| (y, x)).collect::<Vec<_>>()))
            .collect();
        Self::from_parts(parts)
    }

    /// `max w1*R1 + w2*R2` over the region; `-inf` for the empty region.
    pub fn max_weighted_sum(&self, w1: f64, w2: f64) -> f64 {
        self.vertices().map(|p| w1 * p.0 + w2 * p.1).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Area of the union.
    pub fn area(&self) -> f64 {
        let mut total = 0.0;
        walk_pair(&Profile::of(self), &Profile::of(&Region2D::empty()), |x0, x1, a0, a1, _, _| {
            total += 0.5 * (a0 + a1) * (x1 - x0);
        });
        total
    }

    /// Area of the symmetric difference.
    pub fn symmetric_difference_area(&self, other: &Region2D) -> f64 {
        let mut total = 0.0;
        walk_pair(&Profile::of(self), &Profile::of(other), |x0, x1, a0, a1, b0, b1| {
            let (g0, g1) = (a0 - b0, a1 - b1);
            let w = x1 - x0;
            total += if g0 * g1 >= 0.0 {
                0.5 * (g0 + g1).abs() * w
            } else {
                w * (g0 * g0 + g1 * g1) / (2.0 * (g0.abs() + g1.abs()))
            };
        });
        total
    }

    /// Same region up to [`AREA_TOL`] of symmetric difference and matching
    /// extents (so zero-area segments are compared too).
    pub fn approx_eq(&self, other: &Region2D, area_tol: f64) -> bool {
        self.symmetric_difference_area(other) < area_tol
            && self.inclusion_gap(other) <= area_tol.sqrt()
            && other.inclusion_gap(self) <= area_tol.sqrt()
    }

    /// Whether `inner` lies in this region enlarged by `shift` in both
    /// coordinates (each outer part replaced by the down-closure of its
    /// translate by `(shift, shift)`).
    fn covers_with_shift(&self, inner: &Region2D, shift: f64) -> bool {
        if inner.is_empty() {
            return true;
        }
        if self.is_empty() {
            return false;
        }
        let outer = if shift > 0.0 {
            Region2D { parts: self.parts.iter().map(|p| p.shifted(shift)).collect() }
        } else {
            self.clone()
        };
        let po = Profile::of(&outer);
        let pi = Profile::of(inner);
        let tol = GEOM_TOL * (1.0 + shift);
        let xi = pi.x_max();
        if xi > po.x_max() + tol {
            return false;
        }
        let mut xs = vec![0.0];
        pi.breakpoints(&mut xs);
        po.breakpoints(&mut xs);
        let xs: Vec<f64> = sorted_unique(xs).into_iter().filter(|&x| x <= xi).collect();
        for &x in &xs {
            match (pi.at(x), po.at(x)) {
                (Some(a), Some(b)) if a > b + tol => return false,
                (Some(_), None) => return false,
                _ => {}
            }
        }
        let mut ok = true;
        walk_pair(&pi, &po, |_, x1, a0, a1, b0, b1| {
            if x1 <= xi + tol && (a0 > b0 + tol || a1 > b1 + tol) {
                ok = false;
            }
        });
        ok
    }

    /// Smallest `t >= 0` with `inner` inside this region enlarged by `t`
    /// (see [`Region2D::includes`]); `inf` when this region is empty and
    /// `inner` is not.
    pub fn inclusion_gap(&self, inner: &Region2D) -> f64 {
        if self.covers_with_shift(inner, 0.0) {
            return 0.0;
        }
        if self.is_empty() {
            return f64::INFINITY;
        }
        let reach = inner.parts.iter().map(|p| p.x_max().max(p.y_max())).fold(0.0, f64::max);
        let (mut lo, mut hi) = (0.0, reach + 1.0);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if self.covers_with_shift(inner, mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Inclusion with slack `eps`: every point `p` of `inner` has
    /// `max(p - eps, 0)` (componentwise) in this region.
    pub fn includes(&self, inner: &Region2D, eps: f64) -> bool {
        self.covers_with_shift(inner, eps)
    }

    /// Hausdorff distance. Exact when both regions have a single part;
    /// otherwise edges are sampled densely.
    pub fn hausdorff(&self, other: &Region2D) -> f64 {
        directed_hausdorff(self, other).max(directed_hausdorff(other, self))
    }
}

fn directed_hausdorff(a: &Region2D, b: &Region2D) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    if b.is_empty() {
        return f64::INFINITY;
    }
    let d = |p: Point| b.parts.iter().map(|q| q.distance_to(p)).fold(f64::INFINITY, f64::min);
    let mut worst: f64 = 0.0;
    for part in &a.parts {
        let v = &part.vertices;
        for i in 0..v.len() {
            worst = worst.max(d(v[i]));
            if b.parts.len() > 1 && v.len() > 1 {
                let q = v[(i + 1) % v.len()];
                for k in 1..256 {
                    let s = k as f64 / 256.0;
                    worst = worst.max(d((v[i].0 + s * (q.0 - v[i].0), v[i].1 + s * (q.1 - v[i].1))));
                }
            }
        }
    }
    worst
}

/// Header of region documents.
pub const REGION_FORMAT: &str = "superpos-region/1";

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionDoc {
    format: String,
    #[serde(default)]
    regions: Vec<NamedRegionDoc>,
    /// Free-form run metadata, not interpreted.
    #[serde(default, rename = "provenance")]
    _provenance: Option<toml::Table>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NamedRegionDoc {
    name: String,
    parts: Vec<Vec<[f64; 2]>>,
}

/// Writes named regions as one document, one vertex list per part.
pub fn save_regions(regions: &[(&str, &Region2D)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "format = \"{REGION_FORMAT}\"");
    for (name, r) in regions {
        let _ = writeln!(s, "\n[[regions]]\nname = {name:?}");
        if r.is_empty() {
            s.push_str("parts = []\n");
            continue;
        }
        s.push_str("parts = [\n");
        for p in r.parts() {
            let vs: Vec<String> =
                p.vertices().iter().map(|v| format!("[{}, {}]", fmt_float(v.0), fmt_float(v.1))).collect();
            let _ = writeln!(s, "  [{}],", vs.join(", "));
        }
        s.push_str("]\n");
    }
    s
}

/// Reads a document written by [`save_regions`].
pub fn load_regions(text: &str) -> Result<Vec<(String, Region2D)>> {
    let doc: RegionDoc = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if doc.format != REGION_FORMAT {
        return Err(Error::Parse(format!("unsupported format {:?}, expected {REGION_FORMAT:?}", doc.format)));
    }
    doc.regions
        .into_iter()
        .map(|r| {
            let mut parts = Vec::with_capacity(r.parts.len());
            for (k, vs) in r.parts.iter().enumerate() {
                if vs.iter().flatten().any(|c| !c.is_finite() || *c < -GEOM_TOL) {
                    return Err(Error::Parse(format!("region {:?} part {k} has a coordinate outside the quadrant", r.name)));
                }
                let pts: Vec<Point> = vs.iter().map(|v| (v[0], v[1])).collect();
                parts.push(ConvexPolygon::hull(&pts));
            }
            Ok((r.name, Region2D::from_parts(parts)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn square() -> Region2D {
        Region2D::from_halfplanes(&[HalfPlane::r1_at_most(1.0), HalfPlane::r2_at_most(1.0)]).unwrap()
    }

    fn triangle(c: f64) -> Region2D {
        Region2D::from_halfplanes(&[HalfPlane::sum_at_most(c)]).unwrap()
    }

    fn same_vertex_set(got: &[Point], want: &[Point]) -> bool {
        got.len() == want.len() && want.iter().all(|w| got.iter().any(|g| dist(*g, *w) < 1e-12))
    }

    /// Oracle: all pairwise line intersections that satisfy every constraint.
    fn enumerate_vertices(hps: &[HalfPlane]) -> Vec<Point> {
        let mut all = hps.to_vec();
        all.push(HalfPlane { a: -1.0, b: 0.0, c: 0.0 });
        all.push(HalfPlane { a: 0.0, b: -1.0, c: 0.0 });
        let mut pts: Vec<Point> = Vec::new();
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                let det = all[i].a * all[j].b - all[i].b * all[j].a;
                if det == 0.0 {
                    continue;
                }
                let p = (
                    (all[i].c * all[j].b - all[i].b * all[j].c) / det,
                    (all[i].a * all[j].c - all[i].c * all[j].a) / det,
                );
                if all.iter().all(|h| h.a * p.0 + h.b * p.1 <= h.c + 1e-12) && !pts.iter().any(|q| dist(*q, p) < 1e-12)
                {
                    pts.push(p);
                }
            }
        }
        pts
    }

    #[test]
    fn from_halfplanes_examples() {
        assert!(same_vertex_set(square().parts()[0].vertices(), &[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]));
        assert!(same_vertex_set(triangle(1.0).parts()[0].vertices(), &[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]));

        let hps = [HalfPlane::r1_at_most(2.0), HalfPlane::sum_at_most(3.0), HalfPlane::r2_at_most(2.0)];
        let oracle = enumerate_vertices(&hps);
        assert!(same_vertex_set(&oracle, &[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 2.0), (0.0, 2.0)]));
        let pent = Region2D::from_halfplanes(&hps).unwrap();
        assert!(same_vertex_set(pent.parts()[0].vertices(), &oracle));
        assert!((pent.max_weighted_sum(1.0, 1.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn from_halfplanes_errors_and_empty() {
        assert!(matches!(Region2D::from_halfplanes(&[HalfPlane::r1_at_most(1.0)]), Err(Error::Unbounded)));
        assert!(matches!(Region2D::from_halfplanes(&[]), Err(Error::Unbounded)));
        assert!(matches!(
            Region2D::from_halfplanes(&[HalfPlane { a: 1.0, b: -1.0, c: 0.0 }, HalfPlane::r1_at_most(1.0)]),
            Err(Error::Unbounded)
        ));
        assert!(HalfPlane::new(0.0, 0.0, 1.0).is_err());
        let empty = Region2D::from_halfplanes(&[HalfPlane::sum_at_most(-1.0)]).unwrap();
        assert!(empty.is_empty());
        // mixed-sign normal that still bounds the set
        let r = Region2D::from_halfplanes(&[HalfPlane { a: -1.0, b: 1.0, c: 0.5 }, HalfPlane::r1_at_most(1.0)]);
        assert!(r.is_ok());
        // a single point and a segment are legitimate regions
        let pt = Region2D::from_halfplanes(&[HalfPlane::sum_at_most(0.0)]).unwrap();
        assert_eq!(pt.parts()[0].vertices(), &[(0.0, 0.0)]);
        let seg = Region2D::from_halfplanes(&[HalfPlane::r2_at_most(0.0), HalfPlane::r1_at_most(0.7)]).unwrap();
        assert!(seg.contains((0.7, 0.0)) && !seg.contains((0.7, 1e-6)));
        assert_eq!(seg.area(), 0.0);
    }

    fn raster_check(r: &Region2D, member: impl Fn(Point) -> bool, extent: f64) {
        for i in 0..100 {
            for j in 0..100 {
                let p = ((i as f64 + 0.37) * extent / 100.0, (j as f64 + 0.61) * extent / 100.0);
                assert_eq!(r.contains(p), member(p), "{p:?}");
            }
        }
    }

    #[test]
    fn union_examples() {
        let sq = square();
        assert_eq!(sq.union(&sq), sq);
        assert_eq!(sq.union(&Region2D::empty()), sq);
        let pent = Region2D::from_halfplanes(&[
            HalfPlane::sum_at_most(3.0),
            HalfPlane::r1_at_most(2.0),
            HalfPlane::r2_at_most(2.0),
        ])
        .unwrap();
        let shifted = Region2D::from_halfplanes(&[HalfPlane::sum_at_most(1.5), HalfPlane::r2_at_most(1.4)]).unwrap();
        let u = sq.union(&pent);
        raster_check(&u, |p| (p.0 <= 1.0 && p.1 <= 1.0) || (p.0 + p.1 <= 3.0 && p.0 <= 2.0 && p.1 <= 2.0), 3.0);
        let u = sq.union(&shifted);
        raster_check(&u, |p| (p.0 <= 1.0 && p.1 <= 1.0) || (p.0 + p.1 <= 1.5 && p.1 <= 1.4), 2.0);
        assert_eq!(u, shifted.union(&sq));
    }

    #[test]
    fn intersect_examples() {
        let sq = square();
        assert!(sq.intersect(&sq).approx_eq(&sq, AREA_TOL));
        assert!(sq.intersect(&Region2D::empty()).is_empty());
        let tri = Region2D::from_halfplanes(&[HalfPlane::sum_at_most(1.5), HalfPlane::r2_at_most(1.4)]).unwrap();
        let i = sq.intersect(&tri);
        raster_check(&i, |p| p.0 <= 1.0 && p.1 <= 1.0 && p.0 + p.1 <= 1.5, 2.0);
        // distributes over union
        let lhs = tri.intersect(&sq.union(&triangle(1.8)));
        let rhs = tri.intersect(&sq).union(&tri.intersect(&triangle(1.8)));
        assert!(lhs.symmetric_difference_area(&rhs) < AREA_TOL);
    }

    #[test]
    fn convex_hull_examples() {
        let sq = square();
        assert!(Region2D::convex_hull(&[&sq]).approx_eq(&sq, AREA_TOL));

        let seg1 = Region2D::from_points(&[(1.0, 0.0)]);
        let seg2 = Region2D::from_points(&[(0.0, 1.0)]);
        let h = Region2D::convex_hull(&[&seg1, &seg2]);
        assert!(h.includes(&triangle(1.0), 0.0));

        // oracle: hull of the vertex set {(0,0),(1,0),(1,1),(0,1),(2,0)}
        let h = Region2D::convex_hull(&[&sq, &Region2D::from_points(&[(2.0, 0.0)])]);
        assert_eq!(h.parts().len(), 1);
        assert!(same_vertex_set(h.parts()[0].vertices(), &[(0.0, 0.0), (2.0, 0.0), (1.0, 1.0), (0.0, 1.0)]));
        assert!((h.area() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn includes_examples() {
        let sq = square();
        let tri = triangle(1.0);
        assert!(sq.includes(&sq, INCLUSION_EPS));
        assert!(sq.includes(&tri, INCLUSION_EPS));
        assert!(!tri.includes(&sq, INCLUSION_EPS));
        assert!((tri.inclusion_gap(&sq) - 0.5).abs() < 1e-12);
        // zero-area parts count
        let seg = Region2D::from_points(&[(2.0, 0.0)]);
        assert!(!sq.includes(&seg, INCLUSION_EPS));
        assert!((sq.inclusion_gap(&seg) - 1.0).abs() < 1e-9);
        assert!(Region2D::empty().includes(&Region2D::empty(), 0.0));
        assert!(sq.includes(&Region2D::empty(), 0.0));
        assert!(!Region2D::empty().includes(&sq, 1.0));
        assert_eq!(Region2D::empty().inclusion_gap(&sq), f64::INFINITY);
    }

    #[test]
    fn weighted_sums() {
        assert!((square().max_weighted_sum(1.0, 1.0) - 2.0).abs() < 1e-15);
        assert!((triangle(1.0).max_weighted_sum(1.0, 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(Region2D::empty().max_weighted_sum(1.0, 1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn areas() {
        assert!((square().area() - 1.0).abs() < 1e-15);
        let u = square().union(&triangle(1.5));
        // 1 + two corner triangles of legs 0.5
        assert!((u.area() - 1.25).abs() < 1e-12);
        assert!((square().symmetric_difference_area(&triangle(1.0)) - 0.5).abs() < 1e-12);
        let a = Region2D::rectangle(2.0, 0.5);
        let b = Region2D::rectangle(0.5, 2.0);
        assert!((a.symmetric_difference_area(&b) - 1.5).abs() < 1e-12);
        assert!((a.union(&b).area() - 1.75).abs() < 1e-12);
        assert_eq!(square().swap_axes(), square());
        assert!(a.swap_axes().approx_eq(&b, AREA_TOL));
    }

    #[test]
    fn hausdorff_distances() {
        let sq = square();
        assert!(sq.hausdorff(&sq) < 1e-15);
        assert!((sq.hausdorff(&triangle(1.0)) - 0.5f64.sqrt()).abs() < 1e-12);
        let l = Region2D::rectangle(2.0, 0.5).union(&Region2D::rectangle(0.5, 2.0));
        assert!((l.hausdorff(&Region2D::rectangle(2.0, 2.0)) - 1.5).abs() < 1e-9);
    }

    fn random_region(rng: &mut impl Rng) -> Region2D {
        let parts = rng.random_range(1..=3);
        let mut r = Region2D::empty();
        for _ in 0..parts {
            let mut hps = vec![
                HalfPlane::r1_at_most(rng.random_range(0.1..2.0)),
                HalfPlane::r2_at_most(rng.random_range(0.1..2.0)),
            ];
            for _ in 0..rng.random_range(0..3) {
                hps.push(HalfPlane {
                    a: rng.random_range(0.0..1.0),
                    b: rng.random_range(0.0..1.0),
                    c: rng.random_range(0.1..1.5),
                });
            }
            r = r.union(&Region2D::from_halfplanes(&hps).unwrap());
        }
        r
    }

    proptest! {
        #[test]
        fn hull_contains_inputs(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (r, s) = (random_region(&mut rng), random_region(&mut rng));
            let h = Region2D::convex_hull(&[&r, &s]);
            prop_assert!(h.includes(&r, 0.0));
            prop_assert!(h.includes(&s, 0.0));
        }

        #[test]
        fn area_monotone(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (r, s) = (random_region(&mut rng), random_region(&mut rng));
            let (ar, as_) = (r.area(), s.area());
            prop_assert!(r.union(&s).area() >= ar.max(as_) - 1e-9);
            prop_assert!(r.intersect(&s).area() <= ar.min(as_) + 1e-9);
            // inclusion-exclusion ties the three operations together
            let lhs = r.union(&s).area() + r.intersect(&s).area();
            prop_assert!((lhs - ar - as_).abs() < 1e-9);
        }

        #[test]
        fn halfplane_membership_exact(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut hps = vec![HalfPlane::r1_at_most(rng.random_range(0.2..2.0)), HalfPlane::r2_at_most(rng.random_range(0.2..2.0))];
            for _ in 0..3 {
                hps.push(HalfPlane { a: rng.random_range(0.0..1.0), b: rng.random_range(0.0..1.0), c: rng.random_range(0.1..1.5) });
            }
            let r = Region2D::from_halfplanes(&hps).unwrap();
            for _ in 0..1000 {
                let p = (rng.random_range(0.0..2.2), rng.random_range(0.0..2.2));
                let direct = hps.iter().all(|h| h.a * p.0 + h.b * p.1 <= h.c);
                prop_assert_eq!(r.contains(p), direct, "{:?}", p);
            }
        }

        #[test]
        fn downward_closed(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let r = random_region(&mut rng);
            for v in r.vertices() {
                prop_assert!(r.contains((v.0, 0.0)) && r.contains((0.0, v.1)) && r.contains((0.0, 0.0)));
                prop_assert!(r.contains((0.5 * v.0, 0.5 * v.1)));
            }
        }

        #[test]
        fn area_matches_raster(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let r = random_region(&mut rng);
            let n = 200;
            let step = 2.0 / n as f64;
            let inside = (0..n * n).filter(|k| r.contains((((k % n) as f64 + 0.5) * step, ((k / n) as f64 + 0.5) * step))).count();
            let est = inside as f64 * step * step;
            prop_assert!((est - r.area()).abs() < 0.05, "{} vs {}", est, r.area());
        }
    }

    #[test]
    fn region_documents_round_trip() {
        let a = Region2D::from_halfplanes(&[HalfPlane::sum_at_most(1.0), HalfPlane::r1_at_most(0.7)]).unwrap();
        let b = Region2D::rectangle(0.3, 0.1).union(&Region2D::rectangle(0.1, 0.3));
        let text = save_regions(&[("a", &a), ("b", &b), ("none", &Region2D::empty())]);
        let back = load_regions(&text).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!((back[0].0.as_str(), &back[0].1), ("a", &a));
        assert_eq!(back[1].1, b);
        assert!(back[2].1.is_empty());
        assert!(load_regions("format = \"superpos-region/1\"\nextra = 1").is_err());
        assert!(load_regions("format = \"other\"").is_err());
        let with_meta = format!("{text}\n[provenance]\nseed = 3\n");
        assert_eq!(load_regions(&with_meta).unwrap().len(), 3);
    }
}
