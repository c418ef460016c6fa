//! Planar computational-geometry kernel.
//!
//! Every node of a partition tree is described by 2D convex polygons, one per
//! pair of coordinates. This module holds the pieces the samplers need: hulls,
//! perimeters, directional widths, the exact cut-angle sampler and convex
//! polygon splitting. A cut is the hyperplane
//! `x[d1] * cos(theta) + x[d2] * sin(theta) = s`, with `theta` in `(0, pi]`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for collinearity and containment predicates.
pub const EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// Twice the signed area of the triangle `(o, a, b)`; positive for a left turn.
#[inline]
fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// An angle in `(0, pi]` together with its unit normal `(cos, sin)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Direction {
    theta: f64,
    cos: f64,
    sin: f64,
}

impl Direction {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= PI) {
            return Err(Error::InvalidAngle(theta));
        }
        Ok(Self {
            theta,
            cos: theta.cos(),
            sin: theta.sin(),
        })
    }

    /// Reduces an arbitrary finite angle modulo pi into `(0, pi]`.
    pub fn wrapped(angle: f64) -> Self {
        let mut theta = angle.rem_euclid(PI);
        if !(theta > 0.0) || theta > PI {
            theta = PI;
        }
        Self {
            theta,
            cos: theta.cos(),
            sin: theta.sin(),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn normal(&self) -> Point2 {
        Point2::new(self.cos, self.sin)
    }

    /// Coordinate of `p` along the normal.
    #[inline]
    pub fn project(&self, p: Point2) -> f64 {
        p.x * self.cos + p.y * self.sin
    }
}

impl TryFrom<f64> for Direction {
    type Error = Error;

    fn try_from(theta: f64) -> Result<Self> {
        Direction::new(theta)
    }
}

impl From<Direction> for f64 {
    fn from(d: Direction) -> f64 {
        d.theta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Point,
    Segment,
    Proper,
}

/// A convex polygon with counter-clockwise vertices.
///
/// One vertex is a point, two vertices a segment. The boundary of a segment
/// is traversed out and back, so its perimeter is twice its length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon2D {
    vertices: Vec<Point2>,
}

impl Polygon2D {
    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            vertices: vec![
                Point2::new(x0, y0),
                Point2::new(x1, y0),
                Point2::new(x1, y1),
                Point2::new(x0, y1),
            ],
        }
    }

    pub fn unit_square() -> Self {
        Self::rectangle(0.0, 0.0, 1.0, 1.0)
    }

    pub fn point(p: Point2) -> Self {
        Self { vertices: vec![p] }
    }

    /// Wraps a vertex list without recomputing the hull. Callers are
    /// responsible for passing a CCW convex chain (see [`Polygon2D::is_valid`]).
    pub fn from_vertices_unchecked(vertices: Vec<Point2>) -> Self {
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn shape(&self) -> Shape {
        match self.vertices.len() {
            0 | 1 => Shape::Point,
            2 => Shape::Segment,
            _ => Shape::Proper,
        }
    }

    /// Non-empty, finite, and convex with counter-clockwise orientation.
    pub fn is_valid(&self) -> bool {
        let n = self.vertices.len();
        if n == 0 || self.vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return false;
        }
        if n < 3 {
            return true;
        }
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            cross(a, b, c) >= -EPS
        }) && self.area() > 0.0
    }

    /// Boundary edges as `(start, end)`; a segment yields both directions.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        let count = if n < 2 { 0 } else { n };
        (0..count).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).sum()
    }

    /// Shoelace area; zero for points and segments.
    pub fn area(&self) -> f64 {
        if self.vertices.len() < 3 {
            return 0.0;
        }
        let twice: f64 = self.edges().map(|(a, b)| a.x * b.y - b.x * a.y).sum();
        0.5 * twice
    }

    /// Min and max of the vertex projections onto `dir`'s normal.
    pub fn projection_interval(&self, dir: Direction) -> (f64, f64) {
        self.vertices
            .iter()
            .map(|&v| dir.project(v))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p), hi.max(p))
            })
    }

    /// Length of the polygon's shadow on the normal of `dir`.
    pub fn width(&self, dir: Direction) -> f64 {
        let (lo, hi) = self.projection_interval(dir);
        hi - lo
    }

    /// Vertex average. Lies inside the polygon by convexity.
    pub fn centroid(&self) -> Point2 {
        let n = self.vertices.len() as f64;
        let (sx, sy) = self
            .vertices
            .iter()
            .fold((0.0, 0.0), |(sx, sy), v| (sx + v.x, sy + v.y));
        Point2::new(sx / n, sy / n)
    }

    /// Largest distance between two vertices.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, &a) in self.vertices.iter().enumerate() {
            for &b in &self.vertices[i + 1..] {
                best = best.max(a.dist(b));
            }
        }
        best
    }

    /// Closed containment with absolute tolerance `tol`.
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        match self.vertices.as_slice() {
            [] => false,
            [a] => a.dist(p) <= tol,
            [a, b] => segment_distance(*a, *b, p) <= tol,
            _ => self.edges().all(|(a, b)| {
                let len = a.dist(b);
                cross(a, b, p) >= -tol * len.max(1.0)
            }),
        }
    }
}

fn segment_distance(a: Point2, b: Point2, p: Point2) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return a.dist(p);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    Point2::new(a.x + t * dx, a.y + t * dy).dist(p)
}

/// Convex hull by Andrew's monotone chain (a Graham-scan variant), `O(n log n)`.
///
/// Collinear boundary points are dropped; all-collinear input yields a segment
/// and a single distinct point yields a point polygon.
pub fn convex_hull(points: &[Point2]) -> Result<Polygon2D> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return Ok(Polygon2D { vertices: pts });
    }

    let mut hull: Vec<Point2> = Vec::with_capacity(pts.len() + 1);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= EPS {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len
            && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= EPS
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() == 2 && hull[0] == hull[1] {
        hull.pop();
    }
    Ok(Polygon2D { vertices: hull })
}

/// Draws an angle with density `width(p, theta) / perimeter(p)` on `(0, pi]`.
///
/// `width(theta) = 1/2 * sum_i |e_i| |cos(theta - phi_i)|`, so the density is
/// a mixture over edges: pick edge `i` with weight `|e_i|`, then invert the
/// CDF of `|cos(theta - phi_i)| / 2`.
pub fn sample_direction<R: Rng + ?Sized>(p: &Polygon2D, rng: &mut R) -> Result<Direction> {
    let total = p.perimeter();
    if !(total > 0.0) {
        return Err(Error::DegenerateDomain);
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for (a, b) in p.edges() {
        let len = a.dist(b);
        if len == 0.0 {
            continue;
        }
        chosen = Some((a, b));
        acc += len;
        if target < acc {
            break;
        }
    }
    let (a, b) = chosen.ok_or(Error::DegenerateDomain)?;
    let phi = (b.y - a.y).atan2(b.x - a.x);
    let psi = (2.0 * rng.random::<f64>() - 1.0).asin();
    Ok(Direction::wrapped(phi + psi))
}

/// Splits a convex polygon along `{v : v . n(theta) = s}`.
///
/// The left piece holds the vertices with projection `< s`, the right piece
/// the rest; both receive the intersection vertices.
pub fn split_polygon(p: &Polygon2D, dir: Direction, s: f64) -> Result<(Polygon2D, Polygon2D)> {
    let (lo, hi) = p.projection_interval(dir);
    if !(lo < s && s < hi) {
        return Err(Error::NonSeparatingCut);
    }
    let verts = p.vertices();
    let n = verts.len();
    let mut left = Vec::with_capacity(n + 2);
    let mut right = Vec::with_capacity(n + 2);
    for i in 0..n {
        let a = verts[i];
        let b = verts[(i + 1) % n];
        let fa = dir.project(a) - s;
        let fb = dir.project(b) - s;
        if fa < 0.0 {
            left.push(a);
        } else {
            right.push(a);
        }
        if (fa < 0.0) != (fb < 0.0) {
            let ip = if fa == 0.0 {
                a
            } else if fb == 0.0 {
                b
            } else {
                let t = fa / (fa - fb);
                Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
            };
            left.push(ip);
            right.push(ip);
        }
    }
    Ok((convex_hull(&left)?, convex_hull(&right)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }
}

/// One oblique cutting hyperplane.
///
/// `d1 < d2` are zero-based coordinate indices and `t` is the absolute time
/// at which the cut occurred.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub d1: usize,
    pub d2: usize,
    pub theta: Direction,
    pub s: f64,
    pub t: f64,
}

impl Cut {
    /// Projection of `x` onto the cut normal in the `(d1, d2)` plane.
    #[inline]
    pub fn project(&self, x: &[f64]) -> f64 {
        self.theta.project(Point2::new(x[self.d1], x[self.d2]))
    }

    /// Signed cut functional `x[d1] cos(theta) + x[d2] sin(theta) - s`.
    pub fn functional(&self, x: &[f64]) -> f64 {
        self.project(x) - self.s
    }

    /// `Left` when the functional is negative, `Right` otherwise (ties go right).
    #[inline]
    pub fn side_of(&self, x: &[f64]) -> Side {
        if self.project(x) < self.s {
            Side::Left
        } else {
            Side::Right
        }
    }

    pub fn side_of_point2(&self, p: Point2) -> Side {
        if self.theta.project(p) < self.s {
            Side::Left
        } else {
            Side::Right
        }
    }
}
