//! Bounded open domains in R^2 and R^3 with boundary discretizations.

mod boxcount;
mod whitney;

pub use boxcount::{box_counting_dimension, BoxCountOptions, BoxDimensionEstimate};
pub use whitney::{distance_power_integral, DistanceIntegral, IntegralOptions, WhitneyLayers};

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geom::{self, Point};
use crate::{Error, Result};

/// Default cap on the number of boundary vertices.
pub const DEFAULT_VERTEX_CAP: usize = 1 << 20;

/// Geometric description of a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Polygon { vertices: Vec<[f64; 2]> },
    Polyhedron { vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]> },
    Koch {
        level: u32,
        #[serde(default = "unit")]
        side: f64,
    },
}

fn unit() -> f64 {
    1.0
}

/// Domain descriptor as read from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub shape: Shape,
    /// Longest admissible boundary edge for discretized smooth shapes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_edge: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_cap: Option<usize>,
}

impl DomainSpec {
    pub fn new(shape: Shape) -> Self {
        Self { shape, max_edge: None, vertex_cap: None }
    }

    pub fn ball(center: &[f64], radius: f64) -> Self {
        Self::new(Shape::Ball { center: center.to_vec(), radius })
    }

    pub fn unit_ball(n: usize) -> Self {
        Self::ball(&vec![0.0; n], 1.0)
    }

    pub fn cube(lo: &[f64], hi: &[f64]) -> Self {
        Self::new(Shape::Box { lo: lo.to_vec(), hi: hi.to_vec() })
    }

    pub fn unit_square() -> Self {
        Self::cube(&[0.0, 0.0], &[1.0, 1.0])
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Self {
        Self::new(Shape::Polygon { vertices })
    }

    pub fn koch(level: u32) -> Self {
        Self::new(Shape::Koch { level, side: 1.0 })
    }

    pub fn with_max_edge(mut self, h: f64) -> Self {
        self.max_edge = Some(h);
        self
    }

    pub fn with_vertex_cap(mut self, cap: usize) -> Self {
        self.vertex_cap = Some(cap);
        self
    }

    pub fn build(&self) -> Result<Domain> {
        Domain::build(self)
    }
}

/// A bounded open set with a closed boundary discretization.
///
/// In the plane the boundary is a counter-clockwise closed polyline through
/// `vertices` (closure implicit). In space it is an outward-oriented triangulated
/// surface.
#[derive(Debug, Clone)]
pub struct Domain {
    n: usize,
    spec: DomainSpec,
    lo: Point,
    hi: Point,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
}

impl Domain {
    pub fn build(spec: &DomainSpec) -> Result<Self> {
        let cap = spec.vertex_cap.unwrap_or(DEFAULT_VERTEX_CAP);
        let mut dom = match &spec.shape {
            Shape::Ball { center, radius } => build_ball(center, *radius, spec.max_edge, cap)?,
            Shape::Box { lo, hi } => build_box(lo, hi, spec.max_edge, cap)?,
            Shape::Polygon { vertices } => build_polygon(vertices, cap, true)?,
            Shape::Polyhedron { vertices, triangles } => build_polyhedron(vertices, triangles, cap)?,
            Shape::Koch { level, side } => build_koch(*level, *side, cap)?,
        };
        dom.spec = spec.clone();
        Ok(dom)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn bbox(&self) -> (Point, Point) {
        (self.lo, self.hi)
    }

    pub fn bbox_diameter(&self) -> f64 {
        geom::dist(self.lo, self.hi)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Boundary triangles (empty in the plane).
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Planar boundary edges as vertex pairs, closing the polyline.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let m = self.vertices.len();
        (0..if self.n == 2 { m } else { 0 }).map(move |i| (self.vertices[i], self.vertices[(i + 1) % m]))
    }

    pub fn triangle_points(&self) -> impl Iterator<Item = [Point; 3]> + '_ {
        self.triangles
            .iter()
            .map(move |t| [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]])
    }

    /// Longest boundary edge of the discretization.
    pub fn max_edge_length(&self) -> f64 {
        if self.n == 2 {
            self.edges().map(|(a, b)| geom::dist(a, b)).fold(0.0, f64::max)
        } else {
            self.triangle_points()
                .map(|t| geom::dist(t[0], t[1]).max(geom::dist(t[1], t[2])).max(geom::dist(t[2], t[0])))
                .fold(0.0, f64::max)
        }
    }

    /// Whether the boundary of the domain is described analytically (ball or box),
    /// in which case distance and membership do not use the discretization.
    pub fn is_analytic(&self) -> bool {
        matches!(self.spec.shape, Shape::Ball { .. } | Shape::Box { .. })
    }

    /// Reference value for the boundary dimension of the supported shape classes.
    pub fn boundary_dimension_hint(&self) -> f64 {
        match self.spec.shape {
            Shape::Koch { .. } => 4f64.ln() / 3f64.ln(),
            _ => self.n as f64 - 1.0,
        }
    }

    pub fn contains(&self, x: Point) -> bool {
        match &self.spec.shape {
            Shape::Ball { center, radius } => {
                geom::dist(x, geom::from_slice(center)) < *radius
            }
            Shape::Box { .. } => (0..self.n).all(|i| x[i] > self.lo[i] && x[i] < self.hi[i]),
            _ if self.n == 2 => polygon_winding(&self.vertices, x) != 0,
            _ => {
                let w = solid_angle_sum(self, x) / (4.0 * PI);
                w.abs() > 0.5
            }
        }
    }

    /// Unsigned distance to the boundary. For discretized shapes this is the exact
    /// distance to the discretization.
    pub fn distance_to_boundary(&self, x: Point) -> f64 {
        match &self.spec.shape {
            Shape::Ball { center, radius } => (geom::dist(x, geom::from_slice(center)) - radius).abs(),
            Shape::Box { .. } => box_distance(self.n, self.lo, self.hi, x),
            _ if self.n == 2 => self
                .edges()
                .map(|(a, b)| geom::point_segment_distance(x, a, b))
                .fold(f64::INFINITY, f64::min),
            _ => self
                .triangle_points()
                .map(|t| geom::point_triangle_distance(x, t[0], t[1], t[2]))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Distance to the boundary, positive inside and negative outside.
    pub fn signed_distance(&self, x: Point) -> f64 {
        let d = self.distance_to_boundary(x);
        if self.contains(x) {
            d
        } else {
            -d
        }
    }

    /// Nearest point on the boundary.
    pub fn nearest_boundary_point(&self, x: Point) -> Point {
        match &self.spec.shape {
            Shape::Ball { center, radius } => {
                let c = geom::from_slice(center);
                let d = geom::sub(x, c);
                let r = geom::norm(d);
                if r == 0.0 {
                    let mut e = c;
                    e[0] += radius;
                    e
                } else {
                    geom::add(c, geom::scale(d, radius / r))
                }
            }
            Shape::Box { .. } => {
                let mut p = x;
                for i in 0..self.n {
                    p[i] = p[i].clamp(self.lo[i], self.hi[i]);
                }
                if p != x {
                    return p;
                }
                let mut best = (f64::INFINITY, 0, 0.0);
                for i in 0..self.n {
                    for bound in [self.lo[i], self.hi[i]] {
                        let d = (x[i] - bound).abs();
                        if d < best.0 {
                            best = (d, i, bound);
                        }
                    }
                }
                p[best.1] = best.2;
                p
            }
            _ if self.n == 2 => {
                let mut best = (f64::INFINITY, x);
                for (a, b) in self.edges() {
                    let ab = geom::sub(b, a);
                    let l2 = geom::dot(ab, ab);
                    let t = if l2 > 0.0 { (geom::dot(geom::sub(x, a), ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
                    let q = geom::add(a, geom::scale(ab, t));
                    let d = geom::dist(x, q);
                    if d < best.0 {
                        best = (d, q);
                    }
                }
                best.1
            }
            _ => {
                let mut best = (f64::INFINITY, x);
                for t in self.triangle_points() {
                    let q = geom::closest_point_on_triangle(x, t[0], t[1], t[2]);
                    let d = geom::dist(x, q);
                    if d < best.0 {
                        best = (d, q);
                    }
                }
                best.1
            }
        }
    }

    /// Whether the closed axis box `[lo, hi]` meets the boundary. Exact for analytic
    /// shapes; for discretized shapes it tests the discretization.
    pub fn box_meets_boundary(&self, lo: Point, hi: Point) -> bool {
        match &self.spec.shape {
            Shape::Ball { center, radius } => {
                let c = geom::from_slice(center);
                let (mut near, mut far) = (0.0, 0.0);
                for i in 0..self.n {
                    let dn = (lo[i] - c[i]).max(0.0).max(c[i] - hi[i]);
                    let df = (c[i] - lo[i]).abs().max((hi[i] - c[i]).abs());
                    near += dn * dn;
                    far += df * df;
                }
                near.sqrt() <= *radius && *radius <= far.sqrt()
            }
            Shape::Box { .. } => {
                let meets_closed = (0..self.n).all(|i| hi[i] >= self.lo[i] && lo[i] <= self.hi[i]);
                let inside_open = (0..self.n).all(|i| lo[i] > self.lo[i] && hi[i] < self.hi[i]);
                meets_closed && !inside_open
            }
            _ if self.n == 2 => self.edges().any(|(a, b)| geom::segment_meets_box2(a, b, lo, hi)),
            _ => self.triangle_points().any(|t| geom::triangle_meets_box3(t, lo, hi)),
        }
    }

    /// Boundary vertices as CSV (`x,y` or `x,y,z` per row).
    pub fn vertices_csv(&self) -> String {
        let mut out = if self.n == 2 { String::from("x,y\n") } else { String::from("x,y,z\n") };
        for v in &self.vertices {
            if self.n == 2 {
                out.push_str(&format!("{},{}\n", v[0], v[1]));
            } else {
                out.push_str(&format!("{},{},{}\n", v[0], v[1], v[2]));
            }
        }
        out
    }

    /// Triangle index table as CSV (space only).
    pub fn triangles_csv(&self) -> Option<String> {
        if self.n != 3 {
            return None;
        }
        let mut out = String::from("i,j,k\n");
        for t in &self.triangles {
            out.push_str(&format!("{},{},{}\n", t[0], t[1], t[2]));
        }
        Some(out)
    }

    /// Checks that every directed boundary edge is matched by its reverse exactly once.
    pub fn is_closed(&self) -> bool {
        if self.n == 2 {
            return self.vertices.len() >= 3;
        }
        edges_matched(&self.triangles)
    }
}

pub(crate) fn edges_matched(triangles: &[[usize; 3]]) -> bool {
    let mut count: HashMap<(usize, usize), i32> = HashMap::new();
    for t in triangles {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            *count.entry((a, b)).or_default() += 1;
        }
    }
    count.iter().all(|(&(a, b), &c)| c == 1 && count.get(&(b, a)) == Some(&1))
}

fn dims_of(xs: &[f64], what: &str) -> Result<usize> {
    match xs.len() {
        2 | 3 => Ok(xs.len()),
        k => Err(Error::InvalidDomain(format!("{what} has {k} coordinates; expected 2 or 3"))),
    }
}

fn check_cap(count: usize, cap: usize) -> Result<()> {
    if count > cap {
        Err(Error::TooManyVertices { count, cap })
    } else {
        Ok(())
    }
}

fn bbox_of(points: &[Point]) -> (Point, Point) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for i in 0..3 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    (lo, hi)
}

fn empty_spec() -> DomainSpec {
    DomainSpec::new(Shape::Ball { center: vec![], radius: 0.0 })
}

fn build_ball(center: &[f64], radius: f64, max_edge: Option<f64>, cap: usize) -> Result<Domain> {
    let n = dims_of(center, "ball center")?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidDomain(format!("ball radius must be positive, got {radius}")));
    }
    let c = geom::from_slice(center);
    let mut lo = c;
    let mut hi = c;
    for i in 0..n {
        lo[i] -= radius;
        hi[i] += radius;
    }
    let diam = geom::dist(lo, hi);
    let (vertices, triangles) = if n == 2 {
        let h = max_edge.unwrap_or(diam / 1024.0);
        let m = ((2.0 * PI * radius / h).ceil() as usize).max(16);
        check_cap(m, cap)?;
        let v = (0..m)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / m as f64;
                geom::pt2(c[0] + radius * t.cos(), c[1] + radius * t.sin())
            })
            .collect();
        (v, Vec::new())
    } else {
        let h = max_edge.unwrap_or(diam / 64.0);
        let (v, t) = icosphere(h / radius, cap)?;
        (v.into_iter().map(|p| geom::add(c, geom::scale(p, radius))).collect(), t)
    };
    Ok(Domain { n, spec: empty_spec(), lo, hi, vertices, triangles })
}

/// Unit icosphere refined until every edge is at most `h`.
pub(crate) fn icosphere(h: f64, cap: usize) -> Result<(Vec<Point>, Vec<[usize; 3]>)> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Point> = [
        [-1.0, t, 0.0], [1.0, t, 0.0], [-1.0, -t, 0.0], [1.0, -t, 0.0],
        [0.0, -1.0, t], [0.0, 1.0, t], [0.0, -1.0, -t], [0.0, 1.0, -t],
        [t, 0.0, -1.0], [t, 0.0, 1.0], [-t, 0.0, -1.0], [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| geom::scale(*p, 1.0 / geom::norm(*p)))
    .collect();
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    let edge = |v: &[Point], f: &[[usize; 3]]| {
        f.iter().map(|t| geom::dist(v[t[0]], v[t[1]])).fold(0.0, f64::max)
    };
    while edge(&v, &f) > h {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut nf = Vec::with_capacity(f.len() * 4);
        for t in &f {
            let mut m = [0usize; 3];
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                m[e] = *mid.entry(key).or_insert_with(|| {
                    let p = geom::scale(geom::add(v[a], v[b]), 0.5);
                    v.push(geom::scale(p, 1.0 / geom::norm(p)));
                    v.len() - 1
                });
            }
            nf.push([t[0], m[0], m[2]]);
            nf.push([t[1], m[1], m[0]]);
            nf.push([t[2], m[2], m[1]]);
            nf.push([m[0], m[1], m[2]]);
        }
        f = nf;
        check_cap(v.len(), cap)?;
    }
    if signed_volume(&v, &f) < 0.0 {
        for t in &mut f {
            t.swap(1, 2);
        }
    }
    Ok((v, f))
}

fn signed_volume(v: &[Point], f: &[[usize; 3]]) -> f64 {
    f.iter()
        .map(|t| geom::dot(v[t[0]], geom::cross(v[t[1]], v[t[2]])) / 6.0)
        .sum()
}

fn build_box(lo: &[f64], hi: &[f64], max_edge: Option<f64>, cap: usize) -> Result<Domain> {
    let n = dims_of(lo, "box corner")?;
    if hi.len() != n {
        return Err(Error::InvalidDomain("box corners differ in dimension".into()));
    }
    if (0..n).any(|i| !(hi[i] > lo[i])) {
        return Err(Error::InvalidDomain("box has empty interior (need lo < hi in every coordinate)".into()));
    }
    let lo = geom::from_slice(lo);
    let hi = geom::from_slice(hi);
    let diam = geom::dist(lo, hi);
    if n == 2 {
        let h = max_edge.unwrap_or(diam / 1024.0);
        let corners = [
            geom::pt2(lo[0], lo[1]),
            geom::pt2(hi[0], lo[1]),
            geom::pt2(hi[0], hi[1]),
            geom::pt2(lo[0], hi[1]),
        ];
        let mut v = Vec::new();
        for i in 0..4 {
            let (a, b) = (corners[i], corners[(i + 1) % 4]);
            let m = ((geom::dist(a, b) / h).ceil() as usize).max(1);
            for j in 0..m {
                v.push(geom::add(a, geom::scale(geom::sub(b, a), j as f64 / m as f64)));
            }
            check_cap(v.len(), cap)?;
        }
        Ok(Domain { n, spec: empty_spec(), lo, hi, vertices: v, triangles: Vec::new() })
    } else {
        let h = max_edge.unwrap_or(diam / 64.0);
        let m: Vec<usize> = (0..3).map(|i| (((hi[i] - lo[i]) / h).ceil() as usize).max(1)).collect();
        let est = 2 * (m[0] * m[1] + m[1] * m[2] + m[0] * m[2]) + 2;
        check_cap(est, cap)?;
        let mut index: HashMap<[i64; 3], usize> = HashMap::new();
        let mut v = Vec::new();
        let mut f = Vec::new();
        let mut vid = |g: [usize; 3], v: &mut Vec<Point>| -> usize {
            let key = [g[0] as i64, g[1] as i64, g[2] as i64];
            *index.entry(key).or_insert_with(|| {
                v.push([
                    lo[0] + (hi[0] - lo[0]) * g[0] as f64 / m[0] as f64,
                    lo[1] + (hi[1] - lo[1]) * g[1] as f64 / m[1] as f64,
                    lo[2] + (hi[2] - lo[2]) * g[2] as f64 / m[2] as f64,
                ]);
                v.len() - 1
            })
        };
        for axis in 0..3 {
            let (u, w) = ((axis + 1) % 3, (axis + 2) % 3);
            for side in [0usize, 1] {
                for a in 0..m[u] {
                    for b in 0..m[w] {
                        let corner = |da: usize, db: usize| {
                            let mut g = [0usize; 3];
                            g[axis] = side * m[axis];
                            g[u] = a + da;
                            g[w] = b + db;
                            g
                        };
                        let g = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)];
                        let ids: Vec<usize> = g.iter().map(|g| vid(*g, &mut v)).collect();
                        // (u, w, axis) is a right-handed frame, so (u, w) order faces +axis.
                        if side == 1 {
                            f.push([ids[0], ids[1], ids[2]]);
                            f.push([ids[0], ids[2], ids[3]]);
                        } else {
                            f.push([ids[0], ids[2], ids[1]]);
                            f.push([ids[0], ids[3], ids[2]]);
                        }
                    }
                }
            }
        }
        Ok(Domain { n, spec: empty_spec(), lo, hi, vertices: v, triangles: f })
    }
}

fn build_polygon(vertices: &[[f64; 2]], cap: usize, check_simple: bool) -> Result<Domain> {
    if vertices.len() < 3 {
        return Err(Error::InvalidDomain(format!("polygon needs at least 3 vertices, got {}", vertices.len())));
    }
    check_cap(vertices.len(), cap)?;
    let mut v: Vec<Point> = vertices.iter().map(|p| geom::pt2(p[0], p[1])).collect();
    if v.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::InvalidDomain("polygon has non-finite coordinates".into()));
    }
    let m = v.len();
    if check_simple {
        for i in 0..m {
            let (a, b) = (v[i], v[(i + 1) % m]);
            if a == b {
                return Err(Error::InvalidDomain(format!("polygon edge {i} has zero length")));
            }
            for j in (i + 2)..m {
                if i == 0 && j == m - 1 {
                    continue;
                }
                let (c, d) = (v[j], v[(j + 1) % m]);
                if geom::segments_intersect2(a, b, c, d) {
                    return Err(Error::SelfIntersecting(i, j));
                }
            }
        }
    }
    let area = polygon_area(&v);
    if area.abs() <= f64::EPSILON * bbox_scale(&v).powi(2) {
        return Err(Error::InvalidDomain("polygon has empty interior".into()));
    }
    if area < 0.0 {
        v.reverse();
    }
    let (lo, hi) = bbox_of(&v);
    Ok(Domain { n: 2, spec: empty_spec(), lo, hi, vertices: v, triangles: Vec::new() })
}

fn bbox_scale(v: &[Point]) -> f64 {
    let (lo, hi) = bbox_of(v);
    geom::dist(lo, hi).max(f64::MIN_POSITIVE)
}

pub(crate) fn polygon_area(v: &[Point]) -> f64 {
    let m = v.len();
    (0..m).map(|i| geom::cross2(v[i], v[(i + 1) % m])).sum::<f64>() / 2.0
}

fn build_polyhedron(vertices: &[[f64; 3]], triangles: &[[usize; 3]], cap: usize) -> Result<Domain> {
    check_cap(vertices.len(), cap)?;
    if triangles.len() < 4 {
        return Err(Error::InvalidDomain("polyhedron needs at least 4 triangles".into()));
    }
    if triangles.iter().flatten().any(|&i| i >= vertices.len()) {
        return Err(Error::InvalidDomain("triangle index out of range".into()));
    }
    let v: Vec<Point> = vertices.to_vec();
    let mut f = triangles.to_vec();
    if !edges_matched(&f) {
        return Err(Error::InvalidDomain("polyhedron surface is not closed and consistently oriented".into()));
    }
    let vol = signed_volume(&v, &f);
    if vol.abs() <= f64::EPSILON * bbox_scale(&v).powi(3) {
        return Err(Error::InvalidDomain("polyhedron has empty interior".into()));
    }
    if vol < 0.0 {
        for t in &mut f {
            t.swap(1, 2);
        }
    }
    let (lo, hi) = bbox_of(&v);
    Ok(Domain { n: 3, spec: empty_spec(), lo, hi, vertices: v, triangles: f })
}

/// Vertices of the level-`level` Koch snowflake on an equilateral triangle of the
/// given side, counter-clockwise, `3 * 4^level` of them.
pub fn koch_vertices(level: u32, side: f64) -> Vec<Point> {
    let h = 3f64.sqrt() / 2.0;
    let mut v = vec![geom::pt2(0.0, 0.0), geom::pt2(side, 0.0), geom::pt2(side / 2.0, side * h)];
    let (c, s) = ((-PI / 3.0).cos(), (-PI / 3.0).sin());
    for _ in 0..level {
        let m = v.len();
        let mut next = Vec::with_capacity(4 * m);
        for i in 0..m {
            let a = v[i];
            let b = v[(i + 1) % m];
            let d = geom::scale(geom::sub(b, a), 1.0 / 3.0);
            let p1 = geom::add(a, d);
            let p3 = geom::add(a, geom::scale(d, 2.0));
            let peak = geom::add(p1, geom::pt2(c * d[0] - s * d[1], s * d[0] + c * d[1]));
            next.extend_from_slice(&[a, p1, peak, p3]);
        }
        v = next;
    }
    v
}

fn build_koch(level: u32, side: f64, cap: usize) -> Result<Domain> {
    if !(side > 0.0 && side.is_finite()) {
        return Err(Error::InvalidDomain(format!("Koch side must be positive, got {side}")));
    }
    let count = 4usize.checked_pow(level).and_then(|p| p.checked_mul(3)).unwrap_or(usize::MAX);
    check_cap(count, cap)?;
    let v = koch_vertices(level, side);
    let (lo, hi) = bbox_of(&v);
    Ok(Domain { n: 2, spec: empty_spec(), lo, hi, vertices: v, triangles: Vec::new() })
}

fn box_distance(n: usize, lo: Point, hi: Point, x: Point) -> f64 {
    let mut outside = 0.0;
    let mut inside = f64::INFINITY;
    let mut is_inside = true;
    for i in 0..n {
        let d = (lo[i] - x[i]).max(x[i] - hi[i]);
        if d > 0.0 {
            is_inside = false;
            outside += d * d;
        }
        inside = inside.min(-d);
    }
    if is_inside {
        inside
    } else {
        outside.sqrt()
    }
}

/// Winding number of a closed polyline around `x` (crossing-number rule).
pub(crate) fn polygon_winding(v: &[Point], x: Point) -> i64 {
    let m = v.len();
    let mut w = 0;
    for i in 0..m {
        let a = v[i];
        let b = v[(i + 1) % m];
        if a[1] <= x[1] {
            if b[1] > x[1] && geom::cross2(geom::sub(b, a), geom::sub(x, a)) > 0.0 {
                w += 1;
            }
        } else if b[1] <= x[1] && geom::cross2(geom::sub(b, a), geom::sub(x, a)) < 0.0 {
            w -= 1;
        }
    }
    w
}

/// Signed solid angle of triangle `abc` seen from the origin (Van Oosterom–Strackee).
pub fn triangle_solid_angle(a: Point, b: Point, c: Point) -> f64 {
    let (la, lb, lc) = (geom::norm(a), geom::norm(b), geom::norm(c));
    let num = geom::dot(a, geom::cross(b, c));
    let den = la * lb * lc + geom::dot(a, b) * lc + geom::dot(a, c) * lb + geom::dot(b, c) * la;
    2.0 * num.atan2(den)
}

fn solid_angle_sum(dom: &Domain, x: Point) -> f64 {
    dom.triangle_points()
        .map(|t| triangle_solid_angle(geom::sub(t[0], x), geom::sub(t[1], x), geom::sub(t[2], x)))
        .sum()
}
