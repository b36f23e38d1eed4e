use std::collections::HashMap;
use std::f64::consts::PI;

use crate::domain::Domain;
use crate::geom::{self, Point};
use crate::holder::MapFn;
use crate::{Error, Result};

/// Image of the boundary under a map: a closed polyline in the plane or a closed
/// triangulated surface in space.
#[derive(Debug, Clone)]
pub enum BoundaryImage {
    /// Points with `points.last() == points.first()`.
    Polyline { points: Vec<Point>, resolution: usize },
    Surface { vertices: Vec<Point>, triangles: Vec<[usize; 3]>, resolution: usize },
}

impl BoundaryImage {
    pub fn dim(&self) -> usize {
        match self {
            Self::Polyline { .. } => 2,
            Self::Surface { .. } => 3,
        }
    }

    /// Closes an open list of planar points.
    pub fn polyline(mut points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter("polyline needs at least 2 points".into()));
        }
        if points.first() != points.last() {
            points.push(points[0]);
        }
        let resolution = points.len() - 1;
        Ok(Self::Polyline { points, resolution })
    }

    /// Image of the domain's boundary discretization under `map`.
    pub fn from_domain(domain: &Domain, map: &MapFn) -> Self {
        let verts: Vec<Point> = domain.vertices().iter().map(|v| map(v)).collect();
        if domain.dim() == 2 {
            let mut points = verts;
            points.push(points[0]);
            let resolution = points.len() - 1;
            Self::Polyline { points, resolution }
        } else {
            Self::Surface { vertices: verts, triangles: domain.triangles().to_vec(), resolution: domain.triangles().len() }
        }
    }

    /// Image of a closed parametrized curve `θ ↦ f(θ)`, `θ ∈ [a, b]`, sampled at
    /// `samples` equal steps. The endpoint values must agree to `1e-9`.
    pub fn from_curve(f: &MapFn, a: f64, b: f64, samples: usize) -> Result<Self> {
        let samples = samples.max(3);
        let mut points: Vec<Point> = (0..samples)
            .map(|j| f(&[a + (b - a) * j as f64 / samples as f64, 0.0, 0.0]))
            .collect();
        let end = f(&[b, 0.0, 0.0]);
        if geom::dist(end, points[0]) > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "curve is not closed: endpoints differ by {:.3e}",
                geom::dist(end, points[0])
            )));
        }
        points.push(points[0]);
        Ok(Self::Polyline { points, resolution: samples })
    }

    /// Image of `f(θ_1, θ_2)` over `[-π, π] × [0, π]`, triangulated on an
    /// `m1 × m2` grid. Triangles with `θ_1 < 0` are reversed: the rectangle covers
    /// the sphere through `(θ_1, θ_2) ↦ (cos θ_1, sin θ_1 cos θ_2, sin θ_1 sin θ_2)`,
    /// whose Jacobian has the sign of `sin θ_1`.
    pub fn from_sphere_parametrization(f: &MapFn, m1: usize, m2: usize) -> Result<Self> {
        let (m1, m2) = (m1.max(4) & !1, m2.max(2));
        let mut vertices = Vec::with_capacity((m1 + 1) * (m2 + 1));
        for i in 0..=m1 {
            let t1 = -PI + 2.0 * PI * i as f64 / m1 as f64;
            for j in 0..=m2 {
                let t2 = PI * j as f64 / m2 as f64;
                vertices.push(f(&[t1, t2, 0.0]));
            }
        }
        let id = |i: usize, j: usize| i * (m2 + 1) + j;
        let mut triangles = Vec::with_capacity(2 * m1 * m2);
        for i in 0..m1 {
            let negative = 2 * i < m1;
            for j in 0..m2 {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                let mut t = [[a, b, c], [a, c, d]];
                if negative {
                    for tri in &mut t {
                        tri.swap(1, 2);
                    }
                }
                triangles.extend_from_slice(&t);
            }
        }
        let img = Self::Surface { vertices, triangles, resolution: m1 * m2 };
        img.check_closed()?;
        Ok(img)
    }

    /// Verifies closure: polylines end where they start; surfaces have every
    /// nondegenerate directed image edge matched by its reverse.
    pub fn check_closed(&self) -> Result<()> {
        match self {
            Self::Polyline { points, .. } => {
                if points.len() >= 2 && points.first() == points.last() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter("polyline is not closed".into()))
                }
            }
            Self::Surface { vertices, triangles, .. } => {
                let scale = vertices.iter().map(|v| geom::norm(*v)).fold(1e-300, f64::max);
                let q = |p: Point| -> [i64; 3] {
                    let s = 1e9 / scale;
                    [(p[0] * s).round() as i64, (p[1] * s).round() as i64, (p[2] * s).round() as i64]
                };
                let mut count: HashMap<([i64; 3], [i64; 3]), i64> = HashMap::new();
                for t in triangles {
                    for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                        let (qa, qb) = (q(vertices[a]), q(vertices[b]));
                        if qa == qb {
                            continue;
                        }
                        *count.entry((qa, qb)).or_default() += 1;
                        *count.entry((qb, qa)).or_default() -= 1;
                    }
                }
                let open = count.values().filter(|&&c| c != 0).count();
                if open == 0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("surface is not closed: {} unmatched edges", open / 2)))
                }
            }
        }
    }

    /// Distance from `y` to the image.
    pub fn distance(&self, y: Point) -> f64 {
        match self {
            Self::Polyline { points, .. } => points
                .windows(2)
                .map(|w| geom::point_segment_distance(y, w[0], w[1]))
                .fold(f64::INFINITY, f64::min),
            Self::Surface { vertices, triangles, .. } => triangles
                .iter()
                .map(|t| geom::point_triangle_distance(y, vertices[t[0]], vertices[t[1]], vertices[t[2]]))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Axis box containing the image.
    pub fn bbox(&self) -> (Point, Point) {
        let pts = match self {
            Self::Polyline { points, .. } => points,
            Self::Surface { vertices, .. } => vertices,
        };
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in pts {
            for i in 0..3 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        (lo, hi)
    }

    /// Largest distance of an image point from the origin.
    pub fn sup_norm(&self) -> f64 {
        let pts = match self {
            Self::Polyline { points, .. } => points,
            Self::Surface { vertices, .. } => vertices,
        };
        pts.iter().map(|p| geom::norm(*p)).fold(0.0, f64::max)
    }

    /// Longest image segment or triangle edge.
    pub fn max_edge(&self) -> f64 {
        match self {
            Self::Polyline { points, .. } => points.windows(2).map(|w| geom::dist(w[0], w[1])).fold(0.0, f64::max),
            Self::Surface { vertices, triangles, .. } => triangles
                .iter()
                .map(|t| {
                    let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
                    geom::dist(a, b).max(geom::dist(b, c)).max(geom::dist(c, a))
                })
                .fold(0.0, f64::max),
        }
    }

    /// Applies a map to every image point.
    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> Self {
        match self {
            Self::Polyline { points, resolution } => {
                Self::Polyline { points: points.iter().map(|p| f(*p)).collect(), resolution: *resolution }
            }
            Self::Surface { vertices, triangles, resolution } => Self::Surface {
                vertices: vertices.iter().map(|p| f(*p)).collect(),
                triangles: triangles.clone(),
                resolution: *resolution,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps;
    use std::sync::Arc;

    fn phi(c: f64) -> MapFn {
        Arc::new(move |t: &Point| {
            let (a, b) = (t[0], c * t[1]);
            [a.cos(), a.sin() * b.cos(), a.sin() * b.sin()]
        })
    }

    #[test]
    fn sphere_parametrizations_close() {
        assert!(BoundaryImage::from_sphere_parametrization(&phi(1.0), 32, 16).is_ok());
        assert!(BoundaryImage::from_sphere_parametrization(&phi(2.0), 32, 16).is_ok());
    }

    #[test]
    fn open_curve_rejected() {
        let f: MapFn = Arc::new(|t: &Point| [t[0], 0.0, 0.0]);
        assert!(BoundaryImage::from_curve(&f, 0.0, 1.0, 10).is_err());
        assert!(BoundaryImage::from_curve(&maps::circle_power(3), 0.0, 2.0 * PI, 10).is_ok());
    }

    #[test]
    fn distance_to_circle() {
        let img = BoundaryImage::from_curve(&maps::circle_power(1), 0.0, 2.0 * PI, 4096).unwrap();
        assert!((img.distance([0.0; 3]) - 1.0).abs() < 1e-6);
        assert!((img.sup_norm() - 1.0).abs() < 1e-12);
    }
}
