use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{round_degree, BoundaryImage};
use crate::domain::triangle_solid_angle;
use crate::geom::{self, Point};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolidAngleOptions {
    /// Targets within this distance of the surface are masked.
    pub tol: f64,
    /// Largest admissible solid angle of a single triangle.
    pub max_triangle_angle: f64,
}

impl Default for SolidAngleOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_triangle_angle: PI }
    }
}

/// Degree of a closed oriented surface around `y`: the sum of signed triangle
/// solid angles divided by `4π`.
pub fn solid_angle_degree_3d(image: &BoundaryImage, y: Point, opts: &SolidAngleOptions) -> Result<i64> {
    let BoundaryImage::Surface { vertices, triangles, .. } = image else {
        return Err(Error::InvalidParameter("solid-angle degree needs a triangulated surface".into()));
    };
    let mut total = 0.0;
    for (j, t) in triangles.iter().enumerate() {
        let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
        let d = geom::point_triangle_distance(y, a, b, c);
        if d <= opts.tol {
            return Err(Error::Masked { distance: d });
        }
        let omega = triangle_solid_angle(geom::sub(a, y), geom::sub(b, y), geom::sub(c, y));
        if omega.abs() >= opts.max_triangle_angle {
            return Err(Error::Unresolved(format!(
                "triangle {j} subtends solid angle {:.3} (limit {:.3})",
                omega.abs(),
                opts.max_triangle_angle
            )));
        }
        total += omega;
    }
    round_degree(total / (4.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::holder::MapFn;
    use crate::maps;
    use std::sync::Arc;

    fn phi(c: f64) -> MapFn {
        Arc::new(move |t: &Point| {
            let (a, b) = (t[0], c * t[1]);
            [a.cos(), a.sin() * b.cos(), a.sin() * b.sin()]
        })
    }

    #[test]
    fn identity_sphere() {
        let d = DomainSpec::unit_ball(3).build().unwrap();
        let img = BoundaryImage::from_domain(&d, &maps::identity());
        let o = SolidAngleOptions::default();
        assert_eq!(solid_angle_degree_3d(&img, [0.0; 3], &o).unwrap(), 1);
        assert_eq!(solid_angle_degree_3d(&img, [2.0, 0.0, 0.0], &o).unwrap(), 0);
    }

    #[test]
    fn parametrized_sphere_degrees() {
        let o = SolidAngleOptions::default();
        let one = BoundaryImage::from_sphere_parametrization(&phi(1.0), 64, 32).unwrap();
        assert_eq!(solid_angle_degree_3d(&one, [0.1, 0.2, -0.1], &o).unwrap(), 1);
        let two = BoundaryImage::from_sphere_parametrization(&phi(2.0), 128, 64).unwrap();
        assert_eq!(solid_angle_degree_3d(&two, [0.0; 3], &o).unwrap(), 2);
    }

    #[test]
    fn brute_force_oracle_doubled_azimuth() {
        // Direct Riemann sum of the degree integrand over the parameter rectangle:
        // (1/4π) ∫∫ det(f, f_1, f_2) / |f|^3 with f = Φ(θ_1, 2θ_2) - y.
        let y = [0.0; 3];
        let (m1, m2) = (800, 400);
        let h1 = 2.0 * PI / m1 as f64;
        let h2 = PI / m2 as f64;
        let mut acc = 0.0;
        for i in 0..m1 {
            let a = -PI + (i as f64 + 0.5) * h1;
            for j in 0..m2 {
                let b = 2.0 * (j as f64 + 0.5) * h2;
                let f = [a.cos(), a.sin() * b.cos(), a.sin() * b.sin()];
                let fa = [-a.sin(), a.cos() * b.cos(), a.cos() * b.sin()];
                let fb = [0.0, -2.0 * a.sin() * b.sin(), 2.0 * a.sin() * b.cos()];
                let g = geom::sub(f, y);
                let sign = if a < 0.0 { -1.0 } else { 1.0 };
                acc += sign * geom::dot(g, geom::cross(fa, fb)) / geom::norm(g).powi(3) * h1 * h2;
            }
        }
        assert!((acc / (4.0 * PI) - 2.0).abs() < 1e-3);
    }

    #[test]
    fn masked_target() {
        let d = DomainSpec::unit_ball(3).build().unwrap();
        let img = BoundaryImage::from_domain(&d, &maps::identity());
        let v = d.vertices()[0];
        assert!(matches!(
            solid_angle_degree_3d(&img, v, &SolidAngleOptions::default()),
            Err(Error::Masked { .. })
        ));
    }
}
