use std::f64::consts::{FRAC_PI_2, PI};

use super::{round_degree, BoundaryImage};
use crate::geom::{self, Point};
use crate::holder::MapFn;
use crate::{Error, Result};

fn signed_angle(a: Point, b: Point) -> f64 {
    geom::cross2(a, b).atan2(geom::dot(a, b))
}

/// Winding number of a closed planar polyline around `y`.
///
/// Fails with [`Error::Masked`] if `y` lies within `tol` of the polyline and with
/// [`Error::Unresolved`] if a segment subtends an angle of `π/2` or more at `y`.
pub fn winding_degree_2d(image: &BoundaryImage, y: Point, tol: f64) -> Result<i64> {
    let BoundaryImage::Polyline { points, .. } = image else {
        return Err(Error::InvalidParameter("winding degree needs a planar polyline".into()));
    };
    let mut total = 0.0;
    for (j, w) in points.windows(2).enumerate() {
        let d = geom::point_segment_distance(y, w[0], w[1]);
        if d <= tol {
            return Err(Error::Masked { distance: d });
        }
        let angle = signed_angle(geom::sub(w[0], y), geom::sub(w[1], y));
        if angle.abs() >= FRAC_PI_2 {
            return Err(Error::Unresolved(format!(
                "segment {j} subtends {:.3} rad (limit π/2)",
                angle.abs()
            )));
        }
        total += angle;
    }
    round_degree(total / (2.0 * PI))
}

/// Winding number of the closed curve `θ ↦ f(θ)`, `θ ∈ [a, b]`, around `y`, with
/// the parameter intervals bisected until each subtends less than `π/4`.
pub fn adaptive_winding(f: &MapFn, a: f64, b: f64, y: Point, tol: f64, initial: usize) -> Result<i64> {
    let at = |t: f64| geom::sub(f(&[t, 0.0, 0.0]), y);
    let start = at(a);
    let end = at(b);
    if geom::dist(start, end) > 1e-9 {
        return Err(Error::InvalidParameter("curve is not closed".into()));
    }
    let initial = initial.max(4);
    let mut total = 0.0;
    let mut stack: Vec<(f64, f64, Point, Point, u32)> = Vec::new();
    let mut prev = start;
    for j in 0..initial {
        let t0 = a + (b - a) * j as f64 / initial as f64;
        let t1 = a + (b - a) * (j + 1) as f64 / initial as f64;
        let next = if j + 1 == initial { start } else { at(t1) };
        stack.push((t0, t1, prev, next, 0));
        while let Some((t0, t1, p, q, depth)) = stack.pop() {
            let d = geom::point_segment_distance([0.0; 3], p, q);
            let angle = signed_angle(p, q);
            if angle.abs() < PI / 4.0 && d > tol {
                total += angle;
                continue;
            }
            if depth >= 40 {
                if d <= tol {
                    return Err(Error::Masked { distance: d });
                }
                return Err(Error::Unresolved(format!("no resolution near θ = {t0:.6}")));
            }
            let tm = 0.5 * (t0 + t1);
            let m = at(tm);
            if geom::norm(m) <= tol {
                return Err(Error::Masked { distance: geom::norm(m) });
            }
            stack.push((tm, t1, m, q, depth + 1));
            stack.push((t0, tm, p, m, depth + 1));
        }
        prev = next;
    }
    round_degree(total / (2.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps;
    use proptest::prelude::*;

    fn circle(k: i32, n: usize) -> BoundaryImage {
        BoundaryImage::from_curve(&maps::circle_power(k), 0.0, 2.0 * PI, n).unwrap()
    }

    #[test]
    fn identity_circle() {
        assert_eq!(winding_degree_2d(&circle(1, 256), [0.3, 0.0, 0.0], 1e-9).unwrap(), 1);
    }

    #[test]
    fn triple_circle() {
        assert_eq!(winding_degree_2d(&circle(3, 1024), [0.0; 3], 1e-9).unwrap(), 3);
        assert_eq!(winding_degree_2d(&circle(-2, 1024), [0.1, 0.2, 0.0], 1e-9).unwrap(), -2);
    }

    #[test]
    fn outside_is_zero() {
        assert_eq!(winding_degree_2d(&circle(3, 1024), [1.5, 0.2, 0.0], 1e-9).unwrap(), 0);
    }

    #[test]
    fn masked_and_unresolved() {
        assert!(matches!(
            winding_degree_2d(&circle(1, 64), [1.0, 0.0, 0.0], 1e-6),
            Err(Error::Masked { .. })
        ));
        assert!(matches!(winding_degree_2d(&circle(1, 3), [0.0; 3], 1e-9), Err(Error::Unresolved(_))));
    }

    #[test]
    fn adaptive_matches_dense() {
        let f = maps::circle_power(5);
        assert_eq!(adaptive_winding(&f, 0.0, 2.0 * PI, [0.2, -0.1, 0.0], 1e-9, 8).unwrap(), 5);
        assert_eq!(adaptive_winding(&f, 0.0, 2.0 * PI, [0.999, 0.0, 0.0], 1e-9, 8).unwrap(), 5);
    }

    proptest! {
        #[test]
        fn brute_force_angle_oracle(k in -4i32..=4, r in 0.0f64..0.9, a in 0.0f64..6.28) {
            let y = [r * a.cos(), r * a.sin(), 0.0];
            prop_assert_eq!(winding_degree_2d(&circle(k, 2048), y, 1e-9).unwrap(), k as i64);
        }

        #[test]
        fn stable_under_perturbation(k in 1i32..=3, r in 0.0f64..0.5, eps in 0.0f64..0.2, seed in 0u64..1000) {
            // Perturbations below half the distance from y to the image leave the degree unchanged.
            let y = [r, 0.0, 0.0];
            let base = circle(k, 2048);
            let d = base.distance(y);
            let amp = eps.min(0.49) * d;
            let pert = base.map_points(|p| {
                let s = ((p[0] * 12.9898 + p[1] * 78.233 + seed as f64).sin() * 43758.5453).fract();
                [p[0] + amp * s * (p[1] * 3.0).cos(), p[1] + amp * s * (p[0] * 5.0).sin(), 0.0]
            });
            prop_assert_eq!(
                winding_degree_2d(&pert, y, 1e-12).unwrap(),
                winding_degree_2d(&base, y, 1e-12).unwrap()
            );
        }
    }
}
