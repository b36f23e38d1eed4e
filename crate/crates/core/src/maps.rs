//! Analytic test maps used across the crate.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::geom::{self, Point};
use crate::holder::MapFn;

pub fn identity() -> MapFn {
    Arc::new(|x: &Point| *x)
}

pub fn scaled_identity(lambda: f64) -> MapFn {
    Arc::new(move |x: &Point| geom::scale(*x, lambda))
}

pub fn constant(c: Point) -> MapFn {
    Arc::new(move |_: &Point| c)
}

/// `z ↦ z^k` in the plane, written as a real map.
pub fn complex_power(k: u32) -> MapFn {
    Arc::new(move |x: &Point| {
        let (mut re, mut im) = (1.0, 0.0);
        for _ in 0..k {
            let t = re * x[0] - im * x[1];
            im = re * x[1] + im * x[0];
            re = t;
        }
        [re, im, 0.0]
    })
}

/// Unit circle traversed `k` times: `θ ↦ (cos kθ, sin kθ)`.
pub fn circle_power(k: i32) -> MapFn {
    Arc::new(move |t: &Point| {
        let a = k as f64 * t[0];
        [a.cos(), a.sin(), 0.0]
    })
}

/// Planar rotation by `angle` applied after `v`.
pub fn rotate(v: MapFn, angle: f64) -> MapFn {
    let (c, s) = (angle.cos(), angle.sin());
    Arc::new(move |x: &Point| {
        let p = v(x);
        [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]
    })
}

/// `v + amplitude * w`.
pub fn perturb(v: MapFn, w: MapFn, amplitude: f64) -> MapFn {
    Arc::new(move |x: &Point| geom::add(v(x), geom::scale(w(x), amplitude)))
}

/// A fixed smooth planar perturbation field bounded by `1/2` in each component.
pub fn smooth_field() -> MapFn {
    Arc::new(|x: &Point| {
        [
            0.5 * (PI * x[1]).sin() * (0.5 * x[0]).cos(),
            0.5 * (PI * x[0]).cos() * (0.7 * x[1]).sin(),
            0.0,
        ]
    })
}

/// Radial Hölder profile `x ↦ |x|^{α-1} x`, which is `C^{0,α}` with the origin
/// as its least regular point.
pub fn radial_power(alpha: f64) -> MapFn {
    Arc::new(move |x: &Point| {
        let r = geom::norm(*x);
        if r == 0.0 {
            [0.0; 3]
        } else {
            geom::scale(*x, r.powf(alpha - 1.0))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_square() {
        let f = complex_power(2);
        let z = f(&[0.5, 0.5, 0.0]);
        assert!((z[0] - 0.0).abs() < 1e-15 && (z[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rotation_preserves_norm() {
        let f = rotate(identity(), 0.7);
        let p = f(&[0.3, -0.4, 0.0]);
        assert!((geom::norm(p) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn perturbation_amplitude() {
        let f = perturb(identity(), constant([1.0, 0.0, 0.0]), 0.25);
        assert_eq!(f(&[0.0; 3]), [0.25, 0.0, 0.0]);
    }
}
