//! Chain of tangent spheres whose boundary map is Hölder continuous while its
//! degree fails to be `p`-integrable.
//!
//! The circle `[-π, π)` is split into sets `I_k` (one centred interval, then
//! symmetric pairs) of lengths `|I_k| = c(n,p) k^{-γ}`, `γ = (n−1)/n + 1/(p(n−1))`.
//! On `I_k` the map runs around the sphere `S_k` of radius `r_k = k^{-q}` and
//! centre `x_k`, `c_k + 1/2` times on each half, so `S_k` (k ≥ 2) is covered
//! `2c_k + 1` times in the plane.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::degree::BoundaryImage;
use crate::geom::{self, Point};
use crate::holder::{MapFn, ParamDomain, SampledMap};
use crate::stats::{fit_line, LineFit, NeumaierSum};
use crate::{Error, Result};

/// Terms summed exactly before the Euler–Maclaurin tail in `c(n, p)`.
const NORMALIZATION_TERMS: usize = 1_000_000;

/// Normalization `c(n,p) = 2π / Σ_k k^{-γ}`.
pub fn normalization_constant(n: usize, p: f64) -> f64 {
    2.0 * PI / zeta_tail_sum(series_exponent(n, p))
}

pub fn series_exponent(n: usize, p: f64) -> f64 {
    let n = n as f64;
    (n - 1.0) / n + 1.0 / (p * (n - 1.0))
}

/// `Σ_{k≥1} k^{-γ}` for `γ > 1`: direct sum plus an Euler–Maclaurin tail.
pub fn zeta_tail_sum(gamma: f64) -> f64 {
    let big_n = NORMALIZATION_TERMS;
    let mut s = NeumaierSum::new();
    for k in (1..=big_n).rev() {
        s.add((k as f64).powf(-gamma));
    }
    let nf = big_n as f64;
    let tail = nf.powf(1.0 - gamma) / (gamma - 1.0) - 0.5 * nf.powf(-gamma) + gamma * nf.powf(-gamma - 1.0) / 12.0
        - gamma * (gamma + 1.0) * (gamma + 2.0) * nf.powf(-gamma - 3.0) / 720.0;
    s.add(tail);
    s.value()
}

/// Lower bound on `q` ensuring `r_k ≤ (|I_k|/c_k)^α` up to constants.
pub fn q_lower_bound(n: usize, p: f64, alpha: f64) -> f64 {
    let m = (n - 1) as f64;
    alpha * p * m * m / (n as f64 * (p * m - alpha * n as f64))
}

/// Parameters of a truncated chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereChainParams {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    pub q: f64,
    /// `c_k = k^e`.
    pub e: u32,
    /// `c(n, p)`.
    pub normalization: f64,
    /// Truncation: number of spheres.
    pub k_max: usize,
    pub lengths: Vec<f64>,
    /// Partial sums `S_k = Σ_{i≤k} |I_i|`, with `S_0 = 0` in slot 0.
    pub partial: Vec<f64>,
    pub radii: Vec<f64>,
    pub circlings: Vec<u64>,
    pub centers: Vec<Point>,
}

/// Chooses the smallest integer `e ≥ 1` for which `q = (e p (n−1) + 1)/n` exceeds
/// the lower bound, so that every `c_k = k^e` is a natural number.
pub fn select_parameters(n: usize, p: f64, alpha: f64) -> Result<SphereChainParams> {
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidParameter(format!("dimension {n} not supported (use 2 or 3)")));
    }
    let m = (n - 1) as f64;
    let p_max = n as f64 / m;
    if !(p >= 1.0 && p < p_max) {
        return Err(Error::InvalidParameter(format!("p = {p} violates 1 <= p < n/(n-1) = {p_max}")));
    }
    let a_max = p * m / n as f64;
    if !(alpha > 0.0 && alpha < a_max) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} violates 0 < alpha < p(n-1)/n = {a_max}")));
    }
    let bound = q_lower_bound(n, p, alpha);
    let mut e = 1u32;
    let q = loop {
        let q = (f64::from(e) * p * m + 1.0) / n as f64;
        if q > bound {
            break q;
        }
        e += 1;
    };
    Ok(SphereChainParams {
        n,
        p,
        alpha,
        q,
        e,
        normalization: normalization_constant(n, p),
        k_max: 0,
        lengths: Vec::new(),
        partial: vec![0.0],
        radii: Vec::new(),
        circlings: Vec::new(),
        centers: Vec::new(),
    })
}

impl SphereChainParams {
    /// Fills the arrays for `k = 1..=k_max`.
    pub fn truncate(&self, k_max: usize) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::InvalidParameter("truncation needs at least one sphere".into()));
        }
        let gamma = series_exponent(self.n, self.p);
        let mut out = self.clone();
        out.k_max = k_max;
        out.lengths.clear();
        out.partial = vec![0.0];
        out.radii.clear();
        out.circlings.clear();
        out.centers.clear();
        let mut sum = NeumaierSum::new();
        let mut radius_sum = 0.0;
        for k in 1..=k_max {
            let kf = k as f64;
            let len = self.normalization * kf.powf(-gamma);
            sum.add(len);
            let r = kf.powf(-self.q);
            let c = (k as u64).checked_pow(self.e).ok_or_else(|| Error::InvalidParameter("circling count overflows".into()))?;
            let mut x = [0.0; 3];
            x[0] = r + 2.0 * radius_sum;
            radius_sum += r;
            out.lengths.push(len);
            out.partial.push(sum.value());
            out.radii.push(r);
            out.circlings.push(c);
            out.centers.push(x);
        }
        if out.partial[k_max] >= 2.0 * PI {
            return Err(Error::InvalidParameter("intervals exceed the circle".into()));
        }
        Ok(out)
    }

    /// `(k, r_k, (|I_k|/c_k)^α)` for every sphere.
    pub fn holder_condition(&self) -> Vec<(usize, f64, f64)> {
        (0..self.k_max)
            .map(|i| (i + 1, self.radii[i], (self.lengths[i] / self.circlings[i] as f64).powf(self.alpha)))
            .collect()
    }

    pub fn holder_condition_holds(&self) -> bool {
        self.holder_condition().iter().all(|&(_, r, b)| r <= b)
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary {
            n: usize,
            p: f64,
            alpha: f64,
            q: f64,
            e: u32,
            k_max: usize,
            normalization: f64,
        }
        let s = Summary {
            n: self.n,
            p: self.p,
            alpha: self.alpha,
            q: self.q,
            e: self.e,
            k_max: self.k_max,
            normalization: self.normalization,
        };
        Ok(serde_json::to_string_pretty(&s)?)
    }

    /// `k, |I_k|, r_k, c_k, x_k` per sphere.
    pub fn geometry_csv(&self) -> String {
        let mut s = String::from("k,length,radius,circlings,center_x\n");
        for i in 0..self.k_max {
            let _ = writeln!(s, "{},{},{},{},{}", i + 1, self.lengths[i], self.radii[i], self.circlings[i], self.centers[i][0]);
        }
        s
    }
}

/// Where a parameter `θ_1` falls.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    /// Index `k − 1` of `I_k`, and whether `θ_1 ≥ 0`.
    Sphere(usize, bool),
    Residual,
}

/// The truncated boundary map and its radial extension.
#[derive(Debug, Clone)]
pub struct ChainMap {
    pub params: Arc<SphereChainParams>,
}

/// `Φ(a, b) = (cos a, sin a cos b, sin a sin b)` in R^3, `(cos a, sin a)` in R^2.
fn phi(n: usize, a: f64, b: f64) -> Point {
    if n == 2 {
        [a.cos(), a.sin(), 0.0]
    } else {
        [a.cos(), a.sin() * b.cos(), a.sin() * b.sin()]
    }
}

/// Number of integers `m` with `lo ≤ x + 2πm < hi`.
fn count_half_open(lo: f64, hi: f64, x: f64) -> i64 {
    let a = ((lo - x) / (2.0 * PI)).ceil() as i64;
    let b = ((hi - x) / (2.0 * PI)).ceil() as i64 - 1;
    (b - a + 1).max(0)
}

/// Number of integers `m` with `lo ≤ x + 2πm ≤ hi`.
fn count_closed(lo: f64, hi: f64, x: f64) -> i64 {
    let a = ((lo - x) / (2.0 * PI)).ceil() as i64;
    let b = ((hi - x) / (2.0 * PI)).floor() as i64;
    (b - a + 1).max(0)
}

impl ChainMap {
    pub fn new(params: SphereChainParams) -> Result<Self> {
        if params.k_max == 0 {
            return Err(Error::InvalidParameter("parameters are not truncated".into()));
        }
        Ok(Self { params: Arc::new(params) })
    }

    pub fn dim(&self) -> usize {
        self.params.n
    }

    fn slot(&self, t: f64) -> Slot {
        let s = &self.params.partial;
        let k_max = self.params.k_max;
        let a = t.abs();
        if t >= 0.0 {
            // [S_{k-1}/2, S_k/2)
            let k = s[1..].partition_point(|&v| 0.5 * v <= t);
            if k < k_max {
                return Slot::Sphere(k, true);
            }
        } else {
            // k = 1: [-S_1/2, 0); k >= 2: [-S_k/2, -S_{k-1}/2)
            let k = s[1..].partition_point(|&v| 0.5 * v < a);
            if k < k_max {
                return Slot::Sphere(k, k == 0);
            }
        }
        Slot::Residual
    }

    /// Reparametrized angle `Θ(θ_1)` on `I_k` (index `i = k − 1`).
    fn big_theta(&self, i: usize, t: f64) -> f64 {
        let p = &self.params;
        let len = p.lengths[i];
        if i == 0 {
            return 2.0 * PI * t / len + PI;
        }
        let c = p.circlings[i] as f64;
        let phase = PI + PI * (2.0 * c + 1.0) * (1.0 - t.signum() * p.partial[i + 1] / len);
        4.0 * PI * (c + 0.5) * t / len + phase
    }

    /// Phase `φ_k(θ)` (meaningful for `k ≥ 2`).
    pub fn phase(&self, k: usize, t: f64) -> f64 {
        let p = &self.params;
        let c = p.circlings[k - 1] as f64;
        PI + PI * (2.0 * c + 1.0) * (1.0 - t.signum() * p.partial[k] / p.lengths[k - 1])
    }

    /// North pole `x_K + r_K e_1` of the last sphere, taken on the residual set.
    pub fn closure_value(&self) -> Point {
        let p = &self.params;
        let k = p.k_max - 1;
        geom::add(p.centers[k], [p.radii[k], 0.0, 0.0])
    }

    /// `v(θ_1, θ_2)`; `θ_2` is ignored in the plane.
    pub fn evaluate(&self, theta: &Point) -> Point {
        self.extended(1.0, theta)
    }

    /// Radial extension `ṽ(r, θ) = x_k + r r_k Φ(Θ(θ_1), c_k θ_2)`.
    pub fn extended(&self, r: f64, theta: &Point) -> Point {
        let p = &self.params;
        match self.slot(theta[0]) {
            Slot::Residual => {
                let k = p.k_max - 1;
                geom::add(p.centers[k], [r * p.radii[k], 0.0, 0.0])
            }
            Slot::Sphere(i, _) => {
                let a = self.big_theta(i, theta[0]);
                let b = p.circlings[i] as f64 * theta[1];
                geom::add(p.centers[i], geom::scale(phi(p.n, a, b), r * p.radii[i]))
            }
        }
    }

    pub fn func(&self) -> MapFn {
        let m = self.clone();
        Arc::new(move |t: &Point| m.evaluate(t))
    }

    /// The map as a function on the unit sphere of R^n.
    pub fn boundary_map(&self) -> MapFn {
        let m = self.clone();
        let n = self.dim();
        Arc::new(move |x: &Point| {
            let theta = if n == 2 {
                let mut t = x[1].atan2(x[0]);
                if t >= PI {
                    t -= 2.0 * PI;
                }
                [t, 0.0, 0.0]
            } else {
                let r = geom::norm(*x).max(f64::MIN_POSITIVE);
                let a = (x[0] / r).clamp(-1.0, 1.0).acos();
                if x[2] >= 0.0 {
                    [a, x[2].atan2(x[1]).clamp(0.0, PI), 0.0]
                } else {
                    [-a, (-x[2]).atan2(-x[1]).clamp(0.0, PI), 0.0]
                }
            };
            m.evaluate(&theta)
        })
    }

    /// The planar map as a sampled map on `[-π, π]`.
    pub fn sampled(&self) -> SampledMap {
        SampledMap::new(ParamDomain::interval(-PI, PI), self.dim(), self.func())
    }

    /// Junction parameters `±S_k/2`, `k = 1..=K`.
    pub fn junctions(&self) -> Vec<f64> {
        let p = &self.params;
        let mut j = Vec::new();
        for k in 1..=p.k_max {
            j.push(-0.5 * p.partial[k]);
            j.push(0.5 * p.partial[k]);
        }
        j
    }

    /// `|v(θ* − δ) − v(θ* + δ)|` at every junction.
    pub fn junction_gaps(&self, delta: f64, theta2: f64) -> Vec<f64> {
        self.junctions()
            .into_iter()
            .map(|t| geom::dist(self.evaluate(&[t - delta, theta2, 0.0]), self.evaluate(&[t + delta, theta2, 0.0])))
            .collect()
    }

    /// The ball `B^k` containing `y`, or the masking error if `y` lies within
    /// `tol` of a sphere.
    fn locate(&self, y: Point, tol: f64) -> Result<Option<usize>> {
        let p = &self.params;
        let mut inside = None;
        for i in 0..p.k_max {
            let d = geom::dist(y, p.centers[i]) - p.radii[i];
            if d.abs() <= tol {
                return Err(Error::Masked { distance: d.abs() });
            }
            if d < 0.0 {
                inside = Some(i);
            }
        }
        Ok(inside)
    }

    /// Spherical angles of `y − x_k`: `φ_1 ∈ [0, π]` and `φ_2 ∈ [0, 2π)` (only
    /// `φ_1 ∈ [0, 2π)` in the plane). Targets on the axis are nudged off it.
    fn target_angles(&self, i: usize, y: Point) -> (f64, f64) {
        let d = geom::sub(y, self.params.centers[i]);
        if self.dim() == 2 {
            (d[1].atan2(d[0]).rem_euclid(2.0 * PI), 0.0)
        } else {
            let r = geom::norm(d);
            let mut a = if r == 0.0 { 0.5 * PI } else { (d[0] / r).clamp(-1.0, 1.0).acos() };
            a = a.clamp(1e-9, PI - 1e-9);
            let b = d[2].atan2(d[1]).rem_euclid(2.0 * PI);
            (a, b)
        }
    }

    /// Θ ranges `[lo, hi)` of the two halves of `I_k` with the sign of `θ_1`.
    fn theta_ranges(&self, i: usize) -> [(f64, f64, i64); 2] {
        if i == 0 {
            [(0.0, PI, -1), (PI, 2.0 * PI, 1)]
        } else {
            let c = self.params.circlings[i] as f64;
            [(PI, (2.0 * c + 2.0) * PI, 1), ((2.0 * c + 2.0) * PI, (4.0 * c + 3.0) * PI, -1)]
        }
    }

    /// Degree of the radial extension at `y`: signed count of solutions of the
    /// angle system. In the plane every solution counts `+1`; in space the sign is
    /// `sgn(θ_1) · sgn(sin Θ)`.
    pub fn exact_degree(&self, y: Point, tol: f64) -> Result<i64> {
        let Some(i) = self.locate(y, tol)? else { return Ok(0) };
        let (f1, f2) = self.target_angles(i, y);
        let ranges = self.theta_ranges(i);
        if self.dim() == 2 {
            return Ok(ranges.iter().map(|&(lo, hi, _)| count_half_open(lo, hi, f1)).sum());
        }
        let c = self.params.circlings[i] as f64;
        let b_hi = c * PI;
        let mut total = 0;
        for &(lo, hi, s) in &ranges {
            total += s * count_half_open(lo, hi, f1) * count_closed(0.0, b_hi, f2);
            total -= s * count_half_open(lo, hi, -f1) * count_closed(0.0, b_hi, f2 + PI);
        }
        Ok(total)
    }

    /// Count from the angle system as written: admissible `m_1` in
    /// `[1/2 − φ_1/2π, 2c_k + 3/2 − φ_1/2π]` times `c_k^{n−2}`.
    pub fn angle_system_count(&self, y: Point, tol: f64) -> Result<i64> {
        let Some(i) = self.locate(y, tol)? else { return Ok(0) };
        let (f1, _) = self.target_angles(i, y);
        let c = self.params.circlings[i] as i64;
        let lo = (0.5 - f1 / (2.0 * PI)).ceil().max(1.0) as i64;
        let hi = (2.0 * c as f64 + 1.5 - f1 / (2.0 * PI)).floor() as i64;
        Ok((hi - lo + 1).max(0) * c.pow(self.dim() as u32 - 2))
    }

    /// Planar boundary image with `samples_per_turn` segments per turn of Θ.
    pub fn boundary_image(&self, samples_per_turn: usize) -> Result<BoundaryImage> {
        let p = &self.params;
        if p.n == 3 {
            let m1 = samples_per_turn.max(8) * p.circlings[p.k_max - 1] as usize * 2;
            let m2 = samples_per_turn.max(8) / 2 * p.circlings[p.k_max - 1] as usize;
            return BoundaryImage::from_sphere_parametrization(&self.func(), m1, m2);
        }
        let spt = samples_per_turn.max(8) as f64;
        let mut breaks = vec![-PI];
        for k in (1..=p.k_max).rev() {
            breaks.push(-0.5 * p.partial[k]);
        }
        for k in 1..=p.k_max {
            breaks.push(0.5 * p.partial[k]);
        }
        breaks.push(PI);
        let mut pts = Vec::new();
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let turns = match self.slot(mid) {
                Slot::Residual => 0.0,
                Slot::Sphere(i, _) => {
                    if i == 0 {
                        1.0
                    } else {
                        p.circlings[i] as f64 + 0.5
                    }
                }
            };
            let m = ((turns * spt).ceil() as usize).max(1);
            for j in 0..m {
                let t = a + (b - a) * j as f64 / m as f64;
                pts.push(self.evaluate(&[t, 0.0, 0.0]));
            }
        }
        pts.push(pts[0]);
        BoundaryImage::polyline(pts)
    }

    /// Radius of a ball about the origin containing the image.
    pub fn image_radius(&self) -> f64 {
        let p = &self.params;
        (0..p.k_max).map(|i| geom::norm(p.centers[i]) + p.radii[i]).fold(0.0, f64::max)
    }
}

/// Truncated `L^p` masses `S_K = Σ_{k≤K} deg_k^p ω_n r_k^n` and the fit
/// `S_K ≈ a + b log K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpMassTable {
    pub ks: Vec<usize>,
    pub sums: Vec<f64>,
    /// Partial sums of `r_k^n c_k^{p(n−1)}`.
    pub reduced: Vec<f64>,
    pub fit: Option<LineFit>,
    /// Largest `|S_K − fit(K)| / S_K` over the fitted range.
    pub rel_residual: f64,
}

impl LpMassTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("K,S_K,reduced\n");
        for i in 0..self.ks.len() {
            let _ = writeln!(s, "{},{},{}", self.ks[i], self.sums[i], self.reduced[i]);
        }
        s
    }
}

pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Degree used for the mass of `B^k`: `1` for `k = 1` and `2c_k + 1` otherwise in
/// the plane; in space the lower bound `2 c_k^{n−1}`.
pub fn ball_degree(params: &SphereChainParams, k: usize) -> f64 {
    let c = params.circlings[k - 1] as f64;
    if params.n == 2 {
        if k == 1 {
            1.0
        } else {
            2.0 * c + 1.0
        }
    } else {
        2.0 * c.powi(params.n as i32 - 1)
    }
}

/// Partial sums for `K = 1..=k_max` (recorded at powers of two and `k_max`) and a
/// logarithmic fit over `[fit_from, k_max]`.
pub fn truncated_lp_mass(params: &SphereChainParams, p: f64, k_max: usize, fit_from: usize) -> Result<LpMassTable> {
    if k_max < 1 || p < 1.0 {
        return Err(Error::InvalidParameter("need K >= 1 and p >= 1".into()));
    }
    let full = if params.k_max >= k_max { params.clone() } else { params.truncate(k_max)? };
    let n = full.n;
    let omega = unit_ball_volume(n);
    let mut s = NeumaierSum::new();
    let mut red = NeumaierSum::new();
    let mut ks = Vec::new();
    let mut sums = Vec::new();
    let mut reduced = Vec::new();
    for k in 1..=k_max {
        let r = full.radii[k - 1];
        let c = full.circlings[k - 1] as f64;
        s.add(ball_degree(&full, k).powf(p) * omega * r.powi(n as i32));
        red.add(r.powi(n as i32) * c.powf(p * (n - 1) as f64));
        if k.is_power_of_two() || k == k_max {
            ks.push(k);
            sums.push(s.value());
            reduced.push(red.value());
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = ks
        .iter()
        .zip(&sums)
        .filter(|(k, _)| **k >= fit_from)
        .map(|(k, v)| ((*k as f64).ln(), *v))
        .unzip();
    let fit = fit_line(&xs, &ys);
    let rel_residual = fit.as_ref().map_or(f64::INFINITY, |f| {
        xs.iter().zip(&ys).map(|(x, y)| ((y - f.predict(*x)) / y).abs()).fold(0.0, f64::max)
    });
    Ok(LpMassTable { ks, sums, reduced, fit, rel_residual })
}

/// Harmonic number `H_K`.
pub fn harmonic(k: usize) -> f64 {
    let mut s = NeumaierSum::new();
    for i in (1..=k).rev() {
        s.add(1.0 / i as f64);
    }
    s.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree::{solid_angle_degree_3d, winding_degree_2d, SolidAngleOptions};
    use crate::holder::holder_seminorm;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn planar(k: usize) -> ChainMap {
        ChainMap::new(select_parameters(2, 1.0, 0.4).unwrap().truncate(k).unwrap()).unwrap()
    }

    #[test]
    fn parameter_selection() {
        let p = select_parameters(2, 1.0, 0.4).unwrap();
        assert!((q_lower_bound(2, 1.0, 0.4) - 1.0).abs() < 1e-12);
        assert_eq!(p.e, 2);
        assert_eq!(p.q, 1.5);
        assert!((p.normalization - 2.405_161_766_030_75).abs() < 1e-8);
        assert!(select_parameters(2, 1.0, 0.6).is_err());
        assert!(select_parameters(2, 2.0, 0.4).is_err());
    }

    #[test]
    fn lengths_sum_to_the_circle() {
        let p = select_parameters(2, 1.0, 0.4).unwrap();
        let gamma = series_exponent(2, 1.0);
        let t = p.truncate(20_000).unwrap();
        let kf = 20_000f64;
        let tail = p.normalization * (kf.powf(1.0 - gamma) / (gamma - 1.0) - 0.5 * kf.powf(-gamma));
        assert!((t.partial[20_000] + tail - 2.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn spheres_touch() {
        let p = planar(40).params;
        for i in 0..39 {
            let gap = geom::dist(p.centers[i + 1], p.centers[i]) - p.radii[i] - p.radii[i + 1];
            assert!(gap.abs() < 1e-12);
        }
        assert!(p.holder_condition_holds());
    }

    #[test]
    fn center_of_first_interval_maps_to_origin() {
        let v = planar(3).evaluate(&[0.0; 3]);
        assert!(geom::norm(v) < 1e-15);
    }

    #[test]
    fn junctions_are_continuous() {
        for g in planar(12).junction_gaps(1e-9, 0.0) {
            assert!(g < 1e-6, "{g}");
        }
    }

    #[test]
    fn image_lies_on_spheres() {
        let m = planar(6);
        let p = m.params.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let t = rng.gen_range(-0.5 * p.partial[6]..0.5 * p.partial[6]);
            let Slot::Sphere(i, _) = m.slot(t) else { panic!("residual") };
            let d = geom::dist(m.evaluate(&[t, 0.0, 0.0]), p.centers[i]);
            assert!((d - p.radii[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_degree_in_the_plane() {
        let m = planar(3);
        let p = m.params.clone();
        assert_eq!(m.exact_degree([p.centers[0][0], 0.3, 0.0], 1e-9).unwrap(), 1);
        assert_eq!(m.exact_degree([p.centers[1][0], 0.1, 0.0], 1e-9).unwrap(), 9);
        assert_eq!(m.exact_degree([p.centers[2][0] + 0.05, -0.05, 0.0], 1e-9).unwrap(), 19);
        assert_eq!(m.exact_degree([0.0, 2.0, 0.0], 1e-9).unwrap(), 0);
        assert!(matches!(m.exact_degree([0.0, 0.0, 0.0], 1e-9), Err(Error::Masked { .. })));
        for k in 1..=3 {
            let y = geom::add(p.centers[k - 1], [0.0, 0.3 * p.radii[k - 1], 0.0]);
            let c = p.circlings[k - 1] as i64;
            assert!(m.angle_system_count(y, 1e-9).unwrap() >= 2 * c);
        }
    }

    #[test]
    fn winding_matches_exact_degree() {
        let m = planar(5);
        let img = m.boundary_image(64).unwrap();
        let p = m.params.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 100 {
            let i = rng.gen_range(0..5);
            let r = p.radii[i] * rng.gen_range(0.0f64..1.0).sqrt();
            let a = rng.gen_range(0.0..2.0 * PI);
            let y = geom::add(p.centers[i], [r * a.cos(), r * a.sin(), 0.0]);
            let tol = 1e-3 * p.radii[i];
            let (Ok(w), Ok(e)) = (winding_degree_2d(&img, y, tol), m.exact_degree(y, tol)) else { continue };
            assert_eq!(w, e);
            checked += 1;
        }
    }

    #[test]
    fn spatial_chain_single_sphere() {
        let p = select_parameters(3, 1.0, 0.5).unwrap();
        let m = ChainMap::new(p.truncate(1).unwrap()).unwrap();
        let img = m.boundary_image(32).unwrap();
        let x = m.params.centers[0];
        let opts = SolidAngleOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let d = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
            let y = geom::add(x, d);
            assert_eq!(solid_angle_degree_3d(&img, y, &opts).unwrap(), m.exact_degree(y, 1e-9).unwrap());
        }
        assert_eq!(m.exact_degree(geom::add(x, [0.1, 0.2, 0.3]), 1e-9).unwrap(), -1);
    }

    #[test]
    fn spatial_chain_with_two_spheres_is_not_closed() {
        let p = select_parameters(3, 1.0, 0.5).unwrap();
        let m = ChainMap::new(p.truncate(2).unwrap()).unwrap();
        assert!(m.params.circlings[1] % 2 == 0);
        assert!(m.boundary_image(16).is_err());
    }

    #[test]
    fn divergent_mass() {
        let p = select_parameters(2, 1.0, 0.4).unwrap();
        let t = truncated_lp_mass(&p, 1.0, 4096, 16).unwrap();
        let fit = t.fit.unwrap();
        assert!(fit.slope > 0.0);
        assert!(t.rel_residual < 0.05);
        let last = t.sums.len() - 1;
        let diff = t.sums[last] - t.sums[last - 1];
        assert!((diff - 2.0 * PI * 2f64.ln()).abs() < 0.1 * 2.0 * PI * 2f64.ln());
        for (k, r) in t.ks.iter().zip(&t.reduced) {
            assert!((r - harmonic(*k)).abs() < 1e-9 * r);
        }
        let one = truncated_lp_mass(&p, 1.0, 1, 1).unwrap();
        assert!((one.sums[0] - PI).abs() < 1e-15);
    }

    #[test]
    fn holder_estimate_is_stable_in_k() {
        let base = holder_seminorm(&planar(4).sampled(), 0.4, 1 << 14).unwrap().value;
        for k in [2, 8, 16] {
            let v = holder_seminorm(&planar(k).sampled(), 0.4, 1 << 14).unwrap().value;
            assert!(v <= 2.0 * base && v >= 0.5 * base, "K={k}: {v} vs {base}");
        }
    }

    proptest! {
        #[test]
        fn degree_is_positive_and_odd_inside(k in 1usize..8, s in 0.0f64..0.95, a in 0.0f64..6.28) {
            let m = planar(8);
            let p = m.params.clone();
            let y = geom::add(p.centers[k - 1], [s * p.radii[k - 1] * a.cos(), s * p.radii[k - 1] * a.sin(), 0.0]);
            if let Ok(d) = m.exact_degree(y, 1e-12) {
                let c = p.circlings[k - 1] as i64;
                prop_assert_eq!(d, if k == 1 { 1 } else { 2 * c + 1 });
            }
        }
    }
}
