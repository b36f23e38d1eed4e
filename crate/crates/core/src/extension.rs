//! Mollified Whitney-type extension `ṽ = Σ_k χ_k (φ_{2^{-(k+1)}} ∗ v)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Shape};
use crate::geom::{self, Point};
use crate::holder::MapFn;
use crate::quad::gauss_legendre;
use crate::stats::NeumaierSum;
use crate::{Error, Result};

/// Default finest layer.
pub const DEFAULT_K_MAX: u32 = 12;
/// Default Gauss nodes per axis for the mollifier integrals.
pub const DEFAULT_NODES: usize = 7;

/// How the source map on `Ω̄` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceRule {
    /// The map was given on the closed domain.
    Interior,
    /// Boundary values extended linearly along rays to the mean boundary value.
    Radial,
    /// Boundary values extended by the value at the nearest boundary point.
    NearestBoundary,
}

/// Immutable data of the extension `ṽ`.
#[derive(Clone)]
pub struct ExtensionPlan {
    domain: Arc<Domain>,
    source: MapFn,
    rule: SourceRule,
    k_max: u32,
    nodes: Vec<(Point, f64)>,
}

impl std::fmt::Debug for ExtensionPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExtensionPlan")
            .field("rule", &self.rule)
            .field("k_max", &self.k_max)
            .field("nodes", &self.nodes.len())
            .finish()
    }
}

/// Smooth step on `[0, 1]` with `S(u) + S(1 - u) = 1`.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let f = |t: f64| (-1.0 / t).exp();
    let (a, b) = (f(u), f(1.0 - u));
    a / (a + b)
}

/// Partition function `χ_k` at boundary distance `t`, supported exactly on `D_k`.
pub fn chi(k: u32, t: f64) -> f64 {
    if !(t > 0.0) {
        return 0.0;
    }
    let s = -t.log2();
    if k == 0 {
        if s <= 0.0 {
            1.0
        } else {
            smooth_step(1.0 - s)
        }
    } else {
        smooth_step(1.0 - (s - k as f64).abs())
    }
}

/// Tensor Gauss rule on `[-1, 1]^n` weighted by the bump `exp(-1/(1-|z|^2))`,
/// normalized to unit mass.
pub fn mollifier_rule(n: usize, per_axis: usize) -> Vec<(Point, f64)> {
    let (x, w) = gauss_legendre(per_axis);
    let mut out = Vec::new();
    let total = per_axis.pow(n as u32);
    for flat in 0..total {
        let mut z = [0.0; 3];
        let mut weight = 1.0;
        let mut rem = flat;
        for zi in z.iter_mut().take(n) {
            *zi = x[rem % per_axis];
            weight *= w[rem % per_axis];
            rem /= per_axis;
        }
        let r2 = geom::dot(z, z);
        if r2 < 1.0 {
            let b = (-1.0 / (1.0 - r2)).exp() * weight;
            if b > 0.0 {
                out.push((z, b));
            }
        }
    }
    let mass: f64 = out.iter().map(|(_, b)| b).sum();
    for (_, b) in &mut out {
        *b /= mass;
    }
    out
}

impl ExtensionPlan {
    /// Plan for a map given on the closed domain.
    pub fn from_interior(domain: Arc<Domain>, map: MapFn) -> Self {
        let n = domain.dim();
        Self { domain, source: map, rule: SourceRule::Interior, k_max: DEFAULT_K_MAX, nodes: mollifier_rule(n, DEFAULT_NODES) }
    }

    /// Plan for a map given on the boundary (as a function of boundary points).
    /// Balls use the radial rule, other domains the nearest-boundary-point rule.
    pub fn from_boundary(domain: Arc<Domain>, boundary: MapFn) -> Self {
        let n = domain.dim();
        let (source, rule): (MapFn, SourceRule) = match &domain.spec().shape {
            Shape::Ball { center, radius } => {
                let c = geom::from_slice(center);
                let r = *radius;
                let verts = domain.vertices();
                let mut mean = [0.0; 3];
                for v in verts {
                    mean = geom::add(mean, boundary(v));
                }
                let mean = geom::scale(mean, 1.0 / verts.len() as f64);
                let g = boundary.clone();
                let f: MapFn = Arc::new(move |x: &Point| {
                    let d = geom::sub(*x, c);
                    let rho = geom::norm(d);
                    if rho == 0.0 {
                        return mean;
                    }
                    let on_sphere = geom::add(c, geom::scale(d, r / rho));
                    let t = (rho / r).min(1.0);
                    geom::add(geom::scale(g(&on_sphere), t), geom::scale(mean, 1.0 - t))
                });
                (f, SourceRule::Radial)
            }
            _ => {
                let dom = domain.clone();
                let g = boundary.clone();
                let f: MapFn = Arc::new(move |x: &Point| g(&dom.nearest_boundary_point(*x)));
                (f, SourceRule::NearestBoundary)
            }
        };
        Self { domain, source, rule, k_max: DEFAULT_K_MAX, nodes: mollifier_rule(n, DEFAULT_NODES) }
    }

    pub fn with_k_max(mut self, k_max: u32) -> Self {
        self.k_max = k_max;
        self
    }

    /// Number of Gauss nodes per axis in the mollifier rule.
    pub fn with_nodes(mut self, per_axis: usize) -> Self {
        self.nodes = mollifier_rule(self.domain.dim(), per_axis);
        self
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn rule(&self) -> SourceRule {
        self.rule
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    /// The map on `Ω̄` being extended.
    pub fn source(&self) -> &MapFn {
        &self.source
    }

    /// Smallest boundary distance at which the extension is resolved.
    pub fn resolved_distance(&self) -> f64 {
        2f64.powi(-(self.k_max as i32))
    }

    /// Values `χ_k(x)` for `k = 0..=k_max`.
    pub fn partition(&self, x: Point) -> Vec<f64> {
        let t = self.domain.distance_to_boundary(x);
        (0..=self.k_max).map(|k| chi(k, t)).collect()
    }

    /// Mollified map `φ_ε ∗ v` at `x`.
    pub fn mollify(&self, x: Point, eps: f64) -> Point {
        let mut acc = [NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new()];
        for (z, w) in &self.nodes {
            let v = (self.source)(&geom::add(x, geom::scale(*z, eps)));
            for i in 0..3 {
                acc[i].add(w * v[i]);
            }
        }
        [acc[0].value(), acc[1].value(), acc[2].value()]
    }

    pub fn evaluate(&self, x: Point) -> Result<Point> {
        let t = self.domain.signed_distance(x);
        self.evaluate_at_distance(x, t)
    }

    fn evaluate_at_distance(&self, x: Point, t: f64) -> Result<Point> {
        if t <= 0.0 {
            return Err(Error::OutsideDomain);
        }
        if t <= self.resolved_distance() {
            let required = (-t.log2()).floor() as u32 + 1;
            return Err(Error::TooCloseToBoundary { dist: t, required });
        }
        let s = -t.log2();
        let k_lo = s.floor().max(0.0) as u32;
        let mut out = [0.0; 3];
        for k in k_lo.saturating_sub(1)..=(k_lo + 1).min(self.k_max) {
            let c = chi(k, t);
            if c > 0.0 {
                let eps = 2f64.powi(-(k as i32 + 1));
                out = geom::add(out, geom::scale(self.mollify(x, eps), c));
            }
        }
        Ok(out)
    }
}

/// Sup of `ρ_i(x) = |∇ṽ^i(x)| dist(x)^{1-α_i} / [v^i]` over interior samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradientBoundReport {
    pub points: Vec<Point>,
    pub distances: Vec<f64>,
    /// `ratios[j][i]` is `ρ_i` at sample `j`.
    pub ratios: Vec<Vec<f64>>,
    pub sup: Vec<f64>,
}

impl GradientBoundReport {
    pub fn to_csv(&self, n: usize) -> String {
        let mut out = String::from("x,y");
        if n == 3 {
            out.push_str(",z");
        }
        out.push_str(",dist");
        for i in 0..self.sup.len() {
            out.push_str(&format!(",rho_{}", i + 1));
        }
        out.push('\n');
        for ((p, d), r) in self.points.iter().zip(&self.distances).zip(&self.ratios) {
            let coords: Vec<String> = p.iter().take(n).map(|c| c.to_string()).collect();
            out.push_str(&coords.join(","));
            out.push_str(&format!(",{d}"));
            for v in r {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Knobs for [`gradient_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientOptions {
    /// Approximate number of sample points.
    pub budget: usize,
    /// Finite-difference step as a fraction of the boundary distance.
    pub step_factor: f64,
}

impl Default for GradientOptions {
    fn default() -> Self {
        Self { budget: 2000, step_factor: 0.01 }
    }
}

/// Finite-difference gradients of `ṽ` on an interior sample grid, normalized by the
/// component seminorms and exponents.
pub fn gradient_bound_check(
    plan: &ExtensionPlan,
    seminorms: &[f64],
    exponents: &[f64],
    opts: &GradientOptions,
) -> Result<GradientBoundReport> {
    let dom = &plan.domain;
    let n = dom.dim();
    if seminorms.len() != exponents.len() || seminorms.is_empty() {
        return Err(Error::InvalidParameter("seminorms and exponents must have equal, nonzero length".into()));
    }
    let comps = seminorms.len();
    let m = ((opts.budget as f64).powf(1.0 / n as f64).ceil() as usize).max(2);
    let (lo, hi) = dom.bbox();
    let mut samples = Vec::new();
    let total = m.pow(n as u32);
    for flat in 0..total {
        let mut rem = flat;
        let mut x = [0.0; 3];
        for i in 0..n {
            x[i] = lo[i] + (hi[i] - lo[i]) * ((rem % m) as f64 + 0.5) / m as f64;
            rem /= m;
        }
        samples.push(x);
    }
    let rows: Vec<Option<(Point, f64, Vec<f64>)>> = samples
        .par_iter()
        .map(|&x| {
            let t = dom.signed_distance(x);
            if t <= 2.0 * plan.resolved_distance() {
                return None;
            }
            let h = t * opts.step_factor;
            let mut grad2 = vec![0.0; comps];
            for axis in 0..n {
                let mut xp = x;
                let mut xm = x;
                xp[axis] += h;
                xm[axis] -= h;
                let vp = plan.evaluate(xp).ok()?;
                let vm = plan.evaluate(xm).ok()?;
                for i in 0..comps {
                    let d = (vp[i] - vm[i]) / (2.0 * h);
                    grad2[i] += d * d;
                }
            }
            let ratios = (0..comps)
                .map(|i| {
                    let g = grad2[i].sqrt();
                    if seminorms[i] > 0.0 {
                        g * t.powf(1.0 - exponents[i]) / seminorms[i]
                    } else if g == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                })
                .collect();
            Some((x, t, ratios))
        })
        .collect();
    let mut report = GradientBoundReport { points: vec![], distances: vec![], ratios: vec![], sup: vec![0.0; comps] };
    for (x, t, r) in rows.into_iter().flatten() {
        for i in 0..comps {
            report.sup[i] = report.sup[i].max(r[i]);
        }
        report.points.push(x);
        report.distances.push(t);
        report.ratios.push(r);
    }
    Ok(report)
}

/// Axis-aligned target grid centred at `center` with half-width `radius` and cell `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetGrid {
    pub n: usize,
    pub center: Point,
    pub radius: f64,
    pub h: f64,
}

impl TargetGrid {
    pub fn cells_per_axis(&self) -> usize {
        ((2.0 * self.radius / self.h).ceil() as usize).max(1)
    }

    pub fn origin(&self) -> Point {
        let mut o = self.center;
        let half = 0.5 * self.cells_per_axis() as f64 * self.h;
        for c in o.iter_mut().take(self.n) {
            *c -= half;
        }
        o
    }

    /// Flat index of the cell containing `y`, if inside the grid.
    pub fn locate(&self, y: Point) -> Option<usize> {
        let o = self.origin();
        let m = self.cells_per_axis();
        let mut flat = 0usize;
        let mut stride = 1usize;
        for i in 0..self.n {
            let c = ((y[i] - o[i]) / self.h).floor();
            if c < 0.0 || c >= m as f64 {
                return None;
            }
            flat += c as usize * stride;
            stride *= m;
        }
        Some(flat)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreimageBound {
    /// `∫_Ω |det Dṽ|`, which bounds `∫ N(y) dy`.
    pub total: f64,
    /// Estimated `N(y)` per target cell (mass / cell volume).
    pub counts: Vec<f64>,
    pub grid: TargetGrid,
    /// Mesh side used in the domain.
    pub mesh_h: f64,
    /// Cells whose side exceeds the local mollification radius.
    pub coarse_cells: usize,
    pub cells_used: usize,
}

/// Approximates `∫_Ω |det Dṽ|` by finite-difference Jacobians at the centres of a
/// uniform mesh of the domain, binning each cell's mass into the target cell of
/// its image.
pub fn preimage_count_bound(plan: &ExtensionPlan, grid: TargetGrid, mesh_cells: usize) -> Result<PreimageBound> {
    let dom = &plan.domain;
    let n = dom.dim();
    if grid.n != n {
        return Err(Error::InvalidParameter("target grid dimension differs from domain".into()));
    }
    let (lo, hi) = dom.bbox();
    let side = (0..n).map(|i| hi[i] - lo[i]).fold(0.0, f64::max);
    let hm = side / mesh_cells.max(1) as f64;
    let dims: Vec<usize> = (0..n).map(|i| (((hi[i] - lo[i]) / hm).ceil() as usize).max(1)).collect();
    let total_cells: usize = dims.iter().product();
    let vol = hm.powi(n as i32);
    let rows: Vec<Option<(Point, f64, bool)>> = (0..total_cells)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut x = [0.0; 3];
            for i in 0..n {
                x[i] = lo[i] + ((rem % dims[i]) as f64 + 0.5) * hm;
                rem /= dims[i];
            }
            let t = dom.signed_distance(x);
            if t <= 2.0 * plan.resolved_distance() {
                return None;
            }
            let step = (0.25 * hm).min(0.5 * t);
            let mut jac = [[0.0; 3]; 3];
            for axis in 0..n {
                let mut xp = x;
                let mut xm = x;
                xp[axis] += step;
                xm[axis] -= step;
                let vp = plan.evaluate(xp).ok()?;
                let vm = plan.evaluate(xm).ok()?;
                for i in 0..n {
                    jac[i][axis] = (vp[i] - vm[i]) / (2.0 * step);
                }
            }
            let det = if n == 2 {
                jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]
            } else {
                geom::dot(jac[0], geom::cross(jac[1], jac[2]))
            };
            let y = plan.evaluate(x).ok()?;
            let coarse = hm > 0.5 * t;
            Some((y, det.abs() * vol, coarse))
        })
        .collect();
    let mut counts = vec![0.0; grid.cells_per_axis().pow(n as u32)];
    let cell_vol = grid.h.powi(n as i32);
    let mut total = NeumaierSum::new();
    let mut coarse_cells = 0;
    let mut used = 0;
    for (y, mass, coarse) in rows.into_iter().flatten() {
        total.add(mass);
        used += 1;
        if coarse {
            coarse_cells += 1;
        }
        if let Some(c) = grid.locate(y) {
            counts[c] += mass / cell_vol;
        }
    }
    if coarse_cells > 0 {
        log::warn!("{coarse_cells} mesh cells are coarser than the local mollification radius");
    }
    Ok(PreimageBound { total: total.value(), counts, grid, mesh_h: hm, coarse_cells, cells_used: used })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::maps;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn disk() -> Arc<Domain> {
        Arc::new(DomainSpec::unit_ball(2).build().unwrap())
    }

    #[test]
    fn constants_preserved() {
        let plan = ExtensionPlan::from_interior(disk(), maps::constant([2.5, -1.0, 0.0]));
        for x in [[0.0, 0.0, 0.0], [0.5, 0.3, 0.0], [0.99, 0.0, 0.0]] {
            let v = plan.evaluate(x).unwrap();
            assert!((v[0] - 2.5).abs() < 1e-14 && (v[1] + 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn affine_preserved_in_core() {
        let f: MapFn = Arc::new(|x: &Point| [2.0 * x[0] - x[1] + 0.5, x[0] + 3.0 * x[1], 0.0]);
        let plan = ExtensionPlan::from_interior(disk(), f.clone());
        for x in [[0.1, 0.2, 0.0], [0.3, -0.1, 0.0], [0.0, 0.0, 0.0]] {
            let v = plan.evaluate(x).unwrap();
            let e = f(&x);
            assert!(geom::dist(v, e) < 1e-12);
        }
        // Affine maps are reproduced in every layer, not only D_0.
        let v = plan.evaluate([0.9, 0.05, 0.0]).unwrap();
        assert!(geom::dist(v, f(&[0.9, 0.05, 0.0])) < 1e-12);
    }

    #[test]
    fn holder_profile_within_modulus() {
        let plan = ExtensionPlan::from_interior(disk(), maps::radial_power(0.5));
        let v = plan.evaluate([0.0; 3]).unwrap();
        // Center is in D_0 with mollification radius 1/2; |ṽ - v| <= [v] δ^α, [v] <= 2^{1/2}.
        assert!(geom::norm(v) <= 2f64.sqrt() * 0.5f64.sqrt());
    }

    #[test]
    fn boundary_distance_errors() {
        let plan = ExtensionPlan::from_interior(disk(), maps::identity()).with_k_max(4);
        match plan.evaluate([0.99, 0.0, 0.0]) {
            Err(Error::TooCloseToBoundary { required, .. }) => assert!(required >= 7),
            other => panic!("{other:?}"),
        }
        assert!(matches!(plan.evaluate([1.5, 0.0, 0.0]), Err(Error::OutsideDomain)));
    }

    #[test]
    fn partition_supports() {
        for k in 0..6u32 {
            for t in [0.01, 0.1, 0.3, 0.6, 1.0] {
                if chi(k, t) > 0.0 {
                    assert!(crate::domain::WhitneyLayers::in_layer(k, t));
                }
            }
        }
    }

    #[test]
    fn radial_rule_on_ball() {
        let plan = ExtensionPlan::from_boundary(disk(), maps::circle_power(1).clone());
        assert_eq!(plan.rule(), SourceRule::Radial);
        let square = Arc::new(DomainSpec::unit_square().build().unwrap());
        let plan = ExtensionPlan::from_boundary(square, maps::identity());
        assert_eq!(plan.rule(), SourceRule::NearestBoundary);
    }

    #[test]
    fn radial_extension_of_identity() {
        let plan = ExtensionPlan::from_boundary(disk(), maps::identity());
        let v = plan.source()(&[0.3, 0.4, 0.0]);
        assert!(geom::dist(v, [0.3, 0.4, 0.0]) < 1e-12);
    }

    #[test]
    fn gradient_ratios() {
        let c = ExtensionPlan::from_interior(disk(), maps::constant([1.0, 1.0, 0.0]));
        let r = gradient_bound_check(&c, &[1.0, 1.0], &[1.0, 1.0], &GradientOptions::default()).unwrap();
        assert!(r.sup.iter().all(|&s| s < 1e-9));
        let id = ExtensionPlan::from_interior(disk(), maps::identity());
        let r = gradient_bound_check(&id, &[1.0, 1.0], &[1.0, 1.0], &GradientOptions::default()).unwrap();
        assert!(r.sup.iter().all(|&s| s <= 1.0 + 1e-6), "{:?}", r.sup);
        assert!(r.to_csv(2).lines().count() == r.points.len() + 1);
    }

    #[test]
    fn preimage_integrals() {
        let grid = TargetGrid { n: 2, center: [0.0; 3], radius: 2.5, h: 0.05 };
        for (map, exact) in [
            (maps::identity(), PI),
            (maps::scaled_identity(2.0), 4.0 * PI),
            (maps::complex_power(2), 2.0 * PI),
        ] {
            let plan = ExtensionPlan::from_interior(disk(), map);
            let b = preimage_count_bound(&plan, grid, 200).unwrap();
            assert!((b.total - exact).abs() / exact < 0.03, "{} vs {exact}", b.total);
        }
    }

    proptest! {
        #[test]
        fn partition_sums_to_one(x in -1.0f64..1.0, y in -1.0f64..1.0) {
            let plan = ExtensionPlan::from_interior(disk(), maps::identity());
            let t = plan.domain().signed_distance([x, y, 0.0]);
            prop_assume!(t > plan.resolved_distance());
            let chis = plan.partition([x, y, 0.0]);
            let s: f64 = chis.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(chis.iter().filter(|&&c| c > 0.0).count() <= 3);
        }

        #[test]
        fn boundary_agreement(theta in 0.0f64..6.283, depth in 0.001f64..0.2) {
            // |ṽ(x) - v(x̄)| <= C [v] dist^α for the radial Hölder profile.
            let plan = ExtensionPlan::from_interior(disk(), maps::radial_power(0.5));
            let r = 1.0 - depth;
            let x = [r * theta.cos(), r * theta.sin(), 0.0];
            let xb = [theta.cos(), theta.sin(), 0.0];
            let v = plan.evaluate(x).unwrap();
            let vb = maps::radial_power(0.5)(&xb);
            prop_assert!(geom::dist(v, vb) <= 3.0 * 2f64.sqrt() * depth.sqrt());
        }
    }
}
