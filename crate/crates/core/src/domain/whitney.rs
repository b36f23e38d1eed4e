use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Domain;
use crate::geom::Point;
use crate::stats::neumaier_sum;
use crate::{Error, Result};

/// Dyadic distance shells `D_k = { 2^{-(k+1)} < dist(x, ∂Ω) < 2^{-(k-1)} }`, with
/// `D_0 = { dist > 1/2 }`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct WhitneyLayers {
    /// `(k, N_k)`: dyadic level and the number of accepted cubes of side `2^{-k}`.
    pub cube_counts: Vec<(i32, u64)>,
}

impl WhitneyLayers {
    /// Whether a point at boundary distance `t` lies in `D_k`.
    pub fn in_layer(k: u32, t: f64) -> bool {
        if k == 0 {
            t > 0.5
        } else {
            let k = k as i32;
            t > 2f64.powi(-(k + 1)) && t < 2f64.powi(-(k - 1))
        }
    }

    /// Indices of the layers containing a point at distance `t` (at most three).
    pub fn layers_of(t: f64) -> Vec<u32> {
        if !(t > 0.0) {
            return Vec::new();
        }
        let s = -t.log2();
        let centre = s.round().max(0.0) as u32;
        (centre.saturating_sub(2)..=centre + 2).filter(|&k| Self::in_layer(k, t)).collect()
    }

    /// Side of the cubes in level `k`.
    pub fn cube_size(k: i32) -> f64 {
        2f64.powi(-k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralOptions {
    /// Finest dyadic level.
    pub k_max: u32,
    /// A cube of side `ℓ` is accepted once its center lies at distance
    /// `>= accept * sqrt(n) * ℓ` from the boundary.
    pub accept: f64,
    /// Boundary dimension used for the divergence warning; defaults to the
    /// domain's reference value.
    pub dimension: Option<f64>,
}

impl Default for IntegralOptions {
    fn default() -> Self {
        Self { k_max: 16, accept: 1.5, dimension: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceIntegral {
    pub exponent: f64,
    /// Sum of layer contributions plus the geometric tail estimate.
    pub value: f64,
    /// `(k, contribution of level k)`.
    pub layers: Vec<(i32, f64)>,
    /// Running partial sums of the layer contributions.
    pub partial_sums: Vec<f64>,
    /// Extrapolated contribution of the unresolved levels beyond `k_max`.
    pub tail: f64,
    /// Ratio of the last two layer contributions.
    pub decay_ratio: f64,
    /// Set when `s <= d - n`, where the integral may diverge.
    pub may_diverge: bool,
    pub whitney: WhitneyLayers,
}

/// Approximates `∫_Ω dist(x, ∂Ω)^s dx` by a midpoint rule over dyadic cubes
/// accepted level by level.
pub fn distance_power_integral(domain: &Domain, s: f64, opts: &IntegralOptions) -> Result<DistanceIntegral> {
    if !s.is_finite() {
        return Err(Error::InvalidParameter(format!("exponent must be finite, got {s}")));
    }
    let n = domain.dim();
    let d = opts.dimension.unwrap_or_else(|| domain.boundary_dimension_hint());
    let may_diverge = s <= d - n as f64;
    if may_diverge {
        log::warn!("exponent {s} <= d - n = {}: the integral may diverge", d - n as f64);
    }
    let (lo, hi) = domain.bbox();
    let span = (0..n).map(|i| hi[i] - lo[i]).fold(0.0, f64::max);
    let k0 = -(span.log2().ceil() as i32);
    if opts.k_max as i32 <= k0 {
        return Err(Error::InvalidParameter(format!("k_max must exceed the coarsest level {k0}")));
    }
    let l0 = WhitneyLayers::cube_size(k0);
    let mut cells: Vec<[i64; 3]> = Vec::new();
    let r: Vec<(i64, i64)> = (0..n)
        .map(|i| ((lo[i] / l0).floor() as i64, (hi[i] / l0).ceil() as i64))
        .collect();
    for i in r[0].0..r[0].1 {
        for j in r[1].0..r[1].1 {
            if n == 2 {
                cells.push([i, j, 0]);
            } else {
                for k in r[2].0..r[2].1 {
                    cells.push([i, j, k]);
                }
            }
        }
    }
    let sqrt_n = (n as f64).sqrt();
    let mut layers = Vec::new();
    let mut counts = Vec::new();
    for k in k0..=opts.k_max as i32 {
        let l = WhitneyLayers::cube_size(k);
        let vol = l.powi(n as i32);
        let results: Vec<Cell> = cells
            .par_iter()
            .map(|idx| {
                let mut c: Point = [0.0; 3];
                for i in 0..n {
                    c[i] = (idx[i] as f64 + 0.5) * l;
                }
                let t = domain.signed_distance(c);
                if t >= opts.accept * sqrt_n * l {
                    Cell::Accepted(vol * t.powf(s))
                } else if t > -0.5 * sqrt_n * l {
                    Cell::Split
                } else {
                    Cell::Outside
                }
            })
            .collect();
        let contribution = neumaier_sum(results.iter().filter_map(|c| match c {
            Cell::Accepted(v) => Some(*v),
            _ => None,
        }));
        let accepted = results.iter().filter(|c| matches!(c, Cell::Accepted(_))).count() as u64;
        layers.push((k, contribution));
        counts.push((k, accepted));
        if k == opts.k_max as i32 {
            break;
        }
        let mut next = Vec::with_capacity(cells.len() * 2);
        for (idx, res) in cells.iter().zip(&results) {
            if matches!(res, Cell::Split) {
                for corner in 0..(1 << n) {
                    let mut child = [0i64; 3];
                    for i in 0..n {
                        child[i] = 2 * idx[i] + ((corner >> i) & 1) as i64;
                    }
                    next.push(child);
                }
            }
        }
        cells = next;
    }
    let mut partial_sums = Vec::with_capacity(layers.len());
    let mut acc = 0.0;
    for (_, v) in &layers {
        acc += v;
        partial_sums.push(acc);
    }
    let m = layers.len();
    let (last, prev) = (layers[m - 1].1, layers[m - 2].1);
    let decay_ratio = if prev > 0.0 { last / prev } else { f64::NAN };
    let tail = if decay_ratio > 0.0 && decay_ratio < 1.0 { last * decay_ratio / (1.0 - decay_ratio) } else { 0.0 };
    Ok(DistanceIntegral {
        exponent: s,
        value: acc + tail,
        layers,
        partial_sums,
        tail,
        decay_ratio,
        may_diverge,
        whitney: WhitneyLayers { cube_counts: counts },
    })
}

enum Cell {
    Accepted(f64),
    Split,
    Outside,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn square_oracle() -> f64 {
        // Layer-cake: ∫_0^{1/2} (4 - 8t) t^{-1/2} dt.
        8.0 / 2f64.sqrt() - (16.0 / 3.0) / (2.0 * 2f64.sqrt())
    }

    #[test]
    fn square_inverse_sqrt() {
        let d = DomainSpec::unit_square().build().unwrap();
        let r = distance_power_integral(&d, -0.5, &IntegralOptions::default()).unwrap();
        let exact = square_oracle();
        assert!((r.value - exact).abs() / exact < 0.02, "{} vs {exact}", r.value);
        assert!(!r.may_diverge);
        assert!(r.decay_ratio < 1.0);
    }

    #[test]
    fn square_area() {
        let d = DomainSpec::unit_square().build().unwrap();
        let r = distance_power_integral(&d, 0.0, &IntegralOptions { k_max: 12, ..Default::default() }).unwrap();
        assert!((r.value - 1.0).abs() < 1e-3, "{}", r.value);
    }

    #[test]
    fn disk_first_moment() {
        let d = DomainSpec::unit_ball(2).build().unwrap();
        let r = distance_power_integral(&d, 1.0, &IntegralOptions { k_max: 12, ..Default::default() }).unwrap();
        assert!((r.value - PI / 3.0).abs() / (PI / 3.0) < 0.02, "{}", r.value);
    }

    #[test]
    fn divergence_warning() {
        let d = DomainSpec::unit_square().build().unwrap();
        let r = distance_power_integral(&d, -1.0, &IntegralOptions { k_max: 10, ..Default::default() }).unwrap();
        assert!(r.may_diverge);
        assert!(r.partial_sums.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn layer_contributions_decay() {
        let d = DomainSpec::unit_square().build().unwrap();
        let r = distance_power_integral(&d, -0.5, &IntegralOptions { k_max: 12, ..Default::default() }).unwrap();
        let tail: Vec<f64> = r.layers.iter().filter(|(k, _)| *k >= 4).map(|(_, v)| *v).collect();
        assert!(tail.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn cube_counts_grow_like_boundary_dimension() {
        let d = DomainSpec::unit_square().build().unwrap();
        let r = distance_power_integral(&d, 0.0, &IntegralOptions { k_max: 12, ..Default::default() }).unwrap();
        for &(k, count) in &r.whitney.cube_counts {
            if k >= 4 {
                // N_k <= C 2^{k(d + ε/2)} with d = 1, ε = 0.2.
                assert!((count as f64).log2() / k as f64 <= 1.1 + 5.0 / k as f64, "k={k} N={count}");
            }
        }
    }

    #[test]
    fn accepted_cubes_keep_their_distance() {
        // A cube of side 2^{-k} accepted at level k has its center at distance
        // >= 1.5 sqrt(n) 2^{-k}, so every point is at distance >= sqrt(n) 2^{-k}.
        let l: f64 = 2f64.powi(-5);
        let t = 1.5 * 2f64.sqrt() * l;
        assert!(t - 0.5 * 2f64.sqrt() * l >= 2f64.sqrt() * l - 1e-15);
    }

    proptest! {
        #[test]
        fn at_most_three_layers(t in 1e-6f64..4.0) {
            let ls = WhitneyLayers::layers_of(t);
            prop_assert!(!ls.is_empty() && ls.len() <= 3);
            for k in 0..40 {
                prop_assert_eq!(WhitneyLayers::in_layer(k, t), ls.contains(&k));
            }
        }
    }
}
