use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Domain, Shape};
use crate::geom::Point;
use crate::stats::{fit_line, LineFit};
use crate::{Error, Result};

/// Irrational fraction used to shift the counting grid off the domain's corners.
const GRID_SHIFT: f64 = 0.381_966_011_250_105;

/// Scale window for [`box_counting_dimension`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxCountOptions {
    /// Smallest box side, as a fraction of the bounding-box diameter.
    pub delta_min_rel: f64,
    /// Largest box side, as a fraction of the bounding-box diameter.
    pub delta_max_rel: f64,
    /// Number of geometrically spaced scales.
    pub samples: usize,
}

impl Default for BoxCountOptions {
    fn default() -> Self {
        Self { delta_min_rel: 2f64.powi(-9), delta_max_rel: 2f64.powi(-3), samples: 7 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxDimensionEstimate {
    /// Box sides, decreasing.
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    /// Fitted slope of `log N` against `log(1/δ)`.
    pub dimension: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub fit: LineFit,
}

/// Counts grid boxes of side `δ` meeting the boundary over a geometric range of
/// scales and fits `log N(δ)` against `log(1/δ)`.
pub fn box_counting_dimension(domain: &Domain, opts: &BoxCountOptions) -> Result<BoxDimensionEstimate> {
    let diam = domain.bbox_diameter();
    let (dmin, dmax) = (opts.delta_min_rel * diam, opts.delta_max_rel * diam);
    if !(dmin > 0.0 && dmin < dmax && opts.delta_max_rel <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "scale window must satisfy 0 < delta_min < delta_max <= diameter, got [{dmin}, {dmax}]"
        )));
    }
    if opts.samples < 2 {
        return Err(Error::InvalidParameter("box counting needs at least 2 scales".into()));
    }
    if let Shape::Koch { side, .. } = domain.spec().shape {
        let max_edge = domain.max_edge_length();
        if max_edge > dmin / 2.0 {
            let level = ((2.0 * side / dmin).ln() / 3f64.ln()).ceil() as u32;
            return Err(Error::UnderResolved {
                max_edge,
                limit: dmin / 2.0,
                hint: format!("use Koch level >= {level} or raise delta_min"),
            });
        }
    }
    let ratio = (dmin / dmax).powf(1.0 / (opts.samples - 1) as f64);
    let scales: Vec<f64> = (0..opts.samples).map(|j| dmax * ratio.powi(j as i32)).collect();
    let counts: Vec<u64> = scales.par_iter().map(|&d| count_boxes(domain, d)).collect();
    let xs: Vec<f64> = scales.iter().map(|d| (1.0 / d).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c.max(1) as f64).ln()).collect();
    let fit = fit_line(&xs, &ys).ok_or_else(|| Error::InvalidParameter("degenerate scale set".into()))?;
    Ok(BoxDimensionEstimate { scales, counts, dimension: fit.slope, residual: fit.rms_residual, fit })
}

/// Number of boxes of side `delta` (on a shifted grid) that meet the boundary.
pub fn count_boxes(domain: &Domain, delta: f64) -> u64 {
    let n = domain.dim();
    let (lo, hi) = domain.bbox();
    let mut anchor = lo;
    for a in anchor.iter_mut().take(n) {
        *a -= delta * GRID_SHIFT;
    }
    if domain.is_analytic() {
        let cells = (0..n).map(|i| ((hi[i] - anchor[i]) / delta).ceil() as u64 + 1).max().unwrap_or(1);
        let size = cells.next_power_of_two();
        return count_block(domain, anchor, delta, [0; 3], size);
    }
    let cell_box = |idx: [i64; 3]| -> (Point, Point) {
        let mut a = [0.0; 3];
        let mut b = [0.0; 3];
        for i in 0..n {
            a[i] = anchor[i] + idx[i] as f64 * delta;
            b[i] = a[i] + delta;
        }
        (a, b)
    };
    let index_range = |pts: &[Point], i: usize| -> (i64, i64) {
        let mn = pts.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
        let mx = pts.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
        (((mn - anchor[i]) / delta).floor() as i64 - 1, ((mx - anchor[i]) / delta).floor() as i64 + 1)
    };
    let mut hit: HashSet<[i64; 3]> = HashSet::new();
    if n == 2 {
        for (a, b) in domain.edges() {
            let (x0, x1) = index_range(&[a, b], 0);
            let (y0, y1) = index_range(&[a, b], 1);
            for i in x0..=x1 {
                for j in y0..=y1 {
                    let (blo, bhi) = cell_box([i, j, 0]);
                    if crate::geom::segment_meets_box2(a, b, blo, bhi) {
                        hit.insert([i, j, 0]);
                    }
                }
            }
        }
    } else {
        for t in domain.triangle_points() {
            let r: Vec<(i64, i64)> = (0..3).map(|i| index_range(&t, i)).collect();
            for i in r[0].0..=r[0].1 {
                for j in r[1].0..=r[1].1 {
                    for k in r[2].0..=r[2].1 {
                        let (blo, bhi) = cell_box([i, j, k]);
                        if crate::geom::triangle_meets_box3(t, blo, bhi) {
                            hit.insert([i, j, k]);
                        }
                    }
                }
            }
        }
    }
    hit.len() as u64
}

fn count_block(domain: &Domain, anchor: Point, delta: f64, idx: [u64; 3], size: u64) -> u64 {
    let n = domain.dim();
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for i in 0..n {
        lo[i] = anchor[i] + idx[i] as f64 * delta;
        hi[i] = lo[i] + size as f64 * delta;
    }
    if !domain.box_meets_boundary(lo, hi) {
        return 0;
    }
    if size == 1 {
        return 1;
    }
    let half = size / 2;
    let mut total = 0;
    for corner in 0..(1u64 << n) {
        let mut child = idx;
        for (i, c) in child.iter_mut().enumerate().take(n) {
            if corner >> i & 1 == 1 {
                *c += half;
            }
        }
        total += count_block(domain, anchor, delta, child, half);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;

    #[test]
    fn square_boundary_has_dimension_one() {
        let d = DomainSpec::unit_square().build().unwrap();
        let est = box_counting_dimension(&d, &BoxCountOptions::default()).unwrap();
        assert!((est.dimension - 1.0).abs() < 0.05, "{}", est.dimension);
        assert!(est.counts.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn polygonal_square_matches_analytic() {
        let a = DomainSpec::unit_square().build().unwrap();
        let b = DomainSpec::polygon(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).build().unwrap();
        for delta in [0.1, 0.03, 0.011] {
            assert_eq!(count_boxes(&a, delta), count_boxes(&b, delta));
        }
    }

    #[test]
    fn sphere_has_dimension_two() {
        let d = DomainSpec::unit_ball(3).build().unwrap();
        let opts = BoxCountOptions { delta_min_rel: 2f64.powi(-8), delta_max_rel: 2f64.powi(-3), samples: 6 };
        let est = box_counting_dimension(&d, &opts).unwrap();
        assert!((est.dimension - 2.0).abs() < 0.05, "{}", est.dimension);
    }

    #[test]
    fn under_resolved_koch_is_refused() {
        let d = DomainSpec::koch(3).build().unwrap();
        match box_counting_dimension(&d, &BoxCountOptions::default()) {
            Err(Error::UnderResolved { hint, .. }) => assert!(hint.contains("level")),
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn bad_window_rejected() {
        let d = DomainSpec::unit_square().build().unwrap();
        let opts = BoxCountOptions { delta_min_rel: 0.2, delta_max_rel: 0.1, samples: 4 };
        assert!(box_counting_dimension(&d, &opts).is_err());
    }
}
