//! Least-squares fitting and compensated summation.

use serde::{Deserialize, Serialize};

/// Result of an ordinary least-squares line fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub slope_se: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
    /// Largest absolute residual.
    pub max_residual: f64,
}

impl LineFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Fits a straight line through `(xs[i], ys[i])`. Returns `None` with fewer than two
/// distinct abscissae.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| y - intercept - slope * x).collect();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let slope_se = if n > 2 { (sse / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Some(LineFit {
        slope,
        intercept,
        slope_se,
        rms_residual: (sse / nf).sqrt(),
        max_residual: residuals.iter().fold(0.0f64, |m, r| m.max(r.abs())),
    })
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn neumaier_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = NeumaierSum::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 + 0.5 * x).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-14);
        assert!((f.intercept - 2.0).abs() < 1e-14);
        assert!(f.max_residual < 1e-14);
    }

    #[test]
    fn degenerate_fit() {
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0]).is_none());
        assert!(fit_line(&[1.0], &[0.0]).is_none());
    }

    #[test]
    fn compensated_beats_naive() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(neumaier_sum(xs), 2.0);
    }

    proptest! {
        #[test]
        fn fit_recovers_affine(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let xs: Vec<f64> = (0..8).map(|i| i as f64 * 0.7).collect();
            let ys: Vec<f64> = xs.iter().map(|x| a + b * x).collect();
            let f = fit_line(&xs, &ys).unwrap();
            prop_assert!((f.slope - b).abs() < 1e-10);
            prop_assert!((f.intercept - a).abs() < 1e-10);
        }
    }
}
