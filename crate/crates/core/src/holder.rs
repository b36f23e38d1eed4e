//! Sampled maps and multiscale Hölder seminorm estimates.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::geom::{self, Point};
use crate::{Error, Result};

/// Thread-safe evaluation callback `θ ↦ v(θ)`.
pub type MapFn = Arc<dyn Fn(&Point) -> Point + Send + Sync>;

/// Default number of sampled pairs.
pub const DEFAULT_BUDGET: usize = 1 << 16;

/// Parameter set of a sampled map.
#[derive(Clone)]
pub enum ParamDomain {
    /// Axis box `[lo, hi]` in R^m, `m = lo.len()`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Closure of a domain; boundary vertices are added to the samples.
    Region(Arc<Domain>),
}

impl ParamDomain {
    pub fn interval(a: f64, b: f64) -> Self {
        Self::Box { lo: vec![a], hi: vec![b] }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Box { lo, .. } => lo.len(),
            Self::Region(d) => d.dim(),
        }
    }

    fn bounds(&self) -> (Point, Point) {
        match self {
            Self::Box { lo, hi } => (geom::from_slice(lo), geom::from_slice(hi)),
            Self::Region(d) => d.bbox(),
        }
    }
}

impl std::fmt::Debug for ParamDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Box { lo, hi } => write!(f, "Box({lo:?}, {hi:?})"),
            Self::Region(d) => write!(f, "Region({:?})", d.spec().shape),
        }
    }
}

/// A continuous map known through evaluation.
#[derive(Clone)]
pub struct SampledMap {
    pub param: ParamDomain,
    /// Dimension of the target space.
    pub target_dim: usize,
    pub exponents: Vec<f64>,
    pub known_seminorms: Option<Vec<f64>>,
    f: MapFn,
}

impl std::fmt::Debug for SampledMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SampledMap")
            .field("param", &self.param)
            .field("target_dim", &self.target_dim)
            .field("exponents", &self.exponents)
            .finish()
    }
}

impl SampledMap {
    pub fn new(param: ParamDomain, target_dim: usize, f: MapFn) -> Self {
        Self { param, target_dim, exponents: vec![1.0; target_dim], known_seminorms: None, f }
    }

    pub fn with_exponents(mut self, exponents: Vec<f64>) -> Result<Self> {
        if exponents.len() != self.target_dim {
            return Err(Error::InvalidParameter(format!(
                "expected {} exponents, got {}",
                self.target_dim,
                exponents.len()
            )));
        }
        for &a in &exponents {
            check_exponent(a)?;
        }
        self.exponents = exponents;
        Ok(self)
    }

    pub fn eval(&self, theta: &Point) -> Point {
        (self.f)(theta)
    }

    pub fn func(&self) -> MapFn {
        self.f.clone()
    }

    /// The same map multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let f = self.f.clone();
        Self { f: Arc::new(move |x| geom::scale(f(x), lambda)), ..self.clone() }
    }
}

fn check_exponent(a: f64) -> Result<()> {
    if a > 0.0 && a <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Hölder exponent must lie in (0, 1], got {a}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormEstimate {
    pub alpha: f64,
    pub value: f64,
    /// Pair attaining the maximum.
    pub argmax: (Point, Point),
    pub pairs_used: usize,
}

/// Deterministic multiscale sample set.
#[derive(Debug, Clone)]
pub struct PairSample {
    pub points: Vec<Point>,
    pub pairs: Vec<(u32, u32)>,
}

impl PairSample {
    /// Multiscale dyadic sampling: all pairs on a coarse grid, then neighbor shells
    /// `1 <= |o|_∞ <= 2` on successively finer grids, within `budget` pairs.
    pub fn multiscale(param: &ParamDomain, budget: usize) -> Result<Self> {
        if budget == 0 {
            return Err(Error::InvalidParameter("sampling budget must be positive".into()));
        }
        let m = param.dim();
        let (lo, hi) = param.bounds();
        if (0..m).any(|i| !(hi[i] > lo[i])) {
            return Err(Error::InvalidParameter("parameter domain has zero size".into()));
        }
        let keep = |p: &Point| match param {
            ParamDomain::Box { .. } => true,
            ParamDomain::Region(d) => d.contains(*p),
        };
        let mut j0 = 0u32;
        while {
            let pts = ((1u64 << (j0 + 1)) + 1).pow(m as u32);
            pts * (pts - 1) / 2 <= budget as u64 / 4
        } {
            j0 += 1;
        }
        let mut points: Vec<Point> = Vec::new();
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        let grid = |j: u32| {
            let p = (1usize << j) + 1;
            let total = p.pow(m as u32);
            let mut out = Vec::with_capacity(total);
            for flat in 0..total {
                let mut idx = [0usize; 3];
                let mut rem = flat;
                for slot in idx.iter_mut().take(m) {
                    *slot = rem % p;
                    rem /= p;
                }
                let mut x = [0.0; 3];
                for i in 0..m {
                    x[i] = lo[i] + (hi[i] - lo[i]) * idx[i] as f64 / (p - 1) as f64;
                }
                out.push((idx, x));
            }
            (p, out)
        };
        let (_, coarse) = grid(j0);
        let base = points.len();
        points.extend(coarse.iter().map(|(_, x)| *x).filter(|x| keep(x)));
        for a in base..points.len() {
            for b in (a + 1)..points.len() {
                pairs.push((a as u32, b as u32));
            }
        }
        let offsets = half_shell(m);
        let mut j = j0 + 1;
        loop {
            let (p, fine) = grid(j);
            let level_pairs = fine.len() * offsets.len();
            if pairs.len() + level_pairs > budget || j > 40 {
                break;
            }
            let mut local = vec![u32::MAX; fine.len()];
            for (flat, (_, x)) in fine.iter().enumerate() {
                if keep(x) {
                    local[flat] = points.len() as u32;
                    points.push(*x);
                }
            }
            for (flat, (idx, _)) in fine.iter().enumerate() {
                if local[flat] == u32::MAX {
                    continue;
                }
                'offs: for o in &offsets {
                    let mut other = 0usize;
                    let mut stride = 1usize;
                    for i in 0..m {
                        let c = idx[i] as i64 + o[i];
                        if c < 0 || c >= p as i64 {
                            continue 'offs;
                        }
                        other += c as usize * stride;
                        stride *= p;
                    }
                    if local[other] != u32::MAX {
                        pairs.push((local[flat], local[other]));
                    }
                }
            }
            j += 1;
        }
        if let ParamDomain::Region(d) = param {
            let base = points.len();
            points.extend_from_slice(d.vertices());
            if d.dim() == 2 {
                let k = d.vertices().len();
                for i in 0..k {
                    pairs.push(((base + i) as u32, (base + (i + 1) % k) as u32));
                }
            }
        }
        Ok(Self { points, pairs })
    }
}

/// Lexicographically positive integer offsets with `1 <= |o|_∞ <= 2`.
fn half_shell(m: usize) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    let range = -2i64..=2;
    let mut all = vec![[0i64; 3]];
    for i in 0..m {
        all = all
            .into_iter()
            .flat_map(|o| {
                range.clone().map(move |c| {
                    let mut o = o;
                    o[i] = c;
                    o
                })
            })
            .collect();
    }
    for o in all {
        let first = o.iter().take(m).find(|&&c| c != 0);
        if matches!(first, Some(&c) if c > 0) {
            out.push(o);
        }
    }
    out
}

fn pair_max(
    sample: &PairSample,
    values: &[Point],
    ratio: impl Fn(Point, Point, f64) -> f64 + Sync,
) -> (f64, usize) {
    sample
        .pairs
        .par_iter()
        .enumerate()
        .map(|(idx, &(a, b))| {
            let (a, b) = (a as usize, b as usize);
            let d = geom::dist(sample.points[a], sample.points[b]);
            let r = if d > 0.0 { ratio(values[a], values[b], d) } else { 0.0 };
            (r, idx)
        })
        .reduce(|| (0.0, usize::MAX), |x, y| if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x })
}

fn evaluate(map: &SampledMap, sample: &PairSample) -> Vec<Point> {
    sample.points.par_iter().map(|p| map.eval(p)).collect()
}

fn estimate(sample: &PairSample, alpha: f64, best: (f64, usize)) -> SeminormEstimate {
    let argmax = if best.1 == usize::MAX {
        (sample.points.first().copied().unwrap_or_default(), sample.points.first().copied().unwrap_or_default())
    } else {
        let (a, b) = sample.pairs[best.1];
        (sample.points[a as usize], sample.points[b as usize])
    };
    SeminormEstimate { alpha, value: best.0, argmax, pairs_used: sample.pairs.len() }
}

/// `max |v(θ) - v(θ')| / |θ - θ'|^α` over the sampled pairs.
pub fn holder_seminorm_on(map: &SampledMap, alpha: f64, sample: &PairSample) -> Result<SeminormEstimate> {
    check_exponent(alpha)?;
    let values = evaluate(map, sample);
    let best = pair_max(sample, &values, |a, b, d| geom::dist(a, b) / d.powf(alpha));
    Ok(estimate(sample, alpha, best))
}

pub fn holder_seminorm(map: &SampledMap, alpha: f64, budget: usize) -> Result<SeminormEstimate> {
    let sample = PairSample::multiscale(&map.param, budget)?;
    holder_seminorm_on(map, alpha, &sample)
}

/// Per-component seminorms `[v^i]_{C^{0,α_i}}`.
pub fn componentwise_seminorms(map: &SampledMap, alphas: &[f64], budget: usize) -> Result<Vec<SeminormEstimate>> {
    if alphas.len() != map.target_dim {
        return Err(Error::InvalidParameter(format!(
            "expected {} exponents, got {}",
            map.target_dim,
            alphas.len()
        )));
    }
    for &a in alphas {
        check_exponent(a)?;
    }
    let sample = PairSample::multiscale(&map.param, budget)?;
    let values = evaluate(map, &sample);
    Ok(alphas
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let best = pair_max(&sample, &values, |x, y, d| (x[i] - y[i]).abs() / d.powf(a));
            estimate(&sample, a, best)
        })
        .collect())
}

/// `max |v(θ)|` over the sample points.
pub fn sup_norm(map: &SampledMap, budget: usize) -> Result<f64> {
    let sample = PairSample::multiscale(&map.param, budget)?;
    Ok(evaluate(map, &sample).iter().map(|v| geom::norm(*v)).fold(0.0, f64::max))
}

/// JSON records of estimates for regression baselines.
pub fn estimates_json(estimates: &[SeminormEstimate]) -> Result<String> {
    Ok(serde_json::to_string_pretty(estimates)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use proptest::prelude::*;

    fn on_interval(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> SampledMap {
        SampledMap::new(ParamDomain::interval(0.0, 1.0), 1, Arc::new(move |x: &Point| [f(x[0]), 0.0, 0.0]))
    }

    #[test]
    fn identity_is_one() {
        let e = holder_seminorm(&on_interval(|x| x), 1.0, DEFAULT_BUDGET).unwrap();
        assert_eq!(e.value, 1.0);
    }

    #[test]
    fn square_root_half() {
        let e = holder_seminorm(&on_interval(f64::sqrt), 0.5, DEFAULT_BUDGET).unwrap();
        assert!((e.value - 1.0).abs() < 0.01, "{}", e.value);
        assert!(e.argmax.0[0].min(e.argmax.1[0]) < 1e-3);
    }

    #[test]
    fn constant_is_zero() {
        let e = holder_seminorm(&on_interval(|_| 3.0), 0.7, 1000).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn componentwise_examples() {
        let square = ParamDomain::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] };
        let m = SampledMap::new(square.clone(), 2, Arc::new(|x: &Point| [x[0], x[1].sqrt(), 0.0]));
        let e = componentwise_seminorms(&m, &[1.0, 0.5], DEFAULT_BUDGET).unwrap();
        assert!((e[0].value - 1.0).abs() < 0.01 && (e[1].value - 1.0).abs() < 0.01);
        let id = SampledMap::new(square.clone(), 2, Arc::new(|x: &Point| *x));
        let e = componentwise_seminorms(&id, &[1.0, 1.0], DEFAULT_BUDGET).unwrap();
        assert_eq!((e[0].value, e[1].value), (1.0, 1.0));
        let c = SampledMap::new(square, 2, Arc::new(|_: &Point| [0.3, -2.0, 0.0]));
        let e = componentwise_seminorms(&c, &[0.5, 0.5], 1000).unwrap();
        assert_eq!((e[0].value, e[1].value), (0.0, 0.0));
    }

    #[test]
    fn sup_norm_on_ball() {
        let ball = Arc::new(DomainSpec::unit_ball(2).build().unwrap());
        let id = SampledMap::new(ParamDomain::Region(ball), 2, Arc::new(|x: &Point| *x));
        assert!((sup_norm(&id, 4096).unwrap() - 1.0).abs() < 1e-12);
        assert!((sup_norm(&id.scaled(2.0), 4096).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let m = on_interval(|x| x);
        assert!(holder_seminorm(&m, 0.0, 100).is_err());
        assert!(holder_seminorm(&m, 1.5, 100).is_err());
        assert!(holder_seminorm(&m, 0.5, 0).is_err());
        let empty = SampledMap::new(ParamDomain::interval(1.0, 1.0), 1, Arc::new(|x: &Point| *x));
        assert!(holder_seminorm(&empty, 0.5, 100).is_err());
    }

    #[test]
    fn estimates_export_as_json() {
        let e = holder_seminorm(&on_interval(|x| x), 1.0, 100).unwrap();
        let s = estimates_json(&[e]).unwrap();
        assert!(s.contains("\"alpha\""));
    }

    #[test]
    fn budget_doubling_closes_gap() {
        // Exact seminorm of x^0.3 for α = 0.3 is 1; sampling gives lower bounds.
        let m = on_interval(|x| x.powf(0.3));
        let mut prev = 0.0;
        for b in [256, 512, 1024, 2048] {
            let e = holder_seminorm(&m, 0.3, b).unwrap().value;
            assert!(e <= 1.0 + 1e-12);
            assert!(e >= prev - 1e-12);
            prev = e;
        }
    }

    proptest! {
        #[test]
        fn scaling_is_linear(lambda in 0.1f64..10.0, a in 0.2f64..1.0) {
            let m = on_interval(|x| (3.0 * x).sin());
            let sample = PairSample::multiscale(&m.param, 2000).unwrap();
            let base = holder_seminorm_on(&m, a, &sample).unwrap().value;
            let scaled = holder_seminorm_on(&m.scaled(lambda), a, &sample).unwrap().value;
            prop_assert!((scaled - lambda * base).abs() <= 1e-12 * scaled.max(1.0));
        }

        #[test]
        fn monotone_in_exponent(a in 0.1f64..0.9, da in 0.0f64..0.1) {
            let m = on_interval(|x| (5.0 * x).cos());
            let sample = PairSample::multiscale(&m.param, 2000).unwrap();
            let lo = holder_seminorm_on(&m, a, &sample).unwrap().value;
            let hi = holder_seminorm_on(&m, a + da, &sample).unwrap().value;
            prop_assert!(hi >= lo);
        }

        #[test]
        fn superset_never_decreases(extra in 1usize..50) {
            let m = on_interval(|x| (7.0 * x).sin().abs().sqrt());
            let mut sample = PairSample::multiscale(&m.param, 500).unwrap();
            let base = holder_seminorm_on(&m, 0.5, &sample).unwrap().value;
            let k = sample.points.len() as u32;
            for i in 0..extra {
                sample.points.push([i as f64 / extra as f64 + 0.001, 0.0, 0.0]);
                sample.pairs.push((0, k + i as u32));
            }
            prop_assert!(holder_seminorm_on(&m, 0.5, &sample).unwrap().value >= base);
        }
    }
}
