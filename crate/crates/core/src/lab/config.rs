//! Experiment configuration (JSON).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chain::{select_parameters, ChainMap};
use crate::degree::BoundaryImage;
use crate::domain::DomainSpec;
use crate::geom::{self, Point};
use crate::holder::MapFn;
use crate::maps;
use crate::{Error, Result};

/// Maps available to experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum MapSpec {
    /// Identity on the unit ball of R^n.
    Identity { n: usize },
    /// `z ↦ z^k` on the unit disk; its boundary circle is traversed `k` times.
    ComplexPower { k: u32 },
    /// Truncated sphere chain.
    Chain { n: usize, p: f64, alpha: f64, k_max: usize },
}

impl MapSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::Identity { n } | Self::Chain { n, .. } => *n,
            Self::ComplexPower { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Identity { n } if !(2..=3).contains(n) => {
                Err(Error::InvalidParameter(format!("identity map needs n = 2 or 3, got {n}")))
            }
            Self::ComplexPower { k } if *k == 0 => Err(Error::InvalidParameter("complex power needs k >= 1".into())),
            Self::Chain { n, p, alpha, k_max } => {
                select_parameters(*n, *p, *alpha)?.truncate(*k_max)?;
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn chain(&self) -> Result<Option<ChainMap>> {
        match self {
            Self::Chain { n, p, alpha, k_max } => {
                Ok(Some(ChainMap::new(select_parameters(*n, *p, *alpha)?.truncate(*k_max)?)?))
            }
            _ => Ok(None),
        }
    }

    /// Interior map on the unit ball (not available for the chain).
    pub fn interior(&self) -> Option<MapFn> {
        match self {
            Self::Identity { .. } => Some(maps::identity()),
            Self::ComplexPower { k } => Some(maps::complex_power(*k)),
            Self::Chain { .. } => None,
        }
    }

    /// Boundary image with `resolution` samples per unit turn (or sphere edge count).
    pub fn boundary_image(&self, resolution: usize) -> Result<BoundaryImage> {
        match self {
            Self::Identity { n: 2 } => BoundaryImage::from_curve(&maps::circle_power(1), 0.0, 2.0 * PI, resolution),
            Self::Identity { .. } => {
                let d = DomainSpec::unit_ball(3).with_max_edge(2.0 * PI / resolution as f64).build()?;
                Ok(BoundaryImage::from_domain(&d, &maps::identity()))
            }
            Self::ComplexPower { k } => {
                BoundaryImage::from_curve(&maps::circle_power(*k as i32), 0.0, 2.0 * PI, resolution * *k as usize)
            }
            Self::Chain { .. } => self.chain()?.expect("chain").boundary_image(resolution),
        }
    }

    /// Analytic degree at `y`, or `Err(Masked)` within `tol` of the boundary image.
    pub fn oracle(&self, y: Point, tol: f64) -> Result<i64> {
        match self {
            Self::Identity { .. } | Self::ComplexPower { .. } => {
                let r = geom::norm(y);
                if (r - 1.0).abs() <= tol {
                    return Err(Error::Masked { distance: (r - 1.0).abs() });
                }
                let k = if let Self::ComplexPower { k } = self { i64::from(*k) } else { 1 };
                Ok(if r < 1.0 { k } else { 0 })
            }
            Self::Chain { .. } => self.chain()?.expect("chain").exact_degree(y, tol),
        }
    }
}

/// Method used to fill a degree field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldMethod {
    /// Crossing counts of the boundary image.
    Boundary,
    /// Piecewise-affine interpolant of the Whitney extension.
    Simplicial,
}

fn default_h() -> f64 {
    0.02
}
fn default_targets() -> usize {
    100
}
fn default_resolution() -> usize {
    256
}
fn default_checks() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeFieldConfig {
    #[serde(flatten)]
    pub map: MapSpec,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_method")]
    pub method: FieldMethod,
    /// Random targets compared across algorithms.
    #[serde(default = "default_targets")]
    pub targets: usize,
    /// Boundary samples per turn.
    #[serde(default = "default_resolution")]
    pub samples_per_turn: usize,
    #[serde(default = "default_checks")]
    pub check_samples: usize,
}

fn default_method() -> FieldMethod {
    FieldMethod::Boundary
}

impl Default for DegreeFieldConfig {
    fn default() -> Self {
        Self {
            map: MapSpec::Identity { n: 2 },
            h: default_h(),
            method: FieldMethod::Boundary,
            targets: default_targets(),
            samples_per_turn: default_resolution(),
            check_samples: default_checks(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DivergenceConfig {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    /// Largest truncation of the analytic partial sums.
    pub k_max: usize,
    /// Start of the logarithmic fit.
    pub fit_from: usize,
    /// Truncation whose degree field is integrated on a grid.
    pub grid_k: usize,
    pub h: f64,
    pub samples_per_turn: usize,
    pub targets: usize,
    /// Relative tolerance of the fit residual and of the grid `L^1` check.
    pub tolerance: f64,
}

impl Default for DivergenceConfig {
    fn default() -> Self {
        Self {
            n: 2,
            p: 1.0,
            alpha: 0.4,
            k_max: 4096,
            fit_from: 16,
            grid_k: 8,
            h: 0.004,
            samples_per_turn: 64,
            targets: 100,
            tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HolderStabilityConfig {
    pub p: f64,
    pub alpha: f64,
    pub truncations: Vec<usize>,
    pub reference: usize,
    pub budget: usize,
    /// Allowed ratio to the reference estimate.
    pub factor: f64,
    /// Spheres for which the exact radius condition is checked.
    pub condition_k: usize,
}

impl Default for HolderStabilityConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            alpha: 0.4,
            truncations: vec![2, 4, 8, 16, 32],
            reference: 4,
            budget: 1 << 16,
            factor: 2.0,
            condition_k: 32,
        }
    }
}

/// Test fields for the scaling experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScalingConfig {
    pub fields: Vec<DegreeFieldConfig>,
    /// `(β, p)` pairs.
    pub pairs: Vec<(f64, f64)>,
    pub lambdas: Vec<usize>,
    pub tolerance: f64,
    /// Cell count of the one-dimensional self test (`1_{[0,1]}`, β = 1/2, p = 1).
    pub oracle_cells: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        let field = |map: MapSpec, h: f64| DegreeFieldConfig { map, h, ..DegreeFieldConfig::default() };
        Self {
            fields: vec![
                field(MapSpec::Identity { n: 2 }, 0.1),
                field(MapSpec::ComplexPower { k: 3 }, 0.1),
                field(MapSpec::Chain { n: 2, p: 1.0, alpha: 0.4, k_max: 3 }, 0.05),
            ],
            pairs: vec![(0.0, 1.0), (0.5, 1.0), (0.25, 2.0)],
            lambdas: vec![1, 2, 4, 8],
            tolerance: 0.02,
            oracle_cells: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DimensionConfig {
    pub domain: DomainSpec,
    pub delta_min_rel: f64,
    pub delta_max_rel: f64,
    pub samples: usize,
    pub expected: Option<f64>,
    pub tolerance: f64,
}

impl Default for DimensionConfig {
    fn default() -> Self {
        Self {
            domain: DomainSpec::koch(6),
            delta_min_rel: 2f64.powi(-8),
            delta_max_rel: 2f64.powi(-2),
            samples: 7,
            expected: Some(4f64.ln() / 3f64.ln()),
            tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistanceConfig {
    pub domain: DomainSpec,
    pub exponent: f64,
    pub k_max: u32,
    pub expected: Option<f64>,
    pub tolerance: f64,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        Self { domain: DomainSpec::unit_square(), exponent: -0.5, k_max: 16, expected: Some(3.7712), tolerance: 0.02 }
    }
}

/// Perturbations `w` added with amplitude `ε/k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "perturbation", rename_all = "snake_case")]
pub enum Perturbation {
    Zero,
    /// The fixed smooth planar field.
    Smooth { scale: f64 },
    /// Rotation of the image by `angle/k`.
    Rotation { angle: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceConfig {
    pub map: MapSpec,
    #[serde(flatten)]
    pub perturbation: Perturbation,
    pub steps: usize,
    pub beta: f64,
    pub p: f64,
    pub h: f64,
    pub samples_per_turn: usize,
    /// Exponent for the uniform Hölder bound check of the perturbed maps.
    pub alpha: f64,
    pub budget: usize,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            map: MapSpec::Identity { n: 2 },
            perturbation: Perturbation::Smooth { scale: 0.1 },
            steps: 8,
            beta: 0.0,
            p: 1.0,
            h: 0.01,
            samples_per_turn: 512,
            alpha: 0.5,
            budget: 1 << 14,
        }
    }
}

/// Gagliardo/`L^p` evaluation of a degree field for several `(β, p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeminormConfig {
    pub field: DegreeFieldConfig,
    pub pairs: Vec<(f64, f64)>,
}

impl Default for SeminormConfig {
    fn default() -> Self {
        Self {
            field: DegreeFieldConfig { h: 0.05, ..DegreeFieldConfig::default() },
            pairs: vec![(0.0, 1.0), (0.0, 2.0), (0.5, 1.0), (0.25, 2.0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    DegreeField(DegreeFieldConfig),
    CounterexampleDivergence(DivergenceConfig),
    HolderStability(HolderStabilityConfig),
    ScalingLaw(ScalingConfig),
    DimensionEstimate(DimensionConfig),
    DistanceIntegral(DistanceConfig),
    ConvergenceCorollary(ConvergenceConfig),
    Seminorm(SeminormConfig),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::DegreeField(_) => "degree-field",
            Self::CounterexampleDivergence(_) => "counterexample-divergence",
            Self::HolderStability(_) => "holder-stability",
            Self::ScalingLaw(_) => "scaling-law",
            Self::DimensionEstimate(_) => "dimension-estimate",
            Self::DistanceIntegral(_) => "distance-integral",
            Self::ConvergenceCorollary(_) => "convergence-corollary",
            Self::Seminorm(_) => "seminorm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Identifier used for output names; defaults to the kind.
    #[serde(default)]
    pub id: Option<String>,
    #[serde(flatten)]
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

fn admissible(beta: f64, p: f64) -> Result<()> {
    if p < 1.0 || !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!("(beta, p) = ({beta}, {p}) needs 0 <= beta < 1 <= p")));
    }
    if beta * p >= 1.0 {
        return Err(Error::DivergentSeminorm(beta * p));
    }
    Ok(())
}

impl DegreeFieldConfig {
    pub fn validate(&self) -> Result<()> {
        self.map.validate()?;
        positive("h", self.h)?;
        if self.method == FieldMethod::Simplicial && self.map.interior().is_none() {
            return Err(Error::InvalidParameter("simplicial fields need an interior map".into()));
        }
        if self.samples_per_turn < 8 {
            return Err(Error::InvalidParameter("samples_per_turn must be at least 8".into()));
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self { id: None, experiment, seed: 0 }
    }

    pub fn id(&self) -> String {
        self.id.clone().unwrap_or_else(|| self.experiment.kind().to_string())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 of the compact JSON form, as lowercase hex.
    pub fn hash(&self) -> Result<String> {
        let text = serde_json::to_string(self)?;
        Ok(hex(&Sha256::digest(text.as_bytes())))
    }

    /// Overrides the primary resolution knob.
    pub fn set_resolution(&mut self, h: f64) {
        match &mut self.experiment {
            Experiment::DegreeField(c) => c.h = h,
            Experiment::CounterexampleDivergence(c) => c.h = h,
            Experiment::ScalingLaw(c) => c.fields.iter_mut().for_each(|f| f.h = h),
            Experiment::ConvergenceCorollary(c) => c.h = h,
            Experiment::Seminorm(c) => c.field.h = h,
            Experiment::DimensionEstimate(c) => c.delta_min_rel = h,
            Experiment::DistanceIntegral(c) => c.domain.max_edge = Some(h),
            Experiment::HolderStability(_) => {}
        }
    }

    /// Checks every parameter block against its module's preconditions.
    pub fn validate(&self) -> Result<()> {
        match &self.experiment {
            Experiment::DegreeField(c) => c.validate(),
            Experiment::CounterexampleDivergence(c) => {
                let params = select_parameters(c.n, c.p, c.alpha)?;
                if c.k_max < 2 || c.fit_from < 1 || c.fit_from >= c.k_max {
                    return Err(Error::InvalidParameter("need 1 <= fit_from < k_max and k_max >= 2".into()));
                }
                if c.n != 2 {
                    return Err(Error::InvalidParameter("the grid check runs in the plane only (n = 2)".into()));
                }
                params.truncate(c.grid_k)?;
                positive("h", c.h)?;
                positive("tolerance", c.tolerance)
            }
            Experiment::HolderStability(c) => {
                select_parameters(2, c.p, c.alpha)?;
                if !c.truncations.contains(&c.reference) || c.truncations.iter().any(|&k| k == 0) {
                    return Err(Error::InvalidParameter("truncations must be positive and include the reference".into()));
                }
                positive("factor", c.factor)
            }
            Experiment::ScalingLaw(c) => {
                if c.fields.is_empty() || c.pairs.is_empty() {
                    return Err(Error::InvalidParameter("scaling needs fields and (beta, p) pairs".into()));
                }
                for f in &c.fields {
                    f.validate()?;
                }
                for &(b, p) in &c.pairs {
                    admissible(b, p)?;
                }
                let lo = c.lambdas.iter().copied().min().unwrap_or(0);
                let hi = c.lambdas.iter().copied().max().unwrap_or(0);
                if lo == 0 || hi < 8 * lo {
                    return Err(Error::InvalidParameter("dilations must be positive and span a factor of 8".into()));
                }
                positive("tolerance", c.tolerance)
            }
            Experiment::DimensionEstimate(c) => {
                c.domain.build()?;
                if !(c.delta_min_rel > 0.0 && c.delta_min_rel < c.delta_max_rel && c.samples >= 2) {
                    return Err(Error::InvalidParameter("need 0 < delta_min_rel < delta_max_rel and samples >= 2".into()));
                }
                positive("tolerance", c.tolerance)
            }
            Experiment::DistanceIntegral(c) => {
                c.domain.build()?;
                positive("tolerance", c.tolerance)
            }
            Experiment::ConvergenceCorollary(c) => {
                c.map.validate()?;
                if c.map.dim() != 2 || matches!(c.map, MapSpec::Chain { .. }) {
                    return Err(Error::InvalidParameter("convergence runs on planar identity or power maps".into()));
                }
                admissible(c.beta, c.p)?;
                positive("h", c.h)?;
                if c.steps == 0 {
                    return Err(Error::InvalidParameter("steps must be positive".into()));
                }
                Ok(())
            }
            Experiment::Seminorm(c) => {
                c.field.validate()?;
                for &(b, p) in &c.pairs {
                    admissible(b, p)?;
                }
                Ok(())
            }
        }
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_and_hash() {
        let c = ExperimentConfig::new(Experiment::ScalingLaw(ScalingConfig::default()));
        let text = c.to_json().unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(c, back);
        assert_eq!(c.hash().unwrap(), back.hash().unwrap());
        assert_eq!(c.hash().unwrap().len(), 64);
        let mut d = c.clone();
        d.seed = 1;
        assert_ne!(c.hash().unwrap(), d.hash().unwrap());
    }

    #[test]
    fn parses_minimal_config() {
        let c = ExperimentConfig::from_json(r#"{"kind":"degree-field","map":"complex_power","k":3,"h":0.05}"#).unwrap();
        assert!(matches!(c.experiment, Experiment::DegreeField(ref f) if f.map == MapSpec::ComplexPower { k: 3 }));
        c.validate().unwrap();
    }

    #[test]
    fn rejects_inadmissible_blocks() {
        let bad = ExperimentConfig::new(Experiment::DegreeField(DegreeFieldConfig {
            map: MapSpec::Chain { n: 2, p: 1.0, alpha: 0.6, k_max: 3 },
            ..DegreeFieldConfig::default()
        }));
        assert!(bad.validate().is_err());
        let mut s = ScalingConfig::default();
        s.pairs.push((0.6, 2.0));
        assert!(ExperimentConfig::new(Experiment::ScalingLaw(s)).validate().is_err());
    }
}
