//! Experiment pipelines with embedded checks.

use std::f64::consts::PI;
use std::fs;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::config::*;
use super::ledger::{Check, ResultsLedger, Summary};
use super::plot::{field_heatmap, Plot, Series, Style};
use crate::chain::{harmonic, select_parameters, truncated_lp_mass, ChainMap};
use crate::degree::{
    degree_field, degree_field_simplicial, simplicial_degree, solid_angle_degree_3d, winding_degree_2d, BoundaryImage,
    DegreeField, FieldOptions, GridSpec, SimplicialMesh, SolidAngleOptions,
};
use crate::domain::{box_counting_dimension, distance_power_integral, BoxCountOptions, DomainSpec, IntegralOptions};
use crate::extension::ExtensionPlan;
use crate::geom::{self, Point};
use crate::holder::{holder_seminorm, MapFn, ParamDomain, SampledMap};
use crate::maps;
use crate::sobolev::{field_difference, gagliardo_seminorm, lp_norm, scaling_sweep, SeminormOptions};
use crate::{Error, Result};

/// Tables, plots and checks produced by one run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Summary,
    /// `(file name, contents)`.
    pub tables: Vec<(String, String)>,
    pub plots: Vec<(String, String)>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.summary.passed()
    }
}

struct Builder {
    checks: Vec<Check>,
    tables: Vec<(String, String)>,
    plots: Vec<(String, String)>,
}

impl Builder {
    fn new() -> Self {
        Self { checks: Vec::new(), tables: Vec::new(), plots: Vec::new() }
    }
    fn check(&mut self, name: &str, passed: bool, value: f64, detail: String) {
        self.checks.push(Check::new(name, passed, value, detail));
    }
    fn table(&mut self, name: &str, text: String) {
        self.tables.push((name.to_string(), text));
    }
    fn plot(&mut self, name: &str, svg: String) {
        self.plots.push((name.to_string(), svg));
    }
}

/// Validates and runs an experiment without touching the file system.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    config.validate()?;
    let mut b = Builder::new();
    let seed = config.seed;
    let results = match &config.experiment {
        Experiment::DegreeField(c) => degree_field_run(c, seed, &mut b)?,
        Experiment::CounterexampleDivergence(c) => divergence_run(c, seed, &mut b)?,
        Experiment::HolderStability(c) => holder_run(c, &mut b)?,
        Experiment::ScalingLaw(c) => scaling_run(c, seed, &mut b)?,
        Experiment::DimensionEstimate(c) => dimension_run(c, &mut b)?,
        Experiment::DistanceIntegral(c) => distance_run(c, &mut b)?,
        Experiment::ConvergenceCorollary(c) => convergence_run(c, seed, &mut b)?,
        Experiment::Seminorm(c) => seminorm_run(c, seed, &mut b)?,
    };
    let summary = Summary {
        experiment: config.id(),
        kind: config.experiment.kind().to_string(),
        config_hash: config.hash()?,
        seed,
        checks: b.checks,
        results,
    };
    Ok(Outcome { summary, tables: b.tables, plots: b.plots })
}

/// Runs an experiment and records tables, plots, summary and ledger rows.
pub fn run_and_record(config: &ExperimentConfig, ledger: &ResultsLedger) -> Result<Outcome> {
    let outcome = run_experiment(config)?;
    let dir = ledger.experiment_dir(&outcome.summary.experiment)?;
    for (name, text) in outcome.tables.iter().chain(&outcome.plots) {
        fs::write(dir.join(name), text)?;
    }
    ledger.write_summary(config, &outcome.summary)?;
    ledger.append(&outcome.summary)?;
    Ok(outcome)
}

/// Grid covering the bounding box of `image` with a margin.
pub fn grid_for(image: &BoundaryImage, h: f64) -> GridSpec {
    let (mut lo, mut hi) = image.bbox();
    let n = image.dim();
    let span = (0..n).map(|i| hi[i] - lo[i]).fold(0.0, f64::max);
    let m = (0.1 * span).max(3.0 * h);
    for i in 0..n {
        lo[i] -= m;
        hi[i] += m;
    }
    GridSpec::covering_box(n, lo, hi, h)
}

/// Degree field of a configured map together with its boundary image.
pub fn build_field(cfg: &DegreeFieldConfig, seed: u64) -> Result<(DegreeField, BoundaryImage, Option<SimplicialMesh>)> {
    let image = cfg.map.boundary_image(cfg.samples_per_turn)?;
    let grid = grid_for(&image, cfg.h);
    let opts = FieldOptions { mask_width: None, check_samples: cfg.check_samples, seed };
    match cfg.method {
        FieldMethod::Boundary => Ok((degree_field(&image, grid, &opts)?, image, None)),
        FieldMethod::Simplicial => {
            let interior = cfg.map.interior().ok_or_else(|| Error::InvalidParameter("no interior map".into()))?;
            let domain = Arc::new(DomainSpec::unit_ball(cfg.map.dim()).build()?);
            let plan = ExtensionPlan::from_interior(domain, interior).with_nodes(3);
            let mesh = SimplicialMesh::build(&plan, cfg.h, 0.0)?;
            let field = degree_field_simplicial(&mesh, Some(&image), grid, &opts)?;
            Ok((field, image, Some(mesh)))
        }
    }
}

fn point_degree(image: &BoundaryImage, y: Point, tol: f64) -> Result<i64> {
    match image {
        BoundaryImage::Polyline { .. } => winding_degree_2d(image, y, tol),
        BoundaryImage::Surface { .. } => solid_angle_degree_3d(image, y, &SolidAngleOptions { tol, ..Default::default() }),
    }
}

fn sample_target(map: &MapSpec, chain: Option<&ChainMap>, rng: &mut ChaCha8Rng) -> Point {
    let n = map.dim();
    if let Some(m) = chain {
        let p = &m.params;
        let i = rng.gen_range(0..p.k_max);
        loop {
            let mut d = [0.0; 3];
            for v in d.iter_mut().take(n) {
                *v = rng.gen_range(-1.0..1.0);
            }
            if geom::norm(d) < 1.0 {
                return geom::add(p.centers[i], geom::scale(d, p.radii[i]));
            }
        }
    }
    let mut y = [0.0; 3];
    for v in y.iter_mut().take(n) {
        *v = rng.gen_range(-1.2..1.2);
    }
    y
}

fn degree_field_run(cfg: &DegreeFieldConfig, seed: u64, b: &mut Builder) -> Result<serde_json::Value> {
    let (field, image, mesh) = build_field(cfg, seed)?;
    let chain = cfg.map.chain()?;
    let cc = field.cross_check;
    b.check(
        "field-vs-point-algorithm",
        cc.mismatches == 0,
        cc.mismatches as f64,
        format!("{} sampled cells, {} mismatches, {} failures", cc.checked, cc.mismatches, cc.failures),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let tol = match cfg.method {
        FieldMethod::Boundary => 0.5 * cfg.h,
        FieldMethod::Simplicial => 2.0 * cfg.h,
    };
    let tol_for = |y: Point| match &chain {
        Some(m) => {
            let p = &m.params;
            let i = (0..p.k_max).min_by(|&a, &c| {
                let da = (geom::dist(y, p.centers[a]) - p.radii[a]).abs();
                let dc = (geom::dist(y, p.centers[c]) - p.radii[c]).abs();
                da.total_cmp(&dc)
            });
            i.map_or(tol, |i| tol.min(0.05 * p.radii[i]))
        }
        None => tol,
    };
    let mut csv = String::from("x,y,z,oracle,point,field,simplicial\n");
    let (mut compared, mut mismatches, mut attempts, mut unresolved) = (0usize, 0usize, 0usize, 0usize);
    while compared < cfg.targets && attempts < 50 * cfg.targets.max(1) {
        attempts += 1;
        let y = sample_target(&cfg.map, chain.as_ref(), &mut rng);
        let t = tol_for(y);
        let oracle = match cfg.map.oracle(y, t) {
            Ok(v) => v,
            Err(Error::Masked { .. }) => continue,
            Err(e) => return Err(e),
        };
        let point = match point_degree(&image, y, t) {
            Ok(v) => v,
            Err(Error::Masked { .. }) => continue,
            Err(_) => {
                unresolved += 1;
                continue;
            }
        };
        let simp = match &mesh {
            Some(m) => match simplicial_degree(m, y, t) {
                Ok(v) => Some(v),
                Err(Error::Masked { .. }) => continue,
                Err(_) => {
                    unresolved += 1;
                    continue;
                }
            },
            None => None,
        };
        let in_field = field.value_at(y);
        compared += 1;
        let ok = point == oracle && in_field.is_none_or(|v| v == oracle) && simp.is_none_or(|v| v == oracle);
        if !ok {
            mismatches += 1;
        }
        csv.push_str(&format!(
            "{},{},{},{oracle},{point},{},{}\n",
            y[0],
            y[1],
            y[2],
            in_field.map_or("masked".into(), |v| v.to_string()),
            simp.map_or("".into(), |v| v.to_string())
        ));
    }
    b.check(
        "targets-agree",
        mismatches == 0 && compared >= cfg.targets,
        mismatches as f64,
        format!("{compared} targets compared, {mismatches} mismatches, {unresolved} unresolved"),
    );
    let (components, nonconstant) = field.components();
    b.table("targets.csv", csv);
    b.table("field.txt", field.to_text());
    if field.grid.n == 2 {
        b.plot("field.svg", field_heatmap(&field, "Degree field", 200)?);
    }
    Ok(json!({
        "dims": field.grid.dims,
        "h": field.grid.h,
        "masked_volume": field.masked_volume(),
        "components": components,
        "nonconstant_components": nonconstant,
        "targets_compared": compared,
        "mismatches": mismatches,
    }))
}

fn divergence_run(cfg: &DivergenceConfig, seed: u64, b: &mut Builder) -> Result<serde_json::Value> {
    let params = select_parameters(cfg.n, cfg.p, cfg.alpha)?;
    let table = truncated_lp_mass(&params, cfg.p, cfg.k_max, cfg.fit_from)?;
    let fit = table.fit.clone().ok_or_else(|| Error::InvalidParameter("fit failed".into()))?;
    let lower = fit.slope - 1.96 * fit.slope_se;
    b.check("fit-slope-positive", lower > 0.0, fit.slope, format!("b = {:.6} ± {:.2e} (95% lower {lower:.6})", fit.slope, 1.96 * fit.slope_se));
    b.check(
        "fit-residual",
        table.rel_residual < cfg.tolerance,
        table.rel_residual,
        format!("max relative residual {:.4} over K in [{}, {}]", table.rel_residual, cfg.fit_from, cfg.k_max),
    );
    let harm = table.ks.iter().zip(&table.reduced).map(|(k, r)| (r - harmonic(*k)).abs() / r).fold(0.0, f64::max);
    b.check("reduced-sums-are-harmonic", harm < 1e-9, harm, "Σ r_k^n c_k^{p(n-1)} against H_K".into());
    let increasing = table.sums.windows(2).all(|w| w[1] > w[0]);
    b.check("partial-sums-increasing", increasing, 0.0, String::new());

    let chain = ChainMap::new(params.truncate(cfg.grid_k)?)?;
    let image = chain.boundary_image(cfg.samples_per_turn)?;
    let grid = grid_for(&image, cfg.h);
    let field = degree_field(&image, grid, &FieldOptions { check_samples: 64, seed, ..Default::default() })?;
    let exact = truncated_lp_mass(&params, cfg.p, cfg.grid_k, 1)?;
    let s_k = *exact.sums.last().expect("nonempty");
    let rep = lp_norm(&field, cfg.p)?;
    let grid_mass = rep.value.powf(cfg.p);
    let bound = (rep.value + rep.masked_bound).powf(cfg.p) - grid_mass;
    let err = (grid_mass - s_k).abs();
    b.check(
        "grid-lp-mass",
        err <= cfg.tolerance * s_k + bound,
        grid_mass,
        format!("grid {grid_mass:.5} vs analytic S_{} = {s_k:.5}; allowed {:.5} + masked {bound:.5}", cfg.grid_k, cfg.tolerance * s_k),
    );
    b.check(
        "field-cross-check",
        field.cross_check.mismatches == 0,
        field.cross_check.mismatches as f64,
        format!("{} sampled cells", field.cross_check.checked),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc4a1);
    let p = chain.params.clone();
    let (mut compared, mut mismatches, mut attempts) = (0, 0, 0);
    while compared < cfg.targets && attempts < 50 * cfg.targets {
        attempts += 1;
        let i = rng.gen_range(0..p.k_max);
        let r = p.radii[i] * rng.gen_range(0.0f64..1.0).sqrt();
        let a = rng.gen_range(0.0..2.0 * PI);
        let y = geom::add(p.centers[i], [r * a.cos(), r * a.sin(), 0.0]);
        let tol = 0.01 * p.radii[i];
        let (Ok(w), Ok(e)) = (winding_degree_2d(&image, y, tol), chain.exact_degree(y, tol)) else { continue };
        compared += 1;
        if w != e {
            mismatches += 1;
        }
    }
    b.check(
        "winding-vs-exact-degree",
        mismatches == 0 && compared >= cfg.targets,
        mismatches as f64,
        format!("{compared} targets, {mismatches} mismatches"),
    );

    b.table("partial_sums.csv", table.to_csv());
    b.table("geometry.csv", chain.params.geometry_csv());
    b.table("params.json", chain.params.to_json()?);
    let pts: Vec<(f64, f64)> = table.ks.iter().zip(&table.sums).map(|(k, s)| ((*k as f64).ln(), *s)).collect();
    let fitted: Vec<(f64, f64)> = pts.iter().map(|(x, _)| (*x, fit.predict(*x))).collect();
    let plot = Plot::new("Truncated L^p mass of the degree", "log K", "S_K")
        .with(Series::new("S_K", pts, Style::Markers))
        .with(Series::new(format!("a + b log K, b = {:.4}", fit.slope), fitted, Style::Dashed));
    b.plot("divergence.svg", plot.to_svg()?);
    Ok(json!({
        "q": params.q,
        "e": params.e,
        "normalization": params.normalization,
        "fit_intercept": fit.intercept,
        "fit_slope": fit.slope,
        "fit_slope_se": fit.slope_se,
        "rel_residual": table.rel_residual,
        "grid_mass": grid_mass,
        "analytic_mass": s_k,
        "masked_bound": bound,
    }))
}

fn holder_run(cfg: &HolderStabilityConfig, b: &mut Builder) -> Result<serde_json::Value> {
    let params = select_parameters(2, cfg.p, cfg.alpha)?;
    let mut rows = Vec::new();
    let mut csv = String::from("K,estimate,theta_a,theta_b\n");
    for &k in &cfg.truncations {
        let m = ChainMap::new(params.truncate(k)?)?;
        let est = holder_seminorm(&m.sampled(), cfg.alpha, cfg.budget)?;
        csv.push_str(&format!("{k},{},{},{}\n", est.value, est.argmax.0[0], est.argmax.1[0]));
        rows.push((k, est.value));
    }
    let reference = rows.iter().find(|r| r.0 == cfg.reference).map(|r| r.1).expect("validated");
    let worst = rows.iter().map(|r| (r.1 / reference).max(reference / r.1)).fold(1.0, f64::max);
    b.check(
        "uniform-holder-bound",
        worst <= cfg.factor,
        worst,
        format!("largest ratio to the K = {} estimate {reference:.4}", cfg.reference),
    );
    let cond = params.truncate(cfg.condition_k)?;
    let violations: Vec<usize> = cond.holder_condition().iter().filter(|c| c.1 > c.2).map(|c| c.0).collect();
    b.check(
        "radius-condition",
        violations.is_empty(),
        violations.len() as f64,
        format!("r_k <= (|I_k|/c_k)^alpha for k <= {}; violations {:?}", cfg.condition_k, violations),
    );
    b.table("holder.csv", csv);
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.0 as f64).log2(), r.1)).collect();
    let plot = Plot::new("Hölder seminorm of truncated chains", "log2 K", "estimate")
        .with(Series::new("estimate", pts.clone(), Style::Markers))
        .with(Series::new(
            "2 x reference",
            pts.iter().map(|p| (p.0, cfg.factor * reference)).collect(),
            Style::Dashed,
        ));
    b.plot("holder.svg", plot.to_svg()?);
    Ok(json!({ "estimates": rows, "reference": reference, "worst_ratio": worst }))
}

fn indicator_field(cells: usize) -> Result<DegreeField> {
    let grid = GridSpec::covering_box(1, [-0.5, 0.0, 0.0], [1.5, 0.0, 0.0], 1.0 / cells as f64);
    Ok(DegreeField::from_fn(grid, |x| i64::from((0.0..1.0).contains(&x[0]))))
}

fn scaling_run(cfg: &ScalingConfig, seed: u64, b: &mut Builder) -> Result<serde_json::Value> {
    let opts = SeminormOptions::default();
    let mut csv = String::from("field,beta,p,lambda,value,slope,expected\n");
    let mut measured = Vec::new();
    for (fi, fc) in cfg.fields.iter().enumerate() {
        let (field, _, _) = build_field(fc, seed)?;
        let name = format!("{}#{fi}", map_name(&fc.map));
        for &(beta, p) in &cfg.pairs {
            let t = scaling_sweep(&field, &cfg.lambdas, beta, p, &opts)?;
            for (l, v) in t.lambdas.iter().zip(&t.values) {
                csv.push_str(&format!("{name},{beta},{p},{l},{v},{},{}\n", t.slope, t.expected));
            }
            let dev = t.relative_deviation();
            b.check(
                &format!("slope {name} beta={beta} p={p}"),
                dev < cfg.tolerance,
                t.slope,
                format!("slope {:.5} vs n/p - beta = {:.5} (relative {dev:.2e})", t.slope, t.expected),
            );
            measured.push((t.expected, t.slope));
        }
    }
    let oracle = gagliardo_seminorm(&indicator_field(cfg.oracle_cells)?, 0.5, 1.0, &opts)?;
    let rel = (oracle.value - 16.0).abs() / 16.0;
    b.check(
        "one-dimensional-oracle",
        rel < cfg.tolerance,
        oracle.value,
        format!("[1_(0,1)]_W^(1/2,1) = {:.5}, analytic 16", oracle.value),
    );
    b.table("scaling.csv", csv);
    let lo = measured.iter().map(|m| m.0).fold(f64::INFINITY, f64::min);
    let hi = measured.iter().map(|m| m.0).fold(f64::NEG_INFINITY, f64::max);
    let plot = Plot::new("Dilation slopes", "n/p - beta", "fitted slope")
        .with(Series::new("measured", measured.clone(), Style::Markers))
        .with(Series::new("reference", vec![(lo, lo), (hi, hi)], Style::Dashed));
    b.plot("scaling.svg", plot.to_svg()?);
    Ok(json!({ "slopes": measured, "oracle": oracle.value }))
}

fn map_name(m: &MapSpec) -> String {
    match m {
        MapSpec::Identity { n } => format!("identity{n}"),
        MapSpec::ComplexPower { k } => format!("power{k}"),
        MapSpec::Chain { k_max, .. } => format!("chain{k_max}"),
    }
}

fn dimension_run(cfg: &DimensionConfig, b: &mut Builder) -> Result<serde_json::Value> {
    let domain = cfg.domain.build()?;
    let opts = BoxCountOptions { delta_min_rel: cfg.delta_min_rel, delta_max_rel: cfg.delta_max_rel, samples: cfg.samples };
    let est = box_counting_dimension(&domain, &opts)?;
    if let Some(expected) = cfg.expected {
        let err = (est.dimension - expected).abs();
        b.check(
            "dimension",
            err <= cfg.tolerance,
            est.dimension,
            format!("{:.4} vs {expected:.4} (tolerance {})", est.dimension, cfg.tolerance),
        );
    }
    let mut csv = String::from("delta,count\n");
    for (d, c) in est.scales.iter().zip(&est.counts) {
        csv.push_str(&format!("{d},{c}\n"));
    }
    b.table("boxcount.csv", csv);
    let pts: Vec<(f64, f64)> = est.scales.iter().zip(&est.counts).map(|(d, c)| ((1.0 / d).ln(), (*c as f64).ln())).collect();
    let fitted: Vec<(f64, f64)> = pts.iter().map(|p| (p.0, est.fit.predict(p.0))).collect();
    let plot = Plot::new("Box counting", "log 1/delta", "log N")
        .with(Series::new("counts", pts, Style::Markers))
        .with(Series::new(format!("fit, d = {:.4}", est.dimension), fitted, Style::Dashed));
    b.plot("dimension.svg", plot.to_svg()?);
    Ok(json!({ "dimension": est.dimension, "residual": est.residual }))
}

fn distance_run(cfg: &DistanceConfig, b: &mut Builder) -> Result<serde_json::Value> {
    let domain = cfg.domain.build()?;
    let opts = IntegralOptions { k_max: cfg.k_max, ..Default::default() };
    let r = distance_power_integral(&domain, cfg.exponent, &opts)?;
    if let Some(expected) = cfg.expected {
        let rel = (r.value - expected).abs() / expected.abs();
        b.check("integral", rel <= cfg.tolerance, r.value, format!("{:.5} vs {expected} (relative {rel:.2e})", r.value));
    }
    b.check(
        "geometric-decay",
        r.decay_ratio < 1.0 && !r.may_diverge,
        r.decay_ratio,
        format!("ratio of the last two layer contributions {:.4}", r.decay_ratio),
    );
    let mut csv = String::from("k,contribution,partial_sum\n");
    for ((k, c), s) in r.layers.iter().zip(&r.partial_sums) {
        csv.push_str(&format!("{k},{c},{s}\n"));
    }
    b.table("layers.csv", csv);
    let pts: Vec<(f64, f64)> = r.layers.iter().filter(|l| l.1 > 0.0).map(|(k, c)| (*k as f64, c.log2())).collect();
    let plot = Plot::new("Whitney layer contributions", "level k", "log2 contribution").with(Series::new("layers", pts, Style::Markers));
    b.plot("layers.svg", plot.to_svg()?);
    Ok(json!({ "value": r.value, "tail": r.tail, "decay_ratio": r.decay_ratio }))
}

fn curve_of(map: &MapSpec) -> MapFn {
    match map {
        MapSpec::ComplexPower { k } => maps::circle_power(*k as i32),
        _ => maps::circle_power(1),
    }
}

fn perturbed_curve(base: &MapFn, pert: &Perturbation, k: usize) -> MapFn {
    let on_circle: MapFn = Arc::new(|t: &Point| [t[0].cos(), t[0].sin(), 0.0]);
    match pert {
        Perturbation::Zero => base.clone(),
        Perturbation::Smooth { scale } => {
            let w = maps::smooth_field();
            let c = on_circle.clone();
            let wf: MapFn = Arc::new(move |t: &Point| w(&c(t)));
            maps::perturb(base.clone(), wf, scale / k as f64)
        }
        Perturbation::Rotation { angle } => maps::rotate(base.clone(), angle / k as f64),
    }
}

fn convergence_run(cfg: &ConvergenceConfig, seed: u64, b: &mut Builder) -> Result<serde_json::Value> {
    let base = curve_of(&cfg.map);
    let turns = match cfg.map {
        MapSpec::ComplexPower { k } => k as usize,
        _ => 1,
    };
    let samples = cfg.samples_per_turn * turns;
    let reach = match cfg.perturbation {
        Perturbation::Smooth { scale } => 1.0 + scale,
        _ => 1.0,
    };
    let grid = GridSpec::covering_ball(2, [0.0; 3], reach + 0.1, cfg.h);
    let opts = FieldOptions { check_samples: 32, seed, ..Default::default() };
    let field_of = |f: &MapFn| -> Result<DegreeField> {
        let img = BoundaryImage::from_curve(f, 0.0, 2.0 * PI, samples)?;
        degree_field(&img, grid, &opts)
    };
    let sem = SeminormOptions::default();
    let distance = |a: &DegreeField, c: &DegreeField| -> Result<f64> {
        Ok(gagliardo_seminorm(&field_difference(a, c)?, cfg.beta, cfg.p, &sem)?.value)
    };
    let f0 = field_of(&base)?;
    let zero = distance(&f0, &field_of(&base)?)?;
    b.check("zero-perturbation", zero == 0.0, zero, "distance between two evaluations of the base field".into());

    let vmax = f0.values.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as f64;
    let floor = f0.masked_volume().powf(1.0 / cfg.p) * vmax;
    let base_holder = holder_seminorm(&SampledMap::new(ParamDomain::interval(0.0, 2.0 * PI), 2, base.clone()), cfg.alpha, cfg.budget)?.value;
    let mut rows = Vec::new();
    let mut csv = String::from("k,amplitude,distance,masked_volume,holder\n");
    for k in 1..=cfg.steps {
        let f = perturbed_curve(&base, &cfg.perturbation, k);
        let fk = field_of(&f)?;
        let d = distance(&fk, &f0)?;
        let hs = holder_seminorm(&SampledMap::new(ParamDomain::interval(0.0, 2.0 * PI), 2, f), cfg.alpha, cfg.budget)?.value;
        let masked = field_difference(&fk, &f0)?.masked_volume();
        csv.push_str(&format!("{k},{},{d},{masked},{hs}\n", 1.0 / k as f64));
        rows.push((k, d, hs));
    }
    let slack = cfg.h.powf(2.0 / cfg.p) * vmax;
    let bad: Vec<usize> = rows.windows(2).filter(|w| w[1].1 > w[0].1 + slack).map(|w| w[1].0).collect();
    b.check(
        "non-increasing",
        bad.is_empty(),
        bad.len() as f64,
        format!("increases beyond one cell ({slack:.2e}) at k = {bad:?}"),
    );
    let last = rows.last().map_or(0.0, |r| r.1);
    b.check("reaches-mask-floor", last <= floor, last, format!("final distance {last:.4e} vs floor {floor:.4e}"));
    let hmax = rows.iter().map(|r| r.2).fold(base_holder, f64::max);
    b.check(
        "uniform-holder-bound",
        hmax.is_finite() && hmax <= 2.0 * base_holder,
        hmax,
        format!("largest perturbed seminorm {hmax:.4} vs base {base_holder:.4}"),
    );
    b.table("convergence.csv", csv);
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.0 as f64, r.1)).collect();
    let plot = Plot::new("Distance of perturbed degree fields", "k (amplitude 1/k)", "distance")
        .with(Series::new("distance", pts.clone(), Style::Markers))
        .with(Series::new("mask floor", pts.iter().map(|p| (p.0, floor)).collect(), Style::Dashed));
    b.plot("convergence.svg", plot.to_svg()?);
    Ok(json!({ "distances": rows.iter().map(|r| r.1).collect::<Vec<_>>(), "floor": floor, "zero": zero }))
}

fn seminorm_run(cfg: &SeminormConfig, seed: u64, b: &mut Builder) -> Result<serde_json::Value> {
    let (field, _, _) = build_field(&cfg.field, seed)?;
    let opts = SeminormOptions::default();
    let mut csv = format!("{}\n", crate::sobolev::SeminormReport::CSV_HEADER);
    let mut values = Vec::new();
    for &(beta, p) in &cfg.pairs {
        let start = std::time::Instant::now();
        let r = gagliardo_seminorm(&field, beta, p, &opts)?;
        let _ = start;
        csv.push_str(&r.csv_row(&map_name(&cfg.field.map), 0.0));
        csv.push('\n');
        b.check(&format!("finite beta={beta} p={p}"), r.value.is_finite() && r.value >= 0.0, r.value, format!("masked bound {:.3e}", r.masked_bound));
        values.push(r);
    }
    b.table("seminorms.csv", csv);
    Ok(serde_json::to_value(values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_experiment_records() {
        let dir = tempfile::tempdir().unwrap();
        let ledger = ResultsLedger::open(dir.path()).unwrap();
        let cfg = ExperimentConfig::new(Experiment::DimensionEstimate(DimensionConfig {
            domain: DomainSpec::unit_square(),
            expected: Some(1.0),
            ..DimensionConfig::default()
        }));
        let out = run_and_record(&cfg, &ledger).unwrap();
        assert!(out.passed(), "{:?}", out.summary.checks);
        assert!(ledger.verify(&cfg.id()).unwrap());
        assert!(dir.path().join("dimension-estimate/dimension.svg").exists());
        let again = run_experiment(&cfg).unwrap();
        assert_eq!(out.tables, again.tables);
        assert_eq!(out.plots, again.plots);
    }

    #[test]
    fn small_degree_field_experiment() {
        let cfg = ExperimentConfig::new(Experiment::DegreeField(DegreeFieldConfig {
            map: MapSpec::ComplexPower { k: 3 },
            h: 0.05,
            targets: 30,
            ..DegreeFieldConfig::default()
        }));
        let out = run_experiment(&cfg).unwrap();
        assert!(out.passed(), "{:?}", out.summary.checks);
    }

    #[test]
    fn failing_check_is_reported() {
        let cfg = ExperimentConfig::new(Experiment::DistanceIntegral(DistanceConfig {
            expected: Some(1.0),
            ..DistanceConfig::default()
        }));
        let out = run_experiment(&cfg).unwrap();
        assert!(!out.passed());
    }
}
