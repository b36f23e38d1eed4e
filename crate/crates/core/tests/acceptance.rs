//! End-to-end acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use degreelab_core::chain::{select_parameters, ChainMap};
use degreelab_core::degree::{
    degree_field, simplicial_degree, winding_degree_2d, BoundaryImage, FieldOptions, GridSpec, SimplicialMesh,
};
use degreelab_core::domain::{DomainSpec, Domain};
use degreelab_core::extension::{gradient_bound_check, preimage_count_bound, ExtensionPlan, GradientOptions, TargetGrid};
use degreelab_core::geom;
use degreelab_core::holder::MapFn;
use degreelab_core::lab::{
    run_experiment, ConvergenceConfig, DegreeFieldConfig, DimensionConfig, DistanceConfig, DivergenceConfig, Experiment,
    ExperimentConfig, FieldMethod, HolderStabilityConfig, MapSpec, ScalingConfig,
};
use degreelab_core::maps;
use degreelab_core::sobolev::lp_norm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Checks = Vec<(String, bool)>;

fn experiment(e: Experiment) -> Checks {
    let out = run_experiment(&ExperimentConfig::new(e)).expect("experiment runs");
    out.summary
        .checks
        .iter()
        .map(|c| (format!("{}: {} ({})", c.name, c.value, c.detail), c.passed))
        .collect()
}

fn disk() -> Arc<Domain> {
    Arc::new(DomainSpec::unit_ball(2).build().unwrap())
}

/// Every unmasked cell of the field of `image` carries `inside` within radius 1
/// of the origin and 0 outside.
fn field_matches(image: &BoundaryImage, n: usize, h: f64, inside: i64) -> (bool, String) {
    let grid = GridSpec::covering_ball(n, [0.0; 3], 1.3, h);
    let field = degree_field(image, grid, &FieldOptions::default()).unwrap();
    let mut bad = 0;
    for i in 0..field.grid.len() {
        if field.mask[i] {
            continue;
        }
        let r = geom::norm(field.grid.center(i));
        if field.values[i] != if r < 1.0 { inside } else { 0 } {
            bad += 1;
        }
    }
    (bad == 0 && field.cross_check.mismatches == 0, format!("{} cells, {bad} wrong", field.grid.len()))
}

fn criterion_1() -> Checks {
    let mut out = Checks::new();
    let id2 = BoundaryImage::from_curve(&maps::circle_power(1), 0.0, 2.0 * PI, 512).unwrap();
    let (ok, d) = field_matches(&id2, 2, 0.02, 1);
    out.push((format!("identity field n=2: {d}"), ok));
    let sphere = DomainSpec::unit_ball(3).with_max_edge(0.1).build().unwrap();
    let id3 = BoundaryImage::from_domain(&sphere, &maps::identity());
    let (ok, d) = field_matches(&id3, 3, 0.1, 1);
    out.push((format!("identity field n=3: {d}"), ok));
    let w3 = BoundaryImage::from_curve(&maps::circle_power(3), 0.0, 2.0 * PI, 1536).unwrap();
    let (ok, d) = field_matches(&w3, 2, 0.02, 3);
    out.push((format!("winding-3 field: {d}"), ok));

    let plan = ExtensionPlan::from_interior(disk(), maps::complex_power(2)).with_nodes(3);
    let mesh = SimplicialMesh::build(&plan, 0.02, 0.0).unwrap();
    let z2 = simplicial_degree(&mesh, [0.25, 0.0, 0.0], 1e-9).unwrap();
    out.push((format!("z^2 simplicial degree at (0.25, 0) = {z2}"), z2 == 2));

    for map in [MapSpec::Identity { n: 2 }, MapSpec::ComplexPower { k: 2 }, MapSpec::ComplexPower { k: 3 }, MapSpec::Identity { n: 3 }] {
        let h = if map.dim() == 3 { 0.1 } else { 0.02 };
        let cfg = DegreeFieldConfig { map: map.clone(), h, method: FieldMethod::Simplicial, targets: 100, ..DegreeFieldConfig::default() };
        for (name, ok) in experiment(Experiment::DegreeField(cfg)) {
            out.push((format!("{map:?} {name}"), ok));
        }
    }
    out
}

fn criterion_2() -> Checks {
    let mut out = Checks::new();
    let params = select_parameters(2, 1.0, 0.4).unwrap();
    out.push((format!("q = {}", params.q), params.q == 1.5));
    let chain = ChainMap::new(params.truncate(8).unwrap()).unwrap();
    let c = &chain.params.circlings;
    out.push((format!("c_k = {c:?}"), c.len() == 8 && c.iter().enumerate().all(|(i, &ck)| ck == ((i + 1) * (i + 1)) as u64)));
    let image = chain.boundary_image(256).unwrap();
    let p = &chain.params;
    for k in 1..=8 {
        let expected = if k == 1 { 1 } else { 2 * p.circlings[k - 1] as i64 + 1 };
        let y = geom::add(p.centers[k - 1], [0.3 * p.radii[k - 1], 0.1 * p.radii[k - 1], 0.0]);
        let w = winding_degree_2d(&image, y, 1e-3 * p.radii[k - 1]).unwrap();
        let e = chain.exact_degree(y, 1e-3 * p.radii[k - 1]).unwrap();
        out.push((format!("disk {k}: winding {w}, exact {e}, expected {expected}"), w == expected && e == expected));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut compared, mut bad) = (0, 0);
    while compared < 200 {
        let i = rng.gen_range(0..8);
        let r = p.radii[i] * rng.gen_range(0.0f64..1.3);
        let a = rng.gen_range(0.0..2.0 * PI);
        let y = geom::add(p.centers[i], [r * a.cos(), r * a.sin(), 0.0]);
        let tol = 0.01 * p.radii[i];
        let (Ok(w), Ok(e)) = (winding_degree_2d(&image, y, tol), chain.exact_degree(y, tol)) else { continue };
        compared += 1;
        bad += usize::from(w != e);
    }
    out.push((format!("winding vs exact at {compared} targets: {bad} mismatches"), bad == 0));
    out
}

fn criterion_6() -> Checks {
    let mut out = Checks::new();
    let plan = ExtensionPlan::from_interior(disk(), maps::radial_power(0.5));
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut count, mut worst) = (0, 0.0f64);
    while count < 10_000 {
        let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0];
        // Points inside the finest resolved layer are outside the partition's support.
        if plan.domain().signed_distance(x) <= plan.resolved_distance() {
            continue;
        }
        count += 1;
        worst = worst.max((plan.partition(x).iter().sum::<f64>() - 1.0).abs());
    }
    out.push((format!("partition of unity on {count} points: max |Σχ - 1| = {worst:.2e}"), worst <= 1e-6));

    let test_maps: Vec<(&str, MapFn, f64)> = vec![
        ("identity", maps::identity(), 1.0),
        ("z^2", maps::complex_power(2), 1.0),
        ("radial 1/2", maps::radial_power(0.5), 0.5),
    ];
    for (name, map, alpha) in &test_maps {
        let plan = ExtensionPlan::from_interior(disk(), map.clone());
        let sup = |budget| {
            let r = gradient_bound_check(&plan, &[1.0, 1.0], &[*alpha, *alpha], &GradientOptions { budget, ..Default::default() }).unwrap();
            r.sup.iter().copied().fold(0.0, f64::max)
        };
        let (a, b) = (sup(1000), sup(4000));
        let drift = (a / b).max(b / a);
        out.push((format!("{name} gradient ratio {a:.4} -> {b:.4} (drift {drift:.3})"), a.is_finite() && b.is_finite() && drift <= 2.0));
    }

    let grid = TargetGrid { n: 2, center: [0.0; 3], radius: 2.5, h: 0.05 };
    let extended: Vec<(&str, MapFn)> = vec![
        ("identity", maps::identity()),
        ("2 x identity", maps::scaled_identity(2.0)),
        ("z^2", maps::complex_power(2)),
        ("z^3", maps::complex_power(3)),
        ("perturbed identity", maps::perturb(maps::identity(), maps::smooth_field(), 0.5)),
    ];
    for (name, map) in &extended {
        let plan = ExtensionPlan::from_interior(disk(), map.clone());
        let total = preimage_count_bound(&plan, grid, 200).unwrap().total;
        let curve: MapFn = {
            let m = map.clone();
            Arc::new(move |t: &[f64; 3]| m(&[t[0].cos(), t[0].sin(), 0.0]))
        };
        let image = BoundaryImage::from_curve(&curve, 0.0, 2.0 * PI, 2048).unwrap();
        let g = GridSpec::covering_ball(2, [0.0; 3], 2.5, 0.01);
        let l1 = lp_norm(&degree_field(&image, g, &FieldOptions::default()).unwrap(), 1.0).unwrap();
        out.push((format!("{name}: ∫|det Dṽ| = {total:.4} >= ||deg||_L1 = {:.4}", l1.value), total >= l1.value));
        if *name == "identity" {
            let rel = (total - PI).abs() / PI;
            out.push((format!("identity ∫N = {total:.4} vs π (relative {rel:.2e})"), rel <= 0.03));
        }
    }
    out
}

fn criterion_7() -> Checks {
    let mut out = experiment(Experiment::DimensionEstimate(DimensionConfig {
        domain: DomainSpec::unit_square(),
        expected: Some(1.0),
        ..DimensionConfig::default()
    }));
    out.extend(experiment(Experiment::DimensionEstimate(DimensionConfig::default())));
    out.extend(experiment(Experiment::DistanceIntegral(DistanceConfig::default())));
    out
}

fn report(id: u32, run: fn() -> Checks) -> bool {
    let start = Instant::now();
    let checks = run();
    let failed: Vec<&String> = checks.iter().filter(|c| !c.1).map(|c| &c.0).collect();
    let ok = failed.is_empty() && !checks.is_empty();
    println!(
        "criterion {id}: {} ({} checks, {:.1} s)",
        if ok { "PASS" } else { "FAIL" },
        checks.len(),
        start.elapsed().as_secs_f64()
    );
    for (name, passed) in &checks {
        println!("    [{}] {name}", if *passed { "ok" } else { "FAILED" });
    }
    ok
}

fn main() {
    let criteria: [(u32, fn() -> Checks); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, || experiment(Experiment::CounterexampleDivergence(DivergenceConfig::default()))),
        (4, || experiment(Experiment::HolderStability(HolderStabilityConfig::default()))),
        (5, || experiment(Experiment::ScalingLaw(ScalingConfig::default()))),
        (6, criterion_6),
        (7, criterion_7),
        (8, || experiment(Experiment::ConvergenceCorollary(ConvergenceConfig::default()))),
    ];
    let failed: Vec<u32> = criteria.iter().filter(|(id, run)| !report(*id, *run)).map(|c| c.0).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
