//! Python bindings for the degree laboratory.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use degreelab_core::chain::{select_parameters, truncated_lp_mass, ChainMap};
use degreelab_core::degree::{winding_degree_2d, BoundaryImage};
use degreelab_core::domain::{box_counting_dimension, distance_power_integral, BoxCountOptions, DomainSpec, IntegralOptions};
use degreelab_core::lab::{run_experiment as run, ExperimentConfig};

fn err(e: degreelab_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Winding number of the closed polyline through `points` around `y`.
#[pyfunction]
#[pyo3(signature = (points, y, tol = 1e-9))]
fn winding_degree(points: Vec<(f64, f64)>, y: (f64, f64), tol: f64) -> PyResult<i64> {
    let image = BoundaryImage::polyline(points.into_iter().map(|(a, b)| [a, b, 0.0]).collect()).map_err(err)?;
    winding_degree_2d(&image, [y.0, y.1, 0.0], tol).map_err(err)
}

/// Parameters of the sphere chain as a JSON string.
#[pyfunction]
#[pyo3(signature = (n, p, alpha, k_max = 8))]
fn chain_parameters(n: usize, p: f64, alpha: f64, k_max: usize) -> PyResult<String> {
    select_parameters(n, p, alpha).and_then(|s| s.truncate(k_max)).and_then(|s| s.to_json()).map_err(err)
}

/// Centers, radii and circling numbers of the first `k_max` chain spheres.
#[pyfunction]
#[pyo3(signature = (n, p, alpha, k_max = 8))]
fn chain_geometry(n: usize, p: f64, alpha: f64, k_max: usize) -> PyResult<(Vec<Vec<f64>>, Vec<f64>, Vec<u64>)> {
    let s = select_parameters(n, p, alpha).and_then(|s| s.truncate(k_max)).map_err(err)?;
    let centers = s.centers.iter().map(|c| c[..n].to_vec()).collect();
    Ok((centers, s.radii, s.circlings))
}

/// Exact degree of the truncated sphere chain at `y`.
#[pyfunction]
#[pyo3(signature = (n, p, alpha, k_max, y, tol = 1e-9))]
fn chain_degree(n: usize, p: f64, alpha: f64, k_max: usize, y: Vec<f64>, tol: f64) -> PyResult<i64> {
    if y.len() != n {
        return Err(PyValueError::new_err(format!("target needs {n} coordinates")));
    }
    let mut point = [0.0; 3];
    point[..n].copy_from_slice(&y);
    let params = select_parameters(n, p, alpha).and_then(|s| s.truncate(k_max)).map_err(err)?;
    ChainMap::new(params).and_then(|m| m.exact_degree(point, tol)).map_err(err)
}

/// Partial sums `S_K` of the `L^p` mass of the chain degree, with the log fit `(a, b)`.
#[pyfunction]
#[pyo3(signature = (p, alpha, k_max = 4096, fit_from = 16))]
fn lp_mass(p: f64, alpha: f64, k_max: usize, fit_from: usize) -> PyResult<(Vec<usize>, Vec<f64>, Option<(f64, f64)>)> {
    let params = select_parameters(2, p, alpha).map_err(err)?;
    let t = truncated_lp_mass(&params, p, k_max, fit_from).map_err(err)?;
    Ok((t.ks, t.sums, t.fit.map(|f| (f.intercept, f.slope))))
}

/// Box-counting dimension of the level-`level` Koch snowflake boundary.
#[pyfunction]
#[pyo3(signature = (level = 6))]
fn koch_dimension(level: u32) -> PyResult<f64> {
    let domain = DomainSpec::koch(level).build().map_err(err)?;
    let opts = BoxCountOptions { delta_min_rel: 2f64.powi(-8), delta_max_rel: 0.25, samples: 7 };
    Ok(box_counting_dimension(&domain, &opts).map_err(err)?.dimension)
}

/// `∫ dist(x, ∂Q)^s dx` over the unit square.
#[pyfunction]
#[pyo3(signature = (s, k_max = 16))]
fn square_distance_integral(s: f64, k_max: u32) -> PyResult<f64> {
    let domain = DomainSpec::unit_square().build().map_err(err)?;
    let opts = IntegralOptions { k_max, ..Default::default() };
    Ok(distance_power_integral(&domain, s, &opts).map_err(err)?.value)
}

/// Runs an experiment from its JSON configuration and returns `(passed, checks)`
/// with one `(name, passed, value, detail)` tuple per embedded check.
#[pyfunction]
fn run_experiment(config: &str) -> PyResult<(bool, Vec<(String, bool, f64, String)>)> {
    let config = ExperimentConfig::from_json(config).map_err(err)?;
    let out = run(&config).map_err(err)?;
    let checks = out.summary.checks.iter().map(|c| (c.name.clone(), c.passed, c.value, c.detail.clone())).collect();
    Ok((out.passed(), checks))
}

#[pymodule]
fn degreelab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(winding_degree, m)?)?;
    m.add_function(wrap_pyfunction!(chain_parameters, m)?)?;
    m.add_function(wrap_pyfunction!(chain_geometry, m)?)?;
    m.add_function(wrap_pyfunction!(chain_degree, m)?)?;
    m.add_function(wrap_pyfunction!(lp_mass, m)?)?;
    m.add_function(wrap_pyfunction!(koch_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(square_distance_integral, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
