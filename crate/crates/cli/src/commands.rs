//! The five subcommands. Each returns the rendered JSON report and the exit
//! code it implies; errors carry their own exit codes.

use std::fs::File;
use std::io::BufWriter;

use jacobi_fields::exec::Execution;
use jacobi_fields::fields::{FieldModel, FieldSpec};
use jacobi_fields::jacobi1d::{self, DiscreteMeasure, JacobiMatrix};
use jacobi_fields::measures::{
    char_functional, check_local_moment_growth, check_moment_growth, free_cumulant_partial_sum,
    free_cumulant_tail_bound, free_cumulant_transform, gamma_char_functional, gamma_laplace, levy_laplace,
    poisson_laplace, FunctionalKind, GridDomain, KolmogorovMeasure, SigmaKernel, TestFunction,
};
use jacobi_fields::partitions::{
    cumulants_from_moments, enumerate_noncrossing, enumerate_set_partitions, moments_from_cumulants, CumulantMode,
};
use jacobi_fields::sampler::{self, FunctionalComparison, NoiseKind, SE_THRESHOLD};
use jacobi_fields::{json, Error};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{PhiList, RunConfig};
use crate::error::{CliError, EXIT_CHECK, EXIT_OK};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_JACOBI_SIZE: usize = 5;
pub const DEFAULT_TERMS: usize = 40;
pub const DEFAULT_GROWTH_ORDER: usize = 20;

/// Rendered report plus exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub report: String,
    pub code: i32,
}

fn render<T: Serialize>(report: &T, pass: bool) -> Result<Output, CliError> {
    Ok(Output { report: json::to_string_pretty(report)?, code: if pass { EXIT_OK } else { EXIT_CHECK } })
}

fn tolerance(config: &RunConfig, default: f64) -> Result<f64, CliError> {
    let t = config.tolerance.unwrap_or(default);
    if !(t >= 0.0) {
        return Err(CliError::config("tolerance", format!("must be nonnegative, got {t}")));
    }
    Ok(t)
}

fn phi_list(phis: &[TestFunction]) -> PhiList {
    PhiList::Many(phis.iter().map(|p| p.values.clone()).collect())
}

#[derive(Serialize)]
struct MomentsReport<'a> {
    command: &'static str,
    config: &'a RunConfig,
    kind: &'static str,
    order: usize,
    operator: f64,
    predicted: f64,
    abs_diff: f64,
    tolerance: f64,
    pass: bool,
}

/// Vacuum moment of the field operators against the partition-sum
/// prediction. One φ with `order = n` means `n` copies of it.
pub fn cmd_moments(config: &RunConfig) -> Result<Output, CliError> {
    let mut resolved = config.clone();
    let (domain, kernel) = resolved.resolve_domain()?;
    let kind = resolved.field_kind(&kernel)?;
    let given = resolved.phis(&domain)?;
    let order = match (resolved.order, given.len()) {
        (Some(n), 1) => n,
        (None, 1) => return Err(CliError::missing("order")),
        (Some(n), len) if n != len => {
            return Err(CliError::config("order", format!("order {n} does not match the {len} test functions given")))
        }
        (_, len) => len,
    };
    let phis: Vec<TestFunction> = if given.len() == 1 { vec![given[0].clone(); order] } else { given };
    let truncation = resolved.truncation.unwrap_or(order.max(1));
    let tolerance = tolerance(&resolved, DEFAULT_TOLERANCE)?;
    resolved.order = Some(order);
    resolved.truncation = Some(truncation);
    resolved.tolerance = Some(tolerance);
    resolved.phi = Some(phi_list(&phis));

    let model = FieldModel::new(FieldSpec::new(kind, domain, truncation)?)?;
    let operator = model.joint_moment(&phis)?;
    let predicted = model.predicted_moment(&phis)?;
    let abs_diff = (operator - predicted).abs();
    let pass = abs_diff <= tolerance;
    let report = MomentsReport {
        command: "moments",
        config: &resolved,
        kind: model.spec().kind.name(),
        order,
        operator,
        predicted,
        abs_diff,
        tolerance,
        pass,
    };
    render(&report, pass)
}

#[derive(Serialize)]
struct SampleReport<'a> {
    command: &'static str,
    config: &'a RunConfig,
    samples: usize,
    threshold: f64,
    characteristic: Vec<FunctionalComparison>,
    laplace: Vec<FunctionalComparison>,
    pass: bool,
}

/// Draws samples, writes them as JSON lines to `out` (when given), and
/// compares empirical functionals with the closed forms.
pub fn cmd_sample(config: &RunConfig) -> Result<Output, CliError> {
    let mut resolved = config.clone();
    let (domain, kernel) = resolved.resolve_domain()?;
    let kind = resolved.noise_kind(&kernel)?;
    if resolved.phi.is_none() {
        resolved.phi = Some(PhiList::Many(vec![vec![1.0; domain.len()]]));
    }
    let phis = resolved.phis(&domain)?;
    let count = resolved.samples.unwrap_or(DEFAULT_SAMPLES);
    let threshold = tolerance(&resolved, SE_THRESHOLD)?;
    let rng = resolved.rng();
    resolved.samples = Some(count);
    resolved.tolerance = Some(threshold);
    resolved.seed = Some(rng.seed);
    resolved.stream = Some(rng.stream);
    resolved.phi = Some(phi_list(&phis));
    if let NoiseKind::Gamma { alpha, beta } = &kind {
        resolved.alpha = Some(alpha.clone());
        resolved.beta = Some(beta.clone());
    }

    // Closed forms first, so invalid φ fails before any output is written.
    let predicted_char = phis
        .iter()
        .map(|phi| predicted_characteristic(&kind, phi, &domain))
        .collect::<Result<Vec<_>, _>>()?;
    let predicted_laplace = if kind.is_nonnegative() {
        phis.iter()
            .map(|phi| predicted_laplace(&kind, phi, &domain))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        Vec::new()
    };

    let samples = sampler::sample(&kind, &domain, rng, count, Execution::Parallel)?;
    if let Some(path) = &resolved.out {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut writer = BufWriter::new(file);
        sampler::write_jsonl(&mut writer, &samples)?;
        std::io::Write::flush(&mut writer).map_err(|e| CliError::io(path, e))?;
    }

    let mut characteristic = Vec::new();
    for (phi, predicted) in phis.iter().zip(predicted_char) {
        let est = sampler::empirical_char_functional(&samples, phi)?;
        characteristic.push(FunctionalComparison::characteristic(phi, &est, predicted));
    }
    let mut laplace = Vec::new();
    for (phi, predicted) in phis.iter().zip(predicted_laplace) {
        let est = sampler::empirical_laplace_functional(&samples, phi)?;
        laplace.push(FunctionalComparison::laplace(phi, &est, predicted));
    }
    let pass = characteristic.iter().chain(&laplace).all(|row| row.passes(threshold));
    let report = SampleReport {
        command: "sample",
        config: &resolved,
        samples: count,
        threshold,
        characteristic,
        laplace,
        pass,
    };
    render(&report, pass)
}

fn predicted_characteristic(kind: &NoiseKind, phi: &TestFunction, domain: &GridDomain) -> Result<Complex64, Error> {
    match kind {
        NoiseKind::Gaussian => char_functional(FunctionalKind::Gaussian, phi, domain, None),
        NoiseKind::Poisson { lambda } => char_functional(FunctionalKind::Poisson { lambda: *lambda }, phi, domain, None),
        NoiseKind::Levy { sigma, compensated } => {
            let k = if *compensated { FunctionalKind::LevyCompensated } else { FunctionalKind::LevyUncompensated };
            char_functional(k, phi, domain, Some(sigma))
        }
        NoiseKind::Gamma { alpha, beta } => gamma_char_functional(phi, domain, alpha, beta),
    }
}

fn predicted_laplace(kind: &NoiseKind, phi: &TestFunction, domain: &GridDomain) -> Result<f64, Error> {
    match kind {
        NoiseKind::Poisson { lambda } => poisson_laplace(phi, domain, *lambda),
        NoiseKind::Levy { sigma, .. } => levy_laplace(phi, domain, sigma),
        NoiseKind::Gamma { alpha, beta } => gamma_laplace(phi, domain, alpha, beta),
        NoiseKind::Gaussian => Err(Error::Domain("Gaussian noise has no Laplace functional".into())),
    }
}

#[derive(Serialize)]
struct JacobiReport<'a> {
    command: &'static str,
    config: &'a RunConfig,
    source: &'static str,
    size: usize,
    diag: &'a [f64],
    offdiag: &'a [f64],
    moments: Vec<f64>,
    measure: DiscreteMeasure,
    orthonormality_residual: f64,
    round_trip_residual: f64,
    pass: bool,
}

fn relative_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / y.abs().max(1.0)).fold(0.0, f64::max)
}

/// Recovers the Jacobi matrix from moments with `size` rows, or, when the
/// size was not fixed by the user, with as many rows as the moments support.
fn jacobi_from_moments(moments: &[f64], size: Option<usize>) -> Result<JacobiMatrix, CliError> {
    let m = size.unwrap_or(moments.len() / 2);
    match jacobi1d::recurrence_coefficients_from_moments(moments, m) {
        Err(Error::Degenerate { order, .. }) if size.is_none() && order > 0 => {
            Ok(jacobi1d::recurrence_coefficients_from_moments(moments, order)?)
        }
        other => Ok(other?),
    }
}

/// Converts between moments, recurrence coefficients and Gauss measures.
pub fn cmd_jacobi(config: &RunConfig) -> Result<Output, CliError> {
    let mut resolved = config.clone();
    let tolerance = tolerance(&resolved, DEFAULT_TOLERANCE)?;
    resolved.tolerance = Some(tolerance);
    let (source, matrix, round_trip) = if let (Some(diag), Some(offdiag)) = (&resolved.diag, &resolved.offdiag) {
        let j = JacobiMatrix::new(diag.clone(), offdiag.clone())?;
        let back = jacobi_from_moments(&j.finite_moments(2 * j.size() - 1), Some(j.size()))?;
        let gap = relative_gap(back.diag(), j.diag()).max(relative_gap(back.offdiag(), j.offdiag()));
        ("coefficients", j, gap)
    } else if resolved.diag.is_some() || resolved.offdiag.is_some() {
        return Err(CliError::config("offdiag", "give both diag and offdiag"));
    } else if let Some(moments) = &resolved.moments {
        let j = jacobi_from_moments(moments, resolved.size)?;
        let n = 2 * j.size() - 1;
        let gap = relative_gap(&j.finite_moments(n), &moments[..=n]);
        ("moments", j, gap)
    } else if let Some(atoms) = &resolved.atoms {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let measure = DiscreteMeasure {
            nodes: atoms.iter().map(|a| a.0).collect(),
            weights: atoms.iter().map(|a| a.1 / total).collect(),
        };
        let size = resolved.size.unwrap_or(atoms.len());
        let j = jacobi_from_moments(&measure.moments(2 * size - 1), Some(size))?;
        let gap = if size == atoms.len() {
            let back = j.discretize_measure()?;
            let mut order: Vec<usize> = (0..atoms.len()).collect();
            order.sort_by(|&a, &b| measure.nodes[a].total_cmp(&measure.nodes[b]));
            let nodes: Vec<f64> = order.iter().map(|&i| measure.nodes[i]).collect();
            let weights: Vec<f64> = order.iter().map(|&i| measure.weights[i]).collect();
            relative_gap(&back.nodes, &nodes).max(relative_gap(&back.weights, &weights))
        } else {
            relative_gap(&j.finite_moments(2 * size - 1), &measure.moments(2 * size - 1))
        };
        resolved.size = Some(size);
        ("atoms", j, gap)
    } else {
        let preset = resolved.preset.clone().ok_or_else(|| CliError::missing("preset"))?;
        let size = resolved.size.unwrap_or(DEFAULT_JACOBI_SIZE);
        if size == 0 {
            return Err(CliError::config("size", "must be at least 1"));
        }
        let j = match preset.as_str() {
            "hermite" => JacobiMatrix::hermite(size),
            "charlier" => {
                let lambda = resolved.lambda.unwrap_or(1.0);
                if !(lambda > 0.0) {
                    return Err(CliError::config("lambda", format!("must be positive, got {lambda}")));
                }
                resolved.lambda = Some(lambda);
                JacobiMatrix::charlier(lambda, size)
            }
            "laguerre" => {
                let shape = resolved.shape.unwrap_or(1.0);
                if !(shape > 0.0) {
                    return Err(CliError::config("shape", format!("must be positive, got {shape}")));
                }
                resolved.shape = Some(shape);
                JacobiMatrix::laguerre(shape, size)
            }
            "legendre" => JacobiMatrix::legendre(size),
            other => {
                return Err(CliError::config(
                    "preset",
                    format!("unknown preset {other:?} (hermite, charlier, laguerre, legendre)"),
                ))
            }
        };
        resolved.size = Some(size);
        let back = jacobi_from_moments(&j.finite_moments(2 * size - 1), Some(size))?;
        let gap = relative_gap(back.diag(), j.diag()).max(relative_gap(back.offdiag(), j.offdiag()));
        ("preset", j, gap)
    };
    let size = matrix.size();
    let report = JacobiReport {
        command: "jacobi",
        config: &resolved,
        source,
        size,
        diag: matrix.diag(),
        offdiag: matrix.offdiag(),
        moments: matrix.spectral_moments(2 * size - 1)?,
        measure: matrix.discretize_measure()?,
        orthonormality_residual: jacobi1d::orthonormality_residual(&matrix)?,
        round_trip_residual: round_trip,
        pass: round_trip <= tolerance,
    };
    let pass = report.pass;
    render(&report, pass)
}

#[derive(Serialize)]
struct TransformRow {
    phi: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    log_value: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    partial_sum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail_bound: Option<f64>,
}

impl TransformRow {
    fn new(phi: &TestFunction) -> Self {
        Self { phi: phi.values.clone(), value: None, log_value: None, partial_sum: None, error: None, tail_bound: None }
    }
}

#[derive(Serialize)]
struct GrowthReport {
    constant: f64,
    per_cell: Vec<f64>,
}

#[derive(Serialize)]
struct TransformReport<'a> {
    command: &'static str,
    config: &'a RunConfig,
    functional: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    results: Vec<TransformRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    moment_growth: Option<GrowthReport>,
}

fn uniform_sigma(kernel: &Option<SigmaKernel>) -> Result<&KolmogorovMeasure, CliError> {
    match kernel {
        Some(SigmaKernel::Uniform(m)) => Ok(m),
        Some(SigmaKernel::PerCell(_)) => Err(CliError::config("sigma", "needs one Kolmogorov measure, not a kernel")),
        None => Err(CliError::missing("sigma")),
    }
}

/// Evaluates closed-form functionals for each φ.
pub fn cmd_transform(config: &RunConfig) -> Result<Output, CliError> {
    let mut resolved = config.clone();
    let (domain, kernel) = resolved.resolve_domain()?;
    let functional = resolved.functional.clone().unwrap_or_else(|| "characteristic".into());
    resolved.functional = Some(functional.clone());
    let mut results = Vec::new();
    let mut moment_growth = None;
    match functional.as_str() {
        "characteristic" | "laplace" => {
            let kind = resolved.noise_kind(&kernel)?;
            if let NoiseKind::Gamma { alpha, beta } = &kind {
                resolved.alpha = Some(alpha.clone());
                resolved.beta = Some(beta.clone());
            }
            let phis = resolved.phis(&domain)?;
            for phi in &phis {
                let mut row = TransformRow::new(phi);
                if functional == "laplace" {
                    row.value = Some([predicted_laplace(&kind, phi, &domain)?, 0.0]);
                } else {
                    let v = predicted_characteristic(&kind, phi, &domain)?;
                    let l = v.ln();
                    row.value = Some([v.re, v.im]);
                    row.log_value = Some([l.re, l.im]);
                }
                results.push(row);
            }
        }
        "free_cumulant" => {
            let sigma = uniform_sigma(&kernel)?;
            let terms = resolved.terms.unwrap_or(DEFAULT_TERMS);
            resolved.terms = Some(terms);
            for phi in &resolved.phis(&domain)? {
                let closed = free_cumulant_transform(phi, &domain, sigma)?;
                let partial = free_cumulant_partial_sum(phi, &domain, sigma, terms)?;
                let mut row = TransformRow::new(phi);
                row.value = Some([closed, 0.0]);
                row.partial_sum = Some(partial);
                row.error = Some((closed - partial).abs());
                row.tail_bound = Some(free_cumulant_tail_bound(phi, &domain, sigma, terms)?);
                results.push(row);
            }
        }
        "moment_growth" => {
            let kernel = kernel.clone().ok_or_else(|| CliError::missing("sigma"))?;
            let n_max = resolved.order.unwrap_or(DEFAULT_GROWTH_ORDER);
            resolved.order = Some(n_max);
            let per_cell = (0..domain.len())
                .map(|c| check_moment_growth(kernel.at(c), n_max))
                .collect::<Result<Vec<_>, _>>()?;
            let all: Vec<usize> = (0..domain.len()).collect();
            let constant = check_local_moment_growth(&domain, &kernel, &all, n_max)?;
            moment_growth = Some(GrowthReport { constant, per_cell });
        }
        other => {
            return Err(CliError::config(
                "functional",
                format!("unknown functional {other:?} (characteristic, laplace, free_cumulant, moment_growth)"),
            ))
        }
    }
    let report = TransformReport { command: "transform", config: &resolved, functional, results, moment_growth };
    render(&report, true)
}

#[derive(Serialize)]
struct PartitionsReport<'a> {
    command: &'static str,
    config: &'a RunConfig,
    n: usize,
    mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    partitions: Option<Vec<Vec<Vec<usize>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    moments: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cumulants: Option<Vec<f64>>,
}

/// Lists partitions of `{1,…,order}`, or converts moments to cumulants (or
/// back) in the chosen mode.
pub fn cmd_partitions(config: &RunConfig) -> Result<Output, CliError> {
    let mut resolved = config.clone();
    let (mode, mode_name) = match resolved.mode.as_deref().unwrap_or("classical") {
        "classical" => (CumulantMode::Classical, "classical"),
        "free" => (CumulantMode::Free, "free"),
        other => return Err(CliError::config("mode", format!("unknown mode {other:?} (classical, free)"))),
    };
    resolved.mode = Some(mode_name.into());
    let mut report = PartitionsReport {
        command: "partitions",
        config: &RunConfig::default(),
        n: 0,
        mode: mode_name,
        count: None,
        partitions: None,
        moments: None,
        cumulants: None,
    };
    match (&resolved.moments, &resolved.cumulants) {
        (Some(_), Some(_)) => return Err(CliError::config("cumulants", "give either moments or cumulants")),
        (Some(m), None) => {
            report.n = m.len();
            report.cumulants = Some(cumulants_from_moments(m, mode)?);
        }
        (None, Some(c)) => {
            report.n = c.len();
            let moments = (1..=c.len())
                .map(|n| moments_from_cumulants(n, mode, |block| Ok(c[block.len() - 1])))
                .collect::<Result<Vec<_>, _>>()?;
            report.moments = Some(moments);
        }
        (None, None) => {
            let n = resolved.order.ok_or_else(|| CliError::missing("order"))?;
            let list = match mode {
                CumulantMode::Classical => enumerate_set_partitions(n)?,
                CumulantMode::Free => enumerate_noncrossing(n)?,
            };
            report.n = n;
            report.count = Some(list.len());
            report.partitions = Some(list.iter().map(|p| p.blocks()).collect());
        }
    }
    resolved.order = Some(report.n);
    report.config = &resolved;
    render(&report, true)
}
