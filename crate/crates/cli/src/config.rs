//! Run configuration: an optional JSON file overlaid with command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use jacobi_fields::fields::FieldKind;
use jacobi_fields::measures::{CellParam, GridDomain, KolmogorovMeasure, MeasureDocument, SigmaKernel, TestFunction};
use jacobi_fields::sampler::{NoiseKind, RngSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// One test function or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiList {
    Many(Vec<Vec<f64>>),
    One(Vec<f64>),
}

impl PhiList {
    pub fn into_vecs(self) -> Vec<Vec<f64>> {
        match self {
            PhiList::Many(v) => v,
            PhiList::One(v) => vec![v],
        }
    }
}

/// Every parameter a command may read. Absent fields fall back to the
/// command's defaults; the resolved values are echoed in each report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<CellParam>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<CellParam>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<KolmogorovMeasure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<MeasureDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cumulants: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diag: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offdiag: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        RunConfig { $($field: $top.$field.or($base.$field)),* }
    };
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::config("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Fields set in `top` win.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        overlay!(
            self, top, kind, lambda, alpha, beta, sigma, domain, phi, order, truncation, samples, seed, stream, out,
            tolerance, preset, size, shape, moments, cumulants, diag, offdiag, atoms, mode, functional, terms, nodes
        )
    }

    pub fn kind(&self) -> Result<&str, CliError> {
        self.kind.as_deref().ok_or_else(|| CliError::missing("kind"))
    }

    /// The domain (one unit cell when absent) and the Kolmogorov measure or
    /// kernel. A top-level `sigma` takes precedence over one embedded in the
    /// domain document.
    pub fn domain_and_kernel(&self) -> Result<(GridDomain, Option<SigmaKernel>), CliError> {
        let (domain, embedded) = match &self.domain {
            Some(doc) => doc.split().map_err(CliError::in_field("domain"))?,
            None => (GridDomain::from_volumes(&[1.0])?, None),
        };
        let kernel = self.sigma.clone().map(SigmaKernel::Uniform).or(embedded);
        Ok((domain, kernel))
    }

    /// Writes the effective domain back so the echoed config is complete.
    pub fn resolve_domain(&mut self) -> Result<(GridDomain, Option<SigmaKernel>), CliError> {
        let (domain, kernel) = self.domain_and_kernel()?;
        self.domain = Some(MeasureDocument::from_parts(&domain, kernel.as_ref()));
        self.sigma = None;
        Ok((domain, kernel))
    }

    pub fn phis(&self, domain: &GridDomain) -> Result<Vec<TestFunction>, CliError> {
        let vecs = self.phi.clone().ok_or_else(|| CliError::missing("phi"))?.into_vecs();
        if vecs.is_empty() {
            return Err(CliError::config("phi", "no test functions given"));
        }
        vecs.into_iter()
            .map(|v| {
                let phi = TestFunction::new(v);
                phi.check(domain).map_err(|e| CliError::config("phi", e.to_string()))?;
                Ok(phi)
            })
            .collect()
    }

    fn lambda(&self) -> Result<f64, CliError> {
        let lambda = self.lambda.unwrap_or(1.0);
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(CliError::config("lambda", format!("must be positive, got {lambda}")));
        }
        Ok(lambda)
    }

    fn kernel(kernel: &Option<SigmaKernel>) -> Result<SigmaKernel, CliError> {
        kernel.clone().ok_or_else(|| CliError::missing("sigma"))
    }

    pub fn field_kind(&self, kernel: &Option<SigmaKernel>) -> Result<FieldKind, CliError> {
        Ok(match self.kind()? {
            "gaussian" => FieldKind::Gaussian,
            "poisson" => FieldKind::Poisson { lambda: self.lambda()? },
            "levy" => FieldKind::Levy { sigma: Self::kernel(kernel)?, compensated: true },
            "levy_uncompensated" => FieldKind::Levy { sigma: Self::kernel(kernel)?, compensated: false },
            "free_levy" => match Self::kernel(kernel)? {
                SigmaKernel::Uniform(m) => FieldKind::FreeLevy { sigma: m },
                SigmaKernel::PerCell(_) => {
                    return Err(CliError::config("sigma", "free fields take one Kolmogorov measure, not a per-cell kernel"))
                }
            },
            other => {
                return Err(CliError::config(
                    "kind",
                    format!("unknown field kind {other:?} (gaussian, poisson, levy, levy_uncompensated, free_levy)"),
                ))
            }
        })
    }

    pub fn gamma_params(&self) -> (CellParam, CellParam) {
        (
            self.alpha.clone().unwrap_or(CellParam::Uniform(1.0)),
            self.beta.clone().unwrap_or(CellParam::Uniform(1.0)),
        )
    }

    pub fn noise_kind(&self, kernel: &Option<SigmaKernel>) -> Result<NoiseKind, CliError> {
        Ok(match self.kind()? {
            "gaussian" => NoiseKind::Gaussian,
            "poisson" => NoiseKind::Poisson { lambda: self.lambda()? },
            "levy" => NoiseKind::Levy { sigma: Self::kernel(kernel)?, compensated: true },
            "levy_uncompensated" => NoiseKind::Levy { sigma: Self::kernel(kernel)?, compensated: false },
            "gamma" => {
                let (alpha, beta) = self.gamma_params();
                NoiseKind::Gamma { alpha, beta }
            }
            other => {
                return Err(CliError::config(
                    "kind",
                    format!("unknown noise kind {other:?} (gaussian, poisson, levy, levy_uncompensated, gamma)"),
                ))
            }
        })
    }

    pub fn rng(&self) -> RngSpec {
        RngSpec::new(self.seed.unwrap_or(0), self.stream.unwrap_or(0))
    }
}

/// Flags shared by all subcommands. JSON-valued flags take inline JSON;
/// `--domain` also accepts a path to a JSON file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub kind: Option<String>,
    /// Poisson intensity.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Gamma scale: a number or one per cell (JSON).
    #[arg(long)]
    pub alpha: Option<String>,
    /// Gamma shape density: a number or one per cell (JSON).
    #[arg(long)]
    pub beta: Option<String>,
    /// Kolmogorov measure, e.g. '{"atoms":[[1.0,0.5],[2.0,0.25]]}'.
    #[arg(long)]
    pub sigma: Option<String>,
    /// Domain document (JSON or file path), e.g. '{"cells":[{"id":0,"volume":1.0}]}'.
    #[arg(long)]
    pub domain: Option<String>,
    /// One test function '[…]' or several '[[…],[…]]'.
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub truncation: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub stream: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Jacobi preset: hermite, charlier, laguerre, legendre.
    #[arg(long)]
    pub preset: Option<String>,
    /// Jacobi matrix size.
    #[arg(long)]
    pub size: Option<usize>,
    /// Laguerre shape parameter.
    #[arg(long)]
    pub shape: Option<f64>,
    #[arg(long)]
    pub moments: Option<String>,
    #[arg(long)]
    pub cumulants: Option<String>,
    #[arg(long)]
    pub diag: Option<String>,
    #[arg(long)]
    pub offdiag: Option<String>,
    /// Atomic measure as '[[x, w], …]'.
    #[arg(long)]
    pub atoms: Option<String>,
    /// Partition mode: classical or free.
    #[arg(long)]
    pub mode: Option<String>,
    /// transform: characteristic, laplace, free_cumulant, moment_growth.
    #[arg(long)]
    pub functional: Option<String>,
    #[arg(long)]
    pub terms: Option<usize>,
    /// Quadrature nodes for continuous Kolmogorov measures.
    #[arg(long)]
    pub nodes: Option<usize>,
}

fn parse_json<T: DeserializeOwned>(field: &str, text: &Option<String>) -> Result<Option<T>, CliError> {
    text.as_deref()
        .map(|t| serde_json::from_str(t).map_err(|e| CliError::config(field, e.to_string())))
        .transpose()
}

fn parse_domain(text: &Option<String>) -> Result<Option<MeasureDocument>, CliError> {
    let Some(text) = text else { return Ok(None) };
    let body = if text.trim_start().starts_with('{') {
        text.clone()
    } else {
        let path = Path::new(text);
        fs::read_to_string(path).map_err(|e| CliError::io(path, e))?
    };
    serde_json::from_str(&body).map(Some).map_err(|e| CliError::config("domain", e.to_string()))
}

impl Flags {
    pub fn to_config(&self) -> Result<RunConfig, CliError> {
        Ok(RunConfig {
            kind: self.kind.clone(),
            lambda: self.lambda,
            alpha: parse_json("alpha", &self.alpha)?,
            beta: parse_json("beta", &self.beta)?,
            sigma: parse_json("sigma", &self.sigma)?,
            domain: parse_domain(&self.domain)?,
            phi: parse_json("phi", &self.phi)?,
            order: self.order,
            truncation: self.truncation,
            samples: self.samples,
            seed: self.seed,
            stream: self.stream,
            out: self.out.clone(),
            tolerance: self.tolerance,
            preset: self.preset.clone(),
            size: self.size,
            shape: self.shape,
            moments: parse_json("moments", &self.moments)?,
            cumulants: parse_json("cumulants", &self.cumulants)?,
            diag: parse_json("diag", &self.diag)?,
            offdiag: parse_json("offdiag", &self.offdiag)?,
            atoms: parse_json("atoms", &self.atoms)?,
            mode: self.mode.clone(),
            functional: self.functional.clone(),
            terms: self.terms,
            nodes: self.nodes,
        })
    }

    /// The config file (if any) overlaid with the flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        Ok(base.overlay(self.to_config()?))
    }
}
