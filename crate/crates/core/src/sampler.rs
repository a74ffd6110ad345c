//! Monte Carlo draws of cell masses `⟨ω, 1_c⟩` for white-noise measures,
//! and empirical functionals with standard errors.
//!
//! Per cell, independently:
//!
//! * gaussian: `N(0, vol)`;
//! * poisson: `Poisson(λ vol)` counts;
//! * levy: an atom at `0` gives a `N(0, mass₀ vol)` component; every other
//!   atom `s` contributes `s · Poisson(vol m/s²)`, which is the compound
//!   Poisson law with Lévy measure `s⁻²σ(ds)` split by jump size; the
//!   compensated variant subtracts `vol Σ m/s`;
//! * gamma: `Gamma(shape β vol, scale α)`.
//!
//! Sample `i` is drawn from a ChaCha8 stream selected by the [`RngSpec`] and
//! positioned at word `i · 2³²`, so the output does not depend on how the
//! samples are scheduled.

use std::io;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::measures::{CellParam, GridDomain, KolmogorovMeasure, SigmaKernel, TestFunction};
use crate::{json, Error, Result};

/// Fewest samples accepted by the empirical functionals.
pub const MIN_SAMPLES: usize = 100;
/// Acceptance threshold in standard errors.
pub const SE_THRESHOLD: f64 = 4.0;
/// Words of ChaCha output reserved for each sample.
const WORDS_PER_SAMPLE: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Generator for sample `index`.
    pub fn generator(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos((index as u128) << WORDS_PER_SAMPLE);
        rng
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKind {
    Gaussian,
    Poisson { lambda: f64 },
    Levy { sigma: SigmaKernel, compensated: bool },
    Gamma { alpha: CellParam, beta: CellParam },
}

impl NoiseKind {
    /// Whether every sample is a nonnegative measure.
    pub fn is_nonnegative(&self) -> bool {
        match self {
            NoiseKind::Gaussian => false,
            NoiseKind::Poisson { .. } | NoiseKind::Gamma { .. } => true,
            NoiseKind::Levy { sigma, compensated } => {
                let positive = |m: &KolmogorovMeasure| m.support().all(|(s, _)| s > 0.0);
                !compensated
                    && match sigma {
                        SigmaKernel::Uniform(m) => positive(m),
                        SigmaKernel::PerCell(ms) => ms.iter().all(positive),
                    }
            }
        }
    }
}

/// Cell masses of one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSample {
    pub values: Vec<f64>,
}

impl NoiseSample {
    pub fn pairing(&self, phi: &TestFunction) -> f64 {
        self.values.iter().zip(&phi.values).map(|(x, f)| x * f).sum()
    }
}

#[derive(Debug, Clone)]
enum CellLaw {
    Normal(Normal<f64>),
    /// `None` for a zero rate.
    Poisson(Option<Poisson<f64>>),
    Levy { gauss: Option<Normal<f64>>, jumps: Vec<(f64, Poisson<f64>)>, shift: f64 },
    Gamma(Gamma<f64>),
}

impl CellLaw {
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            CellLaw::Normal(d) => d.sample(rng),
            CellLaw::Poisson(d) => d.as_ref().map_or(0.0, |d| d.sample(rng)),
            CellLaw::Levy { gauss, jumps, shift } => {
                let g = gauss.as_ref().map_or(0.0, |d| d.sample(rng));
                jumps.iter().fold(g, |acc, (s, d)| acc + s * d.sample(rng)) - shift
            }
            CellLaw::Gamma(d) => d.sample(rng),
        }
    }
}

fn numeric(e: impl std::fmt::Display) -> Error {
    Error::Numeric(e.to_string())
}

fn levy_law(measure: &KolmogorovMeasure, vol: f64, compensated: bool) -> Result<CellLaw> {
    let m0 = measure.mass_at_zero();
    if m0 > 0.0 && !compensated {
        return Err(Error::domain("uncompensated Lévy noise requires σ({0}) = 0"));
    }
    let gauss = if m0 > 0.0 { Some(Normal::new(0.0, (m0 * vol).sqrt()).map_err(numeric)?) } else { None };
    let mut jumps = Vec::new();
    let mut shift = 0.0;
    for (s, m) in measure.support().filter(|&(s, _)| s != 0.0) {
        jumps.push((s, Poisson::new(vol * m / (s * s)).map_err(numeric)?));
        if compensated {
            shift += vol * m / s;
        }
    }
    Ok(CellLaw::Levy { gauss, jumps, shift })
}

fn cell_laws(kind: &NoiseKind, domain: &GridDomain) -> Result<Vec<CellLaw>> {
    (0..domain.len())
        .map(|c| {
            let vol = domain.volume(c);
            match kind {
                NoiseKind::Gaussian => Ok(CellLaw::Normal(Normal::new(0.0, vol.sqrt()).map_err(numeric)?)),
                NoiseKind::Poisson { lambda } => {
                    if !(*lambda > 0.0 && lambda.is_finite()) {
                        return Err(Error::domain(format!("Poisson intensity must be positive, got {lambda}")));
                    }
                    Ok(CellLaw::Poisson(Some(Poisson::new(lambda * vol).map_err(numeric)?)))
                }
                NoiseKind::Levy { sigma, compensated } => {
                    sigma.check(domain)?;
                    levy_law(sigma.at(c), vol, *compensated)
                }
                NoiseKind::Gamma { alpha, beta } => {
                    alpha.check_positive("alpha", domain)?;
                    beta.check_positive("beta", domain)?;
                    Ok(CellLaw::Gamma(Gamma::new(beta.at(c) * vol, alpha.at(c)).map_err(numeric)?))
                }
            }
        })
        .collect()
}

/// Draws `count` independent samples.
pub fn sample(
    kind: &NoiseKind,
    domain: &GridDomain,
    rng: RngSpec,
    count: usize,
    exec: Execution,
) -> Result<Vec<NoiseSample>> {
    if count == 0 {
        return Err(Error::Bounds { what: "sample count", value: 0, min: 1, max: usize::MAX });
    }
    let laws = cell_laws(kind, domain)?;
    Ok(exec.map_indexed(count, |i| {
        let mut r = rng.generator(i);
        NoiseSample { values: laws.iter().map(|law| law.draw(&mut r)).collect() }
    }))
}

/// Real Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// Mean and `sd/√n` of the values.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ss: f64 = values.iter().map(|x| (x - mean) * (x - mean)).sum();
        let sd = if values.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
        Self { value: mean, stderr: sd / n.sqrt() }
    }

    /// `|value − target| ≤ k · stderr`.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }

    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.value - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

/// Complex estimate with separate standard errors for the real and
/// imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEstimate {
    pub value: Complex64,
    pub stderr: [f64; 2],
}

impl ComplexEstimate {
    pub fn agrees_with(&self, target: Complex64, k: f64) -> bool {
        (self.value.re - target.re).abs() <= k * self.stderr[0]
            && (self.value.im - target.im).abs() <= k * self.stderr[1]
    }
}

fn check_samples(samples: &[NoiseSample], phi: &TestFunction) -> Result<()> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::Bounds { what: "sample count", value: samples.len(), min: MIN_SAMPLES, max: usize::MAX });
    }
    if let Some(s) = samples.iter().find(|s| s.values.len() != phi.values.len()) {
        return Err(Error::shape(format!("sample has {} cells, φ has {}", s.values.len(), phi.values.len())));
    }
    Ok(())
}

/// Mean of `e^{i⟨ω,φ⟩}` over the samples.
pub fn empirical_char_functional(samples: &[NoiseSample], phi: &TestFunction) -> Result<ComplexEstimate> {
    check_samples(samples, phi)?;
    let (re, im): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .map(|s| {
            let (sin, cos) = s.pairing(phi).sin_cos();
            (cos, sin)
        })
        .unzip();
    let (re, im) = (Estimate::from_values(&re), Estimate::from_values(&im));
    Ok(ComplexEstimate { value: Complex64::new(re.value, im.value), stderr: [re.stderr, im.stderr] })
}

/// Mean of `e^{−⟨η,φ⟩}` over samples of a nonnegative noise.
pub fn empirical_laplace_functional(samples: &[NoiseSample], phi: &TestFunction) -> Result<Estimate> {
    check_samples(samples, phi)?;
    if samples.iter().any(|s| s.values.iter().any(|&x| x < 0.0)) {
        return Err(Error::domain("Laplace functional needs nonnegative samples"));
    }
    let values: Vec<f64> = samples.iter().map(|s| (-s.pairing(phi)).exp()).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("Laplace functional overflows for this φ"));
    }
    Ok(Estimate::from_values(&values))
}

/// Mean mass of one cell.
pub fn empirical_mean(samples: &[NoiseSample], cell: usize) -> Result<Estimate> {
    cell_column(samples, cell).map(|v| Estimate::from_values(&v))
}

/// Covariance of two cells' masses, with the standard error of the mean of
/// the centered products.
pub fn empirical_covariance(samples: &[NoiseSample], a: usize, b: usize) -> Result<Estimate> {
    let (x, y) = (cell_column(samples, a)?, cell_column(samples, b)?);
    let (mx, my) = (Estimate::from_values(&x).value, Estimate::from_values(&y).value);
    let products: Vec<f64> = x.iter().zip(&y).map(|(u, v)| (u - mx) * (v - my)).collect();
    Ok(Estimate::from_values(&products))
}

fn cell_column(samples: &[NoiseSample], cell: usize) -> Result<Vec<f64>> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::Bounds { what: "sample count", value: samples.len(), min: MIN_SAMPLES, max: usize::MAX });
    }
    samples
        .iter()
        .map(|s| s.values.get(cell).copied().ok_or_else(|| Error::shape(format!("cell {cell} out of range"))))
        .collect()
}

/// One empirical-vs-closed-form row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalComparison {
    pub phi: Vec<f64>,
    pub empirical: [f64; 2],
    pub stderr: [f64; 2],
    pub predicted: [f64; 2],
}

impl FunctionalComparison {
    pub fn characteristic(phi: &TestFunction, estimate: &ComplexEstimate, predicted: Complex64) -> Self {
        Self {
            phi: phi.values.clone(),
            empirical: [estimate.value.re, estimate.value.im],
            stderr: estimate.stderr,
            predicted: [predicted.re, predicted.im],
        }
    }

    pub fn laplace(phi: &TestFunction, estimate: &Estimate, predicted: f64) -> Self {
        Self {
            phi: phi.values.clone(),
            empirical: [estimate.value, 0.0],
            stderr: [estimate.stderr, 0.0],
            predicted: [predicted, 0.0],
        }
    }

    pub fn passes(&self, k: f64) -> bool {
        (0..2).all(|i| (self.empirical[i] - self.predicted[i]).abs() <= k * self.stderr[i])
    }
}

/// Writes one `{"values":[...]}` line per sample.
pub fn write_jsonl<W: io::Write>(mut writer: W, samples: &[NoiseSample]) -> Result<()> {
    for s in samples {
        json::to_writer_compact(&mut writer, s)?;
        writer.write_all(b"\n").map_err(|e| Error::Numeric(format!("write failed: {e}")))?;
    }
    Ok(())
}
