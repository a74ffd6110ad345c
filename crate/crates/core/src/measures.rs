//! Kolmogorov measures, grid domains, test functions, and the closed-form
//! cumulants and functionals of Gaussian, Poisson, Lévy and gamma noise.
//!
//! Every integral over `X` becomes a volume-weighted sum over grid cells and
//! every integral against `σ` a mass-weighted sum over atoms, so all formulas
//! below are finite sums evaluated exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Finite atomic measure on the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct KolmogorovMeasure {
    atoms: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    atoms: Vec<(f64, f64)>,
}

impl TryFrom<RawMeasure> for KolmogorovMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        KolmogorovMeasure::new(raw.atoms)
    }
}

impl From<KolmogorovMeasure> for RawMeasure {
    fn from(m: KolmogorovMeasure) -> Self {
        RawMeasure { atoms: m.atoms }
    }
}

impl KolmogorovMeasure {
    /// Atoms are `(location, mass)` pairs. Masses must be nonnegative with at
    /// least one positive; locations must be finite and pairwise distinct.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::domain("Kolmogorov measure has no atoms"));
        }
        for &(s, m) in &atoms {
            if !s.is_finite() || !m.is_finite() {
                return Err(Error::domain(format!("non-finite atom ({s}, {m})")));
            }
            if m < 0.0 {
                return Err(Error::domain(format!("negative mass {m} at {s}")));
            }
        }
        if atoms.iter().all(|&(_, m)| m == 0.0) {
            return Err(Error::domain("Kolmogorov measure must be nonzero"));
        }
        let mut locs: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        locs.sort_by(f64::total_cmp);
        if locs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain("atom locations must be distinct"));
        }
        Ok(Self { atoms })
    }

    /// Unit mass at `s`.
    pub fn dirac(s: f64) -> Self {
        Self::new(vec![(s, 1.0)]).expect("finite dirac")
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// Atoms with strictly positive mass.
    pub fn support(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.atoms.iter().copied().filter(|&(_, m)| m > 0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Mass sitting at the origin.
    pub fn mass_at_zero(&self) -> f64 {
        self.atoms.iter().filter(|a| a.0 == 0.0).map(|a| a.1).sum()
    }

    /// `∫ sⁿ dσ(s)`.
    pub fn moment(&self, n: u32) -> f64 {
        self.atoms.iter().map(|&(s, m)| m * s.powi(n as i32)).sum()
    }

    /// `∫ |s|ⁿ dσ(s)`.
    pub fn abs_moment(&self, n: u32) -> f64 {
        self.atoms.iter().map(|&(s, m)| m * s.abs().powi(n as i32)).sum()
    }

    /// `∫ s⁻¹ dσ(s)`; requires `σ({0}) = 0`.
    pub fn inverse_moment(&self) -> Result<f64> {
        self.require_no_zero_atom("∫ s⁻¹ dσ")?;
        Ok(self.support().map(|(s, m)| m / s).sum())
    }

    /// Total mass of the jump measure `s⁻² σ(ds)`; requires `σ({0}) = 0`.
    pub fn jump_intensity(&self) -> Result<f64> {
        self.require_no_zero_atom("∫ s⁻² dσ")?;
        Ok(self.support().map(|(s, m)| m / (s * s)).sum())
    }

    fn require_no_zero_atom(&self, what: &str) -> Result<()> {
        if self.mass_at_zero() > 0.0 {
            Err(Error::domain(format!("{what} requires σ({{0}}) = 0")))
        } else {
            Ok(())
        }
    }

    /// `Σ_k w_k σ_k`, merging atoms at equal locations.
    pub fn mixture(parts: &[(f64, &KolmogorovMeasure)]) -> Result<Self> {
        let mut atoms: Vec<(f64, f64)> = parts
            .iter()
            .flat_map(|&(w, m)| m.atoms.iter().map(move |&(s, x)| (s, w * x)))
            .collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (s, m) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == s => last.1 += m,
                _ => merged.push((s, m)),
            }
        }
        Self::new(merged)
    }
}

/// Signed moment `Σ mass·locationⁿ`.
pub fn sigma_moment(sigma: &KolmogorovMeasure, n: u32) -> f64 {
    sigma.moment(n)
}

/// Smallest `C ≥ 0` with `∫|s|ⁿ dσ ≤ Cⁿ n!` for all `1 ≤ n ≤ n_max`.
///
/// The candidate `max_n (∫|s|ⁿ dσ / n!)^{1/n}` is nudged up by whole ulps
/// until the inequality holds as evaluated in floating point, so callers can
/// assert the bound directly at the returned value.
pub fn check_moment_growth(sigma: &KolmogorovMeasure, n_max: usize) -> Result<f64> {
    if !(1..=30).contains(&n_max) {
        return Err(Error::Bounds { what: "n_max", value: n_max, min: 1, max: 30 });
    }
    let moments: Vec<f64> = (1..=n_max as u32).map(|n| sigma.abs_moment(n)).collect();
    let mut c = 0.0f64;
    for (k, &m) in moments.iter().enumerate() {
        if m > 0.0 {
            let n = (k + 1) as f64;
            c = c.max(((m.ln() - ln_factorial(k + 1)) / n).exp());
        }
    }
    while !moment_bound_holds(&moments, c) {
        c = c.next_up();
    }
    Ok(c)
}

/// `∫|s|ⁿ dσ ≤ Cⁿ n!` for every listed moment (`moments[k]` is order `k+1`).
pub fn moment_bound_holds(moments: &[f64], c: f64) -> bool {
    moments.iter().enumerate().all(|(k, &m)| m <= c.powi(k as i32 + 1) * factorial(k + 1))
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: i64,
    pub volume: f64,
}

/// Finite discretization of the base space: cells with positive volumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDomain", into = "RawDomain")]
pub struct GridDomain {
    cells: Vec<Cell>,
}

#[derive(Serialize, Deserialize)]
struct RawDomain {
    cells: Vec<Cell>,
}

impl TryFrom<RawDomain> for GridDomain {
    type Error = Error;
    fn try_from(raw: RawDomain) -> Result<Self> {
        GridDomain::new(raw.cells)
    }
}

impl From<GridDomain> for RawDomain {
    fn from(d: GridDomain) -> Self {
        RawDomain { cells: d.cells }
    }
}

impl GridDomain {
    pub fn new(cells: Vec<Cell>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::domain("domain has no cells"));
        }
        if let Some(c) = cells.iter().find(|c| !(c.volume > 0.0 && c.volume.is_finite())) {
            return Err(Error::domain(format!("cell {} has non-positive volume {}", c.id, c.volume)));
        }
        Ok(Self { cells })
    }

    /// Cells numbered `0..volumes.len()`.
    pub fn from_volumes(volumes: &[f64]) -> Result<Self> {
        Self::new(volumes.iter().enumerate().map(|(i, &v)| Cell { id: i as i64, volume: v }).collect())
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn volumes(&self) -> impl Iterator<Item = f64> + '_ {
        self.cells.iter().map(|c| c.volume)
    }

    pub fn volume(&self, cell: usize) -> f64 {
        self.cells[cell].volume
    }

    /// `∫ φ dx`.
    pub fn integrate(&self, phi: &TestFunction) -> Result<f64> {
        phi.check(self)?;
        Ok(self.volumes().zip(&phi.values).map(|(v, f)| v * f).sum())
    }

    /// `∫ φ₁⋯φₖ dx`.
    pub fn integrate_product(&self, phis: &[&TestFunction]) -> Result<f64> {
        for phi in phis {
            phi.check(self)?;
        }
        Ok((0..self.len())
            .map(|c| self.volume(c) * phis.iter().map(|p| p.values[c]).product::<f64>())
            .sum())
    }
}

/// Cell values of a test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TestFunction {
    pub values: Vec<f64>,
}

impl TestFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(domain: &GridDomain, value: f64) -> Self {
        Self { values: vec![value; domain.len()] }
    }

    pub fn check(&self, domain: &GridDomain) -> Result<()> {
        if self.values.len() != domain.len() {
            return Err(Error::shape(format!(
                "test function has {} values, domain has {} cells",
                self.values.len(),
                domain.len()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("test function has non-finite values"));
        }
        Ok(())
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * t).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Kolmogorov measure attached to the domain: one measure for every cell,
/// or one per cell (an `x`-dependent kernel).
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaKernel {
    Uniform(KolmogorovMeasure),
    PerCell(Vec<KolmogorovMeasure>),
}

impl SigmaKernel {
    pub fn at(&self, cell: usize) -> &KolmogorovMeasure {
        match self {
            SigmaKernel::Uniform(m) => m,
            SigmaKernel::PerCell(ms) => &ms[cell],
        }
    }

    pub fn check(&self, domain: &GridDomain) -> Result<()> {
        match self {
            SigmaKernel::PerCell(ms) if ms.len() != domain.len() => Err(Error::shape(format!(
                "kernel has {} measures, domain has {} cells",
                ms.len(),
                domain.len()
            ))),
            _ => Ok(()),
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, SigmaKernel::Uniform(_))
    }
}

impl From<KolmogorovMeasure> for SigmaKernel {
    fn from(m: KolmogorovMeasure) -> Self {
        SigmaKernel::Uniform(m)
    }
}

/// Scalar or per-cell positive parameter (gamma `α`, `β`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellParam {
    Uniform(f64),
    PerCell(Vec<f64>),
}

impl CellParam {
    pub fn at(&self, cell: usize) -> f64 {
        match self {
            CellParam::Uniform(v) => *v,
            CellParam::PerCell(vs) => vs[cell],
        }
    }

    pub fn check_positive(&self, name: &str, domain: &GridDomain) -> Result<()> {
        if let CellParam::PerCell(vs) = self {
            if vs.len() != domain.len() {
                return Err(Error::shape(format!("{name} has {} values, domain has {} cells", vs.len(), domain.len())));
            }
        }
        for c in 0..domain.len() {
            let v = self.at(c);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v} in cell {c}")));
            }
        }
        Ok(())
    }
}

/// JSON description of a domain with its Kolmogorov measure or kernel:
/// `{"cells":[{"id":0,"volume":1.0}], "sigma":{"atoms":[[1.0,1.0]]}}` or
/// with `"kernel":[{"atoms":…}, …]` holding one measure per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureDocument {
    pub cells: Vec<Cell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<KolmogorovMeasure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Vec<KolmogorovMeasure>>,
}

impl MeasureDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        doc.split()?;
        Ok(doc)
    }

    /// 17-significant-digit serialization; parsing it back is bit-exact.
    pub fn to_json(&self) -> Result<String> {
        crate::json::to_string_compact(self)
    }

    pub fn from_parts(domain: &GridDomain, sigma: Option<&SigmaKernel>) -> Self {
        let (sigma, kernel) = match sigma {
            None => (None, None),
            Some(SigmaKernel::Uniform(m)) => (Some(m.clone()), None),
            Some(SigmaKernel::PerCell(ms)) => (None, Some(ms.clone())),
        };
        Self { cells: domain.cells.clone(), sigma, kernel }
    }

    pub fn split(&self) -> Result<(GridDomain, Option<SigmaKernel>)> {
        let domain = GridDomain::new(self.cells.clone())?;
        let sigma = match (&self.sigma, &self.kernel) {
            (Some(_), Some(_)) => return Err(Error::Parse("give either \"sigma\" or \"kernel\", not both".into())),
            (Some(m), None) => Some(SigmaKernel::Uniform(m.clone())),
            (None, Some(ms)) => Some(SigmaKernel::PerCell(ms.clone())),
            (None, None) => None,
        };
        if let Some(k) = &sigma {
            k.check(&domain)?;
        }
        Ok((domain, sigma))
    }
}

/// Multilinear classical Lévy cumulant
/// `C⁽ⁿ⁾(φ₁,…,φₙ) = Σ_c vol_c φ₁,c⋯φₙ,c ∫ sⁿ⁻² σ_c(ds)` for `n ≥ 2`.
pub fn levy_cumulant_mixed(phis: &[&TestFunction], domain: &GridDomain, sigma: &SigmaKernel) -> Result<f64> {
    let n = phis.len();
    if n < 2 {
        return Err(Error::domain(format!("Lévy cumulants start at order 2, got {n}")));
    }
    sigma.check(domain)?;
    for phi in phis {
        phi.check(domain)?;
    }
    let order = (n - 2) as u32;
    match sigma {
        SigmaKernel::Uniform(m) => Ok(m.moment(order) * domain.integrate_product(phis)?),
        SigmaKernel::PerCell(_) => Ok((0..domain.len())
            .map(|c| {
                let prod: f64 = phis.iter().map(|p| p.values[c]).product();
                domain.volume(c) * prod * sigma.at(c).moment(order)
            })
            .sum()),
    }
}

/// `n`-th classical cumulant of `⟨ω, φ⟩` under the Lévy noise with kernel `sigma`.
pub fn levy_cumulant(n: usize, phi: &TestFunction, domain: &GridDomain, sigma: &SigmaKernel) -> Result<f64> {
    let phis = vec![phi; n];
    levy_cumulant_mixed(&phis, domain, sigma)
}

/// Multilinear free cumulant of the free Lévy field: zero at order 1,
/// `∫ sⁿ⁻² dσ ∫ φ₁⋯φₙ dx` from order 2.
pub fn free_levy_cumulant(phis: &[&TestFunction], domain: &GridDomain, sigma: &KolmogorovMeasure) -> Result<f64> {
    match phis.len() {
        0 => Err(Error::domain("free cumulants start at order 1")),
        1 => {
            phis[0].check(domain)?;
            Ok(0.0)
        }
        n => Ok(sigma.moment((n - 2) as u32) * domain.integrate_product(phis)?),
    }
}

/// `(e^{isφ} − 1 − isφ)/s²`, continued by `−φ²/2` at `s = 0`.
fn compensated_integrand(phi: f64, s: f64) -> Complex64 {
    if s == 0.0 {
        return Complex64::new(-0.5 * phi * phi, 0.0);
    }
    let x = s * phi;
    let half = (0.5 * x).sin();
    // cos x − 1 = −2 sin²(x/2) avoids the cancellation for small x.
    Complex64::new(-2.0 * half * half, x.sin() - x) / (s * s)
}

/// `(e^{isφ} − 1)/s²` for `s ≠ 0`.
fn uncompensated_integrand(phi: f64, s: f64) -> Complex64 {
    let x = s * phi;
    let half = (0.5 * x).sin();
    Complex64::new(-2.0 * half * half, x.sin()) / (s * s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionalKind {
    Gaussian,
    Poisson { lambda: f64 },
    LevyCompensated,
    LevyUncompensated,
}

/// Logarithm of the characteristic functional `∫ e^{i⟨ω,φ⟩} dμ(ω)`,
/// i.e. the exponent of the closed form.
pub fn log_char_functional(
    kind: FunctionalKind,
    phi: &TestFunction,
    domain: &GridDomain,
    sigma: Option<&SigmaKernel>,
) -> Result<Complex64> {
    phi.check(domain)?;
    let cells = || (0..domain.len()).map(|c| (c, domain.volume(c), phi.values[c]));
    match kind {
        FunctionalKind::Gaussian => {
            Ok(Complex64::new(-0.5 * cells().map(|(_, v, f)| v * f * f).sum::<f64>(), 0.0))
        }
        FunctionalKind::Poisson { lambda } => {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::domain(format!("Poisson intensity must be positive, got {lambda}")));
            }
            Ok(cells().map(|(_, v, f)| uncompensated_integrand(f, 1.0) * (lambda * v)).sum())
        }
        FunctionalKind::LevyCompensated | FunctionalKind::LevyUncompensated => {
            let sigma = sigma.ok_or_else(|| Error::domain("Lévy functional needs a Kolmogorov measure"))?;
            sigma.check(domain)?;
            let compensated = kind == FunctionalKind::LevyCompensated;
            let mut total = Complex64::new(0.0, 0.0);
            for (c, v, f) in cells() {
                let m = sigma.at(c);
                if !compensated {
                    m.require_no_zero_atom("uncompensated Lévy functional")?;
                }
                for (s, mass) in m.support() {
                    let g = if compensated { compensated_integrand(f, s) } else { uncompensated_integrand(f, s) };
                    total += g * (v * mass);
                }
            }
            Ok(total)
        }
    }
}

/// Characteristic functional `exp[…]` of the Gaussian, Poisson or Lévy noise.
pub fn char_functional(
    kind: FunctionalKind,
    phi: &TestFunction,
    domain: &GridDomain,
    sigma: Option<&SigmaKernel>,
) -> Result<Complex64> {
    Ok(log_char_functional(kind, phi, domain, sigma)?.exp())
}

/// Laplace functional `∫ e^{−⟨η,φ⟩} dμ(η)` of the uncompensated Lévy noise
/// with positive jumps: `exp[Σ_c vol_c Σ_i m_i (e^{−s_i φ_c} − 1)/s_i²]`.
pub fn levy_laplace(phi: &TestFunction, domain: &GridDomain, sigma: &SigmaKernel) -> Result<f64> {
    phi.check(domain)?;
    sigma.check(domain)?;
    let mut exponent = 0.0;
    for c in 0..domain.len() {
        let f = phi.values[c];
        for (s, m) in sigma.at(c).support() {
            if s <= 0.0 {
                return Err(Error::domain(format!("Laplace functional needs positive atoms, found {s}")));
            }
            exponent += domain.volume(c) * m * (-s * f).exp_m1() / (s * s);
        }
    }
    Ok(exponent.exp())
}

/// Poisson Laplace functional `exp[λ Σ vol (e^{−φ} − 1)]`.
pub fn poisson_laplace(phi: &TestFunction, domain: &GridDomain, lambda: f64) -> Result<f64> {
    phi.check(domain)?;
    if !(lambda > 0.0) {
        return Err(Error::domain(format!("Poisson intensity must be positive, got {lambda}")));
    }
    Ok((lambda * domain.volumes().zip(&phi.values).map(|(v, f)| v * (-f).exp_m1()).sum::<f64>()).exp())
}

/// Gamma Laplace functional `exp[−Σ_c vol_c β_c log(1 + α_c φ_c)]`, valid
/// for `φ_c > −1/α_c`.
pub fn gamma_laplace(phi: &TestFunction, domain: &GridDomain, alpha: &CellParam, beta: &CellParam) -> Result<f64> {
    phi.check(domain)?;
    alpha.check_positive("alpha", domain)?;
    beta.check_positive("beta", domain)?;
    let mut exponent = 0.0;
    for c in 0..domain.len() {
        let (a, b, f) = (alpha.at(c), beta.at(c), phi.values[c]);
        if f <= -1.0 / a {
            return Err(Error::domain(format!(
                "gamma Laplace transform needs φ > −1/α; cell {c} has φ = {f}, −1/α = {}",
                -1.0 / a
            )));
        }
        exponent -= domain.volume(c) * b * (a * f).ln_1p();
    }
    Ok(exponent.exp())
}

/// Gamma characteristic functional `exp[−Σ_c vol_c β_c log(1 − iα_c φ_c)]`.
pub fn gamma_char_functional(
    phi: &TestFunction,
    domain: &GridDomain,
    alpha: &CellParam,
    beta: &CellParam,
) -> Result<Complex64> {
    phi.check(domain)?;
    alpha.check_positive("alpha", domain)?;
    beta.check_positive("beta", domain)?;
    let mut exponent = Complex64::new(0.0, 0.0);
    for c in 0..domain.len() {
        let z = Complex64::new(1.0, -alpha.at(c) * phi.values[c]);
        exponent -= z.ln() * (domain.volume(c) * beta.at(c));
    }
    Ok(exponent.exp())
}

fn max_s_phi(phi: &TestFunction, sigma: &KolmogorovMeasure) -> f64 {
    sigma
        .support()
        .flat_map(|(s, _)| phi.values.iter().map(move |f| (s * f).abs()))
        .fold(0.0, f64::max)
}

/// Closed form of the free cumulant transform,
/// `Σ_c vol_c Σ_i m_i φ_c² / (1 − s_i φ_c)`, valid while `max |sφ| < 1`.
pub fn free_cumulant_transform(phi: &TestFunction, domain: &GridDomain, sigma: &KolmogorovMeasure) -> Result<f64> {
    phi.check(domain)?;
    let q = max_s_phi(phi, sigma);
    if q >= 1.0 {
        return Err(Error::domain(format!("free cumulant transform diverges: max |sφ| = {q} ≥ 1")));
    }
    Ok((0..domain.len())
        .map(|c| {
            let f = phi.values[c];
            domain.volume(c) * sigma.support().map(|(s, m)| m * f * f / (1.0 - s * f)).sum::<f64>()
        })
        .sum())
}

/// Partial sum `Σ_{n=1}^{N} C⁽ⁿ⁾(φ,…,φ)` of the free cumulant series.
pub fn free_cumulant_partial_sum(
    phi: &TestFunction,
    domain: &GridDomain,
    sigma: &KolmogorovMeasure,
    terms: usize,
) -> Result<f64> {
    let mut sum = 0.0;
    for n in 1..=terms {
        let phis = vec![phi; n];
        sum += free_levy_cumulant(&phis, domain, sigma)?;
    }
    Ok(sum)
}

/// Upper bound on `|closed form − partial sum up to N|`:
/// `Σ vol·m·φ²·|sφ|^{N−1}/(1 − |sφ|)`.
pub fn free_cumulant_tail_bound(
    phi: &TestFunction,
    domain: &GridDomain,
    sigma: &KolmogorovMeasure,
    terms: usize,
) -> Result<f64> {
    phi.check(domain)?;
    let q = max_s_phi(phi, sigma);
    if q >= 1.0 {
        return Err(Error::domain(format!("free cumulant transform diverges: max |sφ| = {q} ≥ 1")));
    }
    let exp = terms.max(1) as i32 - 1;
    Ok((0..domain.len())
        .map(|c| {
            let f = phi.values[c];
            domain.volume(c)
                * sigma
                    .support()
                    .map(|(s, m)| {
                        let r = (s * f).abs();
                        m * f * f * r.powi(exp) / (1.0 - r)
                    })
                    .sum::<f64>()
        })
        .sum())
}

/// Local moment-growth constant for a set of cells: runs
/// [`check_moment_growth`] on `Σ_{c∈cells} vol_c σ_c`.
pub fn check_local_moment_growth(
    domain: &GridDomain,
    sigma: &SigmaKernel,
    cells: &[usize],
    n_max: usize,
) -> Result<f64> {
    sigma.check(domain)?;
    if cells.is_empty() {
        return Err(Error::domain("empty cell set"));
    }
    if let Some(&c) = cells.iter().find(|&&c| c >= domain.len()) {
        return Err(Error::shape(format!("cell index {c} out of range")));
    }
    let parts: Vec<(f64, &KolmogorovMeasure)> = cells.iter().map(|&c| (domain.volume(c), sigma.at(c))).collect();
    check_moment_growth(&KolmogorovMeasure::mixture(&parts)?, n_max)
}
