//! Smeared field operators `A(φ)` on truncated Fock spaces and their vacuum
//! moments.
//!
//! | kind          | space     | `A(φ)`                                              |
//! |---------------|-----------|-----------------------------------------------------|
//! | gaussian      | symmetric | `a⁺(φ) + a⁻(φ)`                                     |
//! | poisson(λ)    | symmetric | `√λ a⁺(φ) + a⁰(φ) + √λ a⁻(φ) + λ∫φ`                 |
//! | levy          | symmetric | `a⁺(φ⊗1) + a⁰(φ⊗id) + a⁻(φ⊗1)` (+ `∫φ ∫s⁻¹dσ`)      |
//! | free_levy     | full      | `a⁺(φ⊗1) + a⁰(φ⊗id) + a⁻(φ⊗1)`                      |
//!
//! The Lévy base space has one mode per (cell, atom) pair with weight
//! `vol_c · mass_i`; `φ⊗1` has entries `φ_c` and `φ⊗id` entries `φ_c s_i`.

use std::sync::Arc;

use crate::exec::Execution;
use crate::fock::{self, BaseSpace, FockOperator, FockSpace};
use crate::measures::{free_levy_cumulant, levy_cumulant_mixed, GridDomain, KolmogorovMeasure, SigmaKernel, TestFunction};
use crate::partitions::{moments_from_cumulants, CumulantMode};
use crate::{Error, Result};

/// Default cap on the number of fields in a moment.
pub const DEFAULT_MAX_ORDER: usize = 6;
/// Hard cap on the number of fields in a moment.
pub const MAX_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    Gaussian,
    Poisson { lambda: f64 },
    Levy { sigma: SigmaKernel, compensated: bool },
    FreeLevy { sigma: KolmogorovMeasure },
}

impl FieldKind {
    pub fn is_free(&self) -> bool {
        matches!(self, FieldKind::FreeLevy { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            FieldKind::Gaussian => "gaussian",
            FieldKind::Poisson { .. } => "poisson",
            FieldKind::Levy { compensated: true, .. } => "levy",
            FieldKind::Levy { compensated: false, .. } => "levy_uncompensated",
            FieldKind::FreeLevy { .. } => "free_levy",
        }
    }

    fn mode(&self) -> CumulantMode {
        if self.is_free() {
            CumulantMode::Free
        } else {
            CumulantMode::Classical
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pub kind: FieldKind,
    pub domain: GridDomain,
    pub truncation: usize,
}

impl FieldSpec {
    pub fn new(kind: FieldKind, domain: GridDomain, truncation: usize) -> Result<Self> {
        let spec = Self { kind, domain, truncation };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_ORDER).contains(&self.truncation) {
            return Err(Error::Bounds { what: "truncation", value: self.truncation, min: 1, max: MAX_ORDER });
        }
        match &self.kind {
            FieldKind::Gaussian => Ok(()),
            FieldKind::Poisson { lambda } => {
                if *lambda > 0.0 && lambda.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain(format!("Poisson intensity must be positive, got {lambda}")))
                }
            }
            FieldKind::Levy { sigma, compensated } => {
                sigma.check(&self.domain)?;
                for c in 0..self.domain.len() {
                    let m = sigma.at(c);
                    if m.support().next().is_none() {
                        return Err(Error::domain(format!("Kolmogorov measure of cell {c} is empty")));
                    }
                    if !compensated {
                        m.inverse_moment()?;
                    }
                }
                Ok(())
            }
            FieldKind::FreeLevy { sigma } => {
                if sigma.support().next().is_none() {
                    return Err(Error::domain("Kolmogorov measure is empty"));
                }
                Ok(())
            }
        }
    }
}

/// One base-space mode: a cell and the jump size attached to it.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Mode {
    cell: usize,
    s: f64,
}

fn modes_and_weights(spec: &FieldSpec) -> (Vec<Mode>, Vec<f64>) {
    let domain = &spec.domain;
    let mut modes = Vec::new();
    let mut weights = Vec::new();
    let mut push_atoms = |c: usize, m: &KolmogorovMeasure| {
        for (s, mass) in m.support() {
            modes.push(Mode { cell: c, s });
            weights.push(domain.volume(c) * mass);
        }
    };
    match &spec.kind {
        FieldKind::Gaussian | FieldKind::Poisson { .. } => {
            for c in 0..domain.len() {
                modes.push(Mode { cell: c, s: 1.0 });
                weights.push(domain.volume(c));
            }
        }
        FieldKind::Levy { sigma, .. } => {
            for c in 0..domain.len() {
                push_atoms(c, sigma.at(c));
            }
        }
        FieldKind::FreeLevy { sigma } => {
            for c in 0..domain.len() {
                push_atoms(c, sigma);
            }
        }
    }
    (modes, weights)
}

/// The one-particle space the fields act over.
pub fn base_space_for(spec: &FieldSpec) -> Result<BaseSpace> {
    spec.validate()?;
    BaseSpace::new(modes_and_weights(spec).1)
}

/// A validated spec together with its Fock space.
#[derive(Debug, Clone)]
pub struct FieldModel {
    spec: FieldSpec,
    modes: Vec<Mode>,
    space: Arc<FockSpace>,
}

impl FieldModel {
    pub fn new(spec: FieldSpec) -> Result<Self> {
        spec.validate()?;
        let (modes, weights) = modes_and_weights(&spec);
        let base = BaseSpace::new(weights)?;
        let space = if spec.kind.is_free() {
            FockSpace::full(base, spec.truncation)?
        } else {
            FockSpace::symmetric(base, spec.truncation)?
        };
        Ok(Self { spec, modes, space })
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn space(&self) -> &Arc<FockSpace> {
        &self.space
    }

    /// `φ⊗1`.
    fn lift_one(&self, phi: &TestFunction) -> Vec<f64> {
        self.modes.iter().map(|m| phi.values[m.cell]).collect()
    }

    /// `φ⊗id`.
    fn lift_id(&self, phi: &TestFunction) -> Vec<f64> {
        self.modes.iter().map(|m| phi.values[m.cell] * m.s).collect()
    }

    /// Scalar part of `A(φ)`, which is also the first cumulant.
    pub fn constant_term(&self, phi: &TestFunction) -> Result<f64> {
        let domain = &self.spec.domain;
        phi.check(domain)?;
        match &self.spec.kind {
            FieldKind::Poisson { lambda } => Ok(lambda * domain.integrate(phi)?),
            FieldKind::Levy { sigma, compensated: false } => {
                let mut total = 0.0;
                for c in 0..domain.len() {
                    total += domain.volume(c) * phi.values[c] * sigma.at(c).inverse_moment()?;
                }
                Ok(total)
            }
            _ => Ok(0.0),
        }
    }

    /// The operator `A(φ)`.
    pub fn field(&self, phi: &TestFunction) -> Result<FockOperator> {
        let constant = self.constant_term(phi)?;
        let one = self.lift_one(phi);
        let plus = fock::create(&self.space, &one)?;
        let minus = fock::annihilate(&self.space, &one)?;
        match &self.spec.kind {
            FieldKind::Gaussian => FockOperator::combine(&[(1.0, &plus), (1.0, &minus)], 0.0),
            FieldKind::Poisson { lambda } => {
                let r = lambda.sqrt();
                let zero = fock::neutral(&self.space, &one)?;
                FockOperator::combine(&[(r, &plus), (1.0, &zero), (r, &minus)], constant)
            }
            FieldKind::Levy { .. } | FieldKind::FreeLevy { .. } => {
                let zero = fock::neutral(&self.space, &self.lift_id(phi))?;
                FockOperator::combine(&[(1.0, &plus), (1.0, &zero), (1.0, &minus)], constant)
            }
        }
    }

    fn check_order(&self, n: usize) -> Result<()> {
        if n > self.spec.truncation {
            return Err(Error::Truncation { what: "Fock truncation", required: n, available: self.spec.truncation });
        }
        Ok(())
    }

    /// `⟨A(φ₁)⋯A(φₙ)Ω, Ω⟩`.
    pub fn joint_moment(&self, phis: &[TestFunction]) -> Result<f64> {
        self.check_order(phis.len())?;
        let ops = phis.iter().map(|p| self.field(p)).collect::<Result<Vec<_>>>()?;
        let refs: Vec<&FockOperator> = ops.iter().collect();
        fock::vacuum_expectation(&refs)
    }

    /// Joint moments of several words, evaluated independently.
    pub fn joint_moments(&self, words: &[Vec<TestFunction>], exec: Execution) -> Result<Vec<f64>> {
        exec.try_map_indexed(words.len(), |i| self.joint_moment(&words[i]))
    }

    /// Multilinear cumulant of the fields at the given positions (0-based).
    fn cumulant(&self, phis: &[&TestFunction]) -> Result<f64> {
        let domain = &self.spec.domain;
        if phis.len() == 1 {
            return self.constant_term(phis[0]);
        }
        match &self.spec.kind {
            FieldKind::Gaussian => {
                if phis.len() == 2 {
                    domain.integrate_product(phis)
                } else {
                    Ok(0.0)
                }
            }
            FieldKind::Poisson { lambda } => Ok(lambda * domain.integrate_product(phis)?),
            FieldKind::Levy { sigma, .. } => levy_cumulant_mixed(phis, domain, sigma),
            FieldKind::FreeLevy { sigma } => free_levy_cumulant(phis, domain, sigma),
        }
    }

    /// Moment predicted by the partition sum over (non-crossing, for the
    /// free kind) partitions with the kind's multilinear cumulants.
    pub fn predicted_moment(&self, phis: &[TestFunction]) -> Result<f64> {
        self.check_order(phis.len())?;
        for phi in phis {
            phi.check(&self.spec.domain)?;
        }
        if phis.is_empty() {
            return Ok(1.0);
        }
        moments_from_cumulants(phis.len(), self.spec.kind.mode(), |block| {
            let sub: Vec<&TestFunction> = block.iter().map(|&j| &phis[j - 1]).collect();
            self.cumulant(&sub)
        })
    }

    /// `max_v ‖[A(φ), A(ψ)] v‖ / ‖v‖` over basis states of degree `≤ N − 2`.
    pub fn commutator_residual(&self, phi: &TestFunction, psi: &TestFunction) -> Result<f64> {
        if self.spec.kind.is_free() {
            return Err(Error::domain("free fields do not commute"));
        }
        let a = self.field(phi)?;
        let b = self.field(psi)?;
        let top = self.spec.truncation.saturating_sub(2);
        let mut worst = 0.0f64;
        for j in 0..self.space.dim() {
            if self.space.degree(j) > top || self.spec.truncation < 2 {
                continue;
            }
            let v = self.space.basis_vector(j);
            let ab = a.apply(&b.apply(&v)?)?;
            let ba = b.apply(&a.apply(&v)?)?;
            let diff: Vec<f64> = ab.iter().zip(&ba).map(|(x, y)| x - y).collect();
            worst = worst.max(self.space.norm(&diff) / self.space.norm(&v));
        }
        Ok(worst)
    }
}

/// `A(φ)` for a one-off spec.
pub fn build_field(spec: &FieldSpec, phi: &TestFunction) -> Result<FockOperator> {
    FieldModel::new(spec.clone())?.field(phi)
}

pub fn joint_moment(spec: &FieldSpec, phis: &[TestFunction]) -> Result<f64> {
    if phis.len() > spec.truncation {
        return Err(Error::Truncation { what: "Fock truncation", required: phis.len(), available: spec.truncation });
    }
    FieldModel::new(spec.clone())?.joint_moment(phis)
}

pub fn predicted_moment(spec: &FieldSpec, phis: &[TestFunction]) -> Result<f64> {
    FieldModel::new(spec.clone())?.predicted_moment(phis)
}

pub fn commutator_residual(spec: &FieldSpec, phi: &TestFunction, psi: &TestFunction) -> Result<f64> {
    if spec.kind.is_free() {
        return Err(Error::domain("free fields do not commute"));
    }
    FieldModel::new(spec.clone())?.commutator_residual(phi, psi)
}
