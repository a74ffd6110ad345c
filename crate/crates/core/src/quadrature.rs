//! Atomic stand-ins for continuous Kolmogorov measures.
//!
//! The gamma noise has `σ(ds) = β s e^{−s/α} ds` on `(0, ∞)`. It is
//! truncated to `[0, S]` with the tail mass `βα(S + α)e^{−S/α}` below
//! [`GAMMA_TAIL_MASS`] and discretized with Gauss–Legendre nodes, so every
//! downstream formula stays a finite sum over atoms.

use crate::jacobi1d::JacobiMatrix;
use crate::measures::{CellParam, GridDomain, KolmogorovMeasure, SigmaKernel};
use crate::{Error, Result};

pub const DEFAULT_NODES: usize = 64;
pub const GAMMA_TAIL_MASS: f64 = 1e-10;

/// Gauss–Legendre rule on `[lo, hi]` (Lebesgue weights).
pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::Bounds { what: "quadrature nodes", value: 0, min: 1, max: usize::MAX });
    }
    let rule = JacobiMatrix::legendre(n).discretize_measure()?;
    let half = 0.5 * (hi - lo);
    Ok(rule
        .nodes
        .iter()
        .zip(&rule.weights)
        // The Legendre section's measure is dx/2 on [−1, 1].
        .map(|(&x, &w)| (lo + half * (x + 1.0), 2.0 * w * half))
        .collect())
}

/// Truncation point `S` with `∫_S^∞ β s e^{−s/α} ds < GAMMA_TAIL_MASS`.
pub fn gamma_truncation(alpha: f64, beta: f64) -> f64 {
    let tail = |s: f64| beta * alpha * (s + alpha) * (-s / alpha).exp();
    let mut s = alpha;
    while tail(s) >= GAMMA_TAIL_MASS {
        s += alpha;
    }
    s
}

/// Gauss–Legendre discretization of the gamma Kolmogorov measure.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaQuadrature {
    pub alpha: f64,
    pub beta: f64,
    pub truncation: f64,
    pub measure: KolmogorovMeasure,
}

impl GammaQuadrature {
    pub fn new(alpha: f64, beta: f64, nodes: usize) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::domain(format!("gamma parameters must be positive, got α={alpha}, β={beta}")));
        }
        let truncation = gamma_truncation(alpha, beta);
        let atoms = gauss_legendre(nodes, 0.0, truncation)?
            .into_iter()
            .map(|(s, w)| (s, w * beta * s * (-s / alpha).exp()))
            .collect();
        Ok(Self { alpha, beta, truncation, measure: KolmogorovMeasure::new(atoms)? })
    }
}

/// Per-cell gamma kernel built from (possibly cell-dependent) `α`, `β`.
pub fn gamma_kernel(domain: &GridDomain, alpha: &CellParam, beta: &CellParam, nodes: usize) -> Result<SigmaKernel> {
    alpha.check_positive("alpha", domain)?;
    beta.check_positive("beta", domain)?;
    match (alpha, beta) {
        (CellParam::Uniform(a), CellParam::Uniform(b)) => {
            Ok(SigmaKernel::Uniform(GammaQuadrature::new(*a, *b, nodes)?.measure))
        }
        _ => Ok(SigmaKernel::PerCell(
            (0..domain.len())
                .map(|c| GammaQuadrature::new(alpha.at(c), beta.at(c), nodes).map(|q| q.measure))
                .collect::<Result<_>>()?,
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{char_functional, gamma_char_functional, gamma_laplace, levy_laplace, FunctionalKind, TestFunction};

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let rule = gauss_legendre(8, 0.0, 2.0).unwrap();
        for k in 0..16 {
            let q: f64 = rule.iter().map(|(x, w)| w * x.powi(k)).sum();
            let exact = 2f64.powi(k + 1) / (k + 1) as f64;
            assert!((q - exact).abs() < 1e-12 * exact, "k={k}");
        }
    }

    #[test]
    fn truncation_meets_tail_budget() {
        for (a, b) in [(1.0, 1.0), (0.5, 3.0), (2.0, 0.2)] {
            let s = gamma_truncation(a, b);
            assert!(b * a * (s + a) * (-s / a).exp() < GAMMA_TAIL_MASS);
        }
    }

    #[test]
    fn gamma_moments_match_truncated_integrals() {
        // ∫_0^S sᵏ e^{−s/α} ds = αᵏ⁺¹ k! (1 − e^{−S/α} Σ_{j≤k} (S/α)ʲ/j!)
        let (alpha, beta) = (1.5, 0.7);
        let q = GammaQuadrature::new(alpha, beta, DEFAULT_NODES).unwrap();
        let x = q.truncation / alpha;
        for n in 0..8u32 {
            let k = n as usize + 1;
            let partial: f64 = (0..=k).map(|j| x.powi(j as i32) / crate::measures::factorial(j)).sum();
            let exact = beta * alpha.powi(k as i32 + 1) * crate::measures::factorial(k) * (1.0 - (-x).exp() * partial);
            assert!((q.measure.moment(n) - exact).abs() < 1e-12 * exact, "n={n}");
        }
        let full_mass = beta * alpha * alpha;
        assert!((full_mass - q.measure.total_mass()).abs() < GAMMA_TAIL_MASS);
    }

    #[test]
    fn discretized_laplace_matches_gamma_closed_form() {
        let domain = GridDomain::from_volumes(&[1.0, 0.5, 2.0]).unwrap();
        let alpha = CellParam::PerCell(vec![1.0, 0.5, 2.0]);
        let beta = CellParam::Uniform(1.3);
        let kernel = gamma_kernel(&domain, &alpha, &beta, DEFAULT_NODES).unwrap();
        for values in [[0.0, 0.0, 0.0], [1.0, 0.3, 0.2], [-0.3, 2.0, 0.0]] {
            let phi = TestFunction::new(values.to_vec());
            let closed = gamma_laplace(&phi, &domain, &alpha, &beta).unwrap();
            let discrete = levy_laplace(&phi, &domain, &kernel).unwrap();
            assert!((closed - discrete).abs() < 1e-9 * closed, "{closed} vs {discrete}");
        }
    }

    #[test]
    fn discretized_char_functional_matches_gamma_closed_form() {
        let domain = GridDomain::from_volumes(&[1.0, 0.5]).unwrap();
        let (alpha, beta) = (CellParam::PerCell(vec![1.0, 0.5]), CellParam::Uniform(2.0));
        let kernel = gamma_kernel(&domain, &alpha, &beta, DEFAULT_NODES).unwrap();
        for values in [[0.0, 0.0], [0.4, -1.0], [1.5, 0.3]] {
            let phi = TestFunction::new(values.to_vec());
            let closed = gamma_char_functional(&phi, &domain, &alpha, &beta).unwrap();
            let discrete = char_functional(FunctionalKind::LevyUncompensated, &phi, &domain, Some(&kernel)).unwrap();
            assert!((closed - discrete).norm() < 1e-9, "{closed} vs {discrete}");
        }
    }
}
