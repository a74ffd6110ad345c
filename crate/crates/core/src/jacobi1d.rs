//! Finite sections of Jacobi matrices and their spectral measures.
//!
//! A Jacobi matrix with diagonal `a_k` and positive off-diagonal `b_k`
//! encodes the three-term recurrence
//! `b_k p_{k+1}(x) = (x − a_k) p_k(x) − b_{k−1} p_{k−1}(x)`, `p_0 = 1`,
//! of the orthonormal polynomials of its spectral measure `μ`, whose
//! moments are `⟨Jⁿ e₀, e₀⟩`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative tolerance of the positive-definiteness guard in
/// [`recurrence_coefficients_from_moments`].
pub const HANKEL_PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiMatrix {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl JacobiMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::domain("Jacobi matrix needs at least one diagonal entry"));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::shape(format!(
                "{} diagonal entries need {} off-diagonal entries, got {}",
                diag.len(),
                diag.len() - 1,
                offdiag.len()
            )));
        }
        if diag.iter().any(|a| !a.is_finite()) {
            return Err(Error::domain("non-finite diagonal entry"));
        }
        if let Some(b) = offdiag.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(Error::domain(format!("off-diagonal entries must be positive, got {b}")));
        }
        Ok(Self { diag, offdiag })
    }

    /// Probabilists' Hermite section (standard Gaussian): `a_k = 0`, `b_k = √(k+1)`.
    pub fn hermite(m: usize) -> Self {
        Self::from_fn(m, |_| 0.0, |k| ((k + 1) as f64).sqrt())
    }

    /// Charlier section (Poisson with mean `λ`): `a_k = k + λ`, `b_k = √(λ(k+1))`.
    pub fn charlier(lambda: f64, m: usize) -> Self {
        Self::from_fn(m, |k| k as f64 + lambda, |k| (lambda * (k + 1) as f64).sqrt())
    }

    /// Laguerre section for the gamma law with shape `κ` and unit scale:
    /// `a_k = 2k + κ`, `b_k = √((k+1)(k+κ))`.
    pub fn laguerre(shape: f64, m: usize) -> Self {
        Self::from_fn(m, |k| 2.0 * k as f64 + shape, |k| ((k + 1) as f64 * (k as f64 + shape)).sqrt())
    }

    /// Legendre section for the uniform probability on `[−1, 1]`.
    pub fn legendre(m: usize) -> Self {
        Self::from_fn(m, |_| 0.0, |k| {
            let j = (k + 1) as f64;
            j / (4.0 * j * j - 1.0).sqrt()
        })
    }

    fn from_fn(m: usize, a: impl Fn(usize) -> f64, b: impl Fn(usize) -> f64) -> Self {
        assert!(m > 0, "Jacobi section size must be positive");
        Self::new((0..m).map(a).collect(), (0..m - 1).map(b).collect()).expect("valid coefficients")
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Moments `0..=n_max` of the spectral measure of the (infinite) Jacobi
    /// operator this matrix is a section of.
    ///
    /// `(Jⁿ)₀₀` only involves `a_0..a_{⌊(n−1)/2⌋}` and `b_0..b_{⌊n/2⌋−1}`, so
    /// a size-`m` section is exact for `n ≤ 2m − 1`; larger orders fail with
    /// the minimal size that would be exact.
    pub fn spectral_moments(&self, n_max: usize) -> Result<Vec<f64>> {
        let m = self.size();
        if n_max > 2 * m - 1 {
            return Err(Error::Truncation { what: "Jacobi section size", required: n_max / 2 + 1, available: m });
        }
        Ok(tridiagonal_moments(&self.diag, &self.offdiag, n_max))
    }

    /// Moments of the finite matrix itself, i.e. of [`JacobiMatrix::discretize_measure`].
    pub fn finite_moments(&self, n_max: usize) -> Vec<f64> {
        tridiagonal_moments(&self.diag, &self.offdiag, n_max)
    }

    /// `p_k(x)` by forward recurrence, `k < m`.
    pub fn polynomial_values(&self, k: usize, x: f64) -> Result<f64> {
        if k >= self.size() {
            return Err(Error::Bounds { what: "polynomial degree", value: k, min: 0, max: self.size() - 1 });
        }
        let (mut prev, mut cur) = (0.0, 1.0);
        for j in 0..k {
            let b_prev = if j == 0 { 0.0 } else { self.offdiag[j - 1] };
            let next = ((x - self.diag[j]) * cur - b_prev * prev) / self.offdiag[j];
            prev = cur;
            cur = next;
        }
        Ok(cur)
    }

    /// Gauss quadrature of the spectral measure (Golub–Welsch): nodes are the
    /// eigenvalues, weights the squared first eigenvector components.
    pub fn discretize_measure(&self) -> Result<DiscreteMeasure> {
        let m = self.size();
        let mat = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                self.diag[i]
            } else if i + 1 == j {
                self.offdiag[i]
            } else if j + 1 == i {
                self.offdiag[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::try_new(mat, f64::EPSILON, 0)
            .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;
        let mut pairs: Vec<(f64, f64)> = (0..m)
            .map(|k| {
                let v0 = eig.eigenvectors[(0, k)];
                (eig.eigenvalues[k], v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::Numeric("eigensolver produced non-finite values".into()));
        }
        Ok(DiscreteMeasure {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        })
    }
}

/// `(Jⁿ)₀₀` for `n = 0..=n_max` by repeated tridiagonal products on `e₀`.
/// The vector only needs `⌈n_max/2⌉ + 1` entries: deeper rows never
/// return to row 0 within `n_max` steps.
pub fn tridiagonal_moments(diag: &[f64], offdiag: &[f64], n_max: usize) -> Vec<f64> {
    let m = diag.len();
    let mut v = vec![0.0; m];
    v[0] = 1.0;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    let mut next = vec![0.0; m];
    for _ in 0..n_max {
        for i in 0..m {
            let mut x = diag[i] * v[i];
            if i > 0 {
                x += offdiag[i - 1] * v[i - 1];
            }
            if i + 1 < m {
                x += offdiag[i] * v[i + 1];
            }
            next[i] = x;
        }
        std::mem::swap(&mut v, &mut next);
        out.push(v[0]);
    }
    out
}

/// Finitely supported probability measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn moment(&self, n: u32) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * x.powi(n as i32)).sum()
    }

    pub fn moments(&self, n_max: usize) -> Vec<f64> {
        (0..=n_max as u32).map(|n| self.moment(n)).collect()
    }
}

/// Recovers the size-`m` Jacobi matrix from the moments `μ_0, μ_1, …`
/// (at least `2m` of them) through the Cholesky factor `R` of the Hankel
/// matrix `[μ_{i+j}]`:
///
/// `a_k = r_{k,k+1}/r_{k,k} − r_{k−1,k}/r_{k−1,k−1}`, `b_k = r_{k+1,k+1}/r_{k,k}`.
///
/// Moments are normalized by `μ_0` first. A pivot below
/// [`HANKEL_PIVOT_TOLERANCE`] at row `k` means the measure has only `k`
/// support points and is reported as [`Error::Degenerate`].
pub fn recurrence_coefficients_from_moments(moments: &[f64], m: usize) -> Result<JacobiMatrix> {
    if m == 0 {
        return Err(Error::Bounds { what: "Jacobi size", value: 0, min: 1, max: usize::MAX });
    }
    if moments.len() < 2 * m {
        return Err(Error::Truncation { what: "moment count", required: 2 * m, available: moments.len() });
    }
    let mu0 = moments[0];
    if !(mu0 > 0.0 && mu0.is_finite()) {
        return Err(Error::Degenerate { order: 0, pivot: mu0 });
    }
    let mu: Vec<f64> = moments[..2 * m].iter().map(|x| x / mu0).collect();
    // Upper-triangular R, rows 0..m, columns 0..=m.
    let mut r = vec![vec![0.0; m + 1]; m];
    for k in 0..m {
        let pivot = mu[2 * k] - (0..k).map(|l| r[l][k] * r[l][k]).sum::<f64>();
        if !(pivot > HANKEL_PIVOT_TOLERANCE) {
            return Err(Error::Degenerate { order: k, pivot });
        }
        r[k][k] = pivot.sqrt();
        for j in k + 1..=m {
            let h = mu[k + j];
            r[k][j] = (h - (0..k).map(|l| r[l][k] * r[l][j]).sum::<f64>()) / r[k][k];
        }
    }
    let diag = (0..m)
        .map(|k| {
            let prev = if k == 0 { 0.0 } else { r[k - 1][k] / r[k - 1][k - 1] };
            r[k][k + 1] / r[k][k] - prev
        })
        .collect();
    let offdiag = (0..m - 1).map(|k| r[k + 1][k + 1] / r[k][k]).collect();
    JacobiMatrix::new(diag, offdiag)
}

pub fn spectral_moments(j: &JacobiMatrix, n_max: usize) -> Result<Vec<f64>> {
    j.spectral_moments(n_max)
}

pub fn polynomial_values(j: &JacobiMatrix, k: usize, x: f64) -> Result<f64> {
    j.polynomial_values(k, x)
}

pub fn discretize_measure(j: &JacobiMatrix) -> Result<DiscreteMeasure> {
    j.discretize_measure()
}

/// `max_{j,k<m} |Σ w p_j p_k − δ_jk|` over the Gauss nodes of `j`.
pub fn orthonormality_residual(j: &JacobiMatrix) -> Result<f64> {
    let measure = j.discretize_measure()?;
    let m = j.size();
    let values: Vec<Vec<f64>> = measure
        .nodes
        .iter()
        .map(|&x| (0..m).map(|k| j.polynomial_values(k, x)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for a in 0..m {
        for b in 0..m {
            let s: f64 = values.iter().zip(&measure.weights).map(|(p, w)| w * p[a] * p[b]).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((s - target).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Gram–Schmidt of monomials against a moment functional, returning the
    /// orthonormal polynomials' coefficient vectors (lowest degree first).
    fn gram_schmidt(moments: &[f64], m: usize) -> Vec<Vec<f64>> {
        let inner = |p: &[f64], q: &[f64]| -> f64 {
            let mut s = 0.0;
            for (i, a) in p.iter().enumerate() {
                for (j, b) in q.iter().enumerate() {
                    s += a * b * moments[i + j];
                }
            }
            s
        };
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for k in 0..m {
            let mut p = vec![0.0; k + 1];
            p[k] = 1.0;
            for q in &basis {
                let c = inner(&p, q);
                for (i, qi) in q.iter().enumerate() {
                    p[i] -= c * qi;
                }
            }
            let norm = inner(&p, &p).sqrt();
            p.iter_mut().for_each(|x| *x /= norm);
            basis.push(p);
        }
        basis
    }

    fn gaussian_moments(n: usize) -> Vec<f64> {
        (0..=n).map(|k| if k % 2 == 1 { 0.0 } else { (1..k).step_by(2).map(|j| j as f64).product() }).collect()
    }

    #[test]
    fn gram_schmidt_oracle_gives_hermite_recurrence() {
        // Read the recurrence off the oracle: b_k = lead(p_k)/lead(p_{k+1}),
        // a_k = ⟨x p_k, p_k⟩.
        let mu = gaussian_moments(12);
        let polys = gram_schmidt(&mu, 5);
        for k in 0..4 {
            let b = polys[k][k] / polys[k + 1][k + 1];
            assert!((b - ((k + 1) as f64).sqrt()).abs() < 1e-12);
        }
        // p_2 = (x² − 1)/√2
        let s2 = 2f64.sqrt();
        assert!((polys[2][0] + 1.0 / s2).abs() < 1e-12 && (polys[2][2] - 1.0 / s2).abs() < 1e-12);

        let j = recurrence_coefficients_from_moments(&mu, 5).unwrap();
        for (k, b) in j.offdiag().iter().enumerate() {
            assert!((b - ((k + 1) as f64).sqrt()).abs() < 1e-12);
        }
        assert!(j.diag().iter().all(|a| a.abs() < 1e-12));
    }

    #[test]
    fn polynomial_examples() {
        let h = JacobiMatrix::hermite(4);
        for x in [-1.3, 0.0, 0.7, 2.0] {
            assert_eq!(h.polynomial_values(0, x).unwrap(), 1.0);
            assert!((h.polynomial_values(1, x).unwrap() - x).abs() < 1e-15);
            assert!((h.polynomial_values(2, x).unwrap() - (x * x - 1.0) / 2f64.sqrt()).abs() < 1e-14);
        }
        assert!(matches!(h.polynomial_values(4, 0.0), Err(Error::Bounds { .. })));
    }

    #[test]
    fn trivial_section() {
        let j = JacobiMatrix::new(vec![0.0], vec![]).unwrap();
        assert_eq!(j.finite_moments(5), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(j.spectral_moments(1).unwrap(), vec![1.0, 0.0]);
        let d = JacobiMatrix::new(vec![2.5], vec![]).unwrap().discretize_measure().unwrap();
        assert_eq!(d.nodes, vec![2.5]);
        assert!((d.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spectral_moment_examples() {
        assert!((JacobiMatrix::hermite(3).spectral_moments(4).unwrap()[4] - 3.0).abs() < 1e-14);
        let c = JacobiMatrix::charlier(1.0, 2).spectral_moments(2).unwrap();
        assert_eq!(c, vec![1.0, 1.0, 2.0]);
        let e = JacobiMatrix::hermite(2).spectral_moments(4).unwrap_err();
        assert_eq!(e, Error::Truncation { what: "Jacobi section size", required: 3, available: 2 });
    }

    #[test]
    fn hermite_two_point_quadrature() {
        let d = JacobiMatrix::hermite(2).discretize_measure().unwrap();
        assert!((d.nodes[0] + 1.0).abs() < 1e-14 && (d.nodes[1] - 1.0).abs() < 1e-14);
        assert!((d.weights[0] - 0.5).abs() < 1e-14 && (d.weights[1] - 0.5).abs() < 1e-14);
        let m = d.moments(3);
        for (a, b) in m.iter().zip([1.0, 0.0, 1.0, 0.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn dirac_moments_give_one_point_measure() {
        let c: f64 = 1.7;
        let mu: Vec<f64> = (0..6).map(|k| c.powi(k)).collect();
        let j = recurrence_coefficients_from_moments(&mu, 1).unwrap();
        assert_eq!(j.size(), 1);
        assert!((j.diag()[0] - c).abs() < 1e-15);
        let e = recurrence_coefficients_from_moments(&mu, 2).unwrap_err();
        assert!(matches!(e, Error::Degenerate { order: 1, .. }), "{e:?}");
    }

    #[test]
    fn constructor_validation() {
        assert!(JacobiMatrix::new(vec![], vec![]).is_err());
        assert!(matches!(JacobiMatrix::new(vec![0.0, 0.0], vec![]), Err(Error::Shape(_))));
        assert!(JacobiMatrix::new(vec![0.0, 0.0], vec![-1.0]).is_err());
        assert!(recurrence_coefficients_from_moments(&[1.0, 0.0, 1.0], 2).is_err());
        assert!(recurrence_coefficients_from_moments(&[0.0, 0.0], 1).is_err());
    }

    #[test]
    fn sign_gauge_leaves_moments_invariant() {
        let diag = [0.3, -0.2, 1.1, 0.4];
        let b = [0.9, 1.3, 0.6];
        let flipped = [-0.9, 1.3, -0.6];
        assert_eq!(tridiagonal_moments(&diag, &b, 9), tridiagonal_moments(&diag, &flipped, 9));
    }

    fn arb_jacobi() -> impl Strategy<Value = JacobiMatrix> {
        (1usize..=7).prop_flat_map(|m| {
            (proptest::collection::vec(-2.0f64..2.0, m), proptest::collection::vec(0.2f64..2.0, m - 1))
                .prop_map(|(a, b)| JacobiMatrix::new(a, b).unwrap())
        })
    }

    proptest! {
        #[test]
        fn orthonormality(j in arb_jacobi()) {
            prop_assert!(orthonormality_residual(&j).unwrap() < 1e-9);
        }

        #[test]
        fn quadrature_reproduces_moments(j in arb_jacobi()) {
            let m = j.size();
            let d = j.discretize_measure().unwrap();
            prop_assert!((d.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let exact = j.spectral_moments(2 * m - 1).unwrap();
            for (n, e) in exact.iter().enumerate() {
                prop_assert!((d.moment(n as u32) - e).abs() < 1e-9 * e.abs().max(1.0));
            }
        }

        #[test]
        fn exactness_window(j in arb_jacobi(), extra_a in -2.0f64..2.0, extra_b in 0.2f64..2.0) {
            let m = j.size();
            let mut diag = j.diag().to_vec();
            let mut off = j.offdiag().to_vec();
            diag.push(extra_a);
            off.push(extra_b);
            let bigger = JacobiMatrix::new(diag, off).unwrap();
            let small = j.spectral_moments(2 * m - 1).unwrap();
            let large = bigger.spectral_moments(2 * m - 1).unwrap();
            for (a, b) in small.iter().zip(&large) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }

        #[test]
        fn moments_coefficients_round_trip(
            atoms in proptest::collection::vec((-1.5f64..1.5, 0.1f64..1.0), 4..8),
            m in 1usize..=3,
        ) {
            let total: f64 = atoms.iter().map(|a| a.1).sum();
            // Reject near-coincident atoms; they make the Hankel matrix singular.
            let mut xs: Vec<f64> = atoms.iter().map(|a| a.0).collect();
            xs.sort_by(f64::total_cmp);
            prop_assume!(xs.windows(2).all(|w| w[1] - w[0] > 0.05));
            let mu: Vec<f64> = (0..2 * m as i32)
                .map(|n| atoms.iter().map(|(x, w)| w / total * x.powi(n)).sum())
                .collect();
            let j = recurrence_coefficients_from_moments(&mu, m).unwrap();
            let back = j.spectral_moments(2 * m - 1).unwrap();
            for (a, b) in back.iter().zip(&mu) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
