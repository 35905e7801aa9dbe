//! Dense symmetric matrices and the spectral kernels the solvers are built on.
//!
//! Storage and Cholesky factorizations come from `nalgebra`, the symmetric
//! eigensolver from `faer`; this module owns the symmetric container and the two spectral-box
//! subproblems used by the primal smoothing method.

use std::ops::{Add, Index, Mul, Sub};

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative asymmetry tolerated (and repaired) at construction.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Dense real symmetric `n x n` matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    inner: DMatrix<f64>,
}

impl SymMatrix {
    /// Builds a matrix from `n * n` row-major values.
    ///
    /// Entries must be finite. Asymmetry up to [`SYMMETRY_TOL`] relative to the
    /// largest entry is averaged away; anything larger is rejected.
    pub fn from_row_major(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: values.len(),
            });
        }
        Self::from_dmatrix(DMatrix::from_row_slice(n, n, &values))
    }

    pub fn from_dmatrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let scale = m.amax();
        let asymmetry = max_asymmetry(&m);
        let tolerance = SYMMETRY_TOL * scale;
        if asymmetry > tolerance {
            return Err(Error::Asymmetric {
                asymmetry,
                tolerance,
            });
        }
        Ok(Self::symmetrized(m))
    }

    /// Averages `m` with its transpose. Used for results that are symmetric
    /// up to round-off by construction.
    pub(crate) fn symmetrized(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        Self { inner: m }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            inner: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        Self::from_diagonal(&vec![c; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self {
            inner: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.inner.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    /// Writes `v` at `(i, j)` and `(j, i)`.
    pub(crate) fn set_pair(&mut self, i: usize, j: usize, v: f64) {
        self.inner[(i, j)] = v;
        self.inner[(j, i)] = v;
    }

    pub(crate) fn add_to_diagonal(&mut self, c: f64) {
        for i in 0..self.n() {
            self.inner[(i, i)] += c;
        }
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.inner
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.inner.diagonal().iter().copied().collect()
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    /// Trace inner product `<A, B> = tr(A B)`.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.inner.dot(&other.inner)
    }

    /// Sum of absolute values of all entries, diagonal included.
    pub fn l1_norm(&self) -> f64 {
        self.inner.iter().map(|v| v.abs()).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.inner.amax()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    /// Applies `f` entrywise. `f` must preserve symmetry, which any scalar map does.
    pub fn map(&self, f: impl FnMut(f64) -> f64) -> SymMatrix {
        SymMatrix {
            inner: self.inner.map(f),
        }
    }

    /// `a * x + b * y`
    pub fn lin_comb(a: f64, x: &SymMatrix, b: f64, y: &SymMatrix) -> SymMatrix {
        SymMatrix {
            inner: &x.inner * a + &y.inner * b,
        }
    }

    /// Entrywise maximum absolute difference.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.inner
            .iter()
            .zip(other.inner.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.inner[idx]
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;

    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;

    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix {
            inner: &self.inner - &rhs.inner,
        }
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;

    fn mul(self, rhs: f64) -> SymMatrix {
        SymMatrix {
            inner: &self.inner * rhs,
        }
    }
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored column-wise.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigenDecomposition {
    /// Rebuilds `V diag(f(lambda)) V^T`.
    pub fn recompose_with(&self, mut f: impl FnMut(f64) -> f64) -> SymMatrix {
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.recompose_from(&mapped)
    }

    /// Rebuilds `V diag(values) V^T` for caller-supplied spectral values.
    pub fn recompose_from(&self, values: &[f64]) -> SymMatrix {
        debug_assert_eq!(values.len(), self.eigenvalues.len());
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &d) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(d);
        }
        SymMatrix::symmetrized(scaled * v.transpose())
    }

    pub fn recompose(&self) -> SymMatrix {
        self.recompose_from(&self.eigenvalues)
    }
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
pub fn sym_eig(m: &SymMatrix) -> Result<EigenDecomposition> {
    let n = m.n();
    if n == 1 {
        return Ok(EigenDecomposition {
            eigenvalues: vec![m.get(0, 0)],
            eigenvectors: DMatrix::identity(1, 1),
        });
    }
    let a = faer::Mat::<f64>::from_fn(n, n, |i, j| m.get(i, j));
    let eig = a.selfadjoint_eigendecomposition(faer::Side::Lower);
    let (s, u) = (eig.s().column_vector(), eig.u());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s.read(a).total_cmp(&s.read(b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| s.read(k)).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, j| u.read(i, order[j]));
    if eigenvalues.iter().chain(eigenvectors.iter()).any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure { n });
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn cholesky(m: &SymMatrix) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    Cholesky::new(m.inner.clone()).ok_or(Error::NotPositiveDefinite)
}

/// `log det M` through a Cholesky factorization.
pub fn chol_logdet(m: &SymMatrix) -> Result<f64> {
    let chol = cholesky(m)?;
    let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    if logdet.is_finite() {
        Ok(logdet)
    } else {
        Err(Error::NotPositiveDefinite)
    }
}

/// Inverse of a positive definite matrix, symmetrized.
pub fn inverse_spd(m: &SymMatrix) -> Result<SymMatrix> {
    let inv = cholesky(m)?.inverse();
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(SymMatrix::symmetrized(inv))
}

/// Both `log det M` and `M^-1` from a single factorization.
pub fn logdet_and_inverse(m: &SymMatrix) -> Result<(f64, SymMatrix)> {
    let chol = cholesky(m)?;
    let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let inv = chol.inverse();
    if !logdet.is_finite() || inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok((logdet, SymMatrix::symmetrized(inv)))
}

/// Largest eigenvalue magnitude.
pub fn spectral_norm(m: &SymMatrix) -> Result<f64> {
    let eig = sym_eig(m)?;
    Ok(eig.eigenvalues.iter().fold(0.0f64, |acc, l| acc.max(l.abs())))
}

fn check_bounds(alpha: f64, beta: f64) -> Result<()> {
    if alpha.is_nan() || beta.is_nan() || alpha < 0.0 || alpha >= beta {
        return Err(Error::InvalidBounds { alpha, beta });
    }
    Ok(())
}

/// Frobenius projection onto `{X : alpha I <= X <= beta I}`.
///
/// Eigenvalues are clamped to `[alpha, beta]`. Inputs already inside the box
/// are returned unchanged.
pub fn proj_spectral_box(m: &SymMatrix, alpha: f64, beta: f64) -> Result<SymMatrix> {
    check_bounds(alpha, beta)?;
    let eig = sym_eig(m)?;
    if eig.eigenvalues.iter().all(|&l| l >= alpha && l <= beta) {
        return Ok(m.clone());
    }
    Ok(eig.recompose_with(|l| l.clamp(alpha, beta)))
}

/// Minimizes `-c log det X + <W, X>` over the spectral box `[alpha, beta]`.
///
/// The minimizer shares eigenvectors with `W`; each eigenvalue `w` maps to
/// `clamp(c / w, alpha, beta)` when `w > 0` and to `beta` otherwise.
pub fn logdet_linear_min(w: &SymMatrix, c: f64, alpha: f64, beta: f64) -> Result<SymMatrix> {
    check_bounds(alpha, beta)?;
    if !beta.is_finite() {
        return Err(Error::InfiniteBounds { beta });
    }
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::NonFiniteInput);
    }
    let eig = sym_eig(w)?;
    Ok(eig.recompose_with(|wi| scalar_logdet_linear_min(wi, c, alpha, beta)))
}

#[inline]
pub(crate) fn scalar_logdet_linear_min(w: f64, c: f64, alpha: f64, beta: f64) -> f64 {
    if w > 0.0 {
        (c / w).clamp(alpha, beta)
    } else {
        beta
    }
}


#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn construction_symmetrizes_roundoff_and_rejects_asymmetry() {
        let m = SymMatrix::from_row_major(2, vec![1.0, 0.5, 0.5 + 1e-14, 1.0]).unwrap();
        assert_eq!(m.get(0, 1), m.get(1, 0));
        let err = SymMatrix::from_row_major(2, vec![1.0, 0.5, 0.6, 1.0]).unwrap_err();
        assert!(matches!(err, Error::Asymmetric { .. }));
        let err = SymMatrix::from_row_major(2, vec![1.0, f64::NAN, f64::NAN, 1.0]).unwrap_err();
        assert_eq!(err, Error::NonFiniteInput);
        let err = SymMatrix::from_row_major(2, vec![1.0; 3]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let eig = sym_eig(&SymMatrix::identity(3)).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 1.0, 1.0]);
        let eig = sym_eig(&SymMatrix::from_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn eig_reconstructs_random_symmetric() {
        let mut rng = rng(11);
        for n in [2, 5, 9] {
            let m = random_symmetric(&mut rng, n);
            let eig = sym_eig(&m).unwrap();
            let rebuilt = eig.recompose();
            let residual = (&rebuilt - &m).frobenius_norm();
            assert!(residual <= 1e-10 * m.frobenius_norm(), "n={n} residual={residual}");
            let v = &eig.eigenvectors;
            let ortho = (v.transpose() * v - DMatrix::identity(n, n)).norm();
            assert!(ortho <= 1e-10 * (n as f64).sqrt(), "n={n} ortho={ortho}");
            assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn logdet_known_values() {
        assert_eq!(chol_logdet(&SymMatrix::identity(4)).unwrap(), 0.0);
        let v = chol_logdet(&SymMatrix::from_diagonal(&[2.0, 3.0])).unwrap();
        assert!((v - 6f64.ln()).abs() < 1e-15);
        let indefinite = SymMatrix::from_diagonal(&[1.0, -1.0]);
        assert_eq!(chol_logdet(&indefinite), Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn logdet_matches_spectrum() {
        let mut rng = rng(3);
        for n in [1, 6, 20, 50] {
            let m = random_spd(&mut rng, n, 0.5);
            let spectral: f64 = sym_eig(&m).unwrap().eigenvalues.iter().map(|l| l.ln()).sum();
            let chol = chol_logdet(&m).unwrap();
            assert!(
                (chol - spectral).abs() <= 1e-9 * spectral.abs().max(1.0),
                "n={n}: {chol} vs {spectral}"
            );
        }
    }

    #[test]
    fn inverse_known_and_residual() {
        let inv = inverse_spd(&SymMatrix::from_diagonal(&[2.0, 4.0])).unwrap();
        assert!(inv.max_abs_diff(&SymMatrix::from_diagonal(&[0.5, 0.25])) < 1e-15);
        assert_eq!(inverse_spd(&SymMatrix::identity(3)).unwrap(), SymMatrix::identity(3));

        let mut rng = rng(5);
        let m = random_spd(&mut rng, 5, 0.1);
        let inv = inverse_spd(&m).unwrap();
        let residual = (m.as_dmatrix() * inv.as_dmatrix() - DMatrix::identity(5, 5)).norm();
        assert!(residual <= 1e-8 * 5f64.sqrt());
        assert_eq!(
            inverse_spd(&SymMatrix::from_diagonal(&[1.0, 0.0])),
            Err(Error::NotPositiveDefinite)
        );
    }

    #[test]
    fn logdet_and_inverse_agree_with_separate_calls() {
        let mut rng = rng(8);
        let m = random_spd(&mut rng, 7, 0.2);
        let (ld, inv) = logdet_and_inverse(&m).unwrap();
        assert_eq!(ld, chol_logdet(&m).unwrap());
        assert_eq!(inv, inverse_spd(&m).unwrap());
    }

    #[test]
    fn spectral_norm_cases() {
        assert_eq!(spectral_norm(&SymMatrix::from_diagonal(&[-3.0, 2.0])).unwrap(), 3.0);
        assert_eq!(spectral_norm(&SymMatrix::identity(4)).unwrap(), 1.0);
        let mut rng = rng(9);
        let m = random_symmetric(&mut rng, 6);
        let eig = sym_eig(&m).unwrap();
        let expected = eig.eigenvalues[0].abs().max(eig.eigenvalues[5].abs());
        assert_eq!(spectral_norm(&m).unwrap(), expected);
    }

    #[test]
    fn projection_clamps_diagonal_and_keeps_interior() {
        let p = proj_spectral_box(&SymMatrix::from_diagonal(&[0.1, 5.0]), 1.0, 2.0).unwrap();
        assert!(p.max_abs_diff(&SymMatrix::from_diagonal(&[1.0, 2.0])) < 1e-15);

        let mut rng = rng(2);
        let inside = random_in_box(&mut rng, 4, 1.2, 1.8);
        assert_eq!(proj_spectral_box(&inside, 1.0, 2.0).unwrap(), inside);

        assert!(matches!(
            proj_spectral_box(&inside, 2.0, 1.0),
            Err(Error::InvalidBounds { .. })
        ));
    }

    #[test]
    fn projection_is_nearest_point_among_random_feasible() {
        // Variational characterization: <M - P, Y - P> <= 0 for every Y in the box,
        // and no sampled feasible point is closer to M.
        let mut rng = rng(21);
        let (alpha, beta) = (0.5, 1.5);
        for _ in 0..5 {
            let m = &random_symmetric(&mut rng, 4) * 2.0;
            let p = proj_spectral_box(&m, alpha, beta).unwrap();
            let dist = (&m - &p).frobenius_norm();
            for _ in 0..2000 {
                let y = random_in_box(&mut rng, 4, alpha, beta);
                assert!((&m - &y).frobenius_norm() >= dist - 1e-12);
                assert!((&m - &p).dot(&(&y - &p)) <= 1e-10);
            }
        }
    }

    #[test]
    fn logdet_linear_min_closed_forms() {
        let c = 0.7;
        let z = logdet_linear_min(&SymMatrix::scaled_identity(3, c), c, 0.5, 2.0).unwrap();
        assert!(z.max_abs_diff(&SymMatrix::identity(3)) < 1e-15);

        let w = SymMatrix::from_diagonal(&[-1.0, 4.0 * c]);
        let z = logdet_linear_min(&w, c, 0.5, 2.0).unwrap();
        assert!(z.max_abs_diff(&SymMatrix::from_diagonal(&[2.0, 0.5])) < 1e-15);

        let z = logdet_linear_min(&SymMatrix::zeros(2), 1.0, 0.5, 2.0).unwrap();
        assert!(z.max_abs_diff(&SymMatrix::scaled_identity(2, 2.0)) < 1e-15);

        assert!(logdet_linear_min(&w, c, 0.5, f64::INFINITY).is_err());
        assert!(logdet_linear_min(&w, 0.0, 0.5, 2.0).is_err());
    }

    fn logdet_linear_objective(w: &SymMatrix, c: f64, x: &SymMatrix) -> f64 {
        -c * chol_logdet(x).unwrap() + w.dot(x)
    }

    #[test]
    fn logdet_linear_min_beats_random_feasible_points() {
        let mut rng = rng(33);
        let (alpha, beta) = (0.2, 3.0);
        for _ in 0..3 {
            let w = random_symmetric(&mut rng, 4);
            let z = logdet_linear_min(&w, 1.0, alpha, beta).unwrap();
            let best = logdet_linear_objective(&w, 1.0, &z);
            let center = SymMatrix::scaled_identity(4, 0.5 * (alpha + beta));
            assert!(best <= logdet_linear_objective(&w, 1.0, &center));
            for _ in 0..1000 {
                let x = random_in_box(&mut rng, 4, alpha, beta);
                assert!(best <= logdet_linear_objective(&w, 1.0, &x) + 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn projection_idempotent_and_nonexpansive(seed in any::<u64>(), n in 1usize..6) {
            let mut rng = rng(seed);
            let a = &random_symmetric(&mut rng, n) * 3.0;
            let b = &random_symmetric(&mut rng, n) * 3.0;
            let pa = proj_spectral_box(&a, 0.3, 1.7).unwrap();
            let pb = proj_spectral_box(&b, 0.3, 1.7).unwrap();
            let again = proj_spectral_box(&pa, 0.3, 1.7).unwrap();
            prop_assert!(again.max_abs_diff(&pa) <= 1e-12, "diff {}", again.max_abs_diff(&pa));
            prop_assert!((&pa - &pb).frobenius_norm() <= (&a - &b).frobenius_norm() + 1e-12);
            let spectrum = sym_eig(&pa).unwrap().eigenvalues;
            prop_assert!(spectrum.iter().all(|&l| (0.3 - 1e-12..=1.7 + 1e-12).contains(&l)));
        }

        #[test]
        fn logdet_linear_min_stays_in_box(seed in any::<u64>(), n in 1usize..6, c in 0.01f64..10.0) {
            let mut rng = rng(seed);
            let w = &random_symmetric(&mut rng, n) * 5.0;
            let z = logdet_linear_min(&w, c, 0.25, 4.0).unwrap();
            let spectrum = sym_eig(&z).unwrap().eigenvalues;
            prop_assert!(spectrum.iter().all(|&l| (0.25 - 1e-12..=4.0 + 1e-12).contains(&l)));
            let center = SymMatrix::scaled_identity(n, 2.125);
            prop_assert!(
                logdet_linear_objective(&w, c, &z) <= logdet_linear_objective(&w, c, &center) + 1e-12
            );
        }
    }
}
