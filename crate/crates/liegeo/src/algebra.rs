//! The real Lie algebra so(n) in the wedge basis, together with the group
//! SO(n) it exponentiates to.
//!
//! Matrix convention: `(e_i ∧ e_j)_{ab} = δ_ia δ_jb − δ_ib δ_ja`, so the
//! matrix of `Σ_{i<j} x_ij e_ij` carries `x_ij` at entry `(i, j)` and
//! `−x_ij` at `(j, i)`. With the scalar product `⟨X, Y⟩ = −(1/2) tr(XY)`
//! the wedge basis is orthonormal, which makes coefficient vectors and
//! abstract algebra elements interchangeable.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Default tolerance on `‖gᵀg − Id‖_F` for group elements.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;

/// The wedge basis `{e_ij | 1 ≤ i < j ≤ n}` of so(n), with the flat index
/// running lexicographically over the pairs `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SoBasis {
    n: usize,
}

impl SoBasis {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "so(n) needs n >= 2");
        SoBasis { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `dim so(n) = n(n−1)/2`.
    pub fn dim(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    /// Flat index of the pair `(i, j)`, 1-based, `i < j`.
    pub fn flat(&self, i: usize, j: usize) -> usize {
        assert!(1 <= i && i < j && j <= self.n, "bad wedge index ({i},{j})");
        // pairs (1,2..n), (2,3..n), ... precede row i
        (i - 1) * self.n - (i - 1) * i / 2 + (j - i - 1)
    }

    /// Inverse of [`flat`](Self::flat).
    pub fn pair(&self, mut k: usize) -> (usize, usize) {
        assert!(k < self.dim());
        for i in 1..self.n {
            let row = self.n - i;
            if k < row {
                return (i, i + 1 + k);
            }
            k -= row;
        }
        unreachable!()
    }

    /// The basis element `e_i ∧ e_j`.
    pub fn element(&self, i: usize, j: usize) -> AlgebraElement {
        let mut coeffs = DVector::zeros(self.dim());
        coeffs[self.flat(i, j)] = 1.0;
        AlgebraElement { n: self.n, coeffs }
    }

    /// All basis elements in flat order.
    pub fn elements(&self) -> Vec<AlgebraElement> {
        (0..self.dim())
            .map(|k| {
                let (i, j) = self.pair(k);
                self.element(i, j)
            })
            .collect()
    }

    /// Human-readable name of flat coordinate `k`, e.g. `x_12`.
    pub fn coord_name(&self, k: usize) -> String {
        let (i, j) = self.pair(k);
        format!("x_{i}{j}")
    }
}

/// An element of so(n): a coefficient vector in the wedge basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    n: usize,
    coeffs: DVector<f64>,
}

impl AlgebraElement {
    pub fn zero(n: usize) -> Self {
        AlgebraElement {
            n,
            coeffs: DVector::zeros(n * (n - 1) / 2),
        }
    }

    pub fn from_coeffs(n: usize, coeffs: DVector<f64>) -> Result<Self> {
        let d = n * (n - 1) / 2;
        if coeffs.len() != d {
            return Err(Error::DimensionMismatch(coeffs.len(), d));
        }
        Ok(AlgebraElement { n, coeffs })
    }

    /// Reads the upper triangle of a skew-symmetric matrix.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::DimensionMismatch(m.nrows(), m.ncols()));
        }
        let basis = SoBasis::new(n);
        let mut coeffs = DVector::zeros(basis.dim());
        for k in 0..basis.dim() {
            let (i, j) = basis.pair(k);
            coeffs[k] = m[(i - 1, j - 1)];
        }
        Ok(AlgebraElement { n, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> SoBasis {
        SoBasis::new(self.n)
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut DVector<f64> {
        &mut self.coeffs
    }

    /// Coefficient of `e_ij`, 1-based pair.
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.coeffs[self.basis().flat(i, j)]
    }

    pub fn set_coeff(&mut self, i: usize, j: usize, v: f64) {
        let k = self.basis().flat(i, j);
        self.coeffs[k] = v;
    }

    /// The skew-symmetric matrix `Σ_{i<j} x_ij (e_i ∧ e_j)`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let basis = self.basis();
        let mut m = DMatrix::zeros(self.n, self.n);
        for k in 0..basis.dim() {
            let (i, j) = basis.pair(k);
            m[(i - 1, j - 1)] = self.coeffs[k];
            m[(j - 1, i - 1)] = -self.coeffs[k];
        }
        m
    }

    /// Norm induced by the invariant scalar product.
    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    pub fn scale(&self, c: f64) -> Self {
        AlgebraElement {
            n: self.n,
            coeffs: &self.coeffs * c,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        AlgebraElement {
            n: self.n,
            coeffs: &self.coeffs + &other.coeffs,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        AlgebraElement {
            n: self.n,
            coeffs: &self.coeffs - &other.coeffs,
        }
    }

    /// Matrix of `Y ↦ [X, Y]` in the wedge basis, a `d × d` matrix.
    pub fn ad_matrix(&self) -> DMatrix<f64> {
        let basis = self.basis();
        let d = basis.dim();
        let xm = self.matrix();
        let mut out = DMatrix::zeros(d, d);
        for k in 0..d {
            let (i, j) = basis.pair(k);
            let em = basis.element(i, j).matrix();
            let br = &xm * &em - &em * &xm;
            let col = AlgebraElement::from_matrix(&br).expect("square");
            out.set_column(k, &col.coeffs);
        }
        out
    }
}

/// `[X, Y] = XY − YX`.
pub fn bracket(x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
    if x.n != y.n {
        return Err(Error::DimensionMismatch(x.n, y.n));
    }
    let (xm, ym) = (x.matrix(), y.matrix());
    AlgebraElement::from_matrix(&(&xm * &ym - &ym * &xm))
}

/// Invariant scalar product `−(1/2) tr(XY)`; the wedge basis is orthonormal,
/// so this is the plain dot product of coefficient vectors.
pub fn inner(x: &AlgebraElement, y: &AlgebraElement) -> Result<f64> {
    if x.n != y.n {
        return Err(Error::DimensionMismatch(x.n, y.n));
    }
    Ok(x.coeffs.dot(&y.coeffs))
}

/// An element of SO(n).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    mat: DMatrix<f64>,
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        GroupElement {
            mat: DMatrix::identity(n, n),
        }
    }

    /// Validates orthogonality against [`ORTHOGONALITY_TOL`].
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        Self::from_matrix_tol(m, ORTHOGONALITY_TOL)
    }

    pub fn from_matrix_tol(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::DimensionMismatch(m.nrows(), m.ncols()));
        }
        let defect = (m.transpose() * &m - DMatrix::identity(n, n)).norm();
        if defect > tol {
            return Err(Error::InvalidParameters(format!(
                "matrix is not orthogonal (defect {defect:.3e})"
            )));
        }
        if m.determinant() < 0.0 {
            return Err(Error::InvalidParameters(
                "matrix has determinant -1, not in SO(n)".into(),
            ));
        }
        Ok(GroupElement { mat: m })
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement {
            mat: &self.mat * &other.mat,
        }
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            mat: self.mat.transpose(),
        }
    }

    /// `‖gᵀg − Id‖_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.n();
        (self.mat.transpose() * &self.mat - DMatrix::identity(n, n)).norm()
    }

    /// `Ad_g X = g X g⁻¹`.
    pub fn adjoint(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        if self.n() != x.n() {
            return Err(Error::DimensionMismatch(self.n(), x.n()));
        }
        let m = &self.mat * x.matrix() * self.mat.transpose();
        AlgebraElement::from_matrix(&m)
    }
}

/// Nearest orthogonal matrix in Frobenius norm (polar factor via SVD).
pub fn polar_project(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

/// Matrix exponential of a skew-symmetric element; lands in SO(n).
///
/// Scaling-and-squaring behind `nalgebra`, with a polar re-projection if the
/// orthogonality defect exceeds 1e-12.
pub fn expm(x: &AlgebraElement) -> GroupElement {
    let mut m = x.matrix().exp();
    let n = x.n();
    let defect = (m.transpose() * &m - DMatrix::identity(n, n)).norm();
    if defect > 1e-12 {
        m = polar_project(&m);
    }
    GroupElement { mat: m }
}
