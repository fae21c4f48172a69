//! Matrix exponential, eigendecompositions and the PSD logarithm.

use nalgebra::linalg::{Schur, SymmetricEigen};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::matrix::{vec_norm, ComplexMatrix};
use super::{NumericsError, Tolerances};

const SCHUR_MAX_ITER: usize = 10_000;

fn schur(a: &ComplexMatrix) -> Result<(DMatrix<C64>, DMatrix<C64>), NumericsError> {
    let s = Schur::try_new(a.to_nalgebra(), f64::EPSILON, SCHUR_MAX_ITER).ok_or(NumericsError::NoConvergence)?;
    Ok(s.unpack())
}

fn commutes_with_adjoint(a: &ComplexMatrix, tol: f64) -> bool {
    let ad = a.adjoint();
    let defect = (&(a * &ad) - &(&ad * a)).norm();
    defect <= tol * a.norm().powi(2).max(1.0)
}

/// Matrix exponential.
///
/// Normal inputs go through the unitary Schur basis; everything else through
/// degree-13 Padé with scaling and squaring.
pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
    let n = a.require_square()?;
    if n == 0 {
        return Ok(a.clone());
    }
    if commutes_with_adjoint(a, Tolerances::default().normal) {
        let (q, t) = schur(a)?;
        let q = ComplexMatrix::from_nalgebra(&q);
        let phases: Vec<C64> = (0..n).map(|i| t[(i, i)].exp()).collect();
        let d = ComplexMatrix::from_diag(&phases);
        return Ok(&(&q * &d) * &q.adjoint());
    }
    expm_pade13(a)
}

fn one_norm(a: &ComplexMatrix) -> f64 {
    (0..a.cols())
        .map(|j| (0..a.rows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn expm_pade13(a: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
    let n = a.rows();
    let norm = one_norm(a);
    let squarings = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a.scale_real(2f64.powi(-squarings));
    let b = &PADE13;
    let id = ComplexMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| {
        let mut m = a6.scale_real(c6);
        m += &a4.scale_real(c4);
        m += &a2.scale_real(c2);
        m += &id.scale_real(c0);
        m
    };
    let u_inner = &a6 * &(a6.scale_real(b[13]) + a4.scale_real(b[11]) + a2.scale_real(b[9]));
    let u = &a * &(u_inner + lin(b[7], b[5], b[3], b[1]));
    let v_inner = &a6 * &(a6.scale_real(b[12]) + a4.scale_real(b[10]) + a2.scale_real(b[8]));
    let v = v_inner + lin(b[6], b[4], b[2], b[0]);
    let p = (&v + &u).to_nalgebra();
    let q = (&v - &u).to_nalgebra();
    let r = q.lu().solve(&p).ok_or(NumericsError::NoConvergence)?;
    let mut r = ComplexMatrix::from_nalgebra(&r);
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// Eigenvalues from the complex Schur form, in Schur order.
pub fn eigenvalues(a: &ComplexMatrix) -> Result<Vec<C64>, NumericsError> {
    let n = a.require_square()?;
    let (_, t) = schur(a)?;
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// A diagonalizing eigendecomposition `a = V diag(values) W` with `W = V⁻¹`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<C64>,
    /// Right eigenvectors as unit-norm columns.
    pub right: ComplexMatrix,
    /// Left eigenvectors as rows, biorthogonal to `right`.
    pub left: ComplexMatrix,
    /// `‖V‖·‖V⁻¹‖` in the spectral norm.
    pub condition: f64,
}

impl Eigen {
    pub fn right_vector(&self, k: usize) -> Vec<C64> {
        self.right.column(k)
    }

    pub fn left_vector(&self, k: usize) -> Vec<C64> {
        self.left.row(k).to_vec()
    }

    /// `Σ_k λ_k |v_k⟩⟨w_k|`
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = ComplexMatrix::from_diag(&self.values);
        &(&self.right * &d) * &self.left
    }
}

/// Eigendecomposition with default tolerances; see [`eig_with`].
pub fn eig(a: &ComplexMatrix) -> Result<Eigen, NumericsError> {
    eig_with(a, &Tolerances::default())
}

/// Eigendecomposition of a diagonalizable matrix.
///
/// Returns [`NumericsError::Defective`] when the eigenvector basis is too ill
/// conditioned or an eigenpair residual exceeds `tol.eig_residual·‖a‖`.
pub fn eig_with(a: &ComplexMatrix, tol: &Tolerances) -> Result<Eigen, NumericsError> {
    let n = a.require_square()?;
    let (q, t) = schur(a)?;
    let q = ComplexMatrix::from_nalgebra(&q);
    let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let t_norm = t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let smin = (f64::EPSILON * t_norm).max(f64::MIN_POSITIVE);

    // Back substitution on the triangular factor, one eigenvector per column.
    let mut y = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = values[k];
        y[(k, k)] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let s: C64 = (j + 1..=k).map(|l| t[(j, l)] * y[(l, k)]).sum();
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < smin {
                denom = C64::new(smin, 0.0);
            }
            y[(j, k)] = -s / denom;
        }
    }
    let mut right = &q * &y;
    for k in 0..n {
        let col = right.column(k);
        let nrm = vec_norm(&col);
        for i in 0..n {
            right[(i, k)] = col[i] / nrm;
        }
    }
    let left = right.inverse().ok_or(NumericsError::Defective { condition: f64::INFINITY })?;
    let condition = right.op_norm() * left.op_norm();
    if !condition.is_finite() || condition > tol.defective_condition {
        return Err(NumericsError::Defective { condition });
    }
    let scale = a.op_norm().max(f64::MIN_POSITIVE);
    for (k, &z) in values.iter().enumerate() {
        let v = right.column(k);
        let av = a.matvec(&v);
        let r: f64 = av.iter().zip(&v).map(|(x, y)| (x - z * y).norm_sqr()).sum::<f64>().sqrt();
        let w = left.row(k);
        let wa: Vec<C64> = (0..n).map(|j| (0..n).map(|i| w[i] * a[(i, j)]).sum()).collect();
        let lr: f64 = wa.iter().zip(w).map(|(x, y)| (x - z * y).norm_sqr()).sum::<f64>().sqrt();
        if r > tol.eig_residual * scale || lr > tol.eig_residual * scale * vec_norm(w) {
            return Err(NumericsError::Defective { condition });
        }
    }
    Ok(Eigen { values, right, left, condition })
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V f(Λ) V†`
    pub fn apply(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.values.len();
        let fv: Vec<C64> = self.values.iter().map(|&x| f(x)).collect();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, n, |i, j| (0..n).map(|k| v[(i, k)] * fv[k] * v[(j, k)].conj()).sum())
    }

    /// `exp(i t H)`
    pub fn exp_i(&self, t: f64) -> ComplexMatrix {
        self.apply(|x| C64::from_polar(1.0, t * x))
    }
}

/// Hermitian eigendecomposition; rejects inputs further than `1e-10·max(1,‖a‖)` from Hermitian.
pub fn eigh(a: &ComplexMatrix) -> Result<HermitianEigen, NumericsError> {
    let n = a.require_square()?;
    let defect = a.hermiticity_defect();
    if defect > Tolerances::default().hermitian * a.max_abs().max(1.0) {
        return Err(NumericsError::NotHermitian { defect });
    }
    if n == 0 {
        return Ok(HermitianEigen { values: vec![], vectors: a.clone() });
    }
    let se = SymmetricEigen::try_new(a.hermitian_part().to_nalgebra(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or(NumericsError::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| se.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Spectral logarithm of a positive semidefinite matrix, with eigenvalues
/// below `floor` clamped to `log(floor)`.
pub fn logm_psd(rho: &ComplexMatrix, floor: f64) -> Result<ComplexMatrix, NumericsError> {
    let e = eigh(rho)?;
    if let Some(&min) = e.values.first() {
        if min < -Tolerances::default().psd_negative {
            return Err(NumericsError::NegativeEigenvalue { value: min });
        }
    }
    let out = e.apply(|x| C64::new(x.max(floor).ln(), 0.0));
    Ok(out.hermitian_part())
}
