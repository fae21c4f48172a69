//! Tensor products, local operator application and partial traces.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, ZERO};
use super::NumericsError;

/// Per-factor dimensions of a tensor-product space, most significant first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FactorShape {
    dims: Vec<usize>,
}

impl FactorShape {
    pub fn new(dims: Vec<usize>) -> Result<Self, NumericsError> {
        if dims.contains(&0) {
            return Err(NumericsError::DimensionMismatch(format!("zero factor dimension in {dims:?}")));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_factors(&self) -> usize {
        self.dims.len()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Row-major strides, `stride[i] = Π_{j>i} dims[j]`.
    pub fn strides(&self) -> Vec<usize> {
        strides(&self.dims)
    }

    fn check_targets(&self, targets: &[usize]) -> Result<usize, NumericsError> {
        for (i, &t) in targets.iter().enumerate() {
            if t >= self.dims.len() {
                return Err(NumericsError::DimensionMismatch(format!(
                    "target factor {t} out of range for {} factors",
                    self.dims.len()
                )));
            }
            if targets[..i].contains(&t) {
                return Err(NumericsError::DimensionMismatch(format!("repeated target factor {t}")));
            }
        }
        Ok(targets.iter().map(|&t| self.dims[t]).product())
    }
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca, rb, cb) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = vec![ZERO; ra * rb * ca * cb];
    let cols = ca * cb;
    for ia in 0..ra {
        for ja in 0..ca {
            let x = a[(ia, ja)];
            if x == ZERO {
                continue;
            }
            for ib in 0..rb {
                let row = ia * rb + ib;
                for jb in 0..cb {
                    out[row * cols + ja * cb + jb] = x * b[(ib, jb)];
                }
            }
        }
    }
    ComplexMatrix::from_raw(ra * rb, cols, out)
}

/// Left-folded Kronecker product of a list; empty lists give the 1×1 identity.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

pub fn kron_vec(u: &[C64], v: &[C64]) -> Vec<C64> {
    u.iter().flat_map(|&a| v.iter().map(move |&b| a * b)).collect()
}

/// Dense embedding of `op` acting on `targets` into the full space of `shape`.
///
/// Quadratic in the ambient dimension; intended for small spaces and checks.
pub fn embed(op: &ComplexMatrix, shape: &FactorShape, targets: &[usize]) -> Result<ComplexMatrix, NumericsError> {
    let k = shape.check_targets(targets)?;
    check_op(op, k)?;
    let n = shape.total();
    let dims = shape.dims();
    let st = shape.strides();
    let digit = |idx: usize, f: usize| (idx / st[f]) % dims[f];
    let local = |idx: usize| targets.iter().fold(0, |acc, &t| acc * dims[t] + digit(idx, t));
    let rest_equal = |r: usize, c: usize| {
        (0..dims.len()).filter(|f| !targets.contains(f)).all(|f| digit(r, f) == digit(c, f))
    };
    Ok(ComplexMatrix::from_fn(n, n, |r, c| if rest_equal(r, c) { op[(local(r), local(c))] } else { ZERO }))
}

fn check_op(op: &ComplexMatrix, k: usize) -> Result<(), NumericsError> {
    if op.rows() != k || op.cols() != k {
        return Err(NumericsError::DimensionMismatch(format!(
            "local operator is {}x{}, target space has dimension {k}",
            op.rows(),
            op.cols()
        )));
    }
    Ok(())
}

/// In-place application of `op` to the factors `targets` of a flat array with
/// factor dimensions `dims`. Targets must be distinct and in range.
pub(crate) fn apply_local_inplace(data: &mut [C64], dims: &[usize], targets: &[usize], op: &ComplexMatrix) {
    let st = strides(dims);
    let tdims: Vec<usize> = targets.iter().map(|&t| dims[t]).collect();
    let k: usize = tdims.iter().product();
    debug_assert_eq!(op.rows(), k);

    // Offsets of the local basis states, row-major over the target order.
    let mut offs = vec![0usize; k];
    for (i, off) in offs.iter_mut().enumerate() {
        let mut rem = i;
        for (j, &t) in targets.iter().enumerate().rev() {
            *off += (rem % tdims[j]) * st[t];
            rem /= tdims[j];
        }
    }

    let rest: Vec<usize> = (0..dims.len()).filter(|f| !targets.contains(f)).collect();
    let rest_dims: Vec<usize> = rest.iter().map(|&f| dims[f]).collect();
    let n_rest: usize = rest_dims.iter().product();
    let opd = op.as_slice();

    let mut counter = vec![0usize; rest.len()];
    let mut base = 0usize;
    let mut buf = vec![ZERO; k];
    for _ in 0..n_rest {
        for (b, &o) in buf.iter_mut().zip(&offs) {
            *b = data[base + o];
        }
        for (i, &o) in offs.iter().enumerate() {
            let row = &opd[i * k..(i + 1) * k];
            data[base + o] = row.iter().zip(&buf).map(|(a, b)| a * b).sum();
        }
        // odometer over the untouched factors
        for j in (0..rest.len()).rev() {
            counter[j] += 1;
            base += st[rest[j]];
            if counter[j] < rest_dims[j] {
                break;
            }
            base -= rest_dims[j] * st[rest[j]];
            counter[j] = 0;
        }
    }
}

/// Applies `op` on `targets` to a state vector, without forming the full operator.
pub fn apply_local(
    op: &ComplexMatrix,
    state: &[C64],
    shape: &FactorShape,
    targets: &[usize],
) -> Result<Vec<C64>, NumericsError> {
    let k = shape.check_targets(targets)?;
    check_op(op, k)?;
    if state.len() != shape.total() {
        return Err(NumericsError::DimensionMismatch(format!(
            "state length {} does not match shape total {}",
            state.len(),
            shape.total()
        )));
    }
    let mut out = state.to_vec();
    apply_local_inplace(&mut out, shape.dims(), targets, op);
    Ok(out)
}

/// `E · x` where `E` embeds `op` on the row space described by `shape`.
pub fn apply_local_rows(
    op: &ComplexMatrix,
    x: &ComplexMatrix,
    shape: &FactorShape,
    targets: &[usize],
) -> Result<ComplexMatrix, NumericsError> {
    let k = shape.check_targets(targets)?;
    check_op(op, k)?;
    if x.rows() != shape.total() {
        return Err(NumericsError::DimensionMismatch(format!(
            "matrix has {} rows, shape total is {}",
            x.rows(),
            shape.total()
        )));
    }
    let mut dims = shape.dims().to_vec();
    dims.push(x.cols());
    let mut out = x.clone();
    apply_local_inplace(out.as_mut_slice(), &dims, targets, op);
    Ok(out)
}

/// `x · E` where `E` embeds `op` on the column space described by `shape`.
pub fn apply_local_cols(
    op: &ComplexMatrix,
    x: &ComplexMatrix,
    shape: &FactorShape,
    targets: &[usize],
) -> Result<ComplexMatrix, NumericsError> {
    let k = shape.check_targets(targets)?;
    check_op(op, k)?;
    if x.cols() != shape.total() {
        return Err(NumericsError::DimensionMismatch(format!(
            "matrix has {} columns, shape total is {}",
            x.cols(),
            shape.total()
        )));
    }
    let mut dims = vec![x.rows()];
    dims.extend_from_slice(shape.dims());
    let shifted: Vec<usize> = targets.iter().map(|t| t + 1).collect();
    let mut out = x.clone();
    apply_local_inplace(out.as_mut_slice(), &dims, &shifted, &op.transpose());
    Ok(out)
}

/// Reduced matrix on the factors `keep` (in the given order), tracing out the rest.
pub fn partial_trace(rho: &ComplexMatrix, shape: &FactorShape, keep: &[usize]) -> Result<ComplexMatrix, NumericsError> {
    let n = rho.require_square()?;
    if n != shape.total() {
        return Err(NumericsError::DimensionMismatch(format!(
            "matrix dimension {n} does not match shape total {}",
            shape.total()
        )));
    }
    let k = shape.check_targets(keep)?;
    Ok(partial_trace_flat(rho.as_slice(), shape.dims(), keep, k))
}

pub(crate) fn partial_trace_flat(data: &[C64], dims: &[usize], keep: &[usize], k: usize) -> ComplexMatrix {
    let n: usize = dims.iter().product();
    let st = strides(dims);
    let kdims: Vec<usize> = keep.iter().map(|&t| dims[t]).collect();
    let mut offs = vec![0usize; k];
    for (i, off) in offs.iter_mut().enumerate() {
        let mut rem = i;
        for (j, &t) in keep.iter().enumerate().rev() {
            *off += (rem % kdims[j]) * st[t];
            rem /= kdims[j];
        }
    }
    let rest: Vec<usize> = (0..dims.len()).filter(|f| !keep.contains(f)).collect();
    let rest_dims: Vec<usize> = rest.iter().map(|&f| dims[f]).collect();
    let n_rest: usize = rest_dims.iter().product();

    let mut out = vec![ZERO; k * k];
    let mut counter = vec![0usize; rest.len()];
    let mut base = 0usize;
    for _ in 0..n_rest {
        for (a, &oa) in offs.iter().enumerate() {
            let row = (base + oa) * n + base;
            for (b, &ob) in offs.iter().enumerate() {
                out[a * k + b] += data[row + ob];
            }
        }
        for j in (0..rest.len()).rev() {
            counter[j] += 1;
            base += st[rest[j]];
            if counter[j] < rest_dims[j] {
                break;
            }
            base -= rest_dims[j] * st[rest[j]];
            counter[j] = 0;
        }
    }
    ComplexMatrix::from_raw(k, k, out)
}
