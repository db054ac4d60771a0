//! Dense eigendecomposition and block structure of generators.
//!
//! Eigenvalues come from the complex Schur form `A = Q T Q*`; eigenvectors of
//! the triangular factor are obtained by back substitution and rotated back
//! with `Q`.

use nalgebra::linalg::Schur;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::{SuperOperator, C64};

const SCHUR_MAX_ITER: usize = 10_000;

/// `A = V diag(λ) V⁻¹`.
#[derive(Debug, Clone)]
pub struct Eigendecomposition {
    pub values: DVector<C64>,
    /// Unit-norm right eigenvectors as columns.
    pub vectors: DMatrix<C64>,
    pub inverse: DMatrix<C64>,
    /// `‖V‖₁ ‖V⁻¹‖₁`.
    pub condition: f64,
}

pub fn one_norm(m: &DMatrix<C64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn eigendecompose(a: &DMatrix<C64>) -> Result<Eigendecomposition> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::Decomposition(format!("expected a non-empty square matrix, got {}x{}", n, a.ncols())));
    }
    let scale = one_norm(a).max(f64::MIN_POSITIVE);
    let schur = Schur::try_new(a.clone(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::Decomposition("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let small = f64::EPSILON * scale;

    let mut y = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                acc += t[(i, j)] * y[(j, k)];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < small {
                denom = C64::new(small, 0.0);
            }
            y[(i, k)] = -acc / denom;
        }
    }
    let mut vectors = q * y;
    for mut col in vectors.column_iter_mut() {
        let norm = col.norm();
        col /= C64::new(norm, 0.0);
    }
    let values = DVector::from_iterator(n, (0..n).map(|k| t[(k, k)]));
    let inverse = vectors
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Decomposition("eigenvector matrix is singular".into()))?;
    let condition = one_norm(&vectors) * one_norm(&inverse);
    Ok(Eigendecomposition {
        values,
        vectors,
        inverse,
        condition,
    })
}

/// Index sets of the connected components of the sparsity graph of `a`.
///
/// Each set spans an invariant subspace, so `a` is block diagonal after a
/// permutation. Sets are sorted and listed by their smallest index.
pub fn invariant_blocks(a: &SuperOperator) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut blocks = Vec::new();
    for seed in 0..n {
        if label[seed].is_some() {
            continue;
        }
        let id = blocks.len();
        let mut members = vec![seed];
        label[seed] = Some(id);
        let mut head = 0;
        while head < members.len() {
            let i = members[head];
            head += 1;
            for j in 0..n {
                let linked = a[(i, j)] != C64::new(0.0, 0.0) || a[(j, i)] != C64::new(0.0, 0.0);
                if linked && label[j].is_none() {
                    label[j] = Some(id);
                    members.push(j);
                }
            }
        }
        members.sort_unstable();
        blocks.push(members);
    }
    blocks
}
