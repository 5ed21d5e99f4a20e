use super::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// `C_phi = sum_ij |i><j| (x) phi(|i><j|)`, row index `i * n + a`.
pub fn choi_matrix<F>(phi: F, n: usize) -> ComplexMatrix
where
    F: Fn(&ComplexMatrix) -> ComplexMatrix,
{
    let mut c = ComplexMatrix::zeros(n * n);
    for i in 0..n {
        for j in 0..n {
            let block = phi(&ComplexMatrix::unit(n, i, j));
            for a in 0..n {
                for b in 0..n {
                    c[(i * n + a, j * n + b)] = block[(a, b)];
                }
            }
        }
    }
    c
}

/// Transposes the second tensor factor of an `n^2 x n^2` matrix.
pub fn partial_transpose(m: &ComplexMatrix, n: usize) -> Result<ComplexMatrix> {
    if m.dim() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: m.dim(),
        });
    }
    let mut out = ComplexMatrix::zeros(n * n);
    for i in 0..n {
        for a in 0..n {
            for j in 0..n {
                for b in 0..n {
                    out[(i * n + b, j * n + a)] = m[(i * n + a, j * n + b)];
                }
            }
        }
    }
    Ok(out)
}

/// Applies the map encoded by a Choi matrix: `phi(X)_{ab} = sum_ij X_ij C[(i,a),(j,b)]`.
pub fn apply_choi(c: &ComplexMatrix, n: usize, x: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let xij = x[(i, j)];
            if xij == C64::new(0.0, 0.0) {
                continue;
            }
            for a in 0..n {
                for b in 0..n {
                    out[(a, b)] += xij * c[(i * n + a, j * n + b)];
                }
            }
        }
    }
    out
}
