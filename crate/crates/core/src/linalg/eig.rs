use super::{check_dim, C64, ComplexMatrix, StateVector, HERMITICITY_TOL, ONE, ZERO};
use crate::error::{Error, Result};

/// Eigenvalues closer than this are treated as one degenerate cluster.
const DEGENERACY_GAP: f64 = 1e-8;
const MAX_SWEEPS: usize = 64;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted descending.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<StateVector>,
}

impl SpectralDecomposition {
    /// `sum_k lambda_k |v_k><v_k|`
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let mut m = ComplexMatrix::zeros(n);
        for (lam, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            m.add_scaled(C64::new(*lam, 0.0), &ComplexMatrix::projector(v));
        }
        m
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }
}

/// Cyclic complex Jacobi diagonalization.
///
/// Each rotation first removes the phase of the pivot `a_pq`, then applies
/// the real symmetric Schur rotation. Output is deterministic: eigenvalues are
/// sorted descending, degenerate clusters (gap < 1e-8) are re-orthonormalized,
/// and every eigenvector's largest component is made real positive.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<SpectralDecomposition> {
    let n = m.dim();
    check_dim(n)?;
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let deviation = m.hermiticity_deviation();
    if deviation > HERMITICITY_TOL {
        return Err(Error::NonHermitianInput { deviation });
    }
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);

    let scale = a.frobenius_norm();
    if scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= 1e-16 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut pairs: Vec<(f64, StateVector)> = (0..n)
        .map(|k| {
            let col = (0..n).map(|i| v[(i, k)]).collect();
            (a[(k, k)].re, StateVector::from_amplitudes_unnormalized(col))
        })
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));

    let mut eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut eigenvectors: Vec<StateVector> = pairs.into_iter().map(|p| p.1).collect();

    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eigenvalues[end - 1] - eigenvalues[end] < DEGENERACY_GAP {
            end += 1;
        }
        if end - start > 1 {
            gram_schmidt(&mut eigenvectors[start..end]);
            let mean = eigenvalues[start..end].iter().sum::<f64>() / (end - start) as f64;
            // keep the exact values; only clean up tiny asymmetries
            for lam in &mut eigenvalues[start..end] {
                if (*lam - mean).abs() < 1e-14 {
                    *lam = mean;
                }
            }
        }
        start = end;
    }
    for e in &mut eigenvectors {
        e.fix_phase();
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r < 1e-300 {
        return;
    }
    let phase = apq.conj() / r; // e^{-i phi}
    let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // u = D J restricted to (p, q), D = diag(1, e^{-i phi}), J = [[c, s], [-s, c]]
    let upp = C64::new(c, 0.0);
    let upq = C64::new(s, 0.0);
    let uqp = phase * (-s);
    let uqq = phase * c;
    let n = a.dim();
    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = akp * upp + akq * uqp;
        a[(k, q)] = akp * upq + akq * uqq;
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * upp + vkq * uqp;
        v[(k, q)] = vkp * upq + vkq * uqq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = upp.conj() * apk + uqp.conj() * aqk;
        a[(q, k)] = upq.conj() * apk + uqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
}

fn gram_schmidt(vs: &mut [StateVector]) {
    for i in 0..vs.len() {
        for j in 0..i {
            let proj = vs[j].inner(&vs[i]);
            let vj = vs[j].clone();
            for (x, y) in vs[i].as_mut_slice().iter_mut().zip(vj.as_slice()) {
                *x -= proj * y;
            }
        }
        if vs[i].normalize().is_err() {
            // numerically dependent; fall back to a basis vector
            let dim = vs[i].dim();
            let mut amps = vec![ZERO; dim];
            amps[i % dim] = ONE;
            vs[i] = StateVector::from_amplitudes_unnormalized(amps);
        }
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eig(m)?.min_eigenvalue())
}

/// `true` iff the minimum eigenvalue of `m` is at least `-tol`.
pub fn is_psd(m: &ComplexMatrix, tol: f64) -> Result<bool> {
    Ok(min_eigenvalue(m)? >= -tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{PSD_TOL, I};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(rng.random_range(-2.0..2.0), 0.0);
            for j in (i + 1)..n {
                let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    /// Roots of the 2x2 characteristic polynomial, descending.
    fn char_poly_2x2(m: &ComplexMatrix) -> (f64, f64) {
        let tr = m.trace().re;
        let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re;
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        (tr / 2.0 + disc, tr / 2.0 - disc)
    }

    #[test]
    fn pauli_z_spectrum() {
        let d = hermitian_eig(&ComplexMatrix::pauli_z()).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, -1.0]);
        assert_eq!(d.eigenvectors[0], StateVector::excited());
        assert_eq!(d.eigenvectors[1], StateVector::ground());
    }

    #[test]
    fn projector_onto_plus() {
        let m = (&ComplexMatrix::identity(2) + &ComplexMatrix::pauli_x()).scale_re(0.5);
        let d = hermitian_eig(&m).unwrap();
        assert!((d.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!(d.eigenvalues[1].abs() < 1e-14);
        assert!(d.eigenvectors[0].fidelity(&StateVector::plus()) > 1.0 - 1e-14);
        assert!(d.eigenvectors[1].fidelity(&StateVector::minus()) > 1.0 - 1e-14);
    }

    #[test]
    fn enm_r1_at_excited_state() {
        // R1(|1><1|) = |0><0| + (1 - tanh 1)|1><1| for gamma = (1, 1, -tanh t), t = 1
        let g3 = -(1.0f64).tanh();
        let m = ComplexMatrix::diagonal(&[C64::new(1.0 + g3, 0.0), C64::new(1.0, 0.0)]);
        let d = hermitian_eig(&m).unwrap();
        let (l0, l1) = char_poly_2x2(&m);
        assert!((d.eigenvalues[0] - l0).abs() < 1e-14 && (d.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((d.eigenvalues[1] - l1).abs() < 1e-14);
        assert!((d.eigenvalues[1] - (1.0 - 1.0f64.tanh())).abs() < 1e-14);
        assert_eq!(d.eigenvectors[0], StateVector::ground());
        assert_eq!(d.eigenvectors[1], StateVector::excited());
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::sigma_minus();
        assert!(matches!(
            hermitian_eig(&m),
            Err(Error::NonHermitianInput { .. })
        ));
        assert!(is_psd(&m, PSD_TOL).is_err());
    }

    #[test]
    fn psd_examples() {
        assert!(is_psd(&ComplexMatrix::identity(3), PSD_TOL).unwrap());
        assert!(!is_psd(&ComplexMatrix::pauli_z(), PSD_TOL).unwrap());
    }

    #[test]
    fn degenerate_identity_is_deterministic() {
        let d1 = hermitian_eig(&ComplexMatrix::identity(4)).unwrap();
        let d2 = hermitian_eig(&ComplexMatrix::identity(4)).unwrap();
        for (a, b) in d1.eigenvectors.iter().zip(&d2.eigenvectors) {
            assert_eq!(a, b);
        }
        let y = ComplexMatrix::pauli_y();
        let d = hermitian_eig(&y).unwrap();
        for v in &d.eigenvectors {
            let pivot = v.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(v.as_slice().iter().any(|z| (z.re - pivot).abs() < 1e-14 && z.im.abs() < 1e-14));
        }
        assert!(d.reconstruct().max_abs_diff(&y) < 1e-14);
        let _ = I;
    }

    #[test]
    fn random_reconstruction_all_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=8 {
            for _ in 0..1000 {
                let m = random_hermitian(n, &mut rng);
                let d = hermitian_eig(&m).unwrap();
                let err = (&d.reconstruct() - &m).frobenius_norm();
                assert!(err <= 1e-9 * m.frobenius_norm().max(1e-300), "n={n} err={err}");
                for i in 0..n {
                    for j in 0..n {
                        let g = d.eigenvectors[i].inner(&d.eigenvectors[j]);
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert!((g - C64::new(want, 0.0)).norm() < 1e-9);
                    }
                }
                assert!(d.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            }
        }
    }

    proptest! {
        #[test]
        fn psd_agrees_with_min_eigenvalue(seed in any::<u64>(), n in 1usize..=6, shift in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = &random_hermitian(n, &mut rng) + &ComplexMatrix::identity(n).scale_re(shift);
            let lam = min_eigenvalue(&m).unwrap();
            prop_assert_eq!(is_psd(&m, PSD_TOL).unwrap(), lam >= -PSD_TOL);
        }

        #[test]
        fn two_by_two_matches_characteristic_polynomial(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_hermitian(2, &mut rng);
            let d = hermitian_eig(&m).unwrap();
            let (l0, l1) = char_poly_2x2(&m);
            prop_assert!((d.eigenvalues[0] - l0).abs() < 1e-12);
            prop_assert!((d.eigenvalues[1] - l1).abs() < 1e-12);
        }
    }
}
