//! Dense and iterative symmetric eigensolvers shared by the modules.

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigendecomposition of a real symmetric matrix with energies ascending
/// and a deterministic sign convention (largest-magnitude component of
/// each eigenvector is positive).
pub fn symmetric_eigen_sorted(m: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let a = Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    let eig = a.self_adjoint_eigen(Side::Lower).map_err(|_| {
        Error::NumericalFailure(format!(
            "symmetric eigensolver did not converge (matrix hash {:016x})",
            matrix_hash(&m)
        ))
    })?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (col, &idx) in order.iter().enumerate() {
        values.push(s[idx]);
        let mut v = DVector::<f64>::from_fn(n, |r, _| u[(r, idx)]);
        let mut pivot = 0;
        for r in 1..n {
            if v[r].abs() > v[pivot].abs() {
                pivot = r;
            }
        }
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(col, &v);
    }
    Ok((values, vectors))
}

/// FNV-1a over the little-endian bytes of the matrix entries; used to tag
/// non-convergence errors with a fingerprint of the offending input.
pub fn matrix_hash(m: &DMatrix<f64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in m.iter() {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Lowest eigenpair of a large symmetric operator given only its action,
/// via Lanczos with full reorthogonalization.
///
/// The start vector comes from a fixed-seed generator so repeated runs are
/// bit-identical. Converges when the residual bound drops below
/// `tol * scale`, where `scale` is the current Ritz-value magnitude (or 1).
pub fn lanczos_lowest<F>(dim: usize, matvec: F, max_iter: usize, tol: f64) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[f64], &mut [f64]),
{
    assert!(dim > 0);
    if dim == 1 {
        let mut out = [0.0];
        matvec(&[1.0], &mut out);
        return Ok((out[0], vec![1.0]));
    }

    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    let mut v = seed_vector(dim);
    v /= v.norm();
    basis.push(v);

    let max_iter = max_iter.min(dim);
    let mut w_buf = vec![0.0_f64; dim];

    for k in 0..max_iter {
        let vk = basis[k].clone();
        matvec(vk.as_slice(), &mut w_buf);
        let mut w = DVector::<f64>::from_column_slice(&w_buf);
        let alpha = vk.dot(&w);
        alphas.push(alpha);
        w.axpy(-alpha, &vk, 1.0);
        if k > 0 {
            let beta_prev = betas[k - 1];
            w.axpy(-beta_prev, &basis[k - 1], 1.0);
        }
        // Two rounds of reorthogonalization keep the basis orthonormal to
        // machine precision even for clustered spectra.
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let beta = w.norm();

        let converged = if beta < 1e-14 * alpha.abs().max(1.0) {
            true
        } else if (k + 1) % 8 == 0 || k + 1 == max_iter {
            let (theta, s) = tridiag_lowest(&alphas, &betas);
            beta * s.abs() < tol * theta.abs().max(1.0)
        } else {
            false
        };

        if converged {
            let (theta, coeffs) = tridiag_lowest_vector(&alphas, &betas);
            let mut x = DVector::<f64>::zeros(dim);
            for (c, b) in coeffs.iter().zip(basis.iter()) {
                x.axpy(*c, b, 1.0);
            }
            x /= x.norm();
            return Ok((theta, x.as_slice().to_vec()));
        }

        betas.push(beta);
        basis.push(w / beta);
    }

    Err(Error::NumericalFailure(format!(
        "lanczos did not converge in {max_iter} iterations (dim {dim})"
    )))
}

/// Lowest eigenvalue of the Lanczos tridiagonal and the last component of
/// its eigenvector (used for the residual bound).
fn tridiag_lowest(alphas: &[f64], betas: &[f64]) -> (f64, f64) {
    let (theta, v) = tridiag_lowest_vector(alphas, betas);
    (theta, v[v.len() - 1])
}

fn tridiag_lowest_vector(alphas: &[f64], betas: &[f64]) -> (f64, Vec<f64>) {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let (values, vectors) =
        symmetric_eigen_sorted(t).expect("tridiagonal eigensolve cannot fail");
    (values[0], vectors.column(0).iter().copied().collect())
}

/// Deterministic quasi-random start vector (splitmix64 stream).
fn seed_vector(dim: usize) -> DVector<f64> {
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut next = move || {
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    DVector::<f64>::from_fn(dim, |_, _| {
        // Map to (-1, 1), avoiding exact zeros.
        let u = (next() >> 11) as f64 / (1u64 << 53) as f64;
        2.0 * u - 1.0 + 1e-12
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn dense_solver_reproduces_known_spectrum() {
        // Uniform 4-site open chain: eigenvalues 2 cos(m pi / 5).
        let mut m = DMatrix::<f64>::zeros(4, 4);
        for j in 0..3 {
            m[(j, j + 1)] = 1.0;
            m[(j + 1, j)] = 1.0;
        }
        let (vals, vecs) = symmetric_eigen_sorted(m.clone()).unwrap();
        let golden = [
            -2.0 * 0.8090169943749475,
            -2.0 * 0.30901699437494745,
            2.0 * 0.30901699437494745,
            2.0 * 0.8090169943749475,
        ];
        for (v, g) in vals.iter().zip(golden.iter()) {
            assert_abs_diff_eq!(v, g, epsilon = 1e-12);
        }
        for c in 0..4 {
            let v = vecs.column(c);
            let r = (&m * v) - vals[c] * v;
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn lanczos_matches_dense_on_sparse_like_matrix() {
        let n = 300;
        let mut m = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            for l in (j + 1)..n {
                if l - j <= 3 {
                    let v = ((j * 7 + l * 13) % 17) as f64 / 17.0 - 0.4;
                    m[(j, l)] = v;
                    m[(l, j)] = v;
                }
            }
        }
        let (dense_vals, _) = symmetric_eigen_sorted(m.clone()).unwrap();
        let (theta, x) = lanczos_lowest(
            n,
            |xin, out| {
                let xv = DVector::<f64>::from_column_slice(xin);
                let y = &m * xv;
                out.copy_from_slice(y.as_slice());
            },
            250,
            1e-12,
        )
        .unwrap();
        assert_abs_diff_eq!(theta, dense_vals[0], epsilon = 1e-9);
        let xv = DVector::<f64>::from_column_slice(&x);
        let r = &m * &xv - theta * &xv;
        assert!(r.norm() < 1e-7, "residual {}", r.norm());
    }

    proptest! {
        #[test]
        fn eigen_residuals_are_tiny(seed in 0_u64..500) {
            let n = 8;
            let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let mut m = DMatrix::<f64>::zeros(n, n);
            for j in 0..n {
                for l in j..n {
                    let v = next();
                    m[(j, l)] = v;
                    m[(l, j)] = v;
                }
            }
            let norm = m.norm();
            let (vals, vecs) = symmetric_eigen_sorted(m.clone()).unwrap();
            for c in 0..n {
                let v = vecs.column(c);
                let r = (&m * v) - vals[c] * v;
                prop_assert!(r.norm() <= 1e-10 * norm.max(1.0));
            }
            // Column orthonormality.
            let gram = vecs.transpose() * &vecs;
            for j in 0..n {
                for l in 0..n {
                    let want = if j == l { 1.0 } else { 0.0 };
                    prop_assert!((gram[(j, l)] - want).abs() < 1e-10);
                }
            }
            // Ascending order.
            for w in vals.windows(2) {
                prop_assert!(w[0] <= w[1] + 1e-14);
            }
        }
    }
}
