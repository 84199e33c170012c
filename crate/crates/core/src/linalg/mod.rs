//! Sparse operators, dense kernels and Krylov exponentiation.

mod dense;
mod krylov;
mod sparse;

pub use dense::{expm_hermitian, log_unitary, spectral_norm};
pub use krylov::expmv;
pub use sparse::LinearOperator;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::group::C64;

/// Exact SVD (dense) up to this dimension, Lanczos above.
pub const DENSE_NORM_MAX: usize = 2048;

/// Largest singular value. Dense for small operators, restarted Lanczos
/// on A^dag A (relative tolerance 1e-6 on the norm) otherwise.
pub fn operator_norm(a: &LinearOperator) -> f64 {
    if a.nnz() == 0 {
        return 0.0;
    }
    if a.dim() <= DENSE_NORM_MAX {
        return spectral_norm(&a.to_dense());
    }
    let ad = a.adjoint();
    let lam = krylov::largest_eigenvalue(|x| ad.matvec(&a.matvec(x)), a.dim(), 1e-7, 0x6e6f726d);
    lam.max(0.0).sqrt()
}

/// Lanczos estimate of the largest singular value regardless of size.
pub fn operator_norm_lanczos(a: &LinearOperator) -> f64 {
    if a.nnz() == 0 {
        return 0.0;
    }
    let ad = a.adjoint();
    let lam = krylov::largest_eigenvalue(|x| ad.matvec(&a.matvec(x)), a.dim(), 1e-7, 0x6e6f726d);
    lam.max(0.0).sqrt()
}

/// exp(-i t H) for a hermitian sparse H whose sparsity graph splits into
/// small connected components; each component is exponentiated densely.
pub fn expm_blockwise(h: &LinearOperator, t: f64, max_block: usize) -> Result<LinearOperator> {
    let n = h.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for (j, _) in h.row(i) {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut members: std::collections::HashMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        members.entry(r).or_default().push(i);
    }
    let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); n];
    for (_, idx) in members {
        if idx.len() > max_block {
            return Err(Error::TooLarge(format!(
                "connected block of size {} exceeds {max_block}",
                idx.len()
            )));
        }
        if idx.len() == 1 {
            let i = idx[0];
            let d = h.get(i, i).re;
            rows[i].push((i, C64::from_polar(1.0, -d * t)));
            continue;
        }
        let pos: std::collections::HashMap<usize, usize> =
            idx.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut m = DMatrix::zeros(idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (j, v) in h.row(i) {
                m[(a, pos[&j])] += v;
            }
        }
        let u = expm_hermitian(&m, t);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                if u[(a, b)].norm() > 1e-300 {
                    rows[i].push((j, u[(a, b)]));
                }
            }
        }
    }
    let mut out = LinearOperator::from_rows(n, |i, row| row.extend_from_slice(&rows[i]));
    out.unitary = true;
    Ok(out)
}

/// exp(-i t H) on a vector: dense for small H, Krylov otherwise.
pub fn expm_apply(h: &LinearOperator, t: f64, v: &[C64], dense_max: usize) -> Vec<C64> {
    if h.dim() <= dense_max {
        let u = expm_hermitian(&h.to_dense(), t);
        let r = u * nalgebra::DVector::from_column_slice(v);
        r.iter().copied().collect()
    } else {
        expmv(h, t, v, 30, 1e-12)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{random_hermitian, random_vector, seeded_rng};
    use rand::Rng;

    #[test]
    fn norm_of_unitary_and_diag() {
        assert!((operator_norm(&LinearOperator::identity(5)) - 1.0).abs() < 1e-14);
        let d = LinearOperator::diagonal(vec![C64::new(3.0, 0.0), C64::new(-1.0, 0.0)]);
        assert!((operator_norm(&d) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn lanczos_norm_matches_dense_block() {
        // 5000-dim sparse operator whose norm is carried by a dense
        // 512-dim block; other entries are smaller.
        let n = 5000;
        let b = 512;
        let mut rng = seeded_rng(3);
        let blk = DMatrix::from_fn(b, b, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let want = blk.clone().singular_values().max();
        let diag: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 0.5 * want).collect();
        let a = LinearOperator::from_rows(n, |i, row| {
            if i < b {
                for j in 0..b {
                    row.push((j, blk[(i, j)]));
                }
            } else {
                row.push((i, C64::new(diag[i], 0.0)));
                if i + 1 < n {
                    row.push((i + 1, C64::new(0.01, 0.0)));
                }
            }
        });
        let got = operator_norm(&a);
        assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
    }

    #[test]
    fn blockwise_matches_dense() {
        let mut rng = seeded_rng(9);
        let h1 = random_hermitian(4, &mut rng);
        let h2 = random_hermitian(3, &mut rng);
        let h = LinearOperator::from_rows(7, |i, row| {
            if i < 4 {
                for j in 0..4 {
                    row.push((j, h1[(i, j)]));
                }
            } else {
                for j in 4..7 {
                    row.push((j, h2[(i - 4, j - 4)]));
                }
            }
        });
        let u = expm_blockwise(&h, 0.7, 16).unwrap();
        let want = expm_hermitian(&h.to_dense(), 0.7);
        assert!((u.to_dense() - want).norm() < 1e-12);
        assert!(expm_blockwise(&h, 0.7, 3).is_err());
    }

    #[test]
    fn krylov_vs_dense_2000() {
        let n = 2000;
        let mut rng = seeded_rng(2000);
        let mut h = random_hermitian(n, &mut rng);
        h /= C64::new((n as f64).sqrt(), 0.0);
        let v = random_vector(n, &mut rng);
        let dense = expm_apply(&LinearOperator::from_dense(&h), 1.0, &v, usize::MAX);
        let sparse = LinearOperator::from_dense(&h).checked_hermitian().unwrap();
        let kr = expmv(&sparse, 1.0, &v, 30, 1e-12);
        let err: f64 = kr.iter().zip(&dense).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-9, "err {err}");
    }
}
