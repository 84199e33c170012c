use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::LinearOperator;
use crate::group::C64;
use crate::state::{inner, norm};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Lanczos basis and tridiagonal coefficients of a hermitian operator.
struct Lanczos {
    basis: Vec<Vec<C64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// True when the subspace became invariant.
    breakdown: bool,
}

fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += a * xi);
}

fn lanczos(h: &LinearOperator, v0: &[C64], m: usize) -> Lanczos {
    let n0 = norm(v0);
    let mut basis = vec![v0.iter().map(|z| z / n0).collect::<Vec<_>>()];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut breakdown = false;
    for k in 0..m {
        let mut w = h.matvec(&basis[k]);
        let a = inner(&basis[k], &w).re;
        alpha.push(a);
        // full reorthogonalisation, applied twice for stability
        for _ in 0..2 {
            for b in &basis {
                let c = inner(b, &w);
                axpy(&mut w, -c, b);
            }
        }
        let bnorm = norm(&w);
        if k + 1 == m {
            beta.push(bnorm);
            break;
        }
        if bnorm < 1e-13 * (1.0 + a.abs()) {
            beta.push(0.0);
            breakdown = true;
            break;
        }
        beta.push(bnorm);
        w.iter_mut().for_each(|z| *z /= bnorm);
        basis.push(w);
    }
    Lanczos {
        basis,
        alpha,
        beta,
        breakdown,
    }
}

fn tridiag(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    t
}

/// exp(-i dt T) e_1 for a real symmetric tridiagonal T.
fn small_exp_e1(t: &DMatrix<f64>, dt: f64) -> DVector<C64> {
    let eig = t.clone().symmetric_eigen();
    let k = t.nrows();
    let mut y = DVector::from_element(k, ZERO);
    for j in 0..k {
        let c = eig.eigenvectors[(0, j)] * C64::from_polar(1.0, -eig.eigenvalues[j] * dt);
        for i in 0..k {
            y[i] += c * eig.eigenvectors[(i, j)];
        }
    }
    y
}

/// exp(-i t H) v for hermitian H by restarted Lanczos projection with
/// subspace dimension `m` and adaptive step size.
pub fn expmv(h: &LinearOperator, t: f64, v: &[C64], m: usize, tol: f64) -> Vec<C64> {
    let mut w = v.to_vec();
    let beta0 = norm(v);
    if t == 0.0 || beta0 == 0.0 {
        return w;
    }
    let sign = t.signum();
    let total = t.abs();
    let mut done = 0.0;
    let mut dt = total;
    while done < total * (1.0 - 1e-15) {
        let lz = lanczos(h, &w, m);
        let wn = norm(&w);
        let t_mat = tridiag(&lz.alpha, &lz.beta[..lz.alpha.len() - 1]);
        dt = dt.min(total - done);
        loop {
            let y = small_exp_e1(&t_mat, sign * dt);
            let err = if lz.breakdown {
                0.0
            } else {
                wn * lz.beta.last().unwrap() * y[y.len() - 1].norm()
            };
            if err <= tol * dt / total || dt < 1e-12 * total {
                let mut next = vec![ZERO; w.len()];
                for (j, b) in lz.basis.iter().enumerate() {
                    axpy(&mut next, y[j] * wn, b);
                }
                w = next;
                done += dt;
                if err < 0.1 * tol * dt / total {
                    dt *= 1.5;
                }
                break;
            }
            dt *= 0.5;
        }
    }
    w
}

/// Largest eigenvalue of a hermitian positive semidefinite operator given
/// through its action, by restarted Lanczos.
pub(crate) fn largest_eigenvalue<F>(apply: F, dim: usize, rel_tol: f64, seed: u64) -> f64
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    let mut rng = crate::state::seeded_rng(seed);
    let mut v = crate::state::random_vector(dim, &mut rng);
    let mut prev = f64::NAN;
    let m = 40.min(dim);
    for _restart in 0..200 {
        let n0 = norm(&v);
        let mut basis = vec![v.iter().map(|z| z / n0).collect::<Vec<_>>()];
        let mut alpha = Vec::new();
        let mut beta = Vec::new();
        for k in 0..m {
            let mut w = apply(&basis[k]);
            alpha.push(inner(&basis[k], &w).re);
            for _ in 0..2 {
                for b in &basis {
                    let c = inner(b, &w);
                    axpy(&mut w, -c, b);
                }
            }
            let bn = norm(&w);
            if k + 1 == m || bn < 1e-14 * (1.0 + alpha[k].abs()) {
                break;
            }
            beta.push(bn);
            w.iter_mut().for_each(|z| *z /= bn);
            basis.push(w);
        }
        let t = tridiag(&alpha, &beta);
        let eig = t.symmetric_eigen();
        let (imax, &lmax) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let mut next = vec![ZERO; dim];
        for (j, b) in basis.iter().enumerate() {
            axpy(&mut next, C64::new(eig.eigenvectors[(j, imax)], 0.0), b);
        }
        // residual of the Ritz pair
        let r = apply(&next);
        let res: f64 = r
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b * lmax).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if basis.len() < m || res <= rel_tol * lmax.abs().max(1e-300) || (prev - lmax).abs() <= 1e-3 * rel_tol * lmax.abs() {
            return lmax;
        }
        prev = lmax;
        v = next;
    }
    prev
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm_hermitian;

    #[test]
    fn krylov_matches_dense_small() {
        let n = 300;
        let mut rng = crate::state::seeded_rng(11);
        let h = crate::state::random_hermitian(n, &mut rng);
        let v = crate::state::random_vector(n, &mut rng);
        let u = expm_hermitian(&h, 1.0);
        let want = &u * DVector::from_vec(v.clone());
        let got = expmv(&LinearOperator::from_dense(&h), 1.0, &v, 30, 1e-12);
        let err: f64 = got.iter().zip(want.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-10, "err {err}");
        let back = expmv(&LinearOperator::from_dense(&h), -1.0, &got, 30, 1e-12);
        let err: f64 = back.iter().zip(&v).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-10);
    }
}
