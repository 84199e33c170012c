use nalgebra::{DMatrix, DVector};

use crate::group::C64;

/// exp(-i t H) for a dense hermitian H.
pub fn expm_hermitian(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let n = h.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DVector::from_iterator(
        n,
        eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -l * t)),
    );
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * v.adjoint()
}

/// Principal matrix logarithm of a unitary: returns hermitian Z with
/// exp(i Z) = u and eigenvalues in (-pi, pi].
pub fn log_unitary(u: &DMatrix<C64>) -> DMatrix<C64> {
    let n = u.nrows();
    let (q, t) = nalgebra::linalg::Schur::new(u.clone()).unpack();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut a = t[(i, i)].arg();
        if a <= -std::f64::consts::PI + 1e-12 {
            a = std::f64::consts::PI;
        }
        d[(i, i)] = C64::new(a, 0.0);
    }
    &q * d * q.adjoint()
}

/// Largest singular value of a dense matrix.
pub fn spectral_norm(a: &DMatrix<C64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    if a.nrows() == a.ncols() {
        let herm = (a - a.adjoint()).norm();
        let scale = a.norm().max(1e-300);
        if herm <= 1e-13 * scale {
            let h = (a + a.adjoint()) * C64::new(0.5, 0.0);
            return max_abs_eigenvalue(&h);
        }
        let anti = (a + a.adjoint()).norm();
        if anti <= 1e-13 * scale {
            let h = (a - a.adjoint()) * C64::new(0.0, -0.5);
            return max_abs_eigenvalue(&h);
        }
    }
    a.clone().singular_values().max()
}

fn max_abs_eigenvalue(h: &DMatrix<C64>) -> f64 {
    h.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |m, &l| m.max(l.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_diagonal() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(-2.0, 0.0)]));
        let u = expm_hermitian(&h, 0.3);
        assert!((u[(0, 0)] - C64::from_polar(1.0, -0.3)).norm() < 1e-14);
        assert!((u[(1, 1)] - C64::from_polar(1.0, 0.6)).norm() < 1e-14);
    }

    #[test]
    fn log_unitary_roundtrip() {
        let sx = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let z = log_unitary(&sx);
        // principal branch of sigma_x is (pi/2)(1 - sigma_x)
        let want = (DMatrix::identity(2, 2) - &sx) * C64::new(std::f64::consts::FRAC_PI_2, 0.0);
        assert!((&z - want).norm() < 1e-12);
        let back = expm_hermitian(&z, -1.0);
        assert!((back - sx).norm() < 1e-12);
    }

    #[test]
    fn spectral_norm_cases() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(3.0, 0.0), C64::new(-1.0, 0.0)]));
        assert!((spectral_norm(&d) - 3.0).abs() < 1e-14);
        let a = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(2.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        assert!((spectral_norm(&a) - 2.0).abs() < 1e-14);
        let anti = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.5, 0.0), C64::new(-1.5, 0.0), C64::new(0.0, 0.0)]);
        assert!((spectral_norm(&anti) - 1.5).abs() < 1e-14);
    }
}
