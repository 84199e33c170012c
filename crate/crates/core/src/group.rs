//! Finite gauge groups Z_N and D_N (N odd) with their complete irrep sets.
//!
//! Elements are flat indices. For D_N the index of the pair (p, m), with
//! p a rotation in 0..N and m a reflection bit, is `p + N * m`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "n", rename_all = "lowercase")]
pub enum GroupKind {
    Cyclic(usize),
    Dihedral(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IrrepLabel {
    /// Z_N character p -> exp(2 pi i j p / N).
    Character(usize),
    Trivial,
    /// D_N sign irrep (-1)^m.
    Sign,
    /// D_N two-dimensional irrep exp(2 pi i p k sigma_z / N) sigma_x^m.
    TwoDim(usize),
}

#[derive(Debug, Clone)]
pub struct Irrep {
    pub label: IrrepLabel,
    pub dim: usize,
    /// One unitary matrix per group element.
    pub matrices: Vec<DMatrix<C64>>,
}

impl Irrep {
    pub fn matrix(&self, g: usize) -> &DMatrix<C64> {
        &self.matrices[g]
    }

    pub fn character(&self, g: usize) -> C64 {
        self.matrices[g].trace()
    }
}

#[derive(Debug, Clone)]
pub struct GroupSpec {
    kind: GroupKind,
    order: usize,
    mul: Vec<usize>,
    inv: Vec<usize>,
    identity: usize,
    irreps: Vec<Irrep>,
    faithful: usize,
}

impl GroupSpec {
    pub fn new(kind: GroupKind) -> Result<Self> {
        match kind {
            GroupKind::Cyclic(n) => Self::cyclic(n),
            GroupKind::Dihedral(n) => Self::dihedral(n),
        }
    }

    pub fn cyclic(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::UnsupportedGroup(format!("Z_{n}: need N >= 2")));
        }
        let mut mul = vec![0; n * n];
        for g in 0..n {
            for h in 0..n {
                mul[g * n + h] = (g + h) % n;
            }
        }
        let inv = (0..n).map(|g| (n - g) % n).collect();
        let irreps = (0..n)
            .map(|j| Irrep {
                label: IrrepLabel::Character(j),
                dim: 1,
                matrices: (0..n)
                    .map(|p| DMatrix::from_element(1, 1, phase(2.0 * PI * (j * p) as f64 / n as f64)))
                    .collect(),
            })
            .collect();
        Ok(Self {
            kind: GroupKind::Cyclic(n),
            order: n,
            mul,
            inv,
            identity: 0,
            irreps,
            faithful: 1,
        })
    }

    pub fn dihedral(n: usize) -> Result<Self> {
        if n < 3 || n % 2 == 0 {
            return Err(Error::UnsupportedGroup(format!(
                "D_{n}: only odd N >= 3 is supported"
            )));
        }
        let order = 2 * n;
        let enc = |p: usize, m: usize| p + n * m;
        let mut mul = vec![0; order * order];
        let mut inv = vec![0; order];
        for g in 0..order {
            let (p, m) = (g % n, g / n);
            for h in 0..order {
                let (r, s) = (h % n, h / n);
                let q = if m == 0 { (p + r) % n } else { (p + n - r) % n };
                mul[g * order + h] = enc(q, (m + s) % 2);
            }
            // (p, m)^-1 = (p (-1)^(m+1), m)
            inv[g] = if m == 0 { enc((n - p) % n, 0) } else { enc(p, 1) };
        }
        let mut irreps = vec![
            Irrep {
                label: IrrepLabel::Trivial,
                dim: 1,
                matrices: vec![DMatrix::from_element(1, 1, C64::new(1.0, 0.0)); order],
            },
            Irrep {
                label: IrrepLabel::Sign,
                dim: 1,
                matrices: (0..order)
                    .map(|g| DMatrix::from_element(1, 1, C64::new(if g / n == 0 { 1.0 } else { -1.0 }, 0.0)))
                    .collect(),
            },
        ];
        for k in 1..=(n - 1) / 2 {
            irreps.push(Irrep {
                label: IrrepLabel::TwoDim(k),
                dim: 2,
                matrices: (0..order)
                    .map(|g| dihedral_two_dim(n, k, g % n, g / n))
                    .collect(),
            });
        }
        Ok(Self {
            kind: GroupKind::Dihedral(n),
            order,
            mul,
            inv,
            identity: 0,
            irreps,
            faithful: 2,
        })
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    /// N of Z_N or D_N.
    pub fn n(&self) -> usize {
        match self.kind {
            GroupKind::Cyclic(n) | GroupKind::Dihedral(n) => n,
        }
    }

    pub fn compose(&self, g: usize, h: usize) -> Result<usize> {
        check_index("group element", g, self.order)?;
        check_index("group element", h, self.order)?;
        Ok(self.mul[g * self.order + h])
    }

    pub fn inverse(&self, g: usize) -> Result<usize> {
        check_index("group element", g, self.order)?;
        Ok(self.inv[g])
    }

    /// Table lookup without range checks, for hot loops over valid indices.
    #[inline]
    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.mul[g * self.order + h]
    }

    #[inline]
    pub fn inv(&self, g: usize) -> usize {
        self.inv[g]
    }

    /// Split a dihedral index into (p, m). For Z_N returns (g, 0).
    pub fn decode(&self, g: usize) -> (usize, usize) {
        let n = self.n();
        (g % n, g / n)
    }

    pub fn encode(&self, p: usize, m: usize) -> usize {
        p % self.n() + self.n() * m
    }

    pub fn irreps(&self) -> &[Irrep] {
        &self.irreps
    }

    pub fn irrep(&self, j: usize) -> Result<&Irrep> {
        check_index("irrep", j, self.irreps.len())?;
        Ok(&self.irreps[j])
    }

    /// Index of the default faithful irrep used for matter and links.
    pub fn faithful_index(&self) -> usize {
        self.faithful
    }

    pub fn faithful(&self) -> &Irrep {
        &self.irreps[self.faithful]
    }

    /// <g|j m n> = sqrt(dim j / |G|) D^j_mn(g).
    pub fn rep_overlap(&self, g: usize, j: usize, m: usize, n: usize) -> Result<C64> {
        check_index("group element", g, self.order)?;
        let irrep = self.irrep(j)?;
        check_index("irrep row", m, irrep.dim)?;
        check_index("irrep column", n, irrep.dim)?;
        let s = (irrep.dim as f64 / self.order as f64).sqrt();
        Ok(irrep.matrices[g][(m, n)] * s)
    }

    /// Labels (j, m, n) of the representation basis, in column order of
    /// [`GroupSpec::basis_change`].
    pub fn rep_basis_labels(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::with_capacity(self.order);
        for (j, irrep) in self.irreps.iter().enumerate() {
            for m in 0..irrep.dim {
                for n in 0..irrep.dim {
                    out.push((j, m, n));
                }
            }
        }
        out
    }

    /// Matrix with rows g and columns |j m n>.
    pub fn basis_change(&self) -> DMatrix<C64> {
        let labels = self.rep_basis_labels();
        DMatrix::from_fn(self.order, labels.len(), |g, c| {
            let (j, m, n) = labels[c];
            self.rep_overlap(g, j, m, n).unwrap()
        })
    }
}

/// <l|p> = exp(-2 pi i l p / N) / sqrt(N).
pub fn angular_overlap(l: i64, p: i64, n: usize) -> C64 {
    let k = (l * p).rem_euclid(n as i64) as f64;
    phase(-2.0 * PI * k / n as f64) / (n as f64).sqrt()
}

pub(crate) fn phase(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

fn dihedral_two_dim(n: usize, k: usize, p: usize, m: usize) -> DMatrix<C64> {
    let theta = 2.0 * PI * (p * k) as f64 / n as f64;
    let (a, b) = (phase(theta), phase(-theta));
    let z = C64::new(0.0, 0.0);
    if m == 0 {
        DMatrix::from_row_slice(2, 2, &[a, z, z, b])
    } else {
        DMatrix::from_row_slice(2, 2, &[z, a, b, z])
    }
}
