//! Structured operators acting on a few registers or fermionic modes.
//!
//! They are applied to state vectors in gather form, row by row, without
//! building a sparse matrix over the full space, and can be converted to a
//! [`LinearOperator`] for small layouts.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::group::C64;
use crate::linalg::LinearOperator;
use crate::state::RegisterLayout;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone)]
pub enum LocalOp {
    /// |v> -> |perm[v]> on one register.
    RegisterPermutation { reg: usize, perm: Vec<usize>, inv: Vec<usize> },
    /// Target register value t -> table[c][t] where c is the control value.
    ControlledPermutation {
        control: usize,
        target: usize,
        table: Vec<Vec<usize>>,
        inv: Vec<Vec<usize>>,
    },
    /// Diagonal phases on one register.
    RegisterDiag { reg: usize, values: Vec<C64> },
    /// Diagonal phases depending on two registers; entry `va * reg_dim + vb`.
    RegisterPairDiag { a: usize, b: usize, values: Vec<C64> },
    /// Dense matrix on one register.
    RegisterMatrix { reg: usize, matrix: DMatrix<C64> },
    /// Fock-space matrix on the contiguous modes of a vertex, selected by
    /// the value of an optional control register.
    VertexBlock {
        first_mode: usize,
        n_modes: usize,
        control: Option<usize>,
        blocks: Vec<DMatrix<C64>>,
    },
    /// exp(-i sum_m phi_m n_m) on the fermionic modes.
    ModePhase { phases: Vec<f64> },
    /// exp(-i theta sum_(a,b) (c_a^dag c_b + c_b^dag c_a)) for disjoint mode
    /// pairs.
    Hopping { pairs: Vec<(usize, usize)>, theta: f64 },
    Sparse(LinearOperator),
}

fn invert(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (a, &b) in p.iter().enumerate() {
        inv[b] = a;
    }
    inv
}

#[inline]
fn replace_digit(layout: &RegisterLayout, i: usize, reg: usize, new: usize) -> usize {
    let s = layout.stride(reg);
    let old = (i / s) % layout.reg_dim();
    i - old * s + new * s
}

impl LocalOp {
    pub fn register_permutation(reg: usize, perm: Vec<usize>) -> Self {
        let inv = invert(&perm);
        LocalOp::RegisterPermutation { reg, perm, inv }
    }

    pub fn controlled_permutation(control: usize, target: usize, table: Vec<Vec<usize>>) -> Self {
        let inv = table.iter().map(|p| invert(p)).collect();
        LocalOp::ControlledPermutation {
            control,
            target,
            table,
            inv,
        }
    }

    pub fn vertex_block(
        layout: &RegisterLayout,
        vertex: usize,
        control: Option<usize>,
        blocks: Vec<DMatrix<C64>>,
    ) -> Self {
        LocalOp::VertexBlock {
            first_mode: vertex * layout.modes_per_vertex(),
            n_modes: layout.modes_per_vertex(),
            control,
            blocks,
        }
    }

    /// Non-zero entries of row `i`.
    pub fn row(&self, layout: &RegisterLayout, i: usize, out: &mut Vec<(usize, C64)>) {
        out.clear();
        match self {
            LocalOp::RegisterPermutation { reg, inv, .. } => {
                let v = layout.reg_value(i, *reg);
                out.push((replace_digit(layout, i, *reg, inv[v]), ONE));
            }
            LocalOp::ControlledPermutation {
                control,
                target,
                inv,
                ..
            } => {
                let c = layout.reg_value(i, *control);
                let t = layout.reg_value(i, *target);
                out.push((replace_digit(layout, i, *target, inv[c][t]), ONE));
            }
            LocalOp::RegisterDiag { reg, values } => {
                out.push((i, values[layout.reg_value(i, *reg)]));
            }
            LocalOp::RegisterPairDiag { a, b, values } => {
                let k = layout.reg_value(i, *a) * layout.reg_dim() + layout.reg_value(i, *b);
                out.push((i, values[k]));
            }
            LocalOp::RegisterMatrix { reg, matrix } => {
                let v = layout.reg_value(i, *reg);
                for w in 0..matrix.ncols() {
                    let m = matrix[(v, w)];
                    if m != ZERO {
                        out.push((replace_digit(layout, i, *reg, w), m));
                    }
                }
            }
            LocalOp::VertexBlock {
                first_mode,
                n_modes,
                control,
                blocks,
            } => {
                let mask = (1usize << n_modes) - 1;
                let a = (i >> first_mode) & mask;
                let blk = match control {
                    Some(c) => &blocks[layout.reg_value(i, *c)],
                    None => &blocks[0],
                };
                let base = i & !(mask << first_mode);
                for b in 0..blk.ncols() {
                    let m = blk[(a, b)];
                    if m != ZERO {
                        out.push((base | (b << first_mode), m));
                    }
                }
            }
            LocalOp::ModePhase { phases } => {
                let mut phi = 0.0;
                for (m, p) in phases.iter().enumerate() {
                    if i >> m & 1 == 1 {
                        phi += p;
                    }
                }
                out.push((i, C64::from_polar(1.0, -phi)));
            }
            LocalOp::Hopping { pairs, theta } => {
                out.push((i, ONE));
                let (c, s) = (theta.cos(), theta.sin());
                let mut next = Vec::with_capacity(4);
                for &(a, b) in pairs {
                    next.clear();
                    for &(k, v) in out.iter() {
                        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                        if (k >> lo & 1) == (k >> hi & 1) {
                            next.push((k, v));
                            continue;
                        }
                        let between = (k >> (lo + 1)) & ((1usize << (hi - lo - 1)) - 1);
                        let sg = if between.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                        next.push((k, v * c));
                        next.push((k ^ (1 << lo) ^ (1 << hi), v * C64::new(0.0, -sg * s)));
                    }
                    std::mem::swap(out, &mut next);
                }
            }
            LocalOp::Sparse(op) => out.extend(op.row(i)),
        }
    }

    /// Gather-form application y = A x.
    pub fn apply(&self, layout: &RegisterLayout, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; x.len()];
        match self {
            LocalOp::Sparse(op) => op.matvec_into(x, &mut y),
            _ => {
                let chunk = 1 << 12;
                y.par_chunks_mut(chunk).enumerate().for_each(|(c, ys)| {
                    let mut row = Vec::with_capacity(8);
                    for (o, yi) in ys.iter_mut().enumerate() {
                        self.row(layout, c * chunk + o, &mut row);
                        let mut acc = ZERO;
                        for &(j, v) in &row {
                            acc += v * x[j];
                        }
                        *yi = acc;
                    }
                });
            }
        }
        y
    }

    pub fn to_operator(&self, layout: &RegisterLayout) -> LinearOperator {
        if let LocalOp::Sparse(op) = self {
            return op.clone();
        }
        LinearOperator::from_rows(layout.dim(), |i, row| {
            let mut tmp = Vec::new();
            self.row(layout, i, &mut tmp);
            row.extend(tmp);
        })
    }

    /// Inverse (adjoint) of a unitary local operator.
    pub fn adjoint(&self) -> LocalOp {
        match self {
            LocalOp::RegisterPermutation { reg, perm, inv } => LocalOp::RegisterPermutation {
                reg: *reg,
                perm: inv.clone(),
                inv: perm.clone(),
            },
            LocalOp::ControlledPermutation {
                control,
                target,
                table,
                inv,
            } => LocalOp::ControlledPermutation {
                control: *control,
                target: *target,
                table: inv.clone(),
                inv: table.clone(),
            },
            LocalOp::RegisterDiag { reg, values } => LocalOp::RegisterDiag {
                reg: *reg,
                values: values.iter().map(|v| v.conj()).collect(),
            },
            LocalOp::RegisterPairDiag { a, b, values } => LocalOp::RegisterPairDiag {
                a: *a,
                b: *b,
                values: values.iter().map(|v| v.conj()).collect(),
            },
            LocalOp::RegisterMatrix { reg, matrix } => LocalOp::RegisterMatrix {
                reg: *reg,
                matrix: matrix.adjoint(),
            },
            LocalOp::VertexBlock {
                first_mode,
                n_modes,
                control,
                blocks,
            } => LocalOp::VertexBlock {
                first_mode: *first_mode,
                n_modes: *n_modes,
                control: *control,
                blocks: blocks.iter().map(|b| b.adjoint()).collect(),
            },
            LocalOp::ModePhase { phases } => LocalOp::ModePhase {
                phases: phases.iter().map(|p| -p).collect(),
            },
            LocalOp::Hopping { pairs, theta } => LocalOp::Hopping {
                pairs: pairs.clone(),
                theta: -theta,
            },
            LocalOp::Sparse(op) => LocalOp::Sparse(op.adjoint()),
        }
    }
}

/// Product of local operators; `ops[0]` acts first.
pub fn product_operator(ops: &[LocalOp], layout: &RegisterLayout) -> LinearOperator {
    let mut acc = LinearOperator::identity(layout.dim());
    for op in ops {
        acc = op.to_operator(layout).matmul(&acc);
    }
    acc
}

pub fn apply_all(ops: &[LocalOp], layout: &RegisterLayout, x: &[C64]) -> Vec<C64> {
    let mut v = x.to_vec();
    for op in ops {
        v = op.apply(layout, &v);
    }
    v
}

/// Second-quantized image Gamma(u) of a one-body unitary on n modes, as a
/// 2^n x 2^n Fock matrix: the amplitude between occupation sets S (row)
/// and T (column) is the minor det u[S, T].
pub fn fock_matrix(u: &DMatrix<C64>) -> DMatrix<C64> {
    let n = u.nrows();
    let size = 1usize << n;
    DMatrix::from_fn(size, size, |s, t| {
        if s.count_ones() != t.count_ones() {
            return ZERO;
        }
        let rows: Vec<usize> = (0..n).filter(|k| s >> k & 1 == 1).collect();
        let cols: Vec<usize> = (0..n).filter(|k| t >> k & 1 == 1).collect();
        if rows.is_empty() {
            return ONE;
        }
        let sub = DMatrix::from_fn(rows.len(), cols.len(), |a, b| u[(rows[a], cols[b])]);
        sub.determinant()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{fermion_op, FermionKind};

    #[test]
    fn fock_matrix_conjugates_creators() {
        // Gamma(u) c_n^dag Gamma(u)^dag = sum_m c_m^dag u_mn on a two-mode
        // vertex embedded between other modes.
        let layout = RegisterLayout::new(3, 2, 0, 0, 2).unwrap();
        let th = 0.7f64;
        let u = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(th.cos(), 0.0),
                C64::new(0.0, th.sin()),
                C64::new(0.0, th.sin()),
                C64::new(th.cos(), 0.0),
            ],
        ) * C64::from_polar(1.0, 0.3);
        let g = LocalOp::vertex_block(&layout, 1, None, vec![fock_matrix(&u)]).to_operator(&layout);
        for n in 0..2 {
            let lhs = g.matmul(&fermion_op(&layout, 1, n, FermionKind::Create).unwrap()).matmul(&g.adjoint());
            let mut rhs = LinearOperator::zeros(layout.dim());
            for m in 0..2 {
                rhs = rhs.add_scaled(&fermion_op(&layout, 1, m, FermionKind::Create).unwrap(), u[(m, n)]);
            }
            assert!(lhs.max_abs_diff(&rhs) < 1e-14);
        }
    }

    #[test]
    fn hopping_matches_exponential() {
        let layout = RegisterLayout::new(4, 1, 0, 0, 2).unwrap();
        let (a, b) = (0usize, 3usize);
        let ca = fermion_op(&layout, a, 0, FermionKind::Create).unwrap();
        let cb = fermion_op(&layout, b, 0, FermionKind::Create).unwrap();
        let t = ca.matmul(&cb.adjoint());
        let h = t.add(&t.adjoint());
        let want = crate::linalg::expm_hermitian(&h.to_dense(), 0.37);
        let got = LocalOp::Hopping { pairs: vec![(a, b)], theta: 0.37 }.to_operator(&layout);
        assert!((got.to_dense() - want).norm() < 1e-13);
    }

    #[test]
    fn adjoint_inverts() {
        let layout = RegisterLayout::new(1, 1, 2, 0, 3).unwrap();
        let op = LocalOp::controlled_permutation(0, 1, vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]]);
        let p = op.to_operator(&layout).matmul(&op.adjoint().to_operator(&layout));
        assert!(p.max_abs_diff(&LinearOperator::identity(layout.dim())) < 1e-15);
    }
}
