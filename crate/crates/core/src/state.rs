//! Composite Hilbert space of fermionic modes, link registers and ancilla
//! registers, with dense state vectors and fermionic operators.
//!
//! Basis index layout: the occupation bits of the fermionic modes occupy
//! the least significant bits (mode `i` is bit `i`), followed by the link
//! registers and then the ancilla registers, each a digit of radix |G|.
//! A basis state is `(c_0^dag)^{n_0} (c_1^dag)^{n_1} ... |vac>`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};
use crate::group::C64;
use crate::linalg::{self, LinearOperator};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Dense exponentials are used up to this dimension in [`evolve_exact`].
pub const DENSE_EXP_MAX: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FermionKind {
    Create,
    Annihilate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    n_vertices: usize,
    modes_per_vertex: usize,
    n_links: usize,
    n_ancillas: usize,
    reg_dim: usize,
    dim: usize,
}

impl RegisterLayout {
    pub fn new(
        n_vertices: usize,
        modes_per_vertex: usize,
        n_links: usize,
        n_ancillas: usize,
        reg_dim: usize,
    ) -> Result<Self> {
        let modes = n_vertices * modes_per_vertex;
        let regs = n_links + n_ancillas;
        let dim = (reg_dim as u128).checked_pow(regs as u32).and_then(|r| {
            if modes >= 64 {
                None
            } else {
                r.checked_mul(1u128 << modes)
            }
        });
        match dim {
            Some(d) if d <= u32::MAX as u128 => Ok(Self {
                n_vertices,
                modes_per_vertex,
                n_links,
                n_ancillas,
                reg_dim,
                dim: d as usize,
            }),
            _ => Err(Error::TooLarge(format!(
                "2^{modes} * {reg_dim}^{regs} basis states"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_modes(&self) -> usize {
        self.n_vertices * self.modes_per_vertex
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn modes_per_vertex(&self) -> usize {
        self.modes_per_vertex
    }

    pub fn n_links(&self) -> usize {
        self.n_links
    }

    pub fn n_ancillas(&self) -> usize {
        self.n_ancillas
    }

    pub fn reg_dim(&self) -> usize {
        self.reg_dim
    }

    pub fn n_registers(&self) -> usize {
        self.n_links + self.n_ancillas
    }

    pub fn fermion_mask(&self) -> usize {
        (1usize << self.n_modes()) - 1
    }

    pub fn mode(&self, vertex: usize, component: usize) -> Result<usize> {
        check_index("vertex", vertex, self.n_vertices)?;
        check_index("spinor component", component, self.modes_per_vertex)?;
        Ok(vertex * self.modes_per_vertex + component)
    }

    /// Register index of a link.
    pub fn link_reg(&self, link: usize) -> Result<usize> {
        check_index("link register", link, self.n_links)?;
        Ok(link)
    }

    /// Register index of an ancilla.
    pub fn ancilla_reg(&self, a: usize) -> Result<usize> {
        if self.n_ancillas == 0 {
            return Err(Error::NoAncilla("layout has no ancilla registers".into()));
        }
        check_index("ancilla register", a, self.n_ancillas)?;
        Ok(self.n_links + a)
    }

    pub fn stride(&self, reg: usize) -> usize {
        (1usize << self.n_modes()) * self.reg_dim.pow(reg as u32)
    }

    #[inline]
    pub fn reg_value(&self, idx: usize, reg: usize) -> usize {
        (idx / self.stride(reg)) % self.reg_dim
    }

    /// Assemble a basis index from occupation bits and register values
    /// (links first, then ancillas).
    pub fn index(&self, bits: usize, regs: &[usize]) -> usize {
        let mut idx = 0;
        for &r in regs.iter().rev() {
            idx = idx * self.reg_dim + r;
        }
        (idx << self.n_modes()) | bits
    }

    /// Same layout with a different number of ancillas.
    pub fn with_ancillas(&self, n: usize) -> Result<Self> {
        Self::new(
            self.n_vertices,
            self.modes_per_vertex,
            self.n_links,
            n,
            self.reg_dim,
        )
    }
}

/// Sign and target of applying a creation or annihilation operator on a
/// basis occupation pattern.
#[inline]
pub fn fermion_action(bits: usize, mode: usize, kind: FermionKind) -> Option<(usize, f64)> {
    let occupied = bits >> mode & 1 == 1;
    let sign = if (bits & ((1usize << mode) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    };
    match (kind, occupied) {
        (FermionKind::Create, false) => Some((bits | 1 << mode, sign)),
        (FermionKind::Annihilate, true) => Some((bits & !(1 << mode), sign)),
        _ => None,
    }
}

/// Apply a product of fermionic operators (rightmost acts first).
pub fn fermion_string(bits: usize, ops: &[(usize, FermionKind)]) -> Option<(usize, f64)> {
    let mut b = bits;
    let mut s = 1.0;
    for &(mode, kind) in ops.iter().rev() {
        let (nb, sg) = fermion_action(b, mode, kind)?;
        b = nb;
        s *= sg;
    }
    Some((b, s))
}

pub fn fermion_op(
    layout: &RegisterLayout,
    vertex: usize,
    component: usize,
    kind: FermionKind,
) -> Result<LinearOperator> {
    let mode = layout.mode(vertex, component)?;
    let mask = layout.fermion_mask();
    Ok(LinearOperator::from_columns(layout.dim(), |j, col| {
        if let Some((nb, s)) = fermion_action(j & mask, mode, kind) {
            col.push(((j & !mask) | nb, C64::new(s, 0.0)));
        }
    }))
}

/// Operator diagonal in the group-element basis of one register.
pub fn register_diag_op<F>(layout: &RegisterLayout, reg: usize, f: F) -> Result<LinearOperator>
where
    F: Fn(usize) -> C64 + Sync,
{
    check_index("register", reg, layout.n_registers())?;
    let vals: Vec<C64> = (0..layout.reg_dim()).map(&f).collect();
    Ok(LinearOperator::diagonal(
        (0..layout.dim())
            .map(|i| vals[layout.reg_value(i, reg)])
            .collect(),
    ))
}

pub fn link_diag_op<F>(layout: &RegisterLayout, link: usize, f: F) -> Result<LinearOperator>
where
    F: Fn(usize) -> C64 + Sync,
{
    register_diag_op(layout, layout.link_reg(link)?, f)
}

pub fn ancilla_diag_op<F>(layout: &RegisterLayout, ancilla: usize, f: F) -> Result<LinearOperator>
where
    F: Fn(usize) -> C64 + Sync,
{
    register_diag_op(layout, layout.ancilla_reg(ancilla)?, f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: RegisterLayout,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn basis(layout: &RegisterLayout, idx: usize) -> Result<Self> {
        check_index("basis state", idx, layout.dim())?;
        let mut amps = vec![ZERO; layout.dim()];
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Self {
            layout: layout.clone(),
            amps,
        })
    }

    /// Normalizes the supplied amplitudes.
    pub fn from_amplitudes(layout: &RegisterLayout, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != layout.dim() {
            return Err(Error::LayoutMismatch(format!(
                "{} amplitudes for dimension {}",
                amps.len(),
                layout.dim()
            )));
        }
        let n = norm(&amps);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidArgument("zero or non-finite state".into()));
        }
        Ok(Self {
            layout: layout.clone(),
            amps: amps.into_iter().map(|a| a / n).collect(),
        })
    }

    pub fn random(layout: &RegisterLayout, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        Self::from_amplitudes(layout, random_vector(layout.dim(), &mut rng)).unwrap()
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    pub fn inner(&self, other: &Self) -> C64 {
        inner(&self.amps, &other.amps)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.amps
            .par_iter()
            .zip(other.amps.par_iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn expectation(&self, op: &LinearOperator) -> C64 {
        inner(&self.amps, &op.matvec(&self.amps))
    }
}

pub fn apply(op: &LinearOperator, state: &StateVector) -> Result<StateVector> {
    if op.dim() != state.layout.dim() {
        return Err(Error::LayoutMismatch(format!(
            "operator dimension {} vs state dimension {}",
            op.dim(),
            state.layout.dim()
        )));
    }
    Ok(StateVector {
        layout: state.layout.clone(),
        amps: op.matvec(&state.amps),
    })
}

/// exp(-i t H)|psi>: dense exponential up to [`DENSE_EXP_MAX`], Krylov
/// projection (dimension 30, adaptive steps) above.
pub fn evolve_exact(h: &LinearOperator, t: f64, state: &StateVector) -> Result<StateVector> {
    if h.dim() != state.layout.dim() {
        return Err(Error::LayoutMismatch(format!(
            "operator dimension {} vs state dimension {}",
            h.dim(),
            state.layout.dim()
        )));
    }
    if !h.hermitian {
        let dev = h.hermiticity_deviation();
        if dev > 1e-10 * (1.0 + h.max_abs()) {
            return Err(Error::NotHermitian(dev));
        }
    }
    if t == 0.0 {
        return Ok(state.clone());
    }
    let amps = linalg::expm_apply(h, t, &state.amps, DENSE_EXP_MAX);
    Ok(StateVector {
        layout: state.layout.clone(),
        amps,
    })
}

/// Fidelity of the reduced ancilla state with the product state in which
/// ancilla `a` holds element `reference[a]`.
pub fn ancilla_state_fidelity(state: &StateVector, reference: &[usize]) -> Result<f64> {
    let layout = &state.layout;
    if reference.len() != layout.n_ancillas() {
        return Err(Error::LayoutMismatch(format!(
            "{} reference values for {} ancillas",
            reference.len(),
            layout.n_ancillas()
        )));
    }
    let block = layout.stride(layout.n_links());
    let mut off = 0;
    for &r in reference.iter().rev() {
        check_index("group element", r, layout.reg_dim())?;
        off = off * layout.reg_dim() + r;
    }
    let start = off * block;
    let p: f64 = state.amps[start..start + block].iter().map(|z| z.norm_sqr()).sum();
    Ok(p / state.norm().powi(2))
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    if a.len() >= 1 << 14 {
        a.par_iter().zip(b.par_iter()).map(|(x, y)| x.conj() * y).sum()
    } else {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }
}

pub fn norm(a: &[C64]) -> f64 {
    if a.len() >= 1 << 14 {
        a.par_iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    } else {
        a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Vector with independent uniform complex entries in the unit square.
pub fn random_vector<R: Rng>(n: usize, rng: &mut R) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let a = DMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}
