//! Model instances: couplings, the four Hamiltonian pieces, gauge
//! transformations and the gauge-invariant vacuum.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};
use crate::group::{angular_overlap, GroupKind, GroupSpec, C64};
use crate::lattice::{planes, LatticeShape, LinkId, Parity, PlaquetteId};
use crate::linalg::LinearOperator;
use crate::local::{apply_all, fock_matrix, product_operator, LocalOp};
use crate::state::{fermion_string, FermionKind, RegisterLayout, StateVector};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub lambda_b: f64,
    pub lambda_e: f64,
    pub lambda_gm: f64,
    pub mass: f64,
}

impl Couplings {
    pub fn uniform(x: f64) -> Self {
        Self {
            lambda_b: x,
            lambda_e: x,
            lambda_gm: x,
            mass: x,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_b", self.lambda_b),
            ("lambda_e", self.lambda_e),
            ("lambda_gm", self.lambda_gm),
            ("mass", self.mass),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} is not finite")));
            }
        }
        Ok(())
    }
}

/// Coefficients of the single-link electric operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ElectricSpectrum {
    /// 1 - P - P^dag, eigenvalue 1 - 2 cos(2 pi j / N) on character j.
    Cyclic,
    /// f_r couples the two reflection sectors at l = 0; f_l (l = 0..N) is
    /// the rotation energy and must satisfy f_l = f_{N-l}.
    Dihedral { f_r: f64, f_l: Vec<f64> },
}

impl ElectricSpectrum {
    pub fn canonical(group: &GroupSpec) -> Self {
        match group.kind() {
            GroupKind::Cyclic(_) => ElectricSpectrum::Cyclic,
            GroupKind::Dihedral(n) => ElectricSpectrum::Dihedral {
                f_r: 1.0,
                f_l: (0..n)
                    .map(|l| 1.0 - 2.0 * (2.0 * PI * l as f64 / n as f64).cos())
                    .collect(),
            },
        }
    }

    pub fn validate(&self, group: &GroupSpec) -> Result<()> {
        match (self, group.kind()) {
            (ElectricSpectrum::Cyclic, GroupKind::Cyclic(_)) => Ok(()),
            (ElectricSpectrum::Dihedral { f_r, f_l }, GroupKind::Dihedral(n)) => {
                if f_l.len() != n {
                    return Err(Error::InvalidArgument(format!(
                        "need {n} rotation coefficients, got {}",
                        f_l.len()
                    )));
                }
                if !f_r.is_finite() || f_l.iter().any(|f| !f.is_finite()) {
                    return Err(Error::InvalidArgument("non-finite electric coefficient".into()));
                }
                for l in 1..n {
                    if (f_l[l] - f_l[n - l]).abs() > 1e-12 * (1.0 + f_l[l].abs()) {
                        return Err(Error::InvalidArgument(format!(
                            "f_l must satisfy f_l = f_-l (l = {l})"
                        )));
                    }
                }
                Ok(())
            }
            _ => Err(Error::InvalidArgument(
                "electric spectrum does not match the group".into(),
            )),
        }
    }

    /// Single-link operator in the group-element basis (without lambda_E).
    pub fn link_matrix(&self, group: &GroupSpec) -> DMatrix<C64> {
        let g = group.order();
        match self {
            ElectricSpectrum::Cyclic => DMatrix::from_fn(g, g, |a, b| {
                let mut v = if a == b { 1.0 } else { 0.0 };
                if a == (b + 1) % g {
                    v -= 1.0;
                }
                if b == (a + 1) % g {
                    v -= 1.0;
                }
                C64::new(v, 0.0)
            }),
            ElectricSpectrum::Dihedral { f_r, f_l } => {
                let n = group.n();
                // angular-momentum basis |l, m>, same index encoding l + N m
                let h_lm = DMatrix::from_fn(g, g, |a, b| {
                    let (l, lp) = (a % n, b % n);
                    let mut v = 0.0;
                    if l == 0 && lp == 0 {
                        v += 0.5 * f_r;
                    }
                    if a == b {
                        v += f_l[l];
                    }
                    C64::new(v, 0.0)
                });
                // columns: |l, m> expanded in |p, m>
                let v = DMatrix::from_fn(g, g, |a, b| {
                    let (p, m) = (a % n, a / n);
                    let (l, mp) = (b % n, b / n);
                    if m == mp {
                        angular_overlap(l as i64, p as i64, n).conj()
                    } else {
                        ZERO
                    }
                });
                &v * h_lm * v.adjoint()
            }
        }
    }
}

/// Electric operator sum_j f(j) |jmn><jmn| from per-irrep coefficients,
/// in the group-element basis.
pub fn electric_from_irreps(group: &GroupSpec, f: &[f64]) -> DMatrix<C64> {
    let b = group.basis_change();
    let labels = group.rep_basis_labels();
    let d = DMatrix::from_fn(labels.len(), labels.len(), |a, c| {
        if a == c {
            C64::new(f[labels[a].0], 0.0)
        } else {
            ZERO
        }
    });
    &b * d * b.adjoint()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone)]
pub struct Model {
    group: GroupSpec,
    shape: LatticeShape,
    couplings: Couplings,
    electric: ElectricSpectrum,
    irrep: usize,
    layout: RegisterLayout,
    links: Vec<LinkId>,
    link_index: HashMap<LinkId, usize>,
}

impl Model {
    pub fn new(group: GroupSpec, shape: LatticeShape, couplings: Couplings) -> Result<Self> {
        let electric = ElectricSpectrum::canonical(&group);
        Self::with_spectrum(group, shape, couplings, electric, 0)
    }

    pub fn with_spectrum(
        group: GroupSpec,
        shape: LatticeShape,
        couplings: Couplings,
        electric: ElectricSpectrum,
        n_ancillas: usize,
    ) -> Result<Self> {
        couplings.validate()?;
        electric.validate(&group)?;
        let irrep = group.faithful_index();
        let links = shape.enumerate_links();
        let link_index = links.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let d_u = group.irreps()[irrep].dim;
        let layout = RegisterLayout::new(
            shape.n_vertices(),
            d_u,
            links.len(),
            n_ancillas,
            group.order(),
        )?;
        Ok(Self {
            group,
            shape,
            couplings,
            electric,
            irrep,
            layout,
            links,
            link_index,
        })
    }

    /// Copy of the model with `n` ancilla registers.
    pub fn with_ancillas(&self, n: usize) -> Result<Self> {
        let mut m = self.clone();
        m.layout = self.layout.with_ancillas(n)?;
        Ok(m)
    }

    pub fn with_couplings(&self, c: Couplings) -> Result<Self> {
        c.validate()?;
        let mut m = self.clone();
        m.couplings = c;
        Ok(m)
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    pub fn couplings(&self) -> &Couplings {
        &self.couplings
    }

    pub fn electric(&self) -> &ElectricSpectrum {
        &self.electric
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn links(&self) -> &[LinkId] {
        &self.links
    }

    pub fn d_u(&self) -> usize {
        self.group.irreps()[self.irrep].dim
    }

    pub fn irrep_index(&self) -> usize {
        self.irrep
    }

    /// Representation matrix D(g) of the matter/link irrep.
    pub fn rep(&self, g: usize) -> &DMatrix<C64> {
        &self.group.irreps()[self.irrep].matrices[g]
    }

    pub fn link_index(&self, link: LinkId) -> Result<usize> {
        self.link_index
            .get(&link)
            .copied()
            .ok_or_else(|| Error::InvalidLattice(format!("no link {link:?}")))
    }

    pub fn link_reg(&self, link: LinkId) -> Result<usize> {
        self.layout.link_reg(self.link_index(link)?)
    }

    pub fn mode(&self, vertex: usize, component: usize) -> usize {
        vertex * self.d_u() + component
    }

    /// max_j |f(j)| measured from the single-link electric operator.
    pub fn maxf(&self) -> f64 {
        self.electric
            .link_matrix(&self.group)
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |m, &l| m.max(l.abs()))
    }

    // ---- link operators -------------------------------------------------

    /// The d_U x d_U matrix of link operators U_mn, each diagonal in |g>.
    pub fn build_u(&self, link: LinkId) -> Result<Vec<Vec<LinearOperator>>> {
        let reg = self.link_reg(link)?;
        let d = self.d_u();
        Ok((0..d)
            .map(|m| {
                (0..d)
                    .map(|n| {
                        crate::state::register_diag_op(&self.layout, reg, |g| self.rep(g)[(m, n)])
                            .unwrap()
                    })
                    .collect()
            })
            .collect())
    }

    /// Theta^L_g |h> = |g^-1 h>, Theta^R_g |h> = |h g^-1>.
    pub fn theta_local(&self, link: LinkId, g: usize, side: Side) -> Result<LocalOp> {
        check_index("group element", g, self.group.order())?;
        let reg = self.link_reg(link)?;
        let gi = self.group.inv(g);
        let perm = (0..self.group.order())
            .map(|h| match side {
                Side::Left => self.group.mul(gi, h),
                Side::Right => self.group.mul(h, gi),
            })
            .collect();
        Ok(LocalOp::register_permutation(reg, perm))
    }

    pub fn build_theta(&self, link: LinkId, g: usize, side: Side) -> Result<LinearOperator> {
        let mut op = self.theta_local(link, g, side)?.to_operator(&self.layout);
        op.unitary = true;
        Ok(op)
    }

    /// Fock matrix of the staggered matter transformation at a vertex:
    /// Gamma(D(g)), times det D(g^-1) on odd vertices.
    pub fn matter_theta_block(&self, vertex: usize, g: usize) -> Result<DMatrix<C64>> {
        check_index("vertex", vertex, self.shape.n_vertices())?;
        check_index("group element", g, self.group.order())?;
        let mut blk = fock_matrix(self.rep(g));
        if self.shape.parity(vertex) == Parity::Odd {
            let det = self.rep(self.group.inv(g)).determinant();
            blk *= det;
        }
        Ok(blk)
    }

    pub fn build_matter_theta(&self, vertex: usize, g: usize) -> Result<LinearOperator> {
        let blk = self.matter_theta_block(vertex, g)?;
        Ok(LocalOp::vertex_block(&self.layout, vertex, None, vec![blk]).to_operator(&self.layout))
    }

    /// Factors of the Gauss operator Theta_g(x) (mutually commuting).
    pub fn gauss_local(&self, vertex: usize, g: usize) -> Result<Vec<LocalOp>> {
        let mut ops = Vec::new();
        for k in 0..self.shape.d() {
            if self.shape.step(vertex, k).is_some() {
                ops.push(self.theta_local(LinkId { vertex, dir: k }, g, Side::Left)?);
            }
            if let Some(prev) = self.shape.step_back(vertex, k) {
                // Theta^R_g^dag = Theta^R_{g^-1}: |h> -> |h g>
                let gi = self.group.inv(g);
                ops.push(self.theta_local(LinkId { vertex: prev, dir: k }, gi, Side::Right)?);
            }
        }
        let blk = self.matter_theta_block(vertex, g)?;
        ops.push(LocalOp::vertex_block(&self.layout, vertex, None, vec![blk.adjoint()]));
        Ok(ops)
    }

    pub fn build_gauss(&self, vertex: usize, g: usize) -> Result<LinearOperator> {
        let mut op = product_operator(&self.gauss_local(vertex, g)?, &self.layout);
        op.unitary = true;
        Ok(op)
    }

    // ---- Hamiltonians ---------------------------------------------------

    pub fn build_he(&self) -> LinearOperator {
        let h = self.electric.link_matrix(&self.group) * C64::new(self.couplings.lambda_e, 0.0);
        let ops: Vec<LocalOp> = (0..self.links.len())
            .map(|l| LocalOp::RegisterMatrix {
                reg: l,
                matrix: h.clone(),
            })
            .collect();
        let mut out = LinearOperator::from_rows(self.layout.dim(), |i, row| {
            let mut tmp = Vec::new();
            for op in &ops {
                op.row(&self.layout, i, &mut tmp);
                row.extend_from_slice(&tmp);
            }
        });
        out.hermitian = true;
        out
    }

    /// Plaquettes of the piece (parity of base vertex, plane).
    pub fn plaquettes_in_piece(&self, parity: Parity, plane: (usize, usize)) -> Vec<PlaquetteId> {
        self.shape
            .enumerate_plaquettes()
            .into_iter()
            .filter(|p| (p.k, p.l) == plane && self.shape.parity(p.vertex) == parity)
            .collect()
    }

    /// Diagonal value 2 Re chi(g_a g_b g_c^-1 g_d^-1) of one plaquette.
    pub fn plaquette_trace_values(&self) -> Vec<f64> {
        let chi: Vec<f64> = (0..self.group.order())
            .map(|g| 2.0 * self.rep(g).trace().re)
            .collect();
        chi
    }

    fn plaquette_diag(&self, plaqs: &[PlaquetteId]) -> LinearOperator {
        let chi = self.plaquette_trace_values();
        let regs: Vec<[usize; 4]> = plaqs
            .iter()
            .map(|p| {
                let ls = self.shape.plaquette_links(*p).unwrap();
                ls.map(|l| self.link_reg(l).unwrap())
            })
            .collect();
        let lb = self.couplings.lambda_b;
        let grp = &self.group;
        let diag = (0..self.layout.dim())
            .map(|i| {
                let mut v = 0.0;
                for r in &regs {
                    let g = r.map(|reg| self.layout.reg_value(i, reg));
                    let prod = grp.mul(grp.mul(g[0], g[1]), grp.mul(grp.inv(g[2]), grp.inv(g[3])));
                    v += chi[prod];
                }
                C64::new(lb * v, 0.0)
            })
            .collect();
        LinearOperator::diagonal(diag)
    }

    pub fn build_hb(&self) -> LinearOperator {
        self.plaquette_diag(&self.shape.enumerate_plaquettes())
    }

    pub fn build_hb_piece(&self, parity: Parity, plane: (usize, usize)) -> LinearOperator {
        self.plaquette_diag(&self.plaquettes_in_piece(parity, plane))
    }

    /// All (parity, plane) magnetic pieces, even parity first.
    pub fn hb_pieces(&self) -> Vec<(Parity, (usize, usize))> {
        let mut out = Vec::new();
        for parity in Parity::both() {
            for plane in planes(self.shape.d()) {
                out.push((parity, plane));
            }
        }
        out
    }

    pub fn build_hm(&self) -> LinearOperator {
        let mut phases = vec![0.0; self.layout.n_modes()];
        for v in 0..self.shape.n_vertices() {
            let s = self.shape.parity(v).sign() * self.couplings.mass;
            for c in 0..self.d_u() {
                phases[self.mode(v, c)] = s;
            }
        }
        let mask = self.layout.fermion_mask();
        LinearOperator::diagonal(
            (0..self.layout.dim())
                .map(|i| {
                    let bits = i & mask;
                    let e: f64 = (0..phases.len())
                        .filter(|m| bits >> m & 1 == 1)
                        .map(|m| phases[m])
                        .sum();
                    C64::new(e, 0.0)
                })
                .collect(),
        )
    }

    /// Links of the gauge-matter piece (parity of base vertex, direction).
    pub fn links_in_gm_piece(&self, parity: Parity, dir: usize) -> Vec<LinkId> {
        self.links
            .iter()
            .copied()
            .filter(|l| l.dir == dir && self.shape.parity(l.vertex) == parity)
            .collect()
    }

    /// All (parity, direction) gauge-matter pieces, even parity first.
    pub fn gm_pieces(&self) -> Vec<(Parity, usize)> {
        let mut out = Vec::new();
        for parity in Parity::both() {
            for k in 0..self.shape.d() {
                out.push((parity, k));
            }
        }
        out
    }

    fn gm_operator(&self, links: &[LinkId], with_u: bool) -> LinearOperator {
        let lam = self.couplings.lambda_gm;
        let d = self.d_u();
        let mask = self.layout.fermion_mask();
        let terms: Vec<(usize, usize, usize)> = links
            .iter()
            .map(|l| {
                let y = self.shape.step(l.vertex, l.dir).unwrap();
                (l.vertex, y, self.link_reg(*l).unwrap())
            })
            .collect();
        let mut out = LinearOperator::from_columns(self.layout.dim(), |j, col| {
            let bits = j & mask;
            let hi = j & !mask;
            for &(x, y, reg) in &terms {
                let g = self.layout.reg_value(j, reg);
                for m in 0..d {
                    for n in 0..d {
                        let u = if with_u {
                            self.rep(g)[(m, n)]
                        } else if m == n {
                            C64::new(1.0, 0.0)
                        } else {
                            ZERO
                        };
                        if u == ZERO {
                            continue;
                        }
                        let (xm, yn) = (self.mode(x, m), self.mode(y, n));
                        if let Some((nb, s)) = fermion_string(
                            bits,
                            &[(xm, FermionKind::Create), (yn, FermionKind::Annihilate)],
                        ) {
                            col.push((hi | nb, u * s * lam));
                        }
                        if let Some((nb, s)) = fermion_string(
                            bits,
                            &[(yn, FermionKind::Create), (xm, FermionKind::Annihilate)],
                        ) {
                            col.push((hi | nb, u.conj() * s * lam));
                        }
                    }
                }
            }
        });
        out.hermitian = true;
        out
    }

    pub fn build_hgm(&self) -> LinearOperator {
        self.gm_operator(&self.links, true)
    }

    pub fn build_hgm_piece(&self, parity: Parity, dir: usize) -> LinearOperator {
        self.gm_operator(&self.links_in_gm_piece(parity, dir), true)
    }

    pub fn build_hgm_link(&self, link: LinkId) -> Result<LinearOperator> {
        self.link_index(link)?;
        Ok(self.gm_operator(&[link], true))
    }

    /// Pure tunneling lambda_GM sum_m c_m^dag(x) c_m(x+k) + h.c. on the
    /// given links, without link operators.
    pub fn build_tunneling(&self, links: &[LinkId]) -> LinearOperator {
        self.gm_operator(links, false)
    }

    pub fn build_h(&self) -> LinearOperator {
        let parts = [self.build_hb(), self.build_he(), self.build_hgm(), self.build_hm()];
        LinearOperator::sum(self.layout.dim(), parts.iter())
    }

    // ---- states ----------------------------------------------------------

    /// Occupation bits of the Dirac sea (odd vertices filled).
    pub fn dirac_sea_bits(&self) -> usize {
        let mut bits = 0usize;
        for v in 0..self.shape.n_vertices() {
            if self.shape.parity(v) == Parity::Odd {
                for c in 0..self.d_u() {
                    bits |= 1 << self.mode(v, c);
                }
            }
        }
        bits
    }

    /// Dirac sea times the trivial-irrep state on every link; ancillas in
    /// the identity element.
    pub fn build_vacuum(&self) -> StateVector {
        let layout = &self.layout;
        let nl = layout.n_links();
        let amp = C64::new((self.group.order() as f64).powf(-(nl as f64) / 2.0), 0.0);
        let bits = self.dirac_sea_bits();
        let block = self.group.order().pow(nl as u32);
        let mut amps = vec![ZERO; layout.dim()];
        for r in 0..block {
            amps[(r << layout.n_modes()) | bits] = amp;
        }
        StateVector::from_amplitudes(layout, amps).unwrap()
    }

    /// max over vertices and elements of ||Theta_g(x) psi - psi||.
    pub fn gauge_violation(&self, state: &StateVector) -> Result<f64> {
        self.check_layout(state)?;
        let mut worst: f64 = 0.0;
        for v in 0..self.shape.n_vertices() {
            for g in 0..self.group.order() {
                let ops = self.gauss_local(v, g)?;
                let out = apply_all(&ops, &self.layout, state.amplitudes());
                let d: f64 = out
                    .iter()
                    .zip(state.amplitudes())
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(d);
            }
        }
        Ok(worst)
    }

    /// Projection onto the gauge-invariant subspace, renormalised.
    pub fn project_gauge_invariant(&self, state: &StateVector) -> Result<StateVector> {
        self.check_layout(state)?;
        let mut amps = state.amplitudes().to_vec();
        let scale = 1.0 / self.group.order() as f64;
        for v in 0..self.shape.n_vertices() {
            let mut acc = vec![ZERO; amps.len()];
            for g in 0..self.group.order() {
                let out = apply_all(&self.gauss_local(v, g)?, &self.layout, &amps);
                acc.iter_mut().zip(out).for_each(|(a, b)| *a += b * scale);
            }
            amps = acc;
        }
        StateVector::from_amplitudes(&self.layout, amps)
    }

    pub(crate) fn check_layout(&self, state: &StateVector) -> Result<()> {
        if state.layout() != &self.layout {
            return Err(Error::LayoutMismatch(
                "state layout differs from model layout".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::apply;

    fn model(kind: GroupKind, ext: &[usize]) -> Model {
        Model::new(
            GroupSpec::new(kind).unwrap(),
            LatticeShape::new(ext).unwrap(),
            Couplings::uniform(1.0),
        )
        .unwrap()
    }

    fn eigs(m: &DMatrix<C64>) -> Vec<f64> {
        let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn electric_single_link_spectra() {
        let z3 = GroupSpec::cyclic(3).unwrap();
        let e = eigs(&ElectricSpectrum::Cyclic.link_matrix(&z3));
        for (a, b) in e.iter().zip([-1.0, 2.0, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let d3 = GroupSpec::dihedral(3).unwrap();
        let spec = ElectricSpectrum::canonical(&d3);
        let e = eigs(&spec.link_matrix(&d3));
        let (f0, f1, fr) = (-1.0, 2.0, 1.0);
        let mut want = vec![f0 + fr, f0, f1, f1, f1, f1];
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in e.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dihedral_electric_matches_irrep_form() {
        for n in [3usize, 5] {
            let g = GroupSpec::dihedral(n).unwrap();
            let f_l: Vec<f64> = (0..n).map(|l| 0.3 + (l.min(n - l) as f64).powi(2)).collect();
            let f_r = 0.7;
            let spec = ElectricSpectrum::Dihedral { f_r, f_l: f_l.clone() };
            // per-irrep coefficients: trivial = f_0 + f_r, sign = f_0, k -> f_k
            let mut f = vec![f_l[0] + f_r, f_l[0]];
            for k in 1..=(n - 1) / 2 {
                f.push(f_l[k]);
            }
            let a = spec.link_matrix(&g);
            let b = electric_from_irreps(&g, &f);
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn electric_symmetry_enforced() {
        let g = GroupSpec::dihedral(5).unwrap();
        let bad = ElectricSpectrum::Dihedral { f_r: 1.0, f_l: vec![0.0, 1.0, 2.0, 3.0, 4.0] };
        assert!(bad.validate(&g).is_err());
    }

    #[test]
    fn lambda_e_zero_gives_zero() {
        let m = model(GroupKind::Cyclic(3), &[2]).with_couplings(Couplings { lambda_e: 0.0, ..Couplings::uniform(1.0) }).unwrap();
        assert_eq!(m.build_he().nnz(), 0);
        let m = m.with_couplings(Couplings { lambda_gm: 0.0, ..Couplings::uniform(1.0) }).unwrap();
        assert_eq!(m.build_hgm().nnz(), 0);
    }

    #[test]
    fn u_matrix_unitarity_and_adjoint() {
        for kind in [GroupKind::Cyclic(3), GroupKind::Dihedral(3)] {
            let m = model(kind, &[2]);
            let link = m.links()[0];
            let u = m.build_u(link).unwrap();
            let d = m.d_u();
            for a in 0..d {
                for b in 0..d {
                    let mut acc = LinearOperator::zeros(m.layout().dim());
                    for k in 0..d {
                        acc = acc.add(&u[a][k].matmul(&u[b][k].adjoint()));
                    }
                    let want = if a == b { LinearOperator::identity(m.layout().dim()) } else { LinearOperator::zeros(m.layout().dim()) };
                    assert!(acc.max_abs_diff(&want) < 1e-12);
                }
            }
            // vacuum annihilated by nontrivial-irrep entries
            let vac = m.build_vacuum();
            for a in 0..d {
                for b in 0..d {
                    assert!(vac.expectation(&u[a][b]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn theta_conjugation_rules() {
        let m = model(GroupKind::Dihedral(3), &[2]);
        let link = m.links()[0];
        let u = m.build_u(link).unwrap();
        for g in 0..6 {
            let tl = m.build_theta(link, g, Side::Left).unwrap();
            let tr = m.build_theta(link, g, Side::Right).unwrap();
            let d = m.rep(g);
            for a in 0..2 {
                for b in 0..2 {
                    let lhs = tl.matmul(&u[a][b]).matmul(&tl.adjoint());
                    let mut rhs = LinearOperator::zeros(m.layout().dim());
                    for c in 0..2 {
                        rhs = rhs.add_scaled(&u[c][b], d[(a, c)]);
                    }
                    assert!(lhs.max_abs_diff(&rhs) < 1e-12);
                    let lhs = tr.matmul(&u[a][b]).matmul(&tr.adjoint());
                    let mut rhs = LinearOperator::zeros(m.layout().dim());
                    for c in 0..2 {
                        rhs = rhs.add_scaled(&u[a][c], d[(c, b)]);
                    }
                    assert!(lhs.max_abs_diff(&rhs) < 1e-12);
                }
            }
            for h in 0..6 {
                let th = m.build_theta(link, h, Side::Left).unwrap();
                let trh = m.build_theta(link, h, Side::Right).unwrap();
                // left action composes in reverse order
                let prod = tl.matmul(&th);
                let hg = m.group().mul(h, g);
                assert!(prod.max_abs_diff(&m.build_theta(link, hg, Side::Left).unwrap()) < 1e-15);
                assert!(tl.commutator(&trh).max_abs() < 1e-15);
            }
        }
        let e = m.build_theta(link, 0, Side::Left).unwrap();
        assert!(e.max_abs_diff(&LinearOperator::identity(m.layout().dim())) == 0.0);
    }

    #[test]
    fn matter_theta_properties() {
        let m = model(GroupKind::Dihedral(3), &[2]);
        // vertex 1 is odd; reflection (0,1) has D = sigma_x, det = -1
        let refl = m.group().encode(0, 1);
        let blk = m.matter_theta_block(1, refl).unwrap();
        let sx = fock_matrix(m.rep(refl));
        assert!((blk + sx).norm() < 1e-14);
        let e = m.build_matter_theta(1, 0).unwrap();
        assert!(e.max_abs_diff(&LinearOperator::identity(m.layout().dim())) < 1e-15);
        for v in 0..2 {
            for g in 0..6 {
                for h in 0..6 {
                    let a = m.matter_theta_block(v, g).unwrap() * m.matter_theta_block(v, h).unwrap();
                    let b = m.matter_theta_block(v, m.group().mul(g, h)).unwrap();
                    assert!((a - b).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gauss_operators() {
        let m = model(GroupKind::Dihedral(3), &[2]);
        let vac = m.build_vacuum();
        let h = m.build_hgm();
        for v in 0..2 {
            for g in 0..6 {
                let t = m.build_gauss(v, g).unwrap();
                let out = apply(&t, &vac).unwrap();
                assert!(out.distance(&vac) < 1e-12);
                assert!(h.commutator(&t).max_abs() < 1e-12);
                for k in 0..6 {
                    let tk = m.build_gauss(v, k).unwrap();
                    let kg = m.group().mul(k, g);
                    assert!(t.matmul(&tk).max_abs_diff(&m.build_gauss(v, kg).unwrap()) < 1e-12);
                }
            }
        }
        assert!(m.build_gauss(0, 0).unwrap().max_abs_diff(&LinearOperator::identity(m.layout().dim())) < 1e-15);
    }

    #[test]
    fn magnetic_hamiltonian() {
        let m = model(GroupKind::Cyclic(2), &[2, 2]);
        let hb = m.build_hb();
        assert!(m.build_vacuum().expectation(&hb).norm() < 1e-12);
        let e: Vec<f64> = hb.diagonal_values().iter().map(|z| z.re).collect();
        assert!(e.iter().all(|&x| (x.abs() - 2.0).abs() < 1e-12));
        // Z2 single plaquette: H_B = 2 lambda_B prod of sigma_z in the P basis
        let l = m.layout();
        for i in 0..l.dim() {
            let s: usize = (0..4).map(|r| l.reg_value(i, r)).sum();
            let want = if s % 2 == 0 { 2.0 } else { -2.0 };
            assert!((e[i] - want).abs() < 1e-12);
        }
        let m3 = model(GroupKind::Cyclic(2), &[2, 2, 2]);
        let pieces: Vec<_> = m3.hb_pieces().iter().map(|&(p, pl)| m3.build_hb_piece(p, pl)).collect();
        for a in &pieces {
            assert!(a.is_diagonal());
        }
        let total = LinearOperator::sum(m3.layout().dim(), pieces.iter());
        assert!(total.max_abs_diff(&m3.build_hb()) < 1e-12);
        assert!(m.build_hb().commutator(&m.build_hb_piece(Parity::Even, (0, 1))).max_abs() == 0.0);
        assert_eq!(model(GroupKind::Cyclic(2), &[3]).build_hb().nnz(), 0);
    }

    #[test]
    fn mass_hamiltonian() {
        let m = model(GroupKind::Dihedral(3), &[2, 2]);
        let hm = m.build_hm();
        let vac = m.build_vacuum();
        let odd = (0..4).filter(|&v| m.shape().parity(v) == Parity::Odd).count();
        assert!((vac.expectation(&hm).re + (odd * m.d_u()) as f64).abs() < 1e-12);
        assert_eq!(hm.get(0, 0), ZERO);
        assert!((hm.get(1, 1).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn z2_single_link_gm_spectrum() {
        let m = model(GroupKind::Cyclic(2), &[2]);
        let h = m.build_hgm();
        let mut e = eigs(&h.to_dense());
        e.iter_mut().for_each(|x| *x = (*x * 1e9).round() / 1e9);
        let zeros = e.iter().filter(|x| x.abs() < 1e-9).count();
        assert_eq!(zeros, 4);
        assert_eq!(e.iter().filter(|&&x| (x - 1.0).abs() < 1e-9).count(), 2);
        assert_eq!(e.iter().filter(|&&x| (x + 1.0).abs() < 1e-9).count(), 2);
    }

    #[test]
    fn pieces_commute_with_gauss() {
        let m = model(GroupKind::Cyclic(3), &[2, 2]);
        let mut parts = vec![m.build_he(), m.build_hm(), m.build_hb()];
        for (p, k) in m.gm_pieces() {
            parts.push(m.build_hgm_piece(p, k));
        }
        for v in 0..4 {
            for g in 0..3 {
                let t = m.build_gauss(v, g).unwrap();
                for h in &parts {
                    assert!(h.commutator(&t).max_abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn vacuum_properties() {
        for kind in [GroupKind::Cyclic(2), GroupKind::Cyclic(3), GroupKind::Dihedral(3)] {
            let m = model(kind, &[2, 2]);
            let vac = m.build_vacuum();
            assert!(m.gauge_violation(&vac).unwrap() < 1e-12);
            assert!(vac.expectation(&m.build_hb()).norm() < 1e-12);
            // link reduced state: uniform over the group
            let l = m.layout();
            let mut probs = vec![0.0; m.group().order()];
            for (i, a) in vac.amplitudes().iter().enumerate() {
                probs[l.reg_value(i, 0)] += a.norm_sqr();
            }
            for p in probs {
                assert!((p - 1.0 / m.group().order() as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cyclic_vacuum_is_ground_state_of_local_terms() {
        let m = model(GroupKind::Cyclic(3), &[2, 2]);
        let h = m.build_he().add(&m.build_hm());
        let e0 = m.build_vacuum().expectation(&h).re;
        // H_E is not diagonal; compare with the exact ground energy
        let ev = eigs(&h.to_dense());
        assert!((e0 - ev[0]).abs() < 1e-10, "{e0} vs {}", ev[0]);
    }
}
