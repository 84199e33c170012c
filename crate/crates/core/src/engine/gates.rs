//! Gate sequences: ancilla entanglers, plaquette isometries, U_W
//! conjugations, tunneling windows and the local electric and mass gates.
//!
//! Every sequence is a `Vec<LocalOp>` applied front to back.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::C64;
use crate::hamiltonian::Model;
use crate::lattice::{LinkId, Parity, PlaquetteId};
use crate::linalg::{expm_hermitian, LinearOperator};
use crate::local::{fock_matrix, product_operator, LocalOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GmVariant {
    /// U_W on the fermions controlled directly by the link register.
    Direct,
    /// U_W controlled by an ancilla copy of the link register.
    Mediated,
}

/// Vertices of the given parity that are the base of at least one link or
/// plaquette. Each is a cell that can own an ancilla while its parity is
/// active.
pub fn cells(model: &Model, parity: Parity) -> Vec<usize> {
    let shape = model.shape();
    (0..shape.n_vertices())
        .filter(|&v| shape.parity(v) == parity && (0..shape.d()).any(|k| shape.step(v, k).is_some()))
        .collect()
}

/// One ancilla per active cell: the larger of the two parity classes.
pub fn default_slots(model: &Model) -> usize {
    Parity::both()
        .iter()
        .map(|&p| cells(model, p).len())
        .max()
        .unwrap_or(0)
        .max(1)
}

/// |g>_link |h>_anc -> |g>_link |g h>_anc (forward) or |g^-1 h> (inverse).
pub fn entangler(model: &Model, link: LinkId, ancilla: usize, inverse: bool) -> Result<LocalOp> {
    let control = model.link_reg(link)?;
    let target = model.layout().ancilla_reg(ancilla)?;
    let grp = model.group();
    let n = grp.order();
    let table = (0..n)
        .map(|g| (0..n).map(|h| grp.mul(g, h)).collect())
        .collect();
    let op = LocalOp::controlled_permutation(control, target, table);
    Ok(if inverse { op.adjoint() } else { op })
}

/// Entanglers creating the ancilla product g_a g_b g_c^-1 g_d^-1 for the
/// role links (a, b, c, d), in application order.
pub fn isometry_for_links(model: &Model, links: [LinkId; 4], ancilla: usize) -> Result<Vec<LocalOp>> {
    let [a, b, c, d] = links;
    Ok(vec![
        entangler(model, d, ancilla, true)?,
        entangler(model, c, ancilla, true)?,
        entangler(model, b, ancilla, false)?,
        entangler(model, a, ancilla, false)?,
    ])
}

/// Plaquette isometry of a plaquette in its cell's role orientation.
pub fn plaquette_isometry(model: &Model, plaq: PlaquetteId, ancilla: usize) -> Result<Vec<LocalOp>> {
    let links = model.shape().role_links(plaq)?;
    isometry_for_links(model, links, ancilla)
}

/// Isometry for a role set of a three-dimensional cube, given as role
/// numbers 1..=9 (e.g. [5, 6, 7, 1]).
pub fn cube_isometry(model: &Model, cube: usize, roles: [usize; 4], ancilla: usize) -> Result<Vec<LocalOp>> {
    let table = model.shape().cube_link_roles(cube)?;
    let mut links = [LinkId { vertex: 0, dir: 0 }; 4];
    for (i, &r) in roles.iter().enumerate() {
        if !(1..=9).contains(&r) {
            return Err(Error::InvalidArgument(format!("cube role {r} not in 1..=9")));
        }
        links[i] = table[r - 1];
    }
    isometry_for_links(model, links, ancilla)
}

fn inverse_sequence(ops: &[LocalOp]) -> Vec<LocalOp> {
    ops.iter().rev().map(|o| o.adjoint()).collect()
}

/// exp(-i tau lambda_B 2 Re chi(h)) on an ancilla holding h.
pub fn ancilla_plaquette_phase(model: &Model, ancilla: usize, tau: f64) -> Result<LocalOp> {
    let reg = model.layout().ancilla_reg(ancilla)?;
    let lb = model.couplings().lambda_b;
    let values = model
        .plaquette_trace_values()
        .iter()
        .map(|&c| C64::from_polar(1.0, -tau * lb * c))
        .collect();
    Ok(LocalOp::RegisterDiag { reg, values })
}

fn check_slots(model: &Model, slots: usize) -> Result<()> {
    if slots == 0 || model.layout().n_ancillas() < slots {
        return Err(Error::NoAncilla(format!(
            "{slots} ancilla slots requested, layout has {}",
            model.layout().n_ancillas()
        )));
    }
    Ok(())
}

/// Gate sequence realising exp(-i tau H_B,piece) through ancilla-held
/// plaquette products; the cells are processed in batches of `slots`.
pub fn plaquette_piece_ops(
    model: &Model,
    parity: Parity,
    plane: (usize, usize),
    tau: f64,
    slots: usize,
) -> Result<Vec<LocalOp>> {
    let plaqs = model.plaquettes_in_piece(parity, plane);
    if plaqs.is_empty() {
        return Ok(Vec::new());
    }
    check_slots(model, slots)?;
    let mut ops = Vec::new();
    for batch in plaqs.chunks(slots) {
        let mut create = Vec::new();
        for (s, p) in batch.iter().enumerate() {
            create.extend(plaquette_isometry(model, *p, s)?);
        }
        ops.extend(create.iter().cloned());
        for s in 0..batch.len() {
            ops.push(ancilla_plaquette_phase(model, s, tau)?);
        }
        ops.extend(inverse_sequence(&create));
    }
    Ok(ops)
}

pub fn plaquette_substep(model: &Model, parity: Parity, plane: (usize, usize), tau: f64) -> Result<LinearOperator> {
    let slots = model.layout().n_ancillas().max(1);
    let ops = plaquette_piece_ops(model, parity, plane, tau, slots)?;
    Ok(product_operator(&ops, model.layout()))
}

/// Fock blocks Gamma(D(g)) (base vertex) or Gamma(D(g)^dag) (end vertex).
fn uw_blocks(model: &Model, link: LinkId, vertex: usize) -> Result<Vec<DMatrix<C64>>> {
    let end = model.shape().step(link.vertex, link.dir);
    let at_base = vertex == link.vertex;
    if !at_base && end != Some(vertex) {
        return Err(Error::InvalidArgument(format!(
            "vertex {vertex} is not adjacent to link {link:?}"
        )));
    }
    Ok((0..model.group().order())
        .map(|g| {
            let d = model.rep(g);
            if at_base {
                fock_matrix(d)
            } else {
                fock_matrix(&d.adjoint())
            }
        })
        .collect())
}

/// U_W = exp(i Z_mn c_m^dag c_n) with Z = -i log U, controlled by the link
/// register. At the base vertex it maps c_n^dag -> c_m^dag U_mn, at the end
/// vertex c_m -> U_mn c_n.
pub fn build_uw_local(model: &Model, vertex: usize, link: LinkId) -> Result<LocalOp> {
    let blocks = uw_blocks(model, link, vertex)?;
    let reg = model.link_reg(link)?;
    Ok(LocalOp::vertex_block(model.layout(), vertex, Some(reg), blocks))
}

pub fn build_uw(model: &Model, vertex: usize, link: LinkId) -> Result<LinearOperator> {
    let mut op = build_uw_local(model, vertex, link)?.to_operator(model.layout());
    op.unitary = true;
    Ok(op)
}

/// U_W read from an ancilla that holds a copy of the link element.
pub fn build_uw_from_ancilla(model: &Model, vertex: usize, link: LinkId, ancilla: usize) -> Result<LocalOp> {
    let blocks = uw_blocks(model, link, vertex)?;
    let reg = model.layout().ancilla_reg(ancilla)?;
    Ok(LocalOp::vertex_block(model.layout(), vertex, Some(reg), blocks))
}

/// exp(-i tau lambda_GM sum_m (c_m^dag(x) c_m(x+k) + h.c.)) for the links.
pub fn tunneling(model: &Model, links: &[LinkId], tau: f64) -> Result<LocalOp> {
    let mut pairs = Vec::new();
    for l in links {
        let y = model
            .shape()
            .step(l.vertex, l.dir)
            .ok_or_else(|| Error::InvalidLattice(format!("no link {l:?}")))?;
        for m in 0..model.d_u() {
            pairs.push((model.mode(l.vertex, m), model.mode(y, m)));
        }
    }
    Ok(LocalOp::Hopping {
        pairs,
        theta: tau * model.couplings().lambda_gm,
    })
}

/// Gate sequence realising exp(-i tau H_GM,piece).
pub fn gm_piece_ops(
    model: &Model,
    parity: Parity,
    dir: usize,
    tau: f64,
    variant: GmVariant,
    slots: usize,
) -> Result<Vec<LocalOp>> {
    let links = model.links_in_gm_piece(parity, dir);
    if links.is_empty() {
        return Ok(Vec::new());
    }
    let mut ops = Vec::new();
    match variant {
        GmVariant::Direct => {
            for l in &links {
                ops.push(build_uw_local(model, l.vertex, *l)?.adjoint());
            }
            ops.push(tunneling(model, &links, tau)?);
            for l in &links {
                ops.push(build_uw_local(model, l.vertex, *l)?);
            }
        }
        GmVariant::Mediated => {
            check_slots(model, slots)?;
            for batch in links.chunks(slots) {
                for (s, l) in batch.iter().enumerate() {
                    ops.push(entangler(model, *l, s, false)?);
                }
                for (s, l) in batch.iter().enumerate() {
                    ops.push(build_uw_from_ancilla(model, l.vertex, *l, s)?.adjoint());
                }
                ops.push(tunneling(model, batch, tau)?);
                for (s, l) in batch.iter().enumerate() {
                    ops.push(build_uw_from_ancilla(model, l.vertex, *l, s)?);
                }
                for (s, l) in batch.iter().enumerate() {
                    ops.push(entangler(model, *l, s, true)?);
                }
            }
        }
    }
    Ok(ops)
}

pub fn gm_substep(model: &Model, parity: Parity, dir: usize, tau: f64, variant: GmVariant) -> Result<LinearOperator> {
    let slots = model.layout().n_ancillas().max(1);
    let ops = gm_piece_ops(model, parity, dir, tau, variant, slots)?;
    Ok(product_operator(&ops, model.layout()))
}

/// exp(-i tau H_E) as one single-register unitary per link.
pub fn electric_ops(model: &Model, tau: f64) -> Vec<LocalOp> {
    let h = model.electric().link_matrix(model.group()) * C64::new(model.couplings().lambda_e, 0.0);
    let u = expm_hermitian(&h, tau);
    (0..model.links().len())
        .map(|l| LocalOp::RegisterMatrix {
            reg: l,
            matrix: u.clone(),
        })
        .collect()
}

/// exp(-i tau H_M) as a diagonal phase on the occupations.
pub fn mass_op(model: &Model, tau: f64) -> LocalOp {
    let mut phases = vec![0.0; model.layout().n_modes()];
    let shape = model.shape();
    for v in 0..shape.n_vertices() {
        for c in 0..model.d_u() {
            phases[model.mode(v, c)] = tau * model.couplings().mass * shape.parity(v).sign();
        }
    }
    LocalOp::ModePhase { phases }
}

pub fn local_substeps(model: &Model, tau: f64) -> (LinearOperator, LinearOperator) {
    let we = product_operator(&electric_ops(model, tau), model.layout());
    let wm = mass_op(model, tau).to_operator(model.layout());
    (we, wm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;
    use crate::hamiltonian::Couplings;
    use crate::lattice::LatticeShape;
    use crate::linalg::expm_apply;
    use crate::local::apply_all;
    use crate::state::{
        ancilla_diag_op, ancilla_state_fidelity, fermion_op, norm, FermionKind, StateVector,
    };

    fn model(g: GroupSpec, ext: &[usize], anc: usize) -> Model {
        Model::new(g, LatticeShape::new(ext).unwrap(), Couplings::uniform(0.7))
            .unwrap()
            .with_ancillas(anc)
            .unwrap()
    }

    /// Random normalised amplitudes with every ancilla in the identity.
    fn ancilla_ref_vector(m: &Model, seed: u64) -> Vec<C64> {
        let l = m.layout();
        let mut v = StateVector::random(l, seed).into_amplitudes();
        for (i, a) in v.iter_mut().enumerate() {
            if (0..l.n_ancillas()).any(|s| l.reg_value(i, l.ancilla_reg(s).unwrap()) != 0) {
                *a = C64::new(0.0, 0.0);
            }
        }
        let n = norm(&v);
        v.iter_mut().for_each(|a| *a /= n);
        v
    }

    fn diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn entangler_copies_link_into_ancilla() {
        let m = model(GroupSpec::dihedral(3).unwrap(), &[2], 1);
        let l = m.layout();
        let link = m.links()[0];
        let e = entangler(&m, link, 0, false).unwrap();
        let ei = entangler(&m, link, 0, true).unwrap();
        for g in 0..6 {
            for h in 0..6 {
                let i = l.index(0, &[g, h]);
                let mut x = vec![C64::new(0.0, 0.0); l.dim()];
                x[i] = C64::new(1.0, 0.0);
                let y = e.apply(l, &x);
                let want = l.index(0, &[g, m.group().mul(g, h)]);
                assert!((y[want] - 1.0).norm() < 1e-14);
                assert!(diff(&ei.apply(l, &y), &x) < 1e-14);
            }
        }
    }

    #[test]
    fn stator_relation_on_link_ancilla_pair() {
        // U~_mn S = S U_mn with S = entangler acting on |e~>.
        for g in [GroupSpec::cyclic(2).unwrap(), GroupSpec::cyclic(3).unwrap(), GroupSpec::dihedral(3).unwrap()] {
            let m = model(g, &[2], 1);
            let l = m.layout();
            let link = m.links()[0];
            let s = entangler(&m, link, 0, false).unwrap();
            let u = m.build_u(link).unwrap();
            for a in 0..m.d_u() {
                for b in 0..m.d_u() {
                    let ut = ancilla_diag_op(l, 0, |h| m.rep(h)[(a, b)]).unwrap();
                    let x = ancilla_ref_vector(&m, 11 + (a * 3 + b) as u64);
                    let lhs = ut.matvec(&s.apply(l, &x));
                    let rhs = s.apply(l, &u[a][b].matvec(&x));
                    assert!(diff(&lhs, &rhs) < 1e-12);
                }
            }
        }
    }

    fn check_eigenoperator(m: &Model, seeds: std::ops::Range<u64>) {
        // Tr(U~ + U~^dag) S_p = S_p Tr(U_1 U_2 U_3^dag U_4^dag + h.c.)
        let l = m.layout();
        let p = m.shape().enumerate_plaquettes()[0];
        let iso = plaquette_isometry(m, p, 0).unwrap();
        let chi = m.plaquette_trace_values();
        let anc = ancilla_diag_op(l, 0, |h| C64::new(chi[h], 0.0)).unwrap();
        let hb = m
            .with_couplings(Couplings { lambda_b: 1.0, ..*m.couplings() })
            .unwrap()
            .build_hb();
        for seed in seeds {
            let x = ancilla_ref_vector(m, seed);
            let lhs = anc.matvec(&apply_all(&iso, l, &x));
            let rhs = apply_all(&iso, l, &hb.matvec(&x));
            assert!(diff(&lhs, &rhs) < 1e-12);
        }
    }

    #[test]
    fn plaquette_eigenoperator_z2() {
        check_eigenoperator(&model(GroupSpec::cyclic(2).unwrap(), &[2, 2], 1), 0..4);
    }

    #[test]
    fn plaquette_eigenoperator_d3() {
        check_eigenoperator(&model(GroupSpec::dihedral(3).unwrap(), &[2, 2], 1), 0..2);
    }

    #[test]
    fn isometry_keeps_identity_links_trivial() {
        let m = model(GroupSpec::dihedral(3).unwrap(), &[2, 2], 1);
        let l = m.layout();
        let iso = plaquette_isometry(&m, m.shape().enumerate_plaquettes()[0], 0).unwrap();
        let mut x = vec![C64::new(0.0, 0.0); l.dim()];
        x[l.index(5, &[0; 5])] = C64::new(1.0, 0.0);
        assert!(diff(&apply_all(&iso, l, &x), &x) < 1e-15);
    }

    #[test]
    fn magnetic_substeps_reproduce_exact_evolution() {
        let m = model(GroupSpec::cyclic(2).unwrap(), &[3, 2], 2);
        let l = m.layout();
        let tau = 0.37;
        let mut ops = Vec::new();
        for (par, plane) in m.hb_pieces() {
            ops.extend(plaquette_piece_ops(&m, par, plane, tau, 2).unwrap());
        }
        let hb = m.build_hb().diagonal_values();
        let x = ancilla_ref_vector(&m, 3);
        let got = apply_all(&ops, l, &x);
        let want: Vec<C64> = x
            .iter()
            .zip(&hb)
            .map(|(a, h)| a * C64::from_polar(1.0, -tau * h.re))
            .collect();
        assert!(diff(&got, &want) < 1e-12);
        let s = StateVector::from_amplitudes(l, got).unwrap();
        assert!((ancilla_state_fidelity(&s, &[0, 0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_slot_batches_match_parallel_slots() {
        let m = model(GroupSpec::cyclic(3).unwrap(), &[3, 2], 2);
        let x = ancilla_ref_vector(&m, 8);
        for (par, plane) in m.hb_pieces() {
            let a = apply_all(&plaquette_piece_ops(&m, par, plane, 0.4, 1).unwrap(), m.layout(), &x);
            let b = apply_all(&plaquette_piece_ops(&m, par, plane, 0.4, 2).unwrap(), m.layout(), &x);
            assert!(diff(&a, &b) < 1e-12);
        }
    }

    #[test]
    fn zero_duration_substeps_are_identity() {
        let m = model(GroupSpec::dihedral(3).unwrap(), &[2], 1);
        let x = ancilla_ref_vector(&m, 1);
        for v in [GmVariant::Direct, GmVariant::Mediated] {
            let y = apply_all(&gm_piece_ops(&m, Parity::Even, 0, 0.0, v, 1).unwrap(), m.layout(), &x);
            assert!(diff(&x, &y) < 1e-13);
        }
        let m2 = model(GroupSpec::cyclic(2).unwrap(), &[2, 2], 1);
        let x2 = ancilla_ref_vector(&m2, 2);
        let y2 = apply_all(&plaquette_piece_ops(&m2, Parity::Even, (0, 1), 0.0, 1).unwrap(), m2.layout(), &x2);
        assert!(diff(&x2, &y2) < 1e-13);
    }

    #[test]
    fn no_ancilla_is_an_error() {
        let m = model(GroupSpec::cyclic(2).unwrap(), &[2, 2], 0);
        assert!(matches!(
            plaquette_piece_ops(&m, Parity::Even, (0, 1), 0.1, 1),
            Err(Error::NoAncilla(_))
        ));
        assert!(entangler(&m, m.links()[0], 0, false).is_err());
    }

    #[test]
    fn uw_conjugation_identity() {
        for g in [GroupSpec::cyclic(3).unwrap(), GroupSpec::dihedral(3).unwrap()] {
            let m = model(g, &[2], 0);
            let l = m.layout();
            let link = m.links()[0];
            let u = m.build_u(link).unwrap();
            let d = m.d_u();
            // Base vertex: U_W psi_n^dag U_W^dag = psi_m^dag U_mn.
            let w = build_uw(&m, 0, link).unwrap();
            assert!(w.unitarity_deviation() < 1e-12);
            for n in 0..d {
                let lhs = w.matmul(&fermion_op(l, 0, n, FermionKind::Create).unwrap()).matmul(&w.adjoint());
                let mut rhs = LinearOperator::zeros(l.dim());
                for mm in 0..d {
                    rhs = rhs.add(&fermion_op(l, 0, mm, FermionKind::Create).unwrap().matmul(&u[mm][n]));
                }
                assert!(lhs.max_abs_diff(&rhs) < 1e-12);
            }
            // End vertex: U_W psi_m U_W^dag = U_mn psi_n.
            let w = build_uw(&m, 1, link).unwrap();
            for mm in 0..d {
                let lhs = w
                    .matmul(&fermion_op(l, 1, mm, FermionKind::Annihilate).unwrap())
                    .matmul(&w.adjoint());
                let mut rhs = LinearOperator::zeros(l.dim());
                for n in 0..d {
                    rhs = rhs.add(&u[mm][n].matmul(&fermion_op(l, 1, n, FermionKind::Annihilate).unwrap()));
                }
                assert!(lhs.max_abs_diff(&rhs) < 1e-12);
            }
        }
    }

    #[test]
    fn uw_rejects_distant_vertex() {
        let m = model(GroupSpec::cyclic(2).unwrap(), &[3], 0);
        assert!(build_uw(&m, 2, m.links()[0]).is_err());
    }

    #[test]
    fn uw_trivial_on_identity_link() {
        let m = model(GroupSpec::dihedral(3).unwrap(), &[2], 0);
        let l = m.layout();
        let w = build_uw_local(&m, 0, m.links()[0]).unwrap();
        for bits in 0..16 {
            let mut x = vec![C64::new(0.0, 0.0); l.dim()];
            x[l.index(bits, &[0])] = C64::new(1.0, 0.0);
            assert!(diff(&w.apply(l, &x), &x) < 1e-13);
        }
    }

    #[test]
    fn direct_and_mediated_gm_agree_with_exact() {
        let m = model(GroupSpec::dihedral(3).unwrap(), &[2], 1);
        let l = m.layout();
        let tau = 0.41;
        let h = m.build_hgm_piece(Parity::Even, 0);
        for seed in 0..3 {
            let x = ancilla_ref_vector(&m, seed);
            let want = expm_apply(&h, tau, &x, 1024);
            let d = apply_all(&gm_piece_ops(&m, Parity::Even, 0, tau, GmVariant::Direct, 1).unwrap(), l, &x);
            let md = apply_all(&gm_piece_ops(&m, Parity::Even, 0, tau, GmVariant::Mediated, 1).unwrap(), l, &x);
            assert!(diff(&d, &want) < 1e-10);
            assert!(diff(&md, &want) < 1e-10);
            let s = StateVector::from_amplitudes(l, md).unwrap();
            assert!((ancilla_state_fidelity(&s, &[0]).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gm_pieces_match_exact_on_2d_z2() {
        let m = model(GroupSpec::cyclic(2).unwrap(), &[2, 2], 0);
        let x = StateVector::random(m.layout(), 4).into_amplitudes();
        for (par, dir) in m.gm_pieces() {
            let want = expm_apply(&m.build_hgm_piece(par, dir), 0.3, &x, 1024);
            let got = apply_all(&gm_piece_ops(&m, par, dir, 0.3, GmVariant::Direct, 1).unwrap(), m.layout(), &x);
            assert!(diff(&got, &want) < 1e-10);
        }
    }

    #[test]
    fn gm_substep_conserves_fermion_number() {
        let m = model(GroupSpec::dihedral(3).unwrap(), &[2], 1);
        let l = m.layout();
        let w = gm_substep(&m, Parity::Even, 0, 0.5, GmVariant::Mediated).unwrap();
        let n = LinearOperator::diagonal(
            (0..l.dim())
                .map(|i| C64::new((i & l.fermion_mask()).count_ones() as f64, 0.0))
                .collect(),
        );
        assert!(w.commutator(&n).max_abs() < 1e-12);
    }

    #[test]
    fn substeps_preserve_gauge_invariance() {
        let m = model(GroupSpec::cyclic(3).unwrap(), &[2, 2], 1);
        let l = m.layout();
        let x = ancilla_ref_vector(&m, 21);
        let x = m
            .project_gauge_invariant(&StateVector::from_amplitudes(l, x).unwrap())
            .unwrap();
        let mut all = Vec::new();
        for (par, plane) in m.hb_pieces() {
            all.push(plaquette_piece_ops(&m, par, plane, 0.3, 1).unwrap());
        }
        for (par, dir) in m.gm_pieces() {
            all.push(gm_piece_ops(&m, par, dir, 0.3, GmVariant::Mediated, 1).unwrap());
        }
        all.push(electric_ops(&m, 0.3));
        all.push(vec![mass_op(&m, 0.3)]);
        for ops in all {
            let y = StateVector::from_amplitudes(l, apply_all(&ops, l, x.amplitudes())).unwrap();
            assert!(m.gauge_violation(&y).unwrap() < 1e-10);
        }
    }

    #[test]
    fn local_substep_properties() {
        for g in [GroupSpec::cyclic(3).unwrap(), GroupSpec::dihedral(3).unwrap()] {
            let m = model(g, &[2], 0);
            let l = m.layout();
            let tau = 0.23;
            let (we, wm) = local_substeps(&m, tau);
            assert!(we.commutator(&wm).max_abs() < 1e-12);
            assert!(wm.is_diagonal());
            for (i, z) in wm.diagonal_values().iter().enumerate() {
                let mut ph = 0.0;
                for v in 0..2 {
                    for c in 0..m.d_u() {
                        if i >> m.mode(v, c) & 1 == 1 {
                            ph += m.shape().parity(v).sign() * m.couplings().mass * tau;
                        }
                    }
                }
                assert!((z - C64::from_polar(1.0, -ph)).norm() < 1e-13);
            }
            // Trivial-irrep link state is an eigenvector of H_E.
            let n = m.group().order();
            let triv = vec![C64::new(1.0 / (n as f64).sqrt(), 0.0); n];
            let he = m.electric().link_matrix(m.group());
            let f0 = (0..n).map(|j| he[(0, j)]).sum::<C64>().re;
            let mut x = vec![C64::new(0.0, 0.0); l.dim()];
            for (g, a) in triv.iter().enumerate() {
                x[l.index(0, &[g])] = *a;
            }
            let y = we.matvec(&x);
            let ph = C64::from_polar(1.0, -tau * m.couplings().lambda_e * f0);
            let want: Vec<C64> = x.iter().map(|a| a * ph).collect();
            assert!(diff(&y, &want) < 1e-12);
        }
    }
}
