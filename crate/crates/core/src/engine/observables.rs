//! Expectation values measured on simulated states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::C64;
use crate::hamiltonian::Model;
use crate::lattice::{LinkId, PlaquetteId};
use crate::state::StateVector;

/// One move along a lattice path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub dir: usize,
    pub forward: bool,
}

/// Link traversed by a path, with whether it is walked against its
/// orientation.
type Traversal = (LinkId, bool);

/// Links of a closed path starting at `start`. Fails if the path leaves the
/// lattice or does not return to `start`.
pub fn path_links(model: &Model, start: usize, path: &[PathStep]) -> Result<Vec<Traversal>> {
    let shape = model.shape();
    if start >= shape.n_vertices() {
        return Err(Error::OutOfRange {
            what: "vertex",
            index: start,
            size: shape.n_vertices(),
        });
    }
    let mut v = start;
    let mut out = Vec::with_capacity(path.len());
    for s in path {
        let next = if s.forward {
            shape.step(v, s.dir)
        } else {
            shape.step_back(v, s.dir)
        }
        .ok_or_else(|| Error::InvalidLattice(format!("path leaves the lattice at vertex {v}")))?;
        let link = if s.forward {
            LinkId { vertex: v, dir: s.dir }
        } else {
            LinkId { vertex: next, dir: s.dir }
        };
        out.push((link, !s.forward));
        v = next;
    }
    if v != start || path.is_empty() {
        return Err(Error::InvalidArgument("Wilson path is not closed".into()));
    }
    Ok(out)
}

/// Counter-clockwise rectangle of `a` links along `k` and `b` along `l`.
pub fn rectangle(k: usize, l: usize, a: usize, b: usize) -> Vec<PathStep> {
    let mut p = Vec::with_capacity(2 * (a + b));
    p.extend(std::iter::repeat_n(PathStep { dir: k, forward: true }, a));
    p.extend(std::iter::repeat_n(PathStep { dir: l, forward: true }, b));
    p.extend(std::iter::repeat_n(PathStep { dir: k, forward: false }, a));
    p.extend(std::iter::repeat_n(PathStep { dir: l, forward: false }, b));
    p
}

/// <tr D(U_1 U_2 ... )> around a closed path, in the model's faithful irrep.
pub fn wilson_loop(model: &Model, state: &StateVector, start: usize, path: &[PathStep]) -> Result<C64> {
    model.check_layout(state)?;
    let links = path_links(model, start, path)?;
    let regs: Vec<(usize, bool)> = links
        .iter()
        .map(|(l, back)| Ok((model.link_reg(*l)?, *back)))
        .collect::<Result<_>>()?;
    let grp = model.group();
    let layout = model.layout();
    let traces: Vec<C64> = (0..grp.order()).map(|g| model.rep(g).trace()).collect();
    let mut acc = C64::new(0.0, 0.0);
    for (i, a) in state.amplitudes().iter().enumerate() {
        let w = a.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let mut prod = grp.identity();
        for &(reg, back) in &regs {
            let g = layout.reg_value(i, reg);
            prod = grp.mul(prod, if back { grp.inv(g) } else { g });
        }
        acc += traces[prod] * w;
    }
    Ok(acc)
}

/// <tr(U_p + U_p^dag)> for each plaquette of `plaqs`.
pub fn plaquette_values(model: &Model, state: &StateVector, plaqs: &[PlaquetteId]) -> Result<Vec<f64>> {
    model.check_layout(state)?;
    let chi = model.plaquette_trace_values();
    let grp = model.group();
    let layout = model.layout();
    let regs: Vec<[usize; 4]> = plaqs
        .iter()
        .map(|p| {
            let ls = model.shape().plaquette_links(*p)?;
            Ok([
                model.link_reg(ls[0])?,
                model.link_reg(ls[1])?,
                model.link_reg(ls[2])?,
                model.link_reg(ls[3])?,
            ])
        })
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; plaqs.len()];
    for (i, a) in state.amplitudes().iter().enumerate() {
        let w = a.norm_sqr();
        if w == 0.0 {
            continue;
        }
        for (o, r) in out.iter_mut().zip(&regs) {
            let g = r.map(|reg| layout.reg_value(i, reg));
            let prod = grp.mul(grp.mul(g[0], g[1]), grp.mul(grp.inv(g[2]), grp.inv(g[3])));
            *o += w * chi[prod];
        }
    }
    Ok(out)
}

/// Mean fermion occupation summed over the components of each vertex.
pub fn vertex_densities(model: &Model, state: &StateVector) -> Result<Vec<f64>> {
    model.check_layout(state)?;
    let nv = model.shape().n_vertices();
    let d_u = model.d_u();
    let mut out = vec![0.0; nv];
    for (i, a) in state.amplitudes().iter().enumerate() {
        let w = a.norm_sqr();
        if w == 0.0 {
            continue;
        }
        for (v, o) in out.iter_mut().enumerate() {
            let n = (0..d_u).filter(|&c| i >> model.mode(v, c) & 1 == 1).count();
            *o += w * n as f64;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilsonSpec {
    pub start: usize,
    pub k: usize,
    pub l: usize,
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    /// Mean over plaquettes of <tr(U_p + U_p^dag)>.
    pub plaquette: f64,
    /// <H_B> = lambda_B times the plaquette sum.
    pub magnetic_energy: f64,
    pub density: Vec<f64>,
    pub gauge_violation: f64,
    pub wilson: Option<(f64, f64)>,
}

pub fn observables(model: &Model, state: &StateVector, wilson: Option<&WilsonSpec>) -> Result<Observables> {
    let plaqs = model.shape().enumerate_plaquettes();
    let vals = plaquette_values(model, state, &plaqs)?;
    let sum: f64 = vals.iter().sum();
    let plaquette = if vals.is_empty() { 0.0 } else { sum / vals.len() as f64 };
    let wilson = match wilson {
        Some(w) => {
            let z = wilson_loop(model, state, w.start, &rectangle(w.k, w.l, w.a, w.b))?;
            Some((z.re, z.im))
        }
        None => None,
    };
    Ok(Observables {
        plaquette,
        magnetic_energy: model.couplings().lambda_b * sum,
        density: vertex_densities(model, state)?,
        gauge_violation: model.gauge_violation(state)?,
        wilson,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;
    use crate::hamiltonian::Couplings;
    use crate::lattice::{LatticeShape, Parity};
    use crate::state::fermion_op;
    use crate::state::FermionKind;

    fn model(g: GroupSpec, ext: &[usize]) -> Model {
        Model::new(g, LatticeShape::new(ext).unwrap(), Couplings::uniform(1.0)).unwrap()
    }

    #[test]
    fn vacuum_observables() {
        for g in [GroupSpec::cyclic(2).unwrap(), GroupSpec::cyclic(3).unwrap(), GroupSpec::dihedral(3).unwrap()] {
            let m = model(g, &[2, 2]);
            let vac = m.build_vacuum();
            let o = observables(&m, &vac, Some(&WilsonSpec { start: 0, k: 0, l: 1, a: 1, b: 1 })).unwrap();
            assert!(o.plaquette.abs() < 1e-12);
            assert!(o.gauge_violation < 1e-12);
            for v in 0..m.shape().n_vertices() {
                let want = if m.shape().parity(v) == Parity::Odd { m.d_u() as f64 } else { 0.0 };
                assert!((o.density[v] - want).abs() < 1e-12);
            }
            let (re, im) = o.wilson.unwrap();
            assert!(re.abs() < 1e-12 && im.abs() < 1e-12);
        }
    }

    #[test]
    fn unit_wilson_loop_matches_plaquette() {
        let m = model(GroupSpec::dihedral(3).unwrap(), &[2, 2]);
        let s = StateVector::random(m.layout(), 5);
        let p = m.shape().enumerate_plaquettes()[0];
        let pv = plaquette_values(&m, &s, &[p]).unwrap()[0];
        let w = wilson_loop(&m, &s, p.vertex, &rectangle(p.k, p.l, 1, 1)).unwrap();
        assert!((pv - 2.0 * w.re).abs() < 1e-12);
        let hb = s.expectation(&m.build_hb()).re;
        let o = observables(&m, &s, None).unwrap();
        assert!((hb - o.magnetic_energy).abs() < 1e-10);
    }

    #[test]
    fn two_by_one_loop_is_product_of_plaquettes_on_basis_states() {
        let m = model(GroupSpec::cyclic(3).unwrap(), &[3, 2]);
        let layout = m.layout();
        let regs: Vec<usize> = (0..layout.n_links()).map(|l| (l * 7 + 1) % 3).collect();
        let s = StateVector::basis(layout, layout.index(0, &regs)).unwrap();
        let w = wilson_loop(&m, &s, 0, &rectangle(0, 1, 2, 1)).unwrap();
        // For an abelian group the 2x1 loop is the product of the two unit loops.
        let w1 = wilson_loop(&m, &s, 0, &rectangle(0, 1, 1, 1)).unwrap();
        let w2 = wilson_loop(&m, &s, 1, &rectangle(0, 1, 1, 1)).unwrap();
        assert!((w - w1 * w2).norm() < 1e-12);
    }

    #[test]
    fn open_path_rejected() {
        let m = model(GroupSpec::cyclic(2).unwrap(), &[2, 2]);
        let s = m.build_vacuum();
        let open = [PathStep { dir: 0, forward: true }];
        assert!(matches!(wilson_loop(&m, &s, 0, &open), Err(Error::InvalidArgument(_))));
        let outside = [PathStep { dir: 0, forward: false }];
        assert!(wilson_loop(&m, &s, 0, &outside).is_err());
    }

    #[test]
    fn bare_fermion_violates_gauss_law() {
        let m = model(GroupSpec::cyclic(2).unwrap(), &[2]);
        let vac = m.build_vacuum();
        let c = fermion_op(m.layout(), 0, 0, FermionKind::Create).unwrap();
        let s = StateVector::from_amplitudes(m.layout(), c.matvec(vac.amplitudes())).unwrap();
        assert!(m.gauge_violation(&s).unwrap() > 0.1);
        // Attach the string: hop onto the link instead of creating.
        let h = m.build_hgm();
        let s2 = StateVector::from_amplitudes(m.layout(), h.matvec(vac.amplitudes())).unwrap();
        assert!(m.gauge_violation(&s2).unwrap() < 1e-12);
    }
}
