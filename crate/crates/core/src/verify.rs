//! Invariant suites behind the `verify` command. Every check reports a
//! measured value next to its tolerance; a suite passes when all do.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::atomic::{self, ScatteringParams, Target};
use crate::bounds::{
    self, empirical_error, first_order_bound, measured_commutator_checks, second_order_bound, BoundParams, GateError,
    GateErrorKind, Probe, Symbols,
};
use crate::engine::gates::{build_uw, entangler, plaquette_isometry};
use crate::engine::schedule::{build_schedule, run_with, Order, RunOptions};
use crate::engine::GmVariant;
use crate::error::{Error, Result};
use crate::group::{GroupKind, GroupSpec, C64};
use crate::hamiltonian::{Couplings, Model};
use crate::lattice::LatticeShape;
use crate::linalg::LinearOperator;
use crate::local::{apply_all, LocalOp};
use crate::state::{ancilla_diag_op, fermion_op, norm, FermionKind, RegisterLayout, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Group,
    Gauge,
    Stator,
    Trotter,
    Atomic,
    All,
}

impl Suite {
    pub fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Group, Suite::Gauge, Suite::Stator, Suite::Trotter, Suite::Atomic],
            s => vec![s],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Group => "group",
            Suite::Gauge => "gauge",
            Suite::Stator => "stator",
            Suite::Trotter => "trotter",
            Suite::Atomic => "atomic",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "group" => Suite::Group,
            "gauge" => Suite::Gauge,
            "stator" => Suite::Stator,
            "trotter" => Suite::Trotter,
            "atomic" => Suite::Atomic,
            "all" => Suite::All,
            _ => return Err(Error::InvalidArgument(format!("unknown suite {s:?}"))),
        })
    }
}

/// Deliberate defects for mutation testing of the suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Faults {
    /// Build the left-multiplication table as |g h> instead of |g^-1 h>.
    pub theta_left_sign: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Pass when value <= tolerance.
    AtMost,
    /// Pass when value >= tolerance.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Check {
    pub fn new(suite: Suite, name: impl Into<String>, value: f64, tolerance: f64, comparison: Comparison) -> Self {
        let pass = match comparison {
            Comparison::AtMost => value <= tolerance,
            Comparison::AtLeast => value >= tolerance,
        };
        Check {
            suite: suite.name().into(),
            name: name.into(),
            value,
            tolerance,
            comparison,
            pass,
        }
    }

    pub fn at_most(suite: Suite, name: impl Into<String>, value: f64, tol: f64) -> Self {
        Check::new(suite, name, value, tol, Comparison::AtMost)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub order: Order,
    pub steps: Vec<usize>,
    pub errors: Vec<f64>,
    pub bounds: Vec<f64>,
    pub slope: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub slopes: Vec<SlopeFit>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VerifyOptions {
    pub faults: Faults,
    pub seed: u64,
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut rep = VerifyReport::default();
    for s in suite.expand() {
        match s {
            Suite::Group => rep.checks.extend(group_suite()),
            Suite::Gauge => rep.checks.extend(gauge_suite(opts)?),
            Suite::Stator => rep.checks.extend(stator_suite(opts)?),
            Suite::Trotter => {
                let (checks, fits) = trotter_suite()?;
                rep.checks.extend(checks);
                rep.slopes.extend(fits);
            }
            Suite::Atomic => rep.checks.extend(atomic_suite()?),
            Suite::All => unreachable!(),
        }
    }
    Ok(rep)
}

pub const TIGHT: f64 = 1e-12;
pub const GAUGE_TOL: f64 = 1e-10;
pub const SLOPE_TOL: f64 = 0.15;

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn mat_diff(a: &nalgebra::DMatrix<C64>, b: &nalgebra::DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn standard_groups() -> Vec<GroupSpec> {
    let mut out: Vec<GroupSpec> = (2..=6).map(|n| GroupSpec::cyclic(n).unwrap()).collect();
    out.push(GroupSpec::dihedral(3).unwrap());
    out
}

fn group_label(g: &GroupSpec) -> String {
    match g.kind() {
        GroupKind::Cyclic(n) => format!("Z{n}"),
        GroupKind::Dihedral(n) => format!("D{n}"),
    }
}

// ---- group -----------------------------------------------------------------

/// Group axioms and representation theory for Z_2..Z_6 and D_3.
pub fn group_suite() -> Vec<Check> {
    let s = Suite::Group;
    let mut out = Vec::new();
    for g in standard_groups() {
        let name = group_label(&g);
        let n = g.order();
        let mut assoc = 0usize;
        let mut inverse = 0usize;
        for a in 0..n {
            if g.mul(a, g.inv(a)) != g.identity() || g.mul(g.identity(), a) != a {
                inverse += 1;
            }
            for b in 0..n {
                for c in 0..n {
                    if g.mul(g.mul(a, b), c) != g.mul(a, g.mul(b, c)) {
                        assoc += 1;
                    }
                }
            }
        }
        out.push(Check::at_most(s, format!("{name} associativity violations"), assoc as f64, 0.0));
        out.push(Check::at_most(s, format!("{name} identity/inverse violations"), inverse as f64, 0.0));
        let mut hom: f64 = 0.0;
        let mut unit: f64 = 0.0;
        let mut dims = 0usize;
        for ir in g.irreps() {
            dims += ir.dim * ir.dim;
            for a in 0..n {
                let da = ir.matrix(a);
                let id = nalgebra::DMatrix::<C64>::identity(ir.dim, ir.dim);
                unit = unit.max(mat_diff(&(da * da.adjoint()), &id));
                for b in 0..n {
                    hom = hom.max(mat_diff(&(da * ir.matrix(b)), ir.matrix(g.mul(a, b))));
                }
            }
        }
        out.push(Check::at_most(s, format!("{name} homomorphism"), hom, TIGHT));
        out.push(Check::at_most(s, format!("{name} irrep unitarity"), unit, TIGHT));
        out.push(Check::at_most(s, format!("{name} sum dim^2 - |G|"), (dims as f64 - n as f64).abs(), 0.0));
        // Schur: sum_g D^j_mn(g)^* D^k_m'n'(g) = |G|/d_j delta.
        let mut schur: f64 = 0.0;
        for (j, a) in g.irreps().iter().enumerate() {
            for (k, b) in g.irreps().iter().enumerate() {
                for m in 0..a.dim {
                    for nn in 0..a.dim {
                        for m2 in 0..b.dim {
                            for n2 in 0..b.dim {
                                let sum: C64 = (0..n).map(|x| a.matrix(x)[(m, nn)].conj() * b.matrix(x)[(m2, n2)]).sum();
                                let want = if j == k && m == m2 && nn == n2 { n as f64 / a.dim as f64 } else { 0.0 };
                                schur = schur.max((sum - want).norm());
                            }
                        }
                    }
                }
            }
        }
        out.push(Check::at_most(s, format!("{name} Schur orthogonality"), schur, TIGHT));
        let v = g.basis_change();
        let id = nalgebra::DMatrix::<C64>::identity(n, n);
        out.push(Check::at_most(s, format!("{name} basis change unitarity"), mat_diff(&(&v * v.adjoint()), &id), TIGHT));
    }
    out
}

// ---- gauge -----------------------------------------------------------------

/// Random gauge-invariant state with every ancilla in the reference element.
pub fn reference_state(model: &Model, seed: u64) -> Result<StateVector> {
    let l = model.layout();
    let regs: Vec<usize> = (0..l.n_ancillas()).map(|k| l.ancilla_reg(k).unwrap()).collect();
    let mut v = StateVector::random(l, seed).into_amplitudes();
    for (i, z) in v.iter_mut().enumerate() {
        if regs.iter().any(|&r| l.reg_value(i, r) != 0) {
            *z = C64::new(0.0, 0.0);
        }
    }
    let x = StateVector::from_amplitudes(l, v)?;
    model.project_gauge_invariant(&x)
}

/// Gauge violation and ancilla fidelity after every composite substep of
/// both orders and both gauge-matter variants on Z_2 d = 2, plus Gauss law
/// commutation with H on small instances of every group family.
pub fn gauge_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let s = Suite::Gauge;
    let mut out = Vec::new();
    let m = Model::new(GroupSpec::cyclic(2)?, LatticeShape::new(&[2, 2])?, Couplings::uniform(1.0))?.with_ancillas(1)?;
    let x = reference_state(&m, opts.seed)?;
    for order in [Order::First, Order::Second] {
        for variant in [GmVariant::Direct, GmVariant::Mediated] {
            let sched = build_schedule(&m, 0.5, 2, order, variant, 1)?;
            let (_, tr) = run_with(
                &m,
                &sched,
                &x,
                RunOptions {
                    every_substep: true,
                    ..Default::default()
                },
            )?;
            let tag = format!("Z2 2x2 {order:?} {variant:?}");
            out.push(Check::at_most(s, format!("{tag}: max gauge violation per substep"), tr.max_violation(), GAUGE_TOL));
            out.push(Check::new(
                s,
                format!("{tag}: min ancilla fidelity per substep"),
                tr.min_fidelity(),
                1.0 - TIGHT,
                Comparison::AtLeast,
            ));
        }
    }
    for (g, ext) in [(GroupSpec::cyclic(3)?, vec![2usize]), (GroupSpec::dihedral(3)?, vec![2]), (GroupSpec::cyclic(2)?, vec![2, 2])] {
        let m = Model::new(g, LatticeShape::new(&ext)?, Couplings::uniform(1.0))?;
        let h = m.build_h();
        let mut worst: f64 = 0.0;
        for v in 0..m.shape().n_vertices() {
            for e in 0..m.group().order() {
                worst = worst.max(m.build_gauss(v, e)?.commutator(&h).max_abs());
            }
        }
        out.push(Check::at_most(s, format!("{} {:?}: max |[Theta_g(x), H]|", group_label(m.group()), ext), worst, TIGHT));
    }
    Ok(out)
}

// ---- stator ----------------------------------------------------------------

/// Left multiplication table t[g][h] = index of Theta^L_g |h>.
pub fn theta_left_table(g: &GroupSpec, faults: Faults) -> Vec<Vec<usize>> {
    (0..g.order())
        .map(|a| {
            let a = if faults.theta_left_sign { a } else { g.inv(a) };
            (0..g.order()).map(|h| g.mul(a, h)).collect()
        })
        .collect()
}

/// Dense link-and-ancilla register space of one plaquette without matter.
fn plaquette_registers(g: &GroupSpec) -> Result<RegisterLayout> {
    RegisterLayout::new(0, 0, 4, 1, g.order())
}

fn stator_entangler(g: &GroupSpec, link_reg: usize, anc_reg: usize, inverse: bool) -> LocalOp {
    let n = g.order();
    let table = (0..n)
        .map(|a| {
            let a = if inverse { g.inv(a) } else { a };
            (0..n).map(|h| g.mul(a, h)).collect()
        })
        .collect();
    LocalOp::controlled_permutation(link_reg, anc_reg, table)
}

fn reg_diag(l: &RegisterLayout, reg: usize, f: impl Fn(usize) -> C64) -> LocalOp {
    LocalOp::RegisterDiag {
        reg,
        values: (0..l.reg_dim()).map(f).collect(),
    }
}

/// Stator identities as dense matrix identities on the pure-gauge
/// plaquette register space, the transformation law of U under the left
/// and right actions, the engine isometry, U_W conjugation and the D_3
/// factorisation.
pub fn stator_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = stator_identities(opts)?;
    out.extend(engine_isometry_checks(opts)?);
    out.extend(uw_checks()?);
    Ok(out)
}

/// Register-level stator identities for Z_2 and D_3 on one plaquette.
pub fn stator_identities(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let s = Suite::Stator;
    let mut out = Vec::new();
    for g in [GroupSpec::cyclic(2)?, GroupSpec::dihedral(3)?] {
        let name = group_label(&g);
        let rep = g.faithful();
        let du = rep.dim;
        let l = plaquette_registers(&g)?;
        let anc = l.ancilla_reg(0)?;
        let cols: Vec<usize> = (0..l.dim()).filter(|&i| l.reg_value(i, anc) == 0).collect();
        // U~_mn S = S U_mn for each link.
        let mut stator: f64 = 0.0;
        for link in 0..4 {
            let ent = stator_entangler(&g, link, anc, false);
            let uts: Vec<LocalOp> = (0..du * du).map(|ab| reg_diag(&l, anc, |h| rep.matrix(h)[(ab / du, ab % du)])).collect();
            let us: Vec<LocalOp> = (0..du * du).map(|ab| reg_diag(&l, link, |h| rep.matrix(h)[(ab / du, ab % du)])).collect();
            for &c in &cols {
                let mut e = vec![C64::new(0.0, 0.0); l.dim()];
                e[c] = C64::new(1.0, 0.0);
                let se = apply_all(std::slice::from_ref(&ent), &l, &e);
                for (ut, u) in uts.iter().zip(&us) {
                    let lhs = apply_all(std::slice::from_ref(ut), &l, &se);
                    // U is diagonal, so U e_c is a multiple of e_c.
                    let uc = apply_all(std::slice::from_ref(u), &l, &e)[c];
                    let rhs: Vec<C64> = se.iter().map(|z| z * uc).collect();
                    stator = stator.max(max_diff(&lhs, &rhs));
                }
            }
        }
        out.push(Check::at_most(s, format!("{name} {}-dim: U~ S = S U", l.dim()), stator, TIGHT));
        // Tr(U~ + U~^dag) S_p = S_p Tr(U_1 U_2 U_3^dag U_4^dag + h.c.)
        let chi: Vec<f64> = (0..g.order()).map(|x| 2.0 * rep.character(x).re).collect();
        let iso = vec![
            stator_entangler(&g, 3, anc, true),
            stator_entangler(&g, 2, anc, true),
            stator_entangler(&g, 1, anc, false),
            stator_entangler(&g, 0, anc, false),
        ];
        let mut eig: f64 = 0.0;
        for &c in &cols {
            let mut e = vec![C64::new(0.0, 0.0); l.dim()];
            e[c] = C64::new(1.0, 0.0);
            let v: Vec<usize> = (0..4).map(|r| l.reg_value(c, r)).collect();
            let prod = g.mul(g.mul(v[0], v[1]), g.mul(g.inv(v[2]), g.inv(v[3])));
            let mut lhs = apply_all(&iso, &l, &e);
            for (i, z) in lhs.iter_mut().enumerate() {
                *z *= chi[l.reg_value(i, anc)];
            }
            let rhs: Vec<C64> = apply_all(&iso, &l, &e).into_iter().map(|z| z * chi[prod]).collect();
            eig = eig.max(max_diff(&lhs, &rhs));
        }
        out.push(Check::at_most(s, format!("{name} {}-dim: plaquette eigenoperator", l.dim()), eig, TIGHT));
        // Theta^L_g U Theta^L_g^dag = D(g) U and Theta^R_g U Theta^R_g^dag = U D(g).
        let tl = theta_left_table(&g, opts.faults);
        let mut cov_l: f64 = 0.0;
        let mut cov_r: f64 = 0.0;
        for a in 0..g.order() {
            for h in 0..g.order() {
                // Theta U Theta^dag |h> = D(Theta^-1 applied to h) |h>.
                let pre_l = tl[a].iter().position(|&x| x == h).unwrap_or(h);
                let want_l = rep.matrix(a) * rep.matrix(h);
                cov_l = cov_l.max(mat_diff(rep.matrix(pre_l), &want_l));
                let pre_r = g.mul(h, a);
                cov_r = cov_r.max(mat_diff(rep.matrix(pre_r), &(rep.matrix(h) * rep.matrix(a))));
            }
        }
        out.push(Check::at_most(s, format!("{name}: Theta^L U Theta^L^dag = D(g) U"), cov_l, TIGHT));
        out.push(Check::at_most(s, format!("{name}: Theta^R U Theta^R^dag = U D(g)"), cov_r, TIGHT));
        // The stator commutes with simultaneous left action on link and ancilla.
        let mut intertw: f64 = 0.0;
        for a in 0..g.order() {
            let perm = tl[a].clone();
            let left_link = LocalOp::register_permutation(0, perm.clone());
            let left_anc = LocalOp::register_permutation(anc, perm);
            let ent = stator_entangler(&g, 0, anc, false);
            for &c in cols.iter().take(64) {
                let mut e = vec![C64::new(0.0, 0.0); l.dim()];
                e[c] = C64::new(1.0, 0.0);
                let lhs = apply_all(&[ent.clone(), left_link.clone(), left_anc.clone()], &l, &e);
                let rhs = apply_all(&[left_link.clone(), ent.clone()], &l, &e);
                intertw = intertw.max(max_diff(&lhs, &rhs));
            }
        }
        out.push(Check::at_most(s, format!("{name}: stator gauge covariance"), intertw, TIGHT));
    }
    Ok(out)
}

fn engine_isometry_checks(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let s = Suite::Stator;
    let mut out = Vec::new();
    // The engine's isometry agrees with the register-level one.
    let m = Model::new(GroupSpec::dihedral(3)?, LatticeShape::new(&[2, 2])?, Couplings::uniform(1.0))?.with_ancillas(1)?;
    let p = m.shape().enumerate_plaquettes()[0];
    let iso = plaquette_isometry(&m, p, 0)?;
    let x = reference_state(&m, opts.seed.wrapping_add(1))?;
    let chi = m.plaquette_trace_values();
    let anc = ancilla_diag_op(m.layout(), 0, |h| C64::new(chi[h], 0.0))?;
    let hb = m.build_hb();
    let lhs = anc.matvec(&apply_all(&iso, m.layout(), x.amplitudes()));
    let rhs = apply_all(&iso, m.layout(), &hb.matvec(x.amplitudes()));
    out.push(Check::at_most(s, "D3 2x2 with matter: engine plaquette isometry", max_diff(&lhs, &rhs), TIGHT));
    let link = m.links()[0];
    let e = entangler(&m, link, 0, false)?;
    let back = entangler(&m, link, 0, true)?;
    let y = apply_all(&[e, back], m.layout(), x.amplitudes());
    out.push(Check::at_most(s, "D3 entangler inverse", max_diff(&y, x.amplitudes()), TIGHT));
    Ok(out)
}

/// U_W conjugation of the fermion creation operators and the D_3 factorisation.
pub fn uw_checks() -> Result<Vec<Check>> {
    let s = Suite::Stator;
    let mut out = Vec::new();
    for g in [GroupSpec::cyclic(3)?, GroupSpec::dihedral(3)?] {
        let name = group_label(&g);
        let m = Model::new(g, LatticeShape::new(&[2])?, Couplings::uniform(1.0))?;
        let l = m.layout();
        let link = m.links()[0];
        let u = m.build_u(link)?;
        let d = m.d_u();
        let w = build_uw(&m, 0, link)?;
        let mut dev: f64 = w.unitarity_deviation();
        for n in 0..d {
            let lhs = w.matmul(&fermion_op(l, 0, n, FermionKind::Create)?).matmul(&w.adjoint());
            let mut rhs = LinearOperator::zeros(l.dim());
            for k in 0..d {
                rhs = rhs.add(&fermion_op(l, 0, k, FermionKind::Create)?.matmul(&u[k][n]));
            }
            dev = dev.max(lhs.max_abs_diff(&rhs));
        }
        out.push(Check::at_most(s, format!("{name}: U_W psi^dag U_W^dag = psi^dag U"), dev, TIGHT));
    }
    // D_3: D(p, m) = exp(i 2 pi p sigma_z / 3) sigma_x^m.
    let g = GroupSpec::dihedral(3)?;
    let mut dev: f64 = 0.0;
    for x in 0..6 {
        let (p, mm) = g.decode(x);
        let phase = 2.0 * std::f64::consts::PI * p as f64 / 3.0;
        let up = nalgebra::DMatrix::from_row_slice(2, 2, &[
            C64::from_polar(1.0, phase),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::from_polar(1.0, -phase),
        ]);
        let sx = nalgebra::DMatrix::from_row_slice(2, 2, &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ]);
        let um = if mm == 1 { sx } else { nalgebra::DMatrix::identity(2, 2) };
        dev = dev.max(mat_diff(g.faithful().matrix(x), &(up * um)));
    }
    out.push(Check::at_most(s, "D3: U = U_p U_m", dev, TIGHT));
    Ok(out)
}

// ---- trotter ---------------------------------------------------------------

/// Least-squares slope of log(err) against log(steps).
pub fn loglog_slope(steps: &[usize], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = steps.iter().zip(errors).map(|(&n, &e)| ((n as f64).ln(), e.ln())).collect();
    let k = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (k * sxy - sx * sy) / (k * sxx - sx * sx)
}

/// Measured error against the analytic bound for each step count.
/// State probes (used above the dense limit) are drawn from `seed`.
pub fn trotter_sweep(model: &Model, t: f64, steps: &[usize], order: Order, variant: GmVariant, seed: u64) -> Result<SlopeFit> {
    if steps.is_empty() {
        return Err(Error::InvalidArgument("empty step list".into()));
    }
    let mut errors = Vec::new();
    let mut bounds = Vec::new();
    let probe = if model.layout().dim() <= bounds::OPERATOR_PROBE_MAX {
        Probe::Operator
    } else {
        Probe::States(bounds::default_probes(model, 4, seed))
    };
    for &n in steps {
        errors.push(empirical_error(model, t, n, order, variant, &probe)?);
        let p = BoundParams::from_model(model, t, n);
        bounds.push(match order {
            Order::First => first_order_bound(&p)?,
            Order::Second => second_order_bound(&p)?,
        });
    }
    let slope = if steps.len() > 1 { loglog_slope(steps, &errors) } else { f64::NAN };
    Ok(SlopeFit {
        order,
        steps: steps.to_vec(),
        errors,
        bounds,
        slope,
    })
}

pub fn standard_trotter_model() -> Result<Model> {
    Model::new(GroupSpec::cyclic(2)?, LatticeShape::new(&[2, 2])?, Couplings::uniform(1.0))?.with_ancillas(1)
}

pub const STANDARD_STEPS: [usize; 5] = [2, 4, 8, 16, 32];

/// Scaling of the measured Trotter error, bound validity, the cubic-lattice
/// coefficient specialisations and the commutator bounds.
pub fn trotter_suite() -> Result<(Vec<Check>, Vec<SlopeFit>)> {
    let s = Suite::Trotter;
    let mut out = Vec::new();
    let m = standard_trotter_model()?;
    let mut fits = Vec::new();
    for (order, target) in [(Order::First, -1.0), (Order::Second, -2.0)] {
        let fit = trotter_sweep(&m, 0.5, &STANDARD_STEPS, order, GmVariant::Direct, 7)?;
        out.push(Check::at_most(
            s,
            format!("{order:?} order slope {:.3} vs {target}", fit.slope),
            (fit.slope - target).abs(),
            SLOPE_TOL,
        ));
        for ((n, e), b) in fit.steps.iter().zip(&fit.errors).zip(&fit.bounds) {
            out.push(Check::at_most(s, format!("{order:?} order N={n}: error / bound"), e / b, 1.0));
        }
        fits.push(fit);
    }
    out.extend(cubic_form_checks());
    for (g, ext) in [
        (GroupSpec::cyclic(2)?, vec![2usize, 2]),
        (GroupSpec::cyclic(3)?, vec![2]),
        (GroupSpec::dihedral(3)?, vec![2]),
    ] {
        let model = Model::new(g, LatticeShape::new(&ext)?, Couplings { lambda_b: 0.9, lambda_e: 1.1, lambda_gm: 0.8, mass: 0.7 })?;
        let label = format!("{} {:?}", group_label(model.group()), ext);
        for mc in measured_commutator_checks(&model)? {
            out.push(Check::at_most(
                s,
                format!("{label} {}: measured - bound", mc.name),
                mc.measured - mc.bound,
                1e-9 * (1.0 + mc.bound),
            ));
        }
    }
    Ok((out, fits))
}

/// Exact rational comparison of the general bounds at d = 3 against the
/// cubic-lattice Z_N and D_3 coefficient lists, and the error budget formulas.
pub fn cubic_form_checks() -> Vec<Check> {
    use bounds::{Poly, Scalar};
    use num_rational::Rational64;
    let s = Suite::Trotter;
    let mut out = Vec::new();
    let vars = || {
        (
            Poly::var(bounds::VAR_LB),
            Poly::var(bounds::VAR_LE),
            Poly::var(bounds::VAR_LGM),
            Poly::var(bounds::VAR_M),
        )
    };
    let two = Rational64::from_integer(2);
    for (label, du, scale1, scale2) in [
        ("Z_N", 1, Rational64::from_integer(1), Rational64::from_integer(3)),
        ("D3", 2, Rational64::new(1, 2), Rational64::new(3, 2)),
    ] {
        let sym = Symbols::symbolic(3, du);
        let first = bounds::first_order_coeff(&sym).substitute(bounds::VAR_MAXF, two);
        let second = bounds::second_order_coeff(&sym).substitute(bounds::VAR_MAXF, two);
        let (lb, le, lgm, m) = vars();
        let (p1, p2) = if du == 1 {
            (bounds::cubic_zn_first(lb.clone(), le.clone(), lgm.clone(), m.clone()), bounds::cubic_zn_second(lb, le, lgm, m))
        } else {
            (bounds::cubic_d3_first(lb.clone(), le.clone(), lgm.clone(), m.clone()), bounds::cubic_d3_second(lb, le, lgm, m))
        };
        let mismatch = |a: &Poly, b: &Poly| {
            let mut keys: Vec<[u32; 5]> = a.terms().map(|(k, _)| *k).collect();
            keys.extend(b.terms().map(|(k, _)| *k));
            keys.iter().filter(|k| a.coeff(**k) != b.coeff(**k)).count()
        };
        out.push(Check::at_most(
            s,
            format!("{label} first-order cubic-lattice coefficients (mismatched terms)"),
            mismatch(&(first * Poly::constant(scale1)), &p1) as f64,
            0.0,
        ));
        out.push(Check::at_most(
            s,
            format!("{label} second-order cubic-lattice coefficients (mismatched terms)"),
            mismatch(&(second * Poly::constant(scale2)), &p2) as f64,
            0.0,
        ));
    }
    // Error budget at t = 1, N = 8, ||h|| = 0.1, t_exp = 0.01.
    let kinds = [
        (GateErrorKind::StatisticalTimeDependent, 0.1 / 4.0),
        (GateErrorKind::SystematicTimeDependent, 0.1),
        (GateErrorKind::StatisticalFixed, 0.1 * 4.0 * 0.01),
        (GateErrorKind::SystematicFixed, 0.1 * 16.0 * 0.01),
    ];
    let entries: Vec<GateError> = kinds.iter().map(|(k, _)| GateError { norm_h: 0.1, kind: *k, t_exp: 0.01 }).collect();
    let got = bounds::experimental_error_budget(&entries, 1.0, 8).unwrap_or_default();
    let dev = kinds
        .iter()
        .zip(got.iter().chain(std::iter::repeat(&f64::NAN)))
        .map(|((_, w), g)| (w - g).abs())
        .fold(0.0, |a: f64, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
    out.push(Check::at_most(s, "experimental error budget rows", dev, 1e-15));
    out
}

// ---- atomic ----------------------------------------------------------------

/// Compiled D_3 pulse sequences against the abstract gates.
pub fn atomic_suite() -> Result<Vec<Check>> {
    let s = Suite::Atomic;
    let params = ScatteringParams::default();
    let c = Couplings {
        lambda_b: 0.8,
        lambda_e: 0.6,
        lambda_gm: 0.9,
        mass: 0.4,
    };
    let d3 = GroupSpec::dihedral(3)?;
    let mut out = Vec::new();
    for (target, ext, anc, tau) in [
        (Target::Electric, vec![2usize], 0, 0.37),
        (Target::GaugeMatter, vec![2], 1, 0.29),
        (Target::Plaquette, vec![2, 2], 1, 0.21),
    ] {
        let m = Model::new(d3.clone(), LatticeShape::new(&ext)?, c)?.with_ancillas(anc)?;
        let seq = atomic::compile(&m, &params, target, tau)?;
        let dev = atomic::verify_compiled(&m, &params, &seq, tau)?;
        out.push(Check::at_most(s, format!("D3 {target:?}: compiled vs abstract ({} pulses)", seq.pulses.len()), dev, GAUGE_TOL));
    }
    let m = Model::new(d3, LatticeShape::new(&[2, 2])?, c)?;
    let trick = atomic::mass_trick(&m, 2.0, 0.3)?.to_operator(m.layout()).diagonal_values();
    let wm = crate::engine::gates::mass_op(&m, 0.3).to_operator(m.layout()).diagonal_values();
    let mut dev: f64 = 0.0;
    for (i, (a, b)) in trick.iter().zip(&wm).enumerate() {
        let n = (i & m.layout().fermion_mask()).count_ones() as f64;
        dev = dev.max((a / b - C64::from_polar(1.0, -c.mass * 0.3 * n)).norm());
    }
    out.push(Check::at_most(s, "mass superlattice = W_M up to number phase", dev, TIGHT));
    Ok(out)
}

/// Normalised amplitudes of a random state, for callers that want probes.
pub fn random_unit(layout: &RegisterLayout, seed: u64) -> Vec<C64> {
    let v = StateVector::random(layout, seed).into_amplitudes();
    let n = norm(&v);
    v.into_iter().map(|z| z / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_and_stator_suites_pass() {
        let opts = VerifyOptions::default();
        let rep = run_suite(Suite::Group, &opts).unwrap();
        assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
        let rep = run_suite(Suite::Stator, &opts).unwrap();
        assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
    }

    #[test]
    fn theta_sign_fault_breaks_stator_suite() {
        let opts = VerifyOptions {
            faults: Faults { theta_left_sign: true },
            seed: 0,
        };
        let rep = run_suite(Suite::Stator, &opts).unwrap();
        let failed: Vec<_> = rep.failures().map(|c| c.name.clone()).collect();
        assert!(failed.iter().any(|n| n.contains("D3") && n.contains("Theta^L")), "{failed:?}");
        // Abelian Z_2 cannot see the difference.
        assert!(!failed.iter().any(|n| n.starts_with("Z2")));
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::All.expand() {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn cubic_forms_and_budget() {
        assert!(cubic_form_checks().iter().all(|c| c.pass));
    }

    #[test]
    fn slope_fit_is_exact_on_power_laws() {
        let steps = [2, 4, 8, 16];
        let e: Vec<f64> = steps.iter().map(|&n| 3.0 / (n as f64).powi(2)).collect();
        assert!((loglog_slope(&steps, &e) + 2.0).abs() < 1e-12);
    }
}
