//! Gate-level model of a D_3 cold-atom implementation.
//!
//! Each D_3 register (link or ancilla) is a pair of atoms: a three-level
//! atom (F = 1) holding the rotation p and a two-level atom (F = 1/2)
//! holding the reflection m, with register value g = p + 3m. Matter sites
//! hold an F = 1/2 fermion whose two levels are the spinor components.
//! Gates are either local rotations on one atom or two-body scattering
//! phases that are diagonal in m_F.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::engine::gates::{electric_ops, entangler, gm_piece_ops, plaquette_piece_ops, tunneling, GmVariant};
use crate::error::{Error, Result};
use crate::group::{angular_overlap, GroupKind, C64};
use crate::hamiltonian::{ElectricSpectrum, Model};
use crate::lattice::{LinkId, PlaquetteId};
use crate::linalg::spectral_norm;
use crate::local::{apply_all, fock_matrix, LocalOp};
use crate::state::StateVector;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// m_F of the three-level atom holding rotation p: p = 0, 1, 2 map to
/// m_F = 0, +1, -1.
pub fn mf3(p: usize) -> f64 {
    [0.0, 1.0, -1.0][p % 3]
}

/// m_F of the two-level atom holding reflection m: m = 0, 1 map to
/// m_F = +1/2, -1/2. The fermion components psi_1, psi_2 use the same table.
pub fn mf2(m: usize) -> f64 {
    [0.5, -0.5][m % 2]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperfineRegister {
    /// F = 1 atom on a link or ancilla site.
    ThreeLevel,
    /// F = 1/2 atom on a link or ancilla site.
    TwoLevel,
    /// F = 1/2 fermion on a vertex.
    Fermion,
}

impl HyperfineRegister {
    /// (logical state, m_F) pairs.
    pub fn levels(&self) -> Vec<(usize, f64)> {
        match self {
            HyperfineRegister::ThreeLevel => (0..3).map(|p| (p, mf3(p))).collect(),
            HyperfineRegister::TwoLevel | HyperfineRegister::Fermion => (0..2).map(|m| (m, mf2(m))).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringParams {
    pub a_half: f64,
    pub a_three_half: f64,
}

impl Default for ScatteringParams {
    fn default() -> Self {
        ScatteringParams {
            a_half: 1.0,
            a_three_half: 2.0,
        }
    }
}

impl ScatteringParams {
    pub fn g0(&self) -> f64 {
        (3.0 * self.a_half + 4.0 * self.a_three_half) / 6.0
    }

    pub fn g1(&self) -> f64 {
        2.0 * (self.a_three_half - self.a_half) / 3.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.g0() == 0.0 || self.g1() == 0.0 || !self.g0().is_finite() || !self.g1().is_finite() {
            return Err(Error::InvalidArgument(
                "scattering lengths give a vanishing channel coupling".into(),
            ));
        }
        Ok(())
    }

    /// Pulse area for the plaquette phase: alpha = 6 lambda_B tau / g0.
    pub fn alpha(&self, lambda_b: f64, tau: f64) -> f64 {
        6.0 * lambda_b * tau / self.g0()
    }

    /// beta = 2 pi / (3 g1).
    pub fn beta(&self) -> f64 {
        2.0 * PI / (3.0 * self.g1())
    }

    /// gamma = pi / (g0 + g1).
    pub fn gamma(&self) -> f64 {
        PI / (self.g0() + self.g1())
    }

    /// delta = lambda_E f_r tau / g0.
    pub fn delta(&self, lambda_e: f64, f_r: f64, tau: f64) -> f64 {
        lambda_e * f_r * tau / self.g0()
    }

    /// Fermion phase theta = 2 pi g0 / (3 g1) left over by the rotation
    /// scattering.
    pub fn theta(&self) -> f64 {
        2.0 * PI * self.g0() / (3.0 * self.g1())
    }
}

// ---- single-atom operators ---------------------------------------------------

fn omega(k: f64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * k / 3.0)
}

pub fn p3() -> DMatrix<C64> {
    DMatrix::from_fn(3, 3, |a, b| if a == b { omega(a as f64) } else { ZERO })
}

pub fn q3() -> DMatrix<C64> {
    DMatrix::from_fn(3, 3, |a, b| if a == (b + 1) % 3 { ONE } else { ZERO })
}

pub fn p2() -> DMatrix<C64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, -ONE]))
}

pub fn q2() -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |a, b| if a != b { ONE } else { ZERO })
}

pub fn fz3() -> DMatrix<C64> {
    DMatrix::from_fn(3, 3, |a, b| if a == b { C64::new(mf3(a), 0.0) } else { ZERO })
}

pub fn fz2() -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |a, b| if a == b { C64::new(mf2(a), 0.0) } else { ZERO })
}

fn projector(n: usize, k: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |a, b| if a == k && b == k { ONE } else { ZERO })
}

/// N_0: occupation of m_F = 0 in the three-level atom.
pub fn n0() -> DMatrix<C64> {
    projector(3, 0)
}

/// N_{1/2}: occupation of m_F = +1/2 in the two-level atom.
pub fn n_half() -> DMatrix<C64> {
    projector(2, 0)
}

/// N_{-1/2}.
pub fn n_minus_half() -> DMatrix<C64> {
    projector(2, 1)
}

/// Basis change V_3 with V_3^dag P_3 V_3 = Q_3.
pub fn v3() -> DMatrix<C64> {
    DMatrix::from_fn(3, 3, |k, p| omega((k * p) as f64) / 3f64.sqrt())
}

/// Basis change V_2 with V_2^dag P_2 V_2 = Q_2 (a Hadamard).
pub fn v2() -> DMatrix<C64> {
    hadamard()
}

pub fn hadamard() -> DMatrix<C64> {
    let s = 1.0 / 2f64.sqrt();
    DMatrix::from_row_slice(2, 2, &[C64::new(s, 0.0), C64::new(s, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0)])
}

/// Spin flip m_F -> -m_F of the three-level atom.
pub fn vf3() -> DMatrix<C64> {
    DMatrix::from_fn(3, 3, |a, b| if a == (3 - b) % 3 { ONE } else { ZERO })
}

/// Basis change taking (|+1> - |-1>)/sqrt 2 to m_F = -1 and
/// (|+1> + |-1>)/sqrt 2 to m_F = +1, so the flip becomes a phase on m_F = -1.
pub fn v_reflect() -> DMatrix<C64> {
    let s = C64::new(1.0 / 2f64.sqrt(), 0.0);
    let mut m = DMatrix::zeros(3, 3);
    m[(0, 0)] = ONE;
    m[(1, 1)] = s;
    m[(1, 2)] = s;
    m[(2, 1)] = s;
    m[(2, 2)] = -s;
    m
}

/// Single-particle Hadamard (sigma_x + sigma_z)/sqrt 2 on the two fermion
/// components, lifted to the vertex Fock space.
pub fn vh_fer() -> DMatrix<C64> {
    fock_matrix(&hadamard())
}

/// Operator on a D_3 register from operators on its two atoms.
pub fn on_register(a3: &DMatrix<C64>, a2: &DMatrix<C64>) -> DMatrix<C64> {
    a2.kronecker(a3)
}

pub fn on_three(a3: &DMatrix<C64>) -> DMatrix<C64> {
    on_register(a3, &DMatrix::identity(2, 2))
}

pub fn on_two(a2: &DMatrix<C64>) -> DMatrix<C64> {
    on_register(&DMatrix::identity(3, 3), a2)
}

fn diag_exp(values: impl Iterator<Item = f64>) -> Vec<C64> {
    values.map(|phi| C64::from_polar(1.0, phi)).collect()
}

// ---- pulses ----------------------------------------------------------------

/// One step of a compiled sequence. Only the descriptive fields are
/// serialised.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pulse {
    pub name: String,
    pub registers: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub area: Option<f64>,
    #[serde(skip)]
    pub op: Option<LocalOp>,
}

impl Pulse {
    fn new(name: &str, registers: Vec<String>, area: Option<f64>, op: LocalOp) -> Self {
        Pulse {
            name: name.into(),
            registers,
            area,
            op: Some(op),
        }
    }

    /// True for two-body scattering pulses.
    pub fn is_scattering(&self) -> bool {
        self.name.starts_with("scat") || self.name.starts_with("U'")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Plaquette,
    GaugeMatter,
    Electric,
}

impl std::str::FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plaquette" => Ok(Target::Plaquette),
            "gauge-matter" | "gauge_matter" | "gm" => Ok(Target::GaugeMatter),
            "electric" => Ok(Target::Electric),
            _ => Err(Error::InvalidArgument(format!("unknown target {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PulseSequence {
    pub target: Target,
    pub pulses: Vec<Pulse>,
}

impl PulseSequence {
    pub fn ops(&self) -> Vec<LocalOp> {
        self.pulses.iter().filter_map(|p| p.op.clone()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pulse records serialise")
    }
}

fn check_d3(model: &Model) -> Result<()> {
    if model.group().kind() != GroupKind::Dihedral(3) {
        return Err(Error::UnsupportedGroup(format!(
            "atomic sequences need D_3, got {:?}",
            model.group().kind()
        )));
    }
    Ok(())
}

fn link_name(l: LinkId) -> String {
    format!("link({},{})", l.vertex, l.dir)
}

fn anc_name(a: usize) -> String {
    format!("ancilla({a})")
}

fn vertex_name(v: usize) -> String {
    format!("vertex({v})")
}

fn matrix_pulse(name: &str, who: String, reg: usize, m: DMatrix<C64>) -> Pulse {
    Pulse::new(name, vec![who], None, LocalOp::RegisterMatrix { reg, matrix: m })
}

/// U_scat,1 = exp(-i g0 alpha N_0 N_{1/2}) between the two atoms of one register.
pub fn scat1(params: &ScatteringParams, alpha: f64, reg: usize) -> LocalOp {
    let g0 = params.g0();
    let values = diag_exp((0..6).map(|g| {
        let (p, m) = (g % 3, g / 3);
        if p == 0 && m == 0 {
            -g0 * alpha
        } else {
            0.0
        }
    }));
    LocalOp::RegisterDiag { reg, values }
}

fn fermion_counts(state: usize) -> (f64, f64) {
    ((state & 1) as f64, (state >> 1 & 1) as f64)
}

/// Fock blocks of exp(-i beta (g0 n + g1 F_z3 (n_1 - n_2))), one per
/// ancilla value.
pub fn scat2_blocks(params: &ScatteringParams, beta: f64) -> Vec<DMatrix<C64>> {
    let (g0, g1) = (params.g0(), params.g1());
    (0..6)
        .map(|g| {
            let fz = mf3(g % 3);
            DMatrix::from_fn(4, 4, |a, b| {
                if a != b {
                    return ZERO;
                }
                let (n1, n2) = fermion_counts(a);
                C64::from_polar(1.0, -beta * (g0 * (n1 + n2) + g1 * fz * (n1 - n2)))
            })
        })
        .collect()
}

/// Fock blocks of exp(-i gamma (g0 + g1) N_{-1/2} n_2): the gradient lets
/// only the m_F = -1/2 levels of ancilla and fermion overlap.
pub fn scat3_blocks(params: &ScatteringParams, gamma: f64) -> Vec<DMatrix<C64>> {
    let g = params.g0() + params.g1();
    (0..6)
        .map(|v| {
            let nm = (v / 3) as f64;
            DMatrix::from_fn(4, 4, |a, b| {
                if a != b {
                    return ZERO;
                }
                let (_, n2) = fermion_counts(a);
                C64::from_polar(1.0, -gamma * g * nm * n2)
            })
        })
        .collect()
}

/// exp(-i theta psi^dag psi) on one vertex.
pub fn vw_prime_block(theta: f64) -> DMatrix<C64> {
    DMatrix::from_fn(4, 4, |a, b| {
        if a == b {
            C64::from_polar(1.0, -theta * (a.count_ones() as f64))
        } else {
            ZERO
        }
    })
}

/// Pulses of the entangler |g>|h~> -> |g>|g h~> (or its inverse) between a
/// link and an ancilla: a link-controlled reflection of the ancilla
/// rotation, then the Z_3 and Z_2 additions through m_F-m_F phases.
pub fn entangler_pulses(model: &Model, link: LinkId, ancilla: usize, inverse: bool) -> Result<Vec<Pulse>> {
    check_d3(model)?;
    let lreg = model.link_reg(link)?;
    let areg = model.layout().ancilla_reg(ancilla)?;
    let who = || vec![link_name(link), anc_name(ancilla)];
    // Controlled reflection: phase pi on the ancilla's odd rotation mode
    // when the link holds a reflection.
    let cr = diag_exp((0..36).map(|k| {
        let (gl, ga) = (k / 6, k % 6);
        if gl / 3 == 1 && ga % 3 == 2 {
            PI
        } else {
            0.0
        }
    }));
    let u3 = |sign: f64| {
        diag_exp((0..36).map(move |k| {
            let (gl, ga) = (k / 6, k % 6);
            sign * 2.0 * PI / 3.0 * mf3(ga % 3) * mf3(gl % 3)
        }))
    };
    let u2 = diag_exp((0..36).map(|k| {
        let (gl, ga) = (k / 6, k % 6);
        let (fl, fa) = (mf2(gl / 3), mf2(ga / 3));
        PI / 4.0 * (1.0 - 2.0 * fl) * (1.0 - 2.0 * fa)
    }));
    let basis = on_register(&v3(), &v2());
    let refl = on_three(&v_reflect());
    let pair = |name: &str, values: Vec<C64>| {
        Pulse::new(name, who(), None, LocalOp::RegisterPairDiag { a: lreg, b: areg, values })
    };
    let mut out = vec![
        matrix_pulse("V_R", anc_name(ancilla), areg, refl.clone()),
        pair("U'_R", cr.clone()),
        matrix_pulse("V_R^dag", anc_name(ancilla), areg, refl.adjoint()),
        matrix_pulse("V_3 V_2", anc_name(ancilla), areg, basis.clone()),
        pair("U'_3", u3(1.0)),
        pair("U'_2", u2.clone()),
        matrix_pulse("V_3^dag V_2^dag", anc_name(ancilla), areg, basis.adjoint()),
    ];
    if inverse {
        // Reverse order; U'_3^dag is U'_3 between spin flips of the ancilla,
        // the other two-body phases are real.
        let flip = on_three(&vf3());
        out = vec![
            matrix_pulse("V_3 V_2", anc_name(ancilla), areg, basis.clone()),
            pair("U'_2", u2),
            matrix_pulse("V_F3", anc_name(ancilla), areg, flip.clone()),
            pair("U'_3", u3(1.0)),
            matrix_pulse("V_F3", anc_name(ancilla), areg, flip),
            matrix_pulse("V_3^dag V_2^dag", anc_name(ancilla), areg, basis.adjoint()),
            matrix_pulse("V_R", anc_name(ancilla), areg, refl.clone()),
            pair("U'_R", cr),
            matrix_pulse("V_R^dag", anc_name(ancilla), areg, refl.adjoint()),
        ];
    }
    Ok(out)
}

/// Plaquette phase exp(-i tau lambda_B Tr(U~ + U~^dag)) on an ancilla:
/// a local phase on the two-level atom and one scattering pulse.
pub fn ancilla_plaquette_pulses(model: &Model, params: &ScatteringParams, ancilla: usize, tau: f64) -> Result<Vec<Pulse>> {
    let areg = model.layout().ancilla_reg(ancilla)?;
    let lb = model.couplings().lambda_b;
    let local = diag_exp((0..6).map(|g| if g / 3 == 0 { 2.0 * lb * tau } else { 0.0 }));
    let alpha = params.alpha(lb, tau);
    Ok(vec![
        Pulse::new("scat1", vec![anc_name(ancilla)], Some(alpha), scat1(params, alpha, areg)),
        Pulse::new(
            "exp(i 2 lambda_B N_1/2 tau)",
            vec![anc_name(ancilla)],
            None,
            LocalOp::RegisterDiag { reg: areg, values: local },
        ),
    ])
}

pub fn compile_plaquette(model: &Model, params: &ScatteringParams, plaq: PlaquetteId, ancilla: usize, tau: f64) -> Result<PulseSequence> {
    check_d3(model)?;
    params.validate()?;
    let [a, b, c, d] = model.shape().role_links(plaq)?;
    let mut create = Vec::new();
    create.extend(entangler_pulses(model, d, ancilla, true)?);
    create.extend(entangler_pulses(model, c, ancilla, true)?);
    create.extend(entangler_pulses(model, b, ancilla, false)?);
    create.extend(entangler_pulses(model, a, ancilla, false)?);
    let mut undo = Vec::new();
    undo.extend(entangler_pulses(model, a, ancilla, true)?);
    undo.extend(entangler_pulses(model, b, ancilla, true)?);
    undo.extend(entangler_pulses(model, c, ancilla, false)?);
    undo.extend(entangler_pulses(model, d, ancilla, false)?);
    let mut pulses = create;
    pulses.extend(ancilla_plaquette_pulses(model, params, ancilla, tau)?);
    pulses.extend(undo);
    Ok(PulseSequence {
        target: Target::Plaquette,
        pulses,
    })
}

/// Gauge-matter sequence on one link mediated by one ancilla. Its action on
/// the ancilla reference sector is V_W'(theta) W_GM V_W'(theta), with the
/// fermion phase acting on the base vertex of the link.
pub fn compile_gauge_matter(model: &Model, params: &ScatteringParams, link: LinkId, ancilla: usize, tau: f64) -> Result<PulseSequence> {
    check_d3(model)?;
    params.validate()?;
    let layout = model.layout();
    let areg = layout.ancilla_reg(ancilla)?;
    let x = link.vertex;
    let who = || vec![anc_name(ancilla), vertex_name(x)];
    let beta = params.beta();
    let gamma = params.gamma();
    let scat2 = || LocalOp::vertex_block(layout, x, Some(areg), scat2_blocks(params, beta));
    let scat3 = || LocalOp::vertex_block(layout, x, Some(areg), scat3_blocks(params, gamma));
    let hfer = || LocalOp::vertex_block(layout, x, None, vec![vh_fer()]);
    let flip = on_three(&vf3());
    let mut pulses = entangler_pulses(model, link, ancilla, false)?;
    pulses.push(Pulse::new("scat2", who(), Some(beta), scat2()));
    pulses.push(Pulse::new("V_H,fer", vec![vertex_name(x)], None, hfer()));
    pulses.push(Pulse::new("scat3", who(), Some(gamma), scat3()));
    pulses.push(Pulse::new("V_H,fer", vec![vertex_name(x)], None, hfer()));
    pulses.push(Pulse::new(
        "tunneling",
        vec![link_name(link)],
        Some(tau * model.couplings().lambda_gm),
        tunneling(model, &[link], tau)?,
    ));
    pulses.push(Pulse::new("V_H,fer", vec![vertex_name(x)], None, hfer()));
    pulses.push(Pulse::new("scat3", who(), Some(gamma), scat3()));
    pulses.push(Pulse::new("V_H,fer", vec![vertex_name(x)], None, hfer()));
    pulses.push(matrix_pulse("V_F3", anc_name(ancilla), areg, flip.clone()));
    pulses.push(Pulse::new("scat2", who(), Some(beta), scat2()));
    pulses.push(matrix_pulse("V_F3", anc_name(ancilla), areg, flip));
    pulses.extend(entangler_pulses(model, link, ancilla, true)?);
    Ok(PulseSequence {
        target: Target::GaugeMatter,
        pulses,
    })
}

/// Electric step on one link: rotation energies as local phases in the
/// angular-momentum basis of the three-level atom, the reflection term
/// through one scattering pulse between the two link atoms.
pub fn compile_electric(model: &Model, params: &ScatteringParams, link: LinkId, tau: f64) -> Result<PulseSequence> {
    check_d3(model)?;
    params.validate()?;
    let (f_r, f_l) = match model.electric() {
        ElectricSpectrum::Dihedral { f_r, f_l } => (*f_r, f_l.clone()),
        ElectricSpectrum::Cyclic => return Err(Error::UnsupportedGroup("cyclic electric spectrum".into())),
    };
    let reg = model.link_reg(link)?;
    let le = model.couplings().lambda_e;
    let name = link_name(link);
    // Columns of w are the angular-momentum states |l> in the p basis.
    let w = DMatrix::from_fn(3, 3, |p, l| angular_overlap(l as i64, p as i64, 3).conj());
    let to_l = on_three(&w.adjoint());
    let rot = diag_exp((0..6).map(|g| -le * f_l[g % 3] * tau));
    let n0_phase = |s: f64| diag_exp((0..6).map(move |g| if g % 3 == 0 { s * le * f_r * tau / 2.0 } else { 0.0 }));
    let delta = params.delta(le, f_r, tau);
    let h2 = on_two(&hadamard());
    let pulses = vec![
        matrix_pulse("to |l>", name.clone(), reg, to_l.clone()),
        Pulse::new("exp(-i lambda_E f_l tau)", vec![name.clone()], None, LocalOp::RegisterDiag { reg, values: rot }),
        Pulse::new(
            "exp(-i lambda_E f_r N_0 tau / 2)",
            vec![name.clone()],
            None,
            LocalOp::RegisterDiag { reg, values: n0_phase(-1.0) },
        ),
        matrix_pulse("V_H,2", name.clone(), reg, h2.clone()),
        Pulse::new("scat1", vec![name.clone()], Some(delta), scat1(params, delta, reg)),
        Pulse::new("V_2", vec![name.clone()], None, LocalOp::RegisterDiag { reg, values: n0_phase(1.0) }),
        matrix_pulse("V_H,2", name.clone(), reg, h2),
        matrix_pulse("from |l>", name, reg, to_l.adjoint()),
    ];
    Ok(PulseSequence {
        target: Target::Electric,
        pulses,
    })
}

/// Mass step from a raised superlattice: H'_M = M_even sum (1 + (-1)^x) n(x)
/// applied for (M / M_even) tau. Equals W_M times exp(-i M tau N) where N is
/// the total fermion number.
pub fn mass_trick(model: &Model, m_even: f64, tau: f64) -> Result<LocalOp> {
    if m_even == 0.0 || !m_even.is_finite() {
        return Err(Error::InvalidArgument("M_even must be finite and non-zero".into()));
    }
    let shape = model.shape();
    let t = model.couplings().mass / m_even * tau;
    let mut phases = vec![0.0; model.layout().n_modes()];
    for v in 0..shape.n_vertices() {
        for c in 0..model.d_u() {
            phases[model.mode(v, c)] = m_even * (1.0 + shape.parity(v).sign()) * t;
        }
    }
    Ok(LocalOp::ModePhase { phases })
}

/// Abstract gate the compiled sequence should equal on the ancilla
/// reference sector.
pub fn abstract_gate(model: &Model, params: &ScatteringParams, target: Target, tau: f64) -> Result<Vec<LocalOp>> {
    match target {
        Target::Plaquette => {
            let (par, plane) = model
                .hb_pieces()
                .into_iter()
                .find(|(p, pl)| !model.plaquettes_in_piece(*p, *pl).is_empty())
                .ok_or_else(|| Error::InvalidLattice("no plaquette".into()))?;
            plaquette_piece_ops(model, par, plane, tau, 1)
        }
        Target::GaugeMatter => {
            let link = model.links()[0];
            let x = link.vertex;
            let parity = model.shape().parity(x);
            let vw = LocalOp::vertex_block(model.layout(), x, None, vec![vw_prime_block(params.theta())]);
            let mut ops = vec![vw.clone()];
            ops.extend(gm_piece_ops(model, parity, link.dir, tau, GmVariant::Direct, 1)?);
            ops.push(vw);
            Ok(ops)
        }
        Target::Electric => Ok(electric_ops(model, tau)),
    }
}

/// Compile a target on the first plaquette or link of a single-cell model.
pub fn compile(model: &Model, params: &ScatteringParams, target: Target, tau: f64) -> Result<PulseSequence> {
    match target {
        Target::Plaquette => {
            let p = *model
                .shape()
                .enumerate_plaquettes()
                .first()
                .ok_or_else(|| Error::InvalidLattice("no plaquette".into()))?;
            compile_plaquette(model, params, p, 0, tau)
        }
        Target::GaugeMatter => compile_gauge_matter(model, params, model.links()[0], 0, tau),
        Target::Electric => {
            let mut seq = PulseSequence {
                target,
                pulses: Vec::new(),
            };
            for &l in model.links() {
                seq.pulses.extend(compile_electric(model, params, l, tau)?.pulses);
            }
            Ok(seq)
        }
    }
}

/// Largest reference sector for which the exact operator-norm distance is
/// formed; above it random probes are used.
pub const EXACT_SECTOR_MAX: usize = 1024;

/// Distance between two gate lists on the sector where every ancilla holds
/// the identity: the exact operator norm for small sectors, otherwise the
/// maximum over `probes` random states of the sector.
pub fn sector_distance(model: &Model, a: &[LocalOp], b: &[LocalOp], probes: usize, seed: u64) -> Result<f64> {
    let layout = model.layout();
    let regs: Vec<usize> = (0..layout.n_ancillas()).map(|k| layout.ancilla_reg(k).unwrap()).collect();
    let in_sector = |i: usize| regs.iter().all(|&r| layout.reg_value(i, r) == 0);
    let sector: Vec<usize> = (0..layout.dim()).filter(|&i| in_sector(i)).collect();
    if sector.len() <= EXACT_SECTOR_MAX && layout.dim() <= 1 << 14 {
        let mut diff = DMatrix::<C64>::zeros(layout.dim(), sector.len());
        for (j, &c) in sector.iter().enumerate() {
            let mut e = vec![ZERO; layout.dim()];
            e[c] = ONE;
            let ya = apply_all(a, layout, &e);
            let yb = apply_all(b, layout, &e);
            for i in 0..layout.dim() {
                diff[(i, j)] = ya[i] - yb[i];
            }
        }
        return Ok(spectral_norm(&diff));
    }
    let mut worst: f64 = 0.0;
    for k in 0..probes {
        let mut v = StateVector::random(layout, seed + k as u64).into_amplitudes();
        for (i, z) in v.iter_mut().enumerate() {
            if !in_sector(i) {
                *z = ZERO;
            }
        }
        let n = crate::state::norm(&v);
        v.iter_mut().for_each(|z| *z /= n);
        let ya = apply_all(a, layout, &v);
        let yb = apply_all(b, layout, &v);
        let d: Vec<C64> = ya.iter().zip(&yb).map(|(x, y)| x - y).collect();
        worst = worst.max(crate::state::norm(&d));
    }
    Ok(worst)
}

/// Distance between a compiled sequence and its abstract gate.
pub fn verify_compiled(model: &Model, params: &ScatteringParams, seq: &PulseSequence, tau: f64) -> Result<f64> {
    let target = abstract_gate(model, params, seq.target, tau)?;
    sector_distance(model, &seq.ops(), &target, 6, 17)
}

/// The entangler realised by pulses, as a plain gate list (for comparison
/// with the abstract controlled multiplication).
pub fn entangler_ops(model: &Model, link: LinkId, ancilla: usize, inverse: bool) -> Result<Vec<LocalOp>> {
    Ok(entangler_pulses(model, link, ancilla, inverse)?
        .into_iter()
        .filter_map(|p| p.op)
        .collect())
}

/// Abstract entangler of the digital engine, for convenience.
pub fn abstract_entangler(model: &Model, link: LinkId, ancilla: usize, inverse: bool) -> Result<LocalOp> {
    entangler(model, link, ancilla, inverse)
}
