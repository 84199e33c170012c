//! Analytic Trotter error bounds, the experimental error budget and the
//! measured errors they are compared against.
//!
//! The coupling-dependent parts of every bound are written once, generic
//! over [`Scalar`], so the same code yields floating-point values and exact
//! rational polynomials in (lambda_B, lambda_E, lambda_GM, M, maxf).

use std::collections::BTreeMap;
use std::ops::{Add, Mul};

use nalgebra::DMatrix;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::engine::schedule::{build_schedule, run_raw, Order};
use crate::engine::GmVariant;
use crate::error::{Error, Result};
use crate::group::C64;
use crate::hamiltonian::{Couplings, Model};
use crate::linalg::{expm_apply, expm_hermitian, spectral_norm};
use crate::state::{norm, StateVector};

/// Largest probe subspace for which the operator-norm error is formed.
pub const OPERATOR_PROBE_MAX: usize = 2048;

pub trait Scalar: Clone + Add<Output = Self> + Mul<Output = Self> {
    fn constant(r: Rational64) -> Self;

    fn int(n: i64) -> Self {
        Self::constant(Rational64::from_integer(n))
    }

    fn ratio(n: i64, d: i64) -> Self {
        Self::constant(Rational64::new(n, d))
    }
}

impl Scalar for f64 {
    fn constant(r: Rational64) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }
}

/// Polynomial with rational coefficients in five variables.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly(BTreeMap<[u32; 5], Rational64>);

pub const VAR_LB: usize = 0;
pub const VAR_LE: usize = 1;
pub const VAR_LGM: usize = 2;
pub const VAR_M: usize = 3;
pub const VAR_MAXF: usize = 4;

impl Poly {
    pub fn var(i: usize) -> Self {
        let mut e = [0; 5];
        e[i] = 1;
        Poly(BTreeMap::from([(e, Rational64::from_integer(1))]))
    }

    /// Coefficient of the monomial with exponents `e`.
    pub fn coeff(&self, e: [u32; 5]) -> Rational64 {
        self.0.get(&e).copied().unwrap_or_else(Rational64::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32; 5], &Rational64)> {
        self.0.iter()
    }

    /// Substitute a rational value for one variable.
    pub fn substitute(&self, i: usize, v: Rational64) -> Self {
        let mut out = Poly::default();
        for (e, c) in &self.0 {
            let mut e2 = *e;
            e2[i] = 0;
            let mut c2 = *c;
            for _ in 0..e[i] {
                c2 *= v;
            }
            out.insert(e2, c2);
        }
        out
    }

    fn insert(&mut self, e: [u32; 5], c: Rational64) {
        let slot = self.0.entry(e).or_insert_with(Rational64::zero);
        *slot += c;
        if slot.is_zero() {
            self.0.remove(&e);
        }
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, rhs: Poly) -> Poly {
        for (e, c) in rhs.0 {
            self.insert(e, c);
        }
        self
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        let mut out = Poly::default();
        for (ea, ca) in &self.0 {
            for (eb, cb) in &rhs.0 {
                let mut e = *ea;
                for k in 0..5 {
                    e[k] += eb[k];
                }
                out.insert(e, ca * cb);
            }
        }
        out
    }
}

impl Scalar for Poly {
    fn constant(r: Rational64) -> Self {
        let mut p = Poly::default();
        p.insert([0; 5], r);
        p
    }
}

/// Couplings and spectrum bound, together with the lattice integers that
/// enter the bounds as exact factors.
#[derive(Debug, Clone)]
pub struct Symbols<S> {
    pub d: i64,
    pub d_u: i64,
    pub maxf: S,
    pub lb: S,
    pub le: S,
    pub lgm: S,
    pub m: S,
}

impl Symbols<Poly> {
    pub fn symbolic(d: i64, d_u: i64) -> Self {
        Symbols {
            d,
            d_u,
            maxf: Poly::var(VAR_MAXF),
            lb: Poly::var(VAR_LB),
            le: Poly::var(VAR_LE),
            lgm: Poly::var(VAR_LGM),
            m: Poly::var(VAR_M),
        }
    }
}

/// Per-link commutator bounds; multiply by the link count for the bound.
#[derive(Debug, Clone)]
pub struct CommutatorTerms<S> {
    /// ||[H_GM,i, H_GM,j]|| for one pair of pieces.
    pub gm_gm: S,
    pub m_gm: S,
    pub gm_e: S,
    pub b_e: S,
    pub be_e: S,
    pub be_b: S,
    pub egm_gm: S,
    pub egm_e: S,
    pub mgm_gm: S,
    pub mgm_m: S,
    /// ||[[H_GM,i, H_GM,j], H_GM,l]|| for one triple of pieces.
    pub gmgm_gm: S,
}

pub fn commutator_terms<S: Scalar>(s: &Symbols<S>) -> CommutatorTerms<S> {
    let d = s.d;
    let du = s.d_u;
    let (lb, le, lgm, m, f) = (s.lb.clone(), s.le.clone(), s.lgm.clone(), s.m.clone(), s.maxf.clone());
    CommutatorTerms {
        gm_gm: S::ratio(du, d) * lgm.clone() * lgm.clone(),
        m_gm: S::int(2 * du) * m.clone() * lgm.clone(),
        gm_e: S::int(2 * du) * lgm.clone() * le.clone() * f.clone(),
        b_e: S::int(8 * (d - 1) * du) * lb.clone() * le.clone() * f.clone(),
        be_e: S::int(64 * (d - 1) * du) * le.clone() * le.clone() * lb.clone() * f.clone() * f.clone(),
        be_b: S::int(64 * (d - 1) * (d - 1) * du * du) * le.clone() * lb.clone() * lb.clone() * f.clone(),
        egm_gm: S::int(4 * du * du * (2 * (2 * d - 1) + 1)) * lgm.clone() * lgm.clone() * le.clone() * f.clone(),
        egm_e: S::int(4 * du) * lgm.clone() * le.clone() * le.clone() * f.clone() * f.clone(),
        mgm_gm: S::int(8 * d * du) * lgm.clone() * lgm.clone() * m.clone(),
        mgm_m: S::int(4 * du) * lgm.clone() * m.clone() * m.clone(),
        gmgm_gm: S::ratio(2 * du, d) * lgm.clone() * lgm.clone() * lgm,
    }
}

/// sum_{x=1}^{2d-1} (x^2 + x/2), the multiplicity of the nested
/// gauge-matter commutators in the second-order formula.
pub fn gm_partial_sum(d: i64) -> Rational64 {
    (1..2 * d)
        .map(|x| Rational64::from_integer(x * x) + Rational64::new(x, 2))
        .sum()
}

/// Closed form of the same partial sum: d (2d-1) ((4d-1)/3 + 1/2).
pub fn gm_partial_sum_closed(d: i64) -> Rational64 {
    Rational64::new(2 * d - 1, 1) * (Rational64::new(4 * d - 1, 3) + Rational64::new(1, 2)) * Rational64::from_integer(d)
}

/// First-order coefficient in closed form: the bound is t^2 N_links / N times this.
pub fn first_order_coeff<S: Scalar>(s: &Symbols<S>) -> S {
    let d = s.d;
    let inner = S::int(4 * (d - 1)) * s.lb.clone() * s.le.clone() * s.maxf.clone()
        + s.lgm.clone() * s.le.clone() * s.maxf.clone()
        + s.m.clone() * s.lgm.clone()
        + S::ratio(2 * d - 1, 4) * s.lgm.clone() * s.lgm.clone();
    S::int(s.d_u) * inner
}

/// First-order coefficient obtained by summing the individual commutator
/// bounds over all d(2d-1) pairs of gauge-matter pieces.
pub fn first_order_coeff_from_terms<S: Scalar>(s: &Symbols<S>) -> S {
    let c = commutator_terms(s);
    let pairs = s.d * (2 * s.d - 1);
    S::ratio(1, 2) * (c.b_e + c.gm_e + c.m_gm + S::int(pairs) * c.gm_gm)
}

/// Second-order coefficient in closed form: the bound is t^3 N_links / N^2 times this.
pub fn second_order_coeff<S: Scalar>(s: &Symbols<S>) -> S {
    let d = s.d;
    let du = s.d_u;
    let (lb, le, lgm, m, f) = (s.lb.clone(), s.le.clone(), s.lgm.clone(), s.m.clone(), s.maxf.clone());
    let be = S::int(16 * (d - 1)) * le.clone() * lb.clone() * f.clone()
        * (S::int(2) * le.clone() * f.clone() + S::int(du * (d - 1)) * lb);
    let ge = lgm.clone() * le.clone() * f.clone()
        * (S::int(2 * du * (2 * (2 * d - 1) + 1)) * lgm.clone() + le * f);
    let gm = lgm.clone() * m.clone() * (S::int(4 * d) * lgm.clone() + m);
    let ggg = S::int(2 * d - 1)
        * (S::ratio(4 * d - 1, 3) + S::ratio(1, 2))
        * lgm.clone()
        * lgm.clone()
        * lgm;
    S::ratio(du, 6) * (be + ge + gm + ggg)
}

/// Second-order coefficient assembled from the nested commutator bounds.
pub fn second_order_coeff_from_terms<S: Scalar>(s: &Symbols<S>) -> S {
    let c = commutator_terms(s);
    let half = || S::ratio(1, 2);
    S::ratio(1, 12)
        * (c.be_e
            + half() * c.be_b
            + c.egm_gm
            + half() * c.egm_e
            + c.mgm_gm
            + half() * c.mgm_m
            + S::constant(gm_partial_sum(s.d)) * c.gmgm_gm)
}

/// Closed-form three-dimensional Z_N first-order bracket; the bound is
/// 3 t^2 (L-1) L^2 / N times this.
pub fn cubic_zn_first<S: Scalar>(lb: S, le: S, lgm: S, m: S) -> S {
    S::int(16) * lb * le.clone() + S::int(2) * lgm.clone() * le + m * lgm.clone() + S::ratio(5, 4) * lgm.clone() * lgm
}

/// Closed-form three-dimensional Z_N second-order bracket; the bound is
/// t^3 (L-1) L^2 / N^2 times this.
pub fn cubic_zn_second<S: Scalar>(lb: S, le: S, lgm: S, m: S) -> S {
    S::int(64) * le.clone() * lb.clone() * (S::int(2) * le.clone() + lb)
        + S::int(2) * lgm.clone() * le.clone() * (S::int(11) * lgm.clone() + le)
        + lgm.clone() * m.clone() * (S::int(6) * lgm.clone() + S::ratio(1, 2) * m)
        + S::ratio(125, 12) * lgm.clone() * lgm.clone() * lgm
}

/// Closed-form three-dimensional D_3 first-order bracket; the bound is
/// 6 t^2 (L-1) L^2 / N times this.
pub fn cubic_d3_first<S: Scalar>(lb: S, le: S, lgm: S, m: S) -> S {
    cubic_zn_first(lb, le, lgm, m)
}

/// Closed-form three-dimensional D_3 second-order bracket; the bound is
/// 2 t^3 (L-1) L^2 / N^2 times this.
pub fn cubic_d3_second<S: Scalar>(lb: S, le: S, lgm: S, m: S) -> S {
    S::int(128) * le.clone() * lb.clone() * (le.clone() + lb)
        + S::int(2) * lgm.clone() * le.clone() * (S::int(22) * lgm.clone() + le)
        + lgm.clone() * m.clone() * (S::int(6) * lgm.clone() + S::ratio(1, 2) * m)
        + S::ratio(125, 12) * lgm.clone() * lgm.clone() * lgm
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub d: usize,
    pub n_links: usize,
    pub d_u: usize,
    pub maxf: f64,
    pub couplings: Couplings,
    pub t: f64,
    pub steps: usize,
    #[serde(default)]
    pub l: Option<usize>,
}

impl BoundParams {
    pub fn from_model(model: &Model, t: f64, steps: usize) -> Self {
        BoundParams {
            d: model.shape().d(),
            n_links: model.links().len(),
            d_u: model.d_u(),
            maxf: model.maxf(),
            couplings: *model.couplings(),
            t,
            steps,
            l: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.couplings;
        let vals = [self.maxf, c.lambda_b, c.lambda_e, c.lambda_gm, c.mass, self.t];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "bound parameters must be finite and non-negative".into(),
            ));
        }
        if self.d == 0 || self.d_u == 0 {
            return Err(Error::InvalidArgument("d and d_U must be >= 1".into()));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("step count must be >= 1".into()));
        }
        Ok(())
    }

    fn symbols(&self) -> Symbols<f64> {
        let c = &self.couplings;
        Symbols {
            d: self.d as i64,
            d_u: self.d_u as i64,
            maxf: self.maxf,
            lb: c.lambda_b,
            le: c.lambda_e,
            lgm: c.lambda_gm,
            m: c.mass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedBound {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub params: BoundParams,
    /// The four first-order commutator bounds.
    pub commutators: Vec<NamedBound>,
    /// The seven nested commutator bounds.
    pub nested: Vec<NamedBound>,
    pub first_order: f64,
    /// First order from the pairwise terms, which differs from the closed
    /// form in the gauge-matter pair count.
    pub first_order_from_terms: f64,
    pub second_order: f64,
    pub measured: Option<f64>,
    pub margin: Option<f64>,
}

pub fn commutator_bounds(p: &BoundParams) -> Result<Vec<NamedBound>> {
    p.validate()?;
    let c = commutator_terms(&p.symbols());
    let n = p.n_links as f64;
    Ok(vec![
        nb("[H_GM,i,H_GM,j]", c.gm_gm * n),
        nb("[H_M,H_GM,i]", c.m_gm * n),
        nb("[H_GM,H_E]", c.gm_e * n),
        nb("[H_B,H_E]", c.b_e * n),
    ])
}

pub fn nested_bounds(p: &BoundParams) -> Result<Vec<NamedBound>> {
    p.validate()?;
    let c = commutator_terms(&p.symbols());
    let n = p.n_links as f64;
    Ok(vec![
        nb("[[H_B,H_E],H_E]", c.be_e * n),
        nb("[[H_B,H_E],H_B]", c.be_b * n),
        nb("[[H_E,H_GM],H_GM]", c.egm_gm * n),
        nb("[[H_E,H_GM],H_E]", c.egm_e * n),
        nb("[[H_M,H_GM],H_GM]", c.mgm_gm * n),
        nb("[[H_M,H_GM],H_M]", c.mgm_m * n),
        nb("[[H_GM,i,H_GM,j],H_GM,l]", c.gmgm_gm * n),
    ])
}

fn nb(name: &str, value: f64) -> NamedBound {
    NamedBound {
        name: name.into(),
        value,
    }
}

pub fn first_order_bound(p: &BoundParams) -> Result<f64> {
    p.validate()?;
    Ok(p.t * p.t * p.n_links as f64 / p.steps as f64 * first_order_coeff(&p.symbols()))
}

pub fn second_order_bound(p: &BoundParams) -> Result<f64> {
    p.validate()?;
    let n = p.steps as f64;
    Ok(p.t.powi(3) * p.n_links as f64 / (n * n) * second_order_coeff(&p.symbols()))
}

pub fn bound_report(p: &BoundParams) -> Result<BoundReport> {
    Ok(BoundReport {
        params: *p,
        commutators: commutator_bounds(p)?,
        nested: nested_bounds(p)?,
        first_order: first_order_bound(p)?,
        first_order_from_terms: p.t * p.t * p.n_links as f64 / p.steps as f64
            * first_order_coeff_from_terms(&p.symbols()),
        second_order: second_order_bound(p)?,
        measured: None,
        margin: None,
    })
}

impl BoundReport {
    pub fn with_measured(mut self, order: Order, measured: f64) -> Self {
        let b = match order {
            Order::First => self.first_order,
            Order::Second => self.second_order,
        };
        self.measured = Some(measured);
        self.margin = Some(b - measured);
        self
    }
}

/// Closed-form cubic-lattice bounds for the three-dimensional Z_N and D_3
/// models with side length `l`.
pub fn cubic_bound(group_is_d3: bool, order: Order, l: usize, c: &Couplings, t: f64, steps: usize) -> Result<f64> {
    if steps == 0 {
        return Err(Error::InvalidArgument("step count must be >= 1".into()));
    }
    let lf = l as f64;
    let vol = (lf - 1.0) * lf * lf;
    let n = steps as f64;
    let (lb, le, lgm, m) = (c.lambda_b, c.lambda_e, c.lambda_gm, c.mass);
    Ok(match (group_is_d3, order) {
        (false, Order::First) => 3.0 * t * t * vol / n * cubic_zn_first(lb, le, lgm, m),
        (false, Order::Second) => t.powi(3) * vol / (n * n) * cubic_zn_second(lb, le, lgm, m),
        (true, Order::First) => 6.0 * t * t * vol / n * cubic_d3_first(lb, le, lgm, m),
        (true, Order::Second) => 2.0 * t.powi(3) * vol / (n * n) * cubic_d3_second(lb, le, lgm, m),
    })
}

/// Number of links of a cubic lattice with side `l` in `d` dimensions.
pub fn cubic_link_count(d: usize, l: usize) -> usize {
    if l == 0 {
        return 0;
    }
    d * (l - 1) * l.pow(d as u32 - 1)
}

// ---- experimental budget ---------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateErrorKind {
    StatisticalTimeDependent,
    SystematicTimeDependent,
    StatisticalFixed,
    SystematicFixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateError {
    pub norm_h: f64,
    pub kind: GateErrorKind,
    /// Duration of a fixed gate; ignored for time-dependent gates.
    #[serde(default)]
    pub t_exp: f64,
}

/// Bound on the accumulated error of each gate over a second-order run of
/// `steps` steps (each gate applied 2N times).
pub fn experimental_error_budget(entries: &[GateError], t: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("step count must be >= 1".into()));
    }
    let two_n = 2.0 * steps as f64;
    entries
        .iter()
        .map(|e| {
            if !(e.norm_h.is_finite() && e.norm_h >= 0.0 && e.t_exp.is_finite() && e.t_exp >= 0.0) {
                return Err(Error::InvalidArgument("gate error entries must be non-negative".into()));
            }
            Ok(match e.kind {
                GateErrorKind::StatisticalTimeDependent => e.norm_h * t / two_n.sqrt(),
                GateErrorKind::SystematicTimeDependent => e.norm_h * t,
                GateErrorKind::StatisticalFixed => e.norm_h * two_n.sqrt() * e.t_exp,
                GateErrorKind::SystematicFixed => e.norm_h * two_n * e.t_exp,
            })
        })
        .collect()
}

// ---- measured errors -------------------------------------------------------

#[derive(Debug, Clone)]
pub enum Probe {
    /// Maximum of ||(U - U_N) psi|| over the given states.
    States(Vec<StateVector>),
    /// Operator norm of U - U_N on the ancilla-reference subspace.
    Operator,
}

/// Random normalised states with every ancilla in the identity element,
/// preceded by the vacuum.
pub fn default_probes(model: &Model, count: usize, seed: u64) -> Vec<StateVector> {
    let layout = model.layout();
    let mut out = vec![model.build_vacuum()];
    for k in 0..count {
        let mut v = StateVector::random(layout, seed.wrapping_add(k as u64)).into_amplitudes();
        restrict_to_reference(model, &mut v);
        out.push(StateVector::from_amplitudes(layout, v).expect("non-zero probe"));
    }
    out
}

fn restrict_to_reference(model: &Model, v: &mut [C64]) {
    let layout = model.layout();
    let id = model.group().identity();
    let regs: Vec<usize> = (0..layout.n_ancillas())
        .map(|a| layout.ancilla_reg(a).unwrap())
        .collect();
    for (i, z) in v.iter_mut().enumerate() {
        if regs.iter().any(|&r| layout.reg_value(i, r) != id) {
            *z = C64::new(0.0, 0.0);
        }
    }
}

/// Indices of the basis states whose ancillas hold the identity.
fn reference_indices(model: &Model) -> Vec<usize> {
    let layout = model.layout();
    let id = model.group().identity();
    let regs: Vec<usize> = (0..layout.n_ancillas())
        .map(|a| layout.ancilla_reg(a).unwrap())
        .collect();
    (0..layout.dim())
        .filter(|&i| regs.iter().all(|&r| layout.reg_value(i, r) == id))
        .collect()
}

/// Measured Trotter error of the gate-level schedule against exp(-itH).
pub fn empirical_error(
    model: &Model,
    t: f64,
    steps: usize,
    order: Order,
    variant: GmVariant,
    probe: &Probe,
) -> Result<f64> {
    let slots = model.layout().n_ancillas().max(1);
    let sched = build_schedule(model, t, steps, order, variant, slots)?;
    let compiled = sched.compile_step(model)?;
    let h = model.build_h();
    match probe {
        Probe::States(states) => {
            let mut worst: f64 = 0.0;
            for s in states {
                model.check_layout(s)?;
                let exact = expm_apply(&h, t, s.amplitudes(), crate::state::DENSE_EXP_MAX);
                let digital = run_raw(model, &compiled, steps, s.amplitudes());
                let d: Vec<C64> = exact.iter().zip(&digital).map(|(a, b)| a - b).collect();
                worst = worst.max(norm(&d));
            }
            Ok(worst)
        }
        Probe::Operator => {
            let cols = reference_indices(model);
            let dim = model.layout().dim();
            if cols.len() > OPERATOR_PROBE_MAX || dim > 2 * OPERATOR_PROBE_MAX {
                return Err(Error::TooLarge(format!(
                    "operator probe needs a dense {dim} x {} matrix",
                    cols.len()
                )));
            }
            let u = expm_hermitian(&h.to_dense(), t);
            let mut diff = DMatrix::<C64>::zeros(dim, cols.len());
            for (j, &c) in cols.iter().enumerate() {
                let mut e = vec![C64::new(0.0, 0.0); dim];
                e[c] = C64::new(1.0, 0.0);
                let digital = run_raw(model, &compiled, steps, &e);
                for i in 0..dim {
                    diff[(i, j)] = u[(i, c)] - digital[i];
                }
            }
            Ok(spectral_norm(&diff))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredCommutator {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
}

/// Dense norms of the first-order commutators next to their bounds. The
/// gauge-matter entries are maxima over piece pairs.
pub fn measured_commutators(model: &Model) -> Result<Vec<MeasuredCommutator>> {
    let dim = model.layout().dim();
    if dim > OPERATOR_PROBE_MAX {
        return Err(Error::TooLarge(format!("dense commutators at dimension {dim}")));
    }
    let p = BoundParams::from_model(model, 1.0, 1);
    let bounds = commutator_bounds(&p)?;
    let norm = |a: &crate::linalg::LinearOperator| spectral_norm(&a.to_dense());
    let he = model.build_he();
    let hb = model.build_hb();
    let hm = model.build_hm();
    let hgm = model.build_hgm();
    let pieces: Vec<_> = model
        .gm_pieces()
        .into_iter()
        .map(|(par, dir)| model.build_hgm_piece(par, dir))
        .collect();
    let mut gm_gm: f64 = 0.0;
    for i in 0..pieces.len() {
        for j in i + 1..pieces.len() {
            gm_gm = gm_gm.max(norm(&pieces[i].commutator(&pieces[j])));
        }
    }
    let m_gm = pieces
        .iter()
        .map(|p| norm(&hm.commutator(p)))
        .fold(0.0, f64::max);
    let measured = [gm_gm, m_gm, norm(&hgm.commutator(&he)), norm(&hb.commutator(&he))];
    Ok(bounds
        .into_iter()
        .zip(measured)
        .map(|(b, m)| MeasuredCommutator {
            name: b.name,
            measured: m,
            bound: b.value,
        })
        .collect())
}

/// Dense norms of every commutator entering the first- and second-order
/// sums next to their bounds: seven pairs (three of which vanish
/// identically) and six nested commutators.
pub fn measured_commutator_checks(model: &Model) -> Result<Vec<MeasuredCommutator>> {
    let mut out = measured_commutators(model)?;
    let p = BoundParams::from_model(model, 1.0, 1);
    let norm = |a: &crate::linalg::LinearOperator| spectral_norm(&a.to_dense());
    let he = model.build_he();
    let hb = model.build_hb();
    let hm = model.build_hm();
    let hgm = model.build_hgm();
    for (name, a, b) in [("[H_B,H_GM]", &hb, &hgm), ("[H_B,H_M]", &hb, &hm), ("[H_E,H_M]", &he, &hm)] {
        out.push(MeasuredCommutator {
            name: name.into(),
            measured: norm(&a.commutator(b)),
            bound: 0.0,
        });
    }
    let be = hb.commutator(&he);
    let egm = he.commutator(&hgm);
    let mgm = hm.commutator(&hgm);
    let measured = [
        norm(&be.commutator(&he)),
        norm(&be.commutator(&hb)),
        norm(&egm.commutator(&hgm)),
        norm(&egm.commutator(&he)),
        norm(&mgm.commutator(&hgm)),
        norm(&mgm.commutator(&hm)),
    ];
    for (b, m) in nested_bounds(&p)?.into_iter().zip(measured) {
        out.push(MeasuredCommutator {
            name: b.name,
            measured: m,
            bound: b.value,
        });
    }
    Ok(out)
}
