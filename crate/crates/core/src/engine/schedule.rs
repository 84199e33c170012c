//! First- and second-order Trotter schedules and their execution.

use serde::{Deserialize, Serialize};

use super::gates::{electric_ops, gm_piece_ops, mass_op, plaquette_piece_ops, GmVariant};
use crate::error::{Error, Result};
use crate::hamiltonian::Model;
use crate::lattice::Parity;
use crate::local::{apply_all, product_operator, LocalOp};
use crate::linalg::LinearOperator;
use crate::state::{ancilla_state_fidelity, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "factor", rename_all = "snake_case")]
pub enum FactorKind {
    /// All magnetic pieces, realised through ancilla-held plaquettes.
    Magnetic,
    GaugeMatter { parity: Parity, dir: usize },
    Electric,
    Mass,
}

impl FactorKind {
    pub fn label(&self) -> String {
        match self {
            FactorKind::Magnetic => "W_B".into(),
            FactorKind::GaugeMatter { parity, dir } => format!(
                "W_GM,{}{}",
                dir + 1,
                if *parity == Parity::Even { "e" } else { "o" }
            ),
            FactorKind::Electric => "W_E".into(),
            FactorKind::Mass => "W_M".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubEvolution {
    pub kind: FactorKind,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrotterSchedule {
    /// Factors of one step in application order.
    pub step: Vec<SubEvolution>,
    pub order: Order,
    pub steps: usize,
    pub t: f64,
    pub variant: GmVariant,
    pub slots: usize,
}

/// Factor list W_B, W_GM,1e .. W_GM,de, W_GM,1o .. W_GM,do, W_E, W_M.
pub fn factor_kinds(model: &Model) -> Vec<FactorKind> {
    let mut out = vec![FactorKind::Magnetic];
    for (parity, dir) in model.gm_pieces() {
        out.push(FactorKind::GaugeMatter { parity, dir });
    }
    out.push(FactorKind::Electric);
    out.push(FactorKind::Mass);
    out
}

pub fn build_schedule(
    model: &Model,
    t: f64,
    steps: usize,
    order: Order,
    variant: GmVariant,
    slots: usize,
) -> Result<TrotterSchedule> {
    if steps == 0 {
        return Err(Error::InvalidArgument("step count must be >= 1".into()));
    }
    if !t.is_finite() {
        return Err(Error::InvalidArgument("non-finite evolution time".into()));
    }
    let tau = t / steps as f64;
    let kinds = factor_kinds(model);
    let step = match order {
        Order::First => kinds.iter().map(|&kind| SubEvolution { kind, tau }).collect(),
        Order::Second => {
            let p = kinds.len();
            let mut v: Vec<_> = kinds[..p - 1]
                .iter()
                .map(|&kind| SubEvolution { kind, tau: tau / 2.0 })
                .collect();
            v.push(SubEvolution {
                kind: kinds[p - 1],
                tau,
            });
            v.extend(kinds[..p - 1].iter().rev().map(|&kind| SubEvolution {
                kind,
                tau: tau / 2.0,
            }));
            v
        }
    };
    Ok(TrotterSchedule {
        step,
        order,
        steps,
        t,
        variant,
        slots,
    })
}

/// One composite substep: a named gate sequence after which the ancillas
/// are back in the identity element.
#[derive(Debug, Clone)]
pub struct CompiledSubstep {
    pub label: String,
    pub ops: Vec<LocalOp>,
}

/// Gate sequences of one sub-evolution. The magnetic factor yields one
/// composite substep per (parity, plane) piece.
pub fn compile_factor(model: &Model, sub: &SubEvolution, variant: GmVariant, slots: usize) -> Result<Vec<CompiledSubstep>> {
    Ok(match sub.kind {
        FactorKind::Magnetic => {
            let mut out = Vec::new();
            for (parity, plane) in model.hb_pieces() {
                out.push(CompiledSubstep {
                    label: format!(
                        "W_B,{}{}",
                        crate::lattice::plane_index(plane.0, plane.1) + 1,
                        if parity == Parity::Even { "e" } else { "o" }
                    ),
                    ops: plaquette_piece_ops(model, parity, plane, sub.tau, slots)?,
                });
            }
            out
        }
        FactorKind::GaugeMatter { parity, dir } => vec![CompiledSubstep {
            label: sub.kind.label(),
            ops: gm_piece_ops(model, parity, dir, sub.tau, variant, slots)?,
        }],
        FactorKind::Electric => vec![CompiledSubstep {
            label: "W_E".into(),
            ops: electric_ops(model, sub.tau),
        }],
        FactorKind::Mass => vec![CompiledSubstep {
            label: "W_M".into(),
            ops: vec![mass_op(model, sub.tau)],
        }],
    })
}

impl TrotterSchedule {
    pub fn compile_step(&self, model: &Model) -> Result<Vec<CompiledSubstep>> {
        let mut out = Vec::new();
        for sub in &self.step {
            out.extend(compile_factor(model, sub, self.variant, self.slots)?);
        }
        Ok(out)
    }

    /// Total duration assigned to each factor kind over the whole run.
    pub fn durations(&self) -> Vec<(FactorKind, f64)> {
        let mut out: Vec<(FactorKind, f64)> = Vec::new();
        for s in &self.step {
            match out.iter_mut().find(|(k, _)| *k == s.kind) {
                Some((_, d)) => *d += s.tau * self.steps as f64,
                None => out.push((s.kind, s.tau * self.steps as f64)),
            }
        }
        out
    }

    /// Sparse operator of one full step (small layouts only).
    pub fn step_operator(&self, model: &Model) -> Result<LinearOperator> {
        let ops: Vec<LocalOp> = self
            .compile_step(model)?
            .into_iter()
            .flat_map(|c| c.ops)
            .collect();
        Ok(product_operator(&ops, model.layout()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub step: usize,
    pub substep: usize,
    pub time: f64,
    pub gauge_violation: f64,
    pub ancilla_fidelity: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SequenceTrace {
    pub entries: Vec<TraceEntry>,
    pub labels: Vec<String>,
    #[serde(skip)]
    pub snapshots: Vec<StateVector>,
}

impl SequenceTrace {
    pub fn max_violation(&self) -> f64 {
        self.entries.iter().map(|e| e.gauge_violation).fold(0.0, f64::max)
    }

    pub fn min_fidelity(&self) -> f64 {
        self.entries.iter().map(|e| e.ancilla_fidelity).fold(1.0, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Record gauge violation and ancilla fidelity after every composite
    /// substep instead of once per step.
    pub every_substep: bool,
    /// Skip the gauge-violation measurement (it costs |G| passes per vertex).
    pub skip_violation: bool,
    /// Keep the state after every step.
    pub snapshots: bool,
}

pub fn run(model: &Model, schedule: &TrotterSchedule, state: &StateVector) -> Result<(StateVector, SequenceTrace)> {
    run_with(model, schedule, state, RunOptions::default())
}

pub fn run_with(
    model: &Model,
    schedule: &TrotterSchedule,
    state: &StateVector,
    opts: RunOptions,
) -> Result<(StateVector, SequenceTrace)> {
    model.check_layout(state)?;
    let compiled = schedule.compile_step(model)?;
    let layout = model.layout();
    let reference = vec![model.group().identity(); layout.n_ancillas()];
    let tau = schedule.t / schedule.steps as f64;
    let mut trace = SequenceTrace {
        labels: compiled.iter().map(|c| c.label.clone()).collect(),
        ..Default::default()
    };
    let mut amps = state.amplitudes().to_vec();
    let mut record = |amps: &[crate::group::C64], step: usize, substep: usize, time: f64| -> Result<()> {
        let sv = StateVector::from_amplitudes(layout, amps.to_vec())?;
        let gauge_violation = if opts.skip_violation {
            f64::NAN
        } else {
            model.gauge_violation(&sv)?
        };
        let ancilla_fidelity = if layout.n_ancillas() > 0 {
            ancilla_state_fidelity(&sv, &reference)?
        } else {
            1.0
        };
        trace.entries.push(TraceEntry {
            step,
            substep,
            time,
            gauge_violation,
            ancilla_fidelity,
        });
        Ok(())
    };
    let mut snaps = Vec::new();
    for step in 0..schedule.steps {
        for (k, sub) in compiled.iter().enumerate() {
            amps = apply_all(&sub.ops, layout, &amps);
            if opts.every_substep {
                record(&amps, step + 1, k, (step as f64 + 1.0) * tau)?;
            }
        }
        if !opts.every_substep {
            record(&amps, step + 1, compiled.len(), (step as f64 + 1.0) * tau)?;
        }
        if opts.snapshots {
            snaps.push(StateVector::from_amplitudes(layout, amps.clone())?);
        }
    }
    trace.snapshots = snaps;
    let out = StateVector::from_amplitudes(layout, amps)?;
    Ok((out, trace))
}

/// Apply the schedule to raw amplitudes without any tracing.
pub fn run_raw(model: &Model, compiled: &[CompiledSubstep], steps: usize, amps: &[crate::group::C64]) -> Vec<crate::group::C64> {
    let mut v = amps.to_vec();
    for _ in 0..steps {
        for sub in compiled {
            v = apply_all(&sub.ops, model.layout(), &v);
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;
    use crate::hamiltonian::Couplings;
    use crate::lattice::LatticeShape;
    use crate::linalg::expm_apply;

    fn model(c: Couplings) -> Model {
        Model::new(GroupSpec::cyclic(2).unwrap(), LatticeShape::new(&[2, 2]).unwrap(), c)
            .unwrap()
            .with_ancillas(1)
            .unwrap()
    }

    #[test]
    fn factor_counts_and_durations() {
        let m = model(Couplings::uniform(1.0));
        let p = factor_kinds(&m).len();
        assert_eq!(p, 2 * 2 + 3);
        let s1 = build_schedule(&m, 1.2, 3, Order::First, GmVariant::Direct, 1).unwrap();
        let s2 = build_schedule(&m, 1.2, 3, Order::Second, GmVariant::Direct, 1).unwrap();
        assert_eq!(s1.step.len(), p);
        assert_eq!(s2.step.len(), 2 * p - 1);
        for s in [&s1, &s2] {
            for (_, d) in s.durations() {
                assert!((d - 1.2).abs() < 1e-12);
            }
        }
        // Mirror symmetry around the central W_M.
        for i in 0..p - 1 {
            assert_eq!(s2.step[i].kind, s2.step[2 * p - 2 - i].kind);
        }
        assert_eq!(s1.step[0].kind, FactorKind::Magnetic);
        assert_eq!(s1.step[p - 1].kind, FactorKind::Mass);
        assert!(build_schedule(&m, 1.0, 0, Order::First, GmVariant::Direct, 1).is_err());
    }

    #[test]
    fn commuting_local_model_is_exact_in_one_step() {
        let m = model(Couplings { lambda_b: 0.0, lambda_e: 0.8, lambda_gm: 0.0, mass: 0.6 });
        let s = build_schedule(&m, 0.9, 1, Order::First, GmVariant::Direct, 1).unwrap();
        let x = StateVector::random(m.layout(), 2);
        let (y, _) = run(&m, &s, &x).unwrap();
        let want = expm_apply(&m.build_h(), 0.9, x.amplitudes(), 1024);
        let err: f64 = y.amplitudes().iter().zip(&want).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-12);
    }

    #[test]
    fn trace_stays_gauge_invariant_and_disentangled() {
        let m = model(Couplings::uniform(1.0));
        let x = m.build_vacuum();
        let s = build_schedule(&m, 0.6, 3, Order::Second, GmVariant::Mediated, 1).unwrap();
        let opts = RunOptions { every_substep: true, ..Default::default() };
        let (_, tr) = run_with(&m, &s, &x, opts).unwrap();
        assert_eq!(tr.entries.len(), 3 * tr.labels.len());
        assert!(tr.max_violation() < 1e-10);
        assert!(tr.min_fidelity() > 1.0 - 1e-12);
        assert!(tr.entries.windows(2).all(|w| w[0].time <= w[1].time));
    }

    #[test]
    fn second_order_beats_first_order() {
        let m = model(Couplings::uniform(1.0));
        let x = m.build_vacuum();
        let want = expm_apply(&m.build_h(), 1.0, x.amplitudes(), 1024);
        let err = |o| {
            let s = build_schedule(&m, 1.0, 32, o, GmVariant::Direct, 1).unwrap();
            let (y, _) = run(&m, &s, &x).unwrap();
            y.amplitudes().iter().zip(&want).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
        };
        let e1 = err(Order::First);
        let e2 = err(Order::Second);
        assert!(e1 > 1e-4 && e2 < e1 / 4.0, "{e1} {e2}");
    }

    #[test]
    fn variants_give_same_step_operator() {
        let m = model(Couplings::uniform(0.5));
        let a = build_schedule(&m, 0.3, 1, Order::Second, GmVariant::Direct, 1).unwrap();
        let b = build_schedule(&m, 0.3, 1, Order::Second, GmVariant::Mediated, 1).unwrap();
        let x = StateVector::random(m.layout(), 9);
        let x = {
            let l = m.layout();
            let mut v = x.into_amplitudes();
            for (i, z) in v.iter_mut().enumerate() {
                if l.reg_value(i, l.ancilla_reg(0).unwrap()) != 0 {
                    *z = crate::group::C64::new(0.0, 0.0);
                }
            }
            StateVector::from_amplitudes(l, v).unwrap()
        };
        let (ya, _) = run(&m, &a, &x).unwrap();
        let (yb, _) = run(&m, &b, &x).unwrap();
        assert!(ya.distance(&yb) < 1e-12);
        assert!(a.step_operator(&m).unwrap().unitarity_deviation() < 1e-12);
    }
}
