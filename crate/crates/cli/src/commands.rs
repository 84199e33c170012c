//! The four subcommands. Each returns a summary for stdout and writes its
//! artifacts into the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use gaugesim::bounds::{self, BoundParams, BoundReport, MeasuredCommutator};
use gaugesim::engine::observables::{plaquette_values, rectangle, vertex_densities, wilson_loop};
use gaugesim::engine::schedule::run_raw;
use gaugesim::engine::{build_schedule, GmVariant, Order};
use gaugesim::hamiltonian::Model;
use gaugesim::state::ancilla_state_fidelity;
use gaugesim::verify::{run_suite, trotter_sweep, Faults, SlopeFit, Suite, VerifyOptions, VerifyReport};
use gaugesim::{GroupKind, LatticeShape, StateVector};
use serde::Serialize;

use crate::config::{ObservableName, RunConfig};
use crate::CliError;

pub const DEFAULT_MAX_MEM: u64 = 8 << 30;
const AMP_BYTES: u64 = 16;

#[derive(Debug, Clone)]
pub struct GlobalOptions {
    pub out: PathBuf,
    pub seed: u64,
    pub max_mem: u64,
}

/// Result of a command: text for stdout and whether every assertion held.
#[derive(Debug)]
pub struct Outcome {
    pub summary: String,
    pub passed: bool,
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

fn write_csv(dir: &Path, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io(e.to_string()))?;
    w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(path)
}

/// Rough peak memory of a state-vector run: a handful of amplitude
/// buffers plus sparse gate rows.
pub fn estimate_state_bytes(dim: usize) -> u64 {
    dim as u64 * AMP_BYTES * 8
}

fn check_memory(what: &str, needed: u64, cap: u64) -> Result<(), CliError> {
    if needed > cap {
        return Err(CliError::usage(
            "too_large",
            format!("{what} needs an estimated {needed} bytes, above the cap of {cap} bytes (raise --max-mem)"),
        ));
    }
    Ok(())
}

fn group_name(model: &Model) -> String {
    match model.group().kind() {
        GroupKind::Cyclic(n) => format!("Z{n}"),
        GroupKind::Dihedral(n) => format!("D{n}"),
    }
}

// ---- simulate --------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub command: &'static str,
    pub group: String,
    pub extents: Vec<usize>,
    pub dim: usize,
    pub ancillas: usize,
    pub t: f64,
    pub steps: usize,
    pub order: Order,
    pub variant: GmVariant,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub max_gauge_violation: Option<f64>,
    pub min_ancilla_fidelity: Option<f64>,
}

fn series_columns(cfg: &RunConfig, model: &Model) -> Vec<String> {
    let mut cols = vec!["step".to_string(), "time".to_string()];
    for o in cfg.observables() {
        match o {
            ObservableName::Plaquette => cols.push("plaquette".into()),
            ObservableName::MagneticEnergy => cols.push("magnetic_energy".into()),
            ObservableName::Density => {
                cols.extend((0..model.shape().n_vertices()).map(|v| format!("density_{v}")));
            }
            ObservableName::GaugeViolation => cols.push("gauge_violation".into()),
            ObservableName::AncillaFidelity => cols.push("ancilla_fidelity".into()),
            ObservableName::Wilson => {
                cols.push("wilson_re".into());
                cols.push("wilson_im".into());
            }
        }
    }
    cols
}

fn series_row(cfg: &RunConfig, model: &Model, state: &StateVector, step: usize, time: f64) -> Result<Vec<f64>, CliError> {
    let mut row = vec![step as f64, time];
    let plaqs = model.shape().enumerate_plaquettes();
    for o in cfg.observables() {
        match o {
            ObservableName::Plaquette => {
                let v = plaquette_values(model, state, &plaqs)?;
                row.push(if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 });
            }
            ObservableName::MagneticEnergy => {
                let v = plaquette_values(model, state, &plaqs)?;
                row.push(model.couplings().lambda_b * v.iter().sum::<f64>());
            }
            ObservableName::Density => row.extend(vertex_densities(model, state)?),
            ObservableName::GaugeViolation => row.push(model.gauge_violation(state)?),
            ObservableName::AncillaFidelity => {
                let n = model.layout().n_ancillas();
                let f = if n == 0 {
                    1.0
                } else {
                    ancilla_state_fidelity(state, &vec![model.group().identity(); n])?
                };
                row.push(f);
            }
            ObservableName::Wilson => {
                let w = cfg.wilson.as_ref().expect("validated");
                let z = wilson_loop(model, state, w.start, &rectangle(w.k, w.l, w.a, w.b))?;
                row.push(z.re);
                row.push(z.im);
            }
        }
    }
    Ok(row)
}

pub fn simulate(cfg: &RunConfig, opts: &GlobalOptions) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let dim = model.layout().dim();
    check_memory("simulation", estimate_state_bytes(dim), opts.max_mem)?;
    let ev = &cfg.evolution;
    let slots = model.layout().n_ancillas().max(1);
    let sched = build_schedule(&model, ev.t, ev.steps, ev.order, ev.variant, slots)?;
    let compiled = sched.compile_step(&model)?;
    let mut state = cfg.initial_state(&model)?;
    let tau = ev.t / ev.steps as f64;
    let columns = series_columns(cfg, &model);
    let mut rows = Vec::with_capacity(ev.steps + 1);
    for step in 0..=ev.steps {
        if step > 0 {
            let amps = run_raw(&model, &compiled, 1, state.amplitudes());
            state = StateVector::from_amplitudes(model.layout(), amps)?;
        }
        rows.push(series_row(cfg, &model, &state, step, step as f64 * tau)?);
    }
    let column_max = |name: &str, pick: fn(f64, f64) -> f64, init: f64| {
        columns
            .iter()
            .position(|c| c == name)
            .map(|k| rows.iter().map(|r| r[k]).fold(init, pick))
    };
    let report = SimulateReport {
        command: "simulate",
        group: group_name(&model),
        extents: model.shape().extents().to_vec(),
        dim,
        ancillas: model.layout().n_ancillas(),
        t: ev.t,
        steps: ev.steps,
        order: ev.order,
        variant: ev.variant,
        max_gauge_violation: column_max("gauge_violation", f64::max, 0.0),
        min_ancilla_fidelity: column_max("ancilla_fidelity", f64::min, 1.0),
        columns: columns.clone(),
        rows: rows.clone(),
    };
    let text_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(k, x)| if k == 0 { format!("{}", *x as usize) } else { format!("{x:e}") })
                .collect()
        })
        .collect();
    let csv_path = write_csv(&opts.out, "series.csv", &columns, &text_rows)?;
    let json_path = write_json(&opts.out, "simulate.json", &report)?;
    let mut s = String::new();
    writeln!(s, "{} {:?}: dim {dim}, {} steps of {:?} order", report.group, report.extents, ev.steps, ev.order).unwrap();
    if let Some(v) = report.max_gauge_violation {
        writeln!(s, "max gauge violation {v:.3e}").unwrap();
    }
    if let Some(f) = report.min_ancilla_fidelity {
        writeln!(s, "min ancilla fidelity {f:.15}").unwrap();
    }
    writeln!(s, "wrote {} and {}", csv_path.display(), json_path.display()).unwrap();
    Ok(Outcome {
        summary: s,
        passed: true,
    })
}

// ---- bounds ----------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct CubicForms {
    pub side_length: usize,
    pub first_order: f64,
    pub second_order: f64,
}

#[derive(Debug, Serialize)]
pub struct BoundsOutput {
    pub command: &'static str,
    pub group: String,
    #[serde(flatten)]
    pub report: BoundReport,
    pub cubic: Option<CubicForms>,
    pub measured_commutators: Option<Vec<MeasuredCommutator>>,
}

/// Bound parameters from the configuration without building the state
/// space of the full lattice.
pub fn bound_params(cfg: &RunConfig) -> Result<BoundParams, CliError> {
    let shape = cfg.shape()?;
    let probe = Model::with_spectrum(
        cfg.group_spec()?,
        LatticeShape::new(&[2])?,
        cfg.couplings(),
        cfg.spectrum(&cfg.group_spec()?),
        0,
    )?;
    let p = BoundParams {
        d: shape.d(),
        n_links: shape.link_count(),
        d_u: probe.d_u(),
        maxf: probe.maxf(),
        couplings: cfg.couplings(),
        t: cfg.evolution.t,
        steps: cfg.evolution.steps,
        l: cfg.bounds.side_length,
    };
    p.validate()?;
    Ok(p)
}

pub fn bounds_cmd(cfg: &RunConfig, opts: &GlobalOptions) -> Result<Outcome, CliError> {
    let p = bound_params(cfg)?;
    let report = bounds::bound_report(&p)?;
    let g = cfg.group_spec()?;
    let cubic = match (cfg.bounds.side_length, g.kind()) {
        (Some(l), GroupKind::Cyclic(_)) | (Some(l), GroupKind::Dihedral(3)) => {
            let d3 = g.kind() == GroupKind::Dihedral(3);
            let c = cfg.couplings();
            Some(CubicForms {
                side_length: l,
                first_order: bounds::cubic_bound(d3, Order::First, l, &c, p.t, p.steps)?,
                second_order: bounds::cubic_bound(d3, Order::Second, l, &c, p.t, p.steps)?,
            })
        }
        _ => None,
    };
    // Dense commutators only when the instance is small.
    let measured = match cfg.bare_model() {
        Ok(m) if m.layout().dim() <= bounds::OPERATOR_PROBE_MAX => Some(bounds::measured_commutator_checks(&m)?),
        _ => None,
    };
    let passed = measured
        .as_ref()
        .is_none_or(|ms| ms.iter().all(|m| m.measured <= m.bound + 1e-9 * (1.0 + m.bound)));
    let out = BoundsOutput {
        command: "bounds",
        group: match g.kind() {
            GroupKind::Cyclic(n) => format!("Z{n}"),
            GroupKind::Dihedral(n) => format!("D{n}"),
        },
        report,
        cubic,
        measured_commutators: measured,
    };
    let path = write_json(&opts.out, "bounds.json", &out)?;
    let mut s = String::new();
    writeln!(s, "{:<28} {:>14}", "term", "bound").unwrap();
    for b in out.report.commutators.iter().chain(&out.report.nested) {
        writeln!(s, "{:<28} {:>14.6}", b.name, b.value).unwrap();
    }
    writeln!(s, "{:<28} {:>14.6}", "first order total", out.report.first_order).unwrap();
    writeln!(s, "{:<28} {:>14.6}", "second order total", out.report.second_order).unwrap();
    if let Some(pf) = &out.cubic {
        writeln!(s, "{:<28} {:>14.6}", format!("cubic first (L={})", pf.side_length), pf.first_order).unwrap();
        writeln!(s, "{:<28} {:>14.6}", format!("cubic second (L={})", pf.side_length), pf.second_order).unwrap();
    }
    if let Some(ms) = &out.measured_commutators {
        for m in ms {
            let flag = if m.measured <= m.bound + 1e-9 * (1.0 + m.bound) { "ok" } else { "EXCEEDS" };
            writeln!(s, "measured {:<28} {:>12.6} <= {:>12.6} {flag}", m.name, m.measured, m.bound).unwrap();
        }
    }
    writeln!(s, "wrote {}", path.display()).unwrap();
    Ok(Outcome { summary: s, passed })
}

// ---- verify ----------------------------------------------------------------

pub fn verify_cmd(suite: Suite, faults: Faults, opts: &GlobalOptions) -> Result<Outcome, CliError> {
    let rep: VerifyReport = run_suite(suite, &VerifyOptions { faults, seed: opts.seed })?;
    #[derive(Serialize)]
    struct Out<'a> {
        command: &'static str,
        suite: Suite,
        passed: bool,
        #[serde(flatten)]
        report: &'a VerifyReport,
    }
    let path = write_json(
        &opts.out,
        "verify.json",
        &Out {
            command: "verify",
            suite,
            passed: rep.passed(),
            report: &rep,
        },
    )?;
    let mut s = String::new();
    for c in &rep.checks {
        let op = match c.comparison {
            gaugesim::verify::Comparison::AtMost => "<=",
            gaugesim::verify::Comparison::AtLeast => ">=",
        };
        let tag = if c.pass { "PASS" } else { "FAIL" };
        writeln!(s, "{tag} [{}] {}: {:.3e} {op} {:.3e}", c.suite, c.name, c.value, c.tolerance).unwrap();
    }
    for f in &rep.slopes {
        writeln!(s, "slope {:?} order: {:.4} over N = {:?}", f.order, f.slope, f.steps).unwrap();
    }
    let failed = rep.failures().count();
    writeln!(s, "{} checks, {failed} failed; wrote {}", rep.checks.len(), path.display()).unwrap();
    Ok(Outcome {
        summary: s,
        passed: rep.passed(),
    })
}

// ---- compare ---------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct CompareOutput {
    pub command: &'static str,
    pub group: String,
    pub extents: Vec<usize>,
    pub dim: usize,
    pub t: f64,
    pub variant: GmVariant,
    pub probe: &'static str,
    pub fits: Vec<SlopeFit>,
}

pub fn compare_cmd(cfg: &RunConfig, opts: &GlobalOptions) -> Result<Outcome, CliError> {
    let cmp = cfg
        .compare
        .as_ref()
        .ok_or_else(|| CliError::usage("config", "compare needs a [compare] table with a steps list".into()))?;
    let model = cfg.model()?;
    let dim = model.layout().dim();
    let dense = dim <= bounds::OPERATOR_PROBE_MAX;
    let needed = if dense {
        // Dense propagator, its eigendecomposition and the difference matrix.
        (dim * dim) as u64 * AMP_BYTES * 4
    } else {
        estimate_state_bytes(dim) * 2
    };
    check_memory("comparison", needed, opts.max_mem)?;
    let ev = &cfg.evolution;
    let mut fits = Vec::new();
    for &order in &cmp.orders {
        fits.push(trotter_sweep(&model, ev.t, &cmp.steps, order, ev.variant, opts.seed)?);
    }
    let mut rows = Vec::new();
    let mut passed = true;
    for f in &fits {
        for ((n, e), b) in f.steps.iter().zip(&f.errors).zip(&f.bounds) {
            passed &= e <= b;
            rows.push(vec![
                format!("{:?}", f.order).to_lowercase(),
                n.to_string(),
                format!("{e:e}"),
                format!("{b:e}"),
                format!("{:e}", e / b),
            ]);
        }
    }
    let header: Vec<String> = ["order", "steps", "error", "bound", "ratio"].iter().map(|s| s.to_string()).collect();
    let csv_path = write_csv(&opts.out, "compare.csv", &header, &rows)?;
    let out = CompareOutput {
        command: "compare",
        group: group_name(&model),
        extents: model.shape().extents().to_vec(),
        dim,
        t: ev.t,
        variant: ev.variant,
        probe: if dense { "operator" } else { "states" },
        fits,
    };
    let json_path = write_json(&opts.out, "compare.json", &out)?;
    let mut s = String::new();
    writeln!(s, "{:<7} {:>6} {:>12} {:>12}", "order", "N", "error", "bound").unwrap();
    for r in &rows {
        writeln!(s, "{:<7} {:>6} {:>12} {:>12}", r[0], r[1], r[2], r[3]).unwrap();
    }
    for f in &out.fits {
        if f.steps.len() > 1 {
            writeln!(s, "log-log slope ({:?} order): {:.4}", f.order, f.slope).unwrap();
        }
    }
    writeln!(s, "wrote {} and {}", csv_path.display(), json_path.display()).unwrap();
    Ok(Outcome { summary: s, passed })
}
