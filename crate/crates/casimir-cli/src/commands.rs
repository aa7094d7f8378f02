//! Command implementations.

use std::path::Path;

use casimir_core::couplings::effective_matrix_elements;
use casimir_core::decoherence::{
    decoherence_time, linear_entropy_general, linear_entropy_resonant, EntropyOptions, ResonantEntropyOptions,
};
use casimir_core::fock;
use casimir_core::kinetics::{
    delta_n_general, delta_n_ideal_vacuum, delta_n_resonant, totals, GeneralOptions, ResonanceOptions, DEGENERATE, PAIR_CC,
    PAIR_CR, SCATTER_CC, SCATTER_CR,
};
use casimir_core::oracle::{
    evolve, reservoir_band, run_with_check, trajectory_rows, MixedState, OracleOptions, OracleReport, OracleRun,
    DEFAULT_DIMENSION_CAP,
};
use casimir_core::spectrum::{exact_eigenfrequencies, perturbative_eigenfrequencies};
use casimir_core::{
    Branch, CouplingModel, EffectiveCouplings, MomentMode, MotionLaw, OverlapMethod, PairSelection, QDependence, ResonantState,
    SpectrumSolver, StateDescriptor, SystemConfig,
};
use casimir_core::ModeState;
use clap::ValueEnum;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::output::{Cell, Sink, Table};
use crate::settings::{Axis, InitialState, Method, RunConfig};
use crate::svg::Plot;

/// Largest detuning in the figure scans.
pub const FIGURE_P_MAX: u32 = 20;
/// Photon-number channels, in column order.
pub const CHANNELS: [&str; 5] = [DEGENERATE, PAIR_CC, SCATTER_CC, PAIR_CR, SCATTER_CR];
const ENTROPY_CHANNELS: [&str; 4] = [PAIR_CC, SCATTER_CC, PAIR_CR, SCATTER_CR];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureId {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
}

/// Map `f` over `items` on a pool of `rc.jobs` workers, keeping input order.
fn par_map<T: Sync, R: Send>(rc: &RunConfig, items: &[T], f: impl Fn(&T) -> CliResult<R> + Sync + Send) -> CliResult<Vec<R>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(rc.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    pool.install(|| items.par_iter().map(f).collect())
}

fn couplings(cfg: &SystemConfig) -> CliResult<EffectiveCouplings> {
    Ok(effective_matrix_elements(&SpectrumSolver::exact(*cfg), OverlapMethod::Analytic)?)
}

fn cat_alpha(rc: &RunConfig) -> Complex64 {
    Complex64::new(rc.alpha2.sqrt(), 0.0)
}

/// Spectators thermal at `temp`; mode `k` as chosen by `--state`.
fn initial_state(rc: &RunConfig, k: usize, omega_c: &[f64], omega_r: &[f64], temp: f64) -> CliResult<ModeState> {
    let thermal = ModeState::thermal_from_frequencies(omega_c, omega_r, k, temp)?;
    let d = match rc.state {
        InitialState::Thermal => return Ok(thermal),
        InitialState::Vacuum => StateDescriptor::Vacuum,
        InitialState::Cat => StateDescriptor::Cat { alpha: cat_alpha(rc) },
    };
    Ok(ModeState::new(thermal.occupations_c, thermal.occupations_r, k, d)?)
}

fn model_frequencies(model: &CouplingModel) -> (Vec<f64>, Vec<f64>) {
    let cfg = model.config();
    let c = (1..=cfg.k_c).map(|l| model.omega0(Branch::Cavity, l)).collect();
    let r = (1..=cfg.k_r).map(|l| model.omega0(Branch::Reservoir, l)).collect();
    (c, r)
}

fn resonant_state(rc: &RunConfig) -> Option<ResonantState> {
    match rc.state {
        InitialState::Vacuum => Some(ResonantState::Vacuum),
        InitialState::Cat => Some(ResonantState::Cat { alpha: cat_alpha(rc), moments: MomentMode::Coherent }),
        InitialState::Thermal => None,
    }
}

pub fn spectrum(rc: &RunConfig) -> CliResult<()> {
    let sink = Sink::new(rc, rc.describe("spectrum"))?;
    let cfg = rc.system_for(rc.p)?;
    let mut table = Table::new("spectrum", &["branch", "k", "omega_exact", "omega_perturbative", "eta"]);
    for branch in [Branch::Cavity, Branch::Reservoir] {
        let n = cfg.cutoff(branch);
        let exact = exact_eigenfrequencies(&cfg, cfg.q0, branch, n)?;
        let pert = perturbative_eigenfrequencies(&cfg, cfg.q0, branch, n);
        for (i, (e, p)) in exact.iter().zip(&pert).enumerate() {
            let eta = if cfg.is_ideal() { 0.0 } else { e / cfg.gamma };
            table.push(vec![branch.tag().into(), (i + 1).into(), (*e).into(), (*p).into(), eta.into()]);
        }
    }
    sink.table(&table, Some(&Plot::lines("eigenfrequencies", "k", &["omega_exact"]).grouped(&["branch"])))
}

pub fn figure(rc: &RunConfig, id: FigureId) -> CliResult<()> {
    let name = id.to_possible_value().expect("named").get_name().to_string();
    let sink = Sink::new(rc, rc.describe(&format!("figure {name}")))?;
    let opts = ResonanceOptions::default();
    let ps: Vec<u32> = (1..=FIGURE_P_MAX).collect();
    let vacuum_totals = |p: f64| -> CliResult<casimir_core::kinetics::Totals> {
        let cfg = rc.system_for(p)?;
        let e = couplings(&cfg)?;
        let st = ModeState::thermal_from_frequencies(&e.spectrum.omega_c, &e.spectrum.omega_r, 1, rc.temperature)?;
        Ok(totals(p, 1.0 / p, &st, &e, &opts)?)
    };
    match id {
        FigureId::Fig2 => {
            let scans = par_map(rc, &[14.0, 15.0], |p| vacuum_totals(*p))?;
            let mut t = Table::new(&name, &["p", "tau", "k", "delta_n"]);
            for s in &scans {
                for (i, d) in s.per_mode.iter().enumerate() {
                    t.push(vec![s.p.into(), s.tau.into(), (i + 1).into(), (*d).into()]);
                }
            }
            sink.table(&t, Some(&Plot::lines("photon number vs mode, tau = 1/p", "k", &["delta_n"]).grouped(&["p"]).bars()))
        }
        FigureId::Fig3 => {
            let k = 7;
            let rows = par_map(rc, &ps, |p| {
                let pf = *p as f64;
                let cfg = rc.system_for(pf)?;
                let e = couplings(&cfg)?;
                let st = ModeState::thermal_from_frequencies(&e.spectrum.omega_c, &e.spectrum.omega_r, k, rc.temperature)?;
                Ok(delta_n_resonant(k, pf, 1.0 / pf, &st, &e, &opts)?.delta_n)
            })?;
            let mut t = Table::new(&name, &["p", "tau", "k", "delta_n"]);
            for (p, d) in ps.iter().zip(&rows) {
                t.push(vec![(*p as f64).into(), (1.0 / *p as f64).into(), k.into(), (*d).into()]);
            }
            sink.table(&t, Some(&Plot::lines("photon number of mode 7 vs p, tau = 1/p", "p", &["delta_n"]).bars()))
        }
        FigureId::Fig4 => {
            let scans = par_map(rc, &ps, |p| vacuum_totals(*p as f64))?;
            let mut t = Table::new(&name, &["p", "tau", "n_total", "energy"]);
            for s in &scans {
                t.push(vec![s.p.into(), s.tau.into(), s.n_total.into(), s.energy.into()]);
            }
            sink.table(&t, Some(&Plot::lines("total photons and energy / omega_1, tau = 1/p", "p", &["n_total", "energy"])))
        }
        FigureId::Fig5 => {
            let cfg = rc.system_for(2.0)?;
            let e = couplings(&cfg)?;
            let w1 = e.spectrum.omega_c[0];
            let hot_t = w1 / 1.1_f64.ln();
            let cold = ModeState::vacuum(1, cfg.k_c, cfg.k_r)?;
            let hot = ModeState::thermal_from_frequencies(&e.spectrum.omega_c, &e.spectrum.omega_r, 1, hot_t)?;
            let mut t = Table::new(&name, &["tau", "delta_n_zero_temperature", "delta_n_thermal", "temperature"]);
            for i in 0..=50 {
                let tau = i as f64 / 50.0;
                let c = delta_n_resonant(1, 2.0, tau, &cold, &e, &opts)?.delta_n;
                let h = delta_n_resonant(1, 2.0, tau, &hot, &e, &opts)?.delta_n;
                t.push(vec![tau.into(), c.into(), h.into(), hot_t.into()]);
            }
            sink.table(&t, Some(&Plot::lines("photon number of mode 1 at p = 2", "tau", &["delta_n_zero_temperature", "delta_n_thermal"])))
        }
        FigureId::Fig6 => {
            let items: Vec<(f64, u32)> = [rc.gamma, rc.gamma_alt].iter().flat_map(|g| ps.iter().map(move |p| (*g, *p))).collect();
            let state = ResonantState::Cat { alpha: cat_alpha(rc), moments: MomentMode::Coherent };
            let rows = par_map(rc, &items, |(g, p)| {
                let pf = *p as f64;
                let e = couplings(&rc.system_for(pf)?.with_gamma(*g))?;
                [0.1, 0.25]
                    .iter()
                    .map(|tau| Ok((*tau, linear_entropy_resonant(1, pf, *tau, &state, &e, &ResonantEntropyOptions::default())?)))
                    .collect::<CliResult<Vec<_>>>()
            })?;
            let mut header = vec!["gamma", "tau", "p", "entropy"];
            header.extend(ENTROPY_CHANNELS);
            let mut t = Table::new(&name, &header);
            for tau_index in 0..2 {
                for ((g, p), r) in items.iter().zip(&rows) {
                    let (tau, s) = &r[tau_index];
                    let mut row: Vec<Cell> = vec![(*g).into(), (*tau).into(), (*p as f64).into(), s.s.into()];
                    row.extend(ENTROPY_CHANNELS.iter().map(|c| Cell::from(s.channel(c))));
                    t.push(row);
                }
            }
            sink.table(&t, Some(&Plot::lines("linear entropy of the cat in mode 1", "p", &["entropy"]).grouped(&["gamma", "tau"])))
        }
        FigureId::Fig7 => {
            let items: Vec<(f64, u32)> = [rc.gamma, rc.gamma_alt].iter().flat_map(|g| ps.iter().map(move |p| (*g, *p))).collect();
            let rows = par_map(rc, &items, |(g, p)| {
                let pf = *p as f64;
                let e = couplings(&rc.system_for(pf)?.with_gamma(*g))?;
                Ok(decoherence_time(1, pf, cat_alpha(rc), MomentMode::Coherent, &e, &ResonantEntropyOptions::default())?.tau_d)
            })?;
            let mut t = Table::new(&name, &["gamma", "p", "tau_d", "tau_d_ratio"]);
            for (i, ((g, p), td)) in items.iter().zip(&rows).enumerate() {
                let first = rows[i - (*p as usize - 1)];
                t.push(vec![(*g).into(), (*p as f64).into(), (*td).into(), (td / first).into()]);
            }
            sink.table(&t, Some(&Plot::lines("decoherence time relative to p = 1", "p", &["tau_d_ratio"]).grouped(&["gamma"])))
        }
    }
}

/// One photon-number evaluation at (k, p, tau, temperature).
struct Point {
    delta_n: f64,
    channels: Vec<Option<f64>>,
    notes: Vec<String>,
}

fn sinusoid(cfg: &SystemConfig, eps: f64, p: f64, tau: f64) -> CliResult<(MotionLaw, f64)> {
    if eps == 0.0 {
        return Err(CliError::Config("eps = 0 gives no finite time for a given tau".into()));
    }
    let w1 = cfg.omega1();
    Ok((MotionLaw::sinusoidal(cfg.q0, eps, p, w1)?, tau / (eps * w1)))
}

fn photon_point(rc: &RunConfig, method: Method, k: usize, p: f64, tau: f64, temp: f64) -> CliResult<Point> {
    let cfg = rc.system_for(p)?.with_temperature(temp);
    let from_result = |r: casimir_core::KineticsResult| Point {
        delta_n: r.delta_n,
        channels: CHANNELS.iter().map(|c| r.channels.get(*c).copied()).collect(),
        notes: r.notes,
    };
    match method {
        Method::Resonant => {
            let e = couplings(&cfg)?;
            let st = initial_state(rc, k, &e.spectrum.omega_c, &e.spectrum.omega_r, temp)?;
            Ok(from_result(delta_n_resonant(k, p, tau, &st, &e, &ResonanceOptions::default())?))
        }
        Method::GeneralIntegral => {
            let (m, t) = sinusoid(&cfg, rc.eps, p, tau)?;
            let model = CouplingModel::for_motion(SpectrumSolver::exact(cfg), &m, t, PairSelection::Mode(k))?;
            let (wc, wr) = model_frequencies(&model);
            let st = initial_state(rc, k, &wc, &wr, temp)?;
            Ok(from_result(delta_n_general(&st, &model, &m, t, &GeneralOptions::default())?))
        }
        Method::IdealVacuum => {
            if temp > 0.0 || rc.state != InitialState::Vacuum {
                return Err(CliError::Config("ideal-vacuum needs temp = 0 and state = vacuum".into()));
            }
            let (m, t) = sinusoid(&cfg.ideal(), rc.eps, p, tau)?;
            Ok(from_result(delta_n_ideal_vacuum(k, &m, t, cfg.k_c, &GeneralOptions::default())?))
        }
        Method::Oracle => {
            let o = oracle_setup(rc, &cfg, k, p, tau, temp)?;
            let r = run_with_check(&o.run, (Branch::Cavity, k), &o.model, &o.motion, o.t, &OracleOptions::default())?;
            Ok(Point { delta_n: r.delta_n(), channels: vec![None; CHANNELS.len()], notes: r.notes })
        }
    }
}

pub fn scan(rc: &RunConfig, axis: Axis) -> CliResult<()> {
    let method = rc.method.unwrap_or(Method::Resonant);
    let mut comment = rc.describe("scan") + &format!(" axis={}", axis.column());
    if rc.method.is_none() {
        comment.push_str(" method=resonant");
    }
    if method == Method::Oracle {
        comment.push_str(&rc.describe_oracle());
    }
    let sink = Sink::new(rc, comment)?;
    let values = rc.scan_values(axis)?;
    let points: Vec<(usize, f64, f64, f64)> = values
        .iter()
        .map(|v| match axis {
            Axis::K if *v >= 1.0 && v.fract() == 0.0 => Ok((*v as usize, rc.p, rc.tau, rc.temperature)),
            Axis::K => Err(CliError::Config(format!("k = {v} is not a positive integer"))),
            Axis::P => Ok((rc.k, *v, rc.tau, rc.temperature)),
            Axis::Tau => Ok((rc.k, rc.p, *v, rc.temperature)),
            Axis::Temperature => Ok((rc.k, rc.p, rc.tau, *v)),
        })
        .collect::<CliResult<_>>()?;
    let results = par_map(rc, &points, |(k, p, tau, temp)| photon_point(rc, method, *k, *p, *tau, *temp))?;
    let mut header = vec!["k", "p", "tau", "temperature", "delta_n"];
    header.extend(CHANNELS);
    let mut t = Table::new(&format!("scan_{}", axis.column()), &header);
    for ((k, p, tau, temp), r) in points.iter().zip(&results) {
        let mut row: Vec<Cell> = vec![(*k).into(), (*p).into(), (*tau).into(), (*temp).into(), r.delta_n.into()];
        row.extend(r.channels.iter().map(|c| Cell::from(*c)));
        t.push(row);
        for n in &r.notes {
            eprintln!("note: k={k} p={p} tau={tau} T={temp}: {n}");
        }
    }
    sink.table(&t, Some(&Plot::lines(&format!("photon number vs {}", axis.column()), axis.column(), &["delta_n"])))
}

#[derive(Debug, Deserialize)]
struct Sample {
    t: f64,
    q: f64,
    qdot: f64,
}

/// Read a `t,q,qdot` table; `#` lines are comments.
pub fn read_trajectory(path: &Path) -> CliResult<MotionLaw> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let samples = reader
        .deserialize::<Sample>()
        .map(|r| r.map(|s| (s.t, s.q, s.qdot)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    MotionLaw::tabulated(&samples).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn motion_json(m: &MotionLaw) -> Value {
    match m {
        MotionLaw::Static { q0 } => json!({ "kind": "static", "q0": q0 }),
        MotionLaw::Sinusoidal { q0, epsilon, p, omega1 } => {
            json!({ "kind": "sinusoidal", "q0": q0, "eps": epsilon, "p": p, "omega1": omega1 })
        }
        MotionLaw::Tabulated(tab) => json!({ "kind": "tabulated", "samples": tab.t.len() }),
    }
}

pub fn general(rc: &RunConfig) -> CliResult<()> {
    let method = rc.method.unwrap_or(Method::GeneralIntegral);
    if !matches!(method, Method::GeneralIntegral | Method::IdealVacuum) {
        return Err(CliError::Config("general accepts method general-integral or ideal-vacuum".into()));
    }
    let mut comment = rc.describe("general");
    if let Some(p) = &rc.trajectory {
        comment.push_str(&format!(" trajectory={}", p.display()));
    }
    let sink = Sink::new(rc, comment)?;
    let cfg = rc.system_for(rc.p)?;
    let cfg = if method == Method::IdealVacuum { cfg.ideal() } else { cfg };
    let (motion, t) = match &rc.trajectory {
        Some(path) => {
            let m = read_trajectory(path)?;
            let end = match &m {
                MotionLaw::Tabulated(tab) => *tab.t.last().expect("validated table"),
                _ => unreachable!("tabulated input"),
            };
            (m, rc.t.unwrap_or(end))
        }
        None => match rc.t {
            Some(t) => (MotionLaw::sinusoidal(cfg.q0, rc.eps, rc.p, cfg.omega1())?, t),
            None => sinusoid(&cfg, rc.eps, rc.p, rc.tau)?,
        },
    };
    if !motion.covers(t) {
        return Err(CliError::Input(format!("trajectory does not cover [0, {t}]")));
    }
    let k = rc.k;
    let mut record = json!({
        "config": sink.comment(),
        "motion": motion_json(&motion),
        "k": k,
        "t": t,
    });
    if method == Method::IdealVacuum {
        if rc.temperature > 0.0 || rc.state != InitialState::Vacuum {
            return Err(CliError::Config("ideal-vacuum needs temp = 0 and state = vacuum".into()));
        }
        let r = delta_n_ideal_vacuum(k, &motion, t, cfg.k_c, &GeneralOptions::default())?;
        record["tau"] = json!(r.tau);
        record["delta_n"] = serde_json::to_value(&r)?;
        return sink.record("general", &record);
    }
    let model = CouplingModel::for_motion(SpectrumSolver::exact(cfg), &motion, t, PairSelection::Mode(k))?;
    let (wc, wr) = model_frequencies(&model);
    let st = initial_state(rc, k, &wc, &wr, rc.temperature)?;
    let dn = delta_n_general(&st, &model, &motion, t, &GeneralOptions::default())?;
    let s = linear_entropy_general(&st, &model, &motion, t, &EntropyOptions::default())?;
    record["tau"] = json!(dn.tau);
    record["delta_n"] = serde_json::to_value(&dn)?;
    record["entropy"] = serde_json::to_value(&s)?;
    if let (MotionLaw::Sinusoidal { p, .. }, Some(tau)) = (&motion, dn.tau) {
        let e = couplings(&cfg)?;
        let st_c = initial_state(rc, k, &e.spectrum.omega_c, &e.spectrum.omega_r, rc.temperature)?;
        let closed_n = delta_n_resonant(k, *p, tau, &st_c, &e, &ResonanceOptions::default())?;
        let closed_s = match resonant_state(rc) {
            Some(rs) => Some(linear_entropy_resonant(k, *p, tau, &rs, &e, &ResonantEntropyOptions::default())?.s),
            None => None,
        };
        record["closed_form"] = json!({ "delta_n": closed_n.delta_n, "entropy": closed_s, "channels": closed_n.channels });
    }
    sink.record("general", &record)
}

struct OracleSetup {
    run: OracleRun,
    model: CouplingModel,
    motion: MotionLaw,
    t: f64,
}

/// Cavity modes 1..=modes plus an optional reservoir band; spectators thermal at `temp`.
fn oracle_setup(rc: &RunConfig, cfg: &SystemConfig, k: usize, p: f64, tau: f64, temp: f64) -> CliResult<OracleSetup> {
    if k > rc.modes {
        return Err(CliError::Config(format!("mode {k} is not among the {} oracle modes", rc.modes)));
    }
    let (motion, t) = sinusoid(cfg, rc.eps, p, tau)?;
    // The cavity cutoff is the oracle's own mode set, so the same-mode general integrals see the same couplings.
    let solver = SpectrumSolver::exact(SystemConfig { k_c: rc.modes.max(k), ..*cfg });
    let band = if rc.band > 0 {
        let probe = CouplingModel::for_motion(solver.clone(), &motion, t, PairSelection::Mode(k))?;
        reservoir_band(&probe, k, p, rc.band)
    } else {
        Vec::new()
    };
    let cavity: Vec<usize> = (1..=rc.modes).collect();
    let mut pairs: Vec<(Branch, usize)> = cavity.iter().map(|l| (Branch::Cavity, *l)).collect();
    pairs.extend(band.iter().map(|l| (Branch::Reservoir, *l)));
    let model = CouplingModel::new(solver, motion.q_range(t), PairSelection::Modes(pairs), OverlapMethod::default(), QDependence::default())?;
    let mut states = Vec::with_capacity(cavity.len());
    for l in &cavity {
        let mean = casimir_core::kinetics::thermal_occupation(model.omega0(Branch::Cavity, *l), temp);
        let d = if *l != k {
            StateDescriptor::Thermal { mean }
        } else {
            match rc.state {
                InitialState::Vacuum => StateDescriptor::Vacuum,
                InitialState::Thermal => StateDescriptor::Thermal { mean },
                InitialState::Cat => StateDescriptor::Cat { alpha: cat_alpha(rc) },
            }
        };
        states.push(d.density_matrix()?);
    }
    let run = OracleRun {
        cavity_modes: cavity,
        reservoir_modes: band,
        cavity_n_max: rc.nmax,
        reservoir_n_max: 1,
        cavity_states: states,
        cap: DEFAULT_DIMENSION_CAP,
    };
    Ok(OracleSetup { run, model, motion, t })
}

fn ratio(a: f64, b: Option<f64>) -> Value {
    match b {
        Some(b) if b != 0.0 => json!(a / b),
        _ => Value::Null,
    }
}

pub fn oracle_compare(rc: &RunConfig) -> CliResult<()> {
    let sink = Sink::new(rc, rc.describe("oracle-compare") + &rc.describe_oracle())?;
    let (k, p, tau) = (rc.k, rc.p, rc.tau);
    let cfg = rc.system_for(p)?;
    let o = oracle_setup(rc, &cfg, k, p, tau, rc.temperature)?;
    let report: OracleReport = run_with_check(&o.run, (Branch::Cavity, k), &o.model, &o.motion, o.t, &OracleOptions::default())?;

    let e = couplings(&cfg)?;
    let st = initial_state(rc, k, &e.spectrum.omega_c, &e.spectrum.omega_r, rc.temperature)?;
    let closed_n = delta_n_resonant(k, p, tau, &st, &e, &ResonanceOptions::default())?.delta_n;
    let closed_s = match resonant_state(rc) {
        Some(rs) => Some(linear_entropy_resonant(k, p, tau, &rs, &e, &ResonantEntropyOptions::default())?.s),
        None => None,
    };

    // The general integrals over the oracle's own cavity modes, reservoir excluded.
    let (wc, wr) = model_frequencies(&o.model);
    let gst = initial_state(rc, k, &wc, &wr, rc.temperature)?;
    let gopts = GeneralOptions { include_reservoir: false, ..GeneralOptions::default() };
    let mut notes = report.notes.clone();
    let general_n = match delta_n_general(&gst, &o.model, &o.motion, o.t, &gopts) {
        Ok(r) => Some(r.delta_n),
        Err(err) => {
            notes.push(format!("general photon number unavailable: {err}"));
            None
        }
    };
    let general_s = match linear_entropy_general(&gst, &o.model, &o.motion, o.t, &EntropyOptions { general: gopts, ..Default::default() }) {
        Ok(r) => Some(r.s - r.s0),
        Err(err) => {
            notes.push(format!("general entropy unavailable: {err}"));
            None
        }
    };
    let (on, os) = (report.delta_n(), report.entropy_growth());
    let sign_ok = closed_n == 0.0 || on.signum() == closed_n.signum();
    if !sign_ok {
        notes.push(format!("oracle and closed form disagree in sign: {on:e} vs {closed_n:e}"));
    }
    let record = json!({
        "config": sink.comment(),
        "k": k,
        "p": p,
        "tau": tau,
        "t": o.t,
        "reservoir_band": o.run.reservoir_modes,
        "oracle": report,
        "delta_n": { "oracle": on, "closed_form": closed_n, "general_same_modes": general_n,
                     "oracle_over_closed": ratio(on, Some(closed_n)), "oracle_over_general": ratio(on, general_n) },
        "entropy": { "oracle": os, "closed_form": closed_s, "general_same_modes": general_s,
                     "oracle_over_closed": ratio(os, closed_s), "oracle_over_general": ratio(os, general_s) },
        "sign_agreement": sign_ok,
        "notes": notes,
    });
    sink.record("oracle_compare", &record)?;

    let system = o.run.system(rc.nmax)?;
    let mut factors = o.run.cavity_states.clone();
    factors.extend(std::iter::repeat_n(fock::thermal(0.0, 1e-16), o.run.reservoir_modes.len()));
    let (rho0, _) = MixedState::product(&system, &factors)?;
    let grid: Vec<f64> = (0..rc.samples).map(|i| o.t * i as f64 / (rc.samples - 1) as f64).collect();
    let traj = evolve(&system, &rho0, &o.model, &o.motion, &grid, &OracleOptions::default())?;
    let labels: Vec<String> = system.modes.iter().map(|(b, l)| format!("{b}{l}")).collect();
    let mut header = vec!["t".to_string(), "tau".to_string()];
    header.extend(labels.iter().map(|l| format!("n_{l}")));
    header.extend(labels.iter().map(|l| format!("s_{l}")));
    header.extend(["purity".to_string(), "trace_drift".to_string()]);
    let mut table = Table { name: "oracle_trajectory".into(), header, rows: Vec::new() };
    for r in trajectory_rows(&traj, &system) {
        let mut row: Vec<Cell> = vec![r.t.into(), (rc.eps * o.motion_omega1() * r.t).into()];
        row.extend(r.occupations.iter().map(|v| Cell::from(*v)));
        row.extend(r.entropies.iter().map(|v| Cell::from(*v)));
        row.extend([r.purity.into(), r.trace_drift.into()]);
        table.push(row);
    }
    sink.side_table(&table)
}

impl OracleSetup {
    fn motion_omega1(&self) -> f64 {
        match self.motion {
            MotionLaw::Sinusoidal { omega1, .. } => omega1,
            _ => f64::NAN,
        }
    }
}
