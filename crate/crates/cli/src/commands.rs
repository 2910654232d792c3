//! One function per subcommand.
//!
//! Column layouts:
//! - `spectrum.csv`: `j, k_j, E, P`, sorted by `E`.
//! - `zeros.csv`: `x, t, kind, residual`.
//! - `delta.csv`: `V, level, k, E, P_left`, ordered by `(V, level)`.
//! - `simulate.json`: the simulation report with derived ratios.
//! - `sweep.csv`: `state_id, tau, w, V_m, A_w, dK, dV_dpsi, dV_psi0, norm_err, aborted`;
//!   `sweep_fit.json` holds the power-law regression of `dK / A_w`.
//! - `carpet.csv`: `t, x, density, norm`, one line per grid point, `norm` being the
//!   trapezoid integral of the row.
//! - `accounting.csv`: `model, j, k_j, P, E_B, E_B_over_E1`.

use std::path::PathBuf;

use serde::Serialize;
use wellsplit::accounting::{barrier_energy, Outcome, TransitionModel};
use wellsplit::deltasolver::delta_spectrum_in;
use wellsplit::quadrature::trapezoid;
use wellsplit::splitter::{carpet, outcome_probabilities, Caps, OffZero};
use wellsplit::tdse::{fit_power_law, fit_predict, simulate_with, sweep, BarrierRamp, FitPrediction, PowerLawFit, SimReport, SweepJob};
use wellsplit::zerofinder::{zero_events, zeros_at_time, ZeroKind};
use wellsplit::{in_pi2, Error};

use crate::config::RunConfig;
use crate::output::{self, Csv};
use crate::CliError;

pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub caps: Option<Caps>,
    pub desk: bool,
}

impl Context {
    fn caps(&self) -> Caps {
        self.config.caps(self.caps)
    }

    fn section<'a, T>(&self, value: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        value.as_ref().ok_or_else(|| CliError::missing(name))
    }
}

fn warn_off_zero(warnings: &[OffZero]) {
    for w in warnings {
        eprintln!("warning: barrier at {} is not on a zero, |psi| = {:.3e}", w.chi, w.residual);
    }
}

pub fn spectrum(ctx: &Context) -> Result<(), CliError> {
    let (state, split, _) = ctx.config.split_state()?;
    let table = outcome_probabilities(&state, &split, ctx.caps())?;
    warn_off_zero(&table.warnings);

    let mut rows = table.outcomes.clone();
    rows.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.well.cmp(&b.well)).then(a.k.cmp(&b.k)));
    let mut csv = Csv::new(&["j", "k_j", "E", "P"]);
    for o in &rows {
        csv.row(&[o.well.into(), o.k.into(), o.energy.into(), o.probability.into()]);
    }
    let path = output::write(&ctx.out, "spectrum.csv", &csv.into_string())?;

    let mut top = rows;
    top.sort_by(|a, b| b.probability.total_cmp(&a.probability));
    println!("{:>3} {:>5} {:>14} {:>14}", "j", "k_j", "E/pi^2", "P");
    for o in top.iter().take(10) {
        println!("{:>3} {:>5} {:>14.6} {:>14.6e}", o.well, o.k, in_pi2(o.energy), o.probability);
    }
    println!(
        "captured {:.12} tail {:.3e} tail bound {:.3e} caps {},{}",
        table.captured(),
        table.tail,
        table.tail_bound,
        table.caps.l_max,
        table.caps.k_max
    );
    println!("wrote {}", path.display());
    Ok(())
}

pub fn zeros(ctx: &Context) -> Result<(), CliError> {
    let z = ctx.section(&ctx.config.zeros, "zeros")?;
    let state = ctx.config.state()?;
    let scan = match (z.t, z.window) {
        (Some(t), None) => zeros_at_time(&state, t, z.grid[0], z.tol)?,
        (None, Some([a, b])) => zero_events(&state, (a, b), (z.grid[0], z.grid[1]), z.tol)?,
        _ => return Err(CliError::config("zeros", "give exactly one of t or window")),
    };
    let mut csv = Csv::new(&["x", "t", "kind", "residual"]);
    for e in &scan.events {
        let kind = match e.kind {
            ZeroKind::Stationary => "stationary",
            ZeroKind::Transient => "transient",
        };
        csv.row(&[e.x.into(), e.t.into(), kind.into(), e.residual.into()]);
    }
    let path = output::write(&ctx.out, "zeros.csv", &csv.into_string())?;
    if scan.dropped > 0 {
        eprintln!("warning: {} candidates failed the residual test", scan.dropped);
    }
    println!("{} events; wrote {}", scan.events.len(), path.display());
    Ok(())
}

pub fn delta(ctx: &Context) -> Result<(), CliError> {
    let d = ctx.section(&ctx.config.delta, "delta")?;
    let mut csv = Csv::new(&["V", "level", "k", "E", "P_left"]);
    let vs = d.v.values();
    for &v in &vs {
        let spec = delta_spectrum_in(ctx.config.length, d.x0, v, d.levels)?;
        for lv in &spec.levels {
            csv.row(&[v.into(), lv.index.into(), lv.k.into(), lv.energy.into(), lv.p_left.into()]);
        }
    }
    let path = output::write(&ctx.out, "delta.csv", &csv.into_string())?;
    println!("{} strengths x {} levels; wrote {}", vs.len(), d.levels, path.display());
    Ok(())
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    report: &'a SimReport,
    delta_k_over_k0: f64,
    delta_v_dpsi_over_k0: f64,
    delta_v_psi0_over_k0: f64,
    fit_prediction: FitPrediction,
}

pub fn simulate(ctx: &Context) -> Result<(), CliError> {
    let s = ctx.section(&ctx.config.tdse, "tdse")?;
    let state = ctx.config.state()?;
    let mesh = s.mesh.build(ctx.config.length, ctx.desk)?;
    let ramp = BarrierRamp::linear(s.w, s.x0, s.v_m, s.tau)?;
    let report = simulate_with(&state, &ramp, &mesh, &s.run.options())?;
    let out = SimulateOutput {
        report: &report,
        delta_k_over_k0: report.delta_k / report.k0,
        delta_v_dpsi_over_k0: report.delta_v_dpsi / report.k0,
        delta_v_psi0_over_k0: report.delta_v_psi0 / report.k0,
        fit_prediction: fit_predict(s.tau, s.w, report.a_w, s.v_m),
    };
    let path = output::write_json(&ctx.out, "simulate.json", &out)?;
    println!("mesh dx {:.3e}, {} steps", mesh.dx(), report.steps);
    println!("norm error      {:.6e}", report.norm_error);
    println!("dK/K0           {:.6e}", out.delta_k_over_k0);
    println!("dV_dpsi/K0      {:.6e}", out.delta_v_dpsi_over_k0);
    println!("dV_psi0/K0      {:.6e}", out.delta_v_psi0_over_k0);
    println!("max step ratio  {:.6e}", report.max_step_ratio);
    if report.untrusted {
        eprintln!("warning: norm error above the trust level");
    }
    if report.under_resolved {
        eprintln!("warning: barrier kernel is under-resolved by the mesh");
    }
    println!("wrote {}", path.display());
    Ok(())
}

pub fn run_sweep(ctx: &Context) -> Result<(), CliError> {
    let s = ctx.section(&ctx.config.sweep, "sweep")?;
    let mesh = s.mesh.build(ctx.config.length, ctx.desk)?;
    let well = ctx.config.well();
    let mut jobs = Vec::new();
    for (i, named) in s.states.iter().enumerate() {
        let state = named
            .state
            .build(&well)
            .map_err(|e| CliError::config(format!("sweep.states[{i}].state"), e.to_string()))?;
        for &tau in &s.tau {
            for &w in &s.w {
                jobs.push(SweepJob {
                    state_id: named.id.clone(),
                    state: state.clone(),
                    tau,
                    w,
                    x0: s.x0,
                });
            }
        }
    }
    let options = s.run.options();
    let rows: Vec<_> = s.v_m.iter().flat_map(|&v| sweep(&jobs, &mesh, v, &options)).collect();

    let mut csv = Csv::new(&[
        "state_id", "tau", "w", "V_m", "A_w", "dK", "dV_dpsi", "dV_psi0", "norm_err", "aborted",
    ]);
    for r in &rows {
        csv.row(&[
            r.state_id.as_str().into(),
            r.tau.into(),
            r.w.into(),
            r.v_m.into(),
            r.a_w.into(),
            r.delta_k.into(),
            r.delta_v_dpsi.into(),
            r.delta_v_psi0.into(),
            r.norm_error.into(),
            r.aborted.into(),
        ]);
    }
    let path = output::write(&ctx.out, "sweep.csv", &csv.into_string())?;
    println!("{} runs; wrote {}", rows.len(), path.display());

    if let Some(fit) = sweep_fit(s, &rows) {
        let fit_path = output::write_json(&ctx.out, "sweep_fit.json", &fit)?;
        for (name, p) in fit.names.iter().zip(&fit.exponents) {
            println!("exponent {name:>4} {p:.4}");
        }
        println!("rms residual {:.4} dex over {} samples", fit.rms_dex, fit.samples);
        println!("wrote {}", fit_path.display());
    }

    let aborted: Vec<_> = rows.iter().filter(|r| r.aborted).collect();
    for r in &aborted {
        eprintln!(
            "aborted: {} tau {:e} w {:e} V_m {:e}: {}",
            r.state_id,
            r.tau,
            r.w,
            r.v_m,
            r.error.as_deref().unwrap_or("")
        );
    }
    if aborted.is_empty() {
        Ok(())
    } else {
        Err(CliError::Aborted(aborted.len()))
    }
}

/// Regresses `dK / A_w` on whichever of `tau`, `V`, `w` vary across the sweep,
/// using end-of-ramp values and every checkpoint with a nonzero strength.
fn sweep_fit(s: &crate::config::SweepSection, rows: &[wellsplit::tdse::SweepRow]) -> Option<PowerLawFit> {
    let varies = |v: &[f64]| v.iter().any(|&x| x != v[0]);
    let use_v = varies(&s.v_m) || !s.run.checkpoints.is_empty();
    let mask = [varies(&s.tau), use_v, varies(&s.w)];
    let names: Vec<&str> = ["tau", "V", "w"].iter().zip(mask).filter(|(_, m)| *m).map(|(n, _)| *n).collect();
    if names.is_empty() {
        return None;
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in rows.iter().filter(|r| !r.aborted && r.a_w > 0.0) {
        let mut push = |v: f64, dk: f64| {
            let full = [r.tau, v, r.w];
            xs.push(full.iter().zip(mask).filter(|(_, m)| *m).map(|(x, _)| *x).collect::<Vec<_>>());
            ys.push(dk / r.a_w);
        };
        push(r.v_m, r.delta_k);
        for c in &r.checkpoints {
            if c.strength > 0.0 && c.step < s.run.steps {
                push(c.strength, c.delta_k);
            }
        }
    }
    match fit_power_law(&names, &xs, &ys) {
        Ok(fit) => Some(fit),
        Err(e) => {
            eprintln!("warning: no exponent fit: {e}");
            None
        }
    }
}

pub fn run_carpet(ctx: &Context) -> Result<(), CliError> {
    let c = ctx.section(&ctx.config.carpet, "carpet")?;
    let state = ctx.config.state()?;
    let (split, t_default) = ctx.config.split()?;
    let t_split = c.t_split.unwrap_or(t_default);
    let xs = match c.x {
        Some(g) => g.values(),
        None => crate::config::GridSpec {
            from: 0.0,
            to: ctx.config.length,
            count: 201,
        }
        .values(),
    };
    let ts = c.t.values();
    if xs.len() < 2 || ts.is_empty() {
        return Err(CliError::config("carpet", "need at least two x points and one t point"));
    }
    let grid = carpet(&state, &split, t_split, &xs, &ts, ctx.caps())?;
    warn_off_zero(&grid.warnings);
    let dx = xs[1] - xs[0];
    let mut csv = Csv::new(&["t", "x", "density", "norm"]);
    for (n, &t) in ts.iter().enumerate() {
        let row = grid.row(n);
        let norm = trapezoid(row, dx);
        for (&x, &d) in xs.iter().zip(row) {
            csv.row(&[t.into(), x.into(), d.into(), norm.into()]);
        }
    }
    let path = output::write(&ctx.out, "carpet.csv", &csv.into_string())?;
    println!("{} x {} grid, post-split norm {:.12}; wrote {}", grid.nt, grid.nx, grid.post_norm, path.display());
    Ok(())
}

pub fn accounting(ctx: &Context) -> Result<(), CliError> {
    let a = ctx.section(&ctx.config.accounting, "accounting")?;
    let (state, split, _) = ctx.config.split_state()?;
    let caps = ctx.caps();
    let table = outcome_probabilities(&state, &split, caps)?;
    warn_off_zero(&table.warnings);
    let models = a.models.clone().unwrap_or(TransitionModel::ALL.to_vec());
    let e1 = state.segment().energy(1);

    let mut csv = Csv::new(&["model", "j", "k_j", "P", "E_B", "E_B_over_E1"]);
    println!("{:>8} {:>3} {:>5} {:>14} {:>12}", "model", "j", "k_j", "P", "E_B/E0(1)");
    for &model in &models {
        for (i, &[j, k]) in a.outcomes.iter().enumerate() {
            if j == 0 || j as usize > split.wells() || k == 0 || k > caps.k_max {
                return Err(CliError::config(
                    format!("accounting.outcomes[{i}]"),
                    format!("outcome ({j}, {k}) is outside the split geometry or the k cap"),
                ));
            }
            let outcome = Outcome::new(j as usize, k);
            let e_b = match barrier_energy(model, &state, &split, outcome, caps.l_max) {
                Ok(e) => e,
                Err(Error::Domain(msg)) if model == TransitionModel::Weak => {
                    eprintln!("warning: {msg}");
                    f64::NAN
                }
                Err(e) => return Err(e.into()),
            };
            let p = table.probability(j as usize, k);
            csv.row(&[model.name().into(), j.into(), k.into(), p.into(), e_b.into(), (e_b / e1).into()]);
            println!("{:>8} {:>3} {:>5} {:>14.6e} {:>12.6}", model.name(), j, k, p, e_b / e1);
        }
    }
    let path = output::write(&ctx.out, "accounting.csv", &csv.into_string())?;
    println!("wrote {}", path.display());
    Ok(())
}
