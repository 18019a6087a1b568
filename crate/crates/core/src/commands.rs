//! Batch commands behind the CLI: single runs, convergence ladders and the
//! cost comparison, with their CSV outputs.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use thiserror::Error;

use crate::cnf::{run_cnf, CnfConfig};
use crate::config::{ConfigError, ExperimentConfig, Scheme};
use crate::diagnostics::{
    error_between_runs, relative_drifts, ConservationRecord, ConservationRecorder,
    ConvergenceTable, Drifts, Order, TimingRecord,
};
use crate::error::Error;
use crate::fsav::{run, PairField, SchemeConfig};
use crate::grid::GridSpec;
use crate::sav::SavState;
use crate::spectral::build_symbol;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CommandError {
    /// Process exit code: 2 for configuration errors, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            _ => 3,
        }
    }
}

pub type CommandResult<T> = std::result::Result<T, CommandError>;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CommandReport {
    pub files: Vec<PathBuf>,
    pub checks: Vec<CheckOutcome>,
    pub record: Option<ConservationRecord>,
    pub drifts: Option<Drifts>,
    pub table: Option<ConvergenceTable>,
    pub timings: Vec<TimingRecord>,
}

impl CommandReport {
    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Fields at `t_end` of one run plus its cost counters.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub grid: GridSpec,
    pub z: PairField,
    pub steps: usize,
    pub wall_secs: f64,
    pub inner_iterations: usize,
}

/// Runs the configured scheme with `n` points per axis and step `tau`.
pub fn simulate(cfg: &ExperimentConfig, n: usize, tau: f64) -> crate::Result<Simulation> {
    let grid = cfg.grid_with(n)?;
    let params = cfg.params(&grid)?;
    let z0 = cfg.initial_fields(&grid);
    match cfg.scheme {
        Scheme::Fsav => {
            let state = SavState::initial(z0.p, z0.q, &params, &grid)?;
            let out = run(state, &params, &grid, &SchemeConfig::new(tau)?, cfg.t_end, usize::MAX, &mut [])?;
            Ok(Simulation {
                z: PairField {
                    p: out.state.p,
                    q: out.state.q,
                },
                grid,
                steps: out.steps,
                wall_secs: out.wall_secs,
                inner_iterations: out.steps,
            })
        }
        Scheme::Cnf => {
            let out = run_cnf(z0, &params, &grid, &CnfConfig::new(tau)?, cfg.t_end, usize::MAX, |_, _, _| Ok(()))?;
            Ok(Simulation {
                z: out.z,
                grid,
                steps: out.steps,
                wall_secs: out.wall_secs,
                inner_iterations: out.total_iterations,
            })
        }
    }
}

/// Seventeen significant digits, enough for an exact round trip.
pub fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_order(o: Order) -> String {
    match o {
        Order::None => String::new(),
        Order::Value(v) => fmt_value(v),
        Order::Floor => "floor".into(),
    }
}

fn out_dir(cfg: &ExperimentConfig) -> CommandResult<&Path> {
    fs::create_dir_all(&cfg.output_dir)?;
    Ok(&cfg.output_dir)
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CommandResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// File name of the snapshot at time `t`.
pub fn snapshot_name(t: f64) -> String {
    format!("snapshot_{t}.csv")
}

fn write_snapshot(path: &Path, grid: &GridSpec, z: &PairField, raw: bool) -> CommandResult<()> {
    let mut header = vec!["x"];
    if grid.dim() == 2 {
        header.push("y");
    }
    header.push("abs_u");
    if raw {
        header.extend(["p", "q"]);
    }
    let rows = (0..grid.len()).map(|i| {
        let c = grid.coords(i);
        let mut row: Vec<String> = c[..grid.dim()].iter().map(|&v| fmt_value(v)).collect();
        row.push(fmt_value(z.p[i].hypot(z.q[i])));
        if raw {
            row.push(fmt_value(z.p[i]));
            row.push(fmt_value(z.q[i]));
        }
        row
    });
    write_csv(path, &header, rows)
}

/// Single run: `conservation.csv` at the observer stride and one
/// `snapshot_<t>.csv` per requested time.
pub fn cmd_run(cfg: &ExperimentConfig) -> CommandResult<CommandReport> {
    let grid = cfg.grid()?;
    let params = cfg.params(&grid)?;
    let symbol = build_symbol(&grid, params.alpha, params.gamma)?;
    let z0 = cfg.initial_fields(&grid);
    let total = crate::fsav::step_count(cfg.t_end, cfg.tau)?;
    let snap_steps: Vec<usize> = cfg.snapshot_times.iter().map(|&t| cfg.snapshot_step(t)).collect();
    let mut recorder = ConservationRecorder::new(&params, &symbol);
    let mut snapshots: Vec<(usize, PairField)> = Vec::new();
    let wants = |m: usize| m % cfg.stride == 0 || m == total;

    info!(
        "run {} alpha={} N={} tau={} T={}",
        cfg.scheme.label(),
        cfg.alpha,
        cfg.n,
        cfg.tau,
        cfg.t_end
    );
    let wall = match cfg.scheme {
        Scheme::Fsav => {
            let state = SavState::initial(z0.p, z0.q, &params, &grid)?;
            let mut observer = |s: &SavState| -> crate::Result<()> {
                if wants(s.step_index) {
                    crate::fsav::Observer::observe(&mut recorder, s)?;
                }
                if snap_steps.contains(&s.step_index) {
                    snapshots.push((s.step_index, PairField::new(s.p.clone(), s.q.clone())?));
                }
                Ok(())
            };
            run(state, &params, &grid, &SchemeConfig::new(cfg.tau)?, cfg.t_end, 1, &mut [&mut observer])?.wall_secs
        }
        Scheme::Cnf => {
            let observer = |m: usize, t: f64, z: &PairField| -> crate::Result<()> {
                if wants(m) {
                    recorder.push_plain(m, t, z)?;
                }
                if snap_steps.contains(&m) {
                    snapshots.push((m, z.clone()));
                }
                Ok(())
            };
            run_cnf(z0, &params, &grid, &CnfConfig::new(cfg.tau)?, cfg.t_end, 1, observer)?.wall_secs
        }
    };
    info!("step loop took {wall:.3} s");

    let record = recorder.record;
    let drifts = relative_drifts(&record)?;
    let dir = out_dir(cfg)?;
    let mut files = Vec::new();
    let path = dir.join("conservation.csv");
    let rows = record.samples.iter().enumerate().map(|(i, s)| {
        vec![
            s.step.to_string(),
            fmt_value(s.t),
            fmt_value(s.energy),
            fmt_value(s.mass),
            fmt_value(drifts.rh[i]),
            fmt_value(drifts.rm[i]),
            fmt_value(s.w),
            fmt_value(s.sav_energy),
        ]
    });
    write_csv(&path, &["step", "t", "H", "M", "RH", "RM", "w", "E"], rows)?;
    files.push(path);
    for (&t, &m) in cfg.snapshot_times.iter().zip(&snap_steps) {
        if let Some((_, z)) = snapshots.iter().find(|(s, _)| *s == m) {
            let path = dir.join(snapshot_name(t));
            write_snapshot(&path, &grid, z, cfg.raw_fields)?;
            files.push(path);
        }
    }

    let max_rh = drifts.max_rh();
    let checks = vec![CheckOutcome::new(
        "energy drift",
        max_rh <= cfg.checks.max_rh,
        format!("max RH {max_rh:.3e} (limit {:.1e})", cfg.checks.max_rh),
    )];
    Ok(CommandReport {
        files,
        checks,
        record: Some(record),
        drifts: Some(drifts),
        ..Default::default()
    })
}

/// Each entry must be the previous one times `ratio`.
fn check_ladder<T: Copy + Into<f64>>(list: &[T], ratio: f64, key: &str, what: &str) -> CommandResult<()> {
    if list.len() < 2 {
        return Err(ConfigError::violation(None, key, "needs at least two entries").into());
    }
    for w in list.windows(2) {
        let (a, b) = (w[0].into(), w[1].into());
        if ((b - a * ratio) / (a * ratio)).abs() > 1e-12 {
            return Err(ConfigError::violation(
                None,
                key,
                format!("must be successive {what}; {a} is followed by {b}"),
            )
            .into());
        }
    }
    Ok(())
}

fn parallel_runs<T: Sync>(
    inputs: &[T],
    f: impl Fn(&T) -> crate::Result<Simulation> + Sync + Send,
) -> crate::Result<Vec<Simulation>> {
    inputs.par_iter().map(f).collect()
}

/// Temporal ladder: `E(τ)` compares runs at `τ` and `τ/2` on the same grid.
pub fn cmd_converge_time(cfg: &ExperimentConfig) -> CommandResult<CommandReport> {
    check_ladder(&cfg.tau_list, 0.5, "tau_list", "halvings")?;
    let mut taus = cfg.tau_list.clone();
    taus.push(taus[taus.len() - 1] / 2.0);
    if let Some(&bad) = taus.iter().find(|&&t| crate::fsav::step_count(cfg.t_end, t).is_err()) {
        return Err(ConfigError::violation(
            None,
            "tau_list",
            format!("step {bad} does not divide t_end={} into an integer number of steps", cfg.t_end),
        )
        .into());
    }
    info!("temporal ladder {:?} at N={}", taus, cfg.n);
    let runs = parallel_runs(&taus, |&tau| simulate(cfg, cfg.n, tau))?;
    let errors = runs
        .windows(2)
        .map(|w| error_between_runs(&w[0].z, &w[0].grid, &w[1].z, &w[1].grid))
        .collect::<crate::Result<Vec<f64>>>()?;
    let table = ConvergenceTable::from_errors(&cfg.tau_list, &errors);

    let dir = out_dir(cfg)?;
    let path = dir.join("orders_time.csv");
    let rows = table
        .rows
        .iter()
        .map(|r| vec![fmt_value(r.param), fmt_value(r.error), fmt_order(r.order)]);
    write_csv(&path, &["tau", "error", "order"], rows)?;

    let (target, tol) = (cfg.checks.order, cfg.checks.order_tol);
    let checks = table
        .rows
        .iter()
        .filter_map(|r| match r.order {
            Order::Value(o) => Some(CheckOutcome::new(
                format!("order at tau={}", r.param),
                (o - target).abs() <= tol,
                format!("{o:.3} (expected {target} ± {tol})"),
            )),
            _ => None,
        })
        .collect();
    Ok(CommandReport {
        files: vec![path],
        checks,
        table: Some(table),
        ..Default::default()
    })
}

/// Spatial ladder: `E(N)` compares the `N` run with the `2N` run at the
/// coarse collocation points.
pub fn cmd_converge_space(cfg: &ExperimentConfig) -> CommandResult<CommandReport> {
    let as_f64: Vec<f64> = cfg.n_list.iter().map(|&n| n as f64).collect();
    check_ladder(&as_f64, 2.0, "n_list", "doublings")?;
    let mut ns = cfg.n_list.clone();
    ns.push(2 * ns[ns.len() - 1]);
    info!("spatial ladder {:?} at tau={}", ns, cfg.tau);
    let runs = parallel_runs(&ns, |&n| simulate(cfg, n, cfg.tau))?;
    let errors = runs
        .windows(2)
        .map(|w| error_between_runs(&w[0].z, &w[0].grid, &w[1].z, &w[1].grid))
        .collect::<crate::Result<Vec<f64>>>()?;
    let table = ConvergenceTable::from_errors(&as_f64, &errors);

    let dir = out_dir(cfg)?;
    let path = dir.join("orders_space.csv");
    let rows = table
        .rows
        .iter()
        .map(|r| vec![(r.param as usize).to_string(), fmt_value(r.error), fmt_order(r.order)]);
    write_csv(&path, &["n", "error", "order"], rows)?;

    let th = cfg.checks;
    let checks = table
        .rows
        .windows(2)
        .filter(|w| w[0].error > th.error_floor)
        .map(|w| {
            let decades = (w[0].error / w[1].error).log10();
            CheckOutcome::new(
                format!("error drop N={}->{}", w[0].param, w[1].param),
                decades >= th.min_decades,
                format!("{decades:.2} decades (minimum {})", th.min_decades),
            )
        })
        .collect();
    Ok(CommandReport {
        files: vec![path],
        checks,
        table: Some(table),
        ..Default::default()
    })
}

fn timing(scheme: Scheme, cfg: &ExperimentConfig, tau: f64) -> TimingRecord {
    let mut c = cfg.clone();
    c.scheme = scheme;
    match simulate(&c, c.n, tau) {
        Ok(sim) => TimingRecord {
            scheme: scheme.label().into(),
            tau,
            n: c.n,
            wall_secs: sim.wall_secs,
            steps: sim.steps,
            inner_iterations: sim.inner_iterations,
            failure: None,
        },
        Err(e) => {
            warn!("{} at tau={tau} failed: {e}", scheme.label());
            TimingRecord {
                scheme: scheme.label().into(),
                tau,
                n: c.n,
                wall_secs: f64::NAN,
                steps: 0,
                inner_iterations: 0,
                failure: Some(e.to_string()),
            }
        }
    }
}

/// Times both schemes on the same setup for each step in `tau_list`, one
/// run at a time so the measurements do not compete for cores.
pub fn cmd_compare_cost(cfg: &ExperimentConfig) -> CommandResult<CommandReport> {
    let taus = if cfg.tau_list.is_empty() {
        vec![cfg.tau]
    } else {
        cfg.tau_list.clone()
    };
    let mut timings = Vec::new();
    for &tau in &taus {
        for scheme in [Scheme::Fsav, Scheme::Cnf] {
            let rec = timing(scheme, cfg, tau);
            info!(
                "{} tau={tau}: {:.3} s, {} steps, {} inner iterations",
                rec.scheme, rec.wall_secs, rec.steps, rec.inner_iterations
            );
            timings.push(rec);
        }
    }

    let dir = out_dir(cfg)?;
    let path = dir.join("cost.csv");
    let rows = timings.iter().map(|r| {
        vec![
            r.scheme.clone(),
            fmt_value(r.tau),
            fmt_value(r.wall_secs),
            r.steps.to_string(),
            r.inner_iterations.to_string(),
            if r.failure.is_some() { "no_convergence".into() } else { "ok".into() },
        ]
    });
    write_csv(&path, &["scheme", "tau", "wall_s", "steps", "inner_iters", "status"], rows)?;

    let checks = timings
        .chunks(2)
        .map(|pair| {
            let (f, c) = (&pair[0], &pair[1]);
            CheckOutcome::new(
                format!("cost at tau={}", f.tau),
                f.failure.is_none() && c.failure.is_none() && f.wall_secs < c.wall_secs,
                format!("fsav {:.3} s, cnf {:.3} s", f.wall_secs, c.wall_secs),
            )
        })
        .collect();
    Ok(CommandReport {
        files: vec![path],
        checks,
        timings,
        ..Default::default()
    })
}
