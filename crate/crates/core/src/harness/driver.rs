//! Trajectory runs, step-size sweeps and side-by-side comparisons.

use std::path::Path;

use crate::error::{Error, Result};
use crate::integrators::Stepper;
use crate::invariants::{InvariantReport, Monitor};
use crate::packet::CanonicalState;

use super::config::RunConfig;
use super::output::{invariant_columns, invariant_values, trajectory_header, trajectory_row, Table};

/// Extremes of the monitored quantities over a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub rows: usize,
    pub max_sympl_residual: f64,
    pub max_modified_residual: f64,
    pub max_linear_momentum_drift: f64,
    /// Largest entry of `|L_n - L_0|`.
    pub max_angular_momentum_drift: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub max_energy_error: f64,
    pub final_state: CanonicalState,
}

impl RunSummary {
    pub fn final_energy_error(&self) -> f64 {
        relative_error(self.final_energy, self.initial_energy)
    }
}

/// `|h - h0| / |h0|`, or the absolute difference when `h0 == 0`.
pub fn relative_error(h: f64, h0: f64) -> f64 {
    let diff = (h - h0).abs();
    if h0 == 0.0 {
        diff
    } else {
        diff / h0.abs()
    }
}

/// Steps through `config`, passing every `output_every`-th state and its
/// report to `emit`. The final state is always emitted.
pub fn drive(
    config: &RunConfig,
    mut emit: impl FnMut(&CanonicalState, &InvariantReport) -> Result<()>,
) -> Result<RunSummary> {
    let steps = config.steps();
    let init = config.initial_state();
    let stepper = Stepper::new(&config.field, config.rule(), config.scheme)?;
    let monitor = Monitor::new(&config.field, config.rule(), config.scheme.tau, &init)?;
    let first = monitor.report(&init)?;
    let lin0 = first.linear_momentum;
    let ang0 = first.angular_momentum.clone();
    let mut summary = RunSummary {
        steps,
        rows: 0,
        max_sympl_residual: 0.0,
        max_modified_residual: 0.0,
        max_linear_momentum_drift: 0.0,
        max_angular_momentum_drift: 0.0,
        initial_energy: first.energy,
        final_energy: first.energy,
        max_energy_error: 0.0,
        final_state: init.clone(),
    };
    let every = config.output_every;
    let final_state = stepper.run(&init, steps, |n, z| {
        if n % every != 0 && n != steps {
            return Ok(());
        }
        let r = monitor.report(z)?;
        let s = &mut summary;
        s.rows += 1;
        s.max_sympl_residual = s.max_sympl_residual.max(r.sympl_residual);
        s.max_modified_residual = s.max_modified_residual.max(r.modified_boris_residual);
        s.max_linear_momentum_drift = s.max_linear_momentum_drift.max((r.linear_momentum - lin0).abs());
        s.max_angular_momentum_drift = s.max_angular_momentum_drift.max((&r.angular_momentum - &ang0).amax());
        s.final_energy = r.energy;
        s.max_energy_error = s.max_energy_error.max(relative_error(r.energy, s.initial_energy));
        emit(z, &r)
    })?;
    summary.final_state = final_state;
    Ok(summary)
}

/// The run as an in-memory table with the CSV layout.
pub fn trajectory(config: &RunConfig) -> Result<(Table, RunSummary)> {
    let mut table = Table::new(trajectory_header(config.packet.dim()));
    let summary = drive(config, |z, r| {
        table.rows.push(trajectory_row(z, r));
        Ok(())
    })?;
    Ok((table, summary))
}

/// Streams the trajectory to `path`.
pub fn run_to(config: &RunConfig, path: &Path) -> Result<RunSummary> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(trajectory_header(config.packet.dim()))?;
    let summary = drive(config, |z, r| {
        w.write_record(trajectory_row(z, r).iter().map(|&v| super::output::format_value(v)))?;
        Ok(())
    })?;
    w.flush()?;
    Ok(summary)
}

/// Runs `config` and writes its CSV to the configured output path.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    run_to(config, &config.resolved_out_path())
}

/// One step size of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub tau: f64,
    pub steps: usize,
    /// Relative energy error at the final time.
    pub energy_error: f64,
    /// 2-norm distance of `(qB, pB)` to the reference final state.
    pub state_error: f64,
    /// Observed orders against the previous row.
    pub energy_order: Option<f64>,
    pub state_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub reference_tau: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub const HEADER: [&'static str; 6] = ["tau", "steps", "energy_error", "state_error", "energy_order", "state_order"];

    /// Least-squares slope of `log(energy_error)` against `log(tau)`.
    pub fn energy_slope(&self) -> Option<f64> {
        fit_slope(&self.rows.iter().map(|r| (r.tau, r.energy_error)).collect::<Vec<_>>())
    }

    pub fn state_slope(&self) -> Option<f64> {
        fit_slope(&self.rows.iter().map(|r| (r.tau, r.state_error)).collect::<Vec<_>>())
    }

    /// Missing orders are written as NaN.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(Self::HEADER.iter().map(|s| s.to_string()).collect());
        for r in &self.rows {
            t.rows.push(vec![
                r.tau,
                r.steps as f64,
                r.energy_error,
                r.state_error,
                r.energy_order.unwrap_or(f64::NAN),
                r.state_order.unwrap_or(f64::NAN),
            ]);
        }
        t
    }
}

/// Slope of the least-squares line through `(log x, log y)`; `None` with
/// fewer than two usable points.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn observed_order(coarse: (f64, f64), fine: (f64, f64)) -> Option<f64> {
    let (t0, e0) = coarse;
    let (t1, e1) = fine;
    (e0 > 0.0 && e1 > 0.0).then(|| (e0 / e1).ln() / (t0 / t1).ln())
}

fn final_state_and_energy(config: &RunConfig) -> Result<(CanonicalState, f64, f64)> {
    let init = config.initial_state();
    let stepper = Stepper::new(&config.field, config.rule(), config.scheme)?;
    let monitor = Monitor::new(&config.field, config.rule(), config.scheme.tau, &init)?;
    let h0 = monitor.report(&init)?.energy;
    let z = stepper.propagate(&init, config.steps())?;
    let h = monitor.report(&z)?.energy;
    Ok((z, h0, h))
}

/// Runs `config` at each of `taus` (strictly decreasing) and at
/// `min(taus) / ref_factor`, all in parallel.
pub fn convergence(config: &RunConfig, taus: &[f64], ref_factor: f64) -> Result<ConvergenceTable> {
    if taus.is_empty() {
        return Err(Error::Config("convergence needs at least one step size".into()));
    }
    if taus.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::Config("step sizes must be strictly decreasing".into()));
    }
    if !(ref_factor >= 10.0) {
        return Err(Error::Config(format!("reference factor must be at least 10, got {ref_factor}")));
    }
    let reference_tau = taus[taus.len() - 1] / ref_factor;
    let mut configs = taus.iter().map(|&tau| config.with_tau(tau)).collect::<Result<Vec<_>>>()?;
    configs.push(config.with_tau(reference_tau)?);

    let results: Vec<Result<(CanonicalState, f64, f64)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || final_state_and_energy(c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("convergence worker panicked"))
            .collect()
    });
    let mut results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let (reference, _, _) = results.pop().expect("reference run present");

    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(taus.len());
    for ((tau, cfg), (z, h0, h)) in taus.iter().zip(&configs).zip(results) {
        let dq = &z.qb - &reference.qb;
        let dp = &z.pb - &reference.pb;
        let state_error = (dq.norm_squared() + dp.norm_squared()).sqrt();
        let energy_error = relative_error(h, h0);
        let (energy_order, state_order) = match rows.last() {
            Some(prev) => (
                observed_order((prev.tau, prev.energy_error), (*tau, energy_error)),
                observed_order((prev.tau, prev.state_error), (*tau, state_error)),
            ),
            None => (None, None),
        };
        rows.push(ConvergenceRow {
            tau: *tau,
            steps: cfg.steps(),
            energy_error,
            state_error,
            energy_order,
            state_order,
        });
    }
    Ok(ConvergenceTable { reference_tau, rows })
}

fn same_grid(a: &RunConfig, b: &RunConfig) -> Result<()> {
    let mismatch = |what: &str| Err(Error::GridMismatch(what.to_string()));
    if a.builtin_id != b.builtin_id || a.params != b.params {
        return mismatch("different experiments");
    }
    if a.packet != b.packet {
        return mismatch("different initial packets");
    }
    if a.t0 != b.t0 || a.t_end != b.t_end || a.scheme.tau != b.scheme.tau {
        return mismatch("different time grids");
    }
    if a.output_every != b.output_every {
        return mismatch("different output strides");
    }
    Ok(())
}

/// Column names of a comparison table in dimension `d`.
pub fn compare_header(d: usize) -> Vec<String> {
    let cols = invariant_columns(d);
    let mut h = vec!["t".to_string()];
    for prefix in ["a_", "b_"] {
        h.extend(cols.iter().map(|c| format!("{prefix}{c}")));
        h.push(format!("{prefix}energy_error"));
    }
    h
}

/// Runs both configurations and joins their monitored quantities row by row.
pub fn compare(a: &RunConfig, b: &RunConfig) -> Result<Table> {
    same_grid(a, b)?;
    let collect = |c: &RunConfig| -> Result<Vec<(f64, Vec<f64>, f64)>> {
        let mut out = Vec::new();
        let mut h0 = None;
        drive(c, |z, r| {
            let e0 = *h0.get_or_insert(r.energy);
            out.push((z.t, invariant_values(r), relative_error(r.energy, e0)));
            Ok(())
        })?;
        Ok(out)
    };
    let (ra, rb) = std::thread::scope(|s| {
        let ha = s.spawn(|| collect(a));
        let hb = s.spawn(|| collect(b));
        (ha.join().expect("compare worker panicked"), hb.join().expect("compare worker panicked"))
    });
    let (ra, rb) = (ra?, rb?);
    if ra.len() != rb.len() {
        return Err(Error::GridMismatch(format!("{} rows against {}", ra.len(), rb.len())));
    }
    let mut table = Table::new(compare_header(a.packet.dim()));
    for ((ta, va, ea), (tb, vb, eb)) in ra.into_iter().zip(rb) {
        if ta != tb {
            return Err(Error::GridMismatch(format!("times {ta} and {tb} differ")));
        }
        let mut row = vec![ta];
        row.extend(va);
        row.push(ea);
        row.extend(vb);
        row.push(eb);
        table.rows.push(row);
    }
    Ok(table)
}
