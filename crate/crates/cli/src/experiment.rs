//! The three verbs: a single run, a parameter sweep, and cross-validation
//! of the finite-difference solver against the Picard oracle.

use std::path::{Path, PathBuf};

use gbbmb_core::fd::path_coordinate;
use gbbmb_core::{
    boundary_contact_time, delta_mass_series, detect_reflection, picard_solve, run, Bootstrap, DiagnosticsRecord,
    DiagnosticsRecorder, Error as CoreError, GridSpec, NetworkState, PicardReport, QuadratureGrid, StarNetwork,
    SteppingWorkspace,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{BootstrapKind, ExperimentConfig, InitialCondition};
use crate::error::CliError;
use crate::output;

/// Level, relative to the incident amplitude, at which a value next to the
/// truncation boundary counts as boundary contact.
pub const BOUNDARY_CONTACT_LEVEL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    Unstable,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Unstable => "unstable",
        }
    }
}

/// Headline numbers of one run. Mass figures use every time step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub status: RunStatus,
    pub bootstrap: BootstrapKind,
    /// Time steps that produced a stable state.
    pub steps_completed: usize,
    pub final_time: f64,
    /// Time of the last state that was entirely finite.
    pub last_stable_time: f64,
    pub initial_mass: f64,
    /// `false` when the initial mass is 0; δM columns are then absolute.
    pub delta_mass_defined: bool,
    pub max_delta_mass: f64,
    pub max_delta_mass_time: f64,
    /// First time the solution reaches the truncation boundary, if it does.
    pub boundary_contact_time: Option<f64>,
    /// `max δM` up to `boundary_contact_time` (the whole run if none).
    pub max_delta_mass_before_boundary: f64,
    pub final_energy: f64,
    pub reflected: bool,
    pub min_excursion: f64,
    pub min_excursion_location: f64,
    pub incident_amplitude: f64,
    pub crossing_time: f64,
}

/// Everything a run produced, in memory.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// One record per time step, index = step.
    pub records: Vec<DiagnosticsRecord>,
    /// Step 0, every `stride` steps and the last step.
    pub snapshot_steps: Vec<usize>,
    /// States at `snapshot_steps`; kept only when field output is enabled.
    pub snapshots: Vec<NetworkState>,
    /// States every `diagnostics.snapshot_interval`, fed to the reflection
    /// detector.
    pub detector_snapshots: Vec<NetworkState>,
    pub summary: RunSummary,
    /// The instability that stopped the run early, if any.
    pub failure: Option<CoreError>,
}

impl RunOutcome {
    /// Diagnostics at the snapshot steps, as written to `diagnostics.csv`.
    pub fn snapshot_records(&self) -> Vec<DiagnosticsRecord> {
        self.snapshot_steps.iter().map(|&n| self.records[n]).collect()
    }
}

pub fn initial_state(cfg: &ExperimentConfig, network: &StarNetwork, grid: &GridSpec) -> Result<NetworkState, CliError> {
    let intervals = grid.intervals(network)?;
    match &cfg.initial {
        InitialCondition::SolitaryWave { .. } => {
            let wave = cfg.solitary_placement(network)?.expect("solitary initial condition");
            Ok(wave.state(network, grid, 0.0)?)
        }
        InitialCondition::Zero => Ok(NetworkState::zeros(&intervals)),
        InitialCondition::File { .. } => {
            let path = cfg.initial_file().expect("file initial condition");
            let samples = output::read_initial_samples(&path, &intervals)?;
            NetworkState::from_edge_samples(samples, 0.0).map_err(|e| CliError::config("initial.path", e.to_string()))
        }
    }
}

fn bootstrap(cfg: &ExperimentConfig, network: &StarNetwork) -> Result<Bootstrap, CliError> {
    Ok(match cfg.bootstrap_kind() {
        BootstrapKind::ExactTranslate => Bootstrap::ExactTranslate(
            cfg.solitary_placement(network)?
                .ok_or_else(|| CliError::config("solver.bootstrap", "exact-translate needs a solitary wave"))?,
        ),
        BootstrapKind::SemiImplicit => Bootstrap::SemiImplicit,
    })
}

/// Integrates the configured experiment. Instability does not raise an
/// error: the outcome keeps everything up to the last stable step and
/// records the failure.
pub fn simulate(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let network = cfg.network()?;
    let grid = cfg.grid()?;
    let initial = initial_state(cfg, &network, &grid)?;
    let boot = bootstrap(cfg, &network)?;
    let stride = cfg.output.stride.max(1);
    let total = grid.steps();

    let mut c = Collector {
        recorder: DiagnosticsRecorder::new(&network, &grid),
        steps: Vec::new(),
        snapshots: Vec::new(),
        detector: Vec::new(),
        stride,
        detector_stride: ((cfg.diagnostics.snapshot_interval / grid.dt).round() as usize).max(1),
        keep_fields: cfg.output.fields,
        total,
    };
    c.observe(0, &initial);
    let mut failure = None;
    let mut last_stable_time = initial.time;
    let mut stable_steps = 0;
    if total > 0 {
        let mut ws = SteppingWorkspace::new(&network, &grid, initial.clone(), &boot)?;
        if ws.current().is_finite() {
            c.observe(1, ws.current());
            last_stable_time = ws.current().time;
            stable_steps = 1;
            while ws.steps_taken() < total {
                match ws.step() {
                    Ok(_) => {
                        let n = ws.steps_taken();
                        let s = ws.current();
                        c.observe(n, s);
                        let record = c.recorder.records()[n];
                        if !(record.energy.is_finite() && record.mass.is_finite()) {
                            // Finite samples whose squares overflow: blow-up.
                            failure = Some(CoreError::Unstable {
                                step: n,
                                time: s.time,
                                last_stable_time,
                                max_abs: s.max_abs(),
                            });
                            break;
                        }
                        last_stable_time = s.time;
                        stable_steps = n;
                    }
                    Err(e @ CoreError::Unstable { .. }) => {
                        failure = Some(e);
                        break;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            if failure.is_some() {
                // Keep the last stable state for post-mortem output.
                c.output(ws.steps_taken(), ws.current());
            }
        } else {
            failure = Some(CoreError::Unstable {
                step: 1,
                time: ws.current().time,
                last_stable_time: initial.time,
                max_abs: initial.max_abs(),
            });
        }
    }
    let Collector {
        recorder,
        steps: snapshot_steps,
        snapshots,
        detector: detector_snapshots,
        ..
    } = c;
    let records = recorder.into_records();
    let summary = summarize(
        cfg,
        &network,
        &grid,
        &records,
        &detector_snapshots,
        failure.is_some(),
        last_stable_time,
        stable_steps,
    )?;
    Ok(RunOutcome {
        records,
        snapshot_steps,
        snapshots,
        detector_snapshots,
        summary,
        failure,
    })
}

struct Collector {
    recorder: DiagnosticsRecorder,
    steps: Vec<usize>,
    snapshots: Vec<NetworkState>,
    detector: Vec<NetworkState>,
    stride: usize,
    detector_stride: usize,
    keep_fields: bool,
    total: usize,
}

impl Collector {
    fn observe(&mut self, n: usize, s: &NetworkState) {
        self.recorder.observe(s);
        if n.is_multiple_of(self.stride) || n == self.total {
            self.output(n, s);
        }
        if n.is_multiple_of(self.detector_stride) {
            self.detector.push(s.clone());
        }
    }

    fn output(&mut self, n: usize, s: &NetworkState) {
        if self.steps.last() != Some(&n) {
            self.steps.push(n);
            if self.keep_fields {
                self.snapshots.push(s.clone());
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    cfg: &ExperimentConfig,
    network: &StarNetwork,
    grid: &GridSpec,
    records: &[DiagnosticsRecord],
    snapshots: &[NetworkState],
    unstable: bool,
    last_stable_time: f64,
    stable_steps: usize,
) -> Result<RunSummary, CliError> {
    let dm = delta_mass_series(records);
    let amplitude = snapshots[0].max_abs();
    let contact = if amplitude > 0.0 {
        boundary_contact_time(records, BOUNDARY_CONTACT_LEVEL * amplitude)
    } else {
        None
    };
    let before = contact.map(|t| dm.until(t)).unwrap_or_else(|| dm.clone());
    let verdict = detect_reflection(snapshots, 0, cfg.reflection_criterion(network), grid.dx)?;
    let last = records.last().expect("the initial state is always recorded");
    Ok(RunSummary {
        status: if unstable {
            RunStatus::Unstable
        } else {
            RunStatus::Completed
        },
        bootstrap: cfg.bootstrap_kind(),
        steps_completed: stable_steps,
        final_time: last.time,
        last_stable_time,
        initial_mass: records[0].mass,
        delta_mass_defined: dm.relative,
        max_delta_mass: dm.max(),
        max_delta_mass_time: dm.argmax_time().unwrap_or(0.0),
        boundary_contact_time: contact,
        max_delta_mass_before_boundary: before.max(),
        final_energy: last.energy,
        reflected: verdict.reflected,
        min_excursion: verdict.min_excursion,
        min_excursion_location: verdict.location,
        incident_amplitude: verdict.incident_amplitude,
        crossing_time: verdict.crossing_time,
    })
}

/// `run` verb: simulate and write all artifacts to `dir`. An unstable run
/// still writes its artifacts before reporting the failure.
pub fn cmd_run(cfg: &ExperimentConfig, dir: &Path) -> Result<RunOutcome, CliError> {
    let outcome = simulate(cfg)?;
    output::write_run(dir, cfg, &outcome)?;
    match &outcome.failure {
        Some(e) => Err(CliError::Unstable(e.clone())),
        None => Ok(outcome),
    }
}

/// One row of the sweep aggregate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub status: String,
    pub max_delta_mass: Option<f64>,
    pub max_delta_mass_before_boundary: Option<f64>,
    pub reflected: Option<bool>,
    pub min_excursion: Option<f64>,
    pub crossing_time: Option<f64>,
    pub output_dir: String,
    #[serde(skip)]
    pub exit_code: u8,
}

/// `sweep` verb: one independent run per value, in parallel, each into its
/// own subdirectory; the aggregate is written after all jobs finish. A
/// failing job is reported in its row and does not stop the others.
pub fn cmd_sweep(
    base: &ExperimentConfig,
    parameter: &str,
    values: &[f64],
    dir: &Path,
) -> Result<Vec<SweepRow>, CliError> {
    base.numeric_field(parameter)?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    let rows: Vec<SweepRow> = values
        .par_iter()
        .enumerate()
        .map(|(i, &value)| sweep_job(base, parameter, value, &dir.join(format!("job-{i:03}"))))
        .collect();
    output::write_sweep(dir, parameter, &rows)?;
    Ok(rows)
}

fn sweep_job(base: &ExperimentConfig, parameter: &str, value: f64, dir: &Path) -> SweepRow {
    let mut row = SweepRow {
        value,
        status: String::new(),
        max_delta_mass: None,
        max_delta_mass_before_boundary: None,
        reflected: None,
        min_excursion: None,
        crossing_time: None,
        output_dir: dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        exit_code: 0,
    };
    let result = base.with_value(parameter, value).and_then(|cfg| {
        let outcome = simulate(&cfg)?;
        output::write_run(dir, &cfg, &outcome)?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) => {
            let s = &outcome.summary;
            row.status = match &outcome.failure {
                None => "completed".into(),
                Some(e) => format!("unstable: {e}"),
            };
            row.exit_code = if outcome.failure.is_some() { 2 } else { 0 };
            row.max_delta_mass = Some(s.max_delta_mass);
            row.max_delta_mass_before_boundary = Some(s.max_delta_mass_before_boundary);
            row.reflected = Some(s.reflected);
            row.min_excursion = Some(s.min_excursion);
            row.crossing_time = Some(s.crossing_time);
        }
        Err(e) => {
            row.exit_code = e.exit_code();
            row.status = format!("failed: {e}");
        }
    }
    row
}

/// Exit status of a whole sweep: config errors outrank instabilities.
pub fn sweep_exit_code(rows: &[SweepRow]) -> u8 {
    if rows.iter().any(|r| r.exit_code == 1) {
        1
    } else {
        rows.iter().map(|r| r.exit_code).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyStatus {
    Agree,
    Disagree,
    Inconclusive,
}

impl VerifyStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            VerifyStatus::Agree => "agree",
            VerifyStatus::Disagree => "disagree",
            VerifyStatus::Inconclusive => "inconclusive",
        }
    }
}

/// Comparison of the two solvers at `t_final`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub status: VerifyStatus,
    pub t_final: f64,
    /// Largest `|u_fd - u_picard|` over the common nodes of all edges.
    pub sup_norm_difference: f64,
    pub tolerance: f64,
    pub compared_nodes: usize,
    pub junction_fd: f64,
    pub junction_picard: f64,
    pub picard_iterations: usize,
    pub final_residual: f64,
    pub tail_bound: f64,
    pub y_max: f64,
    #[serde(skip)]
    pub residuals: Vec<f64>,
    #[serde(skip)]
    pub message: Option<String>,
}

/// Runs both solvers from the same initial data and compares them on the
/// nodes the two spatial grids share. Picard non-convergence gives an
/// `Inconclusive` report rather than an error.
pub fn verify(cfg: &ExperimentConfig) -> Result<VerifyReport, CliError> {
    let v = cfg.verify;
    let network = cfg.network()?;
    let grid = GridSpec::new(cfg.grid.dx, cfg.grid.dt, v.t_final)
        .map_err(|e| CliError::config("verify.t_final", e.to_string()))?;
    if (grid.steps() as f64 * grid.dt - v.t_final).abs() > 1e-9 * v.t_final.max(grid.dt) {
        return Err(CliError::config(
            "verify.t_final",
            "must be a whole number of grid.dt steps",
        ));
    }
    let (fd_stride, picard_stride) = common_strides(cfg.grid.dx, v.y_step)
        .ok_or_else(|| CliError::config("verify.y_step", "must be an integer multiple or divisor of grid.dx"))?;
    let radius = v
        .support_radius
        .unwrap_or_else(|| network.edges().iter().map(|e| e.truncation_length).fold(0.0, f64::max));
    let q = QuadratureGrid::for_network(&network, v.y_step, v.t_step, radius)
        .map_err(|e| CliError::config("verify", e.to_string()))?;
    q.time_index(v.t_final)
        .map_err(|e| CliError::config("verify.t_final", e.to_string()))?;

    let initial = initial_state(cfg, &network, &grid)?;
    let wave = cfg.solitary_placement(&network)?;
    let phi: Vec<Vec<f64>> = (0..network.num_edges())
        .map(|i| {
            (0..q.nodes())
                .map(|j| match wave {
                    Some(w) => w.params.profile(path_coordinate(&network, i, q.y(j)), 0.0),
                    None => interpolate_edge(&initial, i, grid.dx, q.y(j)),
                })
                .collect()
        })
        .collect();

    let fd_final = run(
        &network,
        &grid,
        &initial,
        &bootstrap(cfg, &network)?,
        usize::MAX,
        |_| {},
    )
    .map_err(|e| match e {
        e @ CoreError::Unstable { .. } => CliError::Unstable(e),
        e => e.into(),
    })?;

    let mut report = VerifyReport {
        status: VerifyStatus::Inconclusive,
        t_final: v.t_final,
        sup_norm_difference: f64::NAN,
        tolerance: v.tolerance,
        compared_nodes: 0,
        junction_fd: fd_final.junction(),
        junction_picard: f64::NAN,
        picard_iterations: 0,
        final_residual: f64::NAN,
        tail_bound: q.tail_bound(&network),
        y_max: q.y_max,
        residuals: Vec::new(),
        message: None,
    };
    let solution = match picard_solve(&network, &phi, v.t_final, &q, v.tol, v.max_iters) {
        Ok(s) => s,
        Err(CoreError::NoConvergence { iterations, residual }) => {
            report.picard_iterations = iterations;
            report.final_residual = residual;
            report.message = Some(format!(
                "Picard iteration did not converge in {iterations} sweeps (residual {residual:e})"
            ));
            return Ok(report);
        }
        Err(e) => return Err(e.into()),
    };
    let PicardReport {
        iterations, residuals, ..
    } = solution.report.clone();
    let last = solution.junction.len() - 1;
    report.junction_picard = solution.junction[last];
    report.picard_iterations = iterations;
    report.final_residual = residuals.last().copied().unwrap_or(0.0);
    report.residuals = residuals;

    let mut diff = 0.0_f64;
    let mut count = 0;
    for (i, field) in solution.fields.iter().enumerate() {
        let u = field.last();
        let mut m = 0;
        loop {
            let (k, j) = (m * fd_stride, m * picard_stride);
            if k > fd_final.intervals(i) || j >= u.len() {
                break;
            }
            // The junction is shared by all edges; count it once.
            if i == 0 || k > 0 {
                diff = diff.max((fd_final.value(i, k) - u[j]).abs());
                count += 1;
            }
            m += 1;
        }
    }
    report.sup_norm_difference = diff;
    report.compared_nodes = count;
    report.status = if diff <= v.tolerance {
        VerifyStatus::Agree
    } else {
        VerifyStatus::Disagree
    };
    Ok(report)
}

/// `verify` verb: writes the report and fails with exit status 3 unless the
/// solvers agree within tolerance.
pub fn cmd_verify(cfg: &ExperimentConfig, dir: &Path) -> Result<VerifyReport, CliError> {
    let report = verify(cfg)?;
    output::write_verify(dir, cfg, &report)?;
    match report.status {
        VerifyStatus::Agree => Ok(report),
        VerifyStatus::Inconclusive => Err(CliError::Inconclusive(
            report
                .message
                .clone()
                .unwrap_or_else(|| "Picard iteration did not converge".into()),
        )),
        VerifyStatus::Disagree => Err(CliError::Inconclusive(format!(
            "solvers differ by {:e}, above the tolerance {:e}",
            report.sup_norm_difference, report.tolerance
        ))),
    }
}

/// Index strides `(fd, picard)` that land both grids on the same positions.
fn common_strides(dx: f64, y_step: f64) -> Option<(usize, usize)> {
    let whole = |r: f64| {
        let n = r.round();
        (n >= 1.0 && (r - n).abs() <= 1e-9 * r).then_some(n as usize)
    };
    whole(y_step / dx)
        .map(|n| (n, 1))
        .or_else(|| whole(dx / y_step).map(|n| (1, n)))
}

/// Linear interpolation of one edge's samples at distance `s` from the
/// junction, zero beyond the truncation.
fn interpolate_edge(state: &NetworkState, edge: usize, dx: f64, s: f64) -> f64 {
    let m = state.intervals(edge);
    let pos = s / dx;
    let k = pos.floor() as usize;
    if k >= m {
        return 0.0;
    }
    let w = pos - k as f64;
    (1.0 - w) * state.value(edge, k) + w * state.value(edge, k + 1)
}

/// Default output directory when neither the config nor `--out` sets one.
pub fn output_dir(cfg: &ExperimentConfig, out: Option<&PathBuf>) -> PathBuf {
    out.cloned().unwrap_or_else(|| cfg.output.dir.clone())
}
