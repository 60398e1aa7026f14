//! CSV artifacts and the schema file that documents them.

use std::fs;
use std::path::Path;

use gbbmb_core::diagnostics::CSV_HEADER;
use gbbmb_core::fd::path_coordinate;
use gbbmb_core::NetworkState;
use serde::Deserialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::experiment::{RunOutcome, RunSummary, SweepRow, VerifyReport};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const FIELDS_FILE: &str = "fields.csv";
pub const GRID_FILE: &str = "grid.csv";
pub const SCHEMA_FILE: &str = "schema.txt";
pub const CONFIG_FILE: &str = "config.toml";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const VERIFY_FILE: &str = "verify.csv";
pub const RESIDUALS_FILE: &str = "residuals.csv";

const RUN_SCHEMA: &str = "\
diagnostics.csv — one row per snapshot (step 0, every `stride` steps, last step)
  time                 simulation time
  mass                 total mass, trapezoid rule over all edges
  delta_mass_percent   100·|M(t) − M(0)|/M(0); absolute |M(t) − M(0)| when M(0) = 0
  energy               ½ Σ ∫ (u² + μ² u_x²)
  energy_rate_formula  right-hand side of the energy identity at this state
  junction_value       h(t), the shared value at the junction
  boundary_value       largest |u| at the last interior node of any edge

summary.csv — key,value rows
  status                          completed | unstable
  bootstrap                       exact-translate | semi-implicit
  steps_completed                 time steps taken
  final_time                      time of the last recorded state
  last_stable_time                time of the last entirely finite state
  initial_mass                    M(0)
  delta_mass_defined              false when M(0) = 0 (δM values are then absolute)
  max_delta_mass                  max δM over every time step
  max_delta_mass_time             time of that maximum
  boundary_contact_time           first time boundary_value exceeds 1e-6 × incident amplitude (empty if never)
  max_delta_mass_before_boundary  max δM up to boundary_contact_time
  final_energy                    energy at final_time
  reflected                       reflection verdict on the incoming edge (edge 1), from
                                  snapshots every diagnostics.snapshot_interval time units
  min_excursion                   most negative edge-1 value after the crossing
  min_excursion_location          its distance from the junction
  incident_amplitude              max of the initial state
  crossing_time                   snapshot time at which the junction value peaks

fields.csv — written with --fields; one row per snapshot
  time, then one column per grid node in path order: edge 1 from its far end
  to the junction, then each outgoing edge from the junction outwards

grid.csv — written with --fields; one row per fields.csv column after `time`
  column  column index in fields.csv (time is column 0)
  edge    1-based edge index
  k       node index from the junction
  s       distance from the junction
  x       path coordinate (junction at the length of edge 1)

config.toml — the fully resolved configuration of the run
";

const SWEEP_SCHEMA: &str = "\
aggregate.csv — one row per swept value, in the order given
  value                           parameter value of this job
  status                          completed | unstable: … | failed: …
  max_delta_mass                  as in summary.csv (empty if the job failed)
  max_delta_mass_before_boundary  as in summary.csv
  reflected                       reflection verdict
  min_excursion                   most negative edge-1 value after the crossing
  crossing_time                   snapshot time at which the junction value peaks
  output_dir                      subdirectory with the job's run artifacts
";

const VERIFY_SCHEMA: &str = "\
verify.csv — key,value rows comparing the finite-difference and Picard solvers
  status               agree | disagree | inconclusive
  t_final              comparison time
  sup_norm_difference  max |u_fd − u_picard| over common nodes at t_final
  tolerance            accepted difference
  compared_nodes       number of nodes compared (junction counted once)
  junction_fd          h(t_final) from the finite-difference solver
  junction_picard      h(t_final) from the Picard solver
  picard_iterations    sweeps including the converged one
  final_residual       sup-norm change in the last sweep
  tail_bound           neglected kernel tail relative to the junction value
  y_max                extent of the quadrature grid on every edge

residuals.csv
  iteration  1-based sweep number
  residual   sup-norm change produced by that sweep
";

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(CliError::from)
}

pub fn write_run(dir: &Path, cfg: &ExperimentConfig, outcome: &RunOutcome) -> Result<(), CliError> {
    create_dir(dir)?;
    let mut w = csv_writer(&dir.join(DIAGNOSTICS_FILE))?;
    w.write_record(CSV_HEADER)?;
    for r in outcome.snapshot_records() {
        w.write_record(
            [
                r.time,
                r.mass,
                r.delta_mass_percent,
                r.energy,
                r.energy_rate_formula,
                r.junction_value,
                r.boundary_value,
            ]
            .map(num),
        )?;
    }
    w.flush().map_err(|e| CliError::io("writing diagnostics", e))?;
    write_summary(&dir.join(SUMMARY_FILE), &outcome.summary)?;
    if cfg.output.fields {
        write_fields(dir, cfg, &outcome.snapshots)?;
    }
    write_text(&dir.join(CONFIG_FILE), &cfg.to_toml_string())?;
    write_text(&dir.join(SCHEMA_FILE), RUN_SCHEMA)
}

/// Shortest round-trip decimal, switching to exponent notation for very
/// large or small magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e9).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn summary_rows(s: &RunSummary) -> Vec<(&'static str, String)> {
    vec![
        ("status", s.status.as_str().into()),
        ("bootstrap", s.bootstrap.as_str().into()),
        ("steps_completed", s.steps_completed.to_string()),
        ("final_time", num(s.final_time)),
        ("last_stable_time", num(s.last_stable_time)),
        ("initial_mass", num(s.initial_mass)),
        ("delta_mass_defined", s.delta_mass_defined.to_string()),
        ("max_delta_mass", num(s.max_delta_mass)),
        ("max_delta_mass_time", num(s.max_delta_mass_time)),
        ("boundary_contact_time", opt(s.boundary_contact_time)),
        ("max_delta_mass_before_boundary", num(s.max_delta_mass_before_boundary)),
        ("final_energy", num(s.final_energy)),
        ("reflected", s.reflected.to_string()),
        ("min_excursion", num(s.min_excursion)),
        ("min_excursion_location", num(s.min_excursion_location)),
        ("incident_amplitude", num(s.incident_amplitude)),
        ("crossing_time", num(s.crossing_time)),
    ]
}

fn write_pairs(path: &Path, rows: &[(&str, String)]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(["key", "value"])?;
    for (k, v) in rows {
        w.write_record([*k, v.as_str()])?;
    }
    w.flush()
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

fn write_summary(path: &Path, s: &RunSummary) -> Result<(), CliError> {
    write_pairs(path, &summary_rows(s))
}

fn write_fields(dir: &Path, cfg: &ExperimentConfig, snapshots: &[NetworkState]) -> Result<(), CliError> {
    let Some(first) = snapshots.first() else {
        return Ok(());
    };
    let network = cfg.network()?;
    let dx = cfg.grid.dx;
    let layout = first.global_layout();

    let mut g = csv_writer(&dir.join(GRID_FILE))?;
    g.write_record(["column", "edge", "k", "s", "x"])?;
    for (c, &(edge, k)) in layout.iter().enumerate() {
        let s = k as f64 * dx;
        g.write_record([
            (c + 1).to_string(),
            (edge + 1).to_string(),
            k.to_string(),
            num(s),
            num(path_coordinate(&network, edge, s)),
        ])?;
    }
    g.flush().map_err(|e| CliError::io("writing grid", e))?;

    let mut w = csv_writer(&dir.join(FIELDS_FILE))?;
    let mut header = vec!["time".to_string()];
    header.extend(layout.iter().map(|&(edge, k)| format!("e{}k{}", edge + 1, k)));
    w.write_record(&header)?;
    for s in snapshots {
        let mut row = vec![num(s.time)];
        row.extend(s.global_samples().into_iter().map(num));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io("writing fields", e))
}

pub fn write_sweep(dir: &Path, _parameter: &str, rows: &[SweepRow]) -> Result<(), CliError> {
    create_dir(dir)?;
    let mut w = csv_writer(&dir.join(AGGREGATE_FILE))?;
    w.write_record([
        "value",
        "status",
        "max_delta_mass",
        "max_delta_mass_before_boundary",
        "reflected",
        "min_excursion",
        "crossing_time",
        "output_dir",
    ])?;
    for r in rows {
        w.write_record([
            num(r.value),
            r.status.clone(),
            opt(r.max_delta_mass),
            opt(r.max_delta_mass_before_boundary),
            r.reflected.map(|b| b.to_string()).unwrap_or_default(),
            opt(r.min_excursion),
            opt(r.crossing_time),
            r.output_dir.clone(),
        ])?;
    }
    w.flush().map_err(|e| CliError::io("writing aggregate", e))?;
    write_text(
        &dir.join(SCHEMA_FILE),
        &format!("{SWEEP_SCHEMA}\nEach job directory holds the run artifacts:\n\n{RUN_SCHEMA}"),
    )
}

pub fn verify_rows(r: &VerifyReport) -> Vec<(&'static str, String)> {
    vec![
        ("status", r.status.as_str().into()),
        ("t_final", num(r.t_final)),
        ("sup_norm_difference", num(r.sup_norm_difference)),
        ("tolerance", num(r.tolerance)),
        ("compared_nodes", r.compared_nodes.to_string()),
        ("junction_fd", num(r.junction_fd)),
        ("junction_picard", num(r.junction_picard)),
        ("picard_iterations", r.picard_iterations.to_string()),
        ("final_residual", num(r.final_residual)),
        ("tail_bound", num(r.tail_bound)),
        ("y_max", num(r.y_max)),
    ]
}

pub fn write_verify(dir: &Path, cfg: &ExperimentConfig, report: &VerifyReport) -> Result<(), CliError> {
    create_dir(dir)?;
    write_pairs(&dir.join(VERIFY_FILE), &verify_rows(report))?;
    let mut w = csv_writer(&dir.join(RESIDUALS_FILE))?;
    w.write_record(["iteration", "residual"])?;
    for (i, r) in report.residuals.iter().enumerate() {
        w.write_record([(i + 1).to_string(), num(*r)])?;
    }
    w.flush().map_err(|e| CliError::io("writing residuals", e))?;
    write_text(&dir.join(CONFIG_FILE), &cfg.to_toml_string())?;
    write_text(&dir.join(SCHEMA_FILE), VERIFY_SCHEMA)
}

#[derive(Debug, Deserialize)]
struct SampleRow {
    edge: usize,
    k: usize,
    value: f64,
}

/// Reads `edge,k,value` rows into full per-edge arrays (junction first).
/// Unlisted nodes are zero; a junction value given on any edge applies to
/// all of them.
pub fn read_initial_samples(path: &Path, intervals: &[usize]) -> Result<Vec<Vec<f64>>, CliError> {
    let field = "initial.path";
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::config(field, e.to_string()))?;
    let mut samples: Vec<Vec<f64>> = intervals.iter().map(|&m| vec![0.0; m + 1]).collect();
    let mut junction: Option<f64> = None;
    for (line, row) in reader.deserialize::<SampleRow>().enumerate() {
        let row = row.map_err(|e| CliError::config(field, format!("{}: {e}", path.display())))?;
        let at = || format!("{} row {}", path.display(), line + 2);
        if row.edge < 1 || row.edge > samples.len() {
            return Err(CliError::config(
                field,
                format!("{}: edge {} does not exist", at(), row.edge),
            ));
        }
        let edge = &mut samples[row.edge - 1];
        if row.k >= edge.len() {
            return Err(CliError::config(
                field,
                format!(
                    "{}: node {} is beyond edge {} ({} intervals)",
                    at(),
                    row.k,
                    row.edge,
                    edge.len() - 1
                ),
            ));
        }
        if !row.value.is_finite() {
            return Err(CliError::config(field, format!("{}: value must be finite", at())));
        }
        if row.k == 0 {
            if let Some(h) = junction {
                if h != row.value {
                    return Err(CliError::config(
                        field,
                        format!("{}: junction value {} disagrees with {h}", at(), row.value),
                    ));
                }
            }
            junction = Some(row.value);
        }
        edge[row.k] = row.value;
    }
    if let Some(h) = junction {
        for edge in &mut samples {
            edge[0] = h;
        }
    }
    Ok(samples)
}
