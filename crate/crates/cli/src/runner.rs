//! Executes a scenario: one output set per deformation, jobs in file order.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qtrap_core::coupling::{f_matrix, CouplingMode};
use qtrap_core::dynamics::{build_hamiltonian_with, effective_rabi, initial_state, propagate};
use qtrap_core::fock::{level_spacing, trap_energy};
use qtrap_core::observables::{detect_revivals, inversion_trace, q_function, reduced_density, InversionTrace};
use qtrap_core::{DeformationParameter, QtrapError};
use rayon::prelude::*;
use serde::Serialize;

use crate::output;
use crate::scenario::{Job, Scenario};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub mode: Option<CouplingMode>,
}

/// One written file.
#[derive(Debug, Clone, Serialize)]
pub struct JobRecord {
    pub tau: String,
    pub job: String,
    pub file: String,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TauReport {
    pub tau: String,
    pub records: Vec<JobRecord>,
    /// Largest probe tail weight over all Q-function grids, if any were computed.
    pub max_probe_tail_weight: Option<f64>,
}

pub fn file_prefix(d: DeformationParameter) -> String {
    d.to_string()
}

fn write(dir: &Path, name: &str, body: &str) -> Result<(), CliError> {
    fs::write(dir.join(name), body).map_err(|e| CliError::Io(format!("{}: {e}", dir.join(name).display())))
}

fn run_tau(scenario: &Scenario, d: DeformationParameter, opts: &RunOptions) -> Result<TauReport, CliError> {
    let mut cfg = scenario.config.simulation(d);
    if let Some(mode) = opts.mode {
        cfg.coupling_mode = mode;
    }
    let prefix = file_prefix(d);
    let space = cfg.space()?;
    let coupling = f_matrix(&space, cfg.eps, cfg.coupling_mode)?;
    let mut propagator = None;
    let mut trace: Option<InversionTrace> = None;
    let mut records = Vec::new();
    let mut max_tail: Option<f64> = None;

    let record = |records: &mut Vec<JobRecord>, job: &str, file: String, started: Instant| {
        records.push(JobRecord {
            tau: d.to_string(),
            job: job.to_string(),
            file,
            wall_seconds: started.elapsed().as_secs_f64(),
        });
    };

    for job in &scenario.jobs {
        let started = Instant::now();
        let needs_dynamics = matches!(job, Job::Inversion | Job::RevivalReport | Job::Qfunction(_));
        if needs_dynamics && propagator.is_none() {
            propagator = Some(build_hamiltonian_with(&cfg, &space, &coupling)?);
        }
        if matches!(job, Job::Inversion | Job::RevivalReport) && trace.is_none() {
            let p = propagator.as_ref().unwrap();
            trace = Some(inversion_trace(p, &initial_state(&cfg)?, &cfg.sample_times())?);
        }
        match job {
            Job::Inversion => {
                let name = format!("{prefix}_inversion.csv");
                write(&opts.out_dir, &name, &output::inversion_csv(trace.as_ref().unwrap()))?;
                record(&mut records, job.name(), name, started);
            }
            Job::RevivalReport => {
                let revivals = detect_revivals(trace.as_ref().unwrap(), scenario.config.revival_window)?;
                let name = format!("{prefix}_revivals.csv");
                write(&opts.out_dir, &name, &output::revival_csv(&revivals))?;
                record(&mut records, job.name(), name, started);
            }
            Job::Qfunction(q) => {
                if !q.applies_to(d) {
                    continue;
                }
                let p = propagator.as_ref().unwrap();
                let states = {
                    let mut times = q.times.clone();
                    times.sort_by(f64::total_cmp);
                    let states = propagate(p, &initial_state(&cfg)?, &times)?;
                    times.into_iter().zip(states).collect::<Vec<_>>()
                };
                for t in &q.times {
                    let started = Instant::now();
                    let (_, s) = states.iter().find(|(ts, _)| ts == t).unwrap();
                    let field = q_function(
                        &reduced_density(s),
                        &scenario.config.q_grid,
                        &space,
                        scenario.config.probe,
                    )?;
                    max_tail = Some(max_tail.unwrap_or(0.0).max(field.max_tail_weight));
                    let name = format!("{prefix}_qfunction_t{t}.csv");
                    write(&opts.out_dir, &name, &output::qfield_csv(&field))?;
                    record(&mut records, job.name(), name, started);
                }
            }
            Job::Spectrum => {
                let rows = (0..=cfg.truncation)
                    .map(|n| Ok((n, trap_energy(n, d)?, level_spacing(n, d))))
                    .collect::<Result<Vec<_>, QtrapError>>()?;
                let name = format!("{prefix}_spectrum.csv");
                write(&opts.out_dir, &name, &output::spectrum_csv(&rows))?;
                record(&mut records, job.name(), name, started);
            }
            Job::RabiTable => {
                let rows = (0..=cfg.truncation)
                    .map(|m| Ok((m, effective_rabi(m, &cfg)?)))
                    .collect::<Result<Vec<_>, QtrapError>>()?;
                let name = format!("{prefix}_rabi.csv");
                write(&opts.out_dir, &name, &output::rabi_csv(&rows))?;
                record(&mut records, job.name(), name, started);
            }
            Job::CouplingDump => {
                let abs = coupling.matrix().map(|z| z.norm());
                let name = format!("{prefix}_coupling.csv");
                write(&opts.out_dir, &name, &output::coupling_csv(&abs))?;
                record(&mut records, job.name(), name, started);
            }
        }
    }
    Ok(TauReport {
        tau: d.to_string(),
        records,
        max_probe_tail_weight: max_tail,
    })
}

/// Runs every deformation in parallel; reports come back in `scenario.tau` order.
pub fn execute(scenario: &Scenario, opts: &RunOptions) -> Result<Vec<TauReport>, CliError> {
    fs::create_dir_all(&opts.out_dir).map_err(|e| CliError::Io(format!("{}: {e}", opts.out_dir.display())))?;
    let results: Vec<Result<TauReport, CliError>> =
        scenario.tau.par_iter().map(|&d| run_tau(scenario, d, opts)).collect();
    results.into_iter().collect()
}

/// Sidecar with everything that may differ between otherwise identical runs.
pub fn write_metadata(
    out_dir: &Path,
    scenario_source: &str,
    opts: &RunOptions,
    threads: usize,
    reports: &[TauReport],
    wall_seconds: f64,
) -> Result<(), CliError> {
    let unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut per_tau = BTreeMap::new();
    for r in reports {
        per_tau.insert(r.tau.clone(), r);
    }
    let meta = serde_json::json!({
        "tool": "qtrap",
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": scenario_source,
        "mode_override": opts.mode,
        "threads": threads,
        "finished_unix": unix,
        "wall_seconds": wall_seconds,
        "runs": per_tau,
    });
    let body = serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n";
    write(out_dir, "run_meta.json", &body)
}
