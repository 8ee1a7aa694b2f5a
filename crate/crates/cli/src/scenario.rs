//! Scenario files: one simulation config, a list of deformations and a job list.

use std::path::PathBuf;

use qtrap_core::coupling::CouplingMode;
use qtrap_core::observables::{ProbeKind, QGrid, DEFAULT_REVIVAL_WINDOW};
use qtrap_core::{Complex64, DeformationParameter, SimulationConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub config: ConfigSection,
    #[serde(default = "default_taus")]
    pub tau: Vec<DeformationParameter>,
    pub jobs: Vec<Job>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_taus() -> Vec<DeformationParameter> {
    vec![DeformationParameter::undeformed()]
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Alpha {
    Real(f64),
    Complex {
        re: f64,
        #[serde(default)]
        im: f64,
    },
}

impl Alpha {
    pub fn value(self) -> Complex64 {
        match self {
            Alpha::Real(re) => Complex64::new(re, 0.0),
            Alpha::Complex { re, im } => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigSection {
    pub omega_bar: f64,
    pub delta_bar: f64,
    pub eps: f64,
    pub alpha: Alpha,
    pub truncation: usize,
    pub t_max: f64,
    pub n_samples: usize,
    pub coupling_mode: CouplingMode,
    pub probe: ProbeKind,
    pub q_grid: QGrid,
    pub revival_window: f64,
}

impl Default for ConfigSection {
    fn default() -> Self {
        let d = SimulationConfig::default();
        Self {
            omega_bar: d.omega_bar,
            delta_bar: d.delta_bar,
            eps: d.eps,
            alpha: Alpha::Complex {
                re: d.alpha.re,
                im: d.alpha.im,
            },
            truncation: d.truncation,
            t_max: d.t_max,
            n_samples: d.n_samples,
            coupling_mode: d.coupling_mode,
            probe: ProbeKind::default(),
            q_grid: QGrid::default(),
            revival_window: DEFAULT_REVIVAL_WINDOW,
        }
    }
}

impl ConfigSection {
    pub fn simulation(&self, deformation: DeformationParameter) -> SimulationConfig {
        SimulationConfig {
            deformation,
            omega_bar: self.omega_bar,
            delta_bar: self.delta_bar,
            eps: self.eps,
            alpha: self.alpha.value(),
            truncation: self.truncation,
            t_max: self.t_max,
            n_samples: self.n_samples,
            coupling_mode: self.coupling_mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Job {
    Inversion,
    Qfunction(QfunctionJob),
    Spectrum,
    CouplingDump,
    RabiTable,
    RevivalReport,
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::Inversion => "inversion",
            Job::Qfunction(_) => "qfunction",
            Job::Spectrum => "spectrum",
            Job::CouplingDump => "coupling_dump",
            Job::RabiTable => "rabi_table",
            Job::RevivalReport => "revival_report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct QfunctionJob {
    pub times: Vec<f64>,
    /// Restrict the job to these deformations; all of them when absent.
    #[serde(default)]
    pub tau: Option<Vec<DeformationParameter>>,
}

impl QfunctionJob {
    pub fn applies_to(&self, d: DeformationParameter) -> bool {
        self.tau.as_ref().is_none_or(|ts| ts.contains(&d))
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    /// Checks that do not need any numerics.
    pub fn validate(&self) -> Result<(), String> {
        if self.jobs.is_empty() {
            return Err("job list is empty".into());
        }
        if self.tau.is_empty() {
            return Err("tau list is empty".into());
        }
        for (i, d) in self.tau.iter().enumerate() {
            if self.tau[..i].contains(d) {
                return Err(format!("tau {d} is listed twice"));
            }
        }
        let c = &self.config;
        if !(c.revival_window.is_finite() && c.revival_window > 0.0) {
            return Err(format!("revival_window must be > 0, got {}", c.revival_window));
        }
        self.config
            .simulation(DeformationParameter::undeformed())
            .validate()
            .map_err(|e| e.to_string())?;
        c.q_grid.validate().map_err(|e| e.to_string())?;
        for job in &self.jobs {
            if let Job::Qfunction(q) = job {
                if q.times.is_empty() {
                    return Err("qfunction job has no times".into());
                }
                if let Some(t) = q.times.iter().find(|t| !(**t >= 0.0 && **t <= c.t_max)) {
                    return Err(format!("qfunction time {t} is outside [0, t_max = {}]", c.t_max));
                }
                if let Some(ts) = &q.tau {
                    if let Some(d) = ts.iter().find(|d| !self.tau.contains(d)) {
                        return Err(format!("qfunction job names tau {d}, which is not in the tau list"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scenario_uses_defaults() {
        let s = Scenario::from_json(r#"{"jobs": ["inversion"]}"#).unwrap();
        assert_eq!(s.config, ConfigSection::default());
        assert_eq!(s.tau, vec![DeformationParameter::undeformed()]);
        assert!(s.validate().is_ok());
    }

    #[test]
    fn parses_every_job_kind() {
        let s = Scenario::from_json(
            r#"{
                "config": {"alpha": {"re": 3.0, "im": 1.0}, "coupling_mode": "paper", "probe": "undeformed"},
                "tau": [{"magnitude": 0.003, "kind": "real"}, {"magnitude": 0.01, "kind": "imaginary"}],
                "jobs": ["inversion", "spectrum", "coupling_dump", "rabi_table", "revival_report",
                         {"qfunction": {"times": [0, 30], "tau": [{"magnitude": 0.003, "kind": "real"}]}}]
            }"#,
        )
        .unwrap();
        assert_eq!(s.jobs.len(), 6);
        assert_eq!(s.config.alpha.value(), Complex64::new(3.0, 1.0));
        assert_eq!(s.config.coupling_mode, CouplingMode::PaperClosedForm);
        let Job::Qfunction(q) = &s.jobs[5] else { panic!() };
        assert!(q.applies_to(DeformationParameter::real(0.003)));
        assert!(!q.applies_to(DeformationParameter::imaginary(0.01)));
        assert!(s.validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = Scenario::from_json(r#"{"jobs": ["inversion"], "config": {"omega": 3}}"#).unwrap_err();
        assert!(e.contains("`omega`"), "{e}");
        let e = Scenario::from_json(r#"{"jobs": [{"qfunction": {"times": [1], "grid": 2}}]}"#).unwrap_err();
        assert!(e.contains("`grid`"), "{e}");
        let e = Scenario::from_json(r#"{"jobs": [], "outdir": "x"}"#).unwrap_err();
        assert!(e.contains("`outdir`"), "{e}");
    }

    #[test]
    fn validation_failures() {
        let bad = [
            r#"{"jobs": []}"#,
            r#"{"jobs": ["inversion"], "tau": []}"#,
            r#"{"jobs": [{"qfunction": {"times": [250]}}]}"#,
            r#"{"jobs": [{"qfunction": {"times": [1], "tau": [{"magnitude": 0.5, "kind": "real"}]}}]}"#,
            r#"{"jobs": ["inversion"], "config": {"n_samples": 1}}"#,
            r#"{"jobs": ["inversion"], "config": {"revival_window": 0}}"#,
        ];
        for text in bad {
            let s = Scenario::from_json(text).unwrap();
            assert!(s.validate().is_err(), "{text}");
        }
    }
}
