//! Population inversion, revival detection, reduced density matrix and Q-function fields.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{propagate, AtomFieldState, Propagator};
use crate::error::{QtrapError, Result};
use crate::fock::{build_space, coherent_state_unchecked, FockSpace};
use crate::qnum::DeformationParameter;

/// Default envelope window for revival detection, in scaled time.
pub const DEFAULT_REVIVAL_WINDOW: f64 = 5.0;
/// Default relative threshold for Q-function peak counting.
pub const DEFAULT_PEAK_THRESHOLD: f64 = 0.1;
/// Envelope heights below this are not revivals; `W` is a population difference.
const ENVELOPE_FLOOR: f64 = 1e-3;
/// A revival must reach this fraction of the largest envelope value in the trace.
const REVIVAL_REL_HEIGHT: f64 = 0.1;
/// Maxima closer than this many grid steps are merged.
pub const PEAK_MERGE_RADIUS: f64 = 3.0;

/// `W = sum |e_m|^2 - sum |g_m|^2`.
pub fn inversion(s: &AtomFieldState) -> f64 {
    s.excited_population() - s.ground_population()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionTrace {
    pub times: Vec<f64>,
    pub w: Vec<f64>,
}

impl InversionTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Population variance of `w` over samples with `t` in `[from, to]`.
    pub fn variance_between(&self, from: f64, to: f64) -> f64 {
        let vals: Vec<f64> = self
            .times
            .iter()
            .zip(&self.w)
            .filter(|(t, _)| **t >= from && **t <= to)
            .map(|(_, w)| *w)
            .collect();
        if vals.is_empty() {
            return 0.0;
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        vals.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n
    }
}

pub fn inversion_trace(p: &Propagator, s0: &AtomFieldState, times: &[f64]) -> Result<InversionTrace> {
    let states = propagate(p, s0, times)?;
    Ok(InversionTrace {
        times: times.to_vec(),
        w: states.iter().map(inversion).collect(),
    })
}

/// `rho_mn = g_m g_n* + e_m e_n*`, the motional state with the atom traced out.
pub fn reduced_density(s: &AtomFieldState) -> DMatrix<Complex64> {
    &s.g * s.g.adjoint() + &s.e * s.e.adjoint()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    /// `<alpha|_q` built with the deformation of the dynamics.
    #[default]
    Deformed,
    /// Ordinary Glauber probe regardless of the deformation.
    Undeformed,
}

/// Rectangular sampling of the complex `alpha` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub step: f64,
}

impl Default for QGrid {
    fn default() -> Self {
        Self::square(6.0, 0.1)
    }
}

impl QGrid {
    /// `[-half, half]^2` with the given step.
    pub fn square(half: f64, step: f64) -> Self {
        Self {
            re_min: -half,
            re_max: half,
            im_min: -half,
            im_max: half,
            step,
        }
    }

    fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize + 1;
        (0..n).map(|k| lo + k as f64 * step).collect()
    }

    pub fn re_axis(&self) -> Vec<f64> {
        Self::axis(self.re_min, self.re_max, self.step)
    }

    pub fn im_axis(&self) -> Vec<f64> {
        Self::axis(self.im_min, self.im_max, self.step)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.re_min, self.re_max, self.im_min, self.im_max, self.step]
            .iter()
            .all(|v| v.is_finite());
        if !ok || self.step <= 0.0 || self.re_max <= self.re_min || self.im_max <= self.im_min {
            return Err(QtrapError::InvalidGrid(format!("{self:?}")));
        }
        let cells =
            ((self.re_max - self.re_min) / self.step).round() * ((self.im_max - self.im_min) / self.step).round();
        if cells > 1e7 {
            return Err(QtrapError::InvalidGrid(format!("{cells} cells is too many")));
        }
        Ok(())
    }

    fn covers_default_window(&self) -> bool {
        let tol = 1e-9;
        self.re_min <= -6.0 + tol && self.re_max >= 6.0 - tol && self.im_min <= -6.0 + tol && self.im_max >= 6.0 - tol
    }
}

/// Q-function samples; `values[(i, j)]` is the value at `re[i] + i im[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QField {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub values: DMatrix<f64>,
    pub deformation: DeformationParameter,
    /// Largest truncated-series tail weight among the probe states.
    pub max_tail_weight: f64,
}

impl QField {
    /// Field from explicit samples on uniformly spaced axes.
    pub fn from_samples(re: Vec<f64>, im: Vec<f64>, values: DMatrix<f64>) -> Self {
        assert_eq!((values.nrows(), values.ncols()), (re.len(), im.len()));
        Self {
            re,
            im,
            values,
            deformation: DeformationParameter::undeformed(),
            max_tail_weight: 0.0,
        }
    }

    fn step(&self) -> (f64, f64) {
        let dr = if self.re.len() > 1 {
            self.re[1] - self.re[0]
        } else {
            1.0
        };
        let di = if self.im.len() > 1 {
            self.im[1] - self.im[0]
        } else {
            1.0
        };
        (dr, di)
    }

    /// Riemann sum of the field over the grid.
    pub fn integral(&self) -> f64 {
        let (dr, di) = self.step();
        self.values.sum() * dr * di
    }

    pub fn max(&self) -> f64 {
        self.values.max()
    }

    /// Grid coordinates of the merged local maxima, strongest first.
    pub fn peaks(&self, rel_threshold: f64) -> Vec<Complex64> {
        find_peaks(self, rel_threshold)
            .into_iter()
            .map(|(i, j)| Complex64::new(self.re[i], self.im[j]))
            .collect()
    }
}

/// `Q(alpha) = <alpha|rho|alpha> / pi` over `grid`.
///
/// Probe states are the truncated series carrying the normalization of the full series,
/// so their weight leaking past the truncation shows up as a smaller `Q` rather than
/// being renormalized back in.
pub fn q_function(rho: &DMatrix<Complex64>, grid: &QGrid, space: &FockSpace, probe: ProbeKind) -> Result<QField> {
    grid.validate()?;
    if !grid.covers_default_window() {
        return Err(QtrapError::InvalidGrid("grid must cover at least [-6, 6]^2".into()));
    }
    if rho.nrows() != space.dim() || rho.ncols() != space.dim() {
        return Err(QtrapError::InvalidParameter(format!(
            "density matrix is {}x{}, Fock space has dimension {}",
            rho.nrows(),
            rho.ncols(),
            space.dim()
        )));
    }
    let undeformed;
    let probe_space = match probe {
        ProbeKind::Deformed => space,
        ProbeKind::Undeformed => {
            undeformed = build_space(space.truncation(), DeformationParameter::undeformed())?;
            &undeformed
        }
    };
    let re = grid.re_axis();
    let im = grid.im_axis();
    let rows: Vec<(Vec<f64>, f64)> = re
        .par_iter()
        .map(|&ar| {
            let mut tail = 0.0f64;
            let row = im
                .iter()
                .map(|&ai| {
                    let st = coherent_state_unchecked(Complex64::new(ar, ai), probe_space);
                    tail = tail.max(st.tail_weight());
                    let c = st.coeffs();
                    // weight by the untruncated normalization so the probes resolve the identity
                    let v = (1.0 - st.tail_weight()) * (c.adjoint() * rho * c)[(0, 0)].re / PI;
                    v.max(0.0)
                })
                .collect();
            (row, tail)
        })
        .collect();
    let mut values = DMatrix::zeros(re.len(), im.len());
    let mut max_tail_weight = 0.0f64;
    for (i, (row, tail)) in rows.into_iter().enumerate() {
        max_tail_weight = max_tail_weight.max(tail);
        for (j, v) in row.into_iter().enumerate() {
            values[(i, j)] = v;
        }
    }
    if max_tail_weight > 1e-3 {
        log::warn!(
            "probe states at the grid corners lose up to {max_tail_weight:.3e} of their weight to truncation at M = {}",
            space.truncation()
        );
    }
    Ok(QField {
        re,
        im,
        values,
        deformation: space.deformation(),
        max_tail_weight,
    })
}

fn find_peaks(field: &QField, rel_threshold: f64) -> Vec<(usize, usize)> {
    let v = &field.values;
    let (nr, ni) = (v.nrows(), v.ncols());
    let floor = rel_threshold * field.max();
    let mut candidates = Vec::new();
    for i in 0..nr {
        for j in 0..ni {
            let x = v[(i, j)];
            if x <= floor {
                continue;
            }
            let mut is_max = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= nr as i64 || jj >= ni as i64 {
                        continue;
                    }
                    if v[(ii as usize, jj as usize)] >= x {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                candidates.push((i, j, x));
            }
        }
    }
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut kept: Vec<(usize, usize)> = Vec::new();
    for (i, j, _) in candidates {
        let close = kept.iter().any(|&(ki, kj)| {
            let (dr, dc) = (i as f64 - ki as f64, j as f64 - kj as f64);
            (dr * dr + dc * dc).sqrt() < PEAK_MERGE_RADIUS
        });
        if !close {
            kept.push((i, j));
        }
    }
    kept
}

/// Number of strict 8-neighbour local maxima above `rel_threshold * max`,
/// after merging maxima closer than [`PEAK_MERGE_RADIUS`] grid steps.
pub fn count_peaks(field: &QField, rel_threshold: f64) -> Result<usize> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(QtrapError::InvalidParameter(format!(
            "rel_threshold must lie in (0, 1), got {rel_threshold}"
        )));
    }
    Ok(find_peaks(field, rel_threshold).len())
}

/// `||Q(a_r, a_i) - Q(a_r, -a_i)||_1 / ||Q||_1`, in `[0, 2]`.
pub fn asymmetry(field: &QField) -> Result<f64> {
    let n = field.im.len();
    let symmetric = (0..n).all(|j| (field.im[j] + field.im[n - 1 - j]).abs() < 1e-9);
    if !symmetric {
        return Err(QtrapError::InvalidGrid(
            "imaginary axis is not symmetric about 0".into(),
        ));
    }
    let v = &field.values;
    let total: f64 = v.iter().map(|x| x.abs()).sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let mut diff = 0.0;
    for i in 0..v.nrows() {
        for j in 0..n {
            diff += (v[(i, j)] - v[(i, n - 1 - j)]).abs();
        }
    }
    Ok(diff / total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Revival {
    pub time: f64,
    pub envelope_height: f64,
}

/// Oscillation envelope: moving RMS of `w` minus its moving mean, over centered windows
/// of `window_samples + 1` points (clipped at the ends).
pub fn envelope(w: &[f64], window_samples: usize) -> Vec<f64> {
    let half = window_samples / 2;
    let moving_mean = |xs: &[f64]| -> Vec<f64> {
        let mut prefix = Vec::with_capacity(xs.len() + 1);
        prefix.push(0.0);
        for x in xs {
            prefix.push(prefix.last().unwrap() + x);
        }
        (0..xs.len())
            .map(|i| {
                let lo = i.saturating_sub(half);
                let hi = (i + half).min(xs.len() - 1);
                (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64
            })
            .collect()
    };
    let mean = moving_mean(w);
    let sq: Vec<f64> = w.iter().zip(&mean).map(|(x, m)| (x - m).powi(2)).collect();
    moving_mean(&sq).into_iter().map(|v| v.max(0.0).sqrt()).collect()
}

/// Revivals of the inversion oscillations, in time order.
///
/// A revival is a maximum of the [`envelope`] over `±window` that exceeds
/// 1.5 times the lowest envelope value since the previous revival (or the
/// start of the trace), and reaches a tenth of the largest envelope value.
pub fn detect_revivals(trace: &InversionTrace, window: f64) -> Result<Vec<Revival>> {
    if trace.len() < 2 || trace.len() != trace.w.len() {
        return Err(QtrapError::TraceTooShort {
            samples: trace.len(),
            required: 2,
        });
    }
    if !(window.is_finite() && window > 0.0) {
        return Err(QtrapError::InvalidParameter(format!(
            "window must be > 0, got {window}"
        )));
    }
    let dt = (trace.times[trace.len() - 1] - trace.times[0]) / (trace.len() - 1) as f64;
    let per_window = (window / dt).round() as usize;
    if per_window < 8 {
        return Err(QtrapError::InvalidParameter(format!(
            "trace has {per_window} samples per window, need at least 8"
        )));
    }
    if trace.len() < 2 * per_window {
        return Err(QtrapError::TraceTooShort {
            samples: trace.len(),
            required: 2 * per_window,
        });
    }
    let env = envelope(&trace.w, per_window);
    let n = env.len();
    let half = per_window / 2;
    let threshold = ENVELOPE_FLOOR.max(REVIVAL_REL_HEIGHT * env.iter().cloned().fold(0.0, f64::max));
    let mut out = Vec::new();
    let mut floor = f64::INFINITY;
    let mut i = 0;
    while i < n {
        floor = floor.min(env[i]);
        let lo = i.saturating_sub(per_window);
        let hi = (i + per_window).min(n - 1);
        let is_max = (lo..=hi).all(|j| env[j] < env[i] || (env[j] == env[i] && j >= i));
        if is_max && i + half < n && env[i] > 1.5 * floor && env[i] >= threshold {
            out.push(Revival {
                time: trace.times[i],
                envelope_height: env[i],
            });
            floor = f64::INFINITY;
            i = hi + 1;
            continue;
        }
        i += 1;
    }
    Ok(out)
}
