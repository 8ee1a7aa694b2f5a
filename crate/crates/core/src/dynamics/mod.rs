//! Atom + trap Hamiltonian in the product basis and its time evolution.
//!
//! Units: `hbar = 1`, energies in units of the Rabi frequency, and the scaled
//! time `t = Omega t_phys / (2 pi)` everywhere in the public API. A state
//! vector stacks the ground amplitudes `g_0..g_M` above the excited
//! amplitudes `e_0..e_M`.

mod ode;

pub use ode::{rk_propagate, Dop853, RkOutcome};

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::coupling::{f_matrix, CouplingMatrix, CouplingMode};
use crate::error::{QtrapError, Result};
use crate::fock::{build_space, coherent_state, FockSpace};
use crate::qnum::DeformationParameter;

/// Physical and numerical parameters of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub deformation: DeformationParameter,
    /// Trap frequency over Rabi frequency.
    pub omega_bar: f64,
    /// Detuning over Rabi frequency.
    pub delta_bar: f64,
    /// Lamb-Dicke-type coupling parameter.
    pub eps: f64,
    pub alpha: Complex64,
    /// Highest retained trap level `M`.
    pub truncation: usize,
    /// End of the sampled interval, in scaled time.
    pub t_max: f64,
    pub n_samples: usize,
    pub coupling_mode: CouplingMode,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            deformation: DeformationParameter::undeformed(),
            omega_bar: 50.0,
            delta_bar: -50.0,
            eps: 0.2,
            alpha: Complex64::new(4.0, 0.0),
            truncation: 32,
            t_max: 200.0,
            n_samples: 4001,
            coupling_mode: CouplingMode::ExactExponential,
        }
    }
}

impl SimulationConfig {
    pub fn with_deformation(mut self, d: DeformationParameter) -> Self {
        self.deformation = d;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(QtrapError::InvalidParameter(msg));
        if !(self.omega_bar.is_finite() && self.omega_bar > 0.0) {
            return bad(format!("omega_bar must be > 0, got {}", self.omega_bar));
        }
        if !self.delta_bar.is_finite() {
            return bad(format!("delta_bar must be finite, got {}", self.delta_bar));
        }
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return bad(format!("eps must be >= 0, got {}", self.eps));
        }
        if !(self.alpha.re.is_finite() && self.alpha.im.is_finite()) {
            return bad("alpha must be finite".into());
        }
        if self.truncation < 1 {
            return bad("truncation must be >= 1".into());
        }
        if self.n_samples < 2 {
            return bad(format!("n_samples must be >= 2, got {}", self.n_samples));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return bad(format!("t_max must be > 0, got {}", self.t_max));
        }
        Ok(())
    }

    /// `n_samples` evenly spaced times on `[0, t_max]`.
    pub fn sample_times(&self) -> Vec<f64> {
        let last = (self.n_samples - 1) as f64;
        (0..self.n_samples).map(|i| self.t_max * i as f64 / last).collect()
    }

    pub fn space(&self) -> Result<FockSpace> {
        build_space(self.truncation, self.deformation)
    }
}

/// Ground and excited amplitudes at one scaled time.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomFieldState {
    pub g: DVector<Complex64>,
    pub e: DVector<Complex64>,
    pub t: f64,
}

impl AtomFieldState {
    pub fn from_stacked(psi: &DVector<Complex64>, t: f64) -> Self {
        let dim = psi.len() / 2;
        Self {
            g: psi.rows(0, dim).into_owned(),
            e: psi.rows(dim, dim).into_owned(),
            t,
        }
    }

    pub fn stacked(&self) -> DVector<Complex64> {
        let dim = self.g.len();
        let mut psi = DVector::zeros(2 * dim);
        psi.rows_mut(0, dim).copy_from(&self.g);
        psi.rows_mut(dim, dim).copy_from(&self.e);
        psi
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.g.norm_squared() + self.e.norm_squared()
    }

    pub fn ground_population(&self) -> f64 {
        self.g.norm_squared()
    }

    pub fn excited_population(&self) -> f64 {
        self.e.norm_squared()
    }
}

/// Hermitian Hamiltonian with its eigendecomposition, computed once.
#[derive(Debug, Clone)]
pub struct Propagator {
    h: DMatrix<Complex64>,
    eigvals: DVector<f64>,
    eigvecs: DMatrix<Complex64>,
}

impl Propagator {
    pub fn from_hamiltonian(h: DMatrix<Complex64>) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(QtrapError::InvalidParameter("Hamiltonian must be square".into()));
        }
        let residual = hermiticity_residual(&h);
        if residual >= 1e-10 {
            return Err(QtrapError::NotHermitian { residual });
        }
        let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, 0)
            .ok_or_else(|| QtrapError::Eigendecomposition("Hamiltonian did not converge".into()))?;
        Ok(Self {
            h,
            eigvals: eig.eigenvalues,
            eigvecs: eig.eigenvectors,
        })
    }

    pub fn hamiltonian(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    pub fn eigvals(&self) -> &DVector<f64> {
        &self.eigvals
    }

    pub fn eigvecs(&self) -> &DMatrix<Complex64> {
        &self.eigvecs
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// Largest entry of `V diag(E) V^+ - H`.
    pub fn reconstruction_residual(&self) -> f64 {
        let v = &self.eigvecs;
        let d = DMatrix::from_diagonal(&self.eigvals.map(|x| Complex64::new(x, 0.0)));
        (v * d * v.adjoint() - &self.h).map(|z| z.norm()).max()
    }

    /// `<psi|H|psi>`.
    pub fn energy(&self, s: &AtomFieldState) -> f64 {
        let psi = s.stacked();
        (psi.adjoint() * &self.h * &psi)[(0, 0)].re
    }

    /// `U(t) = V diag(exp(-2 pi i E t)) V^+` as a dense matrix.
    pub fn evolution_operator(&self, t: f64) -> DMatrix<Complex64> {
        let v = &self.eigvecs;
        let mut scaled = v.clone();
        for (k, e) in self.eigvals.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -TAU * e * t);
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= phase);
        }
        scaled * v.adjoint()
    }

    /// Evolve a stacked state vector by `t` (scaled time).
    pub fn evolve_vector(&self, psi: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        let c = self.eigvecs.ad_mul(psi);
        self.expand(&c, t)
    }

    fn expand(&self, c: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        let rotated = DVector::from_iterator(
            c.len(),
            c.iter()
                .zip(self.eigvals.iter())
                .map(|(ck, e)| ck * Complex64::from_polar(1.0, -TAU * e * t)),
        );
        &self.eigvecs * rotated
    }
}

fn hermiticity_residual(h: &DMatrix<Complex64>) -> f64 {
    (h - h.adjoint()).map(|z| z.norm()).max()
}

/// Dense Hamiltonian for a given coupling matrix `F` and coupling scale.
///
/// Ground block diagonal `(omega (E_m) - delta)/2`, excited `(omega (E_m) + delta)/2`
/// with `E_m = [m+1]_q + [m]_q`; `<e,m|H|g,n> = s F_mn / 2` and
/// `<g,m|H|e,n> = s conj(F_nm) / 2`.
pub fn hamiltonian_matrix(
    space: &FockSpace,
    f: &DMatrix<Complex64>,
    omega_bar: f64,
    delta_bar: f64,
    coupling_scale: f64,
) -> DMatrix<Complex64> {
    let dim = space.dim();
    assert_eq!(f.nrows(), dim, "coupling matrix does not match the Fock space");
    let mut h = DMatrix::zeros(2 * dim, 2 * dim);
    for m in 0..dim {
        let trap = omega_bar * (space.q_number(m + 1) + space.q_number(m));
        h[(m, m)] = Complex64::new(0.5 * (trap - delta_bar), 0.0);
        h[(dim + m, dim + m)] = Complex64::new(0.5 * (trap + delta_bar), 0.0);
    }
    let half = 0.5 * coupling_scale;
    for m in 0..dim {
        for n in 0..dim {
            h[(dim + m, n)] = f[(m, n)] * half;
            h[(m, dim + n)] = f[(n, m)].conj() * half;
        }
    }
    h
}

/// Build the Hamiltonian for `cfg` and diagonalize it.
pub fn build_hamiltonian(cfg: &SimulationConfig) -> Result<Propagator> {
    cfg.validate()?;
    let space = cfg.space()?;
    let coupling = f_matrix(&space, cfg.eps, cfg.coupling_mode)?;
    build_hamiltonian_with(cfg, &space, &coupling)
}

pub fn build_hamiltonian_with(
    cfg: &SimulationConfig,
    space: &FockSpace,
    coupling: &CouplingMatrix,
) -> Result<Propagator> {
    let h = hamiltonian_matrix(space, coupling.matrix(), cfg.omega_bar, cfg.delta_bar, 1.0);
    Propagator::from_hamiltonian(h)
}

/// Atom in the ground state, motion in the q-coherent state `|alpha>_q`.
pub fn initial_state(cfg: &SimulationConfig) -> Result<AtomFieldState> {
    cfg.validate()?;
    let space = cfg.space()?;
    let g = coherent_state(cfg.alpha, &space)?.into_coeffs();
    let e = DVector::zeros(space.dim());
    Ok(AtomFieldState { g, e, t: 0.0 })
}

/// States at each of `times`, by spectral propagation from `s0` (taken at `t = 0`).
pub fn propagate(p: &Propagator, s0: &AtomFieldState, times: &[f64]) -> Result<Vec<AtomFieldState>> {
    if times.first().is_some_and(|&t| t < 0.0) {
        return Err(QtrapError::InvalidParameter("times must be >= 0".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(QtrapError::InvalidParameter("times must be sorted ascending".into()));
    }
    let psi0 = s0.stacked();
    if psi0.len() != p.dim() {
        return Err(QtrapError::InvalidParameter(format!(
            "state dimension {} does not match Hamiltonian dimension {}",
            psi0.len(),
            p.dim()
        )));
    }
    let c = p.eigvecs.ad_mul(&psi0);
    Ok(times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                AtomFieldState { t, ..s0.clone() }
            } else {
                AtomFieldState::from_stacked(&p.expand(&c, t), t)
            }
        })
        .collect())
}

/// Level-dependent effective Rabi frequency in the single-quantum-exchange limit:
/// `sqrt([omega (cosh(2 tau (m+1)) + 1) / 2 + delta]^2 + eps^2 [m+1]_q)`, in units of Omega.
pub fn effective_rabi(m: usize, cfg: &SimulationConfig) -> Result<f64> {
    let d = cfg.deformation;
    let kernel = if d.is_undeformed() {
        1.0
    } else {
        d.spacing_kernel(2.0 * (m as f64 + 1.0))
    };
    let detuning = 0.5 * cfg.omega_bar * (kernel + 1.0) + cfg.delta_bar;
    let qn = crate::qnum::q_number(m as f64 + 1.0, d)?;
    Ok((detuning * detuning + cfg.eps * cfg.eps * qn).sqrt())
}
