//! Matrix elements of the light-field coupling `F = exp[i eps (a+ + a)]`.
//!
//! Two routes are provided. [`CouplingMode::ExactExponential`] exponentiates the
//! truncated position matrix through its eigendecomposition and is unitary up to
//! roundoff. [`CouplingMode::PaperClosedForm`] evaluates the disentangled
//! series, which treats `[a, a+]` as in the undeformed limit and mixes
//! q-factorials with the ordinary factorial `(n - m + k)!`.
//!
//! Both routes give a symmetric matrix, `F_mn = F_nm`, because the position
//! matrix is real symmetric in the number basis.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QtrapError, Result};
use crate::fock::FockSpace;
use crate::qnum::{q_number, DeformationParameter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum CouplingMode {
    #[serde(rename = "paper")]
    PaperClosedForm,
    #[default]
    #[serde(rename = "exact")]
    ExactExponential,
}

impl std::str::FromStr for CouplingMode {
    type Err = QtrapError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::PaperClosedForm),
            "exact" => Ok(Self::ExactExponential),
            other => Err(QtrapError::InvalidParameter(format!(
                "unknown coupling mode `{other}` (expected `exact` or `paper`)"
            ))),
        }
    }
}

/// Overall factor in front of the closed-form series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prefactor {
    /// `e^{-eps^2}`, as printed in the closed form.
    #[default]
    Printed,
    /// `e^{-eps^2/2}`, the undeformed disentangling identity.
    Bch,
    /// `e^{+eps^2}`, from substituting `[a+, a] = -1` literally into `e^{-eps^2 [a+, a]}`.
    CommutatorLiteral,
}

impl Prefactor {
    pub const ALL: [Prefactor; 3] = [Prefactor::Printed, Prefactor::Bch, Prefactor::CommutatorLiteral];

    pub fn value(self, eps: f64) -> f64 {
        let e2 = eps * eps;
        match self {
            Prefactor::Printed => (-e2).exp(),
            Prefactor::Bch => (-0.5 * e2).exp(),
            Prefactor::CommutatorLiteral => e2.exp(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Prefactor::Printed => "exp(-eps^2)",
            Prefactor::Bch => "exp(-eps^2/2)",
            Prefactor::CommutatorLiteral => "exp(+eps^2)",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    eps: f64,
    deformation: DeformationParameter,
    mode: CouplingMode,
    matrix: DMatrix<Complex64>,
    margin: usize,
}

impl CouplingMatrix {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn deformation(&self) -> DeformationParameter {
        self.deformation
    }

    pub fn mode(&self) -> CouplingMode {
        self.mode
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of rows/columns next to the truncation edge that are not trusted.
    pub fn untrusted_margin(&self) -> usize {
        self.margin
    }

    /// Number of leading rows/columns (`0..interior_dim`) unaffected by truncation:
    /// levels `m` with `M - m > margin`.
    pub fn interior_dim(&self) -> usize {
        (self.dim() - 1).saturating_sub(self.margin)
    }

    /// Largest `|F^+ F - 1|` entry on the interior block.
    pub fn unitarity_residual(&self) -> f64 {
        let k = self.interior_dim();
        let f = &self.matrix;
        let g = f.adjoint() * f;
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// `ceil(4 eps sqrt(M))`, the band of levels next to `M` that truncation corrupts.
pub fn untrusted_margin(eps: f64, truncation: usize) -> usize {
    (4.0 * eps.abs() * (truncation as f64).sqrt()).ceil() as usize
}

fn i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

// Closed-form element for m <= n given ln [j]_q! lookups.
fn closed_upper(m: usize, n: usize, eps: f64, prefactor: Prefactor, ln_qf: &dyn Fn(usize) -> f64) -> Complex64 {
    debug_assert!(m <= n);
    if eps == 0.0 {
        return if m == n {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    let ln_eps = eps.abs().ln();
    let half = 0.5 * (ln_qf(m) + ln_qf(n));
    let d = n - m;
    let mut ln_kfact = 0.0;
    let mut ln_dkfact = ln_factorial(d);
    let mut sum = 0.0;
    for k in 0..=m {
        if k > 0 {
            ln_kfact += (k as f64).ln();
            ln_dkfact += ((d + k) as f64).ln();
        }
        let ln_mag = half - ln_qf(m - k) - ln_kfact - ln_dkfact + (d + 2 * k) as f64 * ln_eps;
        let term = ln_mag.exp();
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    // (i eps)^d with a signed eps
    let sign = if eps < 0.0 && d % 2 == 1 { -1.0 } else { 1.0 };
    i_pow(d) * (sign * prefactor.value(eps) * sum)
}

/// One element `<m|F|n>` of the closed-form coupling with the printed prefactor.
///
/// The series is given for `m <= n`; the lower triangle follows from `F_mn = F_nm`.
pub fn f_element_closed(m: usize, n: usize, eps: f64, d: DeformationParameter) -> Result<Complex64> {
    f_element_closed_with(m, n, eps, d, Prefactor::Printed)
}

pub fn f_element_closed_with(
    m: usize,
    n: usize,
    eps: f64,
    d: DeformationParameter,
    prefactor: Prefactor,
) -> Result<Complex64> {
    let (lo, hi) = if m <= n { (m, n) } else { (n, m) };
    let mut ln_qf = Vec::with_capacity(hi + 1);
    let mut acc = 0.0;
    for j in 0..=hi {
        if j >= 2 {
            let v = q_number(j as f64, d)?;
            if v <= 0.0 {
                return Err(QtrapError::NonPositiveQNumber { n: j, value: v });
            }
            acc += v.ln();
        }
        ln_qf.push(acc);
    }
    Ok(closed_upper(lo, hi, eps, prefactor, &|j| ln_qf[j]))
}

/// Closed-form coupling matrix on a Fock space, printed prefactor.
pub fn f_matrix_closed(space: &FockSpace, eps: f64) -> Result<CouplingMatrix> {
    f_matrix_closed_with(space, eps, Prefactor::Printed)
}

pub fn f_matrix_closed_with(space: &FockSpace, eps: f64, prefactor: Prefactor) -> Result<CouplingMatrix> {
    check_eps(eps)?;
    let dim = space.dim();
    let ln_qf = |j: usize| space.ln_q_factorial(j);
    let columns: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|n| (0..=n).map(|m| closed_upper(m, n, eps, prefactor, &ln_qf)).collect())
        .collect();
    let mut matrix = DMatrix::zeros(dim, dim);
    for (n, col) in columns.into_iter().enumerate() {
        for (m, v) in col.into_iter().enumerate() {
            matrix[(m, n)] = v;
            matrix[(n, m)] = v;
        }
    }
    Ok(CouplingMatrix {
        eps,
        deformation: space.deformation(),
        mode: CouplingMode::PaperClosedForm,
        matrix,
        margin: untrusted_margin(eps, space.truncation()),
    })
}

/// `F = exp(i eps Q)` on the truncated space, through the eigendecomposition of `Q`.
pub fn f_matrix_exact(space: &FockSpace, eps: f64) -> Result<CouplingMatrix> {
    check_eps(eps)?;
    if eps == 0.0 {
        return Ok(CouplingMatrix {
            eps,
            deformation: space.deformation(),
            mode: CouplingMode::ExactExponential,
            matrix: DMatrix::identity(space.dim(), space.dim()),
            margin: 0,
        });
    }
    let (q, _) = space.position_momentum();
    let dim = space.dim();
    let eig = SymmetricEigen::try_new(q, f64::EPSILON, 0)
        .ok_or_else(|| QtrapError::Eigendecomposition("position matrix did not converge".into()))?;
    let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let mut scaled = v.clone();
    for (k, lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, eps * lambda);
        for z in scaled.column_mut(k).iter_mut() {
            *z *= phase;
        }
    }
    let mut matrix = scaled * v.transpose();
    // exact symmetry and parity (F_mn is i^(n-m) times a real number); the product
    // above has both only to roundoff
    for i in 0..dim {
        for j in 0..=i {
            let s = 0.5 * (matrix[(i, j)] + matrix[(j, i)]);
            let s = if (i - j) % 2 == 0 {
                Complex64::new(s.re, 0.0)
            } else {
                Complex64::new(0.0, s.im)
            };
            matrix[(i, j)] = s;
            matrix[(j, i)] = s;
        }
    }
    Ok(CouplingMatrix {
        eps,
        deformation: space.deformation(),
        mode: CouplingMode::ExactExponential,
        matrix,
        margin: untrusted_margin(eps, space.truncation()),
    })
}

pub fn f_matrix(space: &FockSpace, eps: f64, mode: CouplingMode) -> Result<CouplingMatrix> {
    match mode {
        CouplingMode::ExactExponential => f_matrix_exact(space, eps),
        CouplingMode::PaperClosedForm => f_matrix_closed(space, eps),
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !eps.is_finite() || eps < 0.0 {
        return Err(QtrapError::InvalidParameter(format!(
            "eps must be finite and >= 0, got {eps}"
        )));
    }
    Ok(())
}

/// Largest relative deviation `|a - b| / |b|` over interior elements with `|b| > floor`.
pub fn max_relative_deviation(a: &CouplingMatrix, b: &CouplingMatrix, floor: f64) -> f64 {
    let k = a.interior_dim().min(b.interior_dim());
    let mut worst = 0.0f64;
    for j in 0..k {
        for i in 0..k {
            let r = b.matrix[(i, j)];
            if r.norm() > floor {
                worst = worst.max((a.matrix[(i, j)] - r).norm() / r.norm());
            }
        }
    }
    worst
}

/// For each candidate prefactor, the largest relative deviation of the closed form
/// from the exact exponential over interior elements above `1e-4`.
pub fn prefactor_regression(space: &FockSpace, eps: f64) -> Result<Vec<(Prefactor, f64)>> {
    let exact = f_matrix_exact(space, eps)?;
    Prefactor::ALL
        .iter()
        .map(|&p| {
            let closed = f_matrix_closed_with(space, eps, p)?;
            Ok((p, max_relative_deviation(&closed, &exact, 1e-4)))
        })
        .collect()
}
