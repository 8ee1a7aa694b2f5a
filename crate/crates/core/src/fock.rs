//! Truncated q-Fock space, ladder operators, trap spectrum and q-coherent states.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QtrapError, Result};
use crate::qnum::{q_number, DeformationParameter};

pub const MAX_TRUNCATION: usize = 512;

/// Basis `|0>, ..., |M>` of the deformed oscillator with its ladder matrix.
///
/// `a |n> = sqrt([n]_q) |n-1>`, so the annihilator only has entries on the first
/// superdiagonal and the creator is its transpose.
#[derive(Debug, Clone)]
pub struct FockSpace {
    truncation: usize,
    deformation: DeformationParameter,
    /// `[n]_q` for `n = 0..=M+1`.
    qn: Vec<f64>,
    /// `ln [n]_q!` for `n = 0..=M+1`.
    ln_qfact: Vec<f64>,
    annihilation: DMatrix<f64>,
}

pub fn build_space(truncation: usize, d: DeformationParameter) -> Result<FockSpace> {
    FockSpace::new(truncation, d)
}

impl FockSpace {
    pub fn new(truncation: usize, d: DeformationParameter) -> Result<Self> {
        if !(1..=MAX_TRUNCATION).contains(&truncation) {
            return Err(QtrapError::TruncationRange { truncation });
        }
        let mut qn = Vec::with_capacity(truncation + 2);
        let mut ln_qfact = Vec::with_capacity(truncation + 2);
        let mut acc = 0.0;
        for n in 0..=truncation + 1 {
            let v = q_number(n as f64, d)?;
            if n >= 1 && v <= 0.0 {
                return Err(QtrapError::NonPositiveQNumber { n, value: v });
            }
            if !v.is_finite() {
                return Err(QtrapError::FactorialRange { n });
            }
            if n >= 2 {
                acc += v.ln();
            }
            qn.push(v);
            ln_qfact.push(acc);
        }
        let dim = truncation + 1;
        let mut annihilation = DMatrix::zeros(dim, dim);
        for n in 1..dim {
            annihilation[(n - 1, n)] = qn[n].sqrt();
        }
        Ok(Self {
            truncation,
            deformation: d,
            qn,
            ln_qfact,
            annihilation,
        })
    }

    /// Highest retained level `M`.
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        self.truncation + 1
    }

    pub fn deformation(&self) -> DeformationParameter {
        self.deformation
    }

    /// `[n]_q` for `n <= M + 1`.
    pub fn q_number(&self, n: usize) -> f64 {
        self.qn[n]
    }

    /// `ln [n]_q!` for `n <= M + 1`.
    pub fn ln_q_factorial(&self, n: usize) -> f64 {
        self.ln_qfact[n]
    }

    pub fn annihilation(&self) -> &DMatrix<f64> {
        &self.annihilation
    }

    pub fn creation(&self) -> DMatrix<f64> {
        self.annihilation.transpose()
    }

    pub fn number_operator(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(self.dim(), (0..self.dim()).map(|n| n as f64)))
    }

    /// `Q = a+ + a` (real symmetric) and `P = i(a+ - a)` (Hermitian), in ladder units.
    pub fn position_momentum(&self) -> (DMatrix<f64>, DMatrix<Complex64>) {
        let a = &self.annihilation;
        let ad = a.transpose();
        let q = &ad + a;
        let p = (&ad - a).map(|x| Complex64::new(0.0, x));
        (q, p)
    }

    /// Diagonal trap energies `E_n` in units of the trap quantum, `n = 0..=M`.
    pub fn energies(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| 0.5 * (self.qn[n + 1] + self.qn[n])).collect()
    }
}

pub fn position_momentum(space: &FockSpace) -> (DMatrix<f64>, DMatrix<Complex64>) {
    space.position_momentum()
}

/// `E_n = ([n+1]_q + [n]_q) / 2` in units of the trap quantum.
pub fn trap_energy(n: usize, d: DeformationParameter) -> Result<f64> {
    Ok(0.5 * (q_number(n as f64 + 1.0, d)? + q_number(n as f64, d)?))
}

/// `E_{n+1} - E_n`, evaluated in closed form as `cosh(tau (n+1))` (real kind)
/// or `cos(tau (n+1))` (imaginary kind).
pub fn level_spacing(n: usize, d: DeformationParameter) -> f64 {
    if d.is_undeformed() {
        1.0
    } else {
        d.spacing_kernel(n as f64 + 1.0)
    }
}

/// Normalized q-analog Glauber state truncated to the basis of a [`FockSpace`].
#[derive(Debug, Clone)]
pub struct CoherentState {
    alpha: Complex64,
    coeffs: DVector<Complex64>,
    deformation: DeformationParameter,
    tail_weight: f64,
}

impl CoherentState {
    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn coeffs(&self) -> &DVector<Complex64> {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> DVector<Complex64> {
        self.coeffs
    }

    pub fn deformation(&self) -> DeformationParameter {
        self.deformation
    }

    /// Fraction of the untruncated series weight that lies above `M`.
    pub fn tail_weight(&self) -> f64 {
        self.tail_weight
    }

    pub fn mean_quanta(&self) -> f64 {
        mean_quanta(self)
    }
}

/// Smallest truncation accepted for a coherent amplitude: `|alpha|^2 <= M / 2`.
pub fn min_truncation_for(alpha: Complex64) -> usize {
    (2.0 * alpha.norm_sqr()).ceil().max(1.0) as usize
}

/// `|alpha>_q` with coefficients `alpha^n / sqrt([n]_q!)`, renormalized on the truncated basis.
pub fn coherent_state(alpha: Complex64, space: &FockSpace) -> Result<CoherentState> {
    let alpha_sq = alpha.norm_sqr();
    if alpha_sq > space.truncation() as f64 / 2.0 {
        return Err(QtrapError::TruncationInadequate {
            alpha_sq,
            truncation: space.truncation(),
            min_truncation: min_truncation_for(alpha),
        });
    }
    Ok(coherent_state_unchecked(alpha, space))
}

/// As [`coherent_state`], without the truncation-adequacy check.
pub fn coherent_state_unchecked(alpha: Complex64, space: &FockSpace) -> CoherentState {
    let dim = space.dim();
    let mut coeffs = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    let mut c = Complex64::new(1.0, 0.0);
    coeffs[0] = c;
    for n in 1..dim {
        c *= alpha / space.q_number(n).sqrt();
        coeffs[n] = c;
        if c.norm() > 1e150 {
            let s = 1.0 / c.norm();
            coeffs.rows_mut(0, n + 1).iter_mut().for_each(|z| *z *= s);
            c *= s;
        }
    }
    let norm = coeffs.norm();
    coeffs /= Complex64::new(norm, 0.0);
    CoherentState {
        alpha,
        coeffs,
        deformation: space.deformation(),
        tail_weight: tail_weight(alpha.norm_sqr(), space),
    }
}

// Weight of the terms x^n / [n]_q! with n > M relative to the whole series.
fn tail_weight(x: f64, space: &FockSpace) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let d = space.deformation();
    let mut term = 1.0f64;
    let mut head = 1.0f64;
    let mut tail = 0.0f64;
    let mut n = 1usize;
    loop {
        let qn = if n <= space.truncation() + 1 {
            space.q_number(n)
        } else {
            match q_number(n as f64, d) {
                Ok(v) => v,
                Err(_) => break,
            }
        };
        if qn <= 0.0 || !qn.is_finite() {
            break;
        }
        term *= x / qn;
        if n <= space.truncation() {
            head += term;
        } else {
            tail += term;
            if (n as f64) > x && term < 1e-17 * (head + tail) {
                break;
            }
        }
        if head + tail > 1e250 {
            let s = 1e-200;
            term *= s;
            head *= s;
            tail *= s;
        }
        n += 1;
        if n > 100_000 {
            break;
        }
    }
    tail / (head + tail)
}

/// Mean number of trap quanta `sum n |c_n|^2`.
pub fn mean_quanta(state: &CoherentState) -> f64 {
    state
        .coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| n as f64 * c.norm_sqr())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn ladder_examples() {
        let s = build_space(1, DeformationParameter::undeformed()).unwrap();
        assert_eq!(s.annihilation(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        let s = build_space(2, DeformationParameter::real(0.1)).unwrap();
        assert_relative_eq!(s.annihilation()[(1, 2)], 1.417747627792622, max_relative = 1e-14);
        for d in [DeformationParameter::undeformed(), DeformationParameter::real(0.01)] {
            let s = build_space(10, d).unwrap();
            let mut e0 = DVector::zeros(11);
            e0[0] = 1.0;
            assert_eq!(s.annihilation() * e0, DVector::zeros(11));
        }
    }

    #[test]
    fn rejects_bad_truncation() {
        let d = DeformationParameter::undeformed();
        assert!(matches!(build_space(0, d), Err(QtrapError::TruncationRange { .. })));
        assert!(matches!(build_space(513, d), Err(QtrapError::TruncationRange { .. })));
        assert!(build_space(512, d).is_ok());
    }

    #[test]
    fn imaginary_kind_with_vanishing_q_number_is_rejected() {
        // sin(0.1 n) turns negative once 0.1 n > pi
        let err = build_space(40, DeformationParameter::imaginary(0.1)).unwrap_err();
        assert!(matches!(err, QtrapError::NonPositiveQNumber { n: 32, .. }));
    }

    #[test]
    fn creation_is_transpose_and_number_is_not_adag_a() {
        let s = build_space(8, DeformationParameter::real(0.05)).unwrap();
        let a = s.annihilation();
        let ad = s.creation();
        assert_eq!(ad, a.transpose());
        let diff = s.number_operator() - &ad * a;
        assert!(diff.amax() > 0.0);
        let s0 = build_space(8, DeformationParameter::undeformed()).unwrap();
        let diff0 = s0.number_operator() - s0.creation() * s0.annihilation();
        assert!(diff0.amax() < 1e-14);
    }

    #[test]
    fn position_momentum_examples() {
        let s = build_space(1, DeformationParameter::undeformed()).unwrap();
        let (q, p) = s.position_momentum();
        assert_eq!(q, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(p[(0, 1)], Complex64::new(0.0, -1.0));
        assert_eq!(p[(1, 0)], Complex64::new(0.0, 1.0));
        let s = build_space(2, DeformationParameter::real(0.1)).unwrap();
        let (q, p) = s.position_momentum();
        assert_eq!((&q - q.transpose()).amax(), 0.0);
        assert_eq!((&p - p.adjoint()).map(|z| z.norm()).max(), 0.0);
        assert_relative_eq!(q[(1, 2)], 1.417747627792622, max_relative = 1e-14);
    }

    #[test]
    fn basis_from_repeated_creation() {
        for tau in [0.0, 0.003, 0.1] {
            let d = DeformationParameter::real(tau);
            let s = build_space(32, d).unwrap();
            let ad = s.creation();
            let mut v = DVector::zeros(33);
            v[0] = 1.0;
            for n in 1..=32 {
                v = &ad * v;
                let scaled = &v / (0.5 * s.ln_q_factorial(n)).exp();
                let mut e = DVector::zeros(33);
                e[n] = 1.0;
                assert!((scaled - e).amax() < 1e-10, "tau={tau} n={n}");
            }
        }
    }

    #[test]
    fn quommutation_relation_holds_off_the_edge() {
        for tau in [0.0, 0.002, 0.01, 0.1] {
            let s = build_space(32, DeformationParameter::real(tau)).unwrap();
            let a = s.annihilation();
            let ad = s.creation();
            let q = tau.exp();
            let lhs = a * &ad - q * &ad * a;
            let m = s.truncation();
            for i in 0..m {
                for j in 0..m {
                    let expect = if i == j { q.powi(-(i as i32)) } else { 0.0 };
                    assert!((lhs[(i, j)] - expect).abs() < 1e-10, "tau={tau} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn spectrum_examples() {
        let r = DeformationParameter::real(0.1);
        assert_eq!(trap_energy(0, r).unwrap(), 0.5);
        assert_eq!(trap_energy(5, DeformationParameter::undeformed()).unwrap(), 5.5);
        assert_relative_eq!(trap_energy(2, r).unwrap(), 2.5250709236748794, max_relative = 1e-14);
        assert_eq!(level_spacing(0, DeformationParameter::undeformed()), 1.0);
        assert_relative_eq!(
            level_spacing(15, DeformationParameter::real(0.003)),
            1.0011522212009876,
            max_relative = 1e-14
        );
    }

    #[test]
    fn spacing_grows_with_level() {
        for tau in [0.002, 0.01, 0.1] {
            let d = DeformationParameter::real(tau);
            for n in 0..40 {
                assert!(level_spacing(n + 1, d) > level_spacing(n, d));
            }
        }
    }

    #[test]
    fn spacing_is_energy_difference() {
        for d in [
            DeformationParameter::real(0.003),
            DeformationParameter::real(0.1),
            DeformationParameter::imaginary(0.01),
        ] {
            for n in 0..32 {
                let diff = trap_energy(n + 1, d).unwrap() - trap_energy(n, d).unwrap();
                assert!((diff - level_spacing(n, d)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coherent_state_examples() {
        let s = build_space(32, DeformationParameter::undeformed()).unwrap();
        let vac = coherent_state(c(0.0), &s).unwrap();
        assert_eq!(vac.coeffs()[0], c(1.0));
        assert_eq!(mean_quanta(&vac), 0.0);
        assert!(vac.coeffs().iter().skip(1).all(|z| *z == c(0.0)));

        // mpmath reference sums of n 16^n / [n]_q! over n <= M
        let st = coherent_state(c(4.0), &s).unwrap();
        assert_relative_eq!(st.mean_quanta(), 15.997671197157677, max_relative = 1e-12);
        assert!((st.mean_quanta() - 16.0).abs() < 0.1);

        let sq = build_space(32, DeformationParameter::real(0.003)).unwrap();
        let st = coherent_state(c(4.0), &sq).unwrap();
        assert_relative_eq!(st.mean_quanta(), 15.990424509186385, max_relative = 1e-12);

        let s20 = build_space(20, DeformationParameter::undeformed()).unwrap();
        let err = coherent_state(c(4.0), &s20).unwrap_err();
        assert!(matches!(
            err,
            QtrapError::TruncationInadequate { min_truncation: 32, .. }
        ));
        let st = coherent_state_unchecked(c(4.0), &s20);
        assert_relative_eq!(st.mean_quanta(), 14.96942520349488, max_relative = 1e-12);
        assert!(st.mean_quanta() < 16.0);
        assert!(st.tail_weight() > 1e-3);
    }

    #[test]
    fn coherent_state_norm_and_phase() {
        let s = build_space(32, DeformationParameter::real(0.004)).unwrap();
        let alpha = Complex64::from_polar(3.5, 0.7);
        let st = coherent_state(alpha, &s).unwrap();
        assert!((st.coeffs().norm() - 1.0).abs() < 1e-12);
        for (n, z) in st.coeffs().iter().enumerate() {
            let expected = Complex64::from_polar(1.0, 0.7 * n as f64);
            assert!((z / z.norm() - expected).norm() < 1e-10);
        }
        assert!(st.tail_weight() < 1e-3);
    }

    #[test]
    fn undeformed_tail_weight_matches_poisson_tail() {
        let s = build_space(20, DeformationParameter::undeformed()).unwrap();
        let st = coherent_state_unchecked(c(4.0), &s);
        // P(N > 20) for N ~ Poisson(16)
        let mut p = (-16.0f64).exp();
        let mut cdf = p;
        for n in 1..=20 {
            p *= 16.0 / n as f64;
            cdf += p;
        }
        assert_relative_eq!(st.tail_weight(), 1.0 - cdf, max_relative = 1e-9);
    }
}
