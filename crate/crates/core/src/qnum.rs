//! Scalar q-arithmetic: q-numbers, q-factorials and q-exponentials.
//!
//! With `q = e^tau` the q-number is `[x]_q = sinh(tau x) / sinh(tau)`; with
//! `q = e^{i tau}` it is `sin(tau x) / sin(tau)`. Both are evaluated in ratio
//! form and fall back to `x` itself below [`UNDEFORMED_CUTOFF`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{QtrapError, Result};

/// Below this magnitude the deformation is treated as exactly zero.
pub const UNDEFORMED_CUTOFF: f64 = 1e-12;

/// Default length of a cached q-factorial table.
pub const DEFAULT_TABLE_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeformationKind {
    Real,
    Imaginary,
}

/// The deformation `tau`, with `q = e^tau` (real) or `q = e^{i tau}` (imaginary).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDeformation", deny_unknown_fields)]
pub struct DeformationParameter {
    magnitude: f64,
    kind: DeformationKind,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDeformation {
    magnitude: f64,
    kind: DeformationKind,
}

impl TryFrom<RawDeformation> for DeformationParameter {
    type Error = QtrapError;

    fn try_from(raw: RawDeformation) -> Result<Self> {
        Self::new(raw.magnitude, raw.kind)
    }
}

impl DeformationParameter {
    pub fn new(magnitude: f64, kind: DeformationKind) -> Result<Self> {
        if !magnitude.is_finite() || magnitude < 0.0 {
            return Err(QtrapError::InvalidParameter(format!(
                "deformation magnitude must be finite and >= 0, got {magnitude}"
            )));
        }
        if kind == DeformationKind::Imaginary && magnitude >= UNDEFORMED_CUTOFF {
            let turns = (magnitude / std::f64::consts::PI).round();
            if turns >= 1.0 && (magnitude - turns * std::f64::consts::PI).abs() < 1e-12 {
                return Err(QtrapError::DegenerateDeformation { tau: magnitude });
            }
        }
        Ok(Self { magnitude, kind })
    }

    /// `q = e^tau`. Panics on a negative or non-finite `tau`.
    pub fn real(tau: f64) -> Self {
        Self::new(tau, DeformationKind::Real).expect("invalid real deformation")
    }

    /// `q = e^{i tau}`. Panics on a negative, non-finite or degenerate `tau`.
    pub fn imaginary(tau: f64) -> Self {
        Self::new(tau, DeformationKind::Imaginary).expect("invalid imaginary deformation")
    }

    pub fn undeformed() -> Self {
        Self::real(0.0)
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn kind(&self) -> DeformationKind {
        self.kind
    }

    pub fn is_undeformed(&self) -> bool {
        self.magnitude < UNDEFORMED_CUTOFF
    }

    /// `cosh(tau y)` for real kind, `cos(tau y)` for imaginary kind.
    pub fn spacing_kernel(&self, y: f64) -> f64 {
        match self.kind {
            DeformationKind::Real => (self.magnitude * y).cosh(),
            DeformationKind::Imaginary => (self.magnitude * y).cos(),
        }
    }
}

impl Default for DeformationParameter {
    fn default() -> Self {
        Self::undeformed()
    }
}

impl fmt::Display for DeformationParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            DeformationKind::Real => "real",
            DeformationKind::Imaginary => "imag",
        };
        write!(f, "{kind}-{}", self.magnitude)
    }
}

/// `sinh(tau x) / sinh(tau)` for a signed `tau`, with the `tau -> 0` limit.
pub fn sinh_ratio(x: f64, tau: f64) -> f64 {
    if tau.abs() < UNDEFORMED_CUTOFF {
        x
    } else {
        (tau * x).sinh() / tau.sinh()
    }
}

/// `[x]_q`.
pub fn q_number(x: f64, d: DeformationParameter) -> Result<f64> {
    if d.is_undeformed() {
        return Ok(x);
    }
    let tau = d.magnitude;
    match d.kind {
        DeformationKind::Real => Ok(sinh_ratio(x, tau)),
        DeformationKind::Imaginary => {
            let denom = tau.sin();
            if denom.abs() < 1e-300 {
                return Err(QtrapError::DegenerateDeformation { tau });
            }
            Ok((tau * x).sin() / denom)
        }
    }
}

/// `[n]_q! = [1]_q [2]_q ... [n]_q`, with `[0]_q! = 1`.
pub fn q_factorial(n: usize, d: DeformationParameter) -> Result<f64> {
    let mut acc = 1.0;
    for k in 2..=n {
        acc *= q_number(k as f64, d)?;
        if !acc.is_finite() {
            return Err(QtrapError::FactorialRange { n: k });
        }
    }
    Ok(acc)
}

/// Partial sum of `exp_q(x) = sum_n x^n / [n]_q!` through `n_max`.
///
/// Fails unless the last included term is below `1e-15` of the partial sum.
pub fn q_exponential(x: f64, d: DeformationParameter, n_max: usize) -> Result<f64> {
    if n_max == 0 {
        return Err(QtrapError::InvalidParameter("n_max must be positive".into()));
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..=n_max {
        term *= x / q_number(n as f64, d)?;
        sum += term;
        if !sum.is_finite() {
            return Err(QtrapError::FactorialRange { n });
        }
    }
    if term.abs() >= 1e-15 * sum.abs() && term != 0.0 {
        return Err(QtrapError::SeriesTruncation {
            n_max,
            last_term: term,
            partial_sum: sum,
        });
    }
    Ok(sum)
}

/// Cached `[n]_q` and `[n]_q!` for `n = 0..len`, fixed to one deformation.
#[derive(Debug, Clone)]
pub struct QFactorialTable {
    deformation: DeformationParameter,
    numbers: Vec<f64>,
    factorials: Vec<f64>,
}

impl QFactorialTable {
    pub fn new(d: DeformationParameter, len: usize) -> Result<Self> {
        let len = len.max(2);
        let mut numbers = Vec::with_capacity(len);
        let mut factorials = Vec::with_capacity(len);
        let mut acc = 1.0;
        for n in 0..len {
            let qn = q_number(n as f64, d)?;
            numbers.push(qn);
            if n >= 2 {
                acc *= qn;
                if !acc.is_finite() {
                    return Err(QtrapError::FactorialRange { n });
                }
            }
            factorials.push(acc);
        }
        Ok(Self {
            deformation: d,
            numbers,
            factorials,
        })
    }

    pub fn with_default_len(d: DeformationParameter) -> Result<Self> {
        Self::new(d, DEFAULT_TABLE_LEN)
    }

    pub fn deformation(&self) -> DeformationParameter {
        self.deformation
    }

    pub fn len(&self) -> usize {
        self.numbers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numbers.is_empty()
    }

    /// `[n]_q`, computed on the fly past the end of the table.
    pub fn number(&self, n: usize) -> Result<f64> {
        match self.numbers.get(n) {
            Some(&v) => Ok(v),
            None => q_number(n as f64, self.deformation),
        }
    }

    /// `[n]_q!`, computed on the fly past the end of the table.
    pub fn factorial(&self, n: usize) -> Result<f64> {
        match self.factorials.get(n) {
            Some(&v) => Ok(v),
            None => q_factorial(n, self.deformation),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn q_number_examples() {
        let r = DeformationParameter::real(0.1);
        let i = DeformationParameter::imaginary(0.1);
        for d in [r, i, DeformationParameter::undeformed()] {
            assert_eq!(q_number(0.0, d).unwrap(), 0.0);
        }
        assert_eq!(q_number(3.0, DeformationParameter::undeformed()).unwrap(), 3.0);
        assert_relative_eq!(q_number(2.0, r).unwrap(), 2.010008336111607, max_relative = 1e-14);
        assert_relative_eq!(q_number(2.0, r).unwrap(), 2.0 * 0.1f64.cosh(), max_relative = 1e-14);
        assert_relative_eq!(q_number(2.0, i).unwrap(), 2.0 * 0.1f64.cos(), max_relative = 1e-14);
    }

    #[test]
    fn undeformed_is_exact_identity() {
        let d = DeformationParameter::undeformed();
        for x in [-3.5, 0.0, 1e-9, 0.5, 7.0, 1e6] {
            assert_eq!(q_number(x, d).unwrap(), x);
        }
        let tiny = DeformationParameter::real(1e-13);
        assert_eq!(q_number(17.0, tiny).unwrap(), 17.0);
    }

    #[test]
    fn imaginary_multiple_of_pi_is_degenerate() {
        let pi = std::f64::consts::PI;
        assert!(matches!(
            DeformationParameter::new(pi, DeformationKind::Imaginary),
            Err(QtrapError::DegenerateDeformation { .. })
        ));
        assert!(DeformationParameter::new(2.0 * pi, DeformationKind::Imaginary).is_err());
        assert!(DeformationParameter::new(pi, DeformationKind::Real).is_ok());
        assert!(DeformationParameter::new(-0.1, DeformationKind::Real).is_err());
    }

    #[test]
    fn q_factorial_examples() {
        let r = DeformationParameter::real(0.1);
        assert_eq!(q_factorial(0, r).unwrap(), 1.0);
        assert_eq!(q_factorial(1, r).unwrap(), 1.0);
        assert_eq!(q_factorial(4, DeformationParameter::undeformed()).unwrap(), 24.0);
        // 60-digit product of sinh ratios
        assert_relative_eq!(q_factorial(3, r).unwrap(), 6.110693700480935, max_relative = 1e-14);
    }

    #[test]
    fn q_factorial_reports_overflow_level() {
        let d = DeformationParameter::real(0.5);
        match q_factorial(400, d) {
            Err(QtrapError::FactorialRange { n }) => assert!(n > 10 && n < 400),
            other => panic!("expected range error, got {other:?}"),
        }
        assert!(matches!(
            q_factorial(171, DeformationParameter::undeformed()),
            Err(QtrapError::FactorialRange { n: 171 })
        ));
    }

    #[test]
    fn q_exponential_examples() {
        let d0 = DeformationParameter::undeformed();
        assert_eq!(q_exponential(0.0, d0, 5).unwrap(), 1.0);
        assert_relative_eq!(
            q_exponential(1.0, d0, 40).unwrap(),
            std::f64::consts::E,
            max_relative = 1e-15
        );
        // 60-digit mpmath summation of the same 121 terms
        let v = q_exponential(-8.0, DeformationParameter::real(0.003), 120).unwrap();
        assert_relative_eq!(v, 3.355001988872172e-4, max_relative = 1e-9);
    }

    #[test]
    fn q_exponential_flags_short_series() {
        let err = q_exponential(10.0, DeformationParameter::undeformed(), 10).unwrap_err();
        assert!(matches!(err, QtrapError::SeriesTruncation { n_max: 10, .. }));
    }

    #[test]
    fn exact_spacing_identity() {
        for tau in [0.001, 0.003, 0.01, 0.1, 0.2] {
            for n in 0..40 {
                let n = n as f64;
                let lhs = sinh_ratio(n + 2.0, tau) - sinh_ratio(n, tau);
                let rhs = 2.0 * (tau * (n + 1.0)).cosh();
                assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn small_tau_series_bound() {
        for tau in [1e-4, 1e-3, 3e-3, 0.01] {
            for k in 1..=66 {
                let x = k as f64 * 0.5;
                let exact = sinh_ratio(x, tau);
                let series = x * (1.0 + tau * tau * (x * x - 1.0) / 6.0);
                let bound = 10.0 * tau.powi(4) * x.powi(4);
                assert!((exact - series).abs() / x < bound, "tau={tau} x={x}");
            }
        }
    }

    #[test]
    fn real_and_imaginary_agree_to_second_order() {
        for tau in [1e-4, 1e-3, 2e-3, 3e-3, 6e-3, 0.01] {
            let r = DeformationParameter::real(tau);
            let i = DeformationParameter::imaginary(tau);
            for k in 1..=66 {
                let x = k as f64 * 0.5;
                let gap = (q_number(x, r).unwrap() - q_number(x, i).unwrap()).abs();
                assert!(gap < 5.0 * tau * tau * x.powi(3), "tau={tau} x={x}");
            }
        }
    }

    #[test]
    fn q_factorial_increases_for_real_kind() {
        for tau in [0.0, 0.003, 0.1] {
            let d = DeformationParameter::real(tau);
            let mut prev = q_factorial(2, d).unwrap();
            for n in 3..60 {
                let next = q_factorial(n, d).unwrap();
                assert!(next > prev);
                prev = next;
            }
        }
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let d = DeformationParameter::real(0.003);
        let table = QFactorialTable::with_default_len(d).unwrap();
        assert_eq!(table.len(), DEFAULT_TABLE_LEN);
        for n in 0..80 {
            assert_relative_eq!(
                table.factorial(n).unwrap(),
                q_factorial(n, d).unwrap(),
                max_relative = 1e-13
            );
            assert_relative_eq!(
                table.number(n).unwrap(),
                q_number(n as f64, d).unwrap(),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn deserializes_with_validation() {
        let d: DeformationParameter = serde_json::from_str(r#"{"magnitude": 0.003, "kind": "real"}"#).unwrap();
        assert_eq!(d, DeformationParameter::real(0.003));
        assert!(serde_json::from_str::<DeformationParameter>(r#"{"magnitude": -1.0, "kind": "real"}"#).is_err());
        let err =
            serde_json::from_str::<DeformationParameter>(r#"{"magnitude": 0.1, "kind": "real", "x": 1}"#).unwrap_err();
        assert!(err.to_string().contains("`x`"));
    }

    proptest! {
        #[test]
        fn real_q_number_symmetric_in_tau(k in 1u32..=80, tau in 0.001f64..0.2) {
            let x = k as f64 * 0.5;
            let a = sinh_ratio(x, tau);
            let b = sinh_ratio(x, -tau);
            prop_assert!((a - b).abs() <= 1e-14 * a.abs());
        }
    }
}
