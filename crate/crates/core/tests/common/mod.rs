//! Undeformed reference: ordinary factorials, Laguerre displacement elements,
//! and a Taylor scaling-and-squaring propagator. Shares no code with the crate
//! beyond the `nalgebra` containers.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub const SWEEP_TAUS: [f64; 7] = [0.0, 0.002, 0.003, 0.004, 0.006, 0.01, 0.1];

/// Lamb-Dicke parameter that places the undeformed first revival near t = 160.
pub const CALIBRATED_EPS: f64 = 0.055;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Generalized Laguerre polynomial `L_n^{(a)}(x)` by the three-term recurrence.
pub fn laguerre(n: usize, a: usize, x: f64) -> f64 {
    let a = a as f64;
    let (mut prev, mut cur) = (1.0, 1.0 + a - x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + a - x) * cur - (k + a) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `<m| exp[i eps (a + a+)] |n>` in the infinite Fock space.
pub fn laguerre_element(m: usize, n: usize, eps: f64) -> Complex64 {
    let (lo, hi) = if m <= n { (m, n) } else { (n, m) };
    let d = hi - lo;
    let x = eps * eps;
    let mag = (0.5 * (ln_factorial(lo) - ln_factorial(hi))).exp()
        * eps.powi(d as i32)
        * (-0.5 * x).exp()
        * laguerre(lo, d, x);
    I.powi(d as i32) * mag
}

fn ladder(m: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(m + 1, m + 1);
    for n in 1..=m {
        a[(n - 1, n)] = (n as f64).sqrt();
    }
    a
}

fn norm1(a: &DMatrix<Complex64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(a)` by scaling and squaring with a 30-term Taylor series.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let mut s = 0;
    let mut scale = 1.0;
    while norm1(a) * scale > 0.25 {
        scale *= 0.5;
        s += 1;
    }
    let b = a * Complex64::new(scale, 0.0);
    let mut term = DMatrix::<Complex64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=30 {
        term = &term * &b / Complex64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(i eps Q)` in the span of `|0>..|M>`.
pub fn truncated_coupling(m: usize, eps: f64) -> DMatrix<Complex64> {
    let a = ladder(m);
    let q = &a + a.transpose();
    expm(&q.map(|x| I * eps * x))
}

/// Stacked `[g; e]` Hamiltonian in units of the Rabi frequency.
pub fn hamiltonian(m: usize, omega_bar: f64, delta_bar: f64, eps: f64) -> DMatrix<Complex64> {
    let dim = m + 1;
    let f = truncated_coupling(m, eps);
    let mut h = DMatrix::<Complex64>::zeros(2 * dim, 2 * dim);
    for k in 0..dim {
        let trap = omega_bar * (2 * k + 1) as f64;
        h[(k, k)] = Complex64::new(0.5 * (trap - delta_bar), 0.0);
        h[(dim + k, dim + k)] = Complex64::new(0.5 * (trap + delta_bar), 0.0);
    }
    for r in 0..dim {
        for c in 0..dim {
            h[(dim + r, c)] = 0.5 * f[(r, c)];
            h[(c, dim + r)] = 0.5 * f[(r, c)].conj();
        }
    }
    h
}

/// Atom in the ground state, trap in the truncated Glauber state `|alpha>`.
pub fn initial_state(m: usize, alpha: f64) -> DVector<Complex64> {
    let dim = m + 1;
    let mut psi = DVector::<Complex64>::zeros(2 * dim);
    for n in 0..dim {
        let ln = n as f64 * alpha.ln() - 0.5 * ln_factorial(n);
        psi[n] = Complex64::new(ln.exp(), 0.0);
    }
    let norm = psi.norm();
    psi / Complex64::new(norm, 0.0)
}

/// Amplitudes at `k * dt` for `k = 0..=steps`, scaled time (phase `exp(-2 pi i H t)`).
pub fn trajectory(h: &DMatrix<Complex64>, psi0: &DVector<Complex64>, dt: f64, steps: usize) -> Vec<DVector<Complex64>> {
    let u = expm(&h.map(|z| -I * 2.0 * std::f64::consts::PI * dt * z));
    let mut out = Vec::with_capacity(steps + 1);
    let mut psi = psi0.clone();
    out.push(psi.clone());
    for _ in 0..steps {
        psi = &u * &psi;
        out.push(psi.clone());
    }
    out
}
