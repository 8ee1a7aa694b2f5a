//! Adaptive Dormand-Prince 8(5,3) integration of the amplitude equations.
//!
//! Used as an independent check on spectral propagation. The equations are
//! integrated in the frame rotating with the diagonal of `H`, so that only the
//! off-diagonal couplings have to be resolved by the step-size control.

use std::f64::consts::TAU;

use nalgebra::DVector;
use num_complex::Complex64;

use super::{AtomFieldState, Propagator};
use crate::error::{QtrapError, Result};

#[allow(clippy::excessive_precision)]
mod tableau {
    // Dormand-Prince 8(5,3) tableau.
    pub const C: [f64; 12] = [
        0.0,
        0.526001519587677318785587544488e-01,
        0.789002279381515978178381316732e-01,
        0.118350341907227396726757197510e+00,
        0.281649658092772603273242802490e+00,
        0.333333333333333333333333333333e+00,
        0.25e+00,
        0.307692307692307692307692307692e+00,
        0.651282051282051282051282051282e+00,
        0.6e+00,
        0.857142857142857142857142857142e+00,
        1.0,
    ];
    pub const A: [[f64; 11]; 12] = [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [
            5.26001519587677318785587544488e-2,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
        ],
        [
            1.97250569845378994544595329183e-2,
            5.91751709536136983633785987549e-2,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
        ],
        [
            2.95875854768068491816892993775e-2,
            0.0,
            8.87627564304205475450678981324e-2,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
        ],
        [
            2.41365134159266685502369798665e-1,
            0.0,
            -8.84549479328286085344864962717e-1,
            9.24834003261792003115737966543e-1,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
        ],
        [
            3.7037037037037037037037037037e-2,
            0.0,
            0.0,
            1.70828608729473871279604482173e-1,
            1.25467687566822425016691814123e-1,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
        ],
        [
            3.7109375e-2,
            0.0,
            0.0,
            1.70252211019544039314978060272e-1,
            6.02165389804559606850219397283e-2,
            -1.7578125e-2,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
        ],
        [
            3.70920001185047927108779319836e-2,
            0.0,
            0.0,
            1.70383925712239993810214054705e-1,
            1.07262030446373284651809199168e-1,
            -1.53194377486244017527936158236e-2,
            8.27378916381402288758473766002e-3,
            0.0,
            0.0,
            0.0,
            0.0,
        ],
        [
            6.24110958716075717114429577812e-1,
            0.0,
            0.0,
            -3.36089262944694129406857109825e0,
            -8.68219346841726006818189891453e-1,
            2.75920996994467083049415600797e1,
            2.01540675504778934086186788979e1,
            -4.34898841810699588477366255144e1,
            0.0,
            0.0,
            0.0,
        ],
        [
            4.77662536438264365890433908527e-1,
            0.0,
            0.0,
            -2.48811461997166764192642586468e0,
            -5.90290826836842996371446475743e-1,
            2.12300514481811942347288949897e1,
            1.52792336328824235832596922938e1,
            -3.32882109689848629194453265587e1,
            -2.03312017085086261358222928593e-2,
            0.0,
            0.0,
        ],
        [
            -9.3714243008598732571704021658e-1,
            0.0,
            0.0,
            5.18637242884406370830023853209e0,
            1.09143734899672957818500254654e0,
            -8.14978701074692612513997267357e0,
            -1.85200656599969598641566180701e1,
            2.27394870993505042818970056734e1,
            2.49360555267965238987089396762e0,
            -3.0467644718982195003823669022e0,
            0.0,
        ],
        [
            2.27331014751653820792359768449e0,
            0.0,
            0.0,
            -1.05344954667372501984066689879e1,
            -2.00087205822486249909675718444e0,
            -1.79589318631187989172765950534e1,
            2.79488845294199600508499808837e1,
            -2.85899827713502369474065508674e0,
            -8.87285693353062954433549289258e0,
            1.23605671757943030647266201528e1,
            6.43392746015763530355970484046e-1,
        ],
    ];
    pub const B: [f64; 12] = [
        5.42937341165687622380535766363e-2,
        0.0,
        0.0,
        0.0,
        0.0,
        4.45031289275240888144113950566e0,
        1.89151789931450038304281599044e0,
        -5.8012039600105847814672114227e0,
        3.1116436695781989440891606237e-1,
        -1.52160949662516078556178806805e-1,
        2.01365400804030348374776537501e-1,
        4.47106157277725905176885569043e-2,
    ];
    // 5th-order embedded weights on stages 1, 9 and 12.
    pub const BHH: [f64; 3] = [
        0.244094488188976377952755905512e+00,
        0.733846688281611857341361741547e+00,
        0.220588235294117647058823529412e-01,
    ];
    // 3rd-order error estimate weights.
    pub const ER: [f64; 12] = [
        0.1312004499419488073250102996e-01,
        0.0,
        0.0,
        0.0,
        0.0,
        -0.1225156446376204440720569753e+01,
        -0.4957589496572501915214079952e+00,
        0.1664377182454986536961530415e+01,
        -0.3503288487499736816886487290e+00,
        0.3341791187130174790297318841e+00,
        0.8192320648511571246570742613e-01,
        -0.2235530786388629525884427845e-01,
    ];
}
use tableau::{A, B, BHH, C, ER};

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.333;
const MAX_SCALE: f64 = 6.0;

/// Dormand-Prince 8(5,3) stepper with mixed absolute/relative error control.
#[derive(Debug, Clone, Copy)]
pub struct Dop853 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dop853Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl Dop853 {
    pub fn new(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            max_steps: 50_000_000,
        }
    }

    /// Integrate `dy/dx = f(x, y)` from `x0` to `x1 >= x0`, overwriting `y`.
    pub fn integrate<F>(&self, mut f: F, x0: f64, x1: f64, y: &mut [Complex64]) -> Result<Dop853Stats>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let n = y.len();
        let mut stats = Dop853Stats::default();
        if x1 <= x0 || n == 0 {
            return Ok(stats);
        }
        let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n]; 12];
        let mut tmp = vec![Complex64::new(0.0, 0.0); n];
        let mut y_new = vec![Complex64::new(0.0, 0.0); n];

        let mut x = x0;
        f(x, y, &mut k[0]);
        stats.evaluations += 1;

        let mut h = self.initial_step(y, &k[0], x1 - x0);
        let mut reject = false;
        while x < x1 {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(QtrapError::StepSizeUnderflow { t: x / TAU, h: h / TAU });
            }
            if h < 1e-14 * x.abs().max(1.0) {
                return Err(QtrapError::StepSizeUnderflow { t: x / TAU, h: h / TAU });
            }
            let last = x + h >= x1;
            if last {
                h = x1 - x;
            }

            for s in 1..12 {
                for i in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, kj) in k.iter().enumerate().take(s) {
                        let a = A[s][j];
                        if a != 0.0 {
                            acc += kj[i] * a;
                        }
                    }
                    tmp[i] = y[i] + acc * h;
                }
                let (_, rest) = k.split_at_mut(s);
                f(x + C[s] * h, &tmp, &mut rest[0]);
            }
            stats.evaluations += 11;

            let mut err5 = 0.0;
            let mut err3 = 0.0;
            for i in 0..n {
                let mut incr = Complex64::new(0.0, 0.0);
                let mut e3 = Complex64::new(0.0, 0.0);
                for s in 0..12 {
                    incr += k[s][i] * B[s];
                    e3 += k[s][i] * ER[s];
                }
                let e5 = incr - k[0][i] * BHH[0] - k[8][i] * BHH[1] - k[11][i] * BHH[2];
                y_new[i] = y[i] + incr * h;
                let sk = self.atol + self.rtol * y[i].norm().max(y_new[i].norm());
                err5 += (e5.norm() / sk).powi(2);
                err3 += (e3.norm() / sk).powi(2);
            }
            let deno = {
                let d = err5 + 0.01 * err3;
                if d > 0.0 {
                    d
                } else {
                    1.0
                }
            };
            let err = h.abs() * err5 * (1.0 / (n as f64 * deno)).sqrt();

            if err <= 1.0 {
                stats.accepted += 1;
                x = if last { x1 } else { x + h };
                y.copy_from_slice(&y_new);
                if x < x1 {
                    f(x, y, &mut k[0]);
                    stats.evaluations += 1;
                }
                let scale = if err == 0.0 {
                    MAX_SCALE
                } else {
                    (SAFETY * err.powf(-1.0 / 8.0)).clamp(MIN_SCALE, MAX_SCALE)
                };
                h *= if reject { scale.min(1.0) } else { scale };
                reject = false;
            } else {
                stats.rejected += 1;
                h *= MIN_SCALE.max(SAFETY * err.powf(-1.0 / 8.0));
                reject = true;
            }
        }
        Ok(stats)
    }

    fn initial_step(&self, y: &[Complex64], dy: &[Complex64], span: f64) -> f64 {
        let n = y.len() as f64;
        let (mut d0, mut d1) = (0.0, 0.0);
        for (yi, fi) in y.iter().zip(dy) {
            let sk = self.atol + self.rtol * yi.norm();
            d0 += (yi.norm() / sk).powi(2);
            d1 += (fi.norm() / sk).powi(2);
        }
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        let h = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
        h.min(span)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone)]
pub struct RkOutcome {
    pub state: AtomFieldState,
    pub stats: Dop853Stats,
    /// `| |psi(t_end)| - |psi(0)| |`.
    pub norm_drift: f64,
}

/// Integrate the amplitude equations directly from `s0` to `t_end` (scaled time).
///
/// `tol` must lie in `[1e-12, 1e-6]`.
pub fn rk_propagate(p: &Propagator, s0: &AtomFieldState, t_end: f64, tol: f64) -> Result<RkOutcome> {
    if !(1e-12..=1e-6).contains(&tol) {
        return Err(QtrapError::InvalidParameter(format!(
            "tol must lie in [1e-12, 1e-6], got {tol}"
        )));
    }
    if !(t_end.is_finite() && t_end >= s0.t) {
        return Err(QtrapError::InvalidParameter(format!(
            "t_end {t_end} precedes the initial time {}",
            s0.t
        )));
    }
    let h = p.hamiltonian();
    let dim = h.nrows();
    let psi0 = s0.stacked();
    if psi0.len() != dim {
        return Err(QtrapError::InvalidParameter("state does not match Hamiltonian".into()));
    }
    let diag: Vec<f64> = (0..dim).map(|i| h[(i, i)].re).collect();
    // off-diagonal part, column-major, split into real and imaginary planes
    let mut re = vec![0.0; dim * dim];
    let mut im = vec![0.0; dim * dim];
    for j in 0..dim {
        for i in 0..dim {
            if i != j {
                re[j * dim + i] = h[(i, j)].re;
                im[j * dim + i] = h[(i, j)].im;
            }
        }
    }

    // Phase variable theta = 2 pi t; c = exp(i D theta) psi.
    let theta0 = TAU * s0.t;
    let theta1 = TAU * t_end;
    let mut rot = vec![Complex64::new(0.0, 0.0); dim];
    let mut acc_re = vec![0.0; dim];
    let mut acc_im = vec![0.0; dim];
    let rhs = |theta: f64, c: &[Complex64], dc: &mut [Complex64]| {
        for (r, &d) in rot.iter_mut().zip(&diag) {
            *r = Complex64::from_polar(1.0, d * (theta - theta0));
        }
        acc_re.fill(0.0);
        acc_im.fill(0.0);
        for j in 0..dim {
            let xj = c[j] * rot[j].conj();
            if xj == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (cr, ci) = (&re[j * dim..(j + 1) * dim], &im[j * dim..(j + 1) * dim]);
            for (((ar, ai), &r), &m) in acc_re.iter_mut().zip(acc_im.iter_mut()).zip(cr).zip(ci) {
                *ar += r * xj.re - m * xj.im;
                *ai += r * xj.im + m * xj.re;
            }
        }
        for i in 0..dim {
            // -i * acc * rot
            dc[i] = Complex64::new(acc_im[i], -acc_re[i]) * rot[i];
        }
    };

    let mut c: Vec<Complex64> = psi0.iter().copied().collect();
    let stats = Dop853::new(tol).integrate(rhs, theta0, theta1, &mut c)?;
    let psi = DVector::from_iterator(
        dim,
        c.iter()
            .zip(&diag)
            .map(|(ci, &d)| ci * Complex64::from_polar(1.0, -d * (theta1 - theta0))),
    );
    let norm_drift = (psi.norm() - psi0.norm()).abs();
    Ok(RkOutcome {
        state: AtomFieldState::from_stacked(&psi, t_end),
        stats,
        norm_drift,
    })
}
