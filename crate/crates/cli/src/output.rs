//! CSV emitters. Every formatter is a pure function of its inputs, so reruns are byte-identical.

use std::fmt::Write;

use qtrap_core::observables::{InversionTrace, QField, Revival};

/// Fixed-point with nine decimals; negative zero prints as zero.
pub fn fixed9(x: f64) -> String {
    let s = format!("{x:.9}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn sci(x: f64) -> String {
    format!("{x:.9e}")
}

pub fn inversion_csv(trace: &InversionTrace) -> String {
    let mut out = String::from("t,w\n");
    for (t, w) in trace.times.iter().zip(&trace.w) {
        writeln!(out, "{},{}", fixed9(*t), fixed9(*w)).unwrap();
    }
    out
}

pub fn qfield_csv(field: &QField) -> String {
    let mut out = String::from("alpha_r,alpha_i,q\n");
    for (i, r) in field.re.iter().enumerate() {
        for (j, m) in field.im.iter().enumerate() {
            writeln!(out, "{},{},{}", fixed9(*r), fixed9(*m), sci(field.values[(i, j)])).unwrap();
        }
    }
    out
}

pub fn spectrum_csv(rows: &[(usize, f64, f64)]) -> String {
    let mut out = String::from("n,energy,spacing\n");
    for (n, e, s) in rows {
        writeln!(out, "{n},{},{}", fixed9(*e), fixed9(*s)).unwrap();
    }
    out
}

pub fn rabi_csv(rows: &[(usize, f64)]) -> String {
    let mut out = String::from("m,mu\n");
    for (m, mu) in rows {
        writeln!(out, "{m},{}", fixed9(*mu)).unwrap();
    }
    out
}

pub fn revival_csv(revivals: &[Revival]) -> String {
    let mut out = String::from("revival_time,envelope_height\n");
    for r in revivals {
        writeln!(out, "{},{}", fixed9(r.time), fixed9(r.envelope_height)).unwrap();
    }
    out
}

/// `|F_mn|`, one row per element, row-major.
pub fn coupling_csv(abs: &qtrap_core::nalgebra::DMatrix<f64>) -> String {
    let mut out = String::from("m,n,abs_f\n");
    for m in 0..abs.nrows() {
        for n in 0..abs.ncols() {
            writeln!(out, "{m},{n},{}", sci(abs[(m, n)])).unwrap();
        }
    }
    out
}
