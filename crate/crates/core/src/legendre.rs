//! Associated Legendre functions of the first kind on the cut, with the
//! Condon–Shortley phase.

use crate::error::{Error, Result};

/// P_n^m(x) and dP_n^m/dx for 0 <= m <= n and |x| < 1, by upward recurrence
/// in n starting from P_m^m.
pub fn legendre_pnm(n: u32, m: u32, x: f64) -> Result<(f64, f64)> {
    if m > n {
        return Err(Error::Domain(format!("m = {m} exceeds n = {n}")));
    }
    if !(x.abs() < 1.0) {
        return Err(Error::Domain(format!("x = {x} not in (-1, 1)")));
    }
    let (p_prev, p) = upward(n, m, x);
    let dp = (n as f64 * x * p - (n + m) as f64 * p_prev) / (x * x - 1.0);
    Ok((p, dp))
}

/// Returns (P_{n-1}^m, P_n^m); P_{m-1}^m is taken as 0.
fn upward(n: u32, m: u32, x: f64) -> (f64, f64) {
    let somx2 = ((1.0 - x) * (1.0 + x)).sqrt();
    let mut pmm = 1.0;
    let mut odd = 1.0;
    for _ in 0..m {
        pmm *= -odd * somx2;
        odd += 2.0;
    }
    if n == m {
        return (0.0, pmm);
    }
    let mut p_prev = pmm;
    let mut p = x * (2 * m + 1) as f64 * pmm;
    for l in (m + 2)..=n {
        let next = ((2 * l - 1) as f64 * x * p - (l + m - 1) as f64 * p_prev) / (l - m) as f64;
        p_prev = p;
        p = next;
    }
    (p_prev, p)
}

/// The polynomial factor q with P_n^m(x) = P_m^m(x)·q(x).
///
/// q has the parity of n − m, so x·q'/q depends on x only through x². That
/// lets the magnetostatic characteristic equation be evaluated for
/// imaginary arguments as a real function of s = x².
#[derive(Debug, Clone)]
pub struct ReducedLegendre {
    n: u32,
    m: u32,
    /// Coefficients of q in powers of x.
    coeffs: Vec<f64>,
}

impl ReducedLegendre {
    pub fn new(n: u32, m: u32) -> Result<Self> {
        if m > n {
            return Err(Error::Domain(format!("m = {m} exceeds n = {n}")));
        }
        let deg = (n - m) as usize;
        let mut prev = vec![0.0; deg + 1];
        let mut cur = vec![0.0; deg + 1];
        cur[0] = 1.0;
        if n > m {
            prev.copy_from_slice(&cur);
            cur.fill(0.0);
            cur[1] = (2 * m + 1) as f64;
            for l in (m + 2)..=n {
                let a = (2 * l - 1) as f64 / (l - m) as f64;
                let b = (l + m - 1) as f64 / (l - m) as f64;
                let mut next = vec![0.0; deg + 1];
                for j in 0..deg {
                    next[j + 1] += a * cur[j];
                }
                for j in 0..=deg {
                    next[j] -= b * prev[j];
                }
                prev = std::mem::replace(&mut cur, next);
            }
        }
        Ok(Self { n, m, coeffs: cur })
    }

    pub fn degree(&self) -> u32 {
        self.n - self.m
    }

    /// q(x) and q'(x) for real x.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let mut q = 0.0;
        let mut dq = 0.0;
        for &c in self.coeffs.iter().rev() {
            dq = dq * x + q;
            q = q * x + c;
        }
        (q, dq)
    }

    /// (w, v) with w = q/x^p and v = x·q'/x^p, p = (n − m) mod 2, both as
    /// functions of s = x². Then x·q'/q = v/w for any real s, including
    /// s < 0.
    pub fn eval_in_square(&self, s: f64) -> (f64, f64) {
        let p = (self.degree() % 2) as usize;
        let mut w = 0.0;
        let mut v = 0.0;
        for j in (p..self.coeffs.len()).step_by(2).rev() {
            w = w * s + self.coeffs[j];
            v = v * s + j as f64 * self.coeffs[j];
        }
        (w, v)
    }
}
