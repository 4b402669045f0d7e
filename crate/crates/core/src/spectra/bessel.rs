//! Self-contained Bessel functions J_m and Y_m for integer orders.
//!
//! J is evaluated by downward (Miller) recurrence started safely above the
//! turning region and normalized through J0 + 2 (J2 + J4 + ...) = 1, which
//! stays uniformly accurate over the order/argument range the spectra need.
//! Y0 and Y1 come from the Neumann series
//!
//!   Y0(x) = (2/pi) (ln(x/2) + gamma) J0(x) - (4/pi) sum (-1)^k J_{2k}(x)/k,
//!
//! differentiated once for Y1; higher orders by the (stable) upward
//! recurrence.

use std::f64::consts::FRAC_2_PI;

/// Euler-Mascheroni constant.
const EULER_GAMMA: f64 = 0.577215664901532860606512090082402431;

/// Kind selector for [`bessel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BesselKind {
    J,
    Y,
}

/// J_m(x) or Y_m(x); `x > 0` required for Y.
pub fn bessel(kind: BesselKind, m: u32, x: f64) -> f64 {
    match kind {
        BesselKind::J => bessel_j(m, x),
        BesselKind::Y => bessel_y(m, x),
    }
}

/// J_0 .. J_{m_max} at once from one downward recurrence.
pub fn bessel_j_all(m_max: usize, x: f64) -> Vec<f64> {
    debug_assert!(x >= 0.0, "bessel_j_all needs x >= 0");
    if x == 0.0 {
        let mut out = vec![0.0; m_max + 1];
        out[0] = 1.0;
        return out;
    }
    if x < 1e-7 {
        // two-term ascending series; the recurrence ratio 2n/x would be huge
        let mut out = Vec::with_capacity(m_max + 1);
        let half = 0.5 * x;
        let mut lead = 1.0; // (x/2)^m / m!
        for m in 0..=m_max {
            out.push(lead * (1.0 - half * half / (m as f64 + 1.0)));
            lead *= half / (m as f64 + 1.0);
        }
        return out;
    }
    // start the downward recurrence one Airy-transition width above both the
    // order and the argument; anything lower leaks the dominant solution in
    // the turning region n ~ x
    let start = m_max + 25 + (x + 8.0 * x.cbrt()).ceil() as usize;
    let mut jp = 0.0f64; // J_{n+1} seed
    let mut j = 1e-300f64; // J_n seed
    let mut out = vec![0.0; m_max + 1];
    let mut norm = 0.0f64; // J0 + 2 sum J_{2k}
    for n in (0..=start).rev() {
        let jm = (2.0 * (n as f64 + 1.0) / x) * j - jp;
        jp = j;
        j = jm;
        if n <= m_max {
            out[n] = j;
        }
        if n % 2 == 0 {
            norm += if n == 0 { j } else { 2.0 * j };
        }
        if j.abs() > 1e250 {
            jp /= 1e250;
            j /= 1e250;
            norm /= 1e250;
            for v in out.iter_mut() {
                *v /= 1e250;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// Bessel function of the first kind, integer order.
pub fn bessel_j(m: u32, x: f64) -> f64 {
    bessel_j_all(m as usize, x)[m as usize]
}

/// Y_0 and Y_1 via the Neumann series over even-order J values.
fn bessel_y01(x: f64) -> (f64, f64) {
    debug_assert!(x > 0.0, "Y_m needs x > 0");
    // J values up to where J_{2k}(x) is far below machine precision
    let m_max = (x.ceil() as usize) + 42;
    let j = bessel_j_all(m_max + 1, x);
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    let mut sum = 0.0; // sum (-1)^k J_{2k}/k
    let mut sum_d = 0.0; // sum (-1)^k J'_{2k}/k
    let mut sign = -1.0;
    let mut k = 1usize;
    while 2 * k + 1 <= m_max {
        sum += sign * j[2 * k] / k as f64;
        sum_d += sign * 0.5 * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        sign = -sign;
        k += 1;
    }
    let y0 = FRAC_2_PI * (log_term * j[0] - 2.0 * sum);
    // Y1 = -Y0' with J0' = -J1
    let y0_prime = FRAC_2_PI * (j[0] / x - log_term * j[1] - 2.0 * sum_d);
    (y0, -y0_prime)
}

/// Bessel function of the second kind, integer order; `x > 0`.
pub fn bessel_y(m: u32, x: f64) -> f64 {
    let (y0, y1) = bessel_y01(x);
    match m {
        0 => y0,
        1 => y1,
        _ => {
            let mut ym1 = y0;
            let mut y = y1;
            for n in 1..m {
                let next = (2.0 * n as f64 / x) * y - ym1;
                ym1 = y;
                y = next;
            }
            y
        }
    }
}

/// d/dx J_m(x).
pub fn bessel_j_prime(m: u32, x: f64) -> f64 {
    if m == 0 {
        -bessel_j(1, x)
    } else {
        let j = bessel_j_all(m as usize + 1, x);
        0.5 * (j[m as usize - 1] - j[m as usize + 1])
    }
}

/// d/dx Y_m(x).
pub fn bessel_y_prime(m: u32, x: f64) -> f64 {
    if m == 0 {
        -bessel_y(1, x)
    } else {
        0.5 * (bessel_y(m - 1, x) - bessel_y(m + 1, x))
    }
}

/// Wronskian J_m(x) Y'_m(x) - J'_m(x) Y_m(x); identically 2/(pi x).
pub fn wronskian(m: u32, x: f64) -> f64 {
    bessel_j(m, x) * bessel_y_prime(m, x) - bessel_j_prime(m, x) * bessel_y(m, x)
}
