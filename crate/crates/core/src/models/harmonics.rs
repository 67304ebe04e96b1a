//! Real L²-orthonormal spherical harmonics of a single degree, evaluated in
//! Cartesian form so that values and gradients are regular at the poles.
//!
//! With z = cos θ and (x + iy)^m = sin^m θ · e^{imφ}, the associated Legendre
//! function factors as P_l^m(z) = sin^m θ · q_l^m(z) where q_l^m is a
//! polynomial. Each harmonic is then
//!
//! ```text
//! Y_l0  = K_l0 q_l^0(z)
//! Y_lm  = √2 K_lm q_l^m(z) Re (x+iy)^m     (m > 0)
//! Y_l,-m = √2 K_lm q_l^m(z) Im (x+iy)^m
//! ```
//!
//! with K_lm² = (2l+1)/(4π) · (l-m)!/(l+m)!. The Condon–Shortley phase is
//! dropped. Ordering of the output: m = 0, then (cos, sin) pairs for
//! m = 1..=l.

use std::f64::consts::PI;

/// Number of harmonics of degree `l`.
pub fn count(l: usize) -> usize {
    2 * l + 1
}

/// Evaluates all degree-`l` harmonics at the unit vector `p`.
///
/// When `grads` is given it receives the ambient gradient of the polynomial
/// extension; callers project onto the tangent plane.
pub fn eval(l: usize, p: &[f64; 3], values: &mut [f64], mut grads: Option<&mut [[f64; 3]]>) {
    debug_assert_eq!(values.len(), count(l));
    let [x, y, z] = *p;

    // Re/Im of (x+iy)^m and their x/y partial derivatives via m(x+iy)^{m-1}.
    let mut re = vec![1.0; l + 1];
    let mut im = vec![0.0; l + 1];
    for m in 1..=l {
        re[m] = re[m - 1] * x - im[m - 1] * y;
        im[m] = re[m - 1] * y + im[m - 1] * x;
    }

    for m in 0..=l {
        let (q, dq) = legendre_q(l, m, z);
        let k = norm_factor(l, m);
        if m == 0 {
            values[0] = k * q;
            if let Some(g) = grads.as_deref_mut() {
                g[0] = [0.0, 0.0, k * dq];
            }
            continue;
        }
        let kk = std::f64::consts::SQRT_2 * k;
        let ic = 2 * m - 1;
        let is = 2 * m;
        values[ic] = kk * q * re[m];
        values[is] = kk * q * im[m];
        if let Some(g) = grads.as_deref_mut() {
            let mf = m as f64;
            // d Re/dx = m Re_{m-1}, d Re/dy = -m Im_{m-1}
            // d Im/dx = m Im_{m-1}, d Im/dy =  m Re_{m-1}
            g[ic] = [
                kk * q * mf * re[m - 1],
                -kk * q * mf * im[m - 1],
                kk * dq * re[m],
            ];
            g[is] = [
                kk * q * mf * im[m - 1],
                kk * q * mf * re[m - 1],
                kk * dq * im[m],
            ];
        }
    }
}

/// q_l^m(z) and its derivative, by the upward recurrence in l.
fn legendre_q(l: usize, m: usize, z: f64) -> (f64, f64) {
    // q_m^m = (2m-1)!!
    let mut qmm = 1.0;
    for i in 1..=m {
        qmm *= (2 * i - 1) as f64;
    }
    if l == m {
        return (qmm, 0.0);
    }
    let mut prev = qmm;
    let mut dprev = 0.0;
    let mut cur = (2 * m + 1) as f64 * z * qmm;
    let mut dcur = (2 * m + 1) as f64 * qmm;
    for n in (m + 2)..=l {
        let a = (2 * n - 1) as f64;
        let b = (n + m - 1) as f64;
        let c = (n - m) as f64;
        let next = (a * z * cur - b * prev) / c;
        let dnext = (a * (cur + z * dcur) - b * dprev) / c;
        prev = cur;
        dprev = dcur;
        cur = next;
        dcur = dnext;
    }
    (cur, dcur)
}

fn norm_factor(l: usize, m: usize) -> f64 {
    // (l-m)!/(l+m)! as a product to avoid overflow
    let mut ratio = 1.0;
    for i in (l - m + 1)..=(l + m) {
        ratio /= i as f64;
    }
    ((2 * l + 1) as f64 / (4.0 * PI) * ratio).sqrt()
}
