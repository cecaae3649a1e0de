//! Bessel-type functions of orders 0 and 1/2, the outgoing biharmonic Green
//! kernel and the Fourier symbols of its two parts.
//!
//! J0 and Y0 use the ascending series for `z <= 8`, Miller's backward
//! recurrence with the Neumann series for `8 < z <= 20`, and the Hankel
//! asymptotic expansion above. K0 uses the ascending series for `z <= 2`,
//! Steed's continued fraction up to 20 and the asymptotic expansion above.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Dim;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_MAX: f64 = 8.0;
const ASYMPTOTIC_MIN: f64 = 20.0;
const K0_SERIES_MAX: f64 = 2.0;

/// Default limiting-absorption parameter relative to `k^2`.
pub const DEFAULT_EPSILON_FACTOR: f64 = 1e-6;

/// Bessel order supported by [`hankel1`] and [`macdonald`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    Zero,
    Half,
}

impl Order {
    /// The order `(n - 2) / 2` used by the Green kernel in dimension `n`.
    pub fn for_dim(dim: Dim) -> Order {
        match dim {
            Dim::Two => Order::Zero,
            Dim::Three => Order::Half,
        }
    }
}

/// A Fourier symbol value together with the regularization it was evaluated at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolValue {
    pub value: Complex64,
    pub epsilon: f64,
}

fn check_positive(z: f64, what: &str) -> Result<()> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{what} requires a positive finite argument, got {z}"
        )))
    }
}

/// Hankel function of the first kind `H^(1)_order(z)`.
pub fn hankel1(order: Order, z: f64) -> Result<Complex64> {
    check_positive(z, "hankel1")?;
    Ok(match order {
        Order::Zero => {
            let (j, y) = j0_y0(z);
            Complex64::new(j, y)
        }
        Order::Half => Complex64::new(0.0, -(2.0 / (PI * z)).sqrt()) * Complex64::cis(z),
    })
}

/// Macdonald function (modified Bessel function of the second kind) `K_order(z)`.
pub fn macdonald(order: Order, z: f64) -> Result<f64> {
    check_positive(z, "macdonald")?;
    Ok(match order {
        Order::Zero => k0(z),
        Order::Half => (FRAC_PI_2 / z).sqrt() * (-z).exp(),
    })
}

/// Bessel function `J0(z)` for `z > 0`.
pub fn bessel_j0(z: f64) -> Result<f64> {
    check_positive(z, "bessel_j0")?;
    Ok(j0_y0(z).0)
}

/// Bessel function `Y0(z)` for `z > 0`.
pub fn bessel_y0(z: f64) -> Result<f64> {
    check_positive(z, "bessel_y0")?;
    Ok(j0_y0(z).1)
}

fn j0_y0(z: f64) -> (f64, f64) {
    if z <= SERIES_MAX {
        j0_y0_series(z)
    } else if z <= ASYMPTOTIC_MIN {
        j0_y0_miller(z)
    } else {
        j0_y0_asymptotic(z)
    }
}

fn j0_y0_series(z: f64) -> (f64, f64) {
    let q = 0.25 * z * z;
    let mut t = 1.0;
    let mut j = 1.0;
    let mut s = 0.0;
    let mut harmonic = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        t *= -q / (kf * kf);
        harmonic += 1.0 / kf;
        j += t;
        s -= harmonic * t;
        if t.abs() < 1e-17 * j.abs().max(1e-300) && t.abs() * harmonic < 1e-17 * s.abs().max(1e-300)
        {
            break;
        }
    }
    let y = (2.0 / PI) * (((0.5 * z).ln() + EULER_GAMMA) * j + s);
    (j, y)
}

fn j0_y0_miller(z: f64) -> (f64, f64) {
    let m = 2 * (((1.5 * z) as usize + 30) / 2);
    let mut next = 0.0;
    let mut cur = 1e-30;
    let mut norm = 0.0;
    let mut neumann = 0.0;
    let mut j0 = 0.0;
    for order in (1..=m).rev() {
        let prev = 2.0 * order as f64 / z * cur - next;
        next = cur;
        cur = prev;
        let idx = order - 1;
        if idx == 0 {
            j0 = cur;
            norm += cur;
        } else if idx % 2 == 0 {
            norm += 2.0 * cur;
            let half = (idx / 2) as f64;
            let sign = if (idx / 2) % 2 == 0 { 1.0 } else { -1.0 };
            neumann += sign * cur / half;
        }
        if cur.abs() > 1e250 {
            next *= 1e-250;
            cur *= 1e-250;
            norm *= 1e-250;
            neumann *= 1e-250;
        }
    }
    let j = j0 / norm;
    let y = (2.0 / PI) * ((0.5 * z).ln() + EULER_GAMMA) * j - (4.0 / PI) * neumann / norm;
    (j, y)
}

/// Sums the order-zero Hankel expansion, returning `(P, Q)`, stopping at the
/// smallest term. With `alternate = false` the terms carry the signs of the
/// K0 expansion instead.
fn hankel_pq(z: f64, alternate: bool) -> (f64, f64) {
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        a *= (2.0 * kf - 1.0).powi(2) / (8.0 * kf * z);
        if a > last || a < 1e-18 {
            break;
        }
        last = a;
        let sign = if alternate {
            if ((k + 1) / 2) % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        } else if k % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
    }
    (p, q)
}

fn j0_y0_asymptotic(z: f64) -> (f64, f64) {
    let (p, q) = hankel_pq(z, true);
    let chi = z - FRAC_PI_4;
    let (s, c) = chi.sin_cos();
    let amp = (2.0 / (PI * z)).sqrt();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

fn k0(z: f64) -> f64 {
    if z <= K0_SERIES_MAX {
        let q = 0.25 * z * z;
        let mut t = 1.0;
        let mut i0 = 1.0;
        let mut s = 0.0;
        let mut harmonic = 0.0;
        for k in 1..100 {
            let kf = k as f64;
            t *= q / (kf * kf);
            harmonic += 1.0 / kf;
            i0 += t;
            s += harmonic * t;
            if t * harmonic < 1e-17 * s {
                break;
            }
        }
        -((0.5 * z).ln() + EULER_GAMMA) * i0 + s
    } else if z <= ASYMPTOTIC_MIN {
        k0_steed(z)
    } else {
        let (p, q) = hankel_pq(z, false);
        (FRAC_PI_2 / z).sqrt() * (-z).exp() * (p + q)
    }
}

/// Steed's continued fraction CF2 (Temme's form) for `K0`.
fn k0_steed(z: f64) -> f64 {
    let mut b = 2.0 * (1.0 + z);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    (FRAC_PI_2 / z).sqrt() * (-z).exp() / s
}

/// `Y0(z) + (2/pi) K0(z)` for small `z`, summed without the logarithmic cancellation.
fn y0_plus_k0_small(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let log_term = (0.5 * z).ln() + EULER_GAMMA;
    let mut t = 1.0;
    let mut harmonic = 0.0;
    let mut sum = 0.0;
    for k in 1..100 {
        let kf = k as f64;
        t *= q / (kf * kf);
        harmonic += 1.0 / kf;
        if k % 2 == 1 {
            let term = t * (harmonic - log_term);
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
    }
    (4.0 / PI) * sum
}

fn check_wavenumber(k: f64) -> Result<()> {
    if k == 0.0 || !k.is_finite() {
        return Err(Error::Domain(format!(
            "wavenumber must be nonzero and finite, got {k}"
        )));
    }
    Ok(())
}

/// Outgoing biharmonic Green kernel `G_k^+(r)` in dimension `dim`.
///
/// Negative `k` returns the conjugate of the value at `|k|`; `r = 0` returns
/// the finite limit.
pub fn green_kernel(k: f64, r: f64, dim: Dim) -> Result<Complex64> {
    check_wavenumber(k)?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!(
            "radius must be finite and nonnegative, got {r}"
        )));
    }
    let g = kernel_positive(k.abs(), r, dim);
    Ok(if k < 0.0 { g.conj() } else { g })
}

fn kernel_positive(k: f64, r: f64, dim: Dim) -> Complex64 {
    let z = k * r;
    let i8k2 = Complex64::new(0.0, 1.0 / (8.0 * k * k));
    match dim {
        Dim::Two => {
            if r == 0.0 {
                return i8k2;
            }
            let (j, y) = j0_y0(z);
            let y_plus = if z <= K0_SERIES_MAX {
                y0_plus_k0_small(z)
            } else {
                y + (2.0 / PI) * k0(z)
            };
            i8k2 * Complex64::new(j, y_plus)
        }
        Dim::Three => {
            if r == 0.0 {
                return Complex64::new(1.0, 1.0) / (8.0 * PI * k);
            }
            if z < 0.05 {
                let half = (0.5 * z).sin();
                let num = Complex64::new(-2.0 * half * half - (-z).exp_m1(), z.sin());
                return num / (8.0 * PI * k * k * r);
            }
            let scale = (k / (2.0 * PI * r)).sqrt();
            let h = Complex64::new(0.0, -(2.0 / (PI * z)).sqrt()) * Complex64::cis(z);
            let kk = (FRAC_PI_2 / z).sqrt() * (-z).exp();
            i8k2 * scale * (h + Complex64::new(0.0, 2.0 / PI * kk))
        }
    }
}

/// Hankel and Macdonald parts of `G_k^+(r)` for `k > 0`, `r > 0`.
///
/// The Macdonald part is real and negative; it is singular at `r = 0`.
pub fn green_kernel_parts(k: f64, r: f64, dim: Dim) -> Result<(Complex64, f64)> {
    check_positive(k, "green_kernel_parts wavenumber")?;
    check_positive(r, "green_kernel_parts radius")?;
    let order = Order::for_dim(dim);
    let z = k * r;
    let scale = match dim {
        Dim::Two => 1.0,
        Dim::Three => (k / (2.0 * PI * r)).sqrt(),
    };
    let pre = Complex64::new(0.0, scale / (8.0 * k * k));
    let h = pre * hankel1(order, z)?;
    let m = -scale / (4.0 * PI * k * k) * macdonald(order, z)?;
    Ok((h, m))
}

/// Symbol of the Hankel part, `1 / (2k^2 (|xi|^2 - k^2 - i eps))`.
pub fn green_symbol_h(k: f64, xi_norm: f64, epsilon: f64) -> Result<SymbolValue> {
    check_positive(k, "green_symbol_h wavenumber")?;
    check_positive(epsilon, "green_symbol_h epsilon")?;
    let denom = Complex64::new(
        2.0 * k * k * (xi_norm * xi_norm - k * k),
        -2.0 * k * k * epsilon,
    );
    Ok(SymbolValue {
        value: denom.inv(),
        epsilon,
    })
}

/// Symbol of the Hankel part at the default regularization `1e-6 k^2`.
pub fn green_symbol_h_default(k: f64, xi_norm: f64) -> Result<SymbolValue> {
    green_symbol_h(k, xi_norm, DEFAULT_EPSILON_FACTOR * k * k)
}

/// Magnitude of the Macdonald-part symbol, `1 / (2k^2 (|xi|^2 + k^2))`.
///
/// The Fourier transform of the Macdonald part itself is the negative of this
/// value, since that part of the kernel is `-K_nu / (4 pi k^2)` up to the
/// radial factor.
pub fn green_symbol_k(k: f64, xi_norm: f64) -> Result<f64> {
    check_positive(k, "green_symbol_k wavenumber")?;
    Ok(1.0 / (2.0 * k * k * (xi_norm * xi_norm + k * k)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_order_closed_forms() {
        let h = hankel1(Order::Half, FRAC_PI_2).unwrap();
        assert!((h.re - 2.0 / PI).abs() < 1e-15 && h.im.abs() < 1e-15);
        let k = macdonald(Order::Half, 1.0).unwrap();
        assert!((k - 0.461_068_504_447_894_4).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        assert!(hankel1(Order::Zero, 0.0).is_err());
        assert!(macdonald(Order::Zero, -1.0).is_err());
        assert!(green_kernel(0.0, 1.0, Dim::Two).is_err());
        assert!(green_kernel(1.0, -1.0, Dim::Two).is_err());
    }

    #[test]
    fn k0_underflows_gracefully() {
        assert_eq!(macdonald(Order::Zero, 800.0).unwrap(), 0.0);
        assert!(macdonald(Order::Zero, 740.0).unwrap() >= 0.0);
    }

    #[test]
    fn symbols() {
        assert!((green_symbol_h(1.0, 2.0, 1e-12).unwrap().value.re - 1.0 / 6.0).abs() < 1e-12);
        let on_shell = green_symbol_h(1.0, 1.0, 1e-3).unwrap().value;
        assert!(on_shell.re.abs() < 1e-9 && (on_shell.im - 500.0).abs() < 1e-9);
        assert!((green_symbol_h(5.0, 0.0, 1e-12).unwrap().value.re + 0.0008).abs() < 1e-12);
        assert_eq!(green_symbol_k(1.0, 0.0).unwrap(), 0.5);
        assert_eq!(green_symbol_k(1.0, 1.0).unwrap(), 0.25);
        assert_eq!(green_symbol_k(2.0, 2.0).unwrap(), 0.015625);
    }

    #[test]
    fn kernel_limits() {
        let g = green_kernel(1.0, 1e-9, Dim::Two).unwrap();
        assert!((g - Complex64::new(0.0, 0.125)).norm() < 1e-6);
        let g0 = green_kernel(2.0, 0.0, Dim::Three).unwrap();
        let gs = green_kernel(2.0, 1e-7, Dim::Three).unwrap();
        assert!((g0 - gs).norm() < 1e-7);
    }
}
