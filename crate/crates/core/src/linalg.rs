//! Small complex linear-algebra helpers shared across modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub fn frobenius_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn all_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `ej(theta) = exp(j * theta)`
#[inline]
pub fn ej(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Bessel function of the first kind, order zero.
///
/// Power series for |x| <= 12, Hankel asymptotic expansion beyond.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 12.0 {
        let q = 0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..80 {
            term *= -q / ((k * k) as f64);
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    } else {
        let z = 8.0 / ax;
        let z2 = z * z;
        let p = 1.0 - z2 * (0.001098628627 - z2 * (0.2734510407e-4 - z2 * 0.2073370639e-5));
        let q = -0.01562499995 + z2 * (0.1430488765e-3 - z2 * (0.6911147651e-5 - z2 * 0.7621095161e-6));
        let chi = ax - std::f64::consts::FRAC_PI_4;
        (std::f64::consts::FRAC_2_PI / ax).sqrt() * (chi.cos() * p - z * chi.sin() * q)
    }
}

/// Number of k-subsets of an n-set.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// Smallest b with 2^b >= n (0 for n <= 1).
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}
