//! Jacobi theta function on rectangular tori.
//!
//! The function evaluated here is the odd theta function
//!
//! ```text
//! theta(z, tau) = sum_{n in Z} exp(pi i (n+1/2)^2 tau + 2 pi i (n+1/2)(z - 1/2))
//! ```
//!
//! restricted to purely imaginary `tau = i d`. Pairing the terms `n` and
//! `-n-1` turns the two-sided sum into the manifestly real-for-real-z form
//!
//! ```text
//! theta(z, i d) = 2 sum_{n>=0} (-1)^n e^{-pi d (n+1/2)^2} sin((2n+1) pi z),
//! ```
//!
//! which is what the implementation sums. It is entire and odd, has simple
//! zeroes exactly on the lattice `Z + i d Z`, and satisfies
//!
//! ```text
//! theta(z+1)   = -theta(z),
//! theta(z+tau) = -exp(-pi i tau - 2 pi i z) theta(z).
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Smallest admissible torus height. Thinner tori lose precision in the
/// Gaussian tail estimate and never occur in the constructions here except
/// as limits.
pub const MIN_D: f64 = 0.05;

/// Default radius around lattice points inside which the logarithmic
/// derivative refuses to evaluate.
pub const DEFAULT_POLE_RADIUS: f64 = 1e-6;

/// Log of the relative tail bound used to truncate the theta series.
/// exp(-43) < 1e-18.
const TAIL_EXPONENT: f64 = 43.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThetaError {
    /// The torus is too thin for reliable series evaluation.
    #[error("torus height d = {d} below the minimum {MIN_D}")]
    DomainTooThin { d: f64 },
    /// Input was NaN or infinite.
    #[error("non-finite argument")]
    NonFiniteInput,
    /// The point is too close to a lattice zero of theta for the requested
    /// operation (callers must re-route integration paths).
    #[error("point within {dist:.3e} of a lattice point (exclusion radius {radius:.3e})")]
    PoleProximity { dist: f64, radius: f64 },
}

/// The rectangular torus `C / <1, i d>`, equivalently the strip
/// `0 < Im z < d/2` with the translation `z -> z + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusParams {
    d: f64,
}

impl TorusParams {
    /// A rectangular torus of modulus `tau = i d`. Fails for `d < MIN_D`.
    pub fn new(d: f64) -> Result<Self, ThetaError> {
        if !d.is_finite() || d < MIN_D {
            return Err(ThetaError::DomainTooThin { d });
        }
        Ok(TorusParams { d })
    }

    /// The torus height `d` (the strip has height `d/2`).
    pub fn d(&self) -> f64 {
        self.d
    }

    /// The modulus `tau = i d`; purely imaginary by construction.
    pub fn tau(&self) -> Complex64 {
        Complex64::new(0.0, self.d)
    }

    /// Height of the strip `Z`, i.e. `d/2`.
    pub fn strip_height(&self) -> f64 {
        self.d / 2.0
    }

    /// Number of series terms needed so that the neglected tail is below
    /// `exp(-TAIL_EXPONENT)` relative to the largest term at height `Im z`.
    /// The term magnitudes follow a Gaussian in `n` centred near
    /// `n + 1/2 = |Im z| / d`.
    fn n_terms(&self, im_z: f64) -> usize {
        let shift = im_z.abs() / self.d;
        let width = (TAIL_EXPONENT / (PI * self.d)).sqrt();
        (shift + width).ceil() as usize + 2
    }

    /// Euclidean distance from `z` to the lattice `Z + i d Z`.
    pub fn dist_to_lattice(&self, z: Complex64) -> f64 {
        let dx = z.re - z.re.round();
        let dy = z.im - self.d * (z.im / self.d).round();
        (dx * dx + dy * dy).sqrt()
    }
}

fn check_finite(z: Complex64) -> Result<(), ThetaError> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(ThetaError::NonFiniteInput)
    }
}

/// Evaluate `theta(z, i d)` by the sine-form series.
///
/// Exactly odd and exactly real for real `z` (each summand is).
pub fn theta(z: Complex64, t: &TorusParams) -> Result<Complex64, ThetaError> {
    check_finite(z)?;
    let n = t.n_terms(z.im);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sign = 1.0;
    for k in 0..n {
        let half = k as f64 + 0.5;
        let amp = (-PI * t.d * half * half).exp();
        sum += sign * amp * ((2 * k + 1) as f64 * PI * z).sin();
        sign = -sign;
    }
    Ok(2.0 * sum)
}

/// Term-wise derivative of [`theta`] with respect to `z`.
pub fn theta_prime(z: Complex64, t: &TorusParams) -> Result<Complex64, ThetaError> {
    check_finite(z)?;
    let n = t.n_terms(z.im);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sign = 1.0;
    for k in 0..n {
        let half = k as f64 + 0.5;
        let amp = (-PI * t.d * half * half).exp();
        let m = (2 * k + 1) as f64 * PI;
        sum += sign * amp * m * (m * z).cos();
        sign = -sign;
    }
    Ok(2.0 * sum)
}

/// The logarithmic derivative `h(z) = theta'(z)/theta(z)`.
///
/// Satisfies `h(z+1) = h(z)` and `h(z+tau) = h(z) - 2 pi i`. Refuses to
/// evaluate within [`DEFAULT_POLE_RADIUS`] of a lattice zero.
pub fn log_deriv(z: Complex64, t: &TorusParams) -> Result<Complex64, ThetaError> {
    log_deriv_guarded(z, t, DEFAULT_POLE_RADIUS)
}

/// [`log_deriv`] with a caller-chosen exclusion radius.
pub fn log_deriv_guarded(
    z: Complex64,
    t: &TorusParams,
    radius: f64,
) -> Result<Complex64, ThetaError> {
    check_finite(z)?;
    let dist = t.dist_to_lattice(z);
    if dist < radius {
        return Err(ThetaError::PoleProximity { dist, radius });
    }
    Ok(theta_prime(z, t)? / theta(z, t)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_thin_torus() {
        assert!(matches!(
            TorusParams::new(0.01),
            Err(ThetaError::DomainTooThin { .. })
        ));
        assert!(TorusParams::new(0.05).is_ok());
    }

    #[test]
    fn rejects_non_finite_input() {
        let t = TorusParams::new(1.0).unwrap();
        assert!(theta(c(f64::NAN, 0.0), &t).is_err());
        assert!(theta(c(0.0, f64::INFINITY), &t).is_err());
    }

    #[test]
    fn zero_at_origin_is_exact() {
        let t = TorusParams::new(1.0).unwrap();
        let v = theta(c(0.0, 0.0), &t).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn real_axis_values_are_exactly_real() {
        let t = TorusParams::new(1.0).unwrap();
        for x in [-1.7, -0.4, 0.23, 0.5, 1.99] {
            let v = theta(c(x, 0.0), &t).unwrap();
            assert_eq!(v.im, 0.0);
        }
    }

    #[test]
    fn frozen_reference_values() {
        // Independent oracle: direct summation of the exponential series with
        // 64 symmetric terms (mpmath, 30 digits).
        let t = TorusParams::new(1.0).unwrap();
        let v = theta(c(0.5, 0.0), &t).unwrap();
        assert!((v.re - 0.913_579_138_156_116_82).abs() < 1e-14);
        assert!(v.re != 0.0);

        let dp = theta_prime(c(0.0, 0.0), &t).unwrap();
        assert!((dp.re - 2.848_694_603_987_787_3).abs() < 1e-13);
        assert_eq!(dp.im, 0.0);

        let dp = theta_prime(c(0.25, 0.0), &t).unwrap();
        assert!((dp.re - 2.037_028_185_405_535_7).abs() < 1e-13);
    }

    #[test]
    fn quasi_periodicity_shift_by_one() {
        let t = TorusParams::new(1.0).unwrap();
        let z = c(0.3, 0.2);
        let lhs = theta(z + 1.0, &t).unwrap();
        let rhs = -theta(z, &t).unwrap();
        assert!((lhs - rhs).norm() < 1e-14 * rhs.norm());
    }

    #[test]
    fn quasi_periodicity_shift_by_tau() {
        let t = TorusParams::new(1.0).unwrap();
        let z = c(0.3, 0.2);
        let tau = t.tau();
        let lhs = theta(z + tau, &t).unwrap();
        let factor = -(Complex64::new(0.0, -PI) * tau - Complex64::new(0.0, 2.0 * PI) * z).exp();
        let rhs = factor * theta(z, &t).unwrap();
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm());
    }

    #[test]
    fn derivative_matches_central_difference() {
        let t = TorusParams::new(1.0).unwrap();
        let h = 1e-5;
        for z in [c(0.25, 0.0), c(0.1, 0.3), c(-0.4, 0.45)] {
            let fd = (theta(z + h, &t).unwrap() - theta(z - h, &t).unwrap()) / (2.0 * h);
            let an = theta_prime(z, &t).unwrap();
            assert!((fd - an).norm() < 1e-8 * an.norm().max(1.0));
        }
    }

    #[test]
    fn derivative_is_even() {
        let t = TorusParams::new(0.7).unwrap();
        let z = c(0.37, 0.11);
        let a = theta_prime(z, &t).unwrap();
        let b = theta_prime(-z, &t).unwrap();
        assert!((a - b).norm() < 1e-13 * a.norm());
    }

    #[test]
    fn log_deriv_identities() {
        let t = TorusParams::new(1.0).unwrap();
        let z = c(0.2, 0.3);
        let a = log_deriv(z + 1.0, &t).unwrap();
        let b = log_deriv(z, &t).unwrap();
        assert!((a - b).norm() < 1e-10);

        let z = c(0.2, 0.1);
        let a = log_deriv(z + t.tau(), &t).unwrap();
        let b = log_deriv(z, &t).unwrap();
        let diff = a - b;
        assert!((diff - Complex64::new(0.0, -2.0 * PI)).norm() < 1e-10);
    }

    #[test]
    fn log_deriv_real_on_real_axis() {
        let t = TorusParams::new(1.0).unwrap();
        let v = log_deriv(c(0.5, 0.0), &t).unwrap();
        assert_eq!(v.im, 0.0);
        assert!(v.re.is_finite());
    }

    #[test]
    fn log_deriv_pole_guard_fires() {
        let t = TorusParams::new(1.0).unwrap();
        assert!(matches!(
            log_deriv(c(1e-8, 0.0), &t),
            Err(ThetaError::PoleProximity { .. })
        ));
        // Lattice translate (1, d) is a zero as well.
        assert!(matches!(
            log_deriv(c(1.0, 1.0 - 1e-9), &t),
            Err(ThetaError::PoleProximity { .. })
        ));
    }

    #[test]
    fn log_deriv_matches_ratio() {
        let t = TorusParams::new(1.3).unwrap();
        let z = c(0.31, 0.22);
        let h = log_deriv(z, &t).unwrap();
        let ratio = theta_prime(z, &t).unwrap() / theta(z, &t).unwrap();
        assert!((h - ratio).norm() <= 1e-12 * ratio.norm());
    }

    #[test]
    fn modulus_floor_away_from_lattice() {
        // Frozen from a 160x160 scan over [-0.5,1.5]x[-d,d] at distance
        // >= 0.05 from the lattice: min |theta| was 0.186 (d=0.5),
        // 0.153 (d=1), 0.075 (d=2). Assert with margin.
        for (d, floor) in [(0.5, 0.16), (1.0, 0.13), (2.0, 0.06)] {
            let t = TorusParams::new(d).unwrap();
            let steps = 60;
            let mut min = f64::INFINITY;
            for i in 0..steps {
                for j in 0..steps {
                    let x = -0.5 + 2.0 * (i as f64 + 0.5) / steps as f64;
                    let y = -d + 2.0 * d * (j as f64 + 0.5) / steps as f64;
                    let z = c(x, y);
                    if t.dist_to_lattice(z) >= 0.05 {
                        min = min.min(theta(z, &t).unwrap().norm());
                    }
                }
            }
            assert!(min > floor, "d={d}: min modulus {min} <= {floor}");
        }
    }
}
