//! Scalar abstraction shared by the numeric modules.
//!
//! Weights, distributions and the divergence measures are written once over
//! [`Real`] and instantiated for `f32` and `f64`. The combinatorial structures
//! (treaps, block stores) are integer-valued and do not depend on it.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, NumCast};

pub trait Real: Float + FloatConst + Sum + Debug + Display + Default + Send + Sync + 'static {
    fn from_f64(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("f64 converts to every Real")
    }

    fn from_usize(v: usize) -> Self {
        <Self as NumCast>::from(v).expect("usize converts to every Real")
    }

    fn as_f64(self) -> f64 {
        <f64 as NumCast>::from(self).expect("every Real converts to f64")
    }

    /// Relative slack used when checking that masses sum to one.
    fn mass_tolerance() -> Self;
}

impl Real for f32 {
    fn mass_tolerance() -> Self {
        1e-5
    }
}

impl Real for f64 {
    fn mass_tolerance() -> Self {
        1e-9
    }
}

/// `floor(log_base(value))` for `value >= 1`, exact whenever `value` is an
/// integral power of `base`.
///
/// The float estimate is corrected against integer powers of the base, which
/// are exact in binary floating point for the bases used here (2, 4, B).
pub(crate) fn floor_log<T: Real>(value: T, base: T) -> i32 {
    debug_assert!(value >= T::one() && base > T::one());
    let mut t = (value.ln() / base.ln()).floor().as_f64() as i32;
    t = t.max(0);
    while t > 0 && base.powi(t) > value {
        t -= 1;
    }
    while base.powi(t + 1) <= value {
        t += 1;
    }
    t
}

/// `log_base(1 / w)` with an integral fast path when `1 / w` is an exact
/// power of `base`.
pub(crate) fn log_inverse<T: Real>(w: T, base: T) -> T {
    let inv = w.recip();
    let approx = inv.ln() / base.ln();
    let k = approx.round();
    if k.abs() < T::from_f64(1000.0) {
        let ki = k.as_f64() as i32;
        if base.powi(ki) == inv {
            return k;
        }
    }
    approx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_log_on_exact_powers() {
        assert_eq!(floor_log(4.0_f64, 2.0), 2);
        assert_eq!(floor_log(16.0_f64, 4.0), 2);
        assert_eq!(floor_log(15.999_f64, 4.0), 1);
        assert_eq!(floor_log(1.0_f64, 2.0), 0);
        assert_eq!(floor_log(32.0_f32, 2.0), 5);
    }

    #[test]
    fn log_inverse_is_integral_on_powers() {
        assert_eq!(log_inverse(1.0 / 65536.0_f64, 16.0), 4.0);
        assert_eq!(log_inverse(2f64.powi(-32), 2.0), 32.0);
        assert_eq!(log_inverse(2f32.powi(-32), 2.0), 32.0);
        let v = log_inverse(0.3_f64, 2.0);
        assert!((v - (1.0 / 0.3_f64).log2()).abs() < 1e-12);
    }
}
