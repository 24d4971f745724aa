use std::cmp::Ordering;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

/// A real number stored as `sign * exp(log_abs)`.
///
/// `sign == 0` encodes exactly zero; otherwise `log_abs` is finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogMagnitude {
    pub log_abs: f64,
    pub sign: i8,
}

impl LogMagnitude {
    pub const ZERO: LogMagnitude = LogMagnitude {
        log_abs: f64::NEG_INFINITY,
        sign: 0,
    };

    /// Positive number `exp(log_abs)`. A `-inf` log gives zero.
    pub fn from_ln(log_abs: f64) -> Self {
        assert!(!log_abs.is_nan(), "NaN log magnitude");
        if log_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            assert!(log_abs.is_finite(), "infinite log magnitude");
            Self { log_abs, sign: 1 }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite value {x}");
        match x.partial_cmp(&0.0) {
            Some(Ordering::Greater) => Self {
                log_abs: x.ln(),
                sign: 1,
            },
            Some(Ordering::Less) => Self {
                log_abs: (-x).ln(),
                sign: -1,
            },
            _ => Self::ZERO,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Natural log of the absolute value (`-inf` for zero).
    pub fn ln_abs(&self) -> f64 {
        if self.sign == 0 {
            f64::NEG_INFINITY
        } else {
            self.log_abs
        }
    }

    /// Converts back to `f64`; may overflow to infinity or underflow to zero.
    pub fn to_f64(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.log_abs.exp(),
        }
    }

    /// Sum computed in log space.
    pub fn add(self, other: Self) -> Self {
        if self.sign == 0 {
            return other;
        }
        if other.sign == 0 {
            return self;
        }
        let (big, small) = if self.log_abs >= other.log_abs {
            (self, other)
        } else {
            (other, self)
        };
        let ratio = (small.log_abs - big.log_abs).exp();
        if big.sign == small.sign {
            Self {
                log_abs: big.log_abs + ratio.ln_1p(),
                sign: big.sign,
            }
        } else if ratio == 1.0 {
            Self::ZERO
        } else {
            Self {
                log_abs: big.log_abs + (-ratio).ln_1p(),
                sign: big.sign,
            }
        }
    }

    /// Log-sum-exp of nonnegative magnitudes in iteration order, with
    /// compensated accumulation of the scaled terms.
    pub fn sum<I: IntoIterator<Item = LogMagnitude>>(terms: I) -> Self {
        let terms: Vec<LogMagnitude> = terms.into_iter().collect();
        let peak = terms
            .iter()
            .filter(|t| t.sign != 0)
            .map(|t| t.log_abs)
            .fold(f64::NEG_INFINITY, f64::max);
        if peak == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let scaled = super::compensated_sum(
            terms
                .iter()
                .map(|t| f64::from(t.sign) * (t.ln_abs() - peak).exp()),
        );
        let mut out = Self::from_f64(scaled);
        if out.sign != 0 {
            out.log_abs += peak;
        }
        out
    }
}

impl Mul for LogMagnitude {
    type Output = LogMagnitude;

    fn mul(self, rhs: Self) -> Self {
        if self.sign == 0 || rhs.sign == 0 {
            Self::ZERO
        } else {
            Self {
                log_abs: self.log_abs + rhs.log_abs,
                sign: self.sign * rhs.sign,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_iff_sign_zero() {
        assert!(LogMagnitude::from_f64(0.0).is_zero());
        assert_eq!(LogMagnitude::from_ln(f64::NEG_INFINITY), LogMagnitude::ZERO);
        assert_eq!(LogMagnitude::from_f64(-2.0).sign, -1);
    }

    #[test]
    fn huge_products_stay_finite() {
        let big = LogMagnitude::from_ln(800.0);
        let tiny = LogMagnitude::from_ln(-790.0);
        assert!(((big * tiny).to_f64() - 10f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn signed_addition() {
        let a = LogMagnitude::from_f64(3.0);
        let b = LogMagnitude::from_f64(-1.0);
        assert!((a.add(b).to_f64() - 2.0).abs() < 1e-15);
        assert!(a.add(LogMagnitude::from_f64(-3.0)).is_zero());
        let s = LogMagnitude::sum([1000.0, 1000.0 + 2f64.ln()].map(LogMagnitude::from_ln));
        assert!((s.ln_abs() - (1000.0 + 3f64.ln())).abs() < 1e-12);
    }
}
