//! Small numerical helpers shared by the analysis modules: compensated
//! summation, signed log-space values and exponent-scaled accumulators.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Div, Mul, Neg};

use serde::{Deserialize, Serialize};

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator of floats.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<Neumaier>().total()
}

/// A real number stored as `sign * exp(ln_abs)`.
///
/// Zero is represented with `ln_abs = -inf` and sign 0. Products and
/// quotients never leave log space; sums use a shifted log-sum-exp.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    ln_abs: f64,
    sign: i8,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        ln_abs: f64::NEG_INFINITY,
        sign: 0,
    };
    pub const ONE: LogValue = LogValue {
        ln_abs: 0.0,
        sign: 1,
    };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogValue {
                ln_abs: x.abs().ln(),
                sign: if x > 0.0 { 1 } else { -1 },
            }
        }
    }

    /// Builds `sign * exp(ln_abs)`; a `-inf` log or zero sign gives zero.
    pub fn from_ln(ln_abs: f64, sign: i8) -> Self {
        if sign == 0 || ln_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogValue {
                ln_abs,
                sign: sign.signum(),
            }
        }
    }

    pub fn ln_abs(&self) -> f64 {
        self.ln_abs
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn is_positive(&self) -> bool {
        self.sign > 0
    }

    /// Converts back to `f64`; may underflow to zero or overflow to infinity.
    pub fn to_f64(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.ln_abs.exp(),
        }
    }

    pub fn abs(&self) -> Self {
        LogValue {
            ln_abs: self.ln_abs,
            sign: self.sign.abs(),
        }
    }

    pub fn powi(&self, k: i32) -> Self {
        if k == 0 {
            return Self::ONE;
        }
        if self.is_zero() {
            return Self::ZERO;
        }
        let sign = if self.sign < 0 && k % 2 != 0 { -1 } else { 1 };
        LogValue {
            ln_abs: self.ln_abs * f64::from(k),
            sign,
        }
    }

    /// Signed addition in log space.
    pub fn add(&self, other: &LogValue) -> LogValue {
        if self.is_zero() {
            return *other;
        }
        if other.is_zero() {
            return *self;
        }
        let (hi, lo) = if self.ln_abs >= other.ln_abs {
            (self, other)
        } else {
            (other, self)
        };
        let r = (lo.ln_abs - hi.ln_abs).exp();
        if hi.sign == lo.sign {
            LogValue {
                ln_abs: hi.ln_abs + r.ln_1p(),
                sign: hi.sign,
            }
        } else if r == 1.0 {
            Self::ZERO
        } else {
            LogValue {
                ln_abs: hi.ln_abs + (-r).ln_1p(),
                sign: hi.sign,
            }
        }
    }

    pub fn sub(&self, other: &LogValue) -> LogValue {
        self.add(&-*other)
    }

    /// Total order on the represented real numbers.
    pub fn cmp_value(&self, other: &LogValue) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Ordering::Equal,
                1 => self.ln_abs.total_cmp(&other.ln_abs),
                _ => other.ln_abs.total_cmp(&self.ln_abs),
            },
            o => o,
        }
    }
}

impl Mul for LogValue {
    type Output = LogValue;

    fn mul(self, rhs: LogValue) -> LogValue {
        if self.is_zero() || rhs.is_zero() {
            return LogValue::ZERO;
        }
        LogValue {
            ln_abs: self.ln_abs + rhs.ln_abs,
            sign: self.sign * rhs.sign,
        }
    }
}

impl Div for LogValue {
    type Output = LogValue;

    /// Division by zero yields a NaN magnitude; callers check denominators.
    fn div(self, rhs: LogValue) -> LogValue {
        if rhs.is_zero() {
            return LogValue {
                ln_abs: f64::NAN,
                sign: self.sign,
            };
        }
        if self.is_zero() {
            return LogValue::ZERO;
        }
        LogValue {
            ln_abs: self.ln_abs - rhs.ln_abs,
            sign: self.sign * rhs.sign,
        }
    }
}

impl Neg for LogValue {
    type Output = LogValue;

    fn neg(self) -> LogValue {
        LogValue {
            ln_abs: self.ln_abs,
            sign: -self.sign,
        }
    }
}

impl fmt::Debug for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "LogValue(0)"),
            s => write!(
                f,
                "LogValue({}exp({}))",
                if s < 0 { "-" } else { "" },
                self.ln_abs
            ),
        }
    }
}

/// Non-negative accumulator stored as `mantissa * 2^exponent`.
///
/// Used by the elementary-symmetric recurrence, where values can span far
/// more than the `f64` exponent range while every update is a sum of two
/// non-negative terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Scaled {
    mant: f64,
    exp: i64,
}

const RESCALE_HI: f64 = 1.0e150;
const RESCALE_LO: f64 = 1.0e-150;

impl Scaled {
    pub(crate) const ZERO: Scaled = Scaled { mant: 0.0, exp: 0 };
    pub(crate) const ONE: Scaled = Scaled { mant: 1.0, exp: 0 };

    pub(crate) fn is_zero(&self) -> bool {
        self.mant == 0.0
    }

    fn normalized(mut self) -> Self {
        if self.mant == 0.0 {
            return Scaled::ZERO;
        }
        if !(RESCALE_LO..=RESCALE_HI).contains(&self.mant) {
            let e = self.mant.log2().floor() as i64;
            self.mant = ldexp(self.mant, -e);
            self.exp += e;
        }
        self
    }

    /// `self + factor * other` for non-negative operands.
    pub(crate) fn add_scaled(self, factor: f64, other: Scaled) -> Scaled {
        if other.is_zero() || factor == 0.0 {
            return self;
        }
        let term = Scaled {
            mant: factor * other.mant,
            exp: other.exp,
        }
        .normalized();
        if self.is_zero() {
            return term;
        }
        let (big, small) = if self.exp >= term.exp {
            (self, term)
        } else {
            (term, self)
        };
        let shift = small.exp - big.exp;
        Scaled {
            mant: big.mant + ldexp(small.mant, shift),
            exp: big.exp,
        }
        .normalized()
    }

    pub(crate) fn to_log(self) -> LogValue {
        if self.is_zero() {
            LogValue::ZERO
        } else {
            LogValue::from_ln(
                self.mant.ln() + (self.exp as f64) * std::f64::consts::LN_2,
                1,
            )
        }
    }
}

/// `x * 2^e`, saturating to zero or infinity outside the representable range.
pub(crate) fn ldexp(x: f64, e: i64) -> f64 {
    if e == 0 {
        return x;
    }
    let mut x = x;
    let mut e = e;
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

/// `ln(n!)` by direct summation.
pub fn ln_factorial(n: u64) -> f64 {
    compensated_sum((2..=n).map(|k| (k as f64).ln()))
}

/// `ln C(n, k)`, `-inf` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    compensated_sum((0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()))
}

/// Exact `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc = C(n, i), and acc * (n - i) is divisible by i + 1.
        let num = u128::from(n - i);
        let den = u128::from(i + 1);
        let g = gcd(acc, den);
        match (acc / g).checked_mul(num / (den / g)) {
            Some(v) => acc = v,
            None => return u128::MAX,
        }
    }
    acc
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Formats a float with the shortest representation that round-trips.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_small_terms() {
        let mut acc = Neumaier::new();
        acc.add(1.0);
        for _ in 0..10 {
            acc.add(1e-17);
        }
        acc.add(-1.0);
        assert!((acc.total() - 1e-16).abs() < 1e-30);
    }

    #[test]
    fn log_value_arithmetic() {
        let a = LogValue::from_f64(3.0);
        let b = LogValue::from_f64(-5.0);
        assert!((a.add(&b).to_f64() + 2.0).abs() < 1e-14);
        assert!(((a * b).to_f64() + 15.0).abs() < 1e-13);
        assert!(((b / a).to_f64() + 5.0 / 3.0).abs() < 1e-14);
        assert!(a.sub(&a).is_zero());
        assert_eq!(b.powi(2).sign(), 1);
        assert_eq!(b.powi(3).sign(), -1);
        assert_eq!(a.cmp_value(&b), Ordering::Greater);
        assert_eq!(LogValue::ZERO.cmp_value(&b), Ordering::Greater);
    }

    #[test]
    fn scaled_accumulator_spans_exponent_range() {
        let mut acc = Scaled::ONE;
        for _ in 0..40 {
            acc = Scaled::ZERO.add_scaled(1e-20, acc);
        }
        assert!((acc.to_log().ln_abs() - (-800.0 * 10f64.ln())).abs() < 1e-9);
        let sum = acc.add_scaled(1.0, acc);
        assert!((sum.to_log().ln_abs() - acc.to_log().ln_abs() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_u128(10, 3), 120);
        assert_eq!(binomial_u128(4, 5), 0);
        assert_eq!(binomial_u128(2000, 5), 265_335_665_000_400);
        assert!((ln_binomial(45, 2) - 990f64.ln()).abs() < 1e-12);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn float_formatting_round_trips() {
        for x in [0.1, 7.06e-10, 1.0 / 3.0, 123456.0, -2.5e-300, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(7.06e-10), "7.06e-10");
    }
}
