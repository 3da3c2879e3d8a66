//! Sign / log-magnitude arithmetic.
//!
//! The weights handled by this crate reach magnitudes like `exp(1/t)` at
//! `t = 1e-6`, far outside `f64` range, while the *quantities of interest*
//! (integrals, slacks, ratios) are perfectly tame. Every internal value that
//! can blow up or underflow is therefore carried as `x = sign * exp(ln_abs)`
//! and only converted to a plain `f64` at the API boundary.

/// A real number stored as `sign * exp(ln_abs)`.
///
/// Invariants: `sign ∈ {-1, 0, +1}`; `sign == 0` iff `ln_abs == -INFINITY`;
/// `ln_abs` is never `NaN` or `+INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogNum {
    sign: i8,
    ln_abs: f64,
}

pub const LN_10: f64 = std::f64::consts::LN_10;

impl LogNum {
    pub const ZERO: LogNum = LogNum {
        sign: 0,
        ln_abs: f64::NEG_INFINITY,
    };
    pub const ONE: LogNum = LogNum {
        sign: 1,
        ln_abs: 0.0,
    };

    /// Positive number from its natural log. `-INFINITY` gives zero.
    pub fn from_ln(ln: f64) -> LogNum {
        assert!(!ln.is_nan() && ln != f64::INFINITY, "bad log-magnitude {ln}");
        if ln == f64::NEG_INFINITY {
            LogNum::ZERO
        } else {
            LogNum { sign: 1, ln_abs: ln }
        }
    }

    /// Signed number from sign and natural log of magnitude.
    pub fn new(sign: i8, ln_abs: f64) -> LogNum {
        if sign == 0 {
            return LogNum::ZERO;
        }
        let mut n = LogNum::from_ln(ln_abs);
        n.sign = sign.signum();
        n
    }

    pub fn from_f64(x: f64) -> LogNum {
        assert!(x.is_finite(), "cannot log-encode {x}");
        if x == 0.0 {
            LogNum::ZERO
        } else {
            LogNum {
                sign: if x > 0.0 { 1 } else { -1 },
                ln_abs: x.abs().ln(),
            }
        }
    }

    /// Back to `f64`; overflows to `±INFINITY`, underflows to `±0.0`.
    pub fn to_f64(self) -> f64 {
        self.sign as f64 * self.ln_abs.exp()
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn is_positive(self) -> bool {
        self.sign > 0
    }

    pub fn is_negative(self) -> bool {
        self.sign < 0
    }

    pub fn signum(self) -> i8 {
        self.sign
    }

    /// Natural log of the magnitude (`-INFINITY` for zero).
    pub fn ln_abs(self) -> f64 {
        self.ln_abs
    }

    /// Natural log of a strictly positive value.
    pub fn ln(self) -> f64 {
        assert!(self.sign > 0, "ln of non-positive LogNum");
        self.ln_abs
    }

    pub fn abs(self) -> LogNum {
        LogNum {
            sign: self.sign.abs(),
            ln_abs: self.ln_abs,
        }
    }

    pub fn neg(self) -> LogNum {
        LogNum {
            sign: -self.sign,
            ln_abs: self.ln_abs,
        }
    }

    pub fn mul(self, rhs: LogNum) -> LogNum {
        if self.sign == 0 || rhs.sign == 0 {
            return LogNum::ZERO;
        }
        LogNum {
            sign: self.sign * rhs.sign,
            ln_abs: self.ln_abs + rhs.ln_abs,
        }
    }

    pub fn div(self, rhs: LogNum) -> LogNum {
        assert!(rhs.sign != 0, "LogNum division by zero");
        if self.sign == 0 {
            return LogNum::ZERO;
        }
        LogNum {
            sign: self.sign * rhs.sign,
            ln_abs: self.ln_abs - rhs.ln_abs,
        }
    }

    pub fn recip(self) -> LogNum {
        LogNum::ONE.div(self)
    }

    /// `|x|^e` (power of the magnitude, sign dropped).
    pub fn abs_pow(self, e: f64) -> LogNum {
        if self.sign == 0 {
            assert!(e > 0.0, "0^e with e <= 0");
            return LogNum::ZERO;
        }
        LogNum {
            sign: 1,
            ln_abs: e * self.ln_abs,
        }
    }

    /// Scale by a plain finite factor.
    pub fn scale(self, c: f64) -> LogNum {
        self.mul(LogNum::from_f64(c))
    }

    pub fn add(self, rhs: LogNum) -> LogNum {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (hi, lo) = if self.ln_abs >= rhs.ln_abs {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let d = lo.ln_abs - hi.ln_abs; // <= 0
        if hi.sign == lo.sign {
            LogNum {
                sign: hi.sign,
                ln_abs: hi.ln_abs + d.exp().ln_1p(),
            }
        } else {
            // Opposite signs: |hi| - |lo| = |hi| * (1 - e^d).
            let m = -d.exp_m1(); // in [0, 1]
            if m == 0.0 {
                LogNum::ZERO
            } else {
                LogNum {
                    sign: hi.sign,
                    ln_abs: hi.ln_abs + m.ln(),
                }
            }
        }
    }

    pub fn sub(self, rhs: LogNum) -> LogNum {
        self.add(rhs.neg())
    }

    /// Total order consistent with the represented real values.
    pub fn cmp_value(self, rhs: LogNum) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match self.sign.cmp(&rhs.sign) {
            Equal => {}
            o => return o,
        }
        match self.sign {
            0 => Equal,
            1 => self.ln_abs.partial_cmp(&rhs.ln_abs).unwrap(),
            _ => rhs.ln_abs.partial_cmp(&self.ln_abs).unwrap(),
        }
    }

    pub fn max_value(self, rhs: LogNum) -> LogNum {
        if self.cmp_value(rhs) == std::cmp::Ordering::Less {
            rhs
        } else {
            self
        }
    }

    /// Linear interpolation `(1-th)*self + th*rhs` for `th` in `[0, 1]`.
    pub fn lerp(self, rhs: LogNum, th: f64) -> LogNum {
        self.scale(1.0 - th).add(rhs.scale(th))
    }

    /// Signed relative difference `(self - rhs) / max(|self|, |rhs|)`;
    /// `0` when both are zero. Stable even for astronomically large values.
    pub fn rel_diff(self, rhs: LogNum) -> f64 {
        if self.sign == 0 && rhs.sign == 0 {
            return 0.0;
        }
        let scale = self.abs().max_value(rhs.abs());
        let d = self.sub(rhs);
        if d.sign == 0 {
            return 0.0;
        }
        d.sign as f64 * (d.ln_abs - scale.ln_abs).exp()
    }

    /// Decimal scientific string (used for CSV output of values that may
    /// exceed f64 range). Plain `Display` of `to_f64()` is used when finite.
    pub fn sci_string(self) -> String {
        if self.sign == 0 {
            return "0".into();
        }
        let v = self.to_f64();
        if v.is_finite() && v != 0.0 {
            return format!("{v}");
        }
        let mut e10 = (self.ln_abs / LN_10).floor();
        let mut mant = (self.ln_abs - e10 * LN_10).exp();
        // keep the printed mantissa in [1, 10) after {:.6} rounding
        if mant >= 10.0 - 5e-7 {
            mant /= 10.0;
            e10 += 1.0;
        }
        let s = if self.sign < 0 { "-" } else { "" };
        format!("{s}{mant:.6}e{e10:+.0}")
    }
}

/// Streaming sum of positive terms given by their natural logs.
///
/// Keeps a running maximum and a scaled accumulator, so sums spanning
/// hundreds of orders of magnitude lose nothing to underflow.
#[derive(Clone, Debug)]
pub struct LogSum {
    max_ln: f64,
    scaled: f64,
}

impl LogSum {
    pub fn new() -> LogSum {
        LogSum {
            max_ln: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    pub fn add_ln(&mut self, ln: f64) {
        debug_assert!(!ln.is_nan() && ln != f64::INFINITY);
        if ln == f64::NEG_INFINITY {
            return;
        }
        if ln <= self.max_ln {
            self.scaled += (ln - self.max_ln).exp();
        } else {
            self.scaled = self.scaled * (self.max_ln - ln).exp() + 1.0;
            self.max_ln = ln;
        }
    }

    /// Natural log of the accumulated sum (`-INFINITY` if empty).
    pub fn ln(&self) -> f64 {
        if self.scaled == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max_ln + self.scaled.ln()
        }
    }

    pub fn value(&self) -> LogNum {
        LogNum::from_ln(self.ln())
    }
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol * b.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn roundtrip_and_arithmetic() {
        // round-tripping through ln/exp costs ~|ln x| * eps in relative error
        for &x in &[3.5, -2.25e-8, 0.0] {
            close(LogNum::from_f64(x).to_f64(), x, 1e-15);
        }
        for &x in &[1e300, -1e-300] {
            close(LogNum::from_f64(x).to_f64(), x, 1e-13);
        }
        let a = LogNum::from_f64(3.0);
        let b = LogNum::from_f64(-4.0);
        close(a.mul(b).to_f64(), -12.0, 1e-15);
        close(a.add(b).to_f64(), -1.0, 1e-14);
        close(a.sub(b).to_f64(), 7.0, 1e-14);
        close(a.div(b).to_f64(), -0.75, 1e-15);
        close(b.abs_pow(2.0).to_f64(), 16.0, 1e-14);
    }

    #[test]
    fn huge_values_stay_exact_in_log_space() {
        // x = e^{1e6}: products and ratios must be exact in ln terms.
        let x = LogNum::from_ln(1.0e6);
        let y = LogNum::from_ln(-1.0e6 + 3.0);
        let prod = x.mul(y);
        close(prod.ln(), 3.0, 1e-12);
        // LSE with dominated term: e^{1e6} + e^{10} == e^{1e6} to f64 precision.
        let s = x.add(LogNum::from_ln(10.0));
        assert_eq!(s.ln(), 1.0e6);
    }

    #[test]
    fn cancellation_of_close_values() {
        let a = LogNum::from_f64(1.0 + 1e-9);
        let b = LogNum::ONE;
        close(a.sub(b).to_f64(), 1e-9, 1e-6);
        assert!(b.sub(b).is_zero());
    }

    #[test]
    fn rel_diff_sign_and_scale() {
        let a = LogNum::from_ln(500.0);
        let b = LogNum::from_ln(500.0_f64 + (1e-7_f64).ln_1p());
        let d = a.rel_diff(b);
        assert!(d < 0.0 && d.abs() < 2e-7 && d.abs() > 5e-8, "{d}");
        assert_eq!(LogNum::ZERO.rel_diff(LogNum::ZERO), 0.0);
    }

    #[test]
    fn log_sum_spanning_many_decades() {
        let mut s = LogSum::new();
        // sum of e^k for k = 0..=100, dominated by the last term
        for k in 0..=100 {
            s.add_ln(k as f64);
        }
        // closed form: e^101 - 1) / (e - 1), ln = 101 + ln(1/(e-1)) approx
        let expect = 101.0 + (1.0 / (std::f64::consts::E - 1.0)).ln();
        close(s.ln(), expect, 1e-10);
    }

    #[test]
    fn lerp_endpoints() {
        let a = LogNum::from_f64(2.0);
        let b = LogNum::from_f64(10.0);
        close(a.lerp(b, 0.0).to_f64(), 2.0, 1e-15);
        close(a.lerp(b, 1.0).to_f64(), 10.0, 1e-15);
        close(a.lerp(b, 0.25).to_f64(), 4.0, 1e-14);
    }

    #[test]
    fn sci_string_beyond_f64() {
        let x = LogNum::from_ln(1000.0 * LN_10); // 1e1000
        let s = x.sci_string();
        assert!(s.ends_with("e+1000"), "{s}");
        assert!(s.starts_with("1.0000"), "{s}");
        assert_eq!(LogNum::from_f64(0.25).sci_string(), "0.25");
    }
}
