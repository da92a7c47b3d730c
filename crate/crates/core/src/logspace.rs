//! Log-space arithmetic.
//!
//! Negative infinity is the log of zero and is absorbing under sums: a
//! `log_sum_exp` over only `NEG_INFINITY` terms stays `NEG_INFINITY`.

/// Log of zero.
pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == LOG_ZERO {
        return b;
    }
    if b == LOG_ZERO {
        return a;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// Stable `ln(sum(exp(x)))`, reduced in iteration order.
pub fn log_sum_exp<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let iter = values.into_iter();
    let max = iter.clone().fold(LOG_ZERO, f64::max);
    if max == LOG_ZERO {
        return LOG_ZERO;
    }
    if max.is_infinite() {
        return max;
    }
    let sum: f64 = iter.map(|v| (v - max).exp()).sum();
    max + sum.ln()
}
